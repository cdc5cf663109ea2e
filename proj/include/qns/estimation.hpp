#pragma once

// Inverse problems: Ohmic thermometry from (T2, Phi_inf), asymptotic-window
// extraction from traces, T1-relaxometry relations, equilibrium diagnosis
// via T_eff[w], and comb-filter reconstruction of the spectral function.

#include "bath.hpp"
#include "control.hpp"
#include "trace.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace qns {

struct WindowOptions {
    double zeta_slope_tol = 0.05;  // zeta window: local log-slope within 1 +/- tol
    double phi_slope_tol = 0.02;   // phi window:  local log-slope within 0 +/- tol
    std::size_t min_points = 4;
};

// No qualifying asymptotic window in the trace.
struct WindowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FitWindow {
    std::size_t lo = 0, hi = 0;  // inclusive record indices
};

namespace detail {

// Last decade [t_hi/10, t_hi] whose interior local log-slopes all fall
// within target +/- tol.
inline FitWindow detect_window(const std::vector<double>& t, const std::vector<double>& y,
                               double target, double tol, std::size_t min_pts) {
    const std::size_t n = t.size();
    if (n < min_pts + 2) throw WindowError("asymptotic regime not reached (trace too short)");
    std::vector<double> slope(n, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (y[i - 1] == 0.0 || y[i + 1] == 0.0) continue;
        slope[i] = (std::log(std::abs(y[i + 1])) - std::log(std::abs(y[i - 1]))) /
                   (std::log(t[i + 1]) - std::log(t[i - 1]));
    }
    for (std::size_t hi = n - 1; hi + 1 >= min_pts + 1; --hi) {
        const double lo_t = t[hi] / 10.0;
        std::size_t lo = hi;
        while (lo > 0 && t[lo - 1] >= lo_t) --lo;
        if (hi - lo + 1 < min_pts) continue;
        bool ok = true;
        for (std::size_t i = std::max<std::size_t>(lo, 1); i <= std::min(hi, n - 2); ++i)
            if (!(std::abs(slope[i] - target) <= tol)) {
                ok = false;
                break;
            }
        if (ok) return {lo, hi};
        if (hi == 0) break;
    }
    throw WindowError("asymptotic regime not reached");
}

} // namespace detail

struct T2Fit {
    double T2 = 0.0;
    FitWindow window;
    double rms_residual = 0.0;
};

// T2 such that zeta ~ t_f/T2 over the auto-detected window (least-squares
// line with intercept, so slow additive offsets do not bias the slope).
inline T2Fit extract_t2_fit(const CoherenceTrace& trace, const WindowOptions& opt = {}) {
    std::vector<double> t, z;
    for (const auto& r : trace.records) {
        t.push_back(r.t_f);
        z.push_back(r.zeta);
    }
    const FitWindow w = detail::detect_window(t, z, 1.0, opt.zeta_slope_tol, opt.min_points);
    double st = 0, sz = 0, stt = 0, stz = 0;
    const double n = (double)(w.hi - w.lo + 1);
    for (std::size_t i = w.lo; i <= w.hi; ++i) {
        st += t[i];
        sz += z[i];
        stt += t[i] * t[i];
        stz += t[i] * z[i];
    }
    const double slope = (n * stz - st * sz) / (n * stt - st * st);
    if (!(slope > 0.0)) throw WindowError("extract_t2: non-positive dephasing slope");
    const double intercept = (sz - slope * st) / n;
    double rss = 0.0;
    for (std::size_t i = w.lo; i <= w.hi; ++i) {
        const double d = z[i] - slope * t[i] - intercept;
        rss += d * d;
    }
    return {1.0 / slope, w, std::sqrt(rss / n)};
}

inline double extract_t2(const CoherenceTrace& trace, const WindowOptions& opt = {}) {
    return extract_t2_fit(trace, opt).T2;
}

struct PlateauFit {
    double value = 0.0;
    FitWindow window;
    double rms_residual = 0.0;
};

// Windowed mean of phi_q over the detected flat region.
inline PlateauFit extract_plateau_fit(const CoherenceTrace& trace, const WindowOptions& opt = {}) {
    std::vector<double> t, p;
    for (const auto& r : trace.records) {
        t.push_back(r.t_f);
        p.push_back(r.phi_q);
    }
    const FitWindow w = detail::detect_window(t, p, 0.0, opt.phi_slope_tol, opt.min_points);
    double mean = 0.0;
    for (std::size_t i = w.lo; i <= w.hi; ++i) mean += p[i];
    mean /= (double)(w.hi - w.lo + 1);
    double rss = 0.0;
    for (std::size_t i = w.lo; i <= w.hi; ++i) rss += (p[i] - mean) * (p[i] - mean);
    return {mean, w, std::sqrt(rss / (double)(w.hi - w.lo + 1))};
}

inline double extract_plateau(const CoherenceTrace& trace, const WindowOptions& opt = {}) {
    return extract_plateau_fit(trace, opt).value;
}

// kT = 1/(2 T2 Phi_q(inf)); no fitting beyond the two inputs.
inline double ohmic_thermometry(double T2, double phi_inf) {
    if (!(T2 > 0.0)) throw std::invalid_argument("ohmic_thermometry: T2 must be > 0");
    if (!(phi_inf > 0.0)) throw std::invalid_argument("ohmic_thermometry: phi_inf must be > 0");
    return 1.0 / (2.0 * T2 * phi_inf);
}

struct ThermometryResult {
    double kT = 0.0;
    double T2 = 0.0;
    double phi_inf = 0.0;
    FitWindow zeta_window, phi_window;
    double zeta_rms = 0.0, phi_rms = 0.0;
};

inline ThermometryResult thermometry_from_trace(const CoherenceTrace& trace,
                                                const WindowOptions& opt = {}) {
    const T2Fit t2 = extract_t2_fit(trace, opt);
    const PlateauFit pl = extract_plateau_fit(trace, opt);
    ThermometryResult r;
    r.T2 = t2.T2;
    r.phi_inf = pl.value;
    r.kT = ohmic_thermometry(t2.T2, pl.value);
    r.zeta_window = t2.window;
    r.phi_window = pl.window;
    r.zeta_rms = t2.rms_residual;
    r.phi_rms = pl.rms_residual;
    return r;
}

struct T1Result {
    double gamma_tot = 0.0;   // qubit population decay rate, 2 S[Omega]
    double sigma_z_ss = 0.0;  // steady-state polarization, Im G^R / S
};

// Transverse-coupling relaxometry relations for a thermal bath.
template <class Model>
T1Result t1_relaxometry(const Model& model, double kT, double Omega) {
    if (!(Omega > 0.0)) throw std::invalid_argument("t1_relaxometry: Omega must be > 0");
    const double J = model(Omega);
    const double S = M_PI * J * coth_guarded(Omega / (2.0 * kT));
    T1Result r;
    r.gamma_tot = 2.0 * S;
    r.sigma_z_ss = (J > 0.0) ? (-M_PI * J) / S : -std::tanh(Omega / (2.0 * kT));
    return r;
}

// Comb weights from the base-template transforms,
//   A_l = -(w0^2/4) Im(F0*[l w0] eta0[l w0]);
// for the standard NV plan this reproduces (4/l^2) sin(l pi/2).
inline std::vector<double> comb_weights(const PeriodicNvPlan& plan,
                                        const std::vector<int>& harmonics) {
    validate_symmetry(plan);  // throws when the reconstruction conditions fail
    const double w0 = plan.omega0();
    std::vector<double> out;
    out.reserve(harmonics.size());
    for (int l : harmonics) {
        const double w = l * w0;
        const cplx fe = std::conj(plan.base_filter_freq(w)) * plan.base_quench_freq(w);
        out.push_back(-(w0 * w0 / 4.0) * fe.imag());
    }
    return out;
}

struct ReconstructionPlan {
    PeriodicNvPlan plan;
    std::vector<int> harmonics;     // odd by default
    std::vector<double> weights;    // A_l per harmonic
    std::vector<double> target_freqs;

    static ReconstructionPlan make(PeriodicNvPlan p, std::vector<int> harmonics = {1, 3, 5}) {
        ReconstructionPlan rp;
        rp.weights = comb_weights(p, harmonics);
        rp.plan = std::move(p);
        rp.harmonics = std::move(harmonics);
        for (int l : rp.harmonics) rp.target_freqs.push_back(l * rp.plan.omega0());
        return rp;
    }
};

struct ReconstructionOptions {
    double ridge_lambda = 0.0;   // Tikhonov weight (0: plain least squares)
    double support_cap = -1.0;   // drop teeth above this (default: max target)
    double match_tol = 1e-9;     // relative tolerance matching teeth to grid
    int max_harmonic = 99;
};

struct ReconstructionResult {
    std::vector<double> omega;
    std::vector<double> j_hat;
    std::vector<double> residual;         // per measurement, W x - phi
    std::vector<double> singular_values;  // conditioning diagnostics
    int rank = 0;
};

// Solve phi_k = sum_j W_kj J(w_j) over the union of the plans' target
// frequencies.  Row k gets a tooth term -(2 M_k / w0_k) A_l at every odd
// harmonic below the support cap that lands on the grid.  Least squares,
// optionally ridge-regularized; negative estimates are reported, not
// clamped.
inline ReconstructionResult reconstruct_spectral_function(
    const std::vector<std::pair<ReconstructionPlan, double>>& measurements,
    const ReconstructionOptions& opt = {}) {
    if (measurements.empty()) throw std::invalid_argument("reconstruct: no measurements");

    std::vector<double> grid;
    for (const auto& [rp, phi] : measurements)
        for (double f : rp.target_freqs) grid.push_back(f);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end(),
                           [&](double a, double b) { return std::abs(a - b) <= opt.match_tol * b; }),
               grid.end());
    const double cap = opt.support_cap > 0.0 ? opt.support_cap : grid.back() * (1.0 + 1e-12);
    grid.erase(std::remove_if(grid.begin(), grid.end(), [&](double f) { return f > cap; }),
               grid.end());
    if (grid.empty()) throw std::invalid_argument("reconstruct: no in-band target frequencies");

    const int rows = (int)measurements.size();
    const int cols = (int)grid.size();
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(rows, cols);
    Eigen::VectorXd phi(rows);
    for (int k = 0; k < rows; ++k) {
        const auto& rp = measurements[k].first;
        phi[k] = measurements[k].second;
        const double w0 = rp.plan.omega0();
        std::vector<int> ls;
        for (int l = 1; l <= opt.max_harmonic && l * w0 <= cap; l += 2) ls.push_back(l);
        const std::vector<double> As = comb_weights(rp.plan, ls);
        for (std::size_t i = 0; i < ls.size(); ++i) {
            const double f = ls[i] * w0;
            auto it = std::lower_bound(grid.begin(), grid.end(), f * (1.0 - opt.match_tol));
            if (it == grid.end() || std::abs(*it - f) > opt.match_tol * f) continue;
            W(k, (int)(it - grid.begin())) += -(2.0 * rp.plan.M / w0) * As[i];
        }
    }

    Eigen::VectorXd x;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(W, Eigen::ComputeThinU | Eigen::ComputeThinV);
    ReconstructionResult out;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        out.singular_values.push_back(svd.singularValues()[i]);
    const double smax = out.singular_values.empty() ? 0.0 : out.singular_values.front();
    out.rank = 0;
    for (double s : out.singular_values)
        if (s > 1e-12 * smax) ++out.rank;
    if (out.rank < cols && opt.ridge_lambda <= 0.0)
        throw std::runtime_error("reconstruct: insufficient comb coverage (rank " +
                                 std::to_string(out.rank) + " < " + std::to_string(cols) + ")");
    if (opt.ridge_lambda > 0.0) {
        Eigen::MatrixXd A = W.transpose() * W +
                            opt.ridge_lambda * Eigen::MatrixXd::Identity(cols, cols);
        x = A.ldlt().solve(W.transpose() * phi);
    } else {
        x = svd.solve(phi);
    }

    out.omega = grid;
    out.j_hat.assign(x.data(), x.data() + cols);
    Eigen::VectorXd res = W * x - phi;
    out.residual.assign(res.data(), res.data() + rows);
    return out;
}

struct EquilibriumDiagnosis {
    std::vector<double> omega;
    std::vector<double> t_eff;
    double variation = 0.0;  // max/min of T_eff over the scanned band
    bool equilibrium = false;
};

// Scan T_eff[w] = w / (2 arccoth(S/(pi J))) over a log grid; a flat profile
// (variation below 5%) diagnoses thermal equilibrium.
template <class Sfn, class Jfn>
EquilibriumDiagnosis diagnose_equilibrium(Sfn&& S, Jfn&& J, double w_lo, double w_hi,
                                          int n_points = 25, double flat_tol = 1.05) {
    if (!(w_hi > w_lo && w_lo > 0.0)) throw std::invalid_argument("diagnose_equilibrium: bad band");
    EquilibriumDiagnosis d;
    double tmin = std::numeric_limits<double>::infinity(), tmax = 0.0;
    for (int i = 0; i < n_points; ++i) {
        const double w = w_lo * std::pow(w_hi / w_lo, (double)i / (double)(n_points - 1));
        const double te = effective_temperature(S(w), J(w), w);
        d.omega.push_back(w);
        d.t_eff.push_back(te);
        tmin = std::min(tmin, te);
        tmax = std::max(tmax, te);
    }
    d.variation = tmax / tmin;
    d.equilibrium = d.variation < flat_tol;
    return d;
}

} // namespace qns
