#pragma once

// Exact finite-dimensional oracle: dense-matrix evolution of the coherence
// for arbitrary baths and switching schedules, the projector-based quench
// decomposition, and the squeezed-thermal boson example in truncated Fock
// space.  Segment propagators come from Hermitian eigendecompositions, so
// there is no integrator error to calibrate against.

#include "control.hpp"
#include "json_util.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <vector>

namespace qns {

using MatC = Eigen::MatrixXcd;
using VecD = Eigen::VectorXd;

struct FiniteBath {
    int dim = 0;
    std::map<int, MatC> levels;  // level label -> conditioned bath Hamiltonian
    MatC rho;

    static constexpr int up = +1;
    static constexpr int down = -1;

    void validate() const {
        if (dim <= 0) throw std::invalid_argument("FiniteBath: dim must be positive");
        for (const auto& [l, H] : levels) {
            if (H.rows() != dim || H.cols() != dim)
                throw std::invalid_argument("FiniteBath: level Hamiltonian dimension mismatch");
            if ((H - H.adjoint()).norm() > 1e-12 * std::max(1.0, H.norm()))
                throw std::invalid_argument("FiniteBath: level Hamiltonian not Hermitian");
        }
        if (rho.rows() != dim || rho.cols() != dim)
            throw std::invalid_argument("FiniteBath: rho dimension mismatch");
        if ((rho - rho.adjoint()).norm() > 1e-12)
            throw std::invalid_argument("FiniteBath: rho not Hermitian");
        if (std::abs(rho.trace().real() - 1.0) > 1e-10 || std::abs(rho.trace().imag()) > 1e-12)
            throw std::invalid_argument("FiniteBath: rho trace != 1");
        Eigen::SelfAdjointEigenSolver<MatC> es(rho, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-10)
            throw std::invalid_argument("FiniteBath: rho not positive semidefinite");
    }

    const MatC& level(int l) const {
        auto it = levels.find(l);
        if (it == levels.end())
            throw std::invalid_argument("FiniteBath: undefined level " + std::to_string(l));
        return it->second;
    }

    static FiniteBath two_level(MatC H_up, MatC H_down, MatC rho_i) {
        FiniteBath b;
        b.dim = (int)H_up.rows();
        b.levels[up] = std::move(H_up);
        b.levels[down] = std::move(H_down);
        b.rho = std::move(rho_i);
        b.validate();
        return b;
    }

    // NV triple; when check_magnetic is set the Table-I relation
    // H_{+1} - H_0 = H_0 - H_{-1} is enforced.
    static FiniteBath nv(MatC Hm1, MatC H0, MatC Hp1, MatC rho_i, bool check_magnetic = true) {
        FiniteBath b;
        b.dim = (int)H0.rows();
        if (check_magnetic && ((Hp1 - H0) - (H0 - Hm1)).norm() > 1e-10 * std::max(1.0, H0.norm()))
            throw std::invalid_argument("FiniteBath: magnetic-coupling relation violated");
        b.levels[-1] = std::move(Hm1);
        b.levels[0] = std::move(H0);
        b.levels[+1] = std::move(Hp1);
        b.rho = std::move(rho_i);
        b.validate();
        return b;
    }

    // {"dim": N, "H": {"<label>": [[[re,im],...],...], ...}, "rho": [...]}
    static FiniteBath from_json(const json& j);
};

namespace detail {

inline MatC parse_complex_matrix(const json& j, int dim, const std::string& where) {
    if (!j.is_array() || (int)j.size() != dim)
        throw ConfigError(where + ": expected " + std::to_string(dim) + " rows");
    MatC m(dim, dim);
    for (int r = 0; r < dim; ++r) {
        const auto& row = j[r];
        if (!row.is_array() || (int)row.size() != dim)
            throw ConfigError(where + ": bad row length");
        for (int c = 0; c < dim; ++c) {
            const auto& e = row[c];
            if (!e.is_array() || e.size() != 2) throw ConfigError(where + ": entry must be [re, im]");
            m(r, c) = cplx(e[0].get<double>(), e[1].get<double>());
        }
    }
    return m;
}

inline int parse_level_label(const std::string& s) {
    if (s == "up") return FiniteBath::up;
    if (s == "down") return FiniteBath::down;
    return std::stoi(s);
}

} // namespace detail

inline FiniteBath FiniteBath::from_json(const json& j) {
    require_keys(j, "finite bath", {"dim", "H", "rho"});
    FiniteBath b;
    b.dim = (int)get_num(j, "finite bath", "dim");
    if (!j.contains("H") || !j["H"].is_object()) throw ConfigError("finite bath: missing H map");
    for (auto it = j["H"].begin(); it != j["H"].end(); ++it)
        b.levels[detail::parse_level_label(it.key())] =
            detail::parse_complex_matrix(it.value(), b.dim, "H[" + it.key() + "]");
    if (!j.contains("rho")) throw ConfigError("finite bath: missing rho");
    b.rho = detail::parse_complex_matrix(j["rho"], b.dim, "rho");
    b.validate();
    return b;
}

// Subspace switch: from this instant the sensor qubit lives on
// (up_level, down_level); the occupant of the previous up level moves to the
// new up level, the other branch to the new down level.
struct SwitchEvent {
    double time;
    int up_level;
    int down_level;
};

struct ExactCoherence {
    cplx coherence;
    double zeta;
    double phi;
};

// <sigma_-(t_f)> = (1/2) Tr(U_up rho U_down^dagger), with the two branch
// propagators built as time-ordered products of segment exponentials.
// Pi-pulses swap the branches; switching events remap the branch levels.
// dc_field adds a c-number +/- b0/2 splitting between the branches (an
// external field coupled to the sensor's sigma_z/2, whatever the subspace).
inline ExactCoherence exact_coherence(const FiniteBath& bath, const PulseSequence& seq,
                                      std::vector<SwitchEvent> switching = {},
                                      double dc_field = 0.0) {
    const double tf = seq.total_time;
    const int N = bath.dim;

    int cur_up = FiniteBath::up, cur_down = FiniteBath::down;
    if (!switching.empty()) {
        if (std::abs(switching.front().time) > 1e-15 * tf)
            throw std::invalid_argument("exact_coherence: first switch must define t = 0 subspace");
        for (std::size_t i = 0; i + 1 < switching.size(); ++i)
            if (switching[i + 1].time <= switching[i].time ||
                switching[i + 1].time >= tf * (1.0 + 1e-12))
                throw std::invalid_argument("exact_coherence: switch times must increase within [0, t_f]");
        cur_up = switching.front().up_level;
        cur_down = switching.front().down_level;
    }

    struct Event {
        double t;
        bool is_pulse;
        std::size_t idx;
    };
    std::vector<Event> events;
    for (double a : seq.fractions) events.push_back({a * tf, true, 0});
    for (std::size_t i = 1; i < switching.size(); ++i)
        events.push_back({switching[i].time, false, i});
    std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });

    std::map<int, Eigen::SelfAdjointEigenSolver<MatC>> eig;
    auto propagate = [&](MatC& U, int lev, double dt, double shift) {
        if (dt <= 0.0) return;
        auto it = eig.find(lev);
        if (it == eig.end()) it = eig.emplace(lev, bath.level(lev)).first;
        const auto& es = it->second;
        MatC seg = es.eigenvectors() *
                   (es.eigenvalues().array() + shift)
                       .unaryExpr([&](double e) { return std::exp(cplx(0.0, -e * dt)); })
                       .matrix()
                       .asDiagonal() *
                   es.eigenvectors().adjoint();
        U = seg * U;
    };

    MatC U_a = MatC::Identity(N, N), U_b = MatC::Identity(N, N);
    bool a_is_up = true;
    double t_prev = 0.0;
    auto evolve_to = [&](double t) {
        const double dt = t - t_prev;
        const int lev_a = a_is_up ? cur_up : cur_down;
        const int lev_b = a_is_up ? cur_down : cur_up;
        propagate(U_a, lev_a, dt, (a_is_up ? +0.5 : -0.5) * dc_field);
        propagate(U_b, lev_b, dt, (a_is_up ? -0.5 : +0.5) * dc_field);
        t_prev = t;
    };
    for (const auto& ev : events) {
        evolve_to(ev.t);
        if (ev.is_pulse) {
            a_is_up = !a_is_up;
        } else {
            cur_up = switching[ev.idx].up_level;
            cur_down = switching[ev.idx].down_level;
        }
    }
    evolve_to(tf);

    const double drift = std::max((U_a.adjoint() * U_a - MatC::Identity(N, N)).norm(),
                                  (U_b.adjoint() * U_b - MatC::Identity(N, N)).norm());
    if (drift > 1e-8)
        throw std::runtime_error("exact_coherence: non-unitary propagator drift " +
                                 std::to_string(drift));

    const cplx coh = 0.5 * (U_a * bath.rho * U_b.adjoint()).trace();
    ExactCoherence out;
    out.coherence = coh;
    out.zeta = -std::log(2.0 * std::abs(coh));
    out.phi = -std::arg(2.0 * coh);
    return out;
}

struct QuenchDecomposition {
    MatC H_prime;
    MatC V_prime;
    std::vector<std::pair<double, int>> eigen_groups;  // (eigenvalue, multiplicity)
    bool grouping_ambiguous = false;                   // gaps within 10x of tol
};

// Split of H_avg = (H_up + H_down)/2 into the part commuting with rho
// (block-diagonal over rho's eigenspaces) and the block-off-diagonal rest.
inline QuenchDecomposition quench_decompose(const FiniteBath& bath, double degeneracy_tol = -1.0) {
    const MatC H_avg = 0.5 * (bath.level(FiniteBath::up) + bath.level(FiniteBath::down));
    Eigen::SelfAdjointEigenSolver<MatC> es(bath.rho);
    const VecD lam = es.eigenvalues().reverse();
    MatC U = es.eigenvectors().rowwise().reverse();
    const int N = bath.dim;
    if (degeneracy_tol < 0.0) degeneracy_tol = 1e-8 * std::abs(lam[0]);

    std::vector<std::vector<int>> groups;
    groups.push_back({0});
    for (int i = 1; i < N; ++i) {
        const bool near_zero = std::abs(lam[i]) <= degeneracy_tol &&
                               std::abs(lam[groups.back().front()]) <= degeneracy_tol;
        if (near_zero || std::abs(lam[i] - lam[groups.back().back()]) <= degeneracy_tol)
            groups.back().push_back(i);
        else
            groups.push_back({i});
    }

    QuenchDecomposition out;
    for (std::size_t g = 0; g + 1 < groups.size(); ++g) {
        const double gap = std::abs(lam[groups[g].back()] - lam[groups[g + 1].front()]);
        if (gap < 10.0 * degeneracy_tol) out.grouping_ambiguous = true;
    }

    const MatC He = U.adjoint() * H_avg * U;
    MatC Hp_e = MatC::Zero(N, N);
    for (const auto& g : groups) {
        double mean = 0.0;
        for (int i : g) mean += lam[i];
        out.eigen_groups.emplace_back(mean / (double)g.size(), (int)g.size());
        for (int i : g)
            for (int k : g) Hp_e(i, k) = He(i, k);
    }
    out.H_prime = U * Hp_e * U.adjoint();
    out.V_prime = H_avg - out.H_prime;
    return out;
}

// Truncated-Fock-space boson with a squeezed thermal initial state:
//   H_down = Omega b^dag b,  H_up = H_down + g (b^dag + b),
//   rho = S(r) e^{-H_down/kT} S^dag(r) / Z,  S(r) = exp(r(b^2 - b^dag^2)/2).
struct SqueezedThermalBath {
    FiniteBath bath;
    Eigen::MatrixXd b;  // annihilation operator in the truncated basis
};

inline SqueezedThermalBath build_squeezed_thermal(double Omega, double g, double r, double kT,
                                                  int n_max) {
    if (n_max < 4) throw std::invalid_argument("build_squeezed_thermal: n_max too small");
    if (!(Omega > 0.0) || !(kT > 0.0))
        throw std::invalid_argument("build_squeezed_thermal: Omega and kT must be positive");
    using MatR = Eigen::MatrixXd;
    MatR b = MatR::Zero(n_max, n_max);
    for (int n = 1; n < n_max; ++n) b(n - 1, n) = std::sqrt((double)n);
    const MatR bd = b.transpose();
    const MatR num = bd * b;

    // thermal occupation tail must be negligible before squeezing
    const double q = std::exp(-Omega / kT);
    if (std::pow(q, (double)n_max) > 1e-8)
        throw std::invalid_argument("build_squeezed_thermal: thermal tail mass above 1e-8, "
                                    "demand larger n_max");

    const MatR A = 0.5 * r * (b * b - bd * bd);
    Eigen::SelfAdjointEigenSolver<MatC> es(cplx(0.0, 1.0) * A);
    MatC S = es.eigenvectors() *
             es.eigenvalues()
                 .unaryExpr([](double e) { return std::exp(cplx(0.0, -e)); })
                 .matrix()
                 .asDiagonal() *
             es.eigenvectors().adjoint();

    VecD pth(n_max);
    for (int n = 0; n < n_max; ++n) pth[n] = std::exp(-Omega * (double)n / kT);
    pth /= pth.sum();
    MatC rho = S * pth.cast<cplx>().asDiagonal() * S.adjoint();
    rho = 0.5 * (rho + MatC(rho.adjoint()));

    // squeeze-rotated tail mass
    const double tail = rho(n_max - 1, n_max - 1).real() + rho(n_max - 2, n_max - 2).real();
    if (tail > 1e-8)
        throw std::invalid_argument("build_squeezed_thermal: squeezed tail mass above 1e-8, "
                                    "demand larger n_max");

    MatC H_down = (Omega * num).cast<cplx>();
    MatC H_up = H_down + (g * (b + bd)).cast<cplx>();
    SqueezedThermalBath out{FiniteBath::two_level(std::move(H_up), std::move(H_down), std::move(rho)),
                            std::move(b)};
    return out;
}

// Direct build of the squeezed-thermal quench operator (the closed form for
// the block-off-diagonal part of H_avg; the projector prescription fixes the
// identity component, which the bare closed form leaves out):
//   V' = -Omega sinh^2(2r) b^dag b - (Omega sinh(4r)/4)(b^dag^2 + b^2)
//        + (g/2)(b^dag + b) - (Omega/2) sinh^2(2r) I
inline MatC squeezed_vprime_reference(double Omega, double g, double r, int n_max) {
    using MatR = Eigen::MatrixXd;
    MatR b = MatR::Zero(n_max, n_max);
    for (int n = 1; n < n_max; ++n) b(n - 1, n) = std::sqrt((double)n);
    const MatR bd = b.transpose();
    const double s2 = std::sinh(2.0 * r), s4 = std::sinh(4.0 * r);
    MatR v = -Omega * s2 * s2 * (bd * b) - (Omega * s4 / 4.0) * (bd * bd + b * b) +
             (g / 2.0) * (b + bd) - (Omega / 2.0) * s2 * s2 * MatR::Identity(n_max, n_max);
    return v.cast<cplx>();
}

struct GaussianPrediction {
    double zeta;
    double phi;
};

// Leading-order (exactly Gaussian for linear boson baths) prediction from
// the discrete spectral lines of a finite bath, for the proportional quench
// V = beta_V * xi with a step quench profile:
//   zeta = (1/2) sum_mn p_m |xi_mn|^2 |F[E_m - E_n]|^2
//   Phi  = -beta_V sum_{m!=n} (p_m - p_n)|xi_mn|^2 (F0 - Re F[D])/D + <xi> F0
// rho must commute with H_i (it is diagonalized in H_i's eigenbasis).
inline GaussianPrediction gaussian_discrete_prediction(const MatC& H_i, const MatC& rho,
                                                       const MatC& xi, double beta_V,
                                                       const PulseSequence& seq) {
    Eigen::SelfAdjointEigenSolver<MatC> es(H_i);
    const VecD E = es.eigenvalues();
    const MatC U = es.eigenvectors();
    const MatC rho_e = U.adjoint() * rho * U;
    MatC xi_e = U.adjoint() * xi * U;
    const int N = (int)E.size();

    double mean = 0.0;
    for (int m = 0; m < N; ++m) mean += rho_e(m, m).real() * xi_e(m, m).real();
    for (int m = 0; m < N; ++m) xi_e(m, m) -= mean;

    const double F0 = seq.f0();
    double zeta = 0.0, phi = 0.0;
    for (int m = 0; m < N; ++m) {
        const double pm = rho_e(m, m).real();
        for (int n = 0; n < N; ++n) {
            const double a2 = std::norm(xi_e(m, n));
            if (a2 == 0.0) continue;
            const double D = E[n] - E[m];
            zeta += 0.5 * pm * a2 * std::norm(seq.filter_freq(E[m] - E[n]));
            if (std::abs(D) > 1e-12) {
                const double pn = rho_e(n, n).real();
                phi += -beta_V * (pm - pn) * a2 * (F0 - seq.filter_freq(D).real()) / D;
            }
        }
    }
    phi += mean * F0;
    return {zeta, phi};
}

} // namespace qns
