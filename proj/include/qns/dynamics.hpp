#pragma once

// Dephasing zeta(t_f), quench phase shift Phi_q(t_f), external phase, the
// composed coherence and the measurement-cost figure of merit.
//
//   zeta  = int dw/(4 pi) |F[w]|^2 S[w]
//   Phi_q = int dw/(2 pi) F*[w] eta[w] G^R_{xi V}[w],   G^R_{xi V} = beta_V G^R_{xi xi}
// For a step quench this reduces to
//   Phi_q = 2 beta_V int_0^inf dw (Re F[w] - F[0]) J(w) / w.
// A time-domain double integral over the retarded response serves as the
// brute-force oracle for both frequency-space routes.

#include "bath.hpp"
#include "control.hpp"
#include "interp.hpp"
#include "quadrature.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace qns {

struct DynamicsOptions {
    QuadOptions quad{};           // abs 1e-10 / rel 1e-8 by default
    double qps_im_tol = 1e-6;     // allowed imaginary residue of Phi_q, relative
};

namespace detail {

inline std::vector<double> merge_points(double lo, double hi, std::vector<double> interior) {
    std::sort(interior.begin(), interior.end());
    std::vector<double> pts{lo};
    for (double e : interior)
        if (e > lo && e < hi && e - pts.back() > 1e-15 * (std::abs(e) + 1.0)) pts.push_back(e);
    pts.push_back(hi);
    return pts;
}

// smallest gap between consecutive events of {0, a_1, ..., a_L, 1} * t_f:
// the slowest oscillation period appearing in |F|^2 or Re F
inline double min_gap_time(const PulseSequence& seq) {
    double g = 1.0, prev = 0.0;
    for (double a : seq.fractions) {
        g = std::min(g, a - prev);
        prev = a;
    }
    g = std::min(g, 1.0 - prev);
    return g * seq.total_time;
}

// Abel-bound-driven end of the oscillation-capped region: beyond X the
// remaining oscillatory integral is bounded by 2*amp(X)/tau_min for a
// monotone envelope; grow X until the bound is below eps.
template <class EnvFn>
double osc_region_end(EnvFn&& env_at, double x0, double tau_min, double eps) {
    double x = x0;
    while (x < 1e13) {
        const double bound = 2.0 * env_at(x) / tau_min;
        if (bound < eps) return x;
        x *= 1.3;
    }
    return x;
}

} // namespace detail

// zeta(t_f) >= 0; oscillation-aware quadrature with panels capped at
// pi/(4 t_f).  Beyond the oscillation region only the period-averaged part
// of |F|^2 (= (4L+2)/w^2 for the pulse-edge cross terms) survives; the
// oscillatory remainder is Abel-bounded and folded into the error estimate.
template <class Noise>
double dephasing(const PulseSequence& seq, const Noise& noise, const DynamicsOptions& opt = {}) {
    noise.check_integrable(seq.balanced());
    const double tf = seq.total_time;
    const std::size_t L = seq.pulse_count();
    const double bf = 2.0 * (double)(L + 1);  // |F[w]| <= bf/w
    const double mean_c2 = 4.0 * (double)L + 2.0;
    const double eps_tail = 1e-3 * std::max(opt.quad.abs_tol, 0.1 * opt.quad.rel_tol);
    const double tau = detail::min_gap_time(seq);

    double X_full = noise.domain_end(2.0, eps_tail * 2.0 * M_PI / (bf * bf));
    double x0 = 1.0;
    for (double e : noise.edges()) x0 = std::max(x0, 1.5 * e);
    const double X_osc = std::min(
        X_full, detail::osc_region_end(
                    [&](double x) { return bf * bf * noise(x) / (x * x * 2.0 * M_PI); }, x0, tau,
                    0.5 * eps_tail));

    QuadOptions q = opt.quad;
    q.panel_cap = M_PI / (4.0 * tf);
    auto f = [&](double w) {
        const double af = std::abs(seq.filter_freq(w));
        return af * af * noise(w) / (2.0 * M_PI);
    };
    QuadResult r;
    auto pts = detail::merge_points(0.0, X_osc, noise.edges());
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) r += integrate(f, pts[i], pts[i + 1], q);
    if (X_osc < X_full) {
        auto mean_tail = [&](double w) { return mean_c2 * noise(w) / (w * w * 2.0 * M_PI); };
        r += integrate_adaptive(mean_tail, X_osc, X_full, opt.quad);
        r.error += 2.0 * bf * bf * noise(X_osc) / (X_osc * X_osc * 2.0 * M_PI) / tau;
    }
    if (!r.converged && r.error > std::max(opt.quad.abs_tol, opt.quad.rel_tol * std::abs(r.value)) * 16.0)
        throw std::runtime_error("dephasing: quadrature did not converge (error estimate " +
                                 std::to_string(r.error) + ")");
    return r.value;
}

// Step-quench QPS.  Uses the general numerator Re F[w] - F[0]; for balanced
// sequences F[0] = 0 and this is the plain spectral-function integral.
// The Re F part of the tail is purely oscillatory (Abel-bounded beyond the
// capped region); the -F[0] J/w part is smooth and integrated uncapped.
template <class Model>
double qps_static(const PulseSequence& seq, const Model& model, double beta_V,
                  const DynamicsOptions& opt = {}) {
    double smin;
    if constexpr (requires { model.min_s(); }) smin = model.min_s();
    else smin = model.s;
    if (smin <= -2.0)
        throw std::domain_error("qps_static: low-frequency divergence (s <= -2)");

    const double tf = seq.total_time;
    const double f0 = seq.f0();
    const double bf = 2.0 * (double)(seq.pulse_count() + 1);
    const double tau = detail::min_gap_time(seq);
    const double eps_tail = 1e-3 * std::max(opt.quad.abs_tol, 0.1 * opt.quad.rel_tol);

    double X_full = model.domain_end(2.0, eps_tail / bf);
    if (std::abs(f0) > 0.0)
        X_full = std::max(X_full, model.domain_end(1.0, eps_tail / std::abs(f0)));
    double x0 = 1.0;
    for (double e : model.edges()) x0 = std::max(x0, 1.5 * e);
    const double X_osc = std::min(
        X_full, detail::osc_region_end([&](double x) { return bf * model(x) / (x * x); }, x0, tau,
                                       0.5 * eps_tail));

    QuadOptions q = opt.quad;
    q.panel_cap = M_PI / (4.0 * tf);
    auto f = [&](double w) { return (seq.filter_freq(w).real() - f0) * model(w) / w; };
    QuadResult r;
    auto pts = detail::merge_points(0.0, X_osc, model.edges());
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) r += integrate(f, pts[i], pts[i + 1], q);
    if (X_osc < X_full) {
        r.error += 2.0 * bf * model(X_osc) / (X_osc * X_osc) / tau;
        if (std::abs(f0) > 0.0) {
            auto dc_tail = [&](double w) { return -f0 * model(w) / w; };
            r += integrate_adaptive(dc_tail, X_osc, X_full, opt.quad);
        }
    }
    if (!r.converged && r.error > std::max(opt.quad.abs_tol, opt.quad.rel_tol * std::abs(r.value)) * 16.0)
        throw std::runtime_error("qps_static: quadrature did not converge (error estimate " +
                                 std::to_string(r.error) + ")");
    return 2.0 * beta_V * r.value;
}

// Retarded Green's function of the bath coupling operator.  The real part
// is tabulated once on a spline over the spectral support (it is smooth and
// t_f-independent; each sample is itself a Kramers-Kronig quadrature) and
// continued beyond it with the exact moment expansion
//   Re G^R[w] = I1/w^2 + I3/w^4 + O(w^-6),   I_m = 2 int_0^inf J(u) u^m du.
// Step-cutoff models have a log singularity at the edge and fall back to
// direct evaluation.
template <class Model>
class RetardedGreen {
public:
    explicit RetardedGreen(const Model& model, const QuadOptions& kk_opt = {})
        : model_(model) {
        direct_all_ = is_step_family();
        const double scale = cutoff_scale();

        double XI = 0.0;
        try {
            XI = model_.domain_end(-1.0, 1e-13);
            has_I1_ = true;
        } catch (const std::domain_error&) {
            has_I1_ = false;
        }
        double XI3 = 0.0;
        try {
            XI3 = model_.domain_end(-3.0, 1e-13);
            has_I3_ = true;
        } catch (const std::domain_error&) {
            has_I3_ = false;
        }
        auto ju1 = [&](double u) { return model_(u) * u; };
        auto ju3 = [&](double u) { return model_(u) * u * u * u; };
        const double Xi1 = has_I1_ ? XI : 20.0 * scale;  // surrogate for domain sizing
        I1_ = 2.0 * integrate_adaptive(ju1, 0.0, Xi1, {1e-13, 1e-10}).value;
        if (has_I3_) I3_ = 2.0 * integrate_adaptive(ju3, 0.0, XI3, {1e-13, 1e-10}).value;

        double X = std::max(4.0 * scale, std::min(model_.domain_end(2.0, 1e-10), 60.0 * scale));
        for (double e : model_.edges()) X = std::max(X, 2.0 * e);
        if (!direct_all_) {
            // extend until the moment expansion takes over smoothly
            for (int it = 0; it < 8 && has_I1_; ++it) {
                const double probe = 1.02 * X;
                const double exact = kramers_kronig_re(model_, probe, kk_opt);
                if (std::abs(tail_re(probe) - exact) < 1e-9 * std::max(1e-4, re_scale_)) break;
                X *= 1.5;
            }
            build_spline(X, kk_opt);
        }
        X_spline_ = X;
    }

    // end of the tabulated region; beyond it Re G^R is the moment tail
    double spline_end() const { return X_spline_; }

    double re(double w) const {
        w = std::abs(w);
        if (direct_all_) return kramers_kronig_re(model_, w);
        if (w > X_spline_) {
            if (has_I1_) return tail_re(w);
            return kramers_kronig_re(model_, w);
        }
        return spline_(w);
    }

    double im(double w) const {
        if (w == 0.0) return 0.0;
        return -M_PI * (w > 0 ? 1.0 : -1.0) * model_(std::abs(w));
    }

    cplx operator()(double w) const { return {re(w), im(w)}; }

    // bound used to pick the integration domain for the slow Re tail
    double moment1() const { return I1_; }

private:
    double tail_re(double w) const {
        const double w2 = w * w;
        return I1_ / w2 + (has_I3_ ? I3_ / (w2 * w2) : 0.0);
    }

    void build_spline(double X, const QuadOptions& kk_opt) {
        const double scale = cutoff_scale();
        double h = scale / 240.0;
        if constexpr (requires { model_.epsilon; }) {
            if (model_.cutoff == Cutoff::lorentzian_peak)
                h = std::min(h, model_.epsilon * scale / 48.0);
        } else {
            for (const auto& p : model_.parts)
                if (p.cutoff == Cutoff::lorentzian_peak)
                    h = std::min(h, p.epsilon * p.omega_c / 48.0);
        }
        // dense out to the cutoff region, geometric beyond; mirrored across
        // w = 0 (Re G^R is even) to keep the natural-spline boundary away
        std::vector<double> xs;
        const double dense_end = std::min(X, 4.0 * scale);
        for (double x = 0.0; x < dense_end; x += h) xs.push_back(x);
        for (double x = dense_end; x < X * 1.0001; x *= 1.02) xs.push_back(x);
        xs.push_back(X * 1.03);
        std::vector<double> full;
        for (std::size_t i = std::min<std::size_t>(8, xs.size() - 1); i > 0; --i)
            full.push_back(-xs[i]);
        for (double x : xs) full.push_back(x);
        std::vector<double> ys(full.size());
        for (std::size_t i = 0; i < full.size(); ++i) {
            ys[i] = kramers_kronig_re(model_, std::abs(full[i]), kk_opt);
            re_scale_ = std::max(re_scale_, std::abs(ys[i]));
        }
        spline_ = CubicSpline(std::move(full), std::move(ys));
    }

    double cutoff_scale() const {
        if constexpr (requires { model_.max_omega_c(); }) return model_.max_omega_c();
        else return model_.omega_c;
    }
    bool is_step_family() const {
        if constexpr (requires { model_.parts; }) {
            for (const auto& p : model_.parts)
                if (p.cutoff == Cutoff::step) return true;
            return false;
        } else {
            return model_.cutoff == Cutoff::step;
        }
    }

    Model model_;
    double X_spline_ = 1.0;
    double I1_ = 0.0, I3_ = 0.0;
    double re_scale_ = 0.0;
    bool has_I1_ = false, has_I3_ = false;
    bool direct_all_ = false;
    CubicSpline spline_;
};

// General-quench QPS, Phi_q = beta_V int dw/2pi F*[w] eta[w] G^R[w], taken
// over the full frequency line.  The integral must come out real; an
// imaginary residue above qps_im_tol * |Phi| signals a convention or
// quadrature fault.
template <class Filter, class Eta, class Model>
double qps_general(const Filter& filter, const Eta& eta, const RetardedGreen<Model>& G,
                   const Model& model, double beta_V, const DynamicsOptions& opt = {}) {
    double tf;
    if constexpr (requires { filter.total_time; }) tf = filter.total_time;
    else tf = filter.tf();

    QuadOptions q = opt.quad;
    q.panel_cap = M_PI / (4.0 * tf);
    auto term = [&](double w, bool imag_part) {
        const cplx v = std::conj(filter.filter_freq(w)) * eta.quench_freq(w) * G(w) *
                       (beta_V / (2.0 * M_PI));
        return imag_part ? v.imag() : v.real();
    };
    auto fre = [&](double w) { return term(w, false); };
    auto fim = [&](double w) { return term(w, true); };

    // First pass over the tabulated region; then extend into the slow
    // Re G ~ I1/w^2 tail until its bound ~ Bf*Be*I1/(pi tf X^4) drops below
    // the accumulated tolerance (the symmetric templates decouple the comb
    // teeth from Re G, so the plain 1/w^2 filter envelope applies).
    const double X0 = G.spline_end();
    std::vector<double> interior{0.0};
    for (double e : model.edges()) {
        interior.push_back(e);
        interior.push_back(-e);
    }
    auto pts = detail::merge_points(-X0, X0, interior);

    QuadResult rre, rim;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        rre += integrate(fre, pts[i], pts[i + 1], q);
        rim += integrate(fim, pts[i], pts[i + 1], q);
    }
    const double eps = 1e-3 * std::max({opt.quad.abs_tol, opt.quad.rel_tol * std::abs(rre.value)});
    double X = X0;
    {
        const double bfbe = 16.0;
        const double x4 = bfbe * std::max(G.moment1(), 1e-300) * std::abs(beta_V) /
                          (M_PI * eps * tf);
        X = std::max(X0, std::min(std::pow(x4, 0.25), 2e3));
    }
    if (X > X0) {
        rre += integrate(fre, X0, X, q);
        rre += integrate(fre, -X, -X0, q);
        rim += integrate(fim, X0, X, q);
        rim += integrate(fim, -X, -X0, q);
    }
    if (!rre.converged)
        throw std::runtime_error("qps_general: quadrature did not converge (error estimate " +
                                 std::to_string(rre.error) + ")");
    const double scale = std::max(std::abs(rre.value), 1e3 * opt.quad.abs_tol);
    if (std::abs(rim.value) > opt.qps_im_tol * scale)
        throw std::runtime_error("qps_general: imaginary residue " + std::to_string(rim.value) +
                                 " exceeds tolerance (convention/quadrature fault)");
    return rre.value;
}

template <class Filter, class Eta, class Model>
double qps_general(const Filter& filter, const Eta& eta, const Model& model, double beta_V,
                   const DynamicsOptions& opt = {}) {
    RetardedGreen<Model> G(model);
    return qps_general(filter, eta, G, model, beta_V, opt);
}

// Brute-force time-domain oracle:
//   Phi_q = beta_V int dt1 F(t1) int dt2 eta(t2) G^R(t1 - t2)
//         = beta_V int_0^tf dtau G^R(tau) C(tau),
//   C(tau) = int F(t) eta(t - tau) dt   (piecewise linear in tau).
// G^R(tau) is tabulated from the sine-transform quadrature.
template <class Model>
double qps_time_domain(const PulseSequence& seq, const QuenchSchedule& sched, const Model& model,
                       const DynamicsOptions& opt = {}) {
    const double tf = seq.total_time;
    const double beta_V = sched.beta_V;

    const auto fsegs = seq.segments();
    auto overlap = [&](double tau) {
        double acc = 0.0;
        for (const auto& fs : fsegs)
            for (const auto& es : sched.segments) {
                const double lo = std::max(fs.a, es.start + tau);
                const double hi = std::min(fs.b, es.end + tau);
                if (hi > lo) acc += fs.value * (double)es.level * (hi - lo);
            }
        return acc;
    };

    // breakpoints of C(tau): all pairwise boundary differences in [0, tf]
    std::vector<double> bks{0.0, tf};
    for (const auto& fs : fsegs)
        for (const auto& es : sched.segments)
            for (double d : {fs.a - es.start, fs.a - es.end, fs.b - es.start, fs.b - es.end})
                if (d > 0.0 && d < tf) bks.push_back(d);
    std::sort(bks.begin(), bks.end());
    bks.erase(std::unique(bks.begin(), bks.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-14; }),
              bks.end());

    double scale;
    if constexpr (requires { model.max_omega_c(); }) scale = model.max_omega_c();
    else scale = model.omega_c;

    const double h = std::min(0.05 / scale, tf / 64.0);
    const int n = (int)std::ceil(tf / h) + 8;  // overshoot t_f: keeps the
    std::vector<double> xs(n), ys(n);          // spline boundary out of range
    for (int i = 0; i < n; ++i) {
        xs[i] = h * (double)i;
        ys[i] = retarded_green_time(model, xs[i], opt.quad);
    }
    CubicSpline G(std::move(xs), std::move(ys));

    QuadOptions q = opt.quad;
    q.panel_cap = 0.1 / scale;
    auto f = [&](double tau) { return G(tau) * overlap(tau); };
    QuadResult r;
    for (std::size_t i = 0; i + 1 < bks.size(); ++i) r += integrate(f, bks[i], bks[i + 1], q);
    if (!r.converged)
        throw std::runtime_error("qps_time_domain: quadrature did not converge");
    return beta_V * r.value;
}

// Phi_ext = int dw/2pi F*[w] B[w] for the transform B of a real field;
// unaffected by the initial qubit state.
template <class BField>
double external_phase(const PulseSequence& seq, BField&& B, double w_max,
                      const DynamicsOptions& opt = {}) {
    QuadOptions q = opt.quad;
    q.panel_cap = M_PI / (4.0 * seq.total_time);
    auto f = [&](double w) {
        return (std::conj(seq.filter_freq(w)) * cplx(B(w))).real() / M_PI;
    };
    QuadResult r = integrate(f, 0.0, w_max, q);
    if (!r.converged) throw std::runtime_error("external_phase: quadrature did not converge");
    return r.value;
}

// DC field b0: Phi_ext = b0 * int F(t) dt.
inline double external_phase_dc(const PulseSequence& seq, double b0) { return b0 * seq.f0(); }

// <sigma_-> = (1/2) e^{-zeta} e^{-i Phi}
inline cplx coherence_value(double zeta, double phi) {
    return 0.5 * std::exp(-zeta) * std::exp(cplx(0.0, -phi));
}

// Readout quadratures under the documented sign convention.
inline double sigma_y_expectation(double zeta, double phi) { return -std::exp(-zeta) * std::sin(phi); }
inline double sigma_x_expectation(double zeta, double phi) { return std::exp(-zeta) * std::cos(phi); }

// N_meas = |<sigma_y>|^{-2}: repetitions for unit SNR on the phase.
inline double n_meas(double zeta, double phi) {
    const double sy = sigma_y_expectation(zeta, phi);
    if (sy == 0.0) throw std::domain_error("n_meas: phase unresolvable (Phi = 0 mod pi)");
    return 1.0 / (sy * sy);
}

} // namespace qns
