#pragma once

// Spectral functions J[w], symmetrized noise spectra, the FDT link between
// them, and the retarded response they generate.
//
// Conventions (hbar = k_B = 1, everything in angular-frequency units):
//   J[w] is defined for w >= 0;  Im G^R[w] = -pi*sgn(w)*J[|w|] is the odd
//   extension used everywhere a negative frequency appears.  This extension
//   is our convention; the source formulas only ever fix w >= 0.

#include "json_util.hpp"
#include "quadrature.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qns {

enum class Cutoff { gaussian, exponential, lorentzian, step, lorentzian_peak };

inline Cutoff cutoff_from_string(const std::string& s) {
    if (s == "gaussian") return Cutoff::gaussian;
    if (s == "exponential") return Cutoff::exponential;
    if (s == "lorentzian") return Cutoff::lorentzian;
    if (s == "step") return Cutoff::step;
    if (s == "lorentzian_peak") return Cutoff::lorentzian_peak;
    throw ConfigError("unknown cutoff family '" + s + "'");
}

inline const char* cutoff_name(Cutoff c) {
    switch (c) {
        case Cutoff::gaussian: return "gaussian";
        case Cutoff::exponential: return "exponential";
        case Cutoff::lorentzian: return "lorentzian";
        case Cutoff::step: return "step";
        case Cutoff::lorentzian_peak: return "lorentzian_peak";
    }
    return "?";
}

namespace detail {

// Cutoff shape phi(x), phi(0) = 1, phi(inf) = 0.  The step family is
// right-continuous: phi(1) = 0 (measure-zero point, fixed by convention).
inline double cutoff_value(Cutoff c, double x, double eps) {
    switch (c) {
        case Cutoff::gaussian: return std::exp(-x * x);
        case Cutoff::exponential: return std::exp(-x);
        case Cutoff::lorentzian: return 1.0 / (1.0 + x * x);
        case Cutoff::step: return x < 1.0 ? 1.0 : 0.0;
        case Cutoff::lorentzian_peak: {
            const double e2 = eps * eps;
            const double a = (x - 1.0) * (x - 1.0) + e2;
            const double b = (x + 1.0) * (x + 1.0) + e2;
            return (1.0 + e2) * (1.0 + e2) / (a * b);
        }
    }
    return 0.0;
}

// Upper bound on int_x^inf u^q phi(u) du, loose but cheap.  Returns inf if
// the tail does not converge for this family/exponent.
inline double tail_bound(Cutoff c, double eps, double q, double x) {
    const double inf = std::numeric_limits<double>::infinity();
    switch (c) {
        case Cutoff::gaussian: {
            double x0 = std::max(x, std::sqrt(std::max(q, 0.0)) + 1.0);
            return std::pow(x0, std::max(q, 0.0) + 1.0) * std::exp(-x0 * x0) +
                   (x0 > x ? (x0 - x) * std::pow(x0, q) : 0.0);
        }
        case Cutoff::exponential: {
            double x0 = std::max(x, 2.0 * std::max(q, 1.0));
            return 2.0 * std::pow(x0, std::max(q, 0.0)) * std::exp(-x0) +
                   (x0 > x ? (x0 - x) * std::pow(x0, q) : 0.0);
        }
        case Cutoff::lorentzian:
            if (q >= 1.0) return inf;
            return std::pow(x, q - 1.0) / (1.0 - q);
        case Cutoff::step:
            return x >= 1.0 ? 0.0 : inf;  // exact: no tail beyond the edge
        case Cutoff::lorentzian_peak: {
            if (q >= 3.0) return inf;
            double x0 = std::max(x, 2.0);
            double b = 4.0 * (1.0 + eps * eps) * (1.0 + eps * eps) *
                       std::pow(x0, q - 3.0) / (3.0 - q);
            if (x0 > x) b += (x0 - x) * 2.0;  // coarse cover of [x, 2]
            return b;
        }
    }
    return inf;
}

} // namespace detail

// Power law times a UV cutoff: J[w] = (alpha/pi) w_c (w/w_c)^s phi(w/w_c).
struct SpectralModel {
    double s = 1.0;
    double alpha = 0.0;
    double omega_c = 1.0;
    Cutoff cutoff = Cutoff::gaussian;
    double epsilon = 0.0;  // peak linewidth fraction, lorentzian_peak only

    SpectralModel() = default;
    SpectralModel(double s_, double alpha_, double omega_c_, Cutoff c, double eps = 0.0)
        : s(s_), alpha(alpha_), omega_c(omega_c_), cutoff(c), epsilon(eps) {
        validate();
    }

    void validate() const {
        if (alpha < 0.0) throw std::invalid_argument("SpectralModel: alpha must be >= 0");
        if (omega_c <= 0.0) throw std::invalid_argument("SpectralModel: omega_c must be > 0");
        if (cutoff == Cutoff::lorentzian_peak && !(epsilon > 0.0 && epsilon < 1.0))
            throw std::invalid_argument("SpectralModel: lorentzian_peak needs 0 < epsilon < 1");
    }

    double operator()(double w) const {
        if (w < 0.0) throw std::domain_error("SpectralModel: negative frequency");
        if (w == 0.0) return s > 0.0 ? 0.0 : (s == 0.0 ? alpha * omega_c / M_PI
                                                       : std::numeric_limits<double>::infinity());
        const double x = w / omega_c;
        return (alpha / M_PI) * omega_c * std::pow(x, s) * detail::cutoff_value(cutoff, x, epsilon);
    }

    double a0() const { return alpha * std::pow(omega_c, 1.0 - s); }

    // dJ/dw at w = 0 for the Ohmic family (phi(0) = 1 for every family).
    double slope0() const {
        if (std::abs(s - 1.0) > 1e-12)
            throw std::domain_error("SpectralModel::slope0: defined for s = 1 only");
        return alpha / M_PI;
    }

    // X such that int_X^inf J(w) w^{-p} dw < eps.
    double domain_end(double p, double eps) const {
        if (cutoff == Cutoff::step) return omega_c;
        const double pref = (alpha / M_PI) * std::pow(omega_c, 2.0 - p);
        const double q = s - p;
        double x = 2.0;
        while (x < 1e14) {
            double b = detail::tail_bound(cutoff, epsilon, q, x);
            if (pref * b < eps) return x * omega_c;
            x *= 1.5;
        }
        throw std::domain_error("SpectralModel: tail does not converge for this weight");
    }

    std::vector<double> edges() const {
        if (cutoff == Cutoff::step) return {omega_c};
        if (cutoff == Cutoff::lorentzian_peak)
            return {omega_c * (1.0 - epsilon), omega_c, omega_c * (1.0 + epsilon)};
        return {};
    }

    static SpectralModel from_json(const json& j) {
        require_keys(j, "spectral model", {"s", "alpha", "omega_c", "cutoff", "epsilon"});
        Cutoff c = Cutoff::gaussian;
        if (j.contains("cutoff")) c = cutoff_from_string(j["cutoff"].get<std::string>());
        return SpectralModel(get_num(j, "spectral model", "s"),
                             get_num(j, "spectral model", "alpha"),
                             get_num(j, "spectral model", "omega_c"), c,
                             get_num_or(j, "epsilon", 0.0));
    }
};

// Sum of spectral components (e.g. Ohmic background plus a resonant peak).
struct SpectralSum {
    std::vector<SpectralModel> parts;

    SpectralSum() = default;
    SpectralSum(SpectralModel m) : parts{std::move(m)} {}
    SpectralSum(std::vector<SpectralModel> p) : parts(std::move(p)) {}

    double operator()(double w) const {
        double v = 0.0;
        for (const auto& m : parts) v += m(w);
        return v;
    }
    double a0() const {
        double v = 0.0;
        for (const auto& m : parts) v += m.a0();
        return v;
    }
    double min_s() const {
        double v = std::numeric_limits<double>::infinity();
        for (const auto& m : parts) v = std::min(v, m.s);
        return v;
    }
    double max_omega_c() const {
        double v = 0.0;
        for (const auto& m : parts) v = std::max(v, m.omega_c);
        return v;
    }
    double slope0() const {
        double v = 0.0;
        for (const auto& m : parts) v += m.slope0();
        return v;
    }
    double domain_end(double p, double eps) const {
        double v = 0.0;
        for (const auto& m : parts) v = std::max(v, m.domain_end(p, eps / (double)parts.size()));
        return v;
    }
    std::vector<double> edges() const {
        std::vector<double> e;
        for (const auto& m : parts)
            for (double x : m.edges()) e.push_back(x);
        std::sort(e.begin(), e.end());
        return e;
    }

    static SpectralSum from_json(const json& j) {
        if (j.is_object() && j.contains("components")) {
            require_keys(j, "bath", {"components"});
            std::vector<SpectralModel> parts;
            for (const auto& c : j["components"]) parts.push_back(SpectralModel::from_json(c));
            return SpectralSum(std::move(parts));
        }
        return SpectralSum(SpectralModel::from_json(j));
    }
};

// coth with a guarded small-argument series (|x| < 1e-4).
inline double coth_guarded(double x) {
    const double a = std::abs(x);
    if (a < 1e-4) return 1.0 / x + x / 3.0 - x * x * x / 45.0;
    return 1.0 / std::tanh(x);
}

struct IrCutoff {
    double omega_ir = 0.0;
    Cutoff family = Cutoff::gaussian;
    double epsilon = 0.0;
};

// Symmetrized noise spectral density S[w] = S[-w] >= 0.
// thermal:  S[w] = pi J[|w|] coth(|w|/2kT)
// freeform: S[w] = S0 |w|^p mu(|w|/w_c), optional IR cutoff mu_ir(w_ir/|w|).
class NoiseModel {
public:
    enum class Kind { thermal, freeform };

    static NoiseModel thermal(SpectralSum spectral, double kT) {
        if (kT <= 0.0) throw std::invalid_argument("NoiseModel: kT must be > 0");
        NoiseModel m;
        m.kind_ = Kind::thermal;
        m.spectral_ = std::move(spectral);
        m.kT_ = kT;
        return m;
    }

    static NoiseModel freeform(double p, double S0, double omega_c, Cutoff cutoff,
                               double epsilon = 0.0, std::optional<IrCutoff> ir = {}) {
        NoiseModel m;
        m.kind_ = Kind::freeform;
        m.p_ = p;
        m.S0_ = S0;
        m.omega_c_ = omega_c;
        m.cutoff_ = cutoff;
        m.epsilon_ = epsilon;
        m.ir_ = ir;
        return m;
    }

    Kind kind() const { return kind_; }
    double kT() const { return kT_; }
    const SpectralSum& spectral() const { return spectral_; }
    double exponent() const { return kind_ == Kind::thermal ? spectral_.min_s() - 1.0 : p_; }
    bool has_ir() const { return ir_.has_value(); }

    double operator()(double w) const {
        const double a = std::abs(w);
        if (kind_ == Kind::thermal) {
            if (a == 0.0) {
                const double s = spectral_.min_s();
                if (s > 1.0) return 0.0;
                if (s < 1.0) return std::numeric_limits<double>::infinity();
                double v = 0.0;  // 2 kT A0 per exactly-Ohmic component
                for (const auto& m : spectral_.parts)
                    if (std::abs(m.s - 1.0) < 1e-12) v += 2.0 * kT_ * m.a0();
                return v;
            }
            return M_PI * spectral_(a) * coth_guarded(a / (2.0 * kT_));
        }
        double irf = 1.0;
        if (ir_) irf = detail::cutoff_value(ir_->family, a > 0 ? ir_->omega_ir / a : 1e300,
                                            ir_->epsilon);
        if (a == 0.0) {
            if (p_ > 0.0) return 0.0;
            if (p_ == 0.0) return ir_ ? 0.0 : S0_;
            if (!ir_)
                throw std::domain_error(
                    "NoiseModel: freeform p <= -1 without IR cutoff is non-integrable at w = 0");
            return 0.0;
        }
        return S0_ * std::pow(a, p_) * detail::cutoff_value(cutoff_, a / omega_c_, epsilon_) * irf;
    }

    // Rejects spectra whose dephasing integral diverges for the given pulse count.
    void check_integrable(bool balanced) const {
        const double p = exponent();
        const double lo = balanced ? -3.0 : -1.0;
        if (p <= lo && !(kind_ == Kind::freeform && ir_))
            throw std::domain_error("NoiseModel: spectrum non-integrable against this filter "
                                    "(p <= " + std::to_string(lo) + " with no IR cutoff)");
    }

    double domain_end(double p, double eps) const {
        if (kind_ == Kind::thermal) {
            // coth <= coth(w_c/2kT) beyond the cutoff scale; fold it into eps
            double c = coth_guarded(spectral_.max_omega_c() / (2.0 * kT_));
            return spectral_.domain_end(p, eps / (M_PI * c));
        }
        const double pref = S0_ * std::pow(omega_c_, p_ - p + 1.0);
        const double q = p_ - p;
        double x = 2.0;
        while (x < 1e9) {
            if (pref * detail::tail_bound(cutoff_, epsilon_, q, x) < eps) return x * omega_c_;
            x *= 1.5;
        }
        throw std::domain_error("NoiseModel: tail does not converge");
    }

    std::vector<double> edges() const {
        if (kind_ == Kind::thermal) return spectral_.edges();
        SpectralModel tmp(std::max(p_, 0.0), 1.0, omega_c_, cutoff_,
                          cutoff_ == Cutoff::lorentzian_peak ? epsilon_ : 0.0);
        return tmp.edges();
    }

    static NoiseModel from_json(const json& j) {
        if (j.contains("kT")) {
            json spec = j;
            spec.erase("kT");
            return thermal(SpectralSum::from_json(spec), get_num(j, "noise model", "kT"));
        }
        require_keys(j, "noise model", {"p", "S0", "omega_c", "cutoff", "epsilon"});
        Cutoff c = Cutoff::gaussian;
        if (j.contains("cutoff")) c = cutoff_from_string(j["cutoff"].get<std::string>());
        return freeform(get_num(j, "noise model", "p"), get_num(j, "noise model", "S0"),
                        get_num(j, "noise model", "omega_c"), c, get_num_or(j, "epsilon", 0.0));
    }

private:
    Kind kind_ = Kind::thermal;
    SpectralSum spectral_;
    double kT_ = 1.0;
    double p_ = 0.0, S0_ = 0.0, omega_c_ = 1.0, epsilon_ = 0.0;
    Cutoff cutoff_ = Cutoff::gaussian;
    std::optional<IrCutoff> ir_;
};

// Frequency-resolved effective temperature from the FDT,
// kT_eff = w / (2 arccoth(S/(pi J))).
inline double effective_temperature(double S, double J, double w) {
    if (w <= 0.0) throw std::domain_error("effective_temperature: w must be > 0");
    if (!(J > 0.0)) throw std::domain_error("effective_temperature: J must be > 0");
    const double r = S / (M_PI * J);
    if (r <= 1.0)
        throw std::domain_error("sub-vacuum noise: FDT inversion undefined");
    return w / (2.0 * std::atanh(1.0 / r));
}

// Re G^R[w] from Im G^R via the Kramers-Kronig relation, with the pole
// handled by symmetric subtraction over a window of half-width
// min(w_c, |w|)/2.  Folding negative frequencies:
//   Re G^R[w] = -2 P int_0^inf J(u) u / (u^2 - w^2) du        (even in w)
template <class Model>
double kramers_kronig_re(const Model& J, double w, const QuadOptions& opt = {}) {
    w = std::abs(w);
    const double X = J.domain_end(1.0, 0.25 * std::max(opt.abs_tol, 1e-14));
    auto edges = J.edges();

    auto seg_points = [&](double lo, double hi) {
        std::vector<double> pts{lo};
        for (double e : edges)
            if (e > lo && e < hi) pts.push_back(e);
        pts.push_back(hi);
        return pts;
    };

    if (w == 0.0) {
        auto f = [&](double u) { return J(u) / u; };
        auto r = integrate_segments(f, seg_points(0.0, X), opt);
        if (!r.converged)
            throw std::runtime_error("kramers_kronig_re: principal value did not converge "
                                     "(error " + std::to_string(r.error) + ")");
        return -2.0 * r.value;
    }

    double wc;
    if constexpr (requires { J.max_omega_c(); }) wc = J.max_omega_c();
    else wc = J.omega_c;
    // symmetric-subtraction window of half-width min(w_c, w)/2
    double W = 0.5 * std::min(wc, w);
    W = std::min(W, 0.45 * w);  // keep the window away from u = 0

    auto h = [&](double u) { return J(u) * u / (u + w); };
    const double hw = h(w);
    const double dh = (h(w + 1e-5 * W) - h(w - 1e-5 * W)) / (2e-5 * W);
    auto sub = [&](double u) {
        const double d = u - w;
        if (std::abs(d) < 1e-13 * w) return dh;
        return (h(u) - hw) / d;
    };
    auto raw = [&](double u) { return J(u) * u / ((u - w) * (u + w)); };

    QuadResult total;
    total += integrate_segments(raw, seg_points(0.0, w - W), opt);
    total += integrate_segments(sub, seg_points(w - W, w + W), opt);
    total += integrate_segments(raw, seg_points(w + W, std::max(X, w + 2.0 * W)), opt);
    if (!total.converged)
        throw std::runtime_error("kramers_kronig_re: principal value did not converge "
                                 "(error " + std::to_string(total.error) + ")");
    return -2.0 * total.value;
}

// Time-domain retarded response for a Gaussian bosonic bath:
//   G^R(t) = -2 Theta(t) int_0^inf J(w) sin(w t) dw,
// evaluated over the cutoff support with oscillation-capped panels.  Slowly
// decaying families (lorentzian tails ~ 1/w) get integration-by-parts
// boundary corrections instead of an impractically large domain.
template <class Model>
double retarded_green_time(const Model& J, double t, const QuadOptions& opt = {}) {
    if (t <= 0.0) return 0.0;

    bool slow_tail = false;
    double X;
    try {
        X = J.domain_end(0.0, 0.25 * std::max(opt.abs_tol, 1e-14));
    } catch (const std::domain_error&) {
        slow_tail = true;
        X = 0.0;
    }
    if (!slow_tail && X > 2e3) slow_tail = true;
    if (slow_tail) X = 1e3;  // in units of the largest cutoff below
    double scale = 1.0;
    if constexpr (requires { J.max_omega_c(); }) scale = J.max_omega_c();
    else scale = J.omega_c;
    if (slow_tail) X *= scale;

    QuadOptions o = opt;
    o.panel_cap = M_PI / (4.0 * t);
    auto f = [&](double w) { return J(w) * std::sin(w * t); };
    std::vector<double> pts{0.0};
    for (double e : J.edges())
        if (e > 0.0 && e < X) pts.push_back(e);
    pts.push_back(X);
    QuadResult r;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        r += integrate(f, pts[i], pts[i + 1], o);
    if (!r.converged)
        throw std::runtime_error("retarded_green_time: quadrature failure (error " +
                                 std::to_string(r.error) + ")");
    double val = r.value;
    if (slow_tail) {
        // int_X^inf J sin(wt) dw = J(X)cos(Xt)/t - J'(X)sin(Xt)/t^2 + O(J''/t^3)
        const double d = 1e-6 * X;
        const double Jx = J(X), Jp = (J(X + d) - J(X - d)) / (2.0 * d);
        val += Jx * std::cos(X * t) / t - Jp * std::sin(X * t) / (t * t);
    }
    return -2.0 * val;
}

} // namespace qns
