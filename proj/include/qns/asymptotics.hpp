#pragma once

// Closed-form long-time asymptotics of the dephasing function and the
// quench phase shift for power-law environments:
//
//   zeta(t_f)  ~ C_zeta(p) S0 t_f^{1-p}    (-3 < p < 1)
//   Phi_q(t_f) ~ C_phi(s)  A0 t_f^{1-s}    (-2 < s < 2)
//
// The coefficient normalization is pinned so that asymptotic_qps reproduces
// the quadrature: Phi_q ~ C_phi * A0 * t_f^{1-s}, with the s -> 1 limit
// giving the Ohmic plateau A0/2.  Gamma-function poles at integer exponents
// cancel against zeros of the pulse bracket; integer inputs are evaluated by
// a symmetric two-sided limit.

#include "bath.hpp"
#include "control.hpp"
#include "gamma.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace qns {

namespace detail {

inline double phi_bracket(double s, const PulseSequence& seq) {
    // 2 sum_l (-1)^l a_l^{1-s} + (-1)^{L+1}
    double acc = 0.0;
    double sign = -1.0;
    for (double a : seq.fractions) {
        acc += sign * std::pow(a, 1.0 - s);
        sign = -sign;
    }
    const double tail = (seq.fractions.size() % 2 == 1) ? 1.0 : -1.0;
    return 2.0 * acc + tail;
}

inline double zeta_bracket(double p, const PulseSequence& seq) {
    const auto& a = seq.fractions;
    const std::size_t L = a.size();
    const double e = 1.0 - p;
    double cross = 0.0;
    for (std::size_t l = 1; l < L; ++l)
        for (std::size_t lp = 0; lp < l; ++lp) {
            const double sgn = (((l + 1) + (lp + 1)) % 2 == 0) ? 1.0 : -1.0;
            cross += sgn * std::pow(a[l] - a[lp], e);
        }
    const double tail = (L % 2 == 1) ? 1.0 : -1.0;  // (-1)^{L+1}
    double single = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
        const double sgn = ((l + 1) % 2 == 0) ? 1.0 : -1.0;  // (-1)^l
        single += sgn * (tail * std::pow(1.0 - a[l], e) + std::pow(a[l], e));
    }
    return 4.0 * cross + 2.0 * single + tail;
}

template <class BracketFn, class TrigFn>
double coeff_eval(double x, BracketFn&& bracket, TrigFn&& trig) {
    return real_gamma(x - 1.0) * bracket(x) * trig(x) / M_PI;
}

// gamma(x-1) has poles at x = 1, 0, -1, ...; the full coefficient stays
// finite there.  Take the symmetric limit a small step away.
template <class BracketFn, class TrigFn>
double coeff_with_limit(double x, BracketFn&& bracket, TrigFn&& trig) {
    const double xi = std::round(x);
    if (std::abs(x - xi) < 1e-8 && xi <= 1.0) {
        const double h = 1e-4;
        return 0.5 * (coeff_eval(xi - h, bracket, trig) + coeff_eval(xi + h, bracket, trig));
    }
    return coeff_eval(x, bracket, trig);
}

} // namespace detail

// C_zeta(p) for a balanced sequence, valid on -3 < p < 1.
inline double coeff_zeta(double p, const PulseSequence& seq) {
    if (!seq.balanced()) throw std::invalid_argument("coeff_zeta: sequence must be balanced");
    if (!(p > -3.0 && p < 1.0))
        throw std::domain_error("coeff_zeta: exponent outside (-3,1): cutoff-dependent regime");
    return detail::coeff_with_limit(
        p, [&](double q) { return detail::zeta_bracket(q, seq); },
        [](double q) { return std::sin(q * M_PI / 2.0); });
}

// C_phi(s) for a balanced sequence, valid on -2 < s < 2.
inline double coeff_phi(double s, const PulseSequence& seq) {
    if (!seq.balanced()) throw std::invalid_argument("coeff_phi: sequence must be balanced");
    if (!(s > -2.0 && s < 2.0))
        throw std::domain_error("coeff_phi: exponent outside (-2,2): cutoff-dependent regime");
    return detail::coeff_with_limit(
        s, [&](double q) { return detail::phi_bracket(q, seq); },
        [](double q) { return std::cos(q * M_PI / 2.0); });
}

enum class LawKind { dephasing, qps };

struct AsymptoticLaw {
    LawKind kind;
    double exponent;   // p or s
    double amplitude;  // C_zeta*S0 or C_phi*A0

    AsymptoticLaw(LawKind k, double expo, double ampl) : kind(k), exponent(expo), amplitude(ampl) {
        if (k == LawKind::dephasing && !(expo > -3.0 && expo < 1.0))
            throw std::domain_error("AsymptoticLaw: dephasing exponent outside (-3,1)");
        if (k == LawKind::qps && !(expo > -2.0 && expo < 2.0))
            throw std::domain_error("AsymptoticLaw: qps exponent outside (-2,2)");
    }
};

inline AsymptoticLaw dephasing_law(double p, const PulseSequence& seq, double S0) {
    return AsymptoticLaw(LawKind::dephasing, p, coeff_zeta(p, seq) * S0);
}
inline AsymptoticLaw qps_law(double s, const PulseSequence& seq, double A0) {
    return AsymptoticLaw(LawKind::qps, s, coeff_phi(s, seq) * A0);
}

inline double asymptotic_zeta(const AsymptoticLaw& law, double tf) {
    if (law.kind != LawKind::dephasing) throw std::invalid_argument("asymptotic_zeta: wrong law kind");
    return law.amplitude * std::pow(tf, 1.0 - law.exponent);
}
inline double asymptotic_qps(const AsymptoticLaw& law, double tf) {
    if (law.kind != LawKind::qps) throw std::invalid_argument("asymptotic_qps: wrong law kind");
    return law.amplitude * std::pow(tf, 1.0 - law.exponent);
}

// Long-time QPS limit for Ohmic (s = 1) spectra:
//   Phi_q(inf) = (F[0]/2) Re G^R[0] + (pi/2) dJ/dw|_0,
// the second term alone (= A0/2) for balanced sequences.
template <class Model>
double ohmic_plateau(const Model& model, double F0) {
    // slope0 throws unless every component is exactly Ohmic
    const double slope = model.slope0();
    double re0 = 0.0;
    if (F0 != 0.0) re0 = kramers_kronig_re(model, 0.0);
    return 0.5 * F0 * re0 + 0.5 * M_PI * slope;
}

// Analytic Hahn-echo QPS for s = 5/2 with an exponential cutoff (the
// oracle outside the universal window):
//   Phi = (A0 / 2 sqrt(pi)) t^{-3/2} [ 2^{3/2} e^{i pi/4} (1 + 2i/(w_c t))^{-3/2}
//                                      - (1/2) e^{i pi/4} (1 + i/(w_c t))^{-3/2} + c.c. ]
inline double hahn_qps_exp_cutoff_s52(double alpha, double omega_c, double tf) {
    if (!(tf > 0.0)) throw std::invalid_argument("hahn_qps_exp_cutoff_s52: t_f must be > 0");
    const double A0 = alpha * std::pow(omega_c, -1.5);
    const std::complex<double> i(0.0, 1.0);
    const std::complex<double> e = std::exp(i * (M_PI / 4.0));
    const std::complex<double> z1 = std::pow(1.0 + 2.0 * i / (omega_c * tf), -1.5);
    const std::complex<double> z2 = std::pow(1.0 + i / (omega_c * tf), -1.5);
    const std::complex<double> half = std::pow(2.0, 1.5) * e * z1 - 0.5 * e * z2;
    return A0 / (2.0 * std::sqrt(M_PI)) * std::pow(tf, -1.5) * 2.0 * half.real();
}

} // namespace qns
