#pragma once

// Pulse sequences and their filter functions F(t)/F[w], piecewise-constant
// quench schedules eta(t)/eta[w], and the periodically-switched NV plan.
//
// Convention: F(t) = +1 on (0, a_1 t_f) — the qubit is prepared along +x.
// Every phase sign downstream traces back to this choice.

#include "json_util.hpp"

#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qns {

using cplx = std::complex<double>;

namespace detail {

struct PwSegment {
    double a, b;
    double value;
};

// Fourier transform int f(t) e^{iwt} dt of a piecewise-constant function,
// with a series branch for small |w|*duration (the closed form loses digits
// to cancellation there).
inline cplx piecewise_transform(const std::vector<PwSegment>& segs, double w) {
    double span = 0.0;
    for (const auto& s : segs) span = std::max(span, std::abs(s.b));
    if (std::abs(w) * span < 1e-2) {
        // sum_k (iw)^k / (k+1)! * sum_j v_j (b^(k+1) - a^(k+1))
        cplx acc = 0.0;
        double fact = 1.0;
        cplx iwk = 1.0;
        for (int k = 0; k <= 8; ++k) {
            double mk = 0.0;
            for (const auto& s : segs)
                mk += s.value * (std::pow(s.b, k + 1) - std::pow(s.a, k + 1));
            fact *= (k + 1);
            acc += iwk * (mk / fact);
            iwk *= cplx(0.0, w);
        }
        return acc;
    }
    const cplx iw(0.0, w);
    cplx acc = 0.0;
    for (const auto& s : segs)
        acc += s.value * (std::exp(iw * s.b) - std::exp(iw * s.a));
    return acc / iw;
}

// sin(M*theta)/sin(theta) with range reduction (stable at the comb teeth).
inline double dirichlet_ratio(double theta, int M) {
    const double k = std::round(theta / M_PI);
    const double d = theta - k * M_PI;
    const long long ki = (long long)k;
    const double sign = ((ki * (long long)(M - 1)) % 2 != 0) ? -1.0 : 1.0;
    if (std::abs(d) < 1e-150) return sign * (double)M;
    return sign * std::sin((double)M * d) / std::sin(d);
}

} // namespace detail

// Ordered pi-pulse fractions on (0,1) plus the protocol time.
struct PulseSequence {
    std::vector<double> fractions;  // strictly increasing, in (0,1)
    double total_time = 1.0;

    PulseSequence() = default;
    PulseSequence(std::vector<double> fr, double tf) : fractions(std::move(fr)), total_time(tf) {
        validate();
    }

    void validate() const {
        if (!(total_time > 0.0)) throw std::invalid_argument("PulseSequence: t_f must be > 0");
        double prev = 0.0;
        for (double a : fractions) {
            if (!(a > prev && a < 1.0))
                throw std::invalid_argument("PulseSequence: fractions must satisfy 0 < a1 < ... < aL < 1");
            prev = a;
        }
    }

    std::size_t pulse_count() const { return fractions.size(); }

    // Toggling-frame filter: +1 before the first pulse, alternating after.
    int filter_time(double t) const {
        if (t <= 0.0 || t >= total_time) return 0;
        int sign = 1;
        for (double a : fractions) {
            if (t < a * total_time) break;
            sign = -sign;
        }
        return sign;
    }

    std::vector<detail::PwSegment> segments() const {
        std::vector<detail::PwSegment> segs;
        double prev = 0.0;
        double sign = 1.0;
        for (double a : fractions) {
            segs.push_back({prev, a * total_time, sign});
            prev = a * total_time;
            sign = -sign;
        }
        segs.push_back({prev, total_time, sign});
        return segs;
    }

    // F[w] = [2 sum_l (-1)^(l-1) e^{i a_l w t_f} - 1 + (-1)^L e^{i w t_f}]/(iw),
    // F[0] = int F(t) dt analytically.
    cplx filter_freq(double w) const { return detail::piecewise_transform(segments(), w); }

    // int F(t) dt  (0 for balanced sequences, t_f for Ramsey)
    double f0() const {
        double m0 = 0.0;
        for (const auto& s : segments()) m0 += s.value * (s.b - s.a);
        return m0;
    }

    bool balanced() const {
        double acc = 0.0;
        double sign = -1.0;
        for (double a : fractions) {
            acc += sign * a;
            sign = -sign;
        }
        const double L = (double)fractions.size();
        const double tail = (std::fmod(L + 1.0, 2.0) == 0.0) ? 1.0 : -1.0;  // (-1)^(L+1)
        return std::abs(2.0 * acc + tail) < 1e-12;
    }

    static PulseSequence ramsey(double tf) { return PulseSequence({}, tf); }
    static PulseSequence hahn(double tf) { return PulseSequence({0.5}, tf); }
    static PulseSequence cpmg(int n, double tf) {
        if (n < 1) throw std::invalid_argument("cpmg: n >= 1");
        std::vector<double> fr(n);
        for (int j = 1; j <= n; ++j) fr[j - 1] = (2.0 * j - 1.0) / (2.0 * n);
        return PulseSequence(std::move(fr), tf);
    }

    // "ramsey" | "hahn" | "cpmg:<n>" | explicit {"pulses": [...]}
    static PulseSequence from_config(const json& j, double tf) {
        if (j.is_string()) {
            const std::string s = j.get<std::string>();
            if (s == "ramsey") return ramsey(tf);
            if (s == "hahn") return hahn(tf);
            if (s.rfind("cpmg:", 0) == 0) return cpmg(std::stoi(s.substr(5)), tf);
            throw ConfigError("unknown sequence preset '" + s + "'");
        }
        require_keys(j, "sequence", {"pulses"});
        std::vector<double> fr = j.at("pulses").get<std::vector<double>>();
        return PulseSequence(std::move(fr), tf);
    }
};

inline bool check_balanced(const PulseSequence& seq) { return seq.balanced(); }

enum class QubitStart { down, up };

// Piecewise-constant quench profile eta(t) in {-1,0,+1} plus the
// proportionality coefficient beta_V of V = beta_V * xi.
struct QuenchSchedule {
    struct Segment {
        double start, end;
        int level;
    };
    std::vector<Segment> segments;
    double beta_V = 0.5;
    QubitStart initial_state = QubitStart::down;

    void validate(double tf) const {
        double prev = -std::numeric_limits<double>::infinity();
        for (const auto& s : segments) {
            if (!(s.end > s.start)) throw std::invalid_argument("QuenchSchedule: empty segment");
            if (s.start < prev - 1e-15) throw std::invalid_argument("QuenchSchedule: overlapping segments");
            if (s.start < -1e-15 || s.end > tf * (1.0 + 1e-12))
                throw std::invalid_argument("QuenchSchedule: segment outside [0, t_f]");
            if (s.level < -1 || s.level > 1)
                throw std::invalid_argument("QuenchSchedule: level must be -1, 0 or +1");
            prev = s.end;
        }
    }

    int level_at(double t) const {
        for (const auto& s : segments)
            if (t > s.start && t < s.end) return s.level;
        return 0;
    }

    cplx quench_freq(double w) const {
        std::vector<detail::PwSegment> segs;
        for (const auto& s : segments) segs.push_back({s.start, s.end, (double)s.level});
        return detail::piecewise_transform(segs, w);
    }

    // eta = Theta(t) Theta(t_f - t): the intrinsic quench of a standard run.
    static QuenchSchedule step(double tf, QubitStart start = QubitStart::down) {
        QuenchSchedule q;
        q.segments = {{0.0, tf, +1}};
        q.initial_state = start;
        q.beta_V = (start == QubitStart::down) ? 0.5 : -0.5;
        return q;
    }

    QuenchSchedule flipped_initial_state() const {
        QuenchSchedule q = *this;
        q.initial_state = (initial_state == QubitStart::down) ? QubitStart::up : QubitStart::down;
        q.beta_V = -beta_V;
        return q;
    }
};

// 2M repetitions of a 2T-periodic base pair (F0, eta0); the Fig.-5-style
// NV construction has pi-pulses at lT/2 (odd l) and subspace switches at
// every multiple of T.
struct PeriodicNvPlan {
    double T = 1.0;
    int M = 1;
    std::vector<detail::PwSegment> base_filter;
    std::vector<detail::PwSegment> base_quench;

    double tf() const { return 2.0 * M * T; }
    double omega0() const { return M_PI / T; }

    cplx base_filter_freq(double w) const { return detail::piecewise_transform(base_filter, w); }
    cplx base_quench_freq(double w) const { return detail::piecewise_transform(base_quench, w); }

    // Full transforms: e^{i(M-1)wT} [sin(MwT)/sin(wT)] * base[w]
    cplx filter_freq(double w) const {
        return std::exp(cplx(0.0, (M - 1) * w * T)) * detail::dirichlet_ratio(w * T, M) *
               base_filter_freq(w);
    }
    cplx quench_freq(double w) const {
        return std::exp(cplx(0.0, (M - 1) * w * T)) * detail::dirichlet_ratio(w * T, M) *
               base_quench_freq(w);
    }

    PulseSequence as_sequence() const {
        std::vector<double> fr(2 * M);
        for (int j = 1; j <= 2 * M; ++j) fr[j - 1] = (2.0 * j - 1.0) / (4.0 * M);
        return PulseSequence(std::move(fr), tf());
    }

    QuenchSchedule as_schedule() const {
        QuenchSchedule q;
        for (int m = 0; m < M; ++m)
            for (const auto& s : base_quench)
                q.segments.push_back({s.a + 2.0 * m * T, s.b + 2.0 * m * T, (int)s.value});
        q.beta_V = 0.5;  // V = B/2 with the switching absorbed into eta(t)
        return q;
    }
};

inline PeriodicNvPlan build_nv_plan(int M, double T) {
    if (M < 1) throw std::invalid_argument("build_nv_plan: M >= 1");
    if (!(T > 0.0)) throw std::invalid_argument("build_nv_plan: T > 0");
    PeriodicNvPlan p;
    p.T = T;
    p.M = M;
    p.base_filter = {{0.0, T / 2.0, +1.0}, {T / 2.0, 1.5 * T, -1.0}, {1.5 * T, 2.0 * T, +1.0}};
    p.base_quench = {{0.0, T, -1.0}, {T, 2.0 * T, +1.0}};
    return p;
}

struct MirrorSymmetry {
    int s_filter;  // F0(t) = s_filter * F0(2T - t)
    int s_quench;  // eta0(t) = s_quench * eta0(2T - t)
};

// Dense-grid mirror test about t = T.  Fails unless both templates have a
// definite parity and the parities are opposite (the comb would otherwise
// mix Re G^R into the reconstruction).
inline MirrorSymmetry validate_symmetry(const PeriodicNvPlan& plan, int grid = 4096) {
    auto eval = [](const std::vector<detail::PwSegment>& segs, double t) {
        for (const auto& s : segs)
            if (t > s.a && t < s.b) return s.value;
        return 0.0;
    };
    auto parity = [&](const std::vector<detail::PwSegment>& segs) -> int {
        bool even = true, odd = true;
        for (int i = 1; i < grid; ++i) {
            const double t = 2.0 * plan.T * (i + 0.382) / (double)grid;  // avoid breakpoints
            const double f = eval(segs, t), g = eval(segs, 2.0 * plan.T - t);
            if (std::abs(f - g) > 1e-12) even = false;
            if (std::abs(f + g) > 1e-12) odd = false;
        }
        if (even && !odd) return +1;
        if (odd && !even) return -1;
        return 0;
    };
    const int sf = parity(plan.base_filter);
    const int se = parity(plan.base_quench);
    if (sf == 0 || se == 0 || sf * se != -1)
        throw std::runtime_error("validate_symmetry: reconstruction conditions violated");
    return {sf, se};
}

} // namespace qns
