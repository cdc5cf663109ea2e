#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <vector>

namespace qns {

struct QuadOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-8;
    // panel_cap > 0 forces panels no wider than this on [a, cap_end];
    // used for integrands oscillating at a known scale.
    double panel_cap = 0.0;
    double cap_end = std::numeric_limits<double>::infinity();
    int max_panels = 2000000;
};

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    std::int64_t evals = 0;
    bool converged = true;

    QuadResult& operator+=(const QuadResult& o) {
        value += o.value;
        error += o.error;
        evals += o.evals;
        converged = converged && o.converged;
        return *this;
    }
};

namespace detail {

// Gauss-Kronrod 7-15 nodes and weights (positive half).
inline constexpr double gk_x[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
};
inline constexpr double gk_wk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
};
inline constexpr double gk_wg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
};

template <class F>
inline void gk15(F& f, double a, double b, double& value, double& err) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(c - h * gk_x[i]);
        fv[14 - i] = f(c + h * gk_x[i]);
    }
    fv[7] = f(c);
    double resk = gk_wk[7] * fv[7];
    double resg = gk_wg[3] * fv[7];
    for (int i = 0; i < 7; ++i) {
        resk += gk_wk[i] * (fv[i] + fv[14 - i]);
        if (i % 2 == 1) resg += gk_wg[i / 2] * (fv[i] + fv[14 - i]);
    }
    const double reskh = 0.5 * resk;
    double resasc = gk_wk[7] * std::abs(fv[7] - reskh);
    for (int i = 0; i < 7; ++i)
        resasc += gk_wk[i] * (std::abs(fv[i] - reskh) + std::abs(fv[14 - i] - reskh));
    value = resk * h;
    resasc *= std::abs(h);
    err = std::abs((resk - resg) * h);
    if (resasc != 0.0 && err != 0.0)
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
}

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

} // namespace detail

// Globally adaptive Gauss-Kronrod integration on [a, b].
template <class F>
QuadResult integrate_adaptive(F&& f, double a, double b, const QuadOptions& opt = {}) {
    QuadResult res;
    if (a == b) return res;
    std::priority_queue<detail::Panel> heap;
    double v, e;
    detail::gk15(f, a, b, v, e);
    res.evals += 15;
    heap.push({a, b, v, e});
    double total = v, toterr = e;
    int panels = 1;
    while (toterr > std::max(opt.abs_tol, opt.rel_tol * std::abs(total)) &&
           panels < opt.max_panels) {
        detail::Panel p = heap.top();
        if (p.error <= 0 || p.b - p.a < 1e-15 * (std::abs(p.a) + std::abs(p.b) + 1e-300)) break;
        heap.pop();
        const double m = 0.5 * (p.a + p.b);
        double v1, e1, v2, e2;
        detail::gk15(f, p.a, m, v1, e1);
        detail::gk15(f, m, p.b, v2, e2);
        res.evals += 30;
        total += v1 + v2 - p.value;
        toterr += e1 + e2 - p.error;
        heap.push({p.a, m, v1, e1});
        heap.push({m, p.b, v2, e2});
        ++panels;
    }
    res.value = total;
    res.error = toterr;
    res.converged = toterr <= std::max(opt.abs_tol, opt.rel_tol * std::abs(total)) * 4.0;
    return res;
}

// Marches fixed-width panels (width <= cap) over [a, b]; panels whose local
// error estimate is out of proportion get refined adaptively. Memory O(1).
template <class F>
QuadResult integrate_capped(F&& f, double a, double b, double cap, const QuadOptions& opt = {}) {
    QuadResult res;
    if (a >= b) return res;
    const std::int64_t n = std::max<std::int64_t>(1, (std::int64_t)std::ceil((b - a) / cap));
    const double w = (b - a) / (double)n;
    const double per_panel = std::max(opt.abs_tol, opt.rel_tol * 1e-2) / (double)n;
    for (std::int64_t i = 0; i < n; ++i) {
        const double x0 = a + w * (double)i;
        const double x1 = (i == n - 1) ? b : x0 + w;
        double v, e;
        detail::gk15(f, x0, x1, v, e);
        res.evals += 15;
        if (e > per_panel) {
            QuadOptions sub;
            sub.abs_tol = per_panel;
            sub.rel_tol = opt.rel_tol;
            sub.max_panels = 2000;
            QuadResult r = integrate_adaptive(f, x0, x1, sub);
            res.value += r.value;
            res.error += r.error;
            res.evals += r.evals;
        } else {
            res.value += v;
            res.error += e;
        }
    }
    res.converged = res.error <= std::max(opt.abs_tol, opt.rel_tol * std::abs(res.value)) * 16.0;
    return res;
}

// Dispatch: oscillation-capped region [a, cap_end], adaptive remainder.
template <class F>
QuadResult integrate(F&& f, double a, double b, const QuadOptions& opt = {}) {
    if (opt.panel_cap <= 0.0 || opt.panel_cap >= (b - a))
        return integrate_adaptive(f, a, b, opt);
    const double e = std::min(b, opt.cap_end);
    QuadResult res = integrate_capped(f, a, e, opt.panel_cap, opt);
    if (e < b) res += integrate_adaptive(f, e, b, opt);
    return res;
}

// Integration with prescribed interior split points (discontinuities etc.).
template <class F>
QuadResult integrate_segments(F&& f, const std::vector<double>& pts, const QuadOptions& opt = {}) {
    QuadResult res;
    QuadOptions sub = opt;
    if (pts.size() >= 2) {
        sub.abs_tol = opt.abs_tol / (double)(pts.size() - 1);
        for (std::size_t i = 0; i + 1 < pts.size(); ++i)
            res += integrate(f, pts[i], pts[i + 1], sub);
    }
    res.converged = res.error <= std::max(opt.abs_tol, opt.rel_tol * std::abs(res.value)) * 16.0;
    return res;
}

} // namespace qns
