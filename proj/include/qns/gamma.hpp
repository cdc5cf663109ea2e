#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace qns {

// sin(pi*x) with argument reduction, accurate near integer x.
inline double sin_pi(double x) {
    double r = x - std::round(x);
    double s = std::sin(M_PI * r);
    return (static_cast<long long>(std::llround(x - r)) % 2 != 0) ? -s : s;
}

// Real gamma function, Lanczos approximation (g = 607/128, 15 terms),
// reflection formula for x < 0.5. Relative error below 1e-13 on the
// real domain used here (|x| < ~20).
inline double real_gamma(double x) {
    static const double g = 607.0 / 128.0;
    static const double c[15] = {
        0.99999999999999709182,
        57.156235665862923517,
        -59.597960355475491248,
        14.136097974741747174,
        -0.49191381609762019978,
        0.33994649984811888699e-4,
        0.46523628927048575665e-4,
        -0.98374475304879564677e-4,
        0.15808870322491248884e-3,
        -0.21026444172410488319e-3,
        0.21743961811521264320e-3,
        -0.16431810653676389022e-3,
        0.84418223983852743293e-4,
        -0.26190838401581408670e-4,
        0.36899182659531622704e-5,
    };

    if (x < 0.5) {
        // poles at non-positive integers
        if (x == std::floor(x))
            throw std::domain_error("gamma: pole at non-positive integer");
        return M_PI / (sin_pi(x) * real_gamma(1.0 - x));
    }
    double z = x - 1.0;
    double a = c[0];
    for (int k = 1; k < 15; ++k) a += c[k] / (z + k);
    double t = z + g + 0.5;
    return std::sqrt(2.0 * M_PI) * std::pow(t, z + 0.5) * std::exp(-t) * a;
}

} // namespace qns
