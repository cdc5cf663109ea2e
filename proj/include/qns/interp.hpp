#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace qns {

// Natural cubic spline on a strictly increasing grid.
class CubicSpline {
public:
    CubicSpline() = default;
    CubicSpline(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        if (n < 3 || y_.size() != n) throw std::invalid_argument("CubicSpline: need >= 3 points");
        y2_.assign(n, 0.0);
        std::vector<double> u(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double sig = (x_[i] - x_[i - 1]) / (x_[i + 1] - x_[i - 1]);
            const double p = sig * y2_[i - 1] + 2.0;
            y2_[i] = (sig - 1.0) / p;
            u[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]) -
                   (y_[i] - y_[i - 1]) / (x_[i] - x_[i - 1]);
            u[i] = (6.0 * u[i] / (x_[i + 1] - x_[i - 1]) - sig * u[i - 1]) / p;
        }
        for (std::size_t k = n - 1; k-- > 0;) y2_[k] = y2_[k] * y2_[k + 1] + u[k];
    }

    double operator()(double x) const {
        std::size_t lo = 0, hi = x_.size() - 1;
        if (x <= x_.front()) hi = 1;
        else if (x >= x_.back()) lo = hi - 1;
        else {
            while (hi - lo > 1) {
                const std::size_t m = (hi + lo) / 2;
                (x_[m] > x ? hi : lo) = m;
            }
        }
        const double h = x_[hi] - x_[lo];
        const double a = (x_[hi] - x) / h, b = (x - x_[lo]) / h;
        return a * y_[lo] + b * y_[hi] +
               ((a * a * a - a) * y2_[lo] + (b * b * b - b) * y2_[hi]) * h * h / 6.0;
    }

    bool empty() const { return x_.empty(); }

private:
    std::vector<double> x_, y_, y2_;
};

} // namespace qns
