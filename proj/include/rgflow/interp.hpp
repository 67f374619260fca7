#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "rgflow/errors.hpp"

namespace rgflow {

// Piecewise-cubic Hermite interpolant on a uniform grid with values and
// derivatives supplied at the knots.
class CubicHermite {
  public:
    CubicHermite() = default;
    CubicHermite(double x0, double x1, std::vector<double> values, std::vector<double> derivs)
        : x0_(x0), x1_(x1), y_(std::move(values)), d_(std::move(derivs)) {
        if (y_.size() < 2 || y_.size() != d_.size() || !(x1_ > x0_))
            throw usage_error("CubicHermite: bad grid");
        h_ = (x1_ - x0_) / static_cast<double>(y_.size() - 1);
    }

    double operator()(double x) const {
        if (x <= x0_) return y_.front();
        if (x >= x1_) return y_.back();
        const double u = (x - x0_) / h_;
        std::size_t i = static_cast<std::size_t>(u);
        if (i >= y_.size() - 1) i = y_.size() - 2;
        const double t = u - static_cast<double>(i);
        const double t2 = t * t, t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1;
        const double h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2;
        const double h11 = t3 - t2;
        return h00 * y_[i] + h10 * h_ * d_[i] + h01 * y_[i + 1] + h11 * h_ * d_[i + 1];
    }

    double x_min() const { return x0_; }
    double x_max() const { return x1_; }

  private:
    double x0_ = 0, x1_ = 1, h_ = 1;
    std::vector<double> y_, d_;
};

// Clamped cubic spline on a uniform grid: knot derivatives m_i solve the
// tridiagonal system m_{i-1} + 4 m_i + m_{i+1} = 3 (y_{i+1} - y_{i-1}) / h
// with m fixed at both ends.
class CubicSpline {
  public:
    CubicSpline() = default;
    CubicSpline(double x0, double x1, std::vector<double> values, double d_left, double d_right) {
        const std::size_t n = values.size();
        if (n < 3 || !(x1 > x0)) throw usage_error("CubicSpline: bad grid");
        const double h = (x1 - x0) / static_cast<double>(n - 1);
        std::vector<double> m(n, 0.0), cp(n, 0.0), dp(n, 0.0);
        // rows: [1 0 ...] m = d_left ; [... 1 4 1 ...] ; [... 0 1] m = d_right
        cp[0] = 0.0;
        dp[0] = d_left;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double den = 4.0 - cp[i - 1];
            cp[i] = 1.0 / den;
            dp[i] = (3.0 * (values[i + 1] - values[i - 1]) / h - dp[i - 1]) / den;
        }
        dp[n - 1] = d_right;  // last row is an identity
        cp[n - 1] = 0.0;
        m[n - 1] = dp[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) m[i] = dp[i] - cp[i] * m[i + 1];
        hermite_ = CubicHermite(x0, x1, std::move(values), std::move(m));
    }

    double operator()(double x) const { return hermite_(x); }
    double x_min() const { return hermite_.x_min(); }
    double x_max() const { return hermite_.x_max(); }

  private:
    CubicHermite hermite_;
};

}  // namespace rgflow
