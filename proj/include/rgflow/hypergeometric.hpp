#pragma once

#include <cmath>
#include <string>

#include "rgflow/errors.hpp"

namespace rgflow::models {

// Gauss hypergeometric series sum_k (a)_k (b)_k / ((c)_k k!) s^k for |s| < 1,
// summed with a term-ratio tail bound to relative 1e-13.
inline double hyper_2f1(double a, double b, double c, double s) {
    if (!(std::abs(s) < 1.0)) throw domain_error("hyper_2f1: requires |s| < 1");
    if (c <= 0.0 && c == std::floor(c))
        throw domain_error("hyper_2f1: c must not be a nonpositive integer");
    if (s == 0.0) return 1.0;
    double term = 1.0, sum = 1.0;
    const double as = std::abs(s);
    const int k_min = 10 + 2 * static_cast<int>(std::max({std::abs(a), std::abs(b), std::abs(c), 1.0}));
    const int cap = 2000000;
    for (int k = 0; k < cap; ++k) {
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * s;
        sum += term;
        if (k < k_min) continue;
        // beyond k_min the term ratio drifts monotonically toward |s|
        const double ratio_next =
            std::abs((a + k + 1.0) * (b + k + 1.0) / ((c + k + 1.0) * (k + 2.0)) * s);
        const double q = std::min(0.999999, std::max(ratio_next, as) * (1.0 + 1e-9));
        const double tail = std::abs(term) * q / (1.0 - q);
        if (tail <= 1e-13 * std::abs(sum) + 1e-300) return sum;
    }
    throw numerical_error("hyper_2f1: series did not converge within the term cap at s = " +
                          std::to_string(s));
}

}  // namespace rgflow::models
