#pragma once

#include <cmath>
#include <vector>

#include "rgflow/errors.hpp"

namespace rgflow {

// Gauss-Hermite rule for the weight e^{-t^2}:  int f(t) e^{-t^2} dt ~ sum w_i f(t_i).
// Nodes found by Newton iteration on the recurrence for orthonormal Hermite
// polynomials, refined from asymptotic initial guesses.
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussHermiteRule(int n) {
        if (n < 1) throw usage_error("GaussHermiteRule: n must be positive");
        nodes.assign(n, 0.0);
        weights.assign(n, 0.0);
        const double pim4 = 0.7511255444649425;  // pi^{-1/4}
        const int m = (n + 1) / 2;
        double z = 0.0;
        for (int i = 0; i < m; ++i) {
            if (i == 0)
                z = std::sqrt(double(2 * n + 1)) - 1.85575 * std::pow(double(2 * n + 1), -0.16667);
            else if (i == 1)
                z -= 1.14 * std::pow(double(n), 0.426) / z;
            else if (i == 2)
                z = 1.86 * z - 0.86 * nodes[0];
            else if (i == 3)
                z = 1.91 * z - 0.91 * nodes[1];
            else
                z = 2.0 * z - nodes[i - 2];
            double pp = 0.0;
            bool ok = false;
            for (int it = 0; it < 200; ++it) {
                double p1 = pim4, p2 = 0.0;
                for (int j = 0; j < n; ++j) {
                    const double p3 = p2;
                    p2 = p1;
                    p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(double(j) / (j + 1)) * p3;
                }
                pp = std::sqrt(2.0 * n) * p2;
                const double z1 = z;
                z = z1 - p1 / pp;
                if (std::abs(z - z1) <= 1e-15 * (1.0 + std::abs(z))) {
                    ok = true;
                    break;
                }
            }
            if (!ok) throw numerical_error("GaussHermiteRule: Newton iteration stalled");
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        // store nodes ascending
        std::vector<double> nn(n), ww(n);
        for (int i = 0; i < n; ++i) {
            nn[i] = -nodes[i];
            ww[i] = weights[i];
        }
        nodes = nn;
        weights = ww;
    }
};

// Expectation against the centered Gaussian with variance sigma2:
//   E[f(zeta)] ~ (1/sqrt(pi)) sum w_i f(sqrt(2 sigma2) t_i)
template <class F>
double gauss_expectation(const GaussHermiteRule& rule, double sigma2, const F& f) {
    const double s = std::sqrt(2.0 * sigma2);
    const double inv_sqrt_pi = 0.5641895835477562869;
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) acc += rule.weights[i] * f(s * rule.nodes[i]);
    return acc * inv_sqrt_pi;
}

}  // namespace rgflow
