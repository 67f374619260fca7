#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "rgflow/errors.hpp"

namespace rgflow::seqspace {

// Weights of the sequence-space norm.  The coupling weight exponent e(n)
// switches from 1 on the ultraviolet side to 3/2 on the infrared side; delta
// and eta are the exponent drops of the mass and remainder channels.
struct NormWeights {
    double delta = 1.0 / 6.0;
    double eta = 3.0 / 16.0;
    double c_norm = 0.1;   // h = c_norm * gbar^{-1/4}
    double h_star = 0.0;   // fixed kernel weight L^{(3+eps)/4}
    int weight_cap = 9;

    double e(int n) const { return n <= 0 ? 1.0 : 1.5; }

    static NormWeights make(int L, double eps, double c_norm = 0.1) {
        NormWeights nw;
        nw.c_norm = c_norm;
        nw.h_star = std::pow(double(L), 0.25 * (3.0 + eps));
        return nw;
    }
};

// Finite-dimensional calibrated norm:
//   |||R|||_gbar = max( sum_j h*^j |R_j| , gbar^2 sum_j (c gbar^{-1/4})^j |R_j| ).
// This is the default norm family offered to models.
inline double calibrated_R_norm(std::span<const double> R, double gbar, const NormWeights& nw) {
    if (!(gbar > 0.0)) throw domain_error("calibrated_R_norm: gbar must be positive");
    if (static_cast<int>(R.size()) > nw.weight_cap + 1)
        throw usage_error("calibrated_R_norm: component index beyond weight cap");
    const double h = nw.c_norm * std::pow(gbar, -0.25);
    double kernel = 0.0, field = 0.0;
    double ws = 1.0, wh = 1.0;
    for (double rj : R) {
        const double a = std::abs(rj);
        kernel += ws * a;
        field += wh * a;
        ws *= nw.h_star;
        wh *= h;
    }
    return std::max(kernel, gbar * gbar * field);
}

}  // namespace rgflow::seqspace
