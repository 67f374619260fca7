#pragma once

#include <cfloat>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "rgflow/errors.hpp"

namespace rgflow::flow {

// Quadratic one-step map x -> L^eps x - L^{2 eps} a x^2 on [0, gbar_star],
// a strictly increasing concave diffeomorphism with fixed points 0 and
// gbar_star = (L^eps - 1) / (L^{2 eps} a).
struct FlowParams {
    int L = 2;
    double eps = 0.0;
    double a = 0.0;
    double Leps = 0.0;    // L^eps
    double L2eps = 0.0;   // L^{2 eps}
    double gbar_star = 0.0;

    static FlowParams make(int L, double eps, double a) {
        if (L < 2) throw domain_error("FlowParams: L must be an integer >= 2");
        if (!(a > 0.0)) throw domain_error("FlowParams: a must be positive");
        FlowParams p;
        p.L = L;
        p.eps = eps;
        p.Leps = std::pow(double(L), eps);
        p.L2eps = p.Leps * p.Leps;
        if (!(p.Leps > 1.0 && p.Leps < 2.0))
            throw domain_error("FlowParams: requires 1 < L^eps < 2");
        p.a = a;
        p.gbar_star = (p.Leps - 1.0) / (p.L2eps * a);
        return p;
    }

    void check_domain(double x, const char* who) const {
        const double slack = 1e-12 * gbar_star;
        if (!(x >= -slack && x <= gbar_star + slack))
            throw domain_error(std::string(who) + ": argument outside [0, gbar_star]");
    }

    double f(double x) const {
        check_domain(x, "f");
        return Leps * x - L2eps * a * x * x;
    }

    double f_prime(double x) const {
        check_domain(x, "f_prime");
        return Leps - 2.0 * L2eps * a * x;
    }

    // smaller root of L^eps x - L^{2 eps} a x^2 = y, in rationalized form
    double f_inverse(double y) const {
        check_domain(y, "f_inverse");
        const double disc = L2eps - 4.0 * L2eps * a * y;
        if (disc < 0.0) throw domain_error("f_inverse: negative discriminant");
        return 2.0 * y / (Leps + std::sqrt(disc));
    }
};

// Two-sided orbit of f anchored at gbar_0 = omega0 gbar_star, increasing from
// 0 (n -> -inf) to gbar_star (n -> +inf).  Immutable after construction.
struct GbarSequence {
    FlowParams params;
    double omega0 = 0.0;
    int n_minus = 0;
    int n_plus = 0;
    std::vector<double> values;  // index n + n_minus

    bool contains(int n) const { return n >= -n_minus && n <= n_plus; }

    double at(int n) const {
        if (!contains(n)) throw usage_error("GbarSequence: index outside stored window");
        return values[static_cast<std::size_t>(n + n_minus)];
    }
};

inline GbarSequence build_gbar(double omega0, int n_minus, int n_plus, const FlowParams& fp) {
    if (!(omega0 > 0.0 && omega0 < 1.0)) throw domain_error("build_gbar: omega0 must lie in (0,1)");
    if (n_minus < 0 || n_plus < 0) throw usage_error("build_gbar: window sizes must be nonnegative");
    GbarSequence gs;
    gs.params = fp;
    gs.omega0 = omega0;
    gs.n_minus = n_minus;
    gs.n_plus = n_plus;
    gs.values.assign(static_cast<std::size_t>(n_minus + n_plus + 1), 0.0);
    const double g0 = omega0 * fp.gbar_star;
    gs.values[static_cast<std::size_t>(n_minus)] = g0;
    double x = g0;
    for (int n = 1; n <= n_plus; ++n) {
        x = std::min(fp.f(x), fp.gbar_star);
        gs.values[static_cast<std::size_t>(n_minus + n)] = x;
    }
    x = g0;
    for (int n = 1; n <= n_minus; ++n) {
        x = fp.f_inverse(x);
        if (x < 1e6 * DBL_MIN)
            throw truncation_error("build_gbar: backward orbit left the representable range at n = -" +
                                   std::to_string(n));
        gs.values[static_cast<std::size_t>(n_minus - n)] = x;
    }
    return gs;
}

// Two-sided exponential enclosure of gbar_n: closed-form lower/upper bounds
// obtained by comparing f with its chord and tangent on each side.
inline std::pair<double, double> step_bounds(int n, const FlowParams& fp, double omega0) {
    const double gs = fp.gbar_star;
    const double Leps = fp.Leps;
    if (n >= 0) {
        const double lo = gs * (1.0 - (1.0 - omega0) * std::pow(1.0 + omega0 - Leps * omega0, n));
        const double hi = gs * (1.0 - (1.0 - omega0) * std::pow(2.0 - Leps, n));
        return {lo, hi};
    }
    const double lo = gs * omega0 * std::pow(Leps, double(n));
    const double root = std::sqrt(Leps * Leps - 4.0 * omega0 * (Leps - 1.0));
    const double hi = gs * omega0 * std::pow(2.0 / (Leps + root), double(-n));
    return {lo, hi};
}

inline std::pair<double, double> step_bounds(int n, const GbarSequence& gs) {
    if (!gs.contains(n)) throw usage_error("step_bounds: index outside stored window");
    return step_bounds(n, gs.params, gs.omega0);
}

// Default two-sided window depth: both tails deep in their exponential
// regimes, ~ e^{-40} relative.
inline int default_window(double eps, int L) {
    const double x = 40.0 / (eps * std::log(double(L)));
    return static_cast<int>(std::ceil(x));
}

}  // namespace rgflow::flow
