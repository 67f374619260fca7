#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "rgflow/errors.hpp"
#include "rgflow/hypergeometric.hpp"

namespace rgflow::models {

// Continuous two-variable toy flow
//   dg/dt  = alpha g - beta g^2,
//   dmu/dt = gamma mu - delta g^2,
// whose connecting orbit is known in closed form.  In the rescaled variables
// s = beta g / alpha, nu = gamma / alpha the orbit's smoothness at s = 0+ is
// carried by the function evaluated in toy_orbit_mu.
struct ToyFlowParams {
    double alpha = 1.0;
    double beta_c = 1.0;
    double gamma_c = 0.0;
    double delta_c = 1.0;
    double nu = 0.0;  // gamma_c / alpha, non-integer

    static ToyFlowParams from_nu(double nu) {
        ToyFlowParams tf;
        if (!(nu > 2.0)) throw domain_error("ToyFlowParams: requires nu > 2");
        if (nu == std::floor(nu))
            throw domain_error("ToyFlowParams: nu must not be an integer (orbit formula valid "
                               "for non-integer nu only)");
        tf.gamma_c = nu;
        tf.nu = nu;
        return tf;
    }
};

// The orbit in rescaled variables:
//   s^nu pi(nu-1)/sin(pi(nu-1)) + s^2/(nu-2) 2F1(1-nu, 2-nu; 3-nu; s).
// The physical orbit carries an extra analytic factor (delta alpha/beta^2)
// (1-s)^{-nu} restored in the comparison below.
inline double toy_orbit_mu(double s, const ToyFlowParams& tf) {
    const double nu = tf.nu;
    if (nu == std::floor(nu))
        throw domain_error("toy_orbit_mu: nu must not be an integer (orbit formula valid for "
                           "non-integer nu only)");
    if (!(s > 0.0 && s < 1.0)) throw domain_error("toy_orbit_mu: requires s in (0,1)");
    const double pi = std::numbers::pi;
    const double homog = std::pow(s, nu) * pi * (nu - 1.0) / std::sin(pi * (nu - 1.0));
    const double partic = s * s / (nu - 2.0) * hyper_2f1(1.0 - nu, 2.0 - nu, 3.0 - nu, s);
    return homog + partic;
}

struct ToyOrbitComparison {
    std::vector<double> s;
    std::vector<double> formula;
    std::vector<double> rk4;  // physical orbit mapped back to rescaled variables
    double max_rel_err = 0.0;
};

// Fixed-step fourth-order Runge-Kutta integration of the physical orbit
// d mu / d g = (gamma mu - delta g^2) / (alpha g - beta g^2), seeded on the
// asymptotic branch at s_lo, then compared against the closed form.
inline ToyOrbitComparison compare_orbit_rk4(const ToyFlowParams& tf, double s_lo = 0.05,
                                            double s_hi = 0.8, int n_samples = 76,
                                            int steps = 60000) {
    if (!(s_lo > 0.0 && s_hi < 1.0 && s_lo < s_hi))
        throw domain_error("compare_orbit_rk4: need 0 < s_lo < s_hi < 1");
    const double nu = tf.nu;
    const double D = tf.delta_c * tf.alpha / (tf.beta_c * tf.beta_c);
    // in the s variable the physical orbit satisfies
    //   d mu / d s = (nu mu - D s^2) / (s (1 - s))
    auto rhs = [&](double s, double mu) { return (nu * mu - D * s * s) / (s * (1.0 - s)); };

    ToyOrbitComparison out;
    const double h = (s_hi - s_lo) / steps;
    const int stride = steps / (n_samples - 1);
    double s = s_lo;
    double mu = D * std::pow(1.0 - s_lo, -nu) * toy_orbit_mu(s_lo, tf);
    auto record = [&](double sv, double muv) {
        const double rescaled = std::pow(1.0 - sv, nu) * muv / D;
        const double fv = toy_orbit_mu(sv, tf);
        out.s.push_back(sv);
        out.formula.push_back(fv);
        out.rk4.push_back(rescaled);
        out.max_rel_err = std::max(out.max_rel_err, std::abs(rescaled - fv) / std::abs(fv));
    };
    record(s, mu);
    for (int i = 1; i <= steps; ++i) {
        const double k1 = rhs(s, mu);
        const double k2 = rhs(s + 0.5 * h, mu + 0.5 * h * k1);
        const double k3 = rhs(s + 0.5 * h, mu + 0.5 * h * k2);
        const double k4 = rhs(s + h, mu + h * k3);
        mu += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        s = s_lo + i * h;
        if (i % stride == 0) record(s, mu);
    }
    return out;
}

}  // namespace rgflow::models
