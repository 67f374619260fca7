#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>

#include "rgflow/errors.hpp"

namespace rgflow {

// Deterministic random source.  std::normal_distribution is
// implementation-defined, so normals are produced by Box-Muller from the
// raw mt19937_64 stream; results are identical across platforms.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() {  // in (0,1)
        const std::uint64_t u = gen_() >> 11;
        return (static_cast<double>(u) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Correlated pair with covariance [[c0, cxy], [cxy, c0]].
    std::pair<double, double> bivariate_normal(double c0, double cxy) {
        if (!(c0 > 0.0) || std::abs(cxy) > c0)
            throw domain_error("bivariate_normal: covariance not positive semidefinite");
        const double z1 = normal();
        const double z2 = normal();
        const double x = std::sqrt(c0) * z1;
        const double y = (cxy / std::sqrt(c0)) * z1 + std::sqrt(c0 - cxy * cxy / c0) * z2;
        return {x, y};
    }

  private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace rgflow
