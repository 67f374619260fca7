#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "rgflow/errors.hpp"
#include "rgflow/flow.hpp"
#include "rgflow/rng.hpp"

namespace rgflow {

// Quantitative constants a model declares about itself.  A_* bound the
// admissible domain around the calibrator sequence; B_* bound the remainder
// maps on that domain; c_R bounds the contraction of the linear remainder
// direction measured between consecutive calibrated norms.
struct ModelConstants {
    double A_g = 0.5;
    double A_mu = 1.0;
    double A_R = 1.0;
    double B_g = 0.0;
    double B_mu = 0.0;
    double B_Rxi = 0.0;
    double c_R = 0.5;
};

struct Triple {
    double g = 0.0;
    double mu = 0.0;
    std::vector<double> R;
};

// One-step model contract: the full step is
//   g'  = L^eps g - L^{2 eps} a g^2 + xi_g
//   mu' = L^{(3+eps)/2} mu + xi_mu
//   R'  = Lmap^{(g,mu)} R + xi_R
// with xi small on the declared domain and Lmap contractive.  All calls must
// be pure and reentrant.
class RgModel {
  public:
    virtual ~RgModel() = default;
    virtual std::string name() const = 0;
    virtual int r_dim() const = 0;
    virtual Triple xi(double g, double mu, std::span<const double> R) const = 0;
    virtual void apply_L(double g, double mu, std::span<const double> R,
                         std::span<double> out) const = 0;
    virtual double R_norm(std::span<const double> R, double gbar) const = 0;
    virtual const ModelConstants& constants() const = 0;

    virtual bool has_fixed_point() const { return false; }
    virtual Triple fixed_point() const {
        throw usage_error(name() + ": no closed-form fixed point exposed");
    }
};

// Measured sup of |||L R|||_{f(gbar)} / |||R|||_{gbar} over remainder
// directions and calibrators; the declared contraction must cover the norm
// change between consecutive calibrators.  A deterministic sweep over a
// calibrator grid with the coordinate directions backs up the random draws.
inline double measure_contraction(const RgModel& model, const flow::FlowParams& fp, Rng& rng,
                                  int samples = 400) {
    const int rd = model.r_dim();
    std::vector<double> R(static_cast<std::size_t>(rd)), LR(static_cast<std::size_t>(rd));
    double worst = 0.0;
    auto probe = [&](double gbar, double g) {
        model.apply_L(g, 0.0, R, LR);
        const double denom = model.R_norm(R, gbar);
        if (denom > 0.0) worst = std::max(worst, model.R_norm(LR, fp.f(gbar)) / denom);
    };
    for (int i = 0; i <= 200; ++i) {
        const double gbar = fp.gbar_star * std::exp(std::log(1e-4) * (1.0 - i / 200.0)) * 0.999;
        for (int j = 0; j <= rd; ++j) {
            for (int k = 0; k < rd; ++k)
                R[static_cast<std::size_t>(k)] = (j == rd) ? 1.0 : (k == j ? 1.0 : 0.0);
            probe(gbar, gbar);
        }
    }
    for (int s = 0; s < samples; ++s) {
        const double gbar = fp.gbar_star * std::exp(rng.uniform(std::log(1e-4), std::log(0.999)));
        for (double& r : R) r = rng.uniform(-1.0, 1.0);
        probe(gbar, gbar * (1.0 + 0.45 * rng.uniform(-1.0, 1.0)));
    }
    return worst;
}

}  // namespace rgflow
