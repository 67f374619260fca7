#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "rgflow/calibrated_norm.hpp"
#include "rgflow/errors.hpp"
#include "rgflow/flow.hpp"
#include "rgflow/kernels.hpp"
#include "rgflow/rg_model.hpp"
#include "rgflow/rng.hpp"

namespace rgflow::models {

using seqspace::NormWeights;
using seqspace::calibrated_R_norm;

// Degenerate model: all remainders vanish, the linear remainder map is a
// scalar contraction.  Its unique fixed point is the zero sequence.
class NullModel : public RgModel {
  public:
    NullModel(const flow::FlowParams& fp, const NormWeights& nw, double l_scale = 0.40,
              int r_dim = 3, unsigned seed = 12345)
        : fp_(fp), nw_(nw), l_scale_(l_scale), r_dim_(r_dim) {
        Rng rng(seed);
        mc_.B_g = mc_.B_mu = mc_.B_Rxi = 0.0;
        mc_.c_R = 1.05 * measure_contraction(*this, fp_, rng, 1000);
    }

    std::string name() const override { return "null"; }
    int r_dim() const override { return r_dim_; }

    Triple xi(double, double, std::span<const double>) const override {
        Triple t;
        t.R.assign(static_cast<std::size_t>(r_dim_), 0.0);
        return t;
    }

    void apply_L(double, double, std::span<const double> R, std::span<double> out) const override {
        for (std::size_t j = 0; j < R.size(); ++j) out[j] = l_scale_ * R[j];
    }

    double R_norm(std::span<const double> R, double gbar) const override {
        return calibrated_R_norm(R, gbar, nw_);
    }

    const ModelConstants& constants() const override { return mc_; }

    bool has_fixed_point() const override { return true; }
    Triple fixed_point() const override {
        Triple t;
        t.R.assign(static_cast<std::size_t>(r_dim_), 0.0);
        return t;
    }

  private:
    flow::FlowParams fp_;
    NormWeights nw_;
    double l_scale_;
    int r_dim_;
    ModelConstants mc_;
};

// Polynomial toy model with closed-form fixed point:
//   xi_g = theta_g g^3, xi_mu = -L^{2 eps} b g^2, xi_R = theta_R g^3 e_1,
//   Lmap = l_scale * identity on a 3-dimensional remainder space.
class PolyToyModel : public RgModel {
  public:
    struct Params {
        double theta_g = 0.0;
        double theta_R = 0.0;
        double b = 0.0;
        double l_scale = 0.40;
    };

    // Defaults exercise every remainder channel at a few percent of the
    // leading terms, sized so that the solved fixed point sits well inside
    // the solver ball and the map stays a measured 1/2-contraction.
    static Params default_params(const flow::FlowParams& fp, const NormWeights& nw, bool use_b,
                                 const kernels::KernelSet* ks) {
        Params p;
        const double gs = fp.gbar_star;
        p.theta_g = 0.03 * (fp.Leps - 1.0) / (gs * gs);
        const double e1_norm = std::max(nw.h_star, nw.c_norm * std::pow(gs, 1.75));
        p.theta_R = 0.02 * (1.0 - p.l_scale) * std::pow(gs, 2.75 - nw.eta) / (gs * gs * gs * e1_norm);
        if (use_b) {
            if (!ks) throw usage_error("poly model: use_b requires a kernel set");
            p.b = ks->b_coeff();
        } else {
            const double Lshalf = std::pow(double(fp.L), 0.5 * (3.0 + fp.eps));
            p.b = 0.02 * (Lshalf - 1.0) * std::pow(gs, -nw.delta) / fp.L2eps;
        }
        return p;
    }

    PolyToyModel(Params p, const flow::FlowParams& fp, const NormWeights& nw,
                 unsigned seed = 20240)
        : p_(p), fp_(fp), nw_(nw) {
        Rng rng(seed);
        measure_constants(rng);
    }

    std::string name() const override { return "poly"; }
    int r_dim() const override { return 3; }

    Triple xi(double g, double mu, std::span<const double>) const override {
        (void)mu;
        Triple t;
        t.g = p_.theta_g * g * g * g;
        t.mu = -fp_.L2eps * p_.b * g * g;
        t.R.assign(3, 0.0);
        t.R[1] = p_.theta_R * g * g * g;
        return t;
    }

    void apply_L(double, double, std::span<const double> R, std::span<double> out) const override {
        for (std::size_t j = 0; j < R.size(); ++j) out[j] = p_.l_scale * R[j];
    }

    double R_norm(std::span<const double> R, double gbar) const override {
        return calibrated_R_norm(R, gbar, nw_);
    }

    const ModelConstants& constants() const override { return mc_; }

    bool has_fixed_point() const override { return true; }

    // g* is the root of (L^eps - 1) g - L^{2 eps} a g^2 + theta_g g^3 near
    // gbar_star; mu* and R* follow by solving their linear fixed point
    // equations.
    Triple fixed_point() const override {
        double g = fp_.gbar_star;
        for (int it = 0; it < 200; ++it) {
            const double F = (fp_.Leps - 1.0) * g - fp_.L2eps * fp_.a * g * g +
                             p_.theta_g * g * g * g;
            const double dF = (fp_.Leps - 1.0) - 2.0 * fp_.L2eps * fp_.a * g +
                              3.0 * p_.theta_g * g * g;
            const double step = F / dF;
            g -= step;
            if (std::abs(step) <= 1e-15 * std::abs(g)) break;
        }
        Triple t;
        t.g = g;
        const double Lshalf = std::pow(double(fp_.L), 0.5 * (3.0 + fp_.eps));
        t.mu = fp_.L2eps * p_.b * g * g / (Lshalf - 1.0);
        t.R.assign(3, 0.0);
        t.R[1] = p_.theta_R * g * g * g / (1.0 - p_.l_scale);
        return t;
    }

    const Params& params() const { return p_; }

  private:
    void measure_constants(Rng& rng) {
        double worst_g = 0.0, worst_mu = 0.0, worst_R = 0.0, worst_at = 0.0;
        for (int s = 0; s < 600; ++s) {
            const double gbar =
                fp_.gbar_star * std::exp(rng.uniform(std::log(1e-3), std::log(0.999)));
            const double g = gbar * (1.0 + mc_.A_g * rng.uniform(-1.0, 1.0));
            const Triple t = xi(g, 0.0, {});
            const double rg = std::abs(t.g) / std::pow(gbar, 2.75 - nw_.eta);
            const double rm = std::abs(t.mu) / (gbar * gbar);
            const double rr = R_norm(t.R, gbar) / std::pow(gbar, 2.75);
            if (rg > worst_g) {
                worst_g = rg;
                worst_at = gbar;
            }
            worst_mu = std::max(worst_mu, rm);
            worst_R = std::max(worst_R, rr);
        }
        // reference cap: remainders may not exceed unit-constant bounds
        if (worst_g > 1.0 || worst_mu > 1.0 || worst_R > 1.0)
            throw numerical_error(
                "poly model: remainder exceeds the unit contract bound; worst gbar = " +
                std::to_string(worst_at));
        mc_.B_g = 2.0 * worst_g;
        mc_.B_mu = 2.0 * worst_mu;
        mc_.B_Rxi = 2.0 * worst_R;
        mc_.c_R = 1.05 * measure_contraction(*this, fp_, rng, 1000);
        if (mc_.c_R > 0.5)
            throw numerical_error("poly model: measured contraction exceeds 1/2");
    }

    Params p_;
    flow::FlowParams fp_;
    NormWeights nw_;
    ModelConstants mc_;
};

inline PolyToyModel poly_toy_model(double theta_g, double theta_R, bool use_b,
                                   const flow::FlowParams& fp, const NormWeights& nw,
                                   const kernels::KernelSet* ks = nullptr, double b_scalar = 0.0) {
    PolyToyModel::Params p;
    p.theta_g = theta_g;
    p.theta_R = theta_R;
    p.b = use_b ? (ks ? ks->b_coeff()
                      : throw usage_error("poly_toy_model: use_b requires a kernel set"))
                : b_scalar;
    return PolyToyModel(p, fp, nw);
}

// Contract audit: sampled domain points must satisfy the declared bounds.
// Points outside a model's representation-validity region (it may throw a
// numerical_error there) are counted and excluded.
struct AuditReport {
    int samples = 0;
    int rejected = 0;
    double worst_xi_g = 0.0;    // |xi_g| / (B_g gbar^{11/4-eta})
    double worst_xi_mu = 0.0;   // |xi_mu| / (B_mu gbar^2)
    double worst_xi_R = 0.0;    // |||xi_R||| / (B_Rxi gbar^{11/4})
    double measured_c_R = 0.0;
    double declared_c_R = 0.0;
    bool pass = false;
};

inline AuditReport audit_model(const RgModel& model, const flow::FlowParams& fp,
                               const NormWeights& nw, int samples, unsigned seed) {
    Rng rng(seed);
    const ModelConstants& mc = model.constants();
    AuditReport rep;
    rep.samples = samples;
    const int rd = model.r_dim();
    std::vector<double> R(static_cast<std::size_t>(rd));
    for (int s = 0; s < samples; ++s) {
        const double gbar = fp.gbar_star * std::exp(rng.uniform(std::log(1e-3), std::log(0.999)));
        const double g = gbar * (1.0 + mc.A_g * 0.999 * rng.uniform(-1.0, 1.0));
        const double mu = mc.A_mu * 0.999 * std::pow(gbar, 2.0 - nw.delta) * rng.uniform(-1.0, 1.0);
        for (double& r : R) r = rng.uniform(-1.0, 1.0);
        const double rn = model.R_norm(R, gbar);
        if (rn > 0.0) {
            const double scale = mc.A_R * 0.999 * std::pow(gbar, 2.75 - nw.eta) / rn;
            for (double& r : R) r *= scale * rng.uniform(0.0, 1.0);
        }
        try {
            const Triple t = model.xi(g, mu, R);
            if (mc.B_g > 0.0)
                rep.worst_xi_g = std::max(rep.worst_xi_g,
                                          std::abs(t.g) / (mc.B_g * std::pow(gbar, 2.75 - nw.eta)));
            if (mc.B_mu > 0.0)
                rep.worst_xi_mu =
                    std::max(rep.worst_xi_mu, std::abs(t.mu) / (mc.B_mu * gbar * gbar));
            if (mc.B_Rxi > 0.0)
                rep.worst_xi_R = std::max(
                    rep.worst_xi_R, model.R_norm(t.R, gbar) / (mc.B_Rxi * std::pow(gbar, 2.75)));
        } catch (const numerical_error&) {
            ++rep.rejected;
        }
    }
    rep.measured_c_R = measure_contraction(model, fp, rng, 1000);
    rep.declared_c_R = mc.c_R;
    rep.pass = rep.worst_xi_g <= 1.0 && rep.worst_xi_mu <= 1.0 && rep.worst_xi_R <= 1.0 &&
               rep.measured_c_R <= rep.declared_c_R + 1e-12;
    return rep;
}

}  // namespace rgflow::models
