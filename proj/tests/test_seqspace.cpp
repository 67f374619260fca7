#include <doctest.h>

#include <cmath>
#include <vector>

#include "rgflow/models.hpp"
#include "rgflow/rng.hpp"
#include "rgflow/seqspace.hpp"

using namespace rgflow;
using namespace rgflow::seqspace;
using rgflow::flow::FlowParams;
using rgflow::flow::GbarSequence;
using rgflow::flow::build_gbar;

namespace {

// Minimal test model with (g, mu)-dependent linear remainder map and
// prescribed remainders; constants declared loosely.
class StubModel : public RgModel {
  public:
    StubModel(FlowParams fp, NormWeights nw, double mbar, double rbar, double l0, bool wobble)
        : fp_(fp), nw_(nw), mbar_(mbar), rbar_(rbar), l0_(l0), wobble_(wobble) {
        mc_.B_g = 1.0;
        mc_.B_mu = 1.0;
        mc_.B_Rxi = 1.0;
        mc_.c_R = 0.45;
        mc_.A_mu = 1e6;  // wide open for stub experiments
        mc_.A_R = 1e6;
    }
    std::string name() const override { return "stub"; }
    int r_dim() const override { return 3; }
    Triple xi(double g, double, std::span<const double>) const override {
        Triple t;
        t.g = 0.0;
        t.mu = mbar_;
        t.R = {0.0, rbar_, 0.0};
        (void)g;
        return t;
    }
    void apply_L(double g, double mu, std::span<const double> R,
                 std::span<double> out) const override {
        const double scale = wobble_ ? l0_ * (1.0 + 0.2 * std::tanh(g + 3.0 * mu)) : l0_;
        for (std::size_t j = 0; j < R.size(); ++j) out[j] = scale * R[j];
    }
    double R_norm(std::span<const double> R, double gbar) const override {
        return calibrated_R_norm(R, gbar, nw_);
    }
    const ModelConstants& constants() const override { return mc_; }

  private:
    FlowParams fp_;
    NormWeights nw_;
    double mbar_, rbar_, l0_;
    bool wobble_;
    ModelConstants mc_;
};

struct Setup {
    FlowParams fp = FlowParams::make(2, 0.1, 0.004);
    NormWeights nw = NormWeights::make(2, 0.1);
    GbarSequence gs;
    Setup(int w = 60) { gs = build_gbar(0.3, w, w, fp); }
};

// composed-sum evaluation of the remainder channel, quadratic in the window
std::vector<double> composed_R(const DeviationSequence& ds, const GbarSequence& gs,
                               const RgModel& model, int n) {
    const int rd = ds.r_dim;
    std::vector<double> total(static_cast<std::size_t>(rd), 0.0);
    for (int p = -ds.n_minus; p < n; ++p) {
        const std::size_t ip = ds.idx(p);
        Triple x = model.xi(gs.at(p) + ds.dg[ip], ds.mu[ip], ds.R_at(p));
        std::vector<double> v = x.R, tmp(static_cast<std::size_t>(rd), 0.0);
        for (int j = n - 1; j >= p + 1; --j) {
            const std::size_t ij = ds.idx(j);
            model.apply_L(gs.at(j) + ds.dg[ij], ds.mu[ij], v, tmp);
            v = tmp;
        }
        for (int k = 0; k < rd; ++k) total[static_cast<std::size_t>(k)] += v[static_cast<std::size_t>(k)];
    }
    return total;
}

}  // namespace

TEST_CASE("weighted sup norm") {
    Setup s;
    models::NullModel model(s.fp, s.nw);
    DeviationSequence ds = DeviationSequence::zeros(60, 60, 3);
    CHECK(quadruple_norm(ds, s.gs, s.nw, model) == 0.0);

    ds.mu[ds.idx(5)] = std::pow(s.gs.at(5), 2.0 - s.nw.delta);
    CHECK(quadruple_norm(ds, s.gs, s.nw, model) == doctest::Approx(1.0).epsilon(1e-14));

    Rng rng(10);
    for (std::size_t i = 0; i < ds.dg.size(); ++i) ds.dg[i] = 1e-4 * rng.uniform(-1, 1) * s.gs.at(int(i) - 60);
    ds.dg[ds.idx(0)] = 0.0;
    for (std::size_t i = 0; i < ds.R.size(); ++i) ds.R[i] = 1e-6 * rng.uniform(-1, 1);
    DeviationSequence twice = ds;
    for (double& x : twice.dg) x *= 2.0;
    for (double& x : twice.mu) x *= 2.0;
    for (double& x : twice.R) x *= 2.0;
    CHECK(quadruple_norm(twice, s.gs, s.nw, model) ==
          doctest::Approx(2.0 * quadruple_norm(ds, s.gs, s.nw, model)).epsilon(1e-14));

    DeviationSequence bad = DeviationSequence::zeros(50, 60, 3);
    CHECK_THROWS_AS(quadruple_norm(bad, s.gs, s.nw, model), usage_error);
}

TEST_CASE("calibrated norm family") {
    NormWeights nw = NormWeights::make(2, 0.1);

    SUBCASE("single unit component") {
        std::vector<double> e0 = {1.0, 0.0, 0.0};
        for (double g : {0.2, 1.0, 3.0})
            CHECK(calibrated_R_norm(e0, g, nw) == doctest::Approx(std::max(1.0, g * g)));
        CHECK_THROWS_AS(calibrated_R_norm(e0, 0.0, nw), domain_error);
        std::vector<double> too_long(nw.weight_cap + 2, 1.0);
        CHECK_THROWS_AS(calibrated_R_norm(too_long, 1.0, nw), usage_error);
    }

    SUBCASE("norm growth between consecutive calibrators stays below 3/2") {
        FlowParams fp = FlowParams::make(2, 0.1, 0.004);
        const double gate = std::max(fp.L2eps, std::pow(2.0 - fp.Leps, -0.25));
        REQUIRE(gate <= 1.5);
        Rng rng(77);
        for (int i = 0; i < 1000; ++i) {
            std::vector<double> R = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
            const double gbar = fp.gbar_star * std::exp(rng.uniform(std::log(1e-4), 0.0)) * 0.999;
            CHECK(calibrated_R_norm(R, fp.f(gbar), nw) <=
                  1.5 * calibrated_R_norm(R, gbar, nw) * (1.0 + 1e-12));
        }
    }

    SUBCASE("all calibrated norms are equivalent") {
        Rng rng(78);
        for (int i = 0; i < 200; ++i) {
            std::vector<double> R = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
            const double g1 = std::exp(rng.uniform(std::log(0.01), std::log(10.0)));
            const double g2 = std::exp(rng.uniform(std::log(0.01), std::log(10.0)));
            const double n1 = calibrated_R_norm(R, g1, nw);
            const double n2 = calibrated_R_norm(R, g2, nw);
            // bounded by the largest ratio of corresponding weights
            double bound = 1.0;
            const double h1 = nw.c_norm * std::pow(g1, -0.25), h2 = nw.c_norm * std::pow(g2, -0.25);
            for (int j = 0; j < 3; ++j)
                bound = std::max(bound, g1 * g1 * std::pow(h1, j) / (g2 * g2 * std::pow(h2, j)));
            CHECK(n1 <= bound * n2 * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("sequence map on the degenerate model") {
    Setup s;
    models::NullModel model(s.fp, s.nw);
    DeviationSequence zero = DeviationSequence::zeros(60, 60, 3);
    DeviationSequence out = apply_m(zero, s.gs, s.fp, s.nw, model);
    for (double v : out.dg) CHECK(v == 0.0);
    for (double v : out.mu) CHECK(v == 0.0);
    for (double v : out.R) CHECK(v == 0.0);

    // nonzero input: coupling channel driven by the quadratic term only
    DeviationSequence ds = zero;
    for (int n = -60; n <= 60; ++n) ds.dg[ds.idx(n)] = 0.02 * s.gs.at(n) * ((n % 3) - 1);
    ds.dg[ds.idx(0)] = 0.0;
    out = apply_m(ds, s.gs, s.fp, s.nw, model);
    CHECK(out.dg[out.idx(0)] == 0.0);
    // n = 1 term is -L^{2eps} a dg_0^2 = 0; n = 2 picks up p = 1
    const double y1 = -s.fp.L2eps * s.fp.a * ds.dg[ds.idx(1)] * ds.dg[ds.idx(1)];
    CHECK(out.dg[out.idx(2)] == doctest::Approx(y1).epsilon(1e-14));
    for (double v : out.mu) CHECK(v == 0.0);
}

TEST_CASE("mass channel resums a constant remainder geometrically") {
    Setup s;
    StubModel model(s.fp, s.nw, 0.37, 0.0, 0.4, false);
    DeviationSequence zero = DeviationSequence::zeros(60, 60, 3);
    DeviationSequence out = apply_m(zero, s.gs, s.fp, s.nw, model);
    const double Ls = std::pow(2.0, -0.5 * (3.0 + s.fp.eps));
    const double expected = -0.37 * Ls / (1.0 - Ls);
    for (int n = -60; n <= 20; ++n)
        CHECK(out.mu[out.idx(n)] == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("remainder channel resums geometrically in deep windows") {
    Setup s;
    StubModel model(s.fp, s.nw, 0.0, 0.51, 0.4, false);
    DeviationSequence zero = DeviationSequence::zeros(60, 60, 3);
    DeviationSequence out = apply_m(zero, s.gs, s.fp, s.nw, model);
    for (int n = 0; n <= 60; ++n)
        CHECK(out.R_at(n)[1] == doctest::Approx(0.51 / (1.0 - 0.4)).epsilon(1e-10));
    CHECK(out.R_at(-60)[1] == 0.0);  // left seed
}

TEST_CASE("streamed and composed remainder sums agree") {
    Setup s(25);
    StubModel model(s.fp, s.nw, 0.001, 0.02, 0.35, true);
    Rng rng(5);
    DeviationSequence ds = DeviationSequence::zeros(25, 25, 3);
    for (int n = -25; n <= 25; ++n) {
        ds.dg[ds.idx(n)] = 0.01 * s.gs.at(n) * rng.uniform(-1, 1);
        ds.mu[ds.idx(n)] = 0.01 * rng.uniform(-1, 1);
        for (int j = 0; j < 3; ++j) ds.R_at(n)[static_cast<std::size_t>(j)] = 0.01 * rng.uniform(-1, 1);
    }
    ds.dg[ds.idx(0)] = 0.0;
    DeviationSequence out = apply_m(ds, s.gs, s.fp, s.nw, model);
    for (int n : {-20, -3, 0, 7, 25}) {
        const std::vector<double> direct = composed_R(ds, s.gs, model, n);
        for (int j = 0; j < 3; ++j)
            CHECK(out.R_at(n)[static_cast<std::size_t>(j)] ==
                  doctest::Approx(direct[static_cast<std::size_t>(j)]).epsilon(1e-12));
    }
}

TEST_CASE("domain gate names the violated bound and index") {
    Setup s;
    models::NullModel model(s.fp, s.nw);
    DeviationSequence ds = DeviationSequence::zeros(60, 60, 3);
    ds.mu[ds.idx(-7)] = 10.0 * std::pow(s.gs.at(-7), 2.0 - s.nw.delta);
    CHECK_THROWS_WITH_AS(apply_m(ds, s.gs, s.fp, s.nw, model), doctest::Contains("n=-7"),
                         domain_error);
    ds.mu[ds.idx(-7)] = 0.0;
    ds.dg[ds.idx(12)] = 0.9 * s.gs.at(12);
    CHECK_THROWS_WITH_AS(apply_m(ds, s.gs, s.fp, s.nw, model), doctest::Contains("A_g"),
                         domain_error);
}

TEST_CASE("recursion defect") {
    Setup s;
    models::NullModel model(s.fp, s.nw);
    DeviationSequence zero = DeviationSequence::zeros(60, 60, 3);
    CHECK(recursion_residual(zero, s.gs, s.fp, s.nw, model, 5, 5) == 0.0);

    // a solved fixed point has defect at rounding level
    SolverConfig cfg;
    auto [ds, rep] = solve_fixed_point(zero, cfg, s.gs, s.fp, s.nw, model);
    CHECK(rep.final_residual <= cfg.tol);

    // perturbation of one entry grows the defect linearly
    models::PolyToyModel poly(models::PolyToyModel::default_params(s.fp, s.nw, false, nullptr),
                              s.fp, s.nw);
    auto [pds, prep] = solve_fixed_point(DeviationSequence::zeros(60, 60, 3), cfg, s.gs, s.fp,
                                         s.nw, poly);
    REQUIRE(prep.converged);
    double res[2];
    int k = 0;
    for (double delta : {1e-6, 1e-7}) {
        DeviationSequence p = pds;
        p.mu[p.idx(3)] += delta;
        res[k++] = recursion_residual(p, s.gs, s.fp, s.nw, poly, 5, 5);
    }
    CHECK(res[0] / res[1] == doctest::Approx(10.0).epsilon(0.05));
}

TEST_CASE("solver on the degenerate model") {
    Setup s;
    models::NullModel model(s.fp, s.nw);
    SolverConfig cfg;
    auto [ds, rep] = solve_fixed_point(DeviationSequence::zeros(60, 60, 3), cfg, s.gs, s.fp,
                                       s.nw, model);
    CHECK(rep.converged);
    CHECK(rep.iterations == 1);
    for (double v : ds.dg) CHECK(v == 0.0);
    for (double v : ds.mu) CHECK(v == 0.0);
    for (double v : ds.R) CHECK(v == 0.0);
}

TEST_CASE("solver on the polynomial model matches its closed-form fixed point") {
    const FlowParams fp = FlowParams::make(2, 0.1, 0.004);
    const NormWeights nw = NormWeights::make(2, 0.1);
    const int w = flow::default_window(0.1, 2);
    const GbarSequence gs = build_gbar(0.3, w, w, fp);
    models::PolyToyModel model(models::PolyToyModel::default_params(fp, nw, false, nullptr), fp,
                               nw);
    SolverConfig cfg;
    auto [ds, rep] = solve_fixed_point(DeviationSequence::zeros(w, w, model.r_dim()), cfg, gs,
                                       fp, nw, model);
    REQUIRE(rep.converged);
    CHECK(ds.dg[ds.idx(0)] == 0.0);
    for (double c : rep.measured_contraction) CHECK(c <= 0.5);

    const Triple star = model.fixed_point();
    const int n = w - default_margin_right(fp) - 5;
    const double g = gs.at(n);
    CHECK(std::abs(gs.at(n) + ds.dg[ds.idx(n)] - star.g) * std::pow(g, -1.5) < 1e-8);
    CHECK(std::abs(ds.mu[ds.idx(n)] - star.mu) * std::pow(g, -(2.0 - nw.delta)) < 1e-8);
    std::vector<double> dr(3, 0.0);
    for (int j = 0; j < 3; ++j)
        dr[static_cast<std::size_t>(j)] = ds.R_at(n)[static_cast<std::size_t>(j)] - star.R[static_cast<std::size_t>(j)];
    CHECK(model.R_norm(dr, g) * std::pow(g, -(2.75 - nw.eta)) < 1e-8);
}

TEST_CASE("solver guards") {
    Setup s;
    models::NullModel model(s.fp, s.nw);
    DeviationSequence bad = DeviationSequence::zeros(60, 60, 3);
    bad.dg[bad.idx(0)] = 1e-9;
    SolverConfig cfg;
    CHECK_THROWS_AS(solve_fixed_point(bad, cfg, s.gs, s.fp, s.nw, model), usage_error);

    DeviationSequence big = DeviationSequence::zeros(60, 60, 3);
    big.mu[big.idx(2)] = 0.9 * std::pow(s.gs.at(2), 2.0 - s.nw.delta);
    CHECK_THROWS_AS(solve_fixed_point(big, cfg, s.gs, s.fp, s.nw, model), domain_error);

    // an escape is reported as divergence: stub with a huge constant remainder
    StubModel wild(s.fp, s.nw, 0.0, 1e7, 0.4, false);
    SolverConfig tight;
    tight.beta = 1e-3;
    CHECK_THROWS_AS(
        solve_fixed_point(DeviationSequence::zeros(60, 60, 3), tight, s.gs, s.fp, s.nw, wild),
        divergence_error);
}

TEST_CASE("the map sends the ball into its sixth at small eps") {
    // deep in the small-eps regime the image of the beta-ball contracts into
    // the beta/6-ball; checked empirically on the degenerate model
    const FlowParams fp = FlowParams::make(2, 0.01, std::log(2.0) / 177.65);
    const NormWeights nw = NormWeights::make(2, 0.01);
    const int w = flow::default_window(0.01, 2);
    const GbarSequence gs = build_gbar(0.3, w, w, fp);
    models::NullModel model(fp, nw);
    const double beta = SolverConfig::default_beta(0.3);
    Rng rng(99);
    for (int trial = 0; trial < 8; ++trial) {
        DeviationSequence ds = DeviationSequence::zeros(w, w, 3);
        for (int n = -w; n <= w; ++n) {
            const double g = gs.at(n);
            ds.dg[ds.idx(n)] = 0.9 * beta * std::pow(g, nw.e(n)) * rng.uniform(-1, 1);
            ds.mu[ds.idx(n)] = 0.9 * beta * std::pow(g, 2.0 - nw.delta) * rng.uniform(-1, 1);
        }
        ds.dg[ds.idx(0)] = 0.0;
        REQUIRE(quadruple_norm(ds, gs, nw, model) < beta);
        const DeviationSequence out = apply_m(ds, gs, fp, nw, model);
        CHECK(quadruple_norm(out, gs, nw, model) <= beta / 6.0);
    }
}

TEST_CASE("solved crossover is monotone where resolvable") {
    const FlowParams fp = FlowParams::make(2, 0.1, 0.004);
    const NormWeights nw = NormWeights::make(2, 0.1);
    const int w = flow::default_window(0.1, 2);
    const GbarSequence gs = build_gbar(0.3, w, w, fp);
    models::PolyToyModel model(models::PolyToyModel::default_params(fp, nw, false, nullptr), fp,
                               nw);
    SolverConfig cfg;
    auto [ds, rep] = solve_fixed_point(DeviationSequence::zeros(w, w, 3), cfg, gs, fp, nw, model);
    REQUIRE(rep.converged);
    for (int n = -w; n < w; ++n) {
        const double cur = gs.at(n) + ds.dg[ds.idx(n)];
        const double next = gs.at(n + 1) + ds.dg[ds.idx(n + 1)];
        CHECK(next >= cur);
        if (fp.gbar_star - gs.at(n) > 1e-13 * fp.gbar_star) CHECK(next > cur);
    }
}

TEST_CASE("default ball radius follows the explicit constraint") {
    const double omega0 = 0.3;
    const double full = (1.0 - 2.0 * omega0) / (6.0 * omega0) * std::exp(-2.0 * omega0 / 0.7);
    CHECK(SolverConfig::default_beta(omega0) == doctest::Approx(0.5 * full));
    CHECK_THROWS_AS(SolverConfig::default_beta(0.6), domain_error);
}
