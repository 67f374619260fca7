#include <doctest.h>

#include <cmath>
#include <vector>

#include "rgflow/hier.hpp"
#include "rgflow/models.hpp"
#include "rgflow/seqspace.hpp"

using namespace rgflow;
using namespace rgflow::models;

TEST_CASE("wick basis algebra") {
    const double sig2 = 1.7;
    // B_2 = x^2 - sig2, B_4 = x^4 - 6 sig2 x^2 + 3 sig2^2
    CHECK(hier_detail::wick_monomial(2, 0.9, sig2) == doctest::Approx(0.81 - sig2).epsilon(1e-14));
    CHECK(hier_detail::wick_monomial(4, 0.9, sig2) ==
          doctest::Approx(std::pow(0.9, 4) - 6 * sig2 * 0.81 + 3 * sig2 * sig2).epsilon(1e-13));

    // round trip monomial <-> wick
    std::vector<double> mono(11, 0.0);
    mono[2] = 0.4;
    mono[6] = -1.3;
    mono[10] = 0.02;
    std::vector<double> wick = hier_detail::monomial_to_wick(mono, sig2);
    std::vector<double> back(11, 0.0);
    for (int k = 0; k <= 10; ++k)
        if (wick[static_cast<std::size_t>(k)] != 0.0)
            hier_detail::add_wick_as_monomials(k, wick[static_cast<std::size_t>(k)], sig2, back);
    for (int d = 0; d <= 10; ++d)
        CHECK(back[static_cast<std::size_t>(d)] ==
              doctest::Approx(mono[static_cast<std::size_t>(d)]).epsilon(1e-12));
}

TEST_CASE("covariance polynomial of the wick exponential algebra") {
    // Var(B_2(s phi + zeta)) = 4 sigma^2 s^2 phi^2 + 2 sigma^4
    const double s = 0.6, sigma2 = 1.0;
    const double sig2hat = sigma2 / (1.0 - s * s);
    std::vector<double> p = hier_detail::cov_poly(2, 2, s, sigma2, sig2hat);
    CHECK(p[0] == doctest::Approx(2.0 * sigma2 * sigma2).epsilon(1e-14));
    CHECK(p[2] == doctest::Approx(4.0 * sigma2 * s * s).epsilon(1e-14));

    // cross-check Cov(B_2, B_4) by Gauss-Hermite sampling
    std::vector<double> p24 = hier_detail::cov_poly(2, 4, s, sigma2, sig2hat);
    GaussHermiteRule rule(80);
    for (double phi : {0.0, 0.7, 1.9}) {
        const double m2 = gauss_expectation(rule, sigma2, [&](double z) {
            return hier_detail::wick_monomial(2, s * phi + z, sig2hat);
        });
        const double m4 = gauss_expectation(rule, sigma2, [&](double z) {
            return hier_detail::wick_monomial(4, s * phi + z, sig2hat);
        });
        const double m24 = gauss_expectation(rule, sigma2, [&](double z) {
            return hier_detail::wick_monomial(2, s * phi + z, sig2hat) *
                   hier_detail::wick_monomial(4, s * phi + z, sig2hat);
        });
        double poly = 0.0;
        for (std::size_t d = 0; d < p24.size(); ++d) poly += p24[d] * std::pow(phi, double(d));
        CHECK(m24 - m2 * m4 == doctest::Approx(poly).epsilon(1e-10));
    }
}

TEST_CASE("one-block step basics") {
    HierStepper st(2, 0.1);

    SUBCASE("free potential is a fixed point") {
        std::vector<double> zero(st.n_wick(), 0.0);
        const std::vector<double> out = st.raw_step(zero);
        for (double v : out) CHECK(v == 0.0);
    }

    SUBCASE("linearization multipliers") {
        for (int k : {2, 4, 6, 8}) {
            const double expected = std::pow(2.0, 3.0 - k * (3.0 - 0.1) / 4.0);
            CHECK(std::abs(st.lambda_k(k) - expected) < 1e-14);
            CHECK(std::abs(st.measure_multiplier(k) - expected) < 1e-4);
        }
        CHECK_THROWS_AS(st.measure_multiplier(5), usage_error);
    }

    SUBCASE("snapshot is positive, even, and round-trips") {
        std::vector<double> c(st.n_wick(), 0.0);
        c[0] = -2e-4;  // mass
        c[1] = 8e-4;   // coupling
        c[2] = 1e-6;
        const HierPotential pot = st.potential(c);
        const std::size_t n = pot.phi.size();
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(pot.exp_minus_v[i] > 0.0);
            CHECK(pot.exp_minus_v[i] ==
                  doctest::Approx(pot.exp_minus_v[n - 1 - i]).epsilon(1e-12));
        }
        CHECK(std::abs(pot.phi.back() - 8.0 * std::sqrt(st.sigma_ref2())) < 1e-12);
        // recover the coefficients from the sampled Boltzmann factor
        std::vector<double> vvals(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) vvals[i] = -std::log(pot.exp_minus_v[i]);
        double resid = 0.0;
        const std::vector<double> rec = st.project(vvals, &resid);
        for (int k = 0; k < st.n_wick(); ++k)
            CHECK(std::abs(rec[static_cast<std::size_t>(k)] - c[static_cast<std::size_t>(k)]) < 1e-8);
        CHECK(resid < 1e-10);
    }

    SUBCASE("pure coupling runs down the expected beta function") {
        st.calibrate_g_quadratics();
        const double a_fit = -st.quadratic_from_g(1);
        CHECK(a_fit > 0.0);
        CHECK(std::abs(a_fit / st.a_hier_analytic() - 1.0) < 0.01);
        // degree-8 and 10 channels receive nothing at second order from g^2
        CHECK(std::abs(st.quadratic_from_g(3)) < 1e-3 * a_fit);
    }
}

TEST_CASE("hierarchical model") {
    seqspace::NormWeights nw = seqspace::NormWeights::make(2, 0.1);
    HierModel hm(2, 0.1, nw);

    SUBCASE("declared constants") {
        CHECK(hm.a_hier() > 0.0);
        CHECK(hm.flow_params().gbar_star ==
              doctest::Approx((hm.flow_params().Leps - 1.0) / hm.a_hier()).epsilon(1e-12));
        CHECK(hm.constants().c_R <= 0.5);
    }

    SUBCASE("remainder of the coupling channel is third order") {
        std::vector<double> zero(hm.r_dim(), 0.0);
        double lo = 1e300, hi = 0.0;
        for (double g = 1e-4; g <= 1.001e-3; g *= std::pow(10.0, 0.25)) {
            const double ratio = std::abs(hm.xi(g, 0.0, zero).g) / (g * g * g);
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
        }
        CHECK(hi / lo < 2.0);
    }

    SUBCASE("normal-form shift keeps the remainder inside its envelope deep down") {
        std::vector<double> zero(hm.r_dim(), 0.0);
        for (double gbar : {1e-6, 1e-10, 1e-16}) {
            const Triple t = hm.xi(gbar, 0.0, zero);
            CHECK(hm.R_norm(t.R, gbar) < std::pow(gbar, 2.75) * hm.constants().B_Rxi);
        }
    }

    SUBCASE("surrogate and blended evaluation coincide below the blend window") {
        std::vector<double> R = {1e-22, -2e-23, 1e-24};
        const Triple a = hm.xi(1e-7, 2e-14, R);
        const Triple b = hm.xi_surrogate(1e-7, 2e-14, R);
        CHECK(a.g == b.g);
        CHECK(a.mu == b.mu);
        CHECK(a.R[0] == b.R[0]);
    }

    SUBCASE("contract audit") {
        AuditReport rep = audit_model(hm, hm.flow_params(), nw, 400, 33);
        CHECK(rep.pass);
    }
}

TEST_CASE("hierarchical crossover at coarse parameters") {
    // quick end-to-end smoke at eps = 0.2; the acceptance suite runs 0.1
    seqspace::NormWeights nw = seqspace::NormWeights::make(2, 0.2);
    HierModel hm(2, 0.2, nw);
    const flow::FlowParams fp = hm.flow_params();
    const int wl = flow::default_window(0.2, 2);
    const int wr = static_cast<int>(
        std::ceil(std::log(0.7e13) / (-std::log(2.0 - fp.Leps))));
    const flow::GbarSequence gs = flow::build_gbar(0.3, wl, std::min(wl, wr), fp);
    seqspace::SolverConfig cfg;
    cfg.beta = 1e4;
    cfg.tol = 1e-8;
    cfg.diff_tol = 1e-8;
    auto [ds, rep] = seqspace::solve_fixed_point(
        seqspace::DeviationSequence::zeros(gs.n_minus, gs.n_plus, hm.r_dim()), cfg, gs, fp, nw,
        hm);
    CHECK(rep.converged);
    CHECK(rep.final_residual < 1e-8);
    for (int n = -gs.n_minus; n < gs.n_plus; ++n)
        CHECK(gs.at(n + 1) + ds.dg[ds.idx(n + 1)] > gs.at(n) + ds.dg[ds.idx(n)]);
}
