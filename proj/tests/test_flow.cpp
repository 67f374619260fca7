#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rgflow/flow.hpp"

using namespace rgflow;
using namespace rgflow::flow;

namespace {
FlowParams fp_default() { return FlowParams::make(2, 0.1, 0.004); }
}  // namespace

TEST_CASE("flow parameter validation") {
    CHECK_THROWS_AS(FlowParams::make(1, 0.1, 0.004), domain_error);
    CHECK_THROWS_AS(FlowParams::make(2, 0.1, -1.0), domain_error);
    CHECK_THROWS_AS(FlowParams::make(2, 1.2, 0.004), domain_error);  // L^eps >= 2
    CHECK_THROWS_AS(FlowParams::make(2, 0.0, 0.004), domain_error);  // L^eps <= 1
}

TEST_CASE("one-step map and its fixed points") {
    const FlowParams fp = fp_default();
    CHECK(fp.f(0.0) == 0.0);
    CHECK(std::abs(fp.f(fp.gbar_star) - fp.gbar_star) <= 1e-14 * fp.gbar_star);
    CHECK(std::abs(fp.f_prime(fp.gbar_star) - (2.0 - fp.Leps)) < 1e-12);
    CHECK(fp.f_prime(0.0) == fp.Leps);
    CHECK_THROWS_AS(fp.f(-0.1 * fp.gbar_star), domain_error);
    CHECK_THROWS_AS(fp.f(1.1 * fp.gbar_star), domain_error);

    // closed form for gbar_star cross-checked by forward iteration
    const double manual = (std::pow(2.0, 0.1) - 1.0) / (std::pow(2.0, 0.2) * 0.004);
    CHECK(std::abs(fp.gbar_star - manual) < 1e-12 * manual);
    double x = 0.3 * fp.gbar_star;
    for (int i = 0; i < 4000; ++i) x = fp.f(x);
    CHECK(std::abs(x - fp.gbar_star) < 1e-10 * fp.gbar_star);
}

TEST_CASE("backward map is the smaller quadratic root") {
    const FlowParams fp = fp_default();
    CHECK(fp.f_inverse(0.0) == 0.0);
    for (int i = 1; i <= 100; ++i) {
        const double y = fp.gbar_star * i / 101.0;
        CHECK(std::abs(fp.f(fp.f_inverse(y)) - y) <= 1e-12 * fp.gbar_star);
    }
    const double omega0 = 0.37;
    const double root = std::sqrt(fp.L2eps - 4.0 * omega0 * (fp.Leps - 1.0));
    const double om_minus1 = (fp.Leps - root) / (2.0 * (fp.Leps - 1.0));
    CHECK(std::abs(fp.f_inverse(omega0 * fp.gbar_star) / fp.gbar_star - om_minus1) < 1e-12);
}

TEST_CASE("two-sided orbit construction") {
    const FlowParams fp = fp_default();
    const GbarSequence gs = build_gbar(0.3, 300, 300, fp);

    CHECK(gs.at(0) == 0.3 * fp.gbar_star);
    const double om1 = fp.Leps * 0.3 - fp.Leps * 0.09 + 0.09;
    CHECK(std::abs(gs.at(1) / fp.gbar_star - om1) < 1e-13);

    for (int n = -300; n < 300; ++n) {
        CHECK(gs.at(n + 1) > gs.at(n));
        CHECK(gs.at(n) > 0.0);
        CHECK(gs.at(n) < fp.gbar_star);
        const double ratio = gs.at(n + 1) / gs.at(n);
        CHECK(ratio > 2.0 - fp.Leps);
        CHECK(ratio < fp.Leps);
    }
    CHECK_THROWS_AS(gs.at(301), usage_error);
    CHECK_THROWS_AS(build_gbar(1.2, 10, 10, fp), domain_error);
    CHECK_THROWS_AS(build_gbar(0.3, 40000, 10, FlowParams::make(2, 0.3, 0.004)),
                    truncation_error);
}

TEST_CASE("two-sided exponential enclosure") {
    for (int L : {2, 3}) {
        for (double eps : {0.02, 0.05, 0.1}) {
            const FlowParams fp = FlowParams::make(L, eps, std::log(double(L)) / 177.65);
            for (double omega0 : {0.1, 0.3, 0.49}) {
                const GbarSequence gs = build_gbar(omega0, 50, 50, fp);
                const double slack = 1e-12 * fp.gbar_star;
                for (int n = -50; n <= 50; ++n) {
                    const auto [lo, hi] = step_bounds(n, gs);
                    CHECK(lo <= gs.at(n) + slack);
                    CHECK(gs.at(n) <= hi + slack);
                }
            }
        }
    }
}

TEST_CASE("bounds collapse at the anchor") {
    const FlowParams fp = fp_default();
    const auto [lo, hi] = step_bounds(0, fp, 0.3);
    CHECK(lo == doctest::Approx(0.3 * fp.gbar_star).epsilon(1e-15));
    CHECK(hi == doctest::Approx(0.3 * fp.gbar_star).epsilon(1e-15));
}

TEST_CASE("approximate fixed point tracks the small-eps scale") {
    // with a at its limiting value, gbar_star / (18 pi^2 eps) -> 1
    const double eps = 1e-4;
    const double a = std::log(2.0) / (18.0 * std::numbers::pi * std::numbers::pi);
    const FlowParams fp = FlowParams::make(2, eps, a);
    const double ratio = fp.gbar_star / (18.0 * std::numbers::pi * std::numbers::pi * eps);
    CHECK(std::abs(ratio - 1.0) < 0.01);
}

TEST_CASE("default window rule") {
    CHECK(default_window(0.05, 2) == static_cast<int>(std::ceil(40.0 / (0.05 * std::log(2.0)))));
    CHECK(default_window(0.1, 2) > default_window(0.2, 2));
}
