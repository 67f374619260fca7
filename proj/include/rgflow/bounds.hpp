#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "rgflow/errors.hpp"
#include "rgflow/flow.hpp"

namespace rgflow::bounds {

// The four weighted sums controlling the discrete integral equations:
// forward/backward coupling deviation, forward mass, backward remainder.
enum class SigmaKind { DgForward, DgBackward, MuForward, RBackward };

inline const char* kind_name(SigmaKind k) {
    switch (k) {
        case SigmaKind::DgForward: return "dg_forward";
        case SigmaKind::DgBackward: return "dg_backward";
        case SigmaKind::MuForward: return "mu_forward";
        case SigmaKind::RBackward: return "R_backward";
    }
    return "?";
}

struct SigmaSpec {
    SigmaKind which = SigmaKind::RBackward;
    double gamma = 0.0;
    double nu = 0.0;
    double c_R = 0.5;  // geometric rate of the remainder direction (RBackward only)
};

inline double upsilon(const flow::FlowParams& fp, double omega0, double nu) {
    const double disc = fp.L2eps - 4.0 * omega0 * (fp.Leps - 1.0);
    return 2.0 * std::pow(double(fp.L), fp.eps / nu) / (fp.Leps + std::sqrt(disc));
}

// Validates the hypotheses of the closed-form majorant for the given kind,
// throwing a domain_error naming the violated hypothesis.
inline void check_hypotheses(const SigmaSpec& s, const flow::FlowParams& fp, double omega0) {
    if (s.gamma < 0.0 || s.nu < 0.0)
        throw domain_error(std::string(kind_name(s.which)) + ": requires gamma, nu >= 0");
    switch (s.which) {
        case SigmaKind::RBackward:
            if (!(s.nu >= s.gamma))
                throw domain_error("R_backward: requires nu >= gamma");
            if (!(s.c_R > 0.0 && s.c_R < 1.0))
                throw domain_error("R_backward: requires c_R in (0,1)");
            break;
        case SigmaKind::MuForward:
            if (!(s.nu >= s.gamma))
                throw domain_error("mu_forward: requires nu >= gamma");
            if (!(fp.eps * s.nu < 0.5 * (3.0 + fp.eps)))
                throw domain_error("mu_forward: requires eps * nu < (3+eps)/2");
            break;
        case SigmaKind::DgBackward:
            break;  // any gamma, nu >= 0
        case SigmaKind::DgForward: {
            if (!(s.gamma <= 1.0))
                throw domain_error("dg_forward: requires gamma <= 1");
            if (!(s.nu > 0.0))
                throw domain_error("dg_forward: requires nu > 0");
            const double u = upsilon(fp, omega0, s.nu);
            if (!(u > 0.0 && u < 1.0))
                throw domain_error("dg_forward: requires Upsilon in (0,1); got Upsilon = " +
                                   std::to_string(u));
            break;
        }
    }
}

// Closed-form majorants of the four suprema.
inline double bar_sigma(const SigmaSpec& s, const flow::FlowParams& fp, double omega0) {
    check_hypotheses(s, fp, omega0);
    const double gs = fp.gbar_star;
    const double Leps = fp.Leps;
    switch (s.which) {
        case SigmaKind::RBackward:
            return std::pow(gs, s.nu - s.gamma) / (1.0 - s.c_R);
        case SigmaKind::MuForward: {
            const double shalf = 0.5 * (3.0 + fp.eps);
            return std::pow(gs, s.nu - s.gamma) /
                   (std::pow(double(fp.L), shalf) - std::pow(double(fp.L), fp.eps * s.nu));
        }
        case SigmaKind::DgBackward: {
            const double arg =
                2.0 * (1.0 - omega0) * (1.0 + omega0 - Leps * omega0) / (omega0 * (2.0 - Leps));
            return std::pow(omega0, -s.gamma) * std::pow(gs, s.nu - s.gamma) / (Leps - 1.0) *
                   std::exp(arg);
        }
        case SigmaKind::DgForward: {
            const double root = std::sqrt(fp.L2eps - 4.0 * omega0 * (Leps - 1.0));
            const double u = upsilon(fp, omega0, s.nu);
            const double one_minus_upow = -std::expm1(s.nu * std::log(u));
            const double arg =
                omega0 * (2.0 - Leps + root) / ((1.0 - omega0) * (Leps - 2.0 * omega0 * (Leps - 1.0)));
            return std::pow(omega0 * gs, s.nu - s.gamma) / one_minus_upow * std::exp(arg);
        }
    }
    throw usage_error("bar_sigma: unknown kind");
}

struct KConstant {
    double K = 0.0;
    double eps_power = 0.0;
};

// Leading small-eps behaviour of the majorants: bar_sigma ~ K eps^{eps_power}.
inline KConstant k_constant(const SigmaSpec& s, int L, double omega0) {
    if (s.gamma < 0.0 || s.nu < 0.0)
        throw domain_error(std::string(kind_name(s.which)) + ": requires gamma, nu >= 0");
    const double c18pi2 = 18.0 * std::numbers::pi * std::numbers::pi;
    const double logL = std::log(double(L));
    switch (s.which) {
        case SigmaKind::RBackward:
            if (!(s.nu >= s.gamma)) throw domain_error("R_backward: requires nu >= gamma");
            if (!(s.c_R > 0.0 && s.c_R < 1.0))
                throw domain_error("R_backward: requires c_R in (0,1)");
            return {std::pow(c18pi2, s.nu - s.gamma) / (1.0 - s.c_R), s.nu - s.gamma};
        case SigmaKind::MuForward:
            if (!(s.nu >= s.gamma)) throw domain_error("mu_forward: requires nu >= gamma");
            return {std::pow(c18pi2, s.nu - s.gamma) / (std::pow(double(L), 1.5) - 1.0),
                    s.nu - s.gamma};
        case SigmaKind::DgBackward:
            return {std::pow(c18pi2, s.nu - s.gamma) / (std::pow(omega0, s.gamma) * logL) *
                        std::exp(2.0 * (1.0 - omega0) / omega0),
                    s.nu - s.gamma - 1.0};
        case SigmaKind::DgForward: {
            if (s.gamma != 1.0)
                throw domain_error("dg_forward asymptotics: stated for gamma = 1");
            if (!(s.nu > 1.0 / (1.0 - omega0)))
                throw domain_error("dg_forward asymptotics: requires nu > 1/(1-omega0)");
            const double K = std::pow(omega0, s.nu - 1.0) * std::pow(c18pi2, s.nu - 1.0) /
                             (logL * (s.nu * (1.0 - omega0) - 1.0)) *
                             std::exp(2.0 * omega0 / (1.0 - omega0));
            return {K, s.nu - 2.0};
        }
    }
    throw usage_error("k_constant: unknown kind");
}

struct SigmaValue {
    double value = 0.0;  // supremum of the defining sum over the stored window
    double tail = 0.0;   // rigorous majorant of everything the window missed
};

// Windowed evaluation of the defining supremum with rigorous truncation
// majorants.  The inner sums are evaluated by stable forward/backward
// recurrences (algebraically the log-accumulated products); the n-range
// outside the window is closed with coarse geometric ceilings, capped by the
// closed-form majorant itself.
inline SigmaValue sigma_value(const SigmaSpec& s, const flow::GbarSequence& gsq) {
    const flow::FlowParams& fp = gsq.params;
    check_hypotheses(s, fp, gsq.omega0);
    const int nm = gsq.n_minus, np = gsq.n_plus;
    const double gstar = fp.gbar_star;
    const double bar = bar_sigma(s, fp, gsq.omega0);
    auto g = [&](int n) { return gsq.at(n); };
    auto fpr = [&](int n) { return fp.f_prime(g(n)); };

    double sup_bound = 0.0;  // max over n of (window sum + inner tail), plus outer ceilings
    double value = 0.0;

    switch (s.which) {
        case SigmaKind::DgBackward: {
            if (np < 1) throw usage_error("dg_backward: window must contain n >= 1");
            double acc = 0.0;  // sum_{0 <= p < n} gbar_p^nu prod_{p<j<n} f'(gbar_j)
            for (int n = 1; n <= np; ++n) {
                acc = (n == 1) ? std::pow(g(0), s.nu) : fpr(n - 1) * acc + std::pow(g(n - 1), s.nu);
                const double d = acc / std::pow(g(n), s.gamma);
                value = std::max(value, d);
            }
            const double q = fpr(np);
            if (!(q < 1.0))
                throw truncation_error("dg_backward: window too shallow, f'(gbar) >= 1 at the edge");
            const double M = std::pow(gstar, s.nu) / std::pow(g(np), s.gamma);
            const double dn_edge = acc / std::pow(g(np), s.gamma);
            const double ceil_right = std::min(std::max(dn_edge, M / (1.0 - q)), bar);
            sup_bound = std::max(value, ceil_right);
            break;
        }
        case SigmaKind::DgForward: {
            if (nm < 1) throw usage_error("dg_forward: window must contain n <= -1");
            double acc = 0.0;  // sum_{n <= p < 0} gbar_p^nu prod_{n<=j<=p} 1/f'(gbar_j)
            double d_edge = 0.0;
            for (int n = -1; n >= -nm; --n) {
                acc = (std::pow(g(n), s.nu) + acc) / fpr(n);
                const double d = acc / std::pow(g(n), s.gamma);
                value = std::max(value, d);
                if (n == -nm) d_edge = d;
            }
            double ceil_left = bar;
            if (s.nu > s.gamma) {
                const double gedge = g(-nm);
                const double F = fp.Leps - 2.0 * fp.L2eps * fp.a * gedge;   // min f' beyond edge
                const double F2 = fp.Leps - fp.L2eps * fp.a * gedge;        // min step ratio
                if (F > 0.0 && F2 > 1.0) {
                    const double dhat = 2.0 * fp.Leps * fp.a * gedge / (1.0 - 2.0 * fp.Leps * fp.a * gedge);
                    const double E = std::exp(dhat / (1.0 - 1.0 / F2));
                    const double msum = (std::pow(gedge, s.nu - s.gamma) / F) /
                                        (-std::expm1(-(s.nu - s.gamma) * std::log(F2)));
                    ceil_left = std::min(bar, E * (d_edge + msum));
                }
            }
            sup_bound = std::max(value, ceil_left);
            break;
        }
        case SigmaKind::MuForward: {
            const double shalf = 0.5 * (3.0 + fp.eps);
            const double Ls = std::pow(double(fp.L), -shalf);
            const double geom = Ls / (1.0 - Ls);
            double acc = 0.0;  // sum_{p >= n, p <= np} L^{-shalf (p-n+1)} gbar_p^nu
            double worst = 0.0;
            for (int n = np; n >= -nm; --n) {
                acc = Ls * (std::pow(g(n), s.nu) + acc);
                const double d = acc / std::pow(g(n), s.gamma);
                value = std::max(value, d);
                const double inner_tail = std::pow(gstar, s.nu) * std::pow(Ls, double(np - n + 2)) /
                                          (1.0 - Ls) / std::pow(g(n), s.gamma);
                worst = std::max(worst, d + inner_tail);
            }
            const double ceil_right = std::pow(gstar, s.nu) / std::pow(g(np), s.gamma) * geom;
            const double lge = std::pow(double(fp.L), fp.eps * s.nu - shalf);
            const double ceil_left =
                std::pow(g(-nm), s.nu - s.gamma) * Ls / (1.0 - lge);
            sup_bound = std::max({worst, std::min(ceil_right, bar), std::min(ceil_left, bar)});
            break;
        }
        case SigmaKind::RBackward: {
            double acc = 0.0;  // sum_{p < n, p >= -nm} c_R^{n-p-1} gbar_p^nu
            double worst = 0.0;
            for (int n = -nm; n <= np; ++n) {
                if (n > -nm) acc = s.c_R * acc + std::pow(g(n - 1), s.nu);
                const double d = acc / std::pow(g(n), s.gamma);
                value = std::max(value, d);
                const double inner_tail = std::pow(g(-nm), s.nu) * std::pow(s.c_R, double(n + nm)) /
                                          (1.0 - s.c_R) / std::pow(g(n), s.gamma);
                worst = std::max(worst, d + inner_tail);
            }
            const double ceil_left = std::pow(g(-nm), s.nu - s.gamma) / (1.0 - s.c_R);
            const double ceil_right = bar;  // sup approached as n -> +infinity
            sup_bound = std::max({worst, std::min(ceil_left, bar), ceil_right});
            break;
        }
    }

    SigmaValue out;
    out.value = value;
    out.tail = std::max(0.0, sup_bound - value);
    if (!(out.tail < out.value))
        throw truncation_error(std::string(kind_name(s.which)) +
                               ": truncation tail dominates the windowed value; enlarge the window");
    return out;
}

}  // namespace rgflow::bounds
