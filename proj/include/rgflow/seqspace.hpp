#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "rgflow/calibrated_norm.hpp"
#include "rgflow/errors.hpp"
#include "rgflow/flow.hpp"
#include "rgflow/rg_model.hpp"

namespace rgflow::seqspace {

// Windowed deviation sequence (dg_n, mu_n, R_n), n in [-n_minus, n_plus].
struct DeviationSequence {
    int n_minus = 0, n_plus = 0, r_dim = 0;
    std::vector<double> dg, mu, R;  // R stored row-major per index

    static DeviationSequence zeros(int n_minus, int n_plus, int r_dim) {
        DeviationSequence d;
        d.n_minus = n_minus;
        d.n_plus = n_plus;
        d.r_dim = r_dim;
        const std::size_t n = static_cast<std::size_t>(n_minus + n_plus + 1);
        d.dg.assign(n, 0.0);
        d.mu.assign(n, 0.0);
        d.R.assign(n * static_cast<std::size_t>(r_dim), 0.0);
        return d;
    }

    int count() const { return n_minus + n_plus + 1; }
    std::size_t idx(int n) const { return static_cast<std::size_t>(n + n_minus); }
    std::span<const double> R_at(int n) const {
        return {R.data() + idx(n) * r_dim, static_cast<std::size_t>(r_dim)};
    }
    std::span<double> R_at(int n) {
        return {R.data() + idx(n) * r_dim, static_cast<std::size_t>(r_dim)};
    }

    bool same_window(const DeviationSequence& o) const {
        return n_minus == o.n_minus && n_plus == o.n_plus && r_dim == o.r_dim;
    }
};

inline DeviationSequence subtract(const DeviationSequence& a, const DeviationSequence& b) {
    if (!a.same_window(b)) throw usage_error("subtract: window mismatch");
    DeviationSequence d = a;
    for (std::size_t i = 0; i < d.dg.size(); ++i) d.dg[i] -= b.dg[i];
    for (std::size_t i = 0; i < d.mu.size(); ++i) d.mu[i] -= b.mu[i];
    for (std::size_t i = 0; i < d.R.size(); ++i) d.R[i] -= b.R[i];
    return d;
}

inline void check_windows(const DeviationSequence& ds, const flow::GbarSequence& gs) {
    if (ds.n_minus != gs.n_minus || ds.n_plus != gs.n_plus)
        throw usage_error("deviation/calibrator window mismatch");
}

struct NormBreakdown {
    double value = 0.0;
    int arg_n = 0;
    int component = 0;  // 0 = dg, 1 = mu, 2 = R
};

// Weighted sup norm: sup_n max( |dg_n| gbar_n^{-e(n)}, |mu_n| gbar_n^{-(2-delta)},
// |||R_n|||_{gbar_n} gbar_n^{-(11/4-eta)} ).
inline NormBreakdown quadruple_norm_breakdown(const DeviationSequence& ds,
                                              const flow::GbarSequence& gs, const NormWeights& nw,
                                              const RgModel& model) {
    check_windows(ds, gs);
    NormBreakdown out;
    for (int n = -ds.n_minus; n <= ds.n_plus; ++n) {
        const double g = gs.at(n);
        const double wg = std::abs(ds.dg[ds.idx(n)]) * std::pow(g, -nw.e(n));
        const double wm = std::abs(ds.mu[ds.idx(n)]) * std::pow(g, -(2.0 - nw.delta));
        const double wr = model.R_norm(ds.R_at(n), g) * std::pow(g, -(2.75 - nw.eta));
        if (wg > out.value) out = {wg, n, 0};
        if (wm > out.value) out = {wm, n, 1};
        if (wr > out.value) out = {wr, n, 2};
    }
    return out;
}

inline double quadruple_norm(const DeviationSequence& ds, const flow::GbarSequence& gs,
                             const NormWeights& nw, const RgModel& model) {
    return quadruple_norm_breakdown(ds, gs, nw, model).value;
}

// Hard domain gate: every entry must satisfy the declared bounds
//   |dg_n| < A_g gbar_n, |mu_n| < A_mu gbar_n^{2-delta},
//   |||R_n||| < A_R gbar_n^{11/4-eta}.
inline void check_domain(const DeviationSequence& ds, const flow::GbarSequence& gs,
                         const NormWeights& nw, const RgModel& model) {
    check_windows(ds, gs);
    const ModelConstants& mc = model.constants();
    for (int n = -ds.n_minus; n <= ds.n_plus; ++n) {
        const double g = gs.at(n);
        if (!(std::abs(ds.dg[ds.idx(n)]) < mc.A_g * g))
            throw domain_error("domain violated at n=" + std::to_string(n) +
                               ": |dg| >= A_g gbar");
        if (!(std::abs(ds.mu[ds.idx(n)]) < mc.A_mu * std::pow(g, 2.0 - nw.delta)))
            throw domain_error("domain violated at n=" + std::to_string(n) +
                               ": |mu| >= A_mu gbar^(2-delta)");
        if (!(model.R_norm(ds.R_at(n), g) < mc.A_R * std::pow(g, 2.75 - nw.eta)))
            throw domain_error("domain violated at n=" + std::to_string(n) +
                               ": |||R||| >= A_R gbar^(11/4-eta)");
    }
}

struct TailBounds {
    double mu_tail = 0.0;  // dropped part of the forward mass sum, worst index
    double R_tail = 0.0;   // dropped part of the backward remainder sum, worst index
};

// One application of the sequence map: backward-solved coupling channel,
// forward-solved mass channel, backward remainder channel with the linear
// maps streamed left to right.  dg'_0 = 0 identically.
inline DeviationSequence apply_m(const DeviationSequence& ds, const flow::GbarSequence& gs,
                                 const flow::FlowParams& fp, const NormWeights& nw,
                                 const RgModel& model, TailBounds* tails = nullptr) {
    check_domain(ds, gs, nw, model);
    const int nm = ds.n_minus, np = ds.n_plus;
    const int rd = ds.r_dim;
    if (rd != model.r_dim()) throw usage_error("apply_m: R dimension mismatch");

    // cache remainders and quadratic terms at every index
    const int cnt = ds.count();
    std::vector<double> y(cnt, 0.0), xim(cnt, 0.0), xiR(static_cast<std::size_t>(cnt) * rd, 0.0);
    double sup_xiR_norm = 0.0;
    for (int n = -nm; n <= np; ++n) {
        const std::size_t i = ds.idx(n);
        const double g = gs.at(n) + ds.dg[i];
        const Triple x = model.xi(g, ds.mu[i], ds.R_at(n));
        y[i] = -fp.L2eps * fp.a * ds.dg[i] * ds.dg[i] + x.g;
        xim[i] = x.mu;
        for (int j = 0; j < rd; ++j) xiR[i * rd + j] = x.R[static_cast<std::size_t>(j)];
        sup_xiR_norm = std::max(sup_xiR_norm, model.R_norm(x.R, gs.at(n)));
    }

    DeviationSequence out = DeviationSequence::zeros(nm, np, rd);

    // coupling channel: amplified sum below n on the infrared side,
    // de-amplified sum above n on the ultraviolet side
    double acc = 0.0;
    for (int n = 1; n <= np; ++n) {
        acc = (n == 1) ? y[ds.idx(0)] : fp.f_prime(gs.at(n - 1)) * acc + y[ds.idx(n - 1)];
        out.dg[out.idx(n)] = acc;
    }
    acc = 0.0;
    for (int n = -1; n >= -nm; --n) {
        acc = (y[ds.idx(n)] + acc) / fp.f_prime(gs.at(n));
        out.dg[out.idx(n)] = -acc;
    }

    // mass channel, solved toward the infrared
    const double Ls = std::pow(double(fp.L), -0.5 * (3.0 + fp.eps));
    acc = 0.0;
    for (int n = np; n >= -nm; --n) {
        acc = Ls * (xim[ds.idx(n)] + acc);
        out.mu[out.idx(n)] = -acc;
    }

    // remainder channel, streamed from the ultraviolet edge (zero seed)
    std::vector<double> cur(rd, 0.0), tmp(rd, 0.0);
    for (int n = -nm + 1; n <= np; ++n) {
        const std::size_t ip = ds.idx(n - 1);
        model.apply_L(gs.at(n - 1) + ds.dg[ip], ds.mu[ip], cur, tmp);
        for (int j = 0; j < rd; ++j) cur[static_cast<std::size_t>(j)] =
            tmp[static_cast<std::size_t>(j)] + xiR[ip * rd + j];
        std::copy(cur.begin(), cur.end(), out.R_at(n).begin());
    }

    if (tails) {
        const ModelConstants& mc = model.constants();
        const double gstar = fp.gbar_star;
        tails->mu_tail = mc.B_mu * gstar * gstar * Ls / (1.0 - Ls);
        tails->R_tail = sup_xiR_norm / (1.0 - mc.c_R);
    }
    return out;
}

// Per-index weighted defect of the one-step recursion; entry n+1 holds the
// defect of the step n -> n+1.
inline std::vector<double> residual_profile(const DeviationSequence& ds,
                                            const flow::GbarSequence& gs,
                                            const flow::FlowParams& fp, const NormWeights& nw,
                                            const RgModel& model) {
    check_windows(ds, gs);
    const int nm = ds.n_minus, np = ds.n_plus;
    const int rd = ds.r_dim;
    std::vector<double> prof(static_cast<std::size_t>(ds.count()), 0.0);
    std::vector<double> lr(rd, 0.0);
    const double Lshalf = std::pow(double(fp.L), 0.5 * (3.0 + fp.eps));
    for (int n = -nm; n < np; ++n) {
        const std::size_t i = ds.idx(n), i1 = ds.idx(n + 1);
        const double g = gs.at(n) + ds.dg[i];
        const Triple x = model.xi(g, ds.mu[i], ds.R_at(n));
        const double y = -fp.L2eps * fp.a * ds.dg[i] * ds.dg[i] + x.g;
        const double d_g = ds.dg[i1] - fp.f_prime(gs.at(n)) * ds.dg[i] - y;
        const double d_mu = ds.mu[i1] - Lshalf * ds.mu[i] - x.mu;
        model.apply_L(g, ds.mu[i], ds.R_at(n), lr);
        std::vector<double> d_R(static_cast<std::size_t>(rd), 0.0);
        for (int j = 0; j < rd; ++j)
            d_R[static_cast<std::size_t>(j)] =
                ds.R[i1 * rd + j] - lr[static_cast<std::size_t>(j)] - x.R[static_cast<std::size_t>(j)];
        const double gn1 = gs.at(n + 1);
        const double w = std::max({std::abs(d_g) * std::pow(gn1, -nw.e(n + 1)),
                                   std::abs(d_mu) * std::pow(gn1, -(2.0 - nw.delta)),
                                   model.R_norm(d_R, gn1) * std::pow(gn1, -(2.75 - nw.eta))});
        prof[i1] = w;
    }
    return prof;
}

inline double recursion_residual(const DeviationSequence& ds, const flow::GbarSequence& gs,
                                 const flow::FlowParams& fp, const NormWeights& nw,
                                 const RgModel& model, int margin_left, int margin_right) {
    const std::vector<double> prof = residual_profile(ds, gs, fp, nw, model);
    double worst = 0.0;
    for (int n = -ds.n_minus + margin_left; n <= ds.n_plus - margin_right; ++n)
        worst = std::max(worst, prof[ds.idx(n)]);
    return worst;
}

struct SolverConfig {
    double beta = 0.0;             // ball radius; 0 selects the default rule
    int max_iter = 80;
    double tol = 1e-11;            // residual threshold reported as convergence
    double diff_tol = 0.0;         // Picard increment threshold; 0 selects tol/20
    double contraction_budget = 0.5;
    double c_R = 0.5;              // ceiling the model's declared contraction must respect
    int margin_left = -1;          // residual interior margins; -1 selects the default rule
    int margin_right = -1;

    // Explicit admissible ball radius for a crossover anchored at omega0,
    // with a safety factor of one half.
    static double default_beta(double omega0) {
        if (!(omega0 > 0.0 && omega0 < 0.5))
            throw domain_error("default_beta: omega0 must lie in (0, 1/2)");
        return 0.5 * (1.0 - 2.0 * omega0) / (6.0 * omega0) *
               std::exp(-2.0 * omega0 / (1.0 - omega0));
    }
};

inline int default_margin_right(const flow::FlowParams& fp) {
    const double s = 0.5 * (3.0 + fp.eps) * std::log(double(fp.L));
    return static_cast<int>(std::ceil(13.0 * std::log(10.0) / s)) + 2;
}

inline int default_margin_left(double c_R) {
    return static_cast<int>(std::ceil(13.0 * std::log(10.0) / std::log(1.0 / c_R))) + 2;
}

struct SolverReport {
    std::vector<double> iterate_norms;
    std::vector<double> diffs;                  // quadruple norm of successive increments
    std::vector<double> measured_contraction;   // diffs[k] / diffs[k-1]
    double final_residual = 0.0;
    double mu_tail = 0.0;
    double R_tail = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string message;
};

// Picard iteration of the sequence map inside the ball of radius beta.
inline std::pair<DeviationSequence, SolverReport> solve_fixed_point(
    const DeviationSequence& initial, const SolverConfig& cfg_in, const flow::GbarSequence& gs,
    const flow::FlowParams& fp, const NormWeights& nw, const RgModel& model) {
    SolverConfig cfg = cfg_in;
    if (cfg.beta == 0.0) cfg.beta = SolverConfig::default_beta(gs.omega0);
    if (cfg.diff_tol == 0.0) cfg.diff_tol = cfg.tol / 20.0;
    if (cfg.margin_left < 0) cfg.margin_left = default_margin_left(cfg.c_R);
    if (cfg.margin_right < 0) cfg.margin_right = default_margin_right(fp);

    if (model.constants().c_R > cfg.c_R + 1e-12)
        throw domain_error("solve_fixed_point: model contraction " +
                           std::to_string(model.constants().c_R) + " exceeds the budget " +
                           std::to_string(cfg.c_R));
    if (initial.dg[initial.idx(0)] != 0.0)
        throw usage_error("solve_fixed_point: initial sequence must have dg_0 = 0");
    if (quadruple_norm(initial, gs, nw, model) > cfg.beta / 6.0)
        throw domain_error("solve_fixed_point: initial sequence outside the beta/6 ball");

    SolverReport rep;
    DeviationSequence cur = initial;
    TailBounds tails;
    for (int k = 1; k <= cfg.max_iter; ++k) {
        DeviationSequence next = apply_m(cur, gs, fp, nw, model, &tails);
        rep.iterations = k;
        const NormBreakdown nb = quadruple_norm_breakdown(next, gs, nw, model);
        rep.iterate_norms.push_back(nb.value);
        if (nb.value > cfg.beta)
            throw divergence_error("solve_fixed_point: iterate escaped the ball at n = " +
                                   std::to_string(nb.arg_n));
        const double diff = quadruple_norm(subtract(next, cur), gs, nw, model);
        rep.diffs.push_back(diff);
        if (rep.diffs.size() >= 2) {
            const double prev = rep.diffs[rep.diffs.size() - 2];
            rep.measured_contraction.push_back(prev > 0.0 ? diff / prev : 0.0);
        }
        cur = std::move(next);
        if (diff <= cfg.diff_tol) break;
    }
    rep.mu_tail = tails.mu_tail;
    rep.R_tail = tails.R_tail;
    rep.final_residual =
        recursion_residual(cur, gs, fp, nw, model, cfg.margin_left, cfg.margin_right);
    const bool diff_ok = !rep.diffs.empty() && rep.diffs.back() <= cfg.diff_tol;
    const bool contraction_ok = rep.measured_contraction.empty() ||
                                rep.measured_contraction.back() <= cfg.contraction_budget + 0.05;
    rep.converged = diff_ok && rep.final_residual <= cfg.tol && contraction_ok;
    if (!rep.converged) {
        rep.message = !diff_ok ? "max_iter reached before the Picard increments fell below diff_tol"
                               : "converged increments but residual or contraction check failed";
    }
    return {std::move(cur), rep};
}

}  // namespace rgflow::seqspace
