// Command-line front end: coefficient tables, approximate orbits, bound
// sweeps, full trajectory runs, oracle comparisons.  CSV/JSON output with
// fixed formatting; identical configuration gives byte-identical files.

#include <cstdlib>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rgflow/bounds.hpp"
#include "rgflow/errors.hpp"
#include "rgflow/flow.hpp"
#include "rgflow/hier.hpp"
#include "rgflow/io.hpp"
#include "rgflow/kernels.hpp"
#include "rgflow/models.hpp"
#include "rgflow/seqspace.hpp"
#include "rgflow/toy_flow.hpp"

namespace {

using namespace rgflow;

std::string resolve_output(const std::string& path) {
    if (path.empty() || path.front() == '/') return path;
    const char* dir = std::getenv("RGFLOW_OUTPUT_DIR");
    if (!dir || !*dir) return path;
    return std::string(dir) + "/" + path;
}

kernels::CutoffShape parse_shape(const std::string& s) {
    if (s == "standard") return kernels::CutoffShape::Standard;
    if (s == "steep") return kernels::CutoffShape::Steep;
    throw usage_error("unknown cutoff shape: " + s);
}

struct CommonOpts {
    int L = 2;
    double eps = 0.1;
    double omega0 = 0.3;
    double a_override = 0.0;  // 0: compute from the kernel quadratures
    int window = 0;           // 0: default rule
    std::string output;
    std::string shape = "standard";
};

double resolve_a(const CommonOpts& c) {
    if (c.a_override > 0.0) return c.a_override;
    kernels::KernelSet ks(c.L, c.eps, parse_shape(c.shape));
    return ks.a_coeff();
}

void validate_common(const CommonOpts& c, bool orbit_like) {
    if (c.L < 2) throw usage_error("L must be an integer >= 2");
    const double max_eps = std::log(2.0) / std::log(double(c.L));
    if (!(c.eps > 0.0 && c.eps < max_eps))
        throw usage_error("eps must lie in (0, ln 2 / ln L)");
    if (orbit_like && !(c.omega0 > 0.0 && c.omega0 < 0.5))
        throw usage_error("omega0 must lie in (0, 1/2) for orbit runs");
    if (!orbit_like && !(c.omega0 > 0.0 && c.omega0 < 1.0))
        throw usage_error("omega0 must lie in (0, 1)");
}

int run_kernels(const CommonOpts& c) {
    if (c.L < 2) throw usage_error("L must be an integer >= 2");
    kernels::KernelSet ks(c.L, c.eps, parse_shape(c.shape));
    if (!c.output.empty()) {
        CsvWriter csv(resolve_output(c.output), {"L", "eps", "a", "b", "C0", "Gamma0"});
        csv.row({std::to_string(c.L), format_csv(c.eps), format_csv(ks.a_coeff()),
                 format_csv(ks.b_coeff()), format_csv(ks.C0()), format_csv(ks.Gamma0())});
    }
    std::ostringstream js;
    js << "{\"L\": " << c.L << ", \"eps\": " << format_json(c.eps)
       << ", \"a\": " << format_json(ks.a_coeff()) << ", \"b\": " << format_json(ks.b_coeff())
       << ", \"C0\": " << format_json(ks.C0()) << ", \"Gamma0\": " << format_json(ks.Gamma0())
       << ", \"kappa\": " << format_json(ks.kappa()) << ", \"lambda\": " << format_json(ks.lambda())
       << "}";
    std::cout << js.str() << "\n";
    return 0;
}

int run_flow(const CommonOpts& c) {
    validate_common(c, false);
    const double a = resolve_a(c);
    const flow::FlowParams fp = flow::FlowParams::make(c.L, c.eps, a);
    const int w = c.window > 0 ? c.window : flow::default_window(c.eps, c.L);
    const flow::GbarSequence gs = flow::build_gbar(c.omega0, w, w, fp);
    if (!c.output.empty()) {
        CsvWriter csv(resolve_output(c.output), {"n", "gbar_n", "lower_n", "upper_n"});
        for (int n = -w; n <= w; ++n) {
            const auto [lo, hi] = flow::step_bounds(n, gs);
            csv.row({std::to_string(n), format_csv(gs.at(n)), format_csv(lo), format_csv(hi)});
        }
    }
    std::cout << "{\"gbar_star\": " << format_json(fp.gbar_star) << ", \"a\": " << format_json(a)
              << ", \"window\": " << w << "}\n";
    return 0;
}

int run_bounds(const CommonOpts& c, double c_R) {
    validate_common(c, false);
    const double a = resolve_a(c);
    const flow::FlowParams fp = flow::FlowParams::make(c.L, c.eps, a);
    const int w = c.window > 0 ? c.window : flow::default_window(c.eps, c.L);
    const flow::GbarSequence gs = flow::build_gbar(c.omega0, w, w, fp);

    struct Row {
        bounds::SigmaKind kind;
        double gamma, nu;
    };
    const std::vector<Row> rows = {
        {bounds::SigmaKind::DgBackward, 1.5, 3.0},
        {bounds::SigmaKind::DgBackward, 1.5, 2.75 - 3.0 / 16.0},
        {bounds::SigmaKind::DgForward, 1.0, 2.0},
        {bounds::SigmaKind::DgForward, 1.0, 2.75 - 3.0 / 16.0},
        {bounds::SigmaKind::MuForward, 2.0 - 1.0 / 6.0, 2.0},
        {bounds::SigmaKind::RBackward, 2.75 - 3.0 / 16.0, 2.75},
    };
    std::unique_ptr<CsvWriter> csv;
    if (!c.output.empty())
        csv = std::make_unique<CsvWriter>(
            resolve_output(c.output),
            std::vector<std::string>{"which", "gamma", "nu", "eps", "omega0", "L", "sigma", "tail",
                                     "bar_sigma", "K", "eps_power"});
    int emitted = 0;
    for (const Row& r : rows) {
        bounds::SigmaSpec spec{r.kind, r.gamma, r.nu, c_R};
        const bounds::SigmaValue sv = bounds::sigma_value(spec, gs);
        const double bar = bounds::bar_sigma(spec, fp, c.omega0);
        const bounds::KConstant kc = bounds::k_constant(spec, c.L, c.omega0);
        if (csv)
            csv->row({bounds::kind_name(r.kind), format_csv(r.gamma), format_csv(r.nu),
                      format_csv(c.eps), format_csv(c.omega0), std::to_string(c.L),
                      format_csv(sv.value), format_csv(sv.tail), format_csv(bar),
                      format_csv(kc.K), format_csv(kc.eps_power)});
        ++emitted;
    }
    std::cout << "{\"rows\": " << emitted << ", \"window\": " << w << "}\n";
    return 0;
}

int run_orbit(const CommonOpts& c, const std::string& model_name, double tol, int max_iter,
              unsigned seed, const std::string& report_path, const std::string& snapshot_path) {
    validate_common(c, true);
    std::unique_ptr<kernels::KernelSet> ks;
    std::unique_ptr<RgModel> model;
    flow::FlowParams fp;
    const seqspace::NormWeights nw = seqspace::NormWeights::make(c.L, c.eps);
    std::unique_ptr<models::HierModel> hier;
    if (model_name == "hier") {
        hier = std::make_unique<models::HierModel>(c.L, c.eps, nw);
        fp = hier->flow_params();
    } else {
        const double a = resolve_a(c);
        fp = flow::FlowParams::make(c.L, c.eps, a);
        if (model_name == "null") {
            model = std::make_unique<models::NullModel>(fp, nw);
        } else if (model_name == "poly") {
            model = std::make_unique<models::PolyToyModel>(
                models::PolyToyModel::default_params(fp, nw, false, nullptr), fp, nw, seed);
        } else {
            throw usage_error("unknown model: " + model_name);
        }
    }
    const RgModel& m = hier ? static_cast<const RgModel&>(*hier) : *model;

    const int w = c.window > 0 ? c.window : flow::default_window(c.eps, c.L);
    const flow::GbarSequence gs = flow::build_gbar(c.omega0, w, w, fp);

    seqspace::SolverConfig cfg;
    cfg.tol = tol;
    cfg.max_iter = max_iter;
    auto [ds, rep] = seqspace::solve_fixed_point(
        seqspace::DeviationSequence::zeros(w, w, m.r_dim()), cfg, gs, fp, nw, m);
    const std::vector<double> prof = seqspace::residual_profile(ds, gs, fp, nw, m);

    if (!c.output.empty()) {
        CsvWriter csv(resolve_output(c.output),
                      {"n", "gbar_n", "g_n", "mu_n", "R_norm_n", "residual_n"});
        for (int n = -w; n <= w; ++n) {
            const double g = gs.at(n);
            csv.row({std::to_string(n), format_csv(g), format_csv(g + ds.dg[ds.idx(n)]),
                     format_csv(ds.mu[ds.idx(n)]), format_csv(m.R_norm(ds.R_at(n), g)),
                     format_csv(prof[ds.idx(n)])});
        }
    }
    if (hier && !snapshot_path.empty()) {
        std::vector<double> coeffs(static_cast<std::size_t>(hier->stepper().n_wick()), 0.0);
        coeffs[0] = ds.mu[ds.idx(0)];
        coeffs[1] = gs.at(0) + ds.dg[ds.idx(0)];
        for (int j = 0; j < m.r_dim(); ++j)
            coeffs[static_cast<std::size_t>(j + 2)] = ds.R_at(0)[static_cast<std::size_t>(j)];
        const models::HierPotential pot = hier->stepper().potential(coeffs);
        CsvWriter csv(resolve_output(snapshot_path), {"phi", "exp_minus_v"});
        for (std::size_t i = 0; i < pot.phi.size(); ++i)
            csv.row({format_csv(pot.phi[i]), format_csv(pot.exp_minus_v[i])});
    }

    std::ostringstream js;
    js << "{\"model\": \"" << model_name << "\", \"converged\": " << (rep.converged ? "true" : "false")
       << ", \"iterations\": " << rep.iterations
       << ", \"final_residual\": " << format_json(rep.final_residual)
       << ", \"mu_tail\": " << format_json(rep.mu_tail)
       << ", \"R_tail\": " << format_json(rep.R_tail) << ", \"iterate_norms\": [";
    for (std::size_t i = 0; i < rep.iterate_norms.size(); ++i)
        js << (i ? ", " : "") << format_json(rep.iterate_norms[i]);
    js << "], \"contraction\": [";
    for (std::size_t i = 0; i < rep.measured_contraction.size(); ++i)
        js << (i ? ", " : "") << format_json(rep.measured_contraction[i]);
    js << "]}";
    if (!report_path.empty()) {
        std::ofstream f(resolve_output(report_path));
        if (!f) throw usage_error("cannot open report file: " + report_path);
        f << js.str() << "\n";
    }
    std::cout << js.str() << "\n";
    return rep.converged ? 0 : 1;
}

int run_oracle(double nu, const std::string& output, double s_lo, double s_hi) {
    const models::ToyFlowParams tf = models::ToyFlowParams::from_nu(nu);
    const models::ToyOrbitComparison cmp = models::compare_orbit_rk4(tf, s_lo, s_hi);
    if (!output.empty()) {
        CsvWriter csv(resolve_output(output), {"s", "mu_formula", "mu_rk4", "rel_err"});
        for (std::size_t i = 0; i < cmp.s.size(); ++i)
            csv.row({format_csv(cmp.s[i]), format_csv(cmp.formula[i]), format_csv(cmp.rk4[i]),
                     format_csv(std::abs(cmp.rk4[i] - cmp.formula[i]) / std::abs(cmp.formula[i]))});
    }
    std::cout << "{\"nu\": " << format_json(nu)
              << ", \"max_rel_discrepancy\": " << format_json(cmp.max_rel_err)
              << ", \"samples\": " << cmp.s.size() << "}\n";
    return 0;
}

int run_audit(const CommonOpts& c, const std::string& model_name, int samples, unsigned seed) {
    validate_common(c, true);
    const seqspace::NormWeights nw = seqspace::NormWeights::make(c.L, c.eps);
    std::unique_ptr<models::HierModel> hier;
    std::unique_ptr<RgModel> model;
    flow::FlowParams fp;
    if (model_name == "hier") {
        hier = std::make_unique<models::HierModel>(c.L, c.eps, nw);
        fp = hier->flow_params();
    } else {
        fp = flow::FlowParams::make(c.L, c.eps, resolve_a(c));
        if (model_name == "null")
            model = std::make_unique<models::NullModel>(fp, nw);
        else if (model_name == "poly")
            model = std::make_unique<models::PolyToyModel>(
                models::PolyToyModel::default_params(fp, nw, false, nullptr), fp, nw, seed);
        else
            throw usage_error("unknown model: " + model_name);
    }
    const RgModel& m = hier ? static_cast<const RgModel&>(*hier) : *model;
    const models::AuditReport rep = models::audit_model(m, fp, nw, samples, seed);
    std::ostringstream js;
    js << "{\"model\": \"" << model_name << "\", \"samples\": " << rep.samples
       << ", \"worst_xi_g\": " << format_json(rep.worst_xi_g)
       << ", \"worst_xi_mu\": " << format_json(rep.worst_xi_mu)
       << ", \"worst_xi_R\": " << format_json(rep.worst_xi_R)
       << ", \"measured_c_R\": " << format_json(rep.measured_c_R)
       << ", \"declared_c_R\": " << format_json(rep.declared_c_R)
       << ", \"pass\": " << (rep.pass ? "true" : "false") << "}";
    if (!c.output.empty()) {
        std::ofstream f(resolve_output(c.output));
        if (!f) throw usage_error("cannot open output file: " + c.output);
        f << js.str() << "\n";
    }
    std::cout << js.str() << "\n";
    return rep.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"renormalization crossover toolbox"};
    app.require_subcommand(1);

    CommonOpts c;
    double c_R = 0.5, tol = 1e-11, nu = 2.7, s_lo = 0.05, s_hi = 0.8;
    int max_iter = 80, samples = 1000;
    unsigned seed = 1;
    std::string model_name = "null", report_path, snapshot_path;

    auto add_common = [&](CLI::App* sub, bool with_omega) {
        sub->add_option("--L", c.L, "scale ratio (integer >= 2)");
        sub->add_option("--eps", c.eps, "bifurcation parameter");
        if (with_omega) sub->add_option("--omega0", c.omega0, "anchor g_0 = omega0 gbar_star");
        sub->add_option("--a", c.a_override, "override the quadratic coefficient a(L,eps)");
        sub->add_option("--window", c.window, "two-sided window size (0: default rule)");
        sub->add_option("--output,-o", c.output, "output CSV/JSON path");
        sub->add_option("--shape", c.shape, "cutoff shape: standard | steep");
    };

    CLI::App* sk = app.add_subcommand("kernels", "covariance kernel coefficient table");
    add_common(sk, false);
    CLI::App* sf = app.add_subcommand("flow", "approximate orbit with enclosure bounds");
    add_common(sf, true);
    CLI::App* sb = app.add_subcommand("bounds", "windowed sums vs closed-form majorants");
    add_common(sb, true);
    sb->add_option("--c-R", c_R, "remainder contraction rate");
    CLI::App* so = app.add_subcommand("orbit", "solve the deviation fixed point");
    add_common(so, true);
    so->add_option("--model", model_name, "null | poly | hier");
    so->add_option("--tol", tol, "residual tolerance");
    so->add_option("--max-iter", max_iter, "iteration cap");
    so->add_option("--seed", seed, "seed for stochastic audits");
    so->add_option("--report", report_path, "solver report JSON path");
    so->add_option("--snapshot", snapshot_path, "hier potential snapshot CSV path");
    CLI::App* sr = app.add_subcommand("oracle", "closed-form toy orbit vs Runge-Kutta");
    sr->add_option("--nu", nu, "exponent ratio (non-integer, > 2)");
    sr->add_option("--s-lo", s_lo, "lower end of the comparison range");
    sr->add_option("--s-hi", s_hi, "upper end of the comparison range");
    sr->add_option("--output,-o", c.output, "comparison CSV path");
    CLI::App* sa = app.add_subcommand("audit", "model contract audit");
    add_common(sa, true);
    sa->add_option("--model", model_name, "null | poly | hier");
    sa->add_option("--samples", samples, "number of sampled domain points");
    sa->add_option("--seed", seed, "sampling seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "{\"type\": \"usage\", \"error\": \"" << e.what() << "\"}\n";
        return 2;
    }

    try {
        if (sk->parsed()) return run_kernels(c);
        if (sf->parsed()) return run_flow(c);
        if (sb->parsed()) return run_bounds(c, c_R);
        if (so->parsed())
            return run_orbit(c, model_name, tol, max_iter, seed, report_path, snapshot_path);
        if (sr->parsed()) return run_oracle(nu, c.output, s_lo, s_hi);
        if (sa->parsed()) return run_audit(c, model_name, samples, seed);
    } catch (const usage_error& e) {
        std::cerr << "{\"type\": \"usage\", \"error\": \"" << e.what() << "\"}\n";
        return 2;
    } catch (const domain_error& e) {
        std::cerr << "{\"type\": \"domain\", \"error\": \"" << e.what() << "\"}\n";
        return 1;
    } catch (const truncation_error& e) {
        std::cerr << "{\"type\": \"truncation\", \"error\": \"" << e.what() << "\"}\n";
        return 1;
    } catch (const divergence_error& e) {
        std::cerr << "{\"type\": \"divergence\", \"error\": \"" << e.what() << "\"}\n";
        return 1;
    } catch (const numerical_error& e) {
        std::cerr << "{\"type\": \"numerical\", \"error\": \"" << e.what() << "\"}\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "{\"type\": \"internal\", \"error\": \"" << e.what() << "\"}\n";
        return 1;
    }
    return 2;
}
