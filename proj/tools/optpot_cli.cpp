// optpot: command-line front end. Errors go to stderr as a single
// "error: <category>: <message>" line with a nonzero exit status.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "optpot/errors.hpp"
#include "optpot/io.hpp"
#include "optpot/kkt.hpp"
#include "optpot/optimizer.hpp"
#include "optpot/pde.hpp"
#include "optpot/physics.hpp"
#include "optpot/radial.hpp"

namespace fs = std::filesystem;
using namespace optpot;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string one_line(std::string s) {
    for (char& c : s) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return s;
}

int report_error(const std::string& category, const std::string& message) {
    std::cerr << "error: " << category << ": " << one_line(message) << '\n';
    return kExitFailure;
}

// "2pi" and "pi" are accepted so that the boundary case m = 2 pi is exact.
double parse_m(const std::string& s) {
    if (s == "pi") return std::numbers::pi;
    if (s == "2pi") return 2.0 * std::numbers::pi;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size()) throw InvalidArgument("oracle: cannot parse m '" + s + "'");
    return v;
}

fs::path prepare_out(ExperimentConfig& cfg, const std::string& out_override) {
    if (!out_override.empty()) cfg.output_dir = out_override;
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) throw IoError("cannot create output directory " + cfg.output_dir.string() + ": " + ec.message());
    return cfg.output_dir;
}

void export_pair(const NodalField& field, const fs::path& dir, const std::string& name,
                 std::vector<std::string>& files) {
    export_field(field, dir / (name + ".csv"), FieldFormat::Csv, name);
    export_field(field, dir / (name + ".vtk"), FieldFormat::Vtk, name);
    files.push_back(name + ".csv");
    files.push_back(name + ".vtk");
}

void export_pair(const CellField& field, const fs::path& dir, const std::string& name,
                 std::vector<std::string>& files) {
    export_field(field, dir / (name + ".csv"), FieldFormat::Csv, name);
    export_field(field, dir / (name + ".vtk"), FieldFormat::Vtk, name);
    files.push_back(name + ".csv");
    files.push_back(name + ".vtk");
}

CellField potential_input(const Grid& grid, const std::string& mu_file, const double* mu_const) {
    if (!mu_file.empty()) return import_cell_csv(grid, mu_file);
    if (mu_const) return constant_cells(grid, *mu_const);
    throw InvalidArgument("a potential is required: pass --mu FILE or --mu-const VALUE");
}

struct SolveArgs {
    std::string config, mu_file, out, method = "direct";
    double mu_const = 0.0;
    CLI::Option* mu_const_opt = nullptr;
};

int run_solve(const SolveArgs& a) {
    ExperimentConfig cfg = load_config(a.config);
    const Grid grid = make_grid(cfg.M, cfg.n);
    const ProblemSetup setup = build_problem(cfg, grid);
    const CellField mu = potential_input(grid, a.mu_file, *a.mu_const_opt ? &a.mu_const : nullptr);
    SolverMethod method = SolverMethod::Direct;
    if (a.method == "pcg") {
        method = SolverMethod::ConjugateGradient;
    } else if (a.method != "direct") {
        throw InvalidArgument("unknown solver method '" + a.method + "'");
    }

    const SolveResult res = solve(assemble(grid, mu), setup.f, cfg.optimizer.solver_tol, method);
    const fs::path dir = prepare_out(cfg, a.out);
    std::vector<std::string> files;
    export_pair(res.solution, dir, "u", files);
    write_manifest(dir, "solve", cfg, files);

    std::cout << "cost=" << g17(cost(grid, setup.g, res.solution)) << '\n'
              << "method=" << to_string(res.report.method) << '\n'
              << "iterations=" << res.report.iterations << '\n'
              << "relative_residual=" << g17(res.report.relative_residual) << '\n';
    return 0;
}

struct OptimizeArgs {
    std::string config, out, strategy;
    int max_iters = 0;
};

int run_optimize(const OptimizeArgs& a) {
    ExperimentConfig cfg = load_config(a.config);
    if (!a.strategy.empty()) cfg.optimizer.strategy = parse_strategy(a.strategy);
    if (a.max_iters > 0) cfg.optimizer.max_iters = a.max_iters;
    const Grid grid = make_grid(cfg.M, cfg.n);
    const ProblemSetup setup = build_problem(cfg, grid);
    const fs::path dir = prepare_out(cfg, a.out);

    const fs::path log_path = dir / "cost_log.csv";
    std::ofstream log(log_path, std::ios::binary | std::ios::trunc);
    if (!log) throw IoError("cannot write " + log_path.string());
    log << "iter,cost,psi,step,residual\n";
    const IterationSink sink = [&log](const IterationRecord& r) {
        log << r.iteration << ',' << g17(r.cost) << ',' << g17(r.psi) << ',' << g17(r.step) << ','
            << g17(r.residual) << '\n';
    };

    const OptResult res =
        optimize(grid, setup.spec, setup.f, setup.g, initial_potential(grid, setup.spec), cfg.optimizer, sink);
    log.flush();
    if (!log) throw IoError("write failed for " + log_path.string());

    std::vector<std::string> files{"cost_log.csv"};
    export_pair(res.mu, dir, "mu", files);
    export_pair(res.u, dir, "u", files);
    export_pair(res.p, dir, "p", files);
    write_manifest(dir, "optimize", cfg, files);

    std::cout << "cost=" << g17(res.cost_history.back()) << '\n'
              << "psi=" << g17(res.psi_history.back()) << '\n'
              << "material_area=" << g17(material_area(grid, res.mu, cfg.mu_max)) << '\n'
              << "iterations=" << res.iterations << '\n'
              << "termination=" << to_string(res.reason) << '\n';
    return 0;
}

struct KktArgs {
    std::string config, mu_file;
};

int run_kkt(const KktArgs& a) {
    const ExperimentConfig cfg = load_config(a.config);
    const Grid grid = make_grid(cfg.M, cfg.n);
    const ProblemSetup setup = build_problem(cfg, grid);
    const CellField mu = import_cell_csv(grid, a.mu_file);
    const double tol = cfg.optimizer.solver_tol;
    const NodalField u = solve_state(grid, mu, setup.f, tol);
    const NodalField p = solve_adjoint(grid, mu, setup.g, tol);
    std::cout << to_key_value(kkt_report(grid, setup.spec, mu, u, p));
    return 0;
}

struct SweepArgs {
    std::string config, out;
    std::vector<double> widths{5.0, 10.0, 20.0};
    double h = 0.0;
};

int run_sweep(const SweepArgs& a) {
    ExperimentConfig cfg = load_config(a.config);
    const double h = a.h > 0.0 ? a.h : 2.0 * cfg.M / cfg.n;
    const ProblemBuilder builder = [&cfg](const Grid& grid) { return build_problem(cfg, grid); };
    const std::vector<SweepRow> rows = sweep_m(builder, h, a.widths, cfg.optimizer);

    std::ostringstream table;
    table << "M,n,cost,material_area,psi,iterations,status\n";
    double spread = 0.0;
    for (const SweepRow& r : rows) {
        table << g17(r.M) << ',' << r.n << ',' << g17(r.cost) << ',' << g17(r.material_area) << ',' << g17(r.psi)
              << ',' << r.iterations << ',' << r.status << '\n';
        for (const SweepRow& s : rows) {
            spread = std::max(spread, std::abs(r.cost - s.cost) / std::max(std::abs(r.cost), std::abs(s.cost)));
        }
    }
    std::cout << table.str() << "max_relative_cost_gap=" << g17(spread) << '\n';

    if (!a.out.empty()) {
        const fs::path dir = prepare_out(cfg, a.out);
        std::ofstream out(dir / "sweep.csv", std::ios::binary | std::ios::trunc);
        out << table.str();
        if (!out) throw IoError("cannot write " + (dir / "sweep.csv").string());
        write_manifest(dir, "sweep-m", cfg, {"sweep.csv"});
    }
    return 0;
}

int run_oracle(const std::vector<std::string>& ms) {
    std::cout << "m,radius,scan_radius,resolution,area,cost\n";
    for (const std::string& s : ms) {
        const double m = parse_m(s);
        const RadialOptimum opt = radial_optimal_radius(m);
        std::cout << g17(m) << ',' << g17(opt.formula) << ',' << g17(opt.scan) << ',' << g17(opt.resolution) << ','
                  << g17(std::numbers::pi * opt.formula * opt.formula) << ',' << g17(radial_cost_exact(opt.formula))
                  << '\n';
    }
    return 0;
}

struct GradcheckArgs {
    int n = 8;
    std::uint64_t seed = 7;
    int directions = 20;
    double tol = 1e-5;
};

int run_gradcheck(const GradcheckArgs& a) {
    const GradientAudit audit = gradient_audit(random_audit_instance(a.n, a.seed), a.directions, a.seed + 1);
    std::cout << "directions=" << audit.relative_errors.size() << '\n'
              << "max_relative_error=" << g17(audit.max_relative_error) << '\n';
    if (!(audit.max_relative_error < a.tol)) {
        return report_error("gradient-mismatch",
                            "max relative error " + g17(audit.max_relative_error) + " >= " + g17(a.tol));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal potentials for -Lap u + mu u = f on (-M, M)^2"};
    app.require_subcommand(1);

    SolveArgs solve_args;
    auto* solve_cmd = app.add_subcommand("solve", "state solve for a given potential");
    solve_cmd->add_option("--config", solve_args.config, "experiment config (JSON)")->required();
    auto* mu_file_opt = solve_cmd->add_option("--mu", solve_args.mu_file, "potential as cell CSV");
    solve_args.mu_const_opt =
        solve_cmd->add_option("--mu-const", solve_args.mu_const, "constant potential")->excludes(mu_file_opt);
    solve_cmd->add_option("--out", solve_args.out, "output directory (overrides config)");
    solve_cmd->add_option("--method", solve_args.method, "direct or pcg");

    OptimizeArgs opt_args;
    auto* opt_cmd = app.add_subcommand("optimize", "run a full experiment");
    opt_cmd->add_option("--config", opt_args.config, "experiment config (JSON)")->required();
    opt_cmd->add_option("--out", opt_args.out, "output directory (overrides config)");
    opt_cmd->add_option("--strategy", opt_args.strategy, "mma or projected-gradient");
    opt_cmd->add_option("--max-iters", opt_args.max_iters, "iteration cap (overrides config)");

    KktArgs kkt_args;
    auto* kkt_cmd = app.add_subcommand("kkt", "optimality report for a given potential");
    kkt_cmd->add_option("--config", kkt_args.config, "experiment config (JSON)")->required();
    kkt_cmd->add_option("--mu", kkt_args.mu_file, "potential as cell CSV")->required();

    SweepArgs sweep_args;
    auto* sweep_cmd = app.add_subcommand("sweep-m", "optimize over several M at fixed cell width");
    sweep_cmd->add_option("--config", sweep_args.config, "experiment config (JSON)")->required();
    sweep_cmd->add_option("--M", sweep_args.widths, "half widths")->delimiter(',');
    sweep_cmd->add_option("--cell-width", sweep_args.h, "cell width (default 2M/n of the config)");
    sweep_cmd->add_option("--out", sweep_args.out, "also write sweep.csv and a manifest here");

    std::vector<std::string> oracle_ms{"1", "2", "2pi", "10", "20"};
    auto* oracle_cmd = app.add_subcommand("oracle", "radial Case-1 optimum table");
    oracle_cmd->add_option("--m", oracle_ms, "budgets (numbers, 'pi' or '2pi')")->delimiter(',');

    GradcheckArgs gc_args;
    auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference gradient audit");
    gc_cmd->add_option("--n", gc_args.n, "cells per side");
    gc_cmd->add_option("--seed", gc_args.seed, "random seed");
    gc_cmd->add_option("--directions", gc_args.directions, "number of random directions");
    gc_cmd->add_option("--tol", gc_args.tol, "pass threshold on the max relative error");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << one_line(e.what()) << '\n';
        return kExitUsage;
    }

    try {
        if (*solve_cmd) return run_solve(solve_args);
        if (*opt_cmd) return run_optimize(opt_args);
        if (*kkt_cmd) return run_kkt(kkt_args);
        if (*sweep_cmd) return run_sweep(sweep_args);
        if (*oracle_cmd) return run_oracle(oracle_ms);
        if (*gc_cmd) return run_gradcheck(gc_args);
    } catch (const InfeasibleProblem& e) {
        return report_error("infeasible-problem", e.what());
    } catch (const SolverFailure& e) {
        return report_error("solver-failure", e.what());
    } catch (const ConfigError& e) {
        return report_error("config-error", e.what());
    } catch (const NotFound& e) {
        return report_error("not-found", e.what());
    } catch (const IoError& e) {
        return report_error("io-error", e.what());
    } catch (const InvalidArgument& e) {
        return report_error("invalid-argument", e.what());
    } catch (const std::exception& e) {
        return report_error("internal-error", e.what());
    }
    return kExitUsage;
}
