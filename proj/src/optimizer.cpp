#include "optpot/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include "optpot/errors.hpp"
#include "optpot/physics.hpp"

namespace optpot {

namespace {

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

struct StateEval {
    SchrodingerOperator op;
    NodalField u;
    double cost;
};

StateEval state_eval(const Grid& grid, const CellField& mu, const NodalField& f, const NodalField& g, double tol) {
    SchrodingerOperator op = assemble(grid, mu);
    NodalField u = solve(op, f, tol).solution;
    const double j = cost(grid, g, u);
    return {std::move(op), std::move(u), j};
}

double state_cost(const Grid& grid, const CellField& mu, const NodalField& f, const NodalField& g, double tol) {
    return state_eval(grid, mu, f, g, tol).cost;
}

struct Evaluation {
    NodalField u;
    NodalField p;
    double cost;
};

// Completes a state evaluation with the adjoint, reusing the factorization.
Evaluation with_adjoint(StateEval state, const NodalField& g, double tol) {
    NodalField p = solve(state.op, g, tol).solution;
    return {std::move(state.u), std::move(p), state.cost};
}

Evaluation evaluate(const Grid& grid, const CellField& mu, const NodalField& f, const NodalField& g, double tol) {
    return with_adjoint(state_eval(grid, mu, f, g, tol), g, tol);
}

struct Candidate {
    CellField mu;
    StateEval state;
    int backtracks;
};

// Shared acceptance test for both strategies: J_new <= J + c1 <G, mu_new - mu>.
bool armijo_ok(double j, double j_new, const CellField& grad, const CellField& mu, const CellField& mu_new,
               double c1) {
    double slope = 0.0;
    for (std::size_t c = 0; c < mu.size(); ++c) slope += grad[c] * (mu_new[c] - mu[c]);
    return j_new <= j + c1 * slope;
}

class ProjectedGradientStep {
public:
    explicit ProjectedGradientStep(const OptimizerConfig& cfg) : fraction_(cfg.initial_step) {}

    std::optional<Candidate> operator()(const Grid& grid, const PsiSpec& spec, const NodalField& f,
                                        const NodalField& g, const CellField& mu, double j, const CellField& grad,
                                        const OptimizerConfig& cfg) {
        double width = 0.0;
        for (double v : spec.nu().values()) width = std::max(width, spec.mu_max() - v);
        const double scale = width / max_abs(grad.values());

        for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
            const double s = fraction_ * scale;
            std::vector<double> w(mu.size());
            for (std::size_t c = 0; c < w.size(); ++c) w[c] = mu[c] - s * grad[c];
            CellField trial = project_feasible(grid, spec, CellField(grid, std::move(w)));
            StateEval state = state_eval(grid, trial, f, g, cfg.solver_tol);
            if (armijo_ok(j, state.cost, grad, mu, trial, cfg.armijo)) {
                const double accepted = fraction_;
                fraction_ = std::min(cfg.initial_step, accepted / cfg.backtrack);
                return Candidate{std::move(trial), std::move(state), bt};
            }
            fraction_ *= cfg.backtrack;
        }
        return std::nullopt;
    }

private:
    double fraction_;
};

// Method of moving asymptotes: each cell gets the convex model
// P/(U - x) + Q/(x - L) matching the gradient at the current point; the budget
// is kept exact and handled by the same multiplier search as the projection.
// A rejected step pulls the asymptotes halfway in and retries.
class MmaStep {
public:
    std::optional<Candidate> operator()(const Grid& grid, const PsiSpec& spec, const NodalField& f,
                                        const NodalField& g, const CellField& mu, double j, const CellField& grad,
                                        const OptimizerConfig& cfg) {
        const std::size_t nc = mu.size();
        const auto nu = spec.nu().values();
        const double mu_max = spec.mu_max();
        std::vector<double> range(nc);
        for (std::size_t c = 0; c < nc; ++c) range[c] = std::max(mu_max - nu[c], 1e-12);

        update_asymptotes(mu, range, cfg);

        const double gscale = max_abs(grad.values());
        std::vector<double> lower(nc), upper(nc), p(nc), q(nc);
        constexpr double kRegularization = 1e-9;

        for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
            for (std::size_t c = 0; c < nc; ++c) {
                const double x = mu[c];
                lower[c] = std::max({nu[c], low_[c] + 0.1 * (x - low_[c]), x - cfg.mma_move * range[c]});
                upper[c] = std::min({mu_max, upp_[c] - 0.1 * (upp_[c] - x), x + cfg.mma_move * range[c]});
                const double gs = grad[c] / gscale;
                const double pos = std::max(gs, 0.0);
                const double neg = std::max(-gs, 0.0);
                p[c] = (1.001 * pos + 0.001 * neg + kRegularization) * (upp_[c] - x) * (upp_[c] - x);
                q[c] = (0.001 * pos + 1.001 * neg + kRegularization) * (x - low_[c]) * (x - low_[c]);
            }

            const CellArgmin argmin = [&](double weight, std::vector<double>& out) {
                for (std::size_t c = 0; c < nc; ++c) {
                    const double pc = p[c], qc = q[c], uc = upp_[c], lc = low_[c];
                    out[c] = minimize_convex_1d(
                        [&](double s) {
                            const double du = uc - s, dl = s - lc;
                            return pc / (du * du) - qc / (dl * dl) + weight * psi_density_prime(spec, s);
                        },
                        [&](double s) {
                            const double du = uc - s, dl = s - lc;
                            return 2.0 * pc / (du * du * du) + 2.0 * qc / (dl * dl * dl) +
                                   weight * psi_density_second(spec, s);
                        },
                        lower[c], upper[c], mu[c]);
                }
            };
            CellField trial = solve_budget_dual(grid, spec, argmin);
            StateEval state = state_eval(grid, trial, f, g, cfg.solver_tol);
            if (armijo_ok(j, state.cost, grad, mu, trial, cfg.armijo)) {
                previous2_ = previous1_;
                previous1_ = mu.to_vector();
                return Candidate{std::move(trial), std::move(state), bt};
            }
            for (std::size_t c = 0; c < nc; ++c) {
                low_[c] = mu[c] - 0.5 * (mu[c] - low_[c]);
                upp_[c] = mu[c] + 0.5 * (upp_[c] - mu[c]);
            }
        }
        return std::nullopt;
    }

private:
    void update_asymptotes(const CellField& mu, const std::vector<double>& range, const OptimizerConfig& cfg) {
        const std::size_t nc = mu.size();
        if (previous2_.empty()) {
            low_.resize(nc);
            upp_.resize(nc);
            for (std::size_t c = 0; c < nc; ++c) {
                low_[c] = mu[c] - cfg.mma_asymptote * range[c];
                upp_[c] = mu[c] + cfg.mma_asymptote * range[c];
            }
            return;
        }
        for (std::size_t c = 0; c < nc; ++c) {
            const double trend = (mu[c] - previous1_[c]) * (previous1_[c] - previous2_[c]);
            const double gamma = trend < 0.0 ? 0.7 : (trend > 0.0 ? 1.2 : 1.0);
            const double dl = std::clamp(gamma * (previous1_[c] - low_[c]), 0.01 * range[c], 10.0 * range[c]);
            const double du = std::clamp(gamma * (upp_[c] - previous1_[c]), 0.01 * range[c], 10.0 * range[c]);
            low_[c] = mu[c] - dl;
            upp_[c] = mu[c] + du;
        }
    }

    std::vector<double> low_, upp_;
    std::vector<double> previous1_, previous2_;
};

}  // namespace

std::string to_string(Strategy strategy) {
    return strategy == Strategy::MMA ? "mma" : "projected-gradient";
}

Strategy parse_strategy(const std::string& name) {
    if (name == "mma") return Strategy::MMA;
    if (name == "projected-gradient" || name == "pg") return Strategy::ProjectedGradient;
    throw InvalidArgument("unknown optimizer strategy '" + name + "'");
}

std::string to_string(Termination reason) {
    switch (reason) {
        case Termination::Stationary: return "stationary";
        case Termination::StepTolerance: return "step-tolerance";
        case Termination::CostTolerance: return "cost-tolerance";
        case Termination::MaxIterations: return "max-iterations";
        case Termination::LineSearchFailed: return "line-search-failed";
    }
    return "unknown";
}

void OptimizerConfig::validate() const {
    const auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) throw InvalidArgument(std::string("optimizer.") + name + " must be positive");
    };
    if (max_iters < 1) throw InvalidArgument("optimizer.max_iters must be >= 1");
    if (max_backtracks < 0) throw InvalidArgument("optimizer.max_backtracks must be >= 0");
    positive(initial_step, "initial_step");
    positive(backtrack, "backtrack");
    if (!(backtrack < 1.0)) throw InvalidArgument("optimizer.backtrack must be < 1");
    positive(armijo, "armijo");
    positive(step_tol, "step_tol");
    positive(cost_tol, "cost_tol");
    positive(solver_tol, "solver_tol");
    positive(mma_asymptote, "mma_asymptote");
    positive(mma_move, "mma_move");
}

CellField cost_gradient(const Grid& grid, const NodalField& u, const NodalField& p) {
    std::vector<double> grad = node_pair_to_cell(grid, u, p).to_vector();
    for (double& v : grad) v = -v;
    return CellField(grid, std::move(grad));
}

CellField initial_potential(const Grid& grid, const PsiSpec& spec) {
    require_same_grid(grid, spec.grid(), "initial_potential");
    const auto nu = spec.nu().values();
    if (!spec.is_exponential()) return spec.nu();

    // Psi(c) is decreasing in the uniform value c; bisect for Psi(c) = 1.
    const auto uniform_capacity = [&](double c) { return capacity_psi(grid, spec, constant_cells(grid, c)); };
    double value = 0.0;
    if (uniform_capacity(0.0) > 1.0) {
        double lo = 0.0, hi = spec.mu_max();
        if (uniform_capacity(hi) > 1.0) {
            value = hi;
        } else {
            for (int it = 0; it < 200 && hi - lo > 1e-12 * spec.mu_max(); ++it) {
                const double mid = 0.5 * (lo + hi);
                (uniform_capacity(mid) > 1.0 ? lo : hi) = mid;
            }
            value = hi;
        }
    }
    std::vector<double> mu(grid.num_cells());
    for (std::size_t c = 0; c < mu.size(); ++c) mu[c] = std::max(nu[c], value);
    return CellField(grid, std::move(mu));
}

OptResult optimize(const Grid& grid, const PsiSpec& spec, const NodalField& f, const NodalField& g,
                   const CellField& mu0, const OptimizerConfig& cfg, const IterationSink& sink) {
    cfg.validate();
    require_same_grid(grid, spec.grid(), "optimize");
    require_same_grid(grid, f.grid(), "optimize");
    require_same_grid(grid, g.grid(), "optimize");
    require_same_grid(grid, mu0.grid(), "optimize");

    CellField mu = project_feasible(grid, spec, mu0);
    Evaluation eval = evaluate(grid, mu, f, g, cfg.solver_tol);

    OptResult result{mu, eval.u, eval.p, {eval.cost}, {capacity_psi(grid, spec, mu)}, 0,
                     Termination::MaxIterations};
    if (sink) sink(IterationRecord{0, eval.cost, result.psi_history.back(), 0.0, 0.0, 0});

    ProjectedGradientStep pg_step(cfg);
    MmaStep mma_step;

    for (int k = 1; k <= cfg.max_iters; ++k) {
        result.iterations = k;
        const CellField grad = cost_gradient(grid, eval.u, eval.p);
        if (max_abs(grad.values()) == 0.0) {
            result.reason = Termination::Stationary;
            break;
        }

        std::optional<Candidate> next = cfg.strategy == Strategy::MMA
                                            ? mma_step(grid, spec, f, g, mu, eval.cost, grad, cfg)
                                            : pg_step(grid, spec, f, g, mu, eval.cost, grad, cfg);
        if (!next) {
            result.reason = Termination::LineSearchFailed;
            break;
        }

        std::vector<double> diff(mu.size());
        for (std::size_t c = 0; c < diff.size(); ++c) diff[c] = next->mu[c] - mu[c];
        const double mu_norm = norm2(mu.values());
        const double change = mu_norm > 0.0 ? norm2(diff) / mu_norm : norm2(diff);
        const double previous_cost = eval.cost;

        mu = std::move(next->mu);
        eval = with_adjoint(std::move(next->state), g, cfg.solver_tol);
        const double psi = capacity_psi(grid, spec, mu);
        result.cost_history.push_back(eval.cost);
        result.psi_history.push_back(psi);
        if (sink) sink(IterationRecord{k, eval.cost, psi, max_abs(diff), change, next->backtracks});

        if (change < cfg.step_tol) {
            result.reason = Termination::StepTolerance;
            break;
        }
        if (std::abs(previous_cost - eval.cost) <= cfg.cost_tol * std::abs(previous_cost)) {
            result.reason = Termination::CostTolerance;
            break;
        }
    }

    result.mu = std::move(mu);
    result.u = std::move(eval.u);
    result.p = std::move(eval.p);
    return result;
}

double material_area(const Grid& grid, const CellField& mu, double mu_max) {
    require_same_grid(grid, mu.grid(), "material_area");
    std::size_t count = 0;
    for (double v : mu.values()) count += v < 0.5 * mu_max ? 1 : 0;
    return grid.cell_area() * static_cast<double>(count);
}

int cells_for_width(double half_width, double cell_width) {
    if (!(half_width > 0.0) || !(cell_width > 0.0)) {
        throw InvalidArgument("cells_for_width: half width and cell width must be positive");
    }
    const long pairs = std::lround(half_width / cell_width);
    return static_cast<int>(std::max(2L, 2 * pairs));
}

std::vector<SweepRow> sweep_m(const ProblemBuilder& build, double cell_width, std::span<const double> half_widths,
                              const OptimizerConfig& cfg) {
    std::vector<SweepRow> rows;
    rows.reserve(half_widths.size());
    for (double half_width : half_widths) {
        const Grid grid = make_grid(half_width, cells_for_width(half_width, cell_width));
        SweepRow row;
        row.M = half_width;
        row.n = grid.cells_per_side();
        try {
            const ProblemSetup setup = build(grid);
            const OptResult res =
                optimize(grid, setup.spec, setup.f, setup.g, initial_potential(grid, setup.spec), cfg);
            row.cost = res.cost_history.back();
            row.material_area = material_area(grid, res.mu, setup.spec.mu_max());
            row.psi = res.psi_history.back();
            row.iterations = res.iterations;
            row.status = to_string(res.reason);
        } catch (const InfeasibleProblem&) {
            row.cost = row.material_area = row.psi = std::numeric_limits<double>::quiet_NaN();
            row.status = "infeasible-problem";
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

GradientAuditInstance random_audit_instance(int cells_per_side, std::uint64_t seed) {
    const Grid grid = make_grid(1.0, cells_per_side);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mu_dist(1.0, 10.0), f_dist(0.0, 1.0), g_dist(0.5, 1.5);
    std::vector<double> mu(grid.num_cells()), f(grid.num_interior_nodes()), g(grid.num_interior_nodes());
    for (double& v : mu) v = mu_dist(rng);
    for (double& v : f) v = f_dist(rng);
    for (double& v : g) v = g_dist(rng);
    return {grid, CellField(grid, std::move(mu)), NodalField(grid, std::move(f)), NodalField(grid, std::move(g))};
}

GradientAudit gradient_audit(const GradientAuditInstance& inst, int directions, std::uint64_t seed) {
    if (directions < 1) throw InvalidArgument("gradient_audit: need at least one direction");
    const Grid& grid = inst.grid;
    constexpr double kTol = 1e-13;
    const Evaluation eval = evaluate(grid, inst.mu, inst.f, inst.g, kTol);
    const CellField grad = cost_gradient(grid, eval.u, eval.p);
    const double t = 1e-4 * max_abs(inst.mu.values());

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dir_dist(0.0, 1.0);
    GradientAudit audit;
    for (int d = 0; d < directions; ++d) {
        std::vector<double> delta(grid.num_cells());
        for (double& v : delta) v = dir_dist(rng);
        std::vector<double> plus(delta.size()), minus(delta.size());
        double predicted = 0.0;
        for (std::size_t c = 0; c < delta.size(); ++c) {
            plus[c] = inst.mu[c] + t * delta[c];
            minus[c] = inst.mu[c] - t * delta[c];
            predicted += grad[c] * delta[c];
        }
        const double jp = state_cost(grid, CellField(grid, std::move(plus)), inst.f, inst.g, kTol);
        const double jm = state_cost(grid, CellField(grid, std::move(minus)), inst.f, inst.g, kTol);
        const double fd = (jp - jm) / (2.0 * t);
        const double err = std::abs(fd - predicted) / std::abs(predicted);
        audit.relative_errors.push_back(err);
        audit.max_relative_error = std::max(audit.max_relative_error, err);
    }
    return audit;
}

}  // namespace optpot
