#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "optpot/constraint.hpp"
#include "optpot/grid.hpp"
#include "optpot/pde.hpp"

namespace optpot {

enum class Strategy { ProjectedGradient, MMA };

[[nodiscard]] std::string to_string(Strategy strategy);
[[nodiscard]] Strategy parse_strategy(const std::string& name);

struct OptimizerConfig {
    int max_iters = 200;
    /// Largest trial move of the projected-gradient step, as a fraction of the box width mu_max - nu.
    double initial_step = 1.0;
    double backtrack = 0.5;
    double armijo = 1e-4;
    int max_backtracks = 40;
    /// Stop once ||mu_{k+1} - mu_k|| / ||mu_k|| falls below this.
    double step_tol = 1e-8;
    /// Stop once |J_k - J_{k+1}| <= cost_tol * |J_k|.
    double cost_tol = 1e-12;
    Strategy strategy = Strategy::MMA;
    double solver_tol = kDefaultSolverTol;
    /// Initial asymptote distance and per-iteration move limit, fractions of the box width.
    double mma_asymptote = 0.5;
    double mma_move = 0.5;

    void validate() const;
};

struct IterationRecord {
    int iteration = 0;
    double cost = 0.0;
    double psi = 0.0;
    double step = 0.0;      // largest cellwise change of mu
    double residual = 0.0;  // ||mu_{k+1} - mu_k|| / ||mu_k||
    int backtracks = 0;
};

using IterationSink = std::function<void(const IterationRecord&)>;

enum class Termination { Stationary, StepTolerance, CostTolerance, MaxIterations, LineSearchFailed };

[[nodiscard]] std::string to_string(Termination reason);

struct OptResult {
    CellField mu;
    NodalField u;
    NodalField p;
    std::vector<double> cost_history;
    std::vector<double> psi_history;
    int iterations = 0;
    Termination reason = Termination::MaxIterations;
};

/// Exact gradient of the discrete cost h^2 <g, u(mu)> with respect to the
/// cell values: -node_pair_to_cell(u, p), with u and p solved at the same mu.
[[nodiscard]] CellField cost_gradient(const Grid& grid, const NodalField& u, const NodalField& p);

/// Exp: the uniform value with Psi = 1 (clamped into the box, raised to nu). Square: nu.
[[nodiscard]] CellField initial_potential(const Grid& grid, const PsiSpec& spec);

/// Minimizes h^2 <g, u(mu)> over the admissible set of `spec`, starting from
/// the projection of mu0. Every iterate is feasible and accepted steps satisfy
/// the Armijo condition J_new <= J + c1 <grad, mu_new - mu>.
[[nodiscard]] OptResult optimize(const Grid& grid, const PsiSpec& spec, const NodalField& f, const NodalField& g,
                                 const CellField& mu0, const OptimizerConfig& cfg, const IterationSink& sink = {});

/// h^2 * #{c : mu_c < mu_max / 2}: the part of D where the state is not suppressed.
[[nodiscard]] double material_area(const Grid& grid, const CellField& mu, double mu_max);

struct ProblemSetup {
    PsiSpec spec;
    NodalField f;
    NodalField g;
};

/// Builds the problem data on a given grid (sources, weight, admissible set).
using ProblemBuilder = std::function<ProblemSetup(const Grid&)>;

struct SweepRow {
    double M = 0.0;
    int n = 0;
    double cost = 0.0;
    double material_area = 0.0;
    double psi = 0.0;
    int iterations = 0;
    std::string status;  // termination reason, or the error category when the run failed
};

/// Even cell count giving a cell width as close as possible to `cell_width` on (-M, M).
[[nodiscard]] int cells_for_width(double half_width, double cell_width);

/// One optimize run per half width with the cell width held fixed. Runs that
/// hit an infeasible budget are reported in their row instead of aborting the sweep.
[[nodiscard]] std::vector<SweepRow> sweep_m(const ProblemBuilder& build, double cell_width,
                                            std::span<const double> half_widths, const OptimizerConfig& cfg);

struct GradientAuditInstance {
    Grid grid;
    CellField mu;
    NodalField f;
    NodalField g;
};

/// Random instance on (-1, 1)^2: mu in [1, 10], f in [0, 1], g in [0.5, 1.5].
[[nodiscard]] GradientAuditInstance random_audit_instance(int cells_per_side, std::uint64_t seed);

struct GradientAudit {
    std::vector<double> relative_errors;
    double max_relative_error = 0.0;
};

/// Compares <grad J, d> with central differences of the full pipeline cost at
/// step t = 1e-4 ||mu||_inf along `directions` random nonnegative directions.
[[nodiscard]] GradientAudit gradient_audit(const GradientAuditInstance& instance, int directions,
                                           std::uint64_t seed);

}  // namespace optpot
