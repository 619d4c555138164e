#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "optpot/errors.hpp"
#include "optpot/optimizer.hpp"
#include "optpot/physics.hpp"
#include "test_util.hpp"

using namespace optpot;
using optpot::testing::constant_nodes;
using optpot::testing::random_cells;
using optpot::testing::random_nodal;

namespace {

struct CaseOne {
    Grid grid;
    PsiSpec spec;
    NodalField f;
    NodalField g;
};

CaseOne case_one(double M, int n, double m) {
    const Grid grid = make_grid(M, n);
    return {grid, PsiSpec::exponential(m, kDefaultAlpha, kDefaultMuMax, constant_cells(grid, 0.0)),
            sample_source(grid, SourcePreset{}), sample_weight(grid)};
}

void expect_descent_contract(const CaseOne& c, const OptResult& r) {
    ASSERT_EQ(r.cost_history.size(), r.psi_history.size());
    for (std::size_t k = 1; k < r.cost_history.size(); ++k) {
        EXPECT_LE(r.cost_history[k], r.cost_history[k - 1] + 1e-12 * std::abs(r.cost_history[k - 1])) << k;
    }
    for (double psi : r.psi_history) EXPECT_LE(psi, 1.0 + 1e-8);
    for (std::size_t i = 0; i < r.mu.size(); ++i) {
        EXPECT_GE(r.mu[i], c.spec.nu()[i]);
        EXPECT_LE(r.mu[i], c.spec.mu_max());
    }
}

}  // namespace

TEST(CostGradient, VanishesWithZeroState) {
    const Grid g = make_grid(1.0, 6);
    std::mt19937_64 rng(1);
    const CellField grad = cost_gradient(g, NodalField(g), random_nodal(g, -1.0, 1.0, rng));
    for (double v : grad.values()) EXPECT_EQ(v, 0.0);
}

TEST(CostGradient, NonpositiveForNonnegativeData) {
    const GradientAuditInstance inst = random_audit_instance(10, 4);
    const NodalField u = solve_state(inst.grid, inst.mu, inst.f);
    const NodalField p = solve_adjoint(inst.grid, inst.mu, inst.g);
    const CellField grad = cost_gradient(inst.grid, u, p);
    for (double v : grad.values()) EXPECT_LE(v, 0.0);
}

TEST(CostGradient, MatchesFiniteDifferences) {
    for (std::uint64_t seed : {1u, 7u, 42u}) {
        const GradientAudit audit = gradient_audit(random_audit_instance(8, seed), 20, seed + 100);
        EXPECT_EQ(audit.relative_errors.size(), 20u);
        EXPECT_LT(audit.max_relative_error, 1e-6) << seed;
    }
}

TEST(Optimize, ZeroSourceIsStationaryImmediately) {
    const CaseOne c = case_one(2.0, 10, 2.0);
    const OptResult r = optimize(c.grid, c.spec, NodalField(c.grid), c.g, initial_potential(c.grid, c.spec), {});
    EXPECT_EQ(r.reason, Termination::Stationary);
    EXPECT_EQ(r.iterations, 1);
    EXPECT_EQ(r.cost_history.back(), 0.0);
}

TEST(Optimize, InitialPotentialSaturatesBudget) {
    const CaseOne c = case_one(3.0, 12, 2.0);
    const CellField mu0 = initial_potential(c.grid, c.spec);
    EXPECT_NEAR(capacity_psi(c.grid, c.spec, mu0), 1.0, 1e-9);
    for (double v : mu0.values()) EXPECT_EQ(v, mu0[0]);

    const Grid g = make_grid(1.0, 4);
    std::mt19937_64 rng(2);
    const CellField nu = random_cells(g, 0.1, 0.2, rng);
    const PsiSpec sq = PsiSpec::square(1.0, 10.0, nu);
    const CellField start = initial_potential(g, sq);
    for (std::size_t i = 0; i < start.size(); ++i) EXPECT_EQ(start[i], nu[i]);
}

TEST(Optimize, BothStrategiesKeepTheContract) {
    const CaseOne c = case_one(3.0, 30, 2.0);
    for (Strategy s : {Strategy::MMA, Strategy::ProjectedGradient}) {
        OptimizerConfig cfg;
        cfg.strategy = s;
        cfg.max_iters = 40;
        int records = 0;
        const OptResult r = optimize(c.grid, c.spec, c.f, c.g, initial_potential(c.grid, c.spec), cfg,
                                     [&records](const IterationRecord& rec) {
                                         EXPECT_EQ(rec.iteration, records);
                                         ++records;
                                     });
        expect_descent_contract(c, r);
        EXPECT_EQ(static_cast<std::size_t>(records), r.cost_history.size());
        EXPECT_LT(r.cost_history.back(), r.cost_history.front());
        EXPECT_LT(r.cost_history.back(), 0.0) << to_string(s);
    }
}

TEST(Optimize, InfeasibleStartIsProjected) {
    const CaseOne c = case_one(3.0, 20, 2.0);
    OptimizerConfig cfg;
    cfg.max_iters = 3;
    const OptResult r = optimize(c.grid, c.spec, c.f, c.g, constant_cells(c.grid, 0.0), cfg);
    EXPECT_LE(r.psi_history.front(), 1.0 + 1e-8);
}

TEST(Optimize, SlackBudgetGivesNearlyBangBangPotential) {
    const CaseOne c = case_one(5.0, 50, 20.0);
    const OptResult r = optimize(c.grid, c.spec, c.f, c.g, initial_potential(c.grid, c.spec), {});
    EXPECT_LT(r.psi_history.back(), 1.0);
    std::size_t near = 0, gray = 0;
    const int n = c.grid.cells_per_side();
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const double x = c.grid.cell_center(i), y = c.grid.cell_center(j);
            if (x * x + y * y > 2.0 * 2.0) continue;
            ++near;
            const double v = r.mu[c.grid.cell_index(i, j)];
            gray += (v > 0.05 * kDefaultMuMax && v < 0.95 * kDefaultMuMax) ? 1 : 0;
        }
    }
    EXPECT_LT(static_cast<double>(gray), 0.1 * static_cast<double>(near));
}

TEST(Optimize, RejectsInvalidConfig) {
    const CaseOne c = case_one(1.0, 4, 2.0);
    OptimizerConfig cfg;
    cfg.backtrack = 1.0;
    EXPECT_THROW((void)optimize(c.grid, c.spec, c.f, c.g, initial_potential(c.grid, c.spec), cfg),
                 InvalidArgument);
    cfg = {};
    cfg.max_iters = 0;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.armijo = -1.0;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(Strategy, Names) {
    EXPECT_EQ(parse_strategy("mma"), Strategy::MMA);
    EXPECT_EQ(parse_strategy("pg"), Strategy::ProjectedGradient);
    EXPECT_EQ(parse_strategy(to_string(Strategy::ProjectedGradient)), Strategy::ProjectedGradient);
    EXPECT_THROW((void)parse_strategy("newton"), InvalidArgument);
    EXPECT_EQ(to_string(Termination::LineSearchFailed), "line-search-failed");
}

TEST(MaterialArea, CountsCellsBelowHalfCap) {
    const Grid g = make_grid(1.0, 4);
    std::vector<double> mu(16, 100.0);
    mu[0] = 49.9;
    mu[5] = 50.0;
    mu[6] = 0.0;
    EXPECT_DOUBLE_EQ(material_area(g, CellField(g, mu), 100.0), 2.0 * 0.25);
}

TEST(Sweep, CellCounts) {
    EXPECT_EQ(cells_for_width(5.0, 0.1), 100);
    EXPECT_EQ(cells_for_width(20.0, 0.1), 400);
    EXPECT_EQ(cells_for_width(1.0, 10.0), 2);
    EXPECT_THROW((void)cells_for_width(0.0, 0.1), InvalidArgument);
}

TEST(Sweep, SingleWidthMatchesDirectRunAndEmptyListIsEmpty) {
    const ProblemBuilder build = [](const Grid& grid) {
        return ProblemSetup{PsiSpec::exponential(2.0, kDefaultAlpha, kDefaultMuMax, constant_cells(grid, 0.0)),
                            sample_source(grid, SourcePreset{}), sample_weight(grid)};
    };
    OptimizerConfig cfg;
    cfg.max_iters = 15;
    EXPECT_TRUE(sweep_m(build, 0.25, std::vector<double>{}, cfg).empty());

    const std::vector<double> widths{3.0};
    const std::vector<SweepRow> rows = sweep_m(build, 0.25, widths, cfg);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].n, 24);

    const CaseOne c = case_one(3.0, 24, 2.0);
    const OptResult r = optimize(c.grid, c.spec, c.f, c.g, initial_potential(c.grid, c.spec), cfg);
    EXPECT_EQ(rows[0].cost, r.cost_history.back());
    EXPECT_EQ(rows[0].iterations, r.iterations);
    EXPECT_EQ(rows[0].status, to_string(r.reason));
}

TEST(Sweep, InfeasibleRowIsReported) {
    const ProblemBuilder build = [](const Grid& grid) {
        return ProblemSetup{PsiSpec::square(1e-6, 10.0, constant_cells(grid, 1.0)),
                            sample_source(grid, SourcePreset{SourceKind::F2, std::nullopt}), sample_weight(grid)};
    };
    const std::vector<double> widths{2.0};
    const std::vector<SweepRow> rows = sweep_m(build, 0.5, widths, {});
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].status, "infeasible-problem");
    EXPECT_TRUE(std::isnan(rows[0].cost));
}
