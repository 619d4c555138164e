#include "optpot/constraint.hpp"

#include <cmath>
#include <string>

#include "optpot/errors.hpp"

namespace optpot {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_nonnegative(double s, const char* what) {
    if (!(s >= 0.0)) throw InvalidArgument(std::string(what) + ": argument must be >= 0, got " + std::to_string(s));
}

// Psi of the most favourable admissible field: the cap for Exp, the floor nu for Square.
double best_case_capacity(const Grid& grid, const PsiSpec& spec) {
    if (spec.is_exponential()) return capacity_psi(grid, spec, constant_cells(grid, spec.mu_max()));
    return capacity_psi(grid, spec, spec.nu());
}

}  // namespace

PsiSpec::PsiSpec(Variant variant, double mu_max, CellField nu, CapCost cap)
    : variant_(variant), mu_max_(mu_max), nu_(std::move(nu)), cap_(cap) {
    if (!(mu_max_ > 0.0) || !std::isfinite(mu_max_)) throw InvalidArgument("PsiSpec: mu_max must be positive");
    for (double v : nu_.values()) {
        if (v < 0.0) throw InvalidArgument("PsiSpec: lower bound nu must be >= 0");
        if (v > mu_max_) throw InvalidArgument("PsiSpec: lower bound nu exceeds mu_max");
    }
}

PsiSpec PsiSpec::exponential(double m, double alpha, double mu_max, CellField nu, CapCost cap) {
    if (!(m > 0.0)) throw InvalidArgument("PsiSpec: m must be positive");
    if (!(alpha > 0.0)) throw InvalidArgument("PsiSpec: alpha must be positive");
    return PsiSpec(ExpPsi{m, alpha}, mu_max, std::move(nu), cap);
}

PsiSpec PsiSpec::square(double budget, double mu_max, CellField nu) {
    if (!(budget > 0.0)) throw InvalidArgument("PsiSpec: budget must be positive");
    bool any_positive = false;
    for (double v : nu.values()) any_positive = any_positive || v > 0.0;
    if (!any_positive) {
        throw InvalidArgument("PsiSpec: square variant needs a lower bound nu that is not identically zero");
    }
    return PsiSpec(SquarePsi{budget}, mu_max, std::move(nu), CapCost::Charged);
}

double psi_value(const PsiSpec& spec, double s) {
    require_nonnegative(s, "psi_value");
    return std::visit(Overloaded{[s](const ExpPsi& e) { return std::exp(-e.alpha * s) / e.m; },
                                 [s](const SquarePsi&) { return s * s; }},
                      spec.variant());
}

double psi_prime(const PsiSpec& spec, double s) {
    require_nonnegative(s, "psi_prime");
    return std::visit(Overloaded{[s](const ExpPsi& e) { return -e.alpha * std::exp(-e.alpha * s) / e.m; },
                                 [s](const SquarePsi&) { return 2.0 * s; }},
                      spec.variant());
}

double psi_density(const PsiSpec& spec, double s) {
    return std::visit(Overloaded{[&](const ExpPsi& e) {
                                     const double v = std::exp(-e.alpha * s) / e.m;
                                     if (spec.cap_cost() == CapCost::Charged) return v;
                                     return v - std::exp(-e.alpha * spec.mu_max()) / e.m;
                                 },
                                 [s](const SquarePsi& q) { return s * s / q.budget; }},
                      spec.variant());
}

double psi_density_prime(const PsiSpec& spec, double s) {
    return std::visit(Overloaded{[s](const ExpPsi& e) { return -e.alpha * std::exp(-e.alpha * s) / e.m; },
                                 [s](const SquarePsi& q) { return 2.0 * s / q.budget; }},
                      spec.variant());
}

double psi_density_second(const PsiSpec& spec, double s) {
    return std::visit(
        Overloaded{[s](const ExpPsi& e) { return e.alpha * e.alpha * std::exp(-e.alpha * s) / e.m; },
                   [](const SquarePsi& q) { return 2.0 / q.budget; }},
        spec.variant());
}

double capacity_psi(const Grid& grid, const PsiSpec& spec, const CellField& mu) {
    require_same_grid(grid, mu.grid(), "capacity_psi");
    require_same_grid(grid, spec.grid(), "capacity_psi");
    double sum = 0.0;
    for (double v : mu.values()) sum += psi_density(spec, v);
    return grid.cell_area() * sum;
}

CellField solve_budget_dual(const Grid& grid, const PsiSpec& spec, const CellArgmin& argmin) {
    require_same_grid(grid, spec.grid(), "solve_budget_dual");
    const double h2 = grid.cell_area();
    std::vector<double> trial(grid.num_cells());
    const auto capacity_at = [&](double lambda) {
        argmin(lambda * h2, trial);
        return capacity_psi(grid, spec, CellField(grid, trial));
    };

    if (capacity_at(0.0) <= 1.0) return CellField(grid, trial);

    const double best = best_case_capacity(grid, spec);
    if (best > 1.0) {
        throw InfeasibleProblem("Psi >= " + std::to_string(best) +
                                " for every admissible potential");
    }

    double lo = 0.0;
    double hi = 1.0;
    double cap_hi = capacity_at(hi);
    while (cap_hi > 1.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 0x1p60) {
            throw InfeasibleProblem("budget multiplier bracket exceeded 2^60");
        }
        cap_hi = capacity_at(hi);
    }
    std::vector<double> best_field = trial;

    for (int it = 0; it < 300 && cap_hi < 1.0 - kBudgetTolerance; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (!(mid > lo && mid < hi)) break;
        const double cap_mid = capacity_at(mid);
        if (cap_mid > 1.0) {
            lo = mid;
        } else {
            hi = mid;
            cap_hi = cap_mid;
            best_field = trial;
        }
    }
    return CellField(grid, std::move(best_field));
}

CellField project_feasible(const Grid& grid, const PsiSpec& spec, const CellField& w) {
    require_same_grid(grid, w.grid(), "project_feasible");
    require_same_grid(grid, spec.grid(), "project_feasible");
    const auto nu = spec.nu().values();
    const double mu_max = spec.mu_max();
    const auto wv = w.values();

    CellArgmin argmin;
    if (const auto* sq = std::get_if<SquarePsi>(&spec.variant())) {
        const double budget = sq->budget;
        argmin = [=](double weight, std::vector<double>& out) {
            const double shrink = 1.0 + 2.0 * weight / budget;
            for (std::size_t c = 0; c < out.size(); ++c) out[c] = std::clamp(wv[c] / shrink, nu[c], mu_max);
        };
    } else {
        argmin = [&spec, wv, nu, mu_max](double weight, std::vector<double>& out) {
            for (std::size_t c = 0; c < out.size(); ++c) {
                const double target = wv[c];
                const double lo = nu[c];
                if (weight == 0.0) {
                    out[c] = std::clamp(target, lo, mu_max);
                    continue;
                }
                out[c] = minimize_convex_1d(
                    [&](double s) { return s - target + weight * psi_density_prime(spec, s); },
                    [&](double s) { return 1.0 + weight * psi_density_second(spec, s); }, lo, mu_max,
                    std::clamp(target, lo, mu_max));
            }
        };
    }
    return solve_budget_dual(grid, spec, argmin);
}

}  // namespace optpot
