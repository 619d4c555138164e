#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <variant>
#include <vector>

#include "optpot/grid.hpp"

namespace optpot {

inline constexpr double kDefaultMuMax = 15000.0;
inline constexpr double kDefaultAlpha = 3e-4;
inline constexpr double kBudgetTolerance = 1e-8;

/// psi(s) = (1/m) exp(-alpha s): convex, decreasing, psi(0) = 1/m, recession slope 0.
struct ExpPsi {
    double m;
    double alpha;
};

/// psi(s) = s^2 with the integral normalized by the budget: Psi = h^2 sum mu^2 / budget.
struct SquarePsi {
    double budget;
};

/// How cells sitting at the cap mu_max are charged by the Exp functional.
///
/// The cap stands in for an infinite potential, whose cost is psi(+inf) = 0.
/// Free charges psi(mu) - psi(mu_max) per unit area (zero at the cap, same
/// derivative as psi); Charged uses psi(mu) verbatim, so that every capped
/// cell still pays exp(-alpha mu_max) / m.
enum class CapCost { Free, Charged };

/// Admissible set {nu <= mu <= mu_max, Psi(mu) <= 1} on a fixed grid.
class PsiSpec {
public:
    using Variant = std::variant<ExpPsi, SquarePsi>;

    static PsiSpec exponential(double m, double alpha, double mu_max, CellField nu, CapCost cap = CapCost::Free);
    /// Requires nu not identically zero: in two dimensions psi(0) = 0 with nu = 0 admits no optimum.
    static PsiSpec square(double budget, double mu_max, CellField nu);

    [[nodiscard]] const Variant& variant() const noexcept { return variant_; }
    [[nodiscard]] bool is_exponential() const noexcept { return std::holds_alternative<ExpPsi>(variant_); }
    [[nodiscard]] double mu_max() const noexcept { return mu_max_; }
    [[nodiscard]] const CellField& nu() const noexcept { return nu_; }
    [[nodiscard]] const Grid& grid() const noexcept { return nu_.grid(); }
    [[nodiscard]] CapCost cap_cost() const noexcept { return cap_; }

private:
    PsiSpec(Variant variant, double mu_max, CellField nu, CapCost cap);

    Variant variant_;
    double mu_max_;
    CellField nu_;
    CapCost cap_;
};

/// psi and psi' of the active variant (s >= 0). For Square these are s^2 and 2s, unnormalized.
[[nodiscard]] double psi_value(const PsiSpec& spec, double s);
[[nodiscard]] double psi_prime(const PsiSpec& spec, double s);

/// Per-unit-area contribution to Psi and its derivatives (budget and cap accounting applied).
[[nodiscard]] double psi_density(const PsiSpec& spec, double s);
[[nodiscard]] double psi_density_prime(const PsiSpec& spec, double s);
[[nodiscard]] double psi_density_second(const PsiSpec& spec, double s);

/// Psi(mu) = h^2 sum_c psi_density(mu_c); feasibility always reads Psi <= 1.
[[nodiscard]] double capacity_psi(const Grid& grid, const PsiSpec& spec, const CellField& mu);

/// Euclidean projection of w onto the admissible set. Returns the box clamp
/// when that is already feasible; otherwise bisects the budget multiplier until
/// Psi lies in [1 - 1e-8, 1]. Throws InfeasibleProblem when the set is empty.
[[nodiscard]] CellField project_feasible(const Grid& grid, const PsiSpec& spec, const CellField& w);

/// Cellwise minimizer of a separable convex model plus weight * psi_density,
/// written into `out` for a given weight >= 0.
using CellArgmin = std::function<void(double weight, std::vector<double>& out)>;

/// Shared dual search behind project_feasible and the MMA subproblem: finds the
/// smallest multiplier lambda >= 0 with Psi(argmin(lambda h^2)) <= 1, to within
/// the budget tolerance. `argmin(0)` must be the unconstrained box solution.
[[nodiscard]] CellField solve_budget_dual(const Grid& grid, const PsiSpec& spec, const CellArgmin& argmin);

/// Minimizes a convex 1D function on [lo, hi] given its increasing derivative:
/// Newton from `guess`, falling back to bisection whenever a step leaves the
/// current bracket. Returns an endpoint when the root lies outside.
template <class Deriv, class Deriv2>
[[nodiscard]] double minimize_convex_1d(Deriv&& deriv, Deriv2&& deriv2, double lo, double hi, double guess) {
    if (deriv(lo) >= 0.0) return lo;
    if (deriv(hi) <= 0.0) return hi;
    double a = lo;
    double b = hi;
    double x = (guess > a && guess < b) ? guess : 0.5 * (a + b);
    for (int it = 0; it < 200; ++it) {
        const double d = deriv(x);
        if (d == 0.0) return x;
        (d < 0.0 ? a : b) = x;
        const double d2 = deriv2(x);
        double next = d2 > 0.0 ? x - d / d2 : 0.5 * (a + b);
        if (!(next > a && next < b)) next = 0.5 * (a + b);
        const double scale = std::max(1.0, std::abs(x));
        if (std::abs(next - x) <= 1e-14 * scale || (b - a) <= 1e-14 * scale) return next;
        x = next;
    }
    return x;
}

}  // namespace optpot
