#pragma once

#include <string>

#include "optpot/constraint.hpp"
#include "optpot/grid.hpp"

namespace optpot {

/// First-order optimality diagnostics at a candidate potential.
///
/// (up)_c is the cell mean node_pair_to_cell(u, p)_c / h^2 and psi' is the
/// derivative of the budget density. Residuals other than complementarity are
/// divided by max_c |(up)_c| so that they are invariant under rescaling u, p.
struct KKTReport {
    double multiplier = 0.0;         // lambda >= 0
    double psi = 0.0;                // Psi(mu)
    double complementarity = 0.0;    // |lambda (Psi - 1)|
    double stationarity = 0.0;       // max over free cells of |lambda psi' - up|
    double inequality = 0.0;         // max over cells at nu of (up - lambda psi')^+
    double cap_set = 0.0;            // Exp only: max over cells at mu_max of (up)^+
    double up_scale = 0.0;           // max_c |(up)_c|
    std::size_t free_cells = 0;
    std::size_t lower_cells = 0;
    std::size_t cap_cells = 0;
};

/// Least-squares multiplier over free cells nu_c < mu_c < mu_max:
/// sum (up)_c psi'_c / sum psi'_c^2, clamped to >= 0. Zero when the budget is
/// slack (Psi < 1 - 1e-8) or no cell is free.
[[nodiscard]] double estimate_multiplier(const Grid& grid, const PsiSpec& spec, const CellField& mu,
                                         const NodalField& u, const NodalField& p);

[[nodiscard]] KKTReport kkt_report(const Grid& grid, const PsiSpec& spec, const CellField& mu, const NodalField& u,
                                   const NodalField& p);

/// Flat "key=value" lines, one per field.
[[nodiscard]] std::string to_key_value(const KKTReport& report);

}  // namespace optpot
