#pragma once

#include <memory>
#include <string>

#include <Eigen/SparseCore>

#include "optpot/grid.hpp"

namespace optpot {

enum class SolverMethod { Direct, ConjugateGradient };

[[nodiscard]] std::string to_string(SolverMethod method);

struct SolveReport {
    int iterations = 0;
    double relative_residual = 0.0;
    SolverMethod method = SolverMethod::Direct;
};

namespace detail {
struct FactorCache;
}

/// Discrete -Laplace + mu on interior nodes: 5-point stencil plus the lumped
/// potential mubar_k = (1/4) * sum of mu over the four cells around node k.
///
/// The matrix is a symmetric M-matrix. A sparse Cholesky factorization is
/// built on first direct solve and shared between copies of the operator.
class SchrodingerOperator {
public:
    [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
    [[nodiscard]] const CellField& potential() const noexcept { return mu_; }
    [[nodiscard]] const Eigen::SparseMatrix<double>& matrix() const noexcept { return matrix_; }

    [[nodiscard]] NodalField apply(const NodalField& x) const;

    /// Sparse LDL^T factorization, computed once on first use.
    [[nodiscard]] const detail::FactorCache& factorization() const;

private:
    friend SchrodingerOperator assemble(const Grid& grid, const CellField& mu);

    SchrodingerOperator(const Grid& grid, const CellField& mu, Eigen::SparseMatrix<double> matrix);

    Grid grid_;
    CellField mu_;
    Eigen::SparseMatrix<double> matrix_;
    std::shared_ptr<detail::FactorCache> factor_;
};

/// Requires mu >= 0 cellwise.
[[nodiscard]] SchrodingerOperator assemble(const Grid& grid, const CellField& mu);

struct SolveResult {
    NodalField solution;
    SolveReport report;
};

inline constexpr double kDefaultSolverTol = 1e-10;

/// Solves op * w = rhs to ||op w - rhs|| <= tol ||rhs||.
/// Throws SolverFailure (carrying the best residual) if that bound is missed;
/// conjugate gradients are capped at 20 (n - 1) iterations.
[[nodiscard]] SolveResult solve(const SchrodingerOperator& op, const NodalField& rhs, double tol = kDefaultSolverTol,
                                SolverMethod method = SolverMethod::Direct);

[[nodiscard]] NodalField solve_state(const Grid& grid, const CellField& mu, const NodalField& f,
                                     double tol = kDefaultSolverTol);

/// For the linear cost h^2 <g, u> the adjoint right-hand side is g; the
/// operator is self-adjoint so this is the state solve against g.
[[nodiscard]] NodalField solve_adjoint(const Grid& grid, const CellField& mu, const NodalField& g,
                                       double tol = kDefaultSolverTol);

/// h^2 u^T (op u): discrete Dirichlet energy plus lumped potential energy.
[[nodiscard]] double energy(const Grid& grid, const CellField& mu, const NodalField& u);

}  // namespace optpot
