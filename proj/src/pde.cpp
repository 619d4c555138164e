#include "optpot/pde.hpp"

#include <cmath>
#include <mutex>
#include <string>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "optpot/errors.hpp"

namespace optpot {

namespace detail {

struct FactorCache {
    std::once_flag once;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
};

}  // namespace detail

namespace {

using Vec = Eigen::VectorXd;

Eigen::Map<const Vec> as_eigen(const NodalField& f) {
    return {f.values().data(), static_cast<Eigen::Index>(f.size())};
}

NodalField from_eigen(const Grid& grid, const Vec& v) {
    return NodalField(grid, std::vector<double>(v.data(), v.data() + v.size()));
}

// Direct solve with up to a few steps of iterative refinement.
SolveResult solve_direct(const SchrodingerOperator& op, const Vec& b, double tol) {
    const auto& ldlt = op.factorization().ldlt;
    const double bnorm = b.norm();
    Vec x = ldlt.solve(b);
    Vec r = b - op.matrix() * x;
    double rel = r.norm() / bnorm;
    int steps = 1;
    for (int refine = 0; refine < 3 && rel > tol; ++refine, ++steps) {
        x += ldlt.solve(r);
        r = b - op.matrix() * x;
        rel = r.norm() / bnorm;
    }
    if (!(rel <= tol)) {
        throw SolverFailure("solve: direct factorization residual " + std::to_string(rel) + " exceeds tolerance", rel);
    }
    return {from_eigen(op.grid(), x), SolveReport{steps, rel, SolverMethod::Direct}};
}

SolveResult solve_cg(const SchrodingerOperator& op, const Vec& b, double tol) {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    cg.setTolerance(tol);
    cg.setMaxIterations(20 * (op.grid().cells_per_side() - 1));
    cg.compute(op.matrix());
    Vec x = cg.solve(b);
    // Eigen stops on its own residual estimate; gate on the true residual.
    const double rel = (b - op.matrix() * x).norm() / b.norm();
    if (!(rel <= tol)) {
        throw SolverFailure("solve: conjugate gradient stopped after " + std::to_string(cg.iterations()) +
                                " iterations at relative residual " + std::to_string(rel),
                            rel);
    }
    return {from_eigen(op.grid(), x),
            SolveReport{static_cast<int>(cg.iterations()), rel, SolverMethod::ConjugateGradient}};
}

}  // namespace

std::string to_string(SolverMethod method) {
    switch (method) {
        case SolverMethod::Direct: return "direct-ldlt";
        case SolverMethod::ConjugateGradient: return "pcg-jacobi";
    }
    return "unknown";
}

SchrodingerOperator::SchrodingerOperator(const Grid& grid, const CellField& mu, Eigen::SparseMatrix<double> matrix)
    : grid_(grid), mu_(mu), matrix_(std::move(matrix)), factor_(std::make_shared<detail::FactorCache>()) {}

const detail::FactorCache& SchrodingerOperator::factorization() const {
    std::call_once(factor_->once, [this] {
        factor_->ldlt.compute(matrix_);
        if (factor_->ldlt.info() != Eigen::Success) {
            throw SolverFailure("solve: sparse LDL^T factorization failed", std::nan(""));
        }
    });
    return *factor_;
}

NodalField SchrodingerOperator::apply(const NodalField& x) const {
    require_same_grid(grid_, x.grid(), "SchrodingerOperator::apply");
    const Vec y = matrix_ * as_eigen(x);
    return from_eigen(grid_, y);
}

SchrodingerOperator assemble(const Grid& grid, const CellField& mu) {
    require_same_grid(grid, mu.grid(), "assemble");
    for (std::size_t c = 0; c < mu.size(); ++c) {
        if (mu[c] < 0.0) {
            throw InvalidArgument("assemble: negative potential " + std::to_string(mu[c]) + " at cell " +
                                  std::to_string(c));
        }
    }

    const int n = grid.cells_per_side();
    const double inv_h2 = 1.0 / grid.cell_area();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(5 * grid.num_interior_nodes());

    for (int j = 1; j < n; ++j) {
        for (int i = 1; i < n; ++i) {
            const auto k = static_cast<Eigen::Index>(grid.node_index(i, j));
            const double mubar = 0.25 * (mu[grid.cell_index(i - 1, j - 1)] + mu[grid.cell_index(i, j - 1)] +
                                         mu[grid.cell_index(i - 1, j)] + mu[grid.cell_index(i, j)]);
            triplets.emplace_back(k, k, 4.0 * inv_h2 + mubar);
            const int nbr[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
            for (const auto& [a, b] : nbr) {
                if (grid.is_interior(a, b)) {
                    triplets.emplace_back(k, static_cast<Eigen::Index>(grid.node_index(a, b)), -inv_h2);
                }
            }
        }
    }

    const auto size = static_cast<Eigen::Index>(grid.num_interior_nodes());
    Eigen::SparseMatrix<double> matrix(size, size);
    matrix.setFromTriplets(triplets.begin(), triplets.end());
    matrix.makeCompressed();
    return SchrodingerOperator(grid, mu, std::move(matrix));
}

SolveResult solve(const SchrodingerOperator& op, const NodalField& rhs, double tol, SolverMethod method) {
    require_same_grid(op.grid(), rhs.grid(), "solve");
    if (!(tol > 0.0)) {
        throw InvalidArgument("solve: tolerance must be positive");
    }
    const Vec b = as_eigen(rhs);
    if (b.squaredNorm() == 0.0) {
        return {NodalField(op.grid()), SolveReport{0, 0.0, method}};
    }
    return method == SolverMethod::Direct ? solve_direct(op, b, tol) : solve_cg(op, b, tol);
}

NodalField solve_state(const Grid& grid, const CellField& mu, const NodalField& f, double tol) {
    return solve(assemble(grid, mu), f, tol).solution;
}

NodalField solve_adjoint(const Grid& grid, const CellField& mu, const NodalField& g, double tol) {
    return solve(assemble(grid, mu), g, tol).solution;
}

double energy(const Grid& grid, const CellField& mu, const NodalField& u) {
    require_same_grid(grid, u.grid(), "energy");
    const SchrodingerOperator op = assemble(grid, mu);
    return grid.cell_area() * dot(u, op.apply(u));
}

}  // namespace optpot
