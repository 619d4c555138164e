#pragma once

#include <vector>

namespace optpot {

/// Case-1 limit problem on the disc B(0, R): -(1/r)(r u')' = r^2 - 1, u'(0) = 0, u(R) = 0.
struct RadialProfile {
    double R = 0.0;
    std::vector<double> r;  // n_r + 1 uniform points on [0, R]
    std::vector<double> u;
    double J = 0.0;         // 2 pi int_0^R u r dr
};

/// u(r) = -(R^2 - r^2)/4 + (R^4 - r^4)/16 sampled on the grid; J by composite
/// 3-point Gauss-Legendre on the same grid. Requires 0 < R <= sqrt(11), n_r >= 16.
[[nodiscard]] RadialProfile radial_state_solve(double R, int n_r);

/// 2 pi (-R^4/16 + R^6/48).
[[nodiscard]] double radial_cost_exact(double R);

/// Largest |-(u'' + u'/r) - (r^2 - 1)| over interior grid points, with u'' and
/// u' from 6-point finite-difference stencils on the profile values.
[[nodiscard]] double radial_residual(const RadialProfile& profile);

struct RadialOptimum {
    double formula = 0.0;     // min(sqrt(m / pi), sqrt(2))
    double scan = 0.0;        // argmin of J over the R-scan with pi R^2 <= m
    double resolution = 0.0;  // R-scan spacing
    double scan_cost = 0.0;
};

[[nodiscard]] RadialOptimum radial_optimal_radius(double m);

}  // namespace optpot
