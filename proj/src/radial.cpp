#include "optpot/radial.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "optpot/errors.hpp"

namespace optpot {

namespace {

constexpr double kScanResolution = 5e-4;
constexpr int kScanMinPoints = 2000;

double profile_at(double R, double r) {
    const double R2 = R * R;
    const double r2 = r * r;
    return -(R2 - r2) / 4.0 + (R2 * R2 - r2 * r2) / 16.0;
}

// Fornberg's recursion; w[k][j] is the weight of x[j] in the k-th derivative at x0.
template <std::size_t N>
std::array<std::array<double, N>, 3> fd_weights(double x0, const std::array<double, N>& x) {
    std::array<std::array<double, N>, 3> w{};
    double c1 = 1.0;
    double c4 = x[0] - x0;
    w[0][0] = 1.0;
    for (std::size_t i = 1; i < N; ++i) {
        const std::size_t mn = std::min<std::size_t>(i, 2);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - x0;
        for (std::size_t j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (std::size_t k = mn; k >= 1; --k) {
                    w[k][i] = c1 * (static_cast<double>(k) * w[k - 1][i - 1] - c5 * w[k][i - 1]) / c2;
                }
                w[0][i] = -c1 * c5 * w[0][i - 1] / c2;
            }
            for (std::size_t k = mn; k >= 1; --k) {
                w[k][j] = (c4 * w[k][j] - static_cast<double>(k) * w[k - 1][j]) / c3;
            }
            w[0][j] = c4 * w[0][j] / c3;
        }
        c1 = c2;
    }
    return w;
}

}  // namespace

RadialProfile radial_state_solve(double R, int n_r) {
    if (!(R > 0.0) || R > std::sqrt(11.0)) {
        throw InvalidArgument("radial_state_solve: R must lie in (0, sqrt(11)], got " + std::to_string(R));
    }
    if (n_r < 16) throw InvalidArgument("radial_state_solve: n_r must be >= 16");

    RadialProfile p;
    p.R = R;
    p.r.resize(n_r + 1);
    p.u.resize(n_r + 1);
    const double dr = R / n_r;
    for (int i = 0; i <= n_r; ++i) {
        p.r[i] = i == n_r ? R : i * dr;
        p.u[i] = i == n_r ? 0.0 : profile_at(R, p.r[i]);
    }

    // u r is a polynomial of degree 5, which 3-point Gauss-Legendre integrates exactly.
    static constexpr std::array<double, 3> nodes{-0.7745966692414834, 0.0, 0.7745966692414834};
    static constexpr std::array<double, 3> weights{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    double sum = 0.0;
    for (int i = 0; i < n_r; ++i) {
        const double a = p.r[i];
        const double b = p.r[i + 1];
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        for (std::size_t q = 0; q < 3; ++q) {
            const double s = mid + half * nodes[q];
            sum += half * weights[q] * profile_at(R, s) * s;
        }
    }
    p.J = 2.0 * std::numbers::pi * sum;
    return p;
}

double radial_cost_exact(double R) {
    const double R4 = R * R * R * R;
    return 2.0 * std::numbers::pi * (-R4 / 16.0 + R4 * R * R / 48.0);
}

double radial_residual(const RadialProfile& profile) {
    const int n_r = static_cast<int>(profile.r.size()) - 1;
    double worst = 0.0;
    for (int i = 1; i < n_r; ++i) {
        const int start = std::clamp(i - 2, 0, n_r - 5);
        std::array<double, 6> x{};
        for (int j = 0; j < 6; ++j) x[j] = profile.r[start + j];
        const auto w = fd_weights(profile.r[i], x);
        double d1 = 0.0, d2 = 0.0;
        for (int j = 0; j < 6; ++j) {
            d1 += w[1][j] * profile.u[start + j];
            d2 += w[2][j] * profile.u[start + j];
        }
        const double r = profile.r[i];
        worst = std::max(worst, std::abs(-(d2 + d1 / r) - (r * r - 1.0)));
    }
    return worst;
}

RadialOptimum radial_optimal_radius(double m) {
    if (!(m > 0.0) || !std::isfinite(m)) throw InvalidArgument("radial_optimal_radius: m must be positive");
    RadialOptimum out;
    out.formula = std::min(std::sqrt(m / std::numbers::pi), std::sqrt(2.0));

    const double cap = std::min(std::sqrt(m / std::numbers::pi), std::sqrt(11.0));
    const int points = std::max(kScanMinPoints, static_cast<int>(std::ceil(cap / kScanResolution)));
    out.resolution = cap / points;
    out.scan_cost = INFINITY;
    for (int i = 1; i <= points; ++i) {
        const double R = i == points ? cap : i * out.resolution;
        const double J = radial_state_solve(R, 16).J;
        if (J < out.scan_cost) {
            out.scan_cost = J;
            out.scan = R;
        }
    }
    return out;
}

}  // namespace optpot
