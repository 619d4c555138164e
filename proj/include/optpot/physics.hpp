#pragma once

#include <optional>

#include "optpot/grid.hpp"

namespace optpot {

inline constexpr double kDefaultEpsilon = 1e-10;

/// Cost weight g(x, y) = 1 / (1 + eps (x^2 + y^2)^3); eps = 0 gives g = 1.
[[nodiscard]] double eval_g(double x, double y, double epsilon = kDefaultEpsilon);

/// Source f1: x^2 + y^2 - 1 inside r^2 < 11, 10 / (1 + eps r^6) outside.
[[nodiscard]] double eval_f1(double x, double y, double epsilon = kDefaultEpsilon);

/// Source f2: -10 on the unit disc at (2, -1), +10 on the unit disc at (-2, 0.5), 0 elsewhere.
[[nodiscard]] double eval_f2(double x, double y);

/// Weight of the whole-plane solution space in d = 2: 1 / ((1 + |x|) log(2 + |x|)).
/// Diagnostics only.
[[nodiscard]] double eval_W(double x, double y);

enum class SourceKind { F1, F2, Custom };

struct SourcePreset {
    SourceKind kind = SourceKind::F1;
    std::optional<NodalField> custom;  // set iff kind == Custom
};

[[nodiscard]] NodalField sample_source(const Grid& grid, const SourcePreset& preset,
                                       double epsilon = kDefaultEpsilon);
[[nodiscard]] NodalField sample_weight(const Grid& grid, double epsilon = kDefaultEpsilon);

/// h^2 * sum_k g_k u_k.
[[nodiscard]] double cost(const Grid& grid, const NodalField& g, const NodalField& u);

/// Discrete weighted norm (h^2 sum_k (u_k W_k)^2)^(1/2).
[[nodiscard]] double weighted_norm(const Grid& grid, const NodalField& u);

}  // namespace optpot
