#include "optpot/physics.hpp"

#include <cmath>

#include "optpot/errors.hpp"

namespace optpot {

double eval_g(double x, double y, double epsilon) {
    const double r2 = x * x + y * y;
    return 1.0 / (1.0 + epsilon * r2 * r2 * r2);
}

double eval_f1(double x, double y, double epsilon) {
    const double r2 = x * x + y * y;
    if (r2 < 11.0) return r2 - 1.0;
    return 10.0 / (1.0 + epsilon * r2 * r2 * r2);
}

double eval_f2(double x, double y) {
    const auto in_unit_disc = [&](double cx, double cy) {
        return (x - cx) * (x - cx) + (y - cy) * (y - cy) < 1.0;
    };
    if (in_unit_disc(2.0, -1.0)) return -10.0;
    if (in_unit_disc(-2.0, 0.5)) return 10.0;
    return 0.0;
}

double eval_W(double x, double y) {
    const double r = std::hypot(x, y);
    return 1.0 / ((1.0 + r) * std::log(2.0 + r));
}

NodalField sample_source(const Grid& grid, const SourcePreset& preset, double epsilon) {
    switch (preset.kind) {
        case SourceKind::F1:
            return sample_nodes(grid, [epsilon](double x, double y) { return eval_f1(x, y, epsilon); });
        case SourceKind::F2:
            return sample_nodes(grid, [](double x, double y) { return eval_f2(x, y); });
        case SourceKind::Custom:
            if (!preset.custom) throw InvalidArgument("sample_source: custom preset without a field");
            require_same_grid(grid, preset.custom->grid(), "sample_source");
            return *preset.custom;
    }
    throw InvalidArgument("sample_source: unknown preset");
}

NodalField sample_weight(const Grid& grid, double epsilon) {
    if (!(epsilon >= 0.0)) throw InvalidArgument("sample_weight: epsilon must be >= 0");
    return sample_nodes(grid, [epsilon](double x, double y) { return eval_g(x, y, epsilon); });
}

double cost(const Grid& grid, const NodalField& g, const NodalField& u) {
    require_same_grid(grid, g.grid(), "cost");
    return grid.cell_area() * dot(g, u);
}

double weighted_norm(const Grid& grid, const NodalField& u) {
    require_same_grid(grid, u.grid(), "weighted_norm");
    const int n = grid.cells_per_side();
    double sum = 0.0;
    for (int j = 1; j < n; ++j) {
        for (int i = 1; i < n; ++i) {
            const double v = u[grid.node_index(i, j)] * eval_W(grid.node_coord(i), grid.node_coord(j));
            sum += v * v;
        }
    }
    return std::sqrt(grid.cell_area() * sum);
}

}  // namespace optpot
