#include "optpot/grid.hpp"

#include <cmath>
#include <string>

#include "optpot/errors.hpp"

namespace optpot {

Grid::Grid(double half_width, int cells_per_side) : half_width_(half_width), n_(cells_per_side) {
    if (!(half_width > 0.0) || !std::isfinite(half_width)) {
        throw InvalidArgument("grid: half width M must be positive and finite, got " + std::to_string(half_width));
    }
    if (cells_per_side < 2) {
        throw InvalidArgument("grid: cells per side n must be >= 2, got " + std::to_string(cells_per_side));
    }
    if (cells_per_side % 2 != 0) {
        throw InvalidArgument("grid: cells per side n must be even, got " + std::to_string(cells_per_side));
    }
}

Grid make_grid(double half_width, int cells_per_side) { return Grid(half_width, cells_per_side); }

template <Location L>
Field<L>::Field(const Grid& grid) : grid_(grid), values_(expected_size(grid), 0.0) {}

template <Location L>
Field<L>::Field(const Grid& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    const char* kind = L == Location::Node ? "nodal field" : "cell field";
    if (values_.size() != expected_size(grid_)) {
        throw InvalidArgument(std::string(kind) + ": expected " + std::to_string(expected_size(grid_)) +
                              " values, got " + std::to_string(values_.size()));
    }
    for (std::size_t k = 0; k < values_.size(); ++k) {
        if (!std::isfinite(values_[k])) {
            throw InvalidArgument(std::string(kind) + ": non-finite value at index " + std::to_string(k));
        }
    }
}

template class Field<Location::Node>;
template class Field<Location::Cell>;

void require_same_grid(const Grid& expected, const Grid& actual, std::string_view what) {
    if (!(expected == actual)) {
        throw InvalidArgument(std::string(what) + ": grid mismatch");
    }
}

double node_value(const NodalField& field, int i, int j) noexcept {
    const Grid& g = field.grid();
    return g.is_interior(i, j) ? field[g.node_index(i, j)] : 0.0;
}

NodalField sample_nodes(const Grid& grid, const std::function<double(double, double)>& fn) {
    const int n = grid.cells_per_side();
    std::vector<double> v(grid.num_interior_nodes());
    for (int j = 1; j < n; ++j) {
        for (int i = 1; i < n; ++i) {
            v[grid.node_index(i, j)] = fn(grid.node_coord(i), grid.node_coord(j));
        }
    }
    return NodalField(grid, std::move(v));
}

CellField sample_cells(const Grid& grid, const std::function<double(double, double)>& fn) {
    const int n = grid.cells_per_side();
    std::vector<double> v(grid.num_cells());
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            v[grid.cell_index(i, j)] = fn(grid.cell_center(i), grid.cell_center(j));
        }
    }
    return CellField(grid, std::move(v));
}

CellField constant_cells(const Grid& grid, double value) {
    return CellField(grid, std::vector<double>(grid.num_cells(), value));
}

double integrate_cells(const Grid& grid, const CellField& c) {
    require_same_grid(grid, c.grid(), "integrate_cells");
    double sum = 0.0;
    for (double v : c.values()) sum += v;
    return grid.cell_area() * sum;
}

CellField node_pair_to_cell(const Grid& grid, const NodalField& a, const NodalField& b) {
    require_same_grid(grid, a.grid(), "node_pair_to_cell");
    require_same_grid(grid, b.grid(), "node_pair_to_cell");
    const int n = grid.cells_per_side();
    const double w = 0.25 * grid.cell_area();

    std::vector<double> product(a.size());
    for (std::size_t k = 0; k < product.size(); ++k) product[k] = a[k] * b[k];

    std::vector<double> out(grid.num_cells(), 0.0);
    for (int j = 1; j < n; ++j) {
        for (int i = 1; i < n; ++i) {
            const double q = w * product[grid.node_index(i, j)];
            out[grid.cell_index(i - 1, j - 1)] += q;
            out[grid.cell_index(i, j - 1)] += q;
            out[grid.cell_index(i - 1, j)] += q;
            out[grid.cell_index(i, j)] += q;
        }
    }
    return CellField(grid, std::move(out));
}

double dot(const NodalField& a, const NodalField& b) {
    require_same_grid(a.grid(), b.grid(), "dot");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

}  // namespace optpot
