#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace optpot {

/// Uniform square grid on D = (-M, M)^2 with n cells per side.
///
/// Only M and n are stored; the cell width is always recomputed as 2M/n.
/// Nodes are indexed (i, j) with 0 <= i, j <= n; the boundary ring is never
/// stored because every nodal field vanishes there. Cells are indexed
/// (i, j) with 0 <= i, j < n, cell (i, j) spanning nodes i..i+1, j..j+1.
class Grid {
public:
    Grid(double half_width, int cells_per_side);

    [[nodiscard]] double half_width() const noexcept { return half_width_; }
    [[nodiscard]] int cells_per_side() const noexcept { return n_; }
    [[nodiscard]] double h() const noexcept { return 2.0 * half_width_ / n_; }
    [[nodiscard]] double cell_area() const noexcept { return h() * h(); }

    [[nodiscard]] std::size_t num_cells() const noexcept {
        return static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_);
    }
    [[nodiscard]] std::size_t num_interior_nodes() const noexcept {
        return static_cast<std::size_t>(n_ - 1) * static_cast<std::size_t>(n_ - 1);
    }

    /// x-coordinate of node column i (same formula for rows). Exact 0 at i = n/2.
    [[nodiscard]] double node_coord(int i) const noexcept {
        return half_width_ * static_cast<double>(2 * i - n_) / n_;
    }
    [[nodiscard]] double cell_center(int i) const noexcept {
        return half_width_ * static_cast<double>(2 * i + 1 - n_) / n_;
    }

    [[nodiscard]] bool is_interior(int i, int j) const noexcept {
        return i > 0 && j > 0 && i < n_ && j < n_;
    }
    /// Row-major index of interior node (i, j); requires is_interior(i, j).
    [[nodiscard]] std::size_t node_index(int i, int j) const noexcept {
        return static_cast<std::size_t>(j - 1) * static_cast<std::size_t>(n_ - 1) +
               static_cast<std::size_t>(i - 1);
    }
    [[nodiscard]] std::size_t cell_index(int i, int j) const noexcept {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(i);
    }

    bool operator==(const Grid&) const = default;

private:
    double half_width_;
    int n_;
};

/// Validating factory: M > 0, n >= 2 and even (so the origin is a node).
[[nodiscard]] Grid make_grid(double half_width, int cells_per_side);

enum class Location { Node, Cell };

/// Real values attached to a grid: interior nodes or cells, row-major.
/// Immutable once built; construction checks length and finiteness.
template <Location L>
class Field {
public:
    /// Zero field.
    explicit Field(const Grid& grid);
    Field(const Grid& grid, std::vector<double> values);

    [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] double operator[](std::size_t k) const noexcept { return values_[k]; }

    /// Copies the values out, e.g. to build a modified field.
    [[nodiscard]] std::vector<double> to_vector() const { return values_; }

    static std::size_t expected_size(const Grid& grid) noexcept {
        return L == Location::Node ? grid.num_interior_nodes() : grid.num_cells();
    }

private:
    Grid grid_;
    std::vector<double> values_;
};

using NodalField = Field<Location::Node>;
using CellField = Field<Location::Cell>;

extern template class Field<Location::Node>;
extern template class Field<Location::Cell>;

/// Value of a nodal field at node (i, j) including the implicit zero boundary.
[[nodiscard]] double node_value(const NodalField& field, int i, int j) noexcept;

/// Samples fn(x, y) at interior nodes / cell centers.
[[nodiscard]] NodalField sample_nodes(const Grid& grid, const std::function<double(double, double)>& fn);
[[nodiscard]] CellField sample_cells(const Grid& grid, const std::function<double(double, double)>& fn);
[[nodiscard]] CellField constant_cells(const Grid& grid, double value);

/// h^2 * sum_c c[c].
[[nodiscard]] double integrate_cells(const Grid& grid, const CellField& c);

/// Per cell: (h^2/4) * sum over its interior corner nodes of a_k b_k.
/// This is d/dmu_c of the lumped mass term sum_k mubar_k a_k b_k h^2.
[[nodiscard]] CellField node_pair_to_cell(const Grid& grid, const NodalField& a, const NodalField& b);

/// Plain Euclidean dot product over interior nodes.
[[nodiscard]] double dot(const NodalField& a, const NodalField& b);

void require_same_grid(const Grid& expected, const Grid& actual, std::string_view what);

}  // namespace optpot
