#ifndef FRACSHAPE_GRID_HPP
#define FRACSHAPE_GRID_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace fracshape {

using Point = std::array<double, 2>;   // second coordinate unused when dim == 1
using Shift = std::array<int, 2>;      // lattice translation, in cells

inline constexpr int kMaxGridCells = 16384;

/// Uniform cell-centred lattice on the box [-half_width, half_width]^dim.
/// Cell i has multi-index (i % resolution, i / resolution) in 2D.
class Grid {
public:
    Grid() = default;
    Grid(int dim, double half_width, int resolution);

    int dim() const noexcept { return dim_; }
    double half_width() const noexcept { return half_width_; }
    int resolution() const noexcept { return resolution_; }
    double h() const noexcept { return h_; }
    /// Measure of one cell, h^dim.
    double cell_volume() const noexcept { return dim_ == 1 ? h_ : h_ * h_; }
    int cell_count() const noexcept { return dim_ == 1 ? resolution_ : resolution_ * resolution_; }

    Point center(int cell) const;
    std::vector<Point> cell_centers() const;
    Shift coords(int cell) const;
    int index(Shift c) const;
    bool in_range(Shift c) const;
    double distance(int a, int b) const;

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    int dim_ = 1;
    double half_width_ = 1.0;
    int resolution_ = 2;
    double h_ = 1.0;
};

Grid build_grid(int dim, double half_width, int resolution);

double distance(const Point& a, const Point& b, int dim);

/// Boolean cell subset of a grid.
class DomainMask {
public:
    DomainMask() = default;
    explicit DomainMask(const Grid& grid);
    DomainMask(const Grid& grid, std::vector<std::uint8_t> cells);

    static DomainMask full(const Grid& grid);
    static DomainMask from_indices(const Grid& grid, std::span<const int> cells);

    const Grid& grid() const noexcept { return grid_; }
    const std::vector<std::uint8_t>& cells() const noexcept { return cells_; }
    bool contains(int cell) const { return cells_[static_cast<std::size_t>(cell)] != 0; }
    void set(int cell, bool on = true) { cells_[static_cast<std::size_t>(cell)] = on ? 1 : 0; }

    int count() const;
    bool empty() const { return count() == 0; }
    double volume() const { return count() * grid_.cell_volume(); }
    /// Active cells in ascending order.
    std::vector<int> indices() const;

    bool is_subset_of(const DomainMask& other) const;
    DomainMask intersect(const DomainMask& other) const;
    DomainMask unite(const DomainMask& other) const;
    /// Translation by whole cells. Returns false in `ok` (and an empty mask)
    /// when a set cell would leave the grid.
    DomainMask translated(Shift z, bool* ok = nullptr) const;

    friend bool operator==(const DomainMask&, const DomainMask&) = default;

private:
    Grid grid_;
    std::vector<std::uint8_t> cells_;
};

/// Real function on the cells of a grid, extended by zero outside the box.
struct GridFunction {
    Grid grid;
    Eigen::VectorXd values;

    GridFunction() = default;
    explicit GridFunction(const Grid& g) : grid(g), values(Eigen::VectorXd::Zero(g.cell_count())) {}
    GridFunction(const Grid& g, Eigen::VectorXd v);

    /// h^dim-weighted L2 inner product and norm.
    double dot(const GridFunction& other) const;
    double l2_norm() const;
    /// Integral of u^2.
    double mass() const;
    double integral() const;
};

void require_same_grid(const Grid& a, const Grid& b);

}  // namespace fracshape

#endif
