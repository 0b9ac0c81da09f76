#include "fracshape/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fracshape/errors.hpp"

namespace fracshape {

Grid::Grid(int dim, double half_width, int resolution)
    : dim_(dim), half_width_(half_width), resolution_(resolution), h_(2.0 * half_width / resolution) {
    if (dim != 1 && dim != 2) throw ParameterError("dim", "must be 1 or 2, got " + std::to_string(dim));
    if (!(half_width > 0.0) || !std::isfinite(half_width))
        throw ParameterError("half_width", "must be positive and finite");
    if (resolution < 2) throw ParameterError("resolution", "must be at least 2");
    const long cells = dim == 1 ? static_cast<long>(resolution) : static_cast<long>(resolution) * resolution;
    if (cells > kMaxGridCells)
        throw ParameterError("resolution", "resolution^dim = " + std::to_string(cells) + " exceeds " +
                                               std::to_string(kMaxGridCells));
}

Grid build_grid(int dim, double half_width, int resolution) { return Grid(dim, half_width, resolution); }

Shift Grid::coords(int cell) const {
    if (dim_ == 1) return {cell, 0};
    return {cell % resolution_, cell / resolution_};
}

int Grid::index(Shift c) const { return dim_ == 1 ? c[0] : c[1] * resolution_ + c[0]; }

bool Grid::in_range(Shift c) const {
    if (c[0] < 0 || c[0] >= resolution_) return false;
    if (dim_ == 1) return c[1] == 0;
    return c[1] >= 0 && c[1] < resolution_;
}

Point Grid::center(int cell) const {
    const Shift c = coords(cell);
    Point p{-half_width_ + h_ * (c[0] + 0.5), 0.0};
    if (dim_ == 2) p[1] = -half_width_ + h_ * (c[1] + 0.5);
    return p;
}

std::vector<Point> Grid::cell_centers() const {
    std::vector<Point> out(static_cast<std::size_t>(cell_count()));
    for (int i = 0; i < cell_count(); ++i) out[static_cast<std::size_t>(i)] = center(i);
    return out;
}

double distance(const Point& a, const Point& b, int dim) {
    const double dx = a[0] - b[0];
    const double dy = dim == 2 ? a[1] - b[1] : 0.0;
    return std::sqrt(dx * dx + dy * dy);
}

double Grid::distance(int a, int b) const {
    const Shift ca = coords(a), cb = coords(b);
    const double dx = ca[0] - cb[0], dy = ca[1] - cb[1];
    return h_ * std::sqrt(dx * dx + dy * dy);
}

DomainMask::DomainMask(const Grid& grid) : grid_(grid), cells_(static_cast<std::size_t>(grid.cell_count()), 0) {}

DomainMask::DomainMask(const Grid& grid, std::vector<std::uint8_t> cells) : grid_(grid), cells_(std::move(cells)) {
    if (cells_.size() != static_cast<std::size_t>(grid.cell_count()))
        throw StructuralError("mask length " + std::to_string(cells_.size()) + " does not match grid cell count " +
                              std::to_string(grid.cell_count()));
    for (auto& c : cells_) c = c ? 1 : 0;
}

DomainMask DomainMask::full(const Grid& grid) {
    return DomainMask(grid, std::vector<std::uint8_t>(static_cast<std::size_t>(grid.cell_count()), 1));
}

DomainMask DomainMask::from_indices(const Grid& grid, std::span<const int> cells) {
    DomainMask m(grid);
    for (int c : cells) {
        if (c < 0 || c >= grid.cell_count()) throw StructuralError("cell index out of range: " + std::to_string(c));
        m.set(c);
    }
    return m;
}

int DomainMask::count() const { return static_cast<int>(std::count(cells_.begin(), cells_.end(), 1)); }

std::vector<int> DomainMask::indices() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < cells_.size(); ++i)
        if (cells_[i]) out.push_back(static_cast<int>(i));
    return out;
}

bool DomainMask::is_subset_of(const DomainMask& other) const {
    require_same_grid(grid_, other.grid_);
    for (std::size_t i = 0; i < cells_.size(); ++i)
        if (cells_[i] && !other.cells_[i]) return false;
    return true;
}

DomainMask DomainMask::intersect(const DomainMask& other) const {
    require_same_grid(grid_, other.grid_);
    DomainMask out(grid_);
    for (std::size_t i = 0; i < cells_.size(); ++i) out.cells_[i] = cells_[i] & other.cells_[i];
    return out;
}

DomainMask DomainMask::unite(const DomainMask& other) const {
    require_same_grid(grid_, other.grid_);
    DomainMask out(grid_);
    for (std::size_t i = 0; i < cells_.size(); ++i) out.cells_[i] = cells_[i] | other.cells_[i];
    return out;
}

DomainMask DomainMask::translated(Shift z, bool* ok) const {
    DomainMask out(grid_);
    if (grid_.dim() == 1) z[1] = 0;
    for (int i = 0; i < grid_.cell_count(); ++i) {
        if (!contains(i)) continue;
        const Shift c = grid_.coords(i);
        const Shift t{c[0] + z[0], c[1] + z[1]};
        if (!grid_.in_range(t)) {
            if (ok) *ok = false;
            return DomainMask(grid_);
        }
        out.set(grid_.index(t));
    }
    if (ok) *ok = true;
    return out;
}

GridFunction::GridFunction(const Grid& g, Eigen::VectorXd v) : grid(g), values(std::move(v)) {
    if (values.size() != g.cell_count())
        throw StructuralError("function length " + std::to_string(values.size()) + " does not match grid cell count " +
                              std::to_string(g.cell_count()));
}

double GridFunction::dot(const GridFunction& other) const {
    require_same_grid(grid, other.grid);
    return grid.cell_volume() * values.dot(other.values);
}

double GridFunction::l2_norm() const { return std::sqrt(mass()); }

double GridFunction::mass() const { return grid.cell_volume() * values.squaredNorm(); }

double GridFunction::integral() const { return grid.cell_volume() * values.sum(); }

void require_same_grid(const Grid& a, const Grid& b) {
    if (!(a == b)) throw StructuralError("objects live on different grids");
}

}  // namespace fracshape
