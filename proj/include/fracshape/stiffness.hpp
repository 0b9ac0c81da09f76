#ifndef FRACSHAPE_STIFFNESS_HPP
#define FRACSHAPE_STIFFNESS_HPP

#include <vector>

#include <Eigen/Dense>

#include "fracshape/grid.hpp"

namespace fracshape {

/// Dense assembly refuses grids with more cells than this.
inline constexpr int kMaxAssemblyCells = 4096;

struct FracParams {
    double s = 0.5;
    int dim = 1;
    double c_norm = 0.0;  // C_{s,N}
};

/// C_{s,N} = ( \int_{R^N} (1 - cos z_1) / |z|^{N+2s} dz )^{-1}, by quadrature.
///
/// The 1D integral is split at |z| = 1. On [0,1] the z^2/2 part is exact and
/// the O(z^4) remainder goes to tanh-sinh; the oscillatory part beyond 1 is integrated period by period
/// and closed with an asymptotic integration-by-parts remainder. For N = 2 the
/// transverse direction is integrated out first, which multiplies the 1D value
/// by \int_R (1 + t^2)^{-(1+s)} dt.
double normalization_constant(double s, int dim);

FracParams make_frac_params(double s, int dim);

/// Exterior weight \int_{R^N \ box} |x - y|^{-(N+2s)} dy for a point x inside
/// the box (without the cell-measure factor).
double exterior_kernel_integral(const Grid& grid, const Point& x, double s);

/// Discrete Gagliardo form with zero exterior condition:
///   Q(u) = sum_{i<j} k_ij (u_i - u_j)^2 + sum_i rho_i u_i^2 = u^T A u
/// with k_ij = h^{2N} / |x_i - x_j|^{N+2s} and rho_i = h^N times the exterior
/// kernel integral at x_i. A = diag(d) - K, d_i = sum_{j != i} k_ij + rho_i.
///
/// Q is one half of the full double integral over R^N x R^N.
class StiffnessOperator {
public:
    StiffnessOperator() = default;
    StiffnessOperator(Grid grid, FracParams params, Eigen::MatrixXd matrix, Eigen::VectorXd tail);

    const Grid& grid() const noexcept { return grid_; }
    const FracParams& params() const noexcept { return params_; }
    const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
    const Eigen::VectorXd& tail() const noexcept { return tail_; }
    Eigen::VectorXd diag() const { return matrix_.diagonal(); }
    double coupling(int i, int j) const { return i == j ? 0.0 : -matrix_(i, j); }
    int size() const noexcept { return static_cast<int>(matrix_.rows()); }

    /// Test hook: lets fixtures corrupt an operator to exercise the audit.
    Eigen::MatrixXd& mutable_matrix() noexcept { return matrix_; }

private:
    Grid grid_;
    FracParams params_;
    Eigen::MatrixXd matrix_;
    Eigen::VectorXd tail_;
};

StiffnessOperator assemble_stiffness(const Grid& grid, double s);

double gagliardo_sq(const StiffnessOperator& op, const GridFunction& u);

/// (1/C_{s,N}) \int |xi|^{2s} |Fu(xi)|^2 dxi with the unitary transform,
/// i.e. the Fourier expression of the same half double integral that Q
/// discretizes. Evaluated on a zero-padded FFT lattice, with the leading
/// lattice-sum error of the |xi|^{2s} cusp at the origin removed.
/// Approximation: error decreases with resolution and padding.
double fourier_seminorm_sq(const Grid& grid, const FracParams& params, const GridFunction& u, int padding = 4);

/// Principal sub-form of a stiffness operator on the cells of a mask.
/// Couplings to cells outside the mask stay on the diagonal.
class DirichletOperator {
public:
    DirichletOperator() = default;
    DirichletOperator(Grid grid, FracParams params, DomainMask mask, Eigen::MatrixXd matrix);

    const Grid& grid() const noexcept { return grid_; }
    const FracParams& params() const noexcept { return params_; }
    const DomainMask& mask() const noexcept { return mask_; }
    const std::vector<int>& active() const noexcept { return active_; }
    const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
    int size() const noexcept { return static_cast<int>(active_.size()); }

    /// Values on active cells -> full-grid function (zero outside the mask).
    GridFunction extend(const Eigen::VectorXd& local) const;
    /// Full-grid function -> values on active cells.
    Eigen::VectorXd gather(const GridFunction& f) const;

private:
    Grid grid_;
    FracParams params_;
    DomainMask mask_;
    std::vector<int> active_;
    Eigen::MatrixXd matrix_;
};

/// Throws DomainEmptyError for an empty mask.
DirichletOperator restrict_to(const StiffnessOperator& op, const DomainMask& mask);

}  // namespace fracshape

#endif
