#ifndef FRACSHAPE_SOLVERS_HPP
#define FRACSHAPE_SOLVERS_HPP

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "fracshape/grid.hpp"
#include "fracshape/stiffness.hpp"

namespace fracshape {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct CgResult {
    Eigen::VectorXd x;
    double relative_residual = 0.0;
    int iterations = 0;
};

/// Diagonally preconditioned conjugate gradients for SPD `a`. Throws
/// NumericError (with the residual reached) after `max_iterations`.
CgResult conjugate_gradient(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double tol, int max_iterations);

enum class RitzOrder { smallest, largest_magnitude };

struct KrylovOptions {
    int nev = 1;
    int block = 3;
    double tol = 1e-8;
    int max_restarts = 400;
    std::uint64_t seed = 0x5eed;
    RitzOrder order = RitzOrder::smallest;
};

struct KrylovResult {
    Eigen::VectorXd values;    // in requested order
    Eigen::MatrixXd vectors;   // Euclidean-orthonormal columns
    Eigen::VectorXd residuals; // ||A y - theta y|| / |theta|
};

/// Block Krylov iteration with full reorthogonalization, Rayleigh-Ritz
/// extraction and thick restarts, for a symmetric operator given as a
/// block matvec. Deterministic for a fixed seed.
KrylovResult block_krylov(const std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>& apply, int n,
                          const KrylovOptions& options);

struct SolverOptions {
    double cg_tol = 1e-10;
    int cg_iteration_factor = 10;  // cap = factor * unknowns
    double eig_tol = 1e-8;
    std::uint64_t seed = 0x5eed;
};

struct TorsionFunction {
    DomainMask mask;
    GridFunction values;  // zero outside the mask
    double residual = 0.0;
};

/// w with A w = h^dim * 1 on the mask: (-Delta)^s w = 1 in the mask, w = 0 outside.
TorsionFunction solve_torsion(const DirichletOperator& op, const SolverOptions& options = {});

/// R(f): the u with A u = h^dim f on the mask, zero outside.
GridFunction apply_resolvent(const DirichletOperator& op, const GridFunction& f, const SolverOptions& options = {});

struct Spectrum {
    std::vector<double> eigenvalues;             // ascending
    std::vector<GridFunction> eigenfunctions;    // h^dim-weighted L2 orthonormal
    std::vector<double> residuals;               // relative
};

/// Smallest k eigenpairs of A u = lambda h^dim u on the mask. Block size k+2.
/// Each eigenfunction is signed so that its largest-magnitude entry is positive.
Spectrum eigenpairs(const DirichletOperator& op, int k, const SolverOptions& options = {});

/// Operator norm in L2(R^N) of R_A - R_B (both extended by zero). An empty
/// mask stands for the null resolvent; pass it as std::nullopt-like by using
/// the overload below.
double resolvent_norm_diff(const DirichletOperator& a, const DirichletOperator& b, const SolverOptions& options = {});
/// ||R_A|| = 1 / lambda_1(A), i.e. the distance to the empty set's null resolvent.
double resolvent_norm(const DirichletOperator& a, const SolverOptions& options = {});

struct TorsionResolventReport {
    double lhs = 0.0;               // ||R_A - R_B||
    double torsion_distance = 0.0;  // ||w_A - w_B||_{L2}
    double duality_residual = 0.0;  // max over test f of |int (R_A f - R_B f) - int f (w_A - w_B)|
    double duality_relative = 0.0;
    double constant = 0.0;          // lhs / torsion_distance (0 when both vanish)
    bool in_bound_range = false;    // dim < 4s
};

/// opB's mask must be contained in opA's mask (StructuralError otherwise).
TorsionResolventReport torsion_resolvent_bound_check(const DirichletOperator& a, const DirichletOperator& b,
                                                     const SolverOptions& options = {});

struct ExponentFit {
    double alpha = 0.0;
    double constant = 0.0;
    int points = 0;
};

/// Least-squares fit of log lhs = log C + alpha log torsion_distance.
ExponentFit fit_torsion_resolvent_exponent(const std::vector<TorsionResolventReport>& family);

/// lambda_1^{-1/2}: the optimal constant in ||u|| <= C [u] on the mask.
double poincare_constant(const DirichletOperator& op, const SolverOptions& options = {});

struct CapacityOptions {
    double stall_tol = 1e-10;  // relative energy decrease over `window` steps
    int window = 100;
    int max_iterations = 400000;
};

/// min Q(u) over u >= 1 on the mask cells, by projected gradient with step
/// 1/(2 max d). Empty mask -> 0.
double capacity_estimate(const StiffnessOperator& base, const DomainMask& mask, const CapacityOptions& options = {});

}  // namespace fracshape

#endif
