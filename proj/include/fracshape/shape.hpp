#ifndef FRACSHAPE_SHAPE_HPP
#define FRACSHAPE_SHAPE_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fracshape/concentration.hpp"
#include "fracshape/grid.hpp"
#include "fracshape/solvers.hpp"
#include "fracshape/stiffness.hpp"

namespace fracshape {

/// Node of a spectral functional built from lambda_j, nonnegative constants,
/// sums, maxima and products with nonnegative constants. Every such
/// expression is nondecreasing in each lambda_j.
struct FunctionalExpr {
    enum class Kind { eigenvalue, constant, sum, maximum, scale };
    Kind kind = Kind::constant;
    int index = 0;       // eigenvalue: 1-based j
    double value = 0.0;  // constant value or scale factor
    std::vector<FunctionalExpr> args;

    double evaluate(std::span<const double> lambdas) const;
    int max_index() const;
    std::string to_string() const;
};

struct FunctionalSpec {
    int k = 1;  // eigenvalues consumed
    FunctionalExpr combiner;
    std::string name;

    /// J from the first k eigenvalues; +infinity when any lambda_j is infinite.
    double evaluate(std::span<const double> lambdas) const;
};

/// Parses e.g. "lambda2", "max(lambda1, 3)", "2*lambda1 + lambda3".
/// Throws ParameterError("functional") for syntax errors or negative factors.
FunctionalSpec parse_functional(const std::string& text);

/// J(mask); the empty mask gives +infinity.
double eval_functional(const FunctionalSpec& spec, const StiffnessOperator& base, const DomainMask& mask,
                       const SolverOptions& options = {});

/// Torsion of a mask, or the zero function for the empty mask.
GridFunction torsion_or_zero(const StiffnessOperator& base, const DomainMask& mask, const SolverOptions& options = {});

/// ||w_A - w_B||_{L2}, empty masks contributing w = 0.
double gamma_distance(const StiffnessOperator& base, const DomainMask& a, const DomainMask& b,
                      const SolverOptions& options = {});

/// Cells nearest to `center`, round(volume / h^dim) of them; ties by cell index.
DomainMask ball_mask(const Grid& grid, const Point& center, double volume);

/// Face-adjacent connected components, ordered by their lowest cell index.
std::vector<DomainMask> connected_components(const DomainMask& mask);

/// Smallest distance between cell centres of two masks (+infinity if either is empty).
double mask_separation(const DomainMask& a, const DomainMask& b);

struct TwoBallRow {
    double d = 0.0;
    double lambda1_union = 0.0;
    double lambda2_union = 0.0;
    double lambda1_half_ball = 0.0;
    double gap = 0.0;
};

/// Two balls of volume total/2 whose facing boundaries are `d` apart,
/// placed symmetrically about the box centre, against one ball of volume
/// total/2 at the centre. Distances are in length units.
std::vector<TwoBallRow> two_ball_experiment(const StiffnessOperator& base, double total_volume,
                                            std::span<const double> distances, const SolverOptions& options = {});

struct AnnealOptions {
    int iterations = 1000;
    std::uint64_t seed = 1;
    double initial_temperature = -1.0;  // < 0: |J(initial)| / 10
    double cooling = 0.995;             // T_j = T_0 cooling^j
    double adjacent_fraction = 0.8;     // share of candidates taken next to the mask
    int checkpoints = 32;
};

struct Move {
    int iteration = 0;
    int removed = 0;
    int added = 0;
    double value = 0.0;
};

struct ShapeTrajectory {
    std::vector<DomainMask> masks;         // best-so-far masks at checkpoints
    std::vector<double> values;            // J of each mask, nonincreasing
    std::vector<TorsionFunction> torsions;
    std::uint64_t seed = 0;
    std::vector<Move> move_log;            // every accepted move
};

/// Volume-preserving exchange walk (simulated annealing) from a seeded random
/// mask of `volume / h^dim` cells.
ShapeTrajectory minimize_shape(const FunctionalSpec& spec, const StiffnessOperator& base, double volume,
                               const AnnealOptions& options, const SolverOptions& solver = {});

/// Assembles a trajectory from given masks (torsions and values of lambda_1 filled in).
ShapeTrajectory make_trajectory(const StiffnessOperator& base, std::vector<DomainMask> masks,
                                const SolverOptions& solver = {});

struct ClusterSplit {
    int component_count = 0;
    std::vector<DomainMask> clusters;  // two clusters, or one when the mask is connected
    std::vector<DomainMask> cores;     // largest component of each cluster
    double separation = 0.0;           // between the two clusters
    double debris_volume = 0.0;        // cluster cells outside the cores
};

/// Single-linkage grouping of the components into two clusters across the
/// largest inter-component gap.
ClusterSplit split_clusters(const DomainMask& mask);

struct DichotomyOptions {
    double tail_fraction = 0.5;
    double debris_fraction = 0.02;
    double volume_floor = 0.1;       // min cluster volume / mask volume
    double resolvent_fraction = 0.05;
    double cauchy_fraction = 0.02;
};

struct DichotomyReport {
    Verdict verdict = Verdict::inconclusive;
    std::optional<std::pair<std::vector<DomainMask>, std::vector<DomainMask>>> components;
    std::vector<double> separations;
    std::vector<std::pair<double, double>> component_volumes;
    std::vector<double> resolvent_gap;
    std::vector<double> resolvent_norm;
    int tail_begin = 0;
    std::vector<std::string> notes;
};

DichotomyReport detect_dichotomy(const ShapeTrajectory& traj, const StiffnessOperator& base,
                                 const DichotomyOptions& options = {}, const SolverOptions& solver = {});

struct SemicontinuityReport {
    double limit_volume = 0.0;
    double min_tail_volume = 0.0;
    double threshold = 0.0;
    double max_tail_distance = 0.0;
    bool holds = false;
};

/// Limit set {w_last > 1e-8 max w_last} against the tail volumes. Throws
/// PreconditionError when tail torsions differ by more than `tolerance`
/// relative to the largest tail torsion norm.
SemicontinuityReport volume_semicontinuity_check(const ShapeTrajectory& traj, double tail_fraction = 1.0 / 3.0,
                                                 double tolerance = 0.05);

}  // namespace fracshape

#endif
