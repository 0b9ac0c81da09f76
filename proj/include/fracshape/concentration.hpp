#ifndef FRACSHAPE_CONCENTRATION_HPP
#define FRACSHAPE_CONCENTRATION_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fracshape/grid.hpp"
#include "fracshape/stiffness.hpp"

namespace fracshape {

/// Levy concentration function: for each radius, the largest L2 mass of u in
/// a closed ball of that radius centred at a cell centre.
struct ConcentrationProfile {
    std::vector<double> radii;
    std::vector<double> mass;
    std::vector<int> center_cell;  // argmax centre per radius (lowest index on ties)
};

ConcentrationProfile concentration_profile_detail(const GridFunction& u, std::span<const double> radii);
std::vector<double> concentration_profile(const GridFunction& u, std::span<const double> radii);

struct FunctionSequence {
    std::vector<GridFunction> entries;
    double mass_limit = 0.0;  // mean mass over the last third
};

/// Validates the entries (same dimension and cell size, aligned cells, at
/// least 8 entries, tail masses within 10% of their mean) and fills mass_limit.
FunctionSequence make_sequence(std::vector<GridFunction> entries);

enum class Verdict { compactness, vanishing, dichotomy, inconclusive };
std::string to_string(Verdict v);

struct ClassifyThresholds {
    double plateau_slope = 0.02;  // relative growth of Q over one doubling of R
    double tail_fraction = 1.0 / 3.0;
};

struct TrichotomyReport {
    Verdict verdict = Verdict::inconclusive;
    double mass_limit = 0.0;
    double epsilon = 0.0;
    std::vector<Point> centers;        // compactness: argmax centres y_n along the tail
    std::optional<double> alpha;       // dichotomy: plateau mass
    std::vector<double> radii;         // geometric ladder h * 2^j
    std::vector<std::vector<double>> profiles;  // Q_n(R_j) for every entry
    int reference_index = 0;           // ladder index of the first entry's concentration radius
    int tail_begin = 0;
    ClassifyThresholds thresholds;
    std::vector<std::string> notes;
};

/// Finite-sequence surrogate of the compactness / vanishing / dichotomy
/// alternative. Deterministic; "inconclusive" when no branch is supported.
TrichotomyReport classify(const FunctionSequence& seq, double epsilon, const ClassifyThresholds& thresholds = {});

/// Radial cut-off pair: phi = 1 on B_R, 0 off B_2R with a quintic C^2
/// transition; psi = sqrt(1 - phi^2) (0 on B_R, 1 off B_2R).
struct Cutoffs {
    double radius = 1.0;
    double phi(double r) const;
    double psi(double r) const;
};

Cutoffs make_cutoffs(double radius);

enum class CutoffKind { inner, outer };  // phi_R or psi_R

/// Half of \int\int w(x) |u(x)-u(y)|^2 / |x-y|^{N+2s}, with w given per cell and
/// a constant value outside the box; the same scale as gagliardo_sq.
double weighted_form(const StiffnessOperator& op, const GridFunction& u, const Eigen::VectorXd& cell_weight,
                     double exterior_weight);

/// |Q(c u) - weighted_form(u, c^2)| for the cut-off c = phi_R or psi_R centred
/// at `center`. Requires B_{2R}(center) inside the box.
double cutoff_defect(const StiffnessOperator& op, const GridFunction& u, const Point& center, double radius,
                     CutoffKind kind = CutoffKind::inner);

struct SplitPair {
    GridFunction v;               // phi_{R1}(. - center) u
    GridFunction w;               // psi_{R2}(. - center) u
    double support_gap = 0.0;     // min distance between cells of supp v and supp w
    double nominal_gap = 0.0;     // R2 - 2 R1
    double mass_residual = 0.0;   // ||u - v - w||
    double annulus_mass = 0.0;    // ||u 1_{R1 <= |x-c| <= 2 R2}||
    double seminorm_defect = 0.0; // Q(u) - Q(v) - Q(w)
    double tolerance = 0.0;       // 2 (defect_phi(R1) + defect_psi(R2))
    bool bound_holds = false;     // seminorm_defect >= -tolerance
};

SplitPair dichotomy_split(const StiffnessOperator& op, const GridFunction& u, const Point& center, double r1,
                          double r2);

struct LiebResult {
    Shift z{0, 0};
    double lambda1_intersection = 0.0;
    double bound = 0.0;  // 2 (lambda_1(A) + lambda_1(B))
    bool satisfied = false;
    int shifts_scanned = 0;
};

/// Scans lattice shifts z keeping A + z inside the box, ordered by |z|^2 and
/// then lexicographically, and returns the first with a nonempty
/// intersection and lambda_1((A+z) n B) <= 2 (lambda_1(A) + lambda_1(B)).
/// If none qualifies, the shift with the smallest intersection eigenvalue is
/// returned with satisfied = false.
LiebResult lieb_translation_search(const StiffnessOperator& base, const DomainMask& a, const DomainMask& b);

enum class SequenceFamily { translating_bump, flattening_bump, separating_pair };
std::string to_string(SequenceFamily f);
SequenceFamily sequence_family_from_string(const std::string& name);

struct GeneratorOptions {
    int dim = 1;
    int length = 14;
    double h = 0.5;
    double growth = 1.4142135623730951;  // per-step ratio of scale or separation
    double bump_mass = 1.0;              // per bump (0.4 for the pair gives total 0.8)
    std::uint64_t seed = 1;
};

/// Synthetic sequences: a bump translated along e_1, a bump flattened as
/// t^{-N/2} phi(x/t), or two bumps receding from each other. The seed jitters
/// widths, offsets and step sizes.
FunctionSequence generate_sequence(SequenceFamily family, const GeneratorOptions& options);

}  // namespace fracshape

#endif
