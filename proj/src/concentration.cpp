#include "fracshape/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "fracshape/errors.hpp"
#include "fracshape/solvers.hpp"

namespace fracshape {

ConcentrationProfile concentration_profile_detail(const GridFunction& u, std::span<const double> radii) {
    for (std::size_t j = 0; j < radii.size(); ++j) {
        if (!(radii[j] > 0.0)) throw ParameterError("radii", "must be positive");
        if (j > 0 && !(radii[j] > radii[j - 1])) throw ParameterError("radii", "must be strictly ascending");
    }
    const Grid& g = u.grid;
    const int m = g.cell_count();
    const double cell = g.cell_volume();
    const std::size_t nr = radii.size();
    ConcentrationProfile out;
    out.radii.assign(radii.begin(), radii.end());
    out.mass.assign(nr, 0.0);
    out.center_cell.assign(nr, 0);

    std::vector<int> support;
    for (int i = 0; i < m; ++i)
        if (u.values(i) != 0.0) support.push_back(i);
    if (support.empty() || nr == 0) return out;

    // Ball membership uses lattice distances, compared with a small slack so
    // that radii that are exact multiples of h behave as closed balls.
    const double h = g.h();
    std::vector<double> r2(nr);
    for (std::size_t j = 0; j < nr; ++j) {
        const double r = radii[j] / h;
        r2[j] = r * r * (1.0 + 1e-12);
    }
    std::vector<double> bins(nr + 1);
    for (int c = 0; c < m; ++c) {
        std::fill(bins.begin(), bins.end(), 0.0);
        const Shift cc = g.coords(c);
        for (int i : support) {
            const Shift ci = g.coords(i);
            const double dx = ci[0] - cc[0], dy = ci[1] - cc[1];
            const double d2 = dx * dx + dy * dy;
            const auto j = static_cast<std::size_t>(std::lower_bound(r2.begin(), r2.end(), d2) - r2.begin());
            bins[j] += u.values(i) * u.values(i);
        }
        double acc = 0.0;
        for (std::size_t j = 0; j < nr; ++j) {
            acc += bins[j];
            const double mass = acc * cell;
            if (mass > out.mass[j]) {
                out.mass[j] = mass;
                out.center_cell[j] = c;
            }
        }
    }
    // Cumulative sums of nonnegative bins are nondecreasing per centre; keep
    // the maximum monotone as well against rounding.
    for (std::size_t j = 1; j < nr; ++j) out.mass[j] = std::max(out.mass[j], out.mass[j - 1]);
    return out;
}

std::vector<double> concentration_profile(const GridFunction& u, std::span<const double> radii) {
    return concentration_profile_detail(u, radii).mass;
}

FunctionSequence make_sequence(std::vector<GridFunction> entries) {
    if (entries.size() < 8) throw ParameterError("sequence", "needs at least 8 entries");
    const Grid& g0 = entries.front().grid;
    for (const auto& e : entries) {
        const Grid& g = e.grid;
        if (g.dim() != g0.dim()) throw StructuralError("sequence entries have different dimensions");
        if (std::abs(g.h() - g0.h()) > 1e-12 * g0.h()) throw StructuralError("sequence entries have different cell sizes");
        if ((g.resolution() - g0.resolution()) % 2 != 0)
            throw StructuralError("sequence grids are not cell-aligned (resolutions differ by an odd count)");
    }
    FunctionSequence seq;
    seq.entries = std::move(entries);
    const std::size_t n = seq.entries.size();
    const std::size_t tail = n - (n + 2) / 3;
    double sum = 0.0;
    for (std::size_t k = tail; k < n; ++k) sum += seq.entries[k].mass();
    seq.mass_limit = sum / static_cast<double>(n - tail);
    if (!(seq.mass_limit > 0.0)) throw ParameterError("sequence", "tail has zero mass");
    for (std::size_t k = tail; k < n; ++k)
        if (std::abs(seq.entries[k].mass() - seq.mass_limit) > 0.1 * seq.mass_limit)
            throw ParameterError("sequence", "tail masses deviate from their mean by more than 10%");
    return seq;
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::compactness: return "compactness";
        case Verdict::vanishing: return "vanishing";
        case Verdict::dichotomy: return "dichotomy";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

namespace {

struct Plateau {
    bool found = false;
    int begin = 0;  // ladder index where the flat run starts
    int end = 0;    // ladder index where it stops (inclusive)
    double value = 0.0;
};

// Longest run of doublings over which Q grows by less than `slope` relative,
// restricted to values strictly between eps and lambda - eps.
Plateau find_plateau(const std::vector<double>& q, double eps, double lambda, double slope) {
    Plateau best;
    int run_begin = -1;
    for (std::size_t j = 0; j + 1 < q.size(); ++j) {
        const bool in_range = q[j] > eps && q[j + 1] < lambda - eps;
        const bool flat = in_range && q[j] > 0.0 && (q[j + 1] - q[j]) / q[j] < slope;
        if (flat) {
            if (run_begin < 0) run_begin = static_cast<int>(j);
            const int end = static_cast<int>(j) + 1;
            if (!best.found || end - run_begin > best.end - best.begin) {
                best = Plateau{true, run_begin, end, q[j + 1]};
            }
        } else {
            run_begin = -1;
        }
    }
    return best;
}

}  // namespace

TrichotomyReport classify(const FunctionSequence& seq, double epsilon, const ClassifyThresholds& thresholds) {
    const std::size_t n = seq.entries.size();
    if (n < 8) throw ParameterError("sequence", "needs at least 8 entries");
    const double lambda = seq.mass_limit;
    if (!(epsilon > 0.0 && epsilon < lambda / 4.0)) throw ParameterError("epsilon", "must lie in (0, mass_limit/4)");
    const Grid& g0 = seq.entries.front().grid;
    double diameter = 0.0;
    for (const auto& e : seq.entries) {
        if (e.grid.dim() != g0.dim() || std::abs(e.grid.h() - g0.h()) > 1e-12 * g0.h())
            throw StructuralError("sequence entries live on incompatible grids");
        diameter = std::max(diameter, 2.0 * e.grid.half_width() * std::sqrt(static_cast<double>(e.grid.dim())));
    }

    TrichotomyReport rep;
    rep.mass_limit = lambda;
    rep.epsilon = epsilon;
    rep.thresholds = thresholds;
    for (double r = g0.h(); ; r *= 2.0) {
        rep.radii.push_back(r);
        if (r >= diameter) break;
    }
    const auto tail_len = static_cast<std::size_t>(std::ceil(thresholds.tail_fraction * static_cast<double>(n)));
    rep.tail_begin = static_cast<int>(n - std::clamp<std::size_t>(tail_len, 2, n));

    std::vector<ConcentrationProfile> prof;
    for (const auto& e : seq.entries) {
        prof.push_back(concentration_profile_detail(e, rep.radii));
        rep.profiles.push_back(prof.back().mass);
    }
    const std::size_t nr = rep.radii.size();

    // Concentration scale of the first entry: smallest radius holding all but eps of its mass.
    const double first_mass = seq.entries.front().mass();
    std::size_t ref = nr - 1;
    for (std::size_t j = 0; j < nr; ++j)
        if (prof.front().mass[j] >= first_mass - epsilon) {
            ref = j;
            break;
        }
    rep.reference_index = static_cast<int>(ref);
    const std::size_t local = std::min(ref + 1, nr - 1);
    rep.notes.push_back("surrogate radii and centres are finite-sequence heuristics");

    const auto tb = static_cast<std::size_t>(rep.tail_begin);
    bool compact = true;
    for (std::size_t k = tb; k < n; ++k) compact = compact && prof[k].mass[local] >= lambda - epsilon;
    if (compact) {
        rep.verdict = Verdict::compactness;
        for (std::size_t k = tb; k < n; ++k)
            rep.centers.push_back(seq.entries[k].grid.center(prof[k].center_cell[local]));
        return rep;
    }

    bool decreasing = true;
    for (std::size_t k = tb + 1; k < n; ++k)
        decreasing = decreasing && prof[k].mass[local] <= prof[k - 1].mass[local] * (1.0 + 1e-9);
    if (decreasing && prof.back().mass[local] < epsilon) {
        rep.verdict = Verdict::vanishing;
        return rep;
    }

    std::vector<Plateau> plateaus;
    for (std::size_t k = tb; k < n; ++k) plateaus.push_back(find_plateau(prof[k].mass, epsilon, lambda, thresholds.plateau_slope));
    bool split = std::all_of(plateaus.begin(), plateaus.end(), [](const Plateau& p) { return p.found; });
    if (split) {
        for (std::size_t k = 1; k < plateaus.size(); ++k) {
            split = split && plateaus[k].end >= plateaus[k - 1].end;
            split = split && std::abs(plateaus[k].value - plateaus.back().value) <= epsilon;
        }
        split = split && plateaus.back().end > plateaus.front().end;
    }
    if (split) {
        rep.verdict = Verdict::dichotomy;
        rep.alpha = plateaus.back().value;
        return rep;
    }
    rep.verdict = Verdict::inconclusive;
    return rep;
}

double Cutoffs::phi(double r) const {
    const double t = r / radius;
    if (t <= 1.0) return 1.0;
    if (t >= 2.0) return 0.0;
    const double x = t - 1.0;
    return 1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
}

double Cutoffs::psi(double r) const {
    const double t = r / radius;
    if (t <= 1.0) return 0.0;
    if (t >= 2.0) return 1.0;
    const double p = phi(r);
    return std::clamp(std::sqrt(std::max(0.0, 1.0 - p * p)), 0.0, 1.0);
}

Cutoffs make_cutoffs(double radius) {
    if (!(radius > 0.0)) throw ParameterError("R", "must be positive");
    return Cutoffs{radius};
}

double weighted_form(const StiffnessOperator& op, const GridFunction& u, const Eigen::VectorXd& cell_weight,
                     double exterior_weight) {
    require_same_grid(op.grid(), u.grid);
    const auto& a = op.matrix();
    const auto& v = u.values;
    const int m = op.size();
    double pairs = 0.0, tail = 0.0;
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < j; ++i) {
            const double d = v(i) - v(j);
            pairs -= a(i, j) * (cell_weight(i) + cell_weight(j)) * d * d;
        }
        tail += (cell_weight(j) + exterior_weight) * op.tail()(j) * v(j) * v(j);
    }
    return 0.5 * (pairs + tail);
}

namespace {

void require_ball_inside(const Grid& g, const Point& center, double radius) {
    for (int k = 0; k < g.dim(); ++k)
        if (std::abs(center[static_cast<std::size_t>(k)]) + 2.0 * radius > g.half_width() * (1.0 + 1e-12))
            throw ParameterError("R", "the ball of radius 2R around the centre must lie inside the box");
}

Eigen::VectorXd cutoff_values(const Grid& g, const Point& center, const Cutoffs& c, CutoffKind kind) {
    Eigen::VectorXd out(g.cell_count());
    for (int i = 0; i < g.cell_count(); ++i) {
        const double r = distance(g.center(i), center, g.dim());
        out(i) = kind == CutoffKind::inner ? c.phi(r) : c.psi(r);
    }
    return out;
}

double defect_with(const StiffnessOperator& op, const GridFunction& u, const Eigen::VectorXd& cut, CutoffKind kind) {
    const GridFunction cu(u.grid, cut.cwiseProduct(u.values));
    const double ext = kind == CutoffKind::inner ? 0.0 : 1.0;
    return std::abs(gagliardo_sq(op, cu) - weighted_form(op, u, cut.cwiseAbs2(), ext));
}

}  // namespace

double cutoff_defect(const StiffnessOperator& op, const GridFunction& u, const Point& center, double radius,
                     CutoffKind kind) {
    require_same_grid(op.grid(), u.grid);
    const Cutoffs c = make_cutoffs(radius);
    require_ball_inside(op.grid(), center, radius);
    return defect_with(op, u, cutoff_values(op.grid(), center, c, kind), kind);
}

SplitPair dichotomy_split(const StiffnessOperator& op, const GridFunction& u, const Point& center, double r1,
                          double r2) {
    require_same_grid(op.grid(), u.grid);
    if (!(r1 > 0.0)) throw ParameterError("R1", "must be positive");
    if (r2 < 2.0 * r1) throw ParameterError("R2", "must be at least 2*R1");
    const Grid& g = op.grid();
    require_ball_inside(g, center, r2);

    const Eigen::VectorXd phi = cutoff_values(g, center, make_cutoffs(r1), CutoffKind::inner);
    const Eigen::VectorXd psi = cutoff_values(g, center, make_cutoffs(r2), CutoffKind::outer);
    SplitPair out;
    out.v = GridFunction(g, phi.cwiseProduct(u.values));
    out.w = GridFunction(g, psi.cwiseProduct(u.values));
    out.nominal_gap = r2 - 2.0 * r1;

    std::vector<int> sv, sw;
    for (int i = 0; i < g.cell_count(); ++i) {
        if (out.v.values(i) != 0.0) sv.push_back(i);
        if (out.w.values(i) != 0.0) sw.push_back(i);
    }
    out.support_gap = std::numeric_limits<double>::infinity();
    for (int i : sv)
        for (int j : sw) out.support_gap = std::min(out.support_gap, g.distance(i, j));

    out.mass_residual = GridFunction(g, u.values - out.v.values - out.w.values).l2_norm();
    GridFunction ann(g);
    for (int i = 0; i < g.cell_count(); ++i) {
        const double r = distance(g.center(i), center, g.dim());
        if (r >= r1 && r <= 2.0 * r2) ann.values(i) = u.values(i);
    }
    out.annulus_mass = ann.l2_norm();

    out.seminorm_defect = gagliardo_sq(op, u) - gagliardo_sq(op, out.v) - gagliardo_sq(op, out.w);
    out.tolerance = 2.0 * (defect_with(op, u, phi, CutoffKind::inner) + defect_with(op, u, psi, CutoffKind::outer));
    out.bound_holds = out.seminorm_defect >= -out.tolerance;
    return out;
}

LiebResult lieb_translation_search(const StiffnessOperator& base, const DomainMask& a, const DomainMask& b) {
    require_same_grid(base.grid(), a.grid());
    require_same_grid(base.grid(), b.grid());
    if (a.empty() || b.empty()) throw DomainEmptyError();
    const Grid& g = base.grid();
    auto lambda1 = [&](const DomainMask& m) { return eigenpairs(restrict_to(base, m), 1).eigenvalues.front(); };
    LiebResult out;
    out.bound = 2.0 * (lambda1(a) + lambda1(b));

    const int r = g.resolution();
    std::vector<Shift> shifts;
    const int ylim = g.dim() == 2 ? r - 1 : 0;
    for (int zy = -ylim; zy <= ylim; ++zy)
        for (int zx = -(r - 1); zx <= r - 1; ++zx) shifts.push_back({zx, zy});
    std::stable_sort(shifts.begin(), shifts.end(), [](const Shift& p, const Shift& q) {
        const int np = p[0] * p[0] + p[1] * p[1], nq = q[0] * q[0] + q[1] * q[1];
        if (np != nq) return np < nq;
        return p < q;
    });

    bool any = false;
    double best = std::numeric_limits<double>::infinity();
    Shift best_z{0, 0};
    for (const Shift& z : shifts) {
        bool ok = false;
        const DomainMask az = a.translated(z, &ok);
        if (!ok) continue;
        const DomainMask inter = az.intersect(b);
        if (inter.empty()) continue;
        ++out.shifts_scanned;
        any = true;
        const double l1 = lambda1(inter);
        if (l1 <= out.bound) {
            out.z = z;
            out.lambda1_intersection = l1;
            out.satisfied = true;
            return out;
        }
        if (l1 < best) {
            best = l1;
            best_z = z;
        }
    }
    if (!any) throw NoOverlapError("no lattice shift gives a nonempty intersection");
    out.z = best_z;
    out.lambda1_intersection = best;
    out.satisfied = false;
    return out;
}

std::string to_string(SequenceFamily f) {
    switch (f) {
        case SequenceFamily::translating_bump: return "translating-bump";
        case SequenceFamily::flattening_bump: return "flattening-bump";
        case SequenceFamily::separating_pair: return "separating-pair";
    }
    return "";
}

SequenceFamily sequence_family_from_string(const std::string& name) {
    for (auto f : {SequenceFamily::translating_bump, SequenceFamily::flattening_bump, SequenceFamily::separating_pair})
        if (to_string(f) == name) return f;
    throw ParameterError("family", "unknown sequence family '" + name + "'");
}

namespace {

// Gaussian bumps sampled at cell centres, rescaled to the requested discrete mass each.
GridFunction sample_bumps(const Grid& g, const std::vector<Point>& centers, double width, double mass_each) {
    GridFunction total(g);
    for (const Point& c : centers) {
        GridFunction f(g);
        for (int i = 0; i < g.cell_count(); ++i) {
            const double r = distance(g.center(i), c, g.dim());
            f.values(i) = std::exp(-0.5 * r * r / (width * width));
        }
        f.values *= std::sqrt(mass_each / f.mass());
        total.values += f.values;
    }
    return total;
}

Grid grid_covering(int dim, double h, double reach) {
    const int half_cells = static_cast<int>(std::ceil(reach / h));
    return build_grid(dim, half_cells * h, 2 * half_cells);
}

}  // namespace

FunctionSequence generate_sequence(SequenceFamily family, const GeneratorOptions& o) {
    if (o.length < 8) throw ParameterError("length", "must be at least 8");
    if (!(o.h > 0.0)) throw ParameterError("h", "must be positive");
    if (!(o.growth > 1.0)) throw ParameterError("growth", "must exceed 1");
    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double width = 0.8 + 0.4 * unit(rng);          // bump standard deviation
    const double phase = (unit(rng) - 0.5) * o.h;        // sub-cell offset
    const double step = 4.0 + 4.0 * unit(rng);           // translation step
    const double separation0 = 6.0 + 4.0 * unit(rng);    // initial pair distance

    std::vector<GridFunction> entries;
    for (int k = 0; k < o.length; ++k) {
        switch (family) {
            case SequenceFamily::translating_bump: {
                const double shift = k * step;
                const Grid g = grid_covering(o.dim, o.h, shift + 6.0 * width + 2.0);
                entries.push_back(sample_bumps(g, {Point{shift + phase, 0.0}}, width, o.bump_mass));
                break;
            }
            case SequenceFamily::flattening_bump: {
                const double t = std::pow(o.growth, k);
                const Grid g = grid_covering(o.dim, o.h, 6.0 * width * t + 2.0);
                entries.push_back(sample_bumps(g, {Point{phase, 0.0}}, width * t, o.bump_mass));
                break;
            }
            case SequenceFamily::separating_pair: {
                const double d = separation0 * std::pow(o.growth, k);
                // The outer margin leaves room for cut-off balls around either bump.
                const Grid g = grid_covering(o.dim, o.h, 0.5 * d + 6.0 * width + 24.0);
                entries.push_back(sample_bumps(g, {Point{-0.5 * d + phase, 0.0}, Point{0.5 * d + phase, 0.0}}, width,
                                               o.bump_mass));
                break;
            }
        }
    }
    return make_sequence(std::move(entries));
}

}  // namespace fracshape
