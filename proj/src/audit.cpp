#include "fracshape/audit.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include <fmt/format.h>

#include "fracshape/concentration.hpp"
#include "fracshape/errors.hpp"
#include "fracshape/shape.hpp"

namespace fracshape {

bool AuditReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const AuditCheck& c) { return c.passed; });
}

std::vector<AuditCheckInfo> list_checks() {
    return {
        {"operator-symmetry", "k_ij = k_ji exactly"},
        {"m-matrix-structure", "off-diagonal entries <= 0, row sums equal the tail weights >= 0"},
        {"form-positivity", "Q(u) > 0 for random nonzero u"},
        {"eigen-residuals", "relative residuals and orthonormality defects <= 1e-8"},
        {"rayleigh-bound", "lambda_1 <= Q(u)/||u||^2 + 1e-8 for random u in the mask"},
        {"torsion-maximum-principle", "w >= -1e-12"},
        {"torsion-monotonicity", "inner mask torsion <= outer mask torsion + 1e-10"},
        {"eigenvalue-monotonicity", "lambda_k(inner) >= lambda_k(outer) - 1e-8, k <= 3"},
        {"energy-identity", "Q(w) = int w within 1e-8 relative"},
        {"dunford", "|1/lambda_k(inner) - 1/lambda_k(outer)| <= ||R_outer - R_inner|| + 1e-8, k <= 3"},
        {"torsion-duality", "int (R_A f - R_B f) = int f (w_A - w_B) within 1e-8 relative"},
        {"torsion-resolvent-cotrend", "resolvent gap grows with torsion distance along a shrinking family"},
        {"projection", "Q(w_A - w_B) <= Q(w_A - v) + 1e-9 max(1, Q(w_A)) for v supported in B"},
        {"poincare", "||u|| <= lambda_1^{-1/2} Q(u)^{1/2} for random u in the mask"},
        {"cutoff-defect-decay", "cut-off defect of a fixed bump strictly decreases along a doubling ladder"},
        {"split-superadditivity", "Q(u) - Q(v) - Q(w) >= -2 (sum of cut-off defects) for a two-bump split"},
        {"lieb", "some shift z gives lambda_1((A+z) n B) <= 2 (lambda_1(A) + lambda_1(B))"},
        {"empty-domain-conventions", "empty masks: J = +infinity, w = 0, ||R_A - R_empty|| = 1/lambda_1(A)"},
    };
}

namespace {

struct Tally {
    AuditCheck check;
    explicit Tally(std::string name) {
        check.name = std::move(name);
        check.slack = kInfinity;
    }
    // margin = bound - value; violated when margin < -tol.
    void add(double margin, double tol, const std::string& where) {
        ++check.instances;
        check.slack = std::min(check.slack, margin);
        if (!(margin >= -tol) && check.passed) {
            check.passed = false;
            check.detail = fmt::format("violated at {} (margin {:.3e}, tolerance {:.3e})", where, margin, tol);
        }
    }
    void fail(const std::string& what) {
        ++check.instances;
        check.passed = false;
        if (check.detail.empty()) check.detail = what;
    }
};

struct Context {
    const StiffnessOperator& op;
    const SolverOptions& options;
    std::mt19937_64 rng;

    const Grid& grid() const { return op.grid(); }

    int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

    // Random cells of a random window; at least `min_cells` are set.
    DomainMask random_mask(int min_cells = 4) {
        const Grid& g = grid();
        const int r = g.resolution();
        const int side = g.dim() == 1 ? std::min(r, uniform_int(8, 64)) : std::min(r, uniform_int(3, 8));
        const int x0 = uniform_int(0, r - side);
        const int y0 = g.dim() == 1 ? 0 : uniform_int(0, r - side);
        std::vector<int> window;
        for (int y = 0; y < (g.dim() == 1 ? 1 : side); ++y)
            for (int x = 0; x < side; ++x) window.push_back(g.index({x0 + x, y0 + y}));
        const double density = uniform(0.3, 0.9);
        DomainMask m(g);
        for (int c : window)
            if (uniform(0.0, 1.0) < density) m.set(c);
        std::shuffle(window.begin(), window.end(), rng);
        for (int c : window) {
            if (m.count() >= std::min(min_cells, static_cast<int>(window.size()))) break;
            m.set(c);
        }
        return m;
    }

    // Outer mask and a nested inner mask with at least `min_inner` cells.
    std::pair<DomainMask, DomainMask> random_nested(int min_inner = 3) {
        DomainMask outer = random_mask(min_inner + 1);
        std::vector<int> cells = outer.indices();
        std::shuffle(cells.begin(), cells.end(), rng);
        const int removable = static_cast<int>(cells.size()) - min_inner;
        const int remove = uniform_int(1, std::max(1, removable / 2 + 1));
        DomainMask inner = outer;
        for (int i = 0; i < std::min(remove, removable); ++i) inner.set(cells[static_cast<std::size_t>(i)], false);
        return {outer, inner};
    }

    GridFunction random_function_on(const DomainMask& m) {
        GridFunction u(grid());
        for (int c : m.indices()) u.values(c) = uniform(-1.0, 1.0);
        return u;
    }
};

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

using CheckFn = std::function<void(Context&, Tally&, int)>;

void check_symmetry(Context& c, Tally& t, int) {
    const auto& a = c.op.matrix();
    double worst = 0.0;
    int wi = 0, wj = 0;
    for (int j = 0; j < a.cols(); ++j)
        for (int i = 0; i < j; ++i)
            if (std::abs(a(i, j) - a(j, i)) > worst) {
                worst = std::abs(a(i, j) - a(j, i));
                wi = i;
                wj = j;
            }
    t.add(-worst, 0.0, fmt::format("pair ({}, {})", wi, wj));
}

void check_m_matrix(Context& c, Tally& t, int) {
    const auto& a = c.op.matrix();
    double worst_off = 0.0, worst_row = 0.0;
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < a.cols(); ++j)
            if (i != j) worst_off = std::max(worst_off, a(i, j));
        const double row = a.row(i).sum();
        worst_row = std::max(worst_row, std::abs(row - c.op.tail()(i)) / std::max(a(i, i), 1e-300));
        t.add(row, 1e-12 * a(i, i), fmt::format("row {}", i));
    }
    t.add(-worst_off, 0.0, "off-diagonal sign");
    t.add(-worst_row, 1e-10, "row sums against tail weights");
}

void check_positivity(Context& c, Tally& t, int) {
    for (int rep = 0; rep < 10; ++rep) {
        const GridFunction u = c.random_function_on(DomainMask::full(c.grid()));
        t.add(gagliardo_sq(c.op, u), -1e-300, "random u");
    }
}

void check_eigen(Context& c, Tally& t, int trial) {
    const DomainMask m = c.random_mask();
    const int k = std::min(3, m.count());
    const Spectrum sp = eigenpairs(restrict_to(c.op, m), k, c.options);
    for (int i = 0; i < k; ++i) {
        t.add(1e-8 - sp.residuals[static_cast<std::size_t>(i)], 0.0, fmt::format("trial {} residual {}", trial, i));
        for (int j = 0; j <= i; ++j) {
            const double ip = sp.eigenfunctions[static_cast<std::size_t>(i)].dot(sp.eigenfunctions[static_cast<std::size_t>(j)]);
            t.add(1e-8 - std::abs(ip - (i == j ? 1.0 : 0.0)), 0.0, fmt::format("trial {} pair ({}, {})", trial, i, j));
        }
    }
    t.add(sp.eigenvalues.front(), -1e-300, fmt::format("trial {} lambda_1 > 0", trial));
}

void check_rayleigh(Context& c, Tally& t, int trial) {
    const DomainMask m = c.random_mask();
    const double l1 = eigenpairs(restrict_to(c.op, m), 1, c.options).eigenvalues.front();
    for (int rep = 0; rep < 20; ++rep) {
        const GridFunction u = c.random_function_on(m);
        t.add(gagliardo_sq(c.op, u) / u.mass() - l1, 1e-8 * l1, fmt::format("trial {}", trial));
    }
}

void check_max_principle(Context& c, Tally& t, int trial) {
    const TorsionFunction w = solve_torsion(restrict_to(c.op, c.random_mask()), c.options);
    t.add(w.values.values.minCoeff(), 1e-12, fmt::format("trial {}", trial));
}

void check_torsion_monotone(Context& c, Tally& t, int trial) {
    const auto [outer, inner] = c.random_nested();
    const GridFunction wo = solve_torsion(restrict_to(c.op, outer), c.options).values;
    const GridFunction wi = solve_torsion(restrict_to(c.op, inner), c.options).values;
    t.add((wo.values - wi.values).minCoeff(), 1e-10, fmt::format("trial {}", trial));
}

void check_eigen_monotone(Context& c, Tally& t, int trial) {
    const auto [outer, inner] = c.random_nested();
    const int k = std::min(3, inner.count());
    const Spectrum so = eigenpairs(restrict_to(c.op, outer), k, c.options);
    const Spectrum si = eigenpairs(restrict_to(c.op, inner), k, c.options);
    for (int i = 0; i < k; ++i)
        t.add(si.eigenvalues[static_cast<std::size_t>(i)] - so.eigenvalues[static_cast<std::size_t>(i)], 1e-8,
              fmt::format("trial {} k={}", trial, i + 1));
}

void check_energy(Context& c, Tally& t, int trial) {
    const TorsionFunction w = solve_torsion(restrict_to(c.op, c.random_mask()), c.options);
    t.add(1e-8 - rel(gagliardo_sq(c.op, w.values), w.values.integral()), 0.0, fmt::format("trial {}", trial));
}

void check_dunford(Context& c, Tally& t, int trial) {
    const auto [outer, inner] = c.random_nested();
    const DirichletOperator ro = restrict_to(c.op, outer), ri = restrict_to(c.op, inner);
    const double gap = resolvent_norm_diff(ro, ri, c.options);
    const int k = std::min(3, inner.count());
    const Spectrum so = eigenpairs(ro, k, c.options), si = eigenpairs(ri, k, c.options);
    for (int i = 0; i < k; ++i) {
        const double lhs = std::abs(1.0 / si.eigenvalues[static_cast<std::size_t>(i)] -
                                    1.0 / so.eigenvalues[static_cast<std::size_t>(i)]);
        t.add(gap - lhs, 1e-8, fmt::format("trial {} k={}", trial, i + 1));
    }
}

void check_duality(Context& c, Tally& t, int trial) {
    const auto [outer, inner] = c.random_nested();
    const auto rep = torsion_resolvent_bound_check(restrict_to(c.op, outer), restrict_to(c.op, inner), c.options);
    t.add(1e-8 - rep.duality_relative, 0.0, fmt::format("trial {}", trial));
}

void check_cotrend(Context& c, Tally& t, int trial) {
    DomainMask outer = c.random_mask(24);
    std::vector<int> cells = outer.indices();
    if (cells.size() < 16) return;
    std::shuffle(cells.begin(), cells.end(), c.rng);
    const DirichletOperator ro = restrict_to(c.op, outer);
    double prev_lhs = 0.0, prev_dist = 0.0;
    DomainMask inner = outer;
    std::size_t removed = 0;
    for (std::size_t step : {1u, 2u, 4u, 8u}) {
        while (removed < step) inner.set(cells[removed++], false);
        const auto rep = torsion_resolvent_bound_check(ro, restrict_to(c.op, inner), c.options);
        t.add(rep.torsion_distance - prev_dist, 1e-12, fmt::format("trial {} step {} torsion distance", trial, step));
        t.add(rep.lhs - prev_lhs, 1e-10 * rep.lhs, fmt::format("trial {} step {} resolvent gap", trial, step));
        prev_lhs = rep.lhs;
        prev_dist = rep.torsion_distance;
    }
}

void check_projection(Context& c, Tally& t, int trial) {
    const auto [outer, inner] = c.random_nested();
    const GridFunction wo = solve_torsion(restrict_to(c.op, outer), c.options).values;
    const GridFunction wi = solve_torsion(restrict_to(c.op, inner), c.options).values;
    const double best = gagliardo_sq(c.op, GridFunction(c.grid(), wo.values - wi.values));
    const double tol = 1e-9 * std::max(1.0, gagliardo_sq(c.op, wo));
    for (int rep = 0; rep < 20; ++rep) {
        const double scale = std::pow(10.0, c.uniform(-4.0, 0.0)) * wi.values.cwiseAbs().maxCoeff();
        GridFunction v = c.random_function_on(inner);
        v.values = wi.values + scale * v.values;
        t.add(gagliardo_sq(c.op, GridFunction(c.grid(), wo.values - v.values)) - best, tol,
              fmt::format("trial {}", trial));
    }
}

void check_poincare(Context& c, Tally& t, int trial) {
    const DomainMask m = c.random_mask();
    const double cp = poincare_constant(restrict_to(c.op, m), c.options);
    for (int rep = 0; rep < 20; ++rep) {
        const GridFunction u = c.random_function_on(m);
        const double bound = cp * std::sqrt(gagliardo_sq(c.op, u));
        t.add(bound - u.l2_norm(), 1e-8 * bound, fmt::format("trial {}", trial));
    }
}

GridFunction gaussian(const Grid& g, const Point& centre, double width) {
    GridFunction u(g);
    for (int i = 0; i < g.cell_count(); ++i) {
        const double r = distance(g.center(i), centre, g.dim());
        u.values(i) = std::exp(-0.5 * r * r / (width * width));
    }
    return u;
}

void check_cutoff_decay(Context& c, Tally& t, int trial) {
    if (trial > 0) return;  // deterministic instance
    const double hw = c.grid().half_width();
    // Radii below one cell see no cell centres inside the transition band.
    const double r0 = std::max(hw / 16.0, c.grid().h());
    const GridFunction u = gaussian(c.grid(), {0.0, 0.0}, r0);
    double prev = kInfinity;
    for (double r = r0; r <= hw / 2.0 * (1.0 + 1e-12); r *= 2.0) {
        const double d = cutoff_defect(c.op, u, {0.0, 0.0}, r);
        t.add(prev - d, -1e-300, fmt::format("R = {}", r));
        prev = d;
    }
}

void check_split(Context& c, Tally& t, int trial) {
    if (trial > 0) return;
    const double hw = c.grid().half_width();
    const double r1 = hw / 8.0;
    GridFunction u = gaussian(c.grid(), {0.0, 0.0}, r1 / 3.0);
    u.values += gaussian(c.grid(), {6.0 * r1, 0.0}, r1 / 3.0).values;
    const SplitPair sp = dichotomy_split(c.op, u, {0.0, 0.0}, r1, 2.5 * r1);
    t.add(sp.seminorm_defect + sp.tolerance, 0.0, "two-bump split");
    if (!(sp.support_gap > 0.0)) t.fail("supports of v and w touch");
}

void check_lieb(Context& c, Tally& t, int trial) {
    const DomainMask a = c.random_mask(), b = c.random_mask();
    const LiebResult r = lieb_translation_search(c.op, a, b);
    t.add(r.bound - r.lambda1_intersection, 0.0, fmt::format("trial {}", trial));
}

void check_empty(Context& c, Tally& t, int trial) {
    if (trial > 0) return;
    const DomainMask empty(c.grid());
    const DomainMask m = c.random_mask();
    const FunctionalSpec l1 = parse_functional("lambda1");
    if (!std::isinf(eval_functional(l1, c.op, empty, c.options))) t.fail("J(empty) is not +infinity");
    try {
        (void)restrict_to(c.op, empty);
        t.fail("restricting to the empty mask did not raise");
    } catch (const DomainEmptyError&) {
    }
    const double dist = gamma_distance(c.op, m, empty, c.options);
    const double wn = solve_torsion(restrict_to(c.op, m), c.options).values.l2_norm();
    t.add(1e-10 - rel(dist, wn), 0.0, "gamma distance to the empty set");
    const DirichletOperator rm = restrict_to(c.op, m);
    const double l1v = eigenpairs(rm, 1, c.options).eigenvalues.front();
    t.add(1e-8 - rel(resolvent_norm(rm, c.options), 1.0 / l1v), 0.0, "resolvent norm against 1/lambda_1");
    if (gamma_distance(c.op, empty, empty, c.options) != 0.0) t.fail("distance between empty masks is nonzero");
}

}  // namespace

AuditReport audit_operator(const StiffnessOperator& op, const std::vector<std::uint64_t>& seeds, int trials,
                           const SolverOptions& options) {
    if (trials < 1) throw ParameterError("audit.trials", "must be at least 1");
    if (seeds.empty()) throw ParameterError("seeds", "must be nonempty");
    const std::vector<std::pair<std::string, CheckFn>> suite{
        {"operator-symmetry", check_symmetry},
        {"m-matrix-structure", check_m_matrix},
        {"form-positivity", check_positivity},
        {"eigen-residuals", check_eigen},
        {"rayleigh-bound", check_rayleigh},
        {"torsion-maximum-principle", check_max_principle},
        {"torsion-monotonicity", check_torsion_monotone},
        {"eigenvalue-monotonicity", check_eigen_monotone},
        {"energy-identity", check_energy},
        {"dunford", check_dunford},
        {"torsion-duality", check_duality},
        {"torsion-resolvent-cotrend", check_cotrend},
        {"projection", check_projection},
        {"poincare", check_poincare},
        {"cutoff-defect-decay", check_cutoff_decay},
        {"split-superadditivity", check_split},
        {"lieb", check_lieb},
        {"empty-domain-conventions", check_empty},
    };
    AuditReport report;
    for (std::size_t ci = 0; ci < suite.size(); ++ci) {
        Tally tally(suite[ci].first);
        for (std::uint64_t seed : seeds) {
            Context ctx{op, options, std::mt19937_64(seed * 1000003ULL + ci)};
            const bool once = ci < 3;  // operator-level checks do not depend on the trial
            for (int trial = 0; trial < (once ? 1 : trials); ++trial) {
                try {
                    suite[ci].second(ctx, tally, trial);
                } catch (const std::exception& e) {
                    tally.fail(fmt::format("raised: {}", e.what()));
                }
            }
        }
        if (tally.check.instances == 0) tally.check.slack = 0.0;
        report.checks.push_back(std::move(tally.check));
    }
    return report;
}

}  // namespace fracshape
