#include "fracshape/shape.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "fracshape/errors.hpp"

namespace fracshape {

// ---------------------------------------------------------------------------
// Functional grammar

double FunctionalExpr::evaluate(std::span<const double> lambdas) const {
    switch (kind) {
        case Kind::eigenvalue: return lambdas[static_cast<std::size_t>(index - 1)];
        case Kind::constant: return value;
        case Kind::sum: {
            double acc = 0.0;
            for (const auto& a : args) acc += a.evaluate(lambdas);
            return acc;
        }
        case Kind::maximum: {
            double acc = -kInfinity;
            for (const auto& a : args) acc = std::max(acc, a.evaluate(lambdas));
            return acc;
        }
        case Kind::scale: {
            const double inner = args.front().evaluate(lambdas);
            return value == 0.0 ? 0.0 : value * inner;
        }
    }
    return 0.0;
}

int FunctionalExpr::max_index() const {
    int k = kind == Kind::eigenvalue ? index : 0;
    for (const auto& a : args) k = std::max(k, a.max_index());
    return k;
}

std::string FunctionalExpr::to_string() const {
    switch (kind) {
        case Kind::eigenvalue: return fmt::format("lambda{}", index);
        case Kind::constant: return fmt::format("{}", value);
        case Kind::sum: {
            std::string out = "(";
            for (std::size_t i = 0; i < args.size(); ++i) out += (i ? " + " : "") + args[i].to_string();
            return out + ")";
        }
        case Kind::maximum: {
            std::string out = "max(";
            for (std::size_t i = 0; i < args.size(); ++i) out += (i ? ", " : "") + args[i].to_string();
            return out + ")";
        }
        case Kind::scale: return fmt::format("{}*{}", value, args.front().to_string());
    }
    return "";
}

double FunctionalSpec::evaluate(std::span<const double> lambdas) const {
    if (static_cast<int>(lambdas.size()) < k) throw ParameterError("functional", "too few eigenvalues");
    for (int j = 0; j < k; ++j)
        if (std::isinf(lambdas[static_cast<std::size_t>(j)])) return kInfinity;
    return combiner.evaluate(lambdas);
}

namespace {

class FunctionalParser {
public:
    explicit FunctionalParser(const std::string& text) : text_(text) {}

    FunctionalExpr parse() {
        FunctionalExpr e = expression();
        skip_space();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ParameterError("functional", fmt::format("{} at offset {} in '{}'", what, pos_, text_));
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    bool accept_word(const std::string& w) {
        skip_space();
        if (text_.compare(pos_, w.size(), w) == 0) {
            pos_ += w.size();
            return true;
        }
        return false;
    }

    FunctionalExpr expression() {
        std::vector<FunctionalExpr> terms{term()};
        while (accept('+')) terms.push_back(term());
        if (terms.size() == 1) return terms.front();
        FunctionalExpr e;
        e.kind = FunctionalExpr::Kind::sum;
        e.args = std::move(terms);
        return e;
    }

    FunctionalExpr term() {
        double factor = 1.0;
        std::optional<FunctionalExpr> variable;
        auto absorb = [&](FunctionalExpr f) {
            if (f.kind == FunctionalExpr::Kind::constant) {
                factor *= f.value;
            } else if (variable) {
                fail("products of two eigenvalue expressions are not monotone-safe");
            } else {
                variable = std::move(f);
            }
        };
        absorb(factor_expr());
        while (accept('*')) absorb(factor_expr());
        if (!variable) {
            FunctionalExpr c;
            c.value = factor;
            return c;
        }
        if (factor == 1.0) return *variable;
        FunctionalExpr e;
        e.kind = FunctionalExpr::Kind::scale;
        e.value = factor;
        e.args.push_back(std::move(*variable));
        return e;
    }

    FunctionalExpr factor_expr() {
        skip_space();
        if (accept('(')) {
            FunctionalExpr e = expression();
            if (!accept(')')) fail("expected ')'");
            return e;
        }
        if (accept_word("max")) {
            if (!accept('(')) fail("expected '(' after max");
            FunctionalExpr e;
            e.kind = FunctionalExpr::Kind::maximum;
            e.args.push_back(expression());
            while (accept(',')) e.args.push_back(expression());
            if (!accept(')')) fail("expected ')'");
            return e;
        }
        if (accept_word("lambda") || accept_word("\xce\xbb")) {
            const std::size_t start = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            if (pos_ == start) fail("expected an eigenvalue index");
            const int j = std::stoi(text_.substr(start, pos_ - start));
            if (j < 1) fail("eigenvalue indices start at 1");
            FunctionalExpr e;
            e.kind = FunctionalExpr::Kind::eigenvalue;
            e.index = j;
            return e;
        }
        const char* begin = text_.c_str() + pos_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail("expected a number, lambdaN, max(...) or '('");
        if (!(v >= 0.0) || !std::isfinite(v)) fail("constants must be finite and nonnegative");
        pos_ += static_cast<std::size_t>(end - begin);
        FunctionalExpr c;
        c.value = v;
        return c;
    }

    const std::string& text_;
    std::size_t pos_ = 0;
};

}  // namespace

FunctionalSpec parse_functional(const std::string& text) {
    FunctionalSpec spec;
    spec.combiner = FunctionalParser(text).parse();
    spec.k = spec.combiner.max_index();
    if (spec.k < 1) throw ParameterError("functional", "must involve at least one eigenvalue");
    spec.name = text;
    return spec;
}

double eval_functional(const FunctionalSpec& spec, const StiffnessOperator& base, const DomainMask& mask,
                       const SolverOptions& options) {
    require_same_grid(base.grid(), mask.grid());
    // Fewer cells than requested eigenvalues: the missing ones are +infinity.
    if (mask.count() < spec.k) return kInfinity;
    const Spectrum sp = eigenpairs(restrict_to(base, mask), spec.k, options);
    return spec.evaluate(sp.eigenvalues);
}

GridFunction torsion_or_zero(const StiffnessOperator& base, const DomainMask& mask, const SolverOptions& options) {
    require_same_grid(base.grid(), mask.grid());
    if (mask.empty()) return GridFunction(base.grid());
    return solve_torsion(restrict_to(base, mask), options).values;
}

double gamma_distance(const StiffnessOperator& base, const DomainMask& a, const DomainMask& b,
                      const SolverOptions& options) {
    if (a == b) return 0.0;
    const GridFunction wa = torsion_or_zero(base, a, options);
    const GridFunction wb = torsion_or_zero(base, b, options);
    return GridFunction(base.grid(), wa.values - wb.values).l2_norm();
}

// ---------------------------------------------------------------------------
// Masks

DomainMask ball_mask(const Grid& grid, const Point& center, double volume) {
    if (!(volume >= 0.0)) throw ParameterError("volume", "must be nonnegative");
    const auto count = static_cast<long>(std::llround(volume / grid.cell_volume()));
    if (count > grid.cell_count())
        throw ParameterError("volume", fmt::format("{} exceeds the box capacity {}", volume,
                                                   grid.cell_count() * grid.cell_volume()));
    const double h = grid.h();
    std::vector<std::pair<std::int64_t, int>> keyed;
    keyed.reserve(static_cast<std::size_t>(grid.cell_count()));
    for (int i = 0; i < grid.cell_count(); ++i) {
        const double d = distance(grid.center(i), center, grid.dim()) / h;
        // Quantized so that lattice-symmetric cells tie exactly.
        keyed.emplace_back(std::llround(d * d * 1e9), i);
    }
    std::sort(keyed.begin(), keyed.end());
    DomainMask out(grid);
    for (long j = 0; j < count; ++j) out.set(keyed[static_cast<std::size_t>(j)].second);
    return out;
}

namespace {

template <class F>
void for_each_neighbour(const Grid& g, int cell, F&& f) {
    const Shift c = g.coords(cell);
    const int dims = g.dim();
    for (int axis = 0; axis < dims; ++axis)
        for (int step : {-1, 1}) {
            Shift n = c;
            n[static_cast<std::size_t>(axis)] += step;
            if (g.in_range(n)) f(g.index(n));
        }
}

bool on_boundary(const DomainMask& m, int cell) {
    const Grid& g = m.grid();
    int inside = 0;
    for_each_neighbour(g, cell, [&](int n) { inside += m.contains(n) ? 1 : 0; });
    return inside < 2 * g.dim();
}

}  // namespace

std::vector<DomainMask> connected_components(const DomainMask& mask) {
    const Grid& g = mask.grid();
    std::vector<int> label(static_cast<std::size_t>(g.cell_count()), -1);
    std::vector<DomainMask> out;
    std::vector<int> stack;
    for (int seed : mask.indices()) {
        if (label[static_cast<std::size_t>(seed)] >= 0) continue;
        const int id = static_cast<int>(out.size());
        out.emplace_back(g);
        label[static_cast<std::size_t>(seed)] = id;
        stack.push_back(seed);
        while (!stack.empty()) {
            const int c = stack.back();
            stack.pop_back();
            out.back().set(c);
            for_each_neighbour(g, c, [&](int n) {
                if (mask.contains(n) && label[static_cast<std::size_t>(n)] < 0) {
                    label[static_cast<std::size_t>(n)] = id;
                    stack.push_back(n);
                }
            });
        }
    }
    return out;
}

double mask_separation(const DomainMask& a, const DomainMask& b) {
    require_same_grid(a.grid(), b.grid());
    double best = kInfinity;
    const auto ia = a.indices(), ib = b.indices();
    for (int i : ia)
        for (int j : ib) best = std::min(best, a.grid().distance(i, j));
    return best;
}

ClusterSplit split_clusters(const DomainMask& mask) {
    ClusterSplit out;
    const std::vector<DomainMask> comps = connected_components(mask);
    out.component_count = static_cast<int>(comps.size());
    if (comps.empty()) return out;
    if (comps.size() == 1) {
        out.clusters = comps;
        out.cores = comps;
        return out;
    }
    const std::size_t n = comps.size();
    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) dist[i][j] = dist[j][i] = mask_separation(comps[i], comps[j]);

    // Prim's tree; the heaviest edge separates the two single-linkage clusters.
    std::vector<bool> in_tree(n, false);
    std::vector<double> best(n, kInfinity);
    std::vector<int> parent(n, -1);
    best[0] = 0.0;
    std::vector<std::pair<int, int>> edges;
    std::vector<double> weights;
    for (std::size_t step = 0; step < n; ++step) {
        std::size_t u = n;
        for (std::size_t v = 0; v < n; ++v)
            if (!in_tree[v] && (u == n || best[v] < best[u])) u = v;
        in_tree[u] = true;
        if (parent[u] >= 0) {
            edges.emplace_back(parent[u], static_cast<int>(u));
            weights.push_back(best[u]);
        }
        for (std::size_t v = 0; v < n; ++v)
            if (!in_tree[v] && dist[u][v] < best[v]) {
                best[v] = dist[u][v];
                parent[v] = static_cast<int>(u);
            }
    }
    const auto cut = static_cast<std::size_t>(std::max_element(weights.begin(), weights.end()) - weights.begin());
    std::vector<int> group(n, -1);
    group[0] = 0;
    // Flood the tree from component 0 without crossing the cut edge.
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t e = 0; e < edges.size(); ++e) {
            if (e == cut) continue;
            auto [a, b] = edges[e];
            if (group[static_cast<std::size_t>(a)] == 0 && group[static_cast<std::size_t>(b)] < 0) {
                group[static_cast<std::size_t>(b)] = 0;
                changed = true;
            } else if (group[static_cast<std::size_t>(b)] == 0 && group[static_cast<std::size_t>(a)] < 0) {
                group[static_cast<std::size_t>(a)] = 0;
                changed = true;
            }
        }
    }
    out.clusters.assign(2, DomainMask(mask.grid()));
    out.cores.assign(2, DomainMask(mask.grid()));
    std::array<int, 2> core_index{-1, -1};
    for (std::size_t i = 0; i < n; ++i) {
        const int k = group[i] == 0 ? 0 : 1;
        out.clusters[static_cast<std::size_t>(k)] = out.clusters[static_cast<std::size_t>(k)].unite(comps[i]);
        int& ci = core_index[static_cast<std::size_t>(k)];
        if (ci < 0 || comps[i].count() > comps[static_cast<std::size_t>(ci)].count()) ci = static_cast<int>(i);
    }
    for (int k = 0; k < 2; ++k)
        out.cores[static_cast<std::size_t>(k)] = comps[static_cast<std::size_t>(core_index[static_cast<std::size_t>(k)])];
    out.separation = mask_separation(out.clusters[0], out.clusters[1]);
    out.debris_volume = mask.volume() - out.cores[0].volume() - out.cores[1].volume();
    return out;
}

// ---------------------------------------------------------------------------
// Two balls

std::vector<TwoBallRow> two_ball_experiment(const StiffnessOperator& base, double total_volume,
                                            std::span<const double> distances, const SolverOptions& options) {
    const Grid& g = base.grid();
    if (!(total_volume > 0.0)) throw ParameterError("total_volume", "must be positive");
    const double half = 0.5 * total_volume;
    const long half_cells = std::llround(half / g.cell_volume());
    if (half_cells < 1) throw ParameterError("total_volume", "each ball needs at least one cell");
    const double radius = g.dim() == 1 ? 0.5 * half : std::sqrt(half / M_PI);
    const double max_d = 2.0 * (g.half_width() - g.h() - 2.0 * radius);

    const DomainMask half_ball = ball_mask(g, Point{0.0, 0.0}, half);
    const double lambda_half = eigenpairs(restrict_to(base, half_ball), 1, options).eigenvalues.front();

    std::vector<TwoBallRow> rows;
    for (double d : distances) {
        if (!(d > 0.0)) throw ParameterError("distances", fmt::format("d = {} overlaps; minimum feasible d is {}", d, g.h()));
        if (d > max_d)
            throw ParameterError("distances", fmt::format("d = {} leaves the box; maximum feasible d is {}", d, max_d));
        const double offset = 0.5 * d + radius;
        const DomainMask left = ball_mask(g, Point{-offset, 0.0}, half);
        const DomainMask right = ball_mask(g, Point{offset, 0.0}, half);
        if (!left.intersect(right).empty())
            throw ParameterError("distances", fmt::format("d = {} overlaps; minimum feasible d is {}", d, g.h()));
        const Spectrum sp = eigenpairs(restrict_to(base, left.unite(right)), 2, options);
        rows.push_back(TwoBallRow{d, sp.eigenvalues[0], sp.eigenvalues[1], lambda_half, sp.eigenvalues[1] - lambda_half});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Annealing

namespace {

std::vector<int> checkpoint_iterations(int iterations, int checkpoints) {
    std::vector<int> out{0};
    if (iterations == 0) return out;
    const int n = std::max(1, checkpoints);
    for (int i = 1; i <= n; ++i) {
        const int it = static_cast<int>((static_cast<long long>(i) * iterations) / n);
        if (it > out.back()) out.push_back(it);
    }
    return out;
}

}  // namespace

ShapeTrajectory make_trajectory(const StiffnessOperator& base, std::vector<DomainMask> masks,
                                const SolverOptions& solver) {
    ShapeTrajectory t;
    const FunctionalSpec l1 = parse_functional("lambda1");
    for (auto& m : masks) {
        require_same_grid(base.grid(), m.grid());
        t.values.push_back(eval_functional(l1, base, m, solver));
        t.torsions.push_back(TorsionFunction{m, torsion_or_zero(base, m, solver), 0.0});
    }
    t.masks = std::move(masks);
    return t;
}

ShapeTrajectory minimize_shape(const FunctionalSpec& spec, const StiffnessOperator& base, double volume,
                               const AnnealOptions& o, const SolverOptions& solver) {
    const Grid& g = base.grid();
    const double cells_real = volume / g.cell_volume();
    const auto m = static_cast<int>(std::llround(cells_real));
    if (!(std::abs(cells_real - m) <= 1e-9 * std::max(1.0, cells_real)) || m < 2)
        throw ParameterError("c", "volume must be an integer number >= 2 of cells");
    if (m >= g.cell_count()) throw ParameterError("c", "volume must leave at least one exterior cell");
    if (m < spec.k) throw ParameterError("c", "volume has fewer cells than eigenvalues consumed");
    if (o.iterations < 0) throw ParameterError("iterations", "must be nonnegative");
    if (!(o.cooling > 0.0 && o.cooling <= 1.0)) throw ParameterError("cooling", "must lie in (0, 1]");
    if (!(o.adjacent_fraction >= 0.0 && o.adjacent_fraction <= 1.0))
        throw ParameterError("adjacent_fraction", "must lie in [0, 1]");

    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };

    std::vector<int> all(static_cast<std::size_t>(g.cell_count()));
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t i = all.size() - 1; i > 0; --i) std::swap(all[i], all[pick(i + 1)]);
    DomainMask current(g);
    for (int i = 0; i < m; ++i) current.set(all[static_cast<std::size_t>(i)]);

    double j_cur = eval_functional(spec, base, current, solver);
    const double t0 = o.initial_temperature >= 0.0 ? o.initial_temperature : std::abs(j_cur) / 10.0;
    DomainMask best = current;
    double j_best = j_cur;

    ShapeTrajectory traj;
    traj.seed = o.seed;
    const std::vector<int> marks = checkpoint_iterations(o.iterations, o.checkpoints);
    std::size_t next_mark = 0;
    auto record = [&] {
        traj.masks.push_back(best);
        traj.values.push_back(j_best);
    };
    record();
    ++next_mark;

    std::vector<int> boundary, adjacent, exterior;
    double temperature = t0;
    for (int it = 1; it <= o.iterations; ++it) {
        boundary.clear();
        adjacent.clear();
        exterior.clear();
        for (int c = 0; c < g.cell_count(); ++c) {
            if (current.contains(c)) {
                if (on_boundary(current, c)) boundary.push_back(c);
            } else {
                exterior.push_back(c);
                bool touches = false;
                for_each_neighbour(g, c, [&](int n) { touches = touches || current.contains(n); });
                if (touches) adjacent.push_back(c);
            }
        }
        const int removed = boundary[pick(boundary.size())];
        const bool near = !adjacent.empty() && unit(rng) < o.adjacent_fraction;
        const int added = near ? adjacent[pick(adjacent.size())] : exterior[pick(exterior.size())];

        DomainMask trial = current;
        trial.set(removed, false);
        trial.set(added, true);
        const double j_new = eval_functional(spec, base, trial, solver);
        const double delta = j_new - j_cur;
        const double u = unit(rng);
        const bool accept = delta < 0.0 || (temperature > 0.0 && std::isfinite(delta) && u < std::exp(-delta / temperature));
        if (accept) {
            current = std::move(trial);
            j_cur = j_new;
            traj.move_log.push_back(Move{it, removed, added, j_new});
            if (j_cur < j_best) {
                j_best = j_cur;
                best = current;
            }
        }
        temperature *= o.cooling;
        if (next_mark < marks.size() && it == marks[next_mark]) {
            record();
            ++next_mark;
        }
    }
    for (const auto& mask : traj.masks)
        traj.torsions.push_back(TorsionFunction{mask, torsion_or_zero(base, mask, solver), 0.0});
    return traj;
}

// ---------------------------------------------------------------------------
// Trajectory diagnostics

namespace {

int tail_start(std::size_t n, double fraction) {
    const auto len = std::max<std::size_t>(
        std::min<std::size_t>(2, n), static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n))));
    return static_cast<int>(n - std::min(len, n));
}

std::vector<GridFunction> trajectory_torsions(const ShapeTrajectory& traj, const StiffnessOperator* base,
                                              const SolverOptions& solver) {
    std::vector<GridFunction> out;
    if (traj.torsions.size() == traj.masks.size()) {
        for (const auto& t : traj.torsions) out.push_back(t.values);
        return out;
    }
    if (base == nullptr) throw PreconditionError("trajectory carries no torsion functions");
    for (const auto& m : traj.masks) out.push_back(torsion_or_zero(*base, m, solver));
    return out;
}

// Shifts w by whole cells so that its weighted centroid lands on `target`.
std::optional<GridFunction> recenter(const GridFunction& w, const std::array<double, 2>& target) {
    const Grid& g = w.grid;
    double total = 0.0;
    std::array<double, 2> c{0.0, 0.0};
    for (int i = 0; i < g.cell_count(); ++i) {
        const Shift k = g.coords(i);
        total += w.values(i);
        c[0] += w.values(i) * k[0];
        c[1] += w.values(i) * k[1];
    }
    if (total <= 0.0) return w;
    const Shift z{static_cast<int>(std::lround(target[0] - c[0] / total)),
                  static_cast<int>(std::lround(target[1] - c[1] / total))};
    GridFunction out(g);
    for (int i = 0; i < g.cell_count(); ++i) {
        if (w.values(i) == 0.0) continue;
        const Shift k = g.coords(i);
        const Shift n{k[0] + z[0], k[1] + z[1]};
        if (!g.in_range(n)) return std::nullopt;
        out.values(g.index(n)) = w.values(i);
    }
    return out;
}

std::array<double, 2> centroid(const GridFunction& w) {
    const Grid& g = w.grid;
    double total = 0.0;
    std::array<double, 2> c{0.0, 0.0};
    for (int i = 0; i < g.cell_count(); ++i) {
        const Shift k = g.coords(i);
        total += w.values(i);
        c[0] += w.values(i) * k[0];
        c[1] += w.values(i) * k[1];
    }
    if (total > 0.0) {
        c[0] /= total;
        c[1] /= total;
    }
    return c;
}

}  // namespace

DichotomyReport detect_dichotomy(const ShapeTrajectory& traj, const StiffnessOperator& base,
                                 const DichotomyOptions& o, const SolverOptions& solver) {
    if (traj.masks.empty()) throw ParameterError("trajectory", "must be nonempty");
    DichotomyReport rep;
    const std::size_t n = traj.masks.size();
    rep.tail_begin = tail_start(n, o.tail_fraction);
    const auto tb = static_cast<std::size_t>(rep.tail_begin);

    bool split = true;
    std::vector<DomainMask> first, second;
    for (std::size_t k = tb; k < n; ++k) {
        const DomainMask& mask = traj.masks[k];
        require_same_grid(base.grid(), mask.grid());
        const ClusterSplit cs = split_clusters(mask);
        if (cs.clusters.size() != 2) {
            split = false;
            rep.notes.push_back(fmt::format("entry {} has fewer than two clusters", k));
            break;
        }
        rep.separations.push_back(cs.separation);
        rep.component_volumes.emplace_back(cs.clusters[0].volume(), cs.clusters[1].volume());
        first.push_back(cs.clusters[0]);
        second.push_back(cs.clusters[1]);
        const DomainMask core = cs.cores[0].unite(cs.cores[1]);
        const DirichletOperator full = restrict_to(base, mask);
        const double norm = resolvent_norm(full, solver);
        const double gap = core == mask ? 0.0 : resolvent_norm_diff(full, restrict_to(base, core), solver);
        rep.resolvent_norm.push_back(norm);
        rep.resolvent_gap.push_back(gap);
        const double vol = mask.volume();
        if (cs.debris_volume > o.debris_fraction * vol) {
            split = false;
            rep.notes.push_back(fmt::format("entry {} carries more than {} debris", k, o.debris_fraction));
        }
        if (std::min(cs.clusters[0].volume(), cs.clusters[1].volume()) < o.volume_floor * vol) {
            split = false;
            rep.notes.push_back(fmt::format("entry {} has a cluster below the volume floor", k));
        }
        if (gap > o.resolvent_fraction * norm) {
            split = false;
            rep.notes.push_back(fmt::format("entry {} has a large resolvent gap", k));
        }
    }
    if (split) {
        for (std::size_t k = 1; k < rep.separations.size(); ++k)
            if (!(rep.separations[k] > rep.separations[k - 1])) {
                split = false;
                rep.notes.push_back("separations are not strictly increasing along the tail");
                break;
            }
    }
    if (split && rep.separations.size() >= 2) {
        rep.verdict = Verdict::dichotomy;
        rep.components = std::make_pair(std::move(first), std::move(second));
        return rep;
    }

    const std::vector<GridFunction> w = trajectory_torsions(traj, &base, solver);
    const auto target = centroid(w[tb]);
    std::vector<GridFunction> centred;
    double scale = 0.0;
    bool cauchy = true;
    for (std::size_t k = tb; k < n && cauchy; ++k) {
        auto r = recenter(w[k], target);
        if (!r) {
            cauchy = false;
            rep.notes.push_back(fmt::format("entry {} cannot be recentred inside the box", k));
            break;
        }
        scale = std::max(scale, r->l2_norm());
        centred.push_back(std::move(*r));
    }
    if (cauchy) {
        for (std::size_t a = 0; a < centred.size() && cauchy; ++a)
            for (std::size_t b = a + 1; b < centred.size(); ++b) {
                const double d = GridFunction(base.grid(), centred[a].values - centred[b].values).l2_norm();
                if (d >= o.cauchy_fraction * scale && d > 0.0) {
                    cauchy = false;
                    break;
                }
            }
    }
    rep.verdict = cauchy ? Verdict::compactness : Verdict::inconclusive;
    if (!cauchy) rep.notes.push_back("recentred tail torsions are not Cauchy");
    return rep;
}

SemicontinuityReport volume_semicontinuity_check(const ShapeTrajectory& traj, double tail_fraction, double tolerance) {
    if (traj.masks.empty()) throw ParameterError("trajectory", "must be nonempty");
    const std::vector<GridFunction> w = trajectory_torsions(traj, nullptr, {});
    const std::size_t n = traj.masks.size();
    const auto tb = static_cast<std::size_t>(tail_start(n, tail_fraction));
    SemicontinuityReport rep;
    double scale = 0.0;
    rep.min_tail_volume = kInfinity;
    for (std::size_t k = tb; k < n; ++k) {
        scale = std::max(scale, w[k].l2_norm());
        rep.min_tail_volume = std::min(rep.min_tail_volume, traj.masks[k].volume());
        for (std::size_t j = tb; j < k; ++j)
            rep.max_tail_distance =
                std::max(rep.max_tail_distance, GridFunction(w[k].grid, w[k].values - w[j].values).l2_norm());
    }
    if (rep.max_tail_distance > tolerance * scale)
        throw PreconditionError(fmt::format("tail torsions do not converge: distance {} exceeds {}",
                                            rep.max_tail_distance, tolerance * scale));
    const GridFunction& last = w.back();
    const double peak = last.values.size() > 0 ? last.values.maxCoeff() : 0.0;
    rep.threshold = 1e-8 * peak;
    int cells = 0;
    if (peak > 0.0)
        for (int i = 0; i < last.values.size(); ++i) cells += last.values(i) > rep.threshold ? 1 : 0;
    rep.limit_volume = cells * last.grid.cell_volume();
    rep.holds = rep.limit_volume <= rep.min_tail_volume + last.grid.cell_volume();
    return rep;
}

}  // namespace fracshape
