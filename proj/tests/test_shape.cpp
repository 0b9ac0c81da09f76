#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "fracshape/errors.hpp"
#include "fracshape/shape.hpp"
#include "oracles.hpp"

using namespace fracshape;

namespace {

DomainMask interval(const Grid& g, int start, int len) {
    DomainMask m(g);
    for (int i = start; i < start + len; ++i) m.set(i);
    return m;
}

std::string field_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const ParameterError& e) {
        return e.field();
    }
    return "";
}

}  // namespace

TEST_CASE("functional parsing and evaluation") {
    const std::vector<double> lam{1.0, 2.0, 5.0};
    CHECK(parse_functional("lambda2").evaluate(lam) == 2.0);
    CHECK(parse_functional("λ3").evaluate(lam) == 5.0);
    CHECK(parse_functional("2*lambda1 + lambda3").evaluate(lam) == 7.0);
    CHECK(parse_functional("max(lambda1, 3)").evaluate(lam) == 3.0);
    CHECK(parse_functional("max(lambda1, 0.5*(lambda2 + lambda3))").evaluate(lam) == 3.5);
    CHECK(parse_functional("lambda1 + lambda3").k == 3);
    const std::vector<double> inf{1.0, kInfinity};
    CHECK(std::isinf(parse_functional("lambda2").evaluate(inf)));
    for (const char* bad : {"", "lambda0", "-1*lambda1", "lambda1 +", "max(lambda1", "3", "lambda1 * lambda2", "foo"})
        CHECK_MESSAGE(field_of([&] { parse_functional(bad); }) == "functional", bad);
    const FunctionalSpec spec = parse_functional("max(lambda1, 2*lambda2)");
    CHECK(parse_functional(spec.combiner.to_string()).evaluate(lam) == spec.evaluate(lam));
}

TEST_CASE("functionals are monotone under inclusion") {
    std::mt19937_64 rng(8);
    const Grid g = build_grid(1, 1.0, 40);
    const StiffnessOperator op = assemble_stiffness(g, 0.5);
    const FunctionalSpec spec = parse_functional("lambda1 + max(lambda2, 2*lambda1)");
    for (int rep = 0; rep < 6; ++rep) {
        const DomainMask a = oracle::random_mask(g, rng, 0.6, 10);
        const DomainMask b = oracle::random_submask(a, rng, 2);
        CHECK(eval_functional(spec, op, b) >= eval_functional(spec, op, a) * (1.0 - 1e-9));
    }
    CHECK(std::isinf(eval_functional(spec, op, DomainMask(g))));
    CHECK(std::isinf(eval_functional(spec, op, DomainMask::from_indices(g, std::vector<int>{3}))));
}

TEST_CASE("gamma distance and empty masks") {
    const Grid g = build_grid(1, 1.0, 32);
    const StiffnessOperator op = assemble_stiffness(g, 0.5);
    const DomainMask a = interval(g, 4, 12);
    const GridFunction w = torsion_or_zero(op, a);
    CHECK(gamma_distance(op, a, DomainMask(g)) == doctest::Approx(w.l2_norm()).epsilon(1e-12));
    CHECK(gamma_distance(op, a, a) == 0.0);
    CHECK(torsion_or_zero(op, DomainMask(g)).values.norm() == 0.0);
}

TEST_CASE("ball masks") {
    const Grid g = build_grid(2, 1.0, 16);
    const DomainMask b = ball_mask(g, Point{0.0, 0.0}, 0.5);
    CHECK(b.count() == std::llround(0.5 / g.cell_volume()));
    CHECK(connected_components(b).size() == 1);
    CHECK(ball_mask(g, Point{0.0, 0.0}, 0.5) == b);
    CHECK(ball_mask(g, Point{0.0, 0.0}, 0.0).empty());
    CHECK(field_of([&] { ball_mask(g, Point{0.0, 0.0}, 5.0); }) == "volume");
    // Every selected cell is at least as close as every unselected one.
    double inside = 0.0, outside = 1e300;
    for (int i = 0; i < g.cell_count(); ++i) {
        const double r = distance(g.center(i), Point{0.0, 0.0}, 2);
        if (b.contains(i)) inside = std::max(inside, r);
        else outside = std::min(outside, r);
    }
    CHECK(inside <= outside);
}

TEST_CASE("components, separation and clusters") {
    const Grid g = build_grid(1, 4.0, 64);
    DomainMask m = interval(g, 2, 10).unite(interval(g, 14, 1)).unite(interval(g, 40, 10));
    const auto comps = connected_components(m);
    REQUIRE(comps.size() == 3);
    CHECK(comps[0].count() == 10);
    CHECK(mask_separation(comps[0], comps[2]) == doctest::Approx(29 * g.h()));
    CHECK(std::isinf(mask_separation(comps[0], DomainMask(g))));
    const ClusterSplit cs = split_clusters(m);
    REQUIRE(cs.clusters.size() == 2);
    CHECK(cs.clusters[0].count() == 11);
    CHECK(cs.cores[0].count() == 10);
    CHECK(cs.debris_volume == doctest::Approx(g.h()));
    CHECK(cs.separation == doctest::Approx(26 * g.h()));
    CHECK(split_clusters(interval(g, 3, 5)).clusters.size() == 1);

    const Grid g2 = build_grid(2, 1.0, 6);
    DomainMask diag(g2);
    diag.set(g2.index(Shift{1, 1}));
    diag.set(g2.index(Shift{2, 2}));
    CHECK(connected_components(diag).size() == 2);
}

TEST_CASE("two-ball experiment") {
    const Grid g = build_grid(1, 16.0, 256);
    const StiffnessOperator op = assemble_stiffness(g, 0.5);
    const std::vector<double> ds{2.0, 4.0, 8.0};
    const auto rows = two_ball_experiment(op, 8.0, ds);
    REQUIRE(rows.size() == 3);
    const DomainMask half = ball_mask(g, Point{0.0, 0.0}, 4.0);
    const double ref = oracle::dense_eigenvalues(op.matrix(), half.indices(), g.cell_volume())(0);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        CHECK(rows[k].lambda1_half_ball == doctest::Approx(ref).epsilon(1e-8));
        CHECK(rows[k].lambda2_union > rows[k].lambda1_union);
        CHECK(rows[k].gap == doctest::Approx(rows[k].lambda2_union - rows[k].lambda1_half_ball));
        if (k > 0) CHECK(std::abs(rows[k].gap) < std::abs(rows[k - 1].gap));
    }
    const std::vector<double> zero{0.0}, far{100.0};
    CHECK(field_of([&] { two_ball_experiment(op, 8.0, zero); }) == "distances");
    CHECK(field_of([&] { two_ball_experiment(op, 8.0, far); }) == "distances");
    CHECK(field_of([&] { two_ball_experiment(op, -1.0, ds); }) == "total_volume");
}

TEST_CASE("annealing keeps the volume and never worsens the best value") {
    const Grid g = build_grid(1, 4.0, 48);
    const StiffnessOperator op = assemble_stiffness(g, 0.5);
    const FunctionalSpec spec = parse_functional("lambda1");
    AnnealOptions o;
    o.iterations = 1500;
    o.seed = 3;
    const ShapeTrajectory t = minimize_shape(spec, op, 12 * g.h(), o);
    REQUIRE(!t.masks.empty());
    for (std::size_t k = 0; k < t.masks.size(); ++k) {
        CHECK(t.masks[k].count() == 12);
        if (k > 0) CHECK(t.values[k] <= t.values[k - 1]);
        CHECK(t.values[k] == doctest::Approx(eval_functional(spec, op, t.masks[k])).epsilon(1e-9));
    }
    CHECK(t.torsions.size() == t.masks.size());
    CHECK(t.seed == 3);
    // The best lambda_1 among 12-cell masks is an interval; the walk reaches it.
    const double best = oracle::best_interval_lambda1(op.matrix(), g.cell_count(), 12, g.cell_volume());
    CHECK(t.values.back() == doctest::Approx(best).epsilon(1e-6));

    const ShapeTrajectory again = minimize_shape(spec, op, 12 * g.h(), o);
    CHECK(again.masks == t.masks);
    CHECK(again.move_log.size() == t.move_log.size());

    CHECK(field_of([&] { minimize_shape(spec, op, 0.5 * g.h(), o); }) == "c");
    CHECK(field_of([&] { minimize_shape(spec, op, 48 * g.h(), o); }) == "c");
    AnnealOptions bad = o;
    bad.cooling = 1.5;
    CHECK(field_of([&] { minimize_shape(spec, op, 12 * g.h(), bad); }) == "cooling");
    bad = o;
    bad.adjacent_fraction = 2.0;
    CHECK(field_of([&] { minimize_shape(spec, op, 12 * g.h(), bad); }) == "adjacent_fraction");
    bad = o;
    bad.iterations = -1;
    CHECK(field_of([&] { minimize_shape(spec, op, 12 * g.h(), bad); }) == "iterations");
}

TEST_CASE("dichotomy detection on constructed trajectories") {
    const Grid g = build_grid(1, 8.0, 96);
    const StiffnessOperator op = assemble_stiffness(g, 0.5);

    std::vector<DomainMask> separating;
    for (int k = 0; k < 6; ++k) separating.push_back(interval(g, 40 - 2 * k, 6).unite(interval(g, 50 + 2 * k, 6)));
    const DichotomyReport d = detect_dichotomy(make_trajectory(op, separating), op);
    CHECK(d.verdict == Verdict::dichotomy);
    REQUIRE(d.components.has_value());
    CHECK(d.components->first.size() == d.separations.size());
    for (std::size_t k = 1; k < d.separations.size(); ++k) CHECK(d.separations[k] > d.separations[k - 1]);

    std::vector<DomainMask> translating;
    for (int k = 0; k < 6; ++k) translating.push_back(interval(g, 20 + 6 * k, 10));
    CHECK(detect_dichotomy(make_trajectory(op, translating), op).verdict == Verdict::compactness);

    std::vector<DomainMask> fixed_gap;
    for (int k = 0; k < 6; ++k) fixed_gap.push_back(interval(g, 30, 6).unite(interval(g, 40 + k % 2, 6)));
    CHECK(detect_dichotomy(make_trajectory(op, fixed_gap), op).verdict != Verdict::dichotomy);

    std::vector<DomainMask> growing;
    for (int k = 0; k < 6; ++k) growing.push_back(interval(g, 30, 4 + 4 * k));
    CHECK(detect_dichotomy(make_trajectory(op, growing), op).verdict == Verdict::inconclusive);
    CHECK_THROWS_AS(detect_dichotomy(ShapeTrajectory{}, op), ParameterError);
}

TEST_CASE("volume semicontinuity") {
    const Grid g = build_grid(1, 4.0, 48);
    const StiffnessOperator op = assemble_stiffness(g, 0.5);
    std::vector<DomainMask> same(6, interval(g, 18, 12));
    const SemicontinuityReport r = volume_semicontinuity_check(make_trajectory(op, same));
    CHECK(r.holds);
    CHECK(r.limit_volume == doctest::Approx(12 * g.h()));
    CHECK(r.max_tail_distance == 0.0);
    std::vector<DomainMask> moving;
    for (int k = 0; k < 6; ++k) moving.push_back(interval(g, 4 + 6 * k, 8));
    CHECK_THROWS_AS(volume_semicontinuity_check(make_trajectory(op, moving)), PreconditionError);
}
