#include <doctest.h>

#include <cmath>
#include <random>

#include "fracshape/concentration.hpp"
#include "fracshape/errors.hpp"
#include "fracshape/solvers.hpp"
#include "oracles.hpp"

using namespace fracshape;

namespace {

double brute_profile(const GridFunction& u, double r) {
    const Grid& g = u.grid;
    double best = 0.0;
    for (int c = 0; c < g.cell_count(); ++c) {
        double acc = 0.0;
        for (int i = 0; i < g.cell_count(); ++i)
            if (g.distance(c, i) <= r * (1.0 + 1e-12)) acc += g.cell_volume() * u.values(i) * u.values(i);
        best = std::max(best, acc);
    }
    return best;
}

// Half of sum over ordered pairs of w_i k_ij (u_i - u_j)^2, plus the weighted tail.
double weighted_oracle(int dim, double hw, int res, double s, const Eigen::VectorXd& u, const Eigen::VectorXd& w,
                       const Eigen::VectorXd& tail, double ext) {
    const auto x = oracle::centres(dim, hw, res);
    const double h = 2.0 * hw / res;
    const double hp = std::pow(h, 2 * dim);
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = 0; j < x.size(); ++j) {
            if (i == j) continue;
            const double dx = x[i][0] - x[j][0], dy = x[i][1] - x[j][1];
            const double r = std::sqrt(dx * dx + dy * dy);
            const double d = u(i) - u(j);
            acc += 0.5 * w(i) * hp * d * d / std::pow(r, dim + 2.0 * s);
        }
        acc += 0.5 * (w(i) + ext) * tail(i) * u(i) * u(i);
    }
    return acc;
}

}  // namespace

TEST_CASE("concentration profile against brute force") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> normal;
    for (const Grid& g : {build_grid(1, 2.0, 40), build_grid(2, 1.0, 10)}) {
        GridFunction u(g);
        for (int i = 0; i < g.cell_count(); ++i) u.values(i) = normal(rng);
        const std::vector<double> radii{1e-9, 0.1, 0.25, 0.5, 1.0, 3.0};
        const ConcentrationProfile p = concentration_profile_detail(u, radii);
        for (std::size_t j = 0; j < radii.size(); ++j) {
            CHECK(p.mass[j] == doctest::Approx(brute_profile(u, radii[j])).epsilon(1e-12));
            if (j > 0) CHECK(p.mass[j] >= p.mass[j - 1]);
        }
        CHECK(p.mass.back() == doctest::Approx(u.mass()).epsilon(1e-12));
        CHECK(concentration_profile(u, radii) == p.mass);
    }
}

TEST_CASE("concentration profile finds the peak centre") {
    const Grid g = build_grid(1, 4.0, 64);
    const GridFunction u(g, oracle::gaussian(g, 1.0625, 0.0, 0.2));
    const std::vector<double> radii{1e-9};
    const ConcentrationProfile p = concentration_profile_detail(u, radii);
    CHECK(g.center(p.center_cell[0])[0] == doctest::Approx(1.0625));
    const std::vector<double> bad{0.0};
    CHECK_THROWS_AS(concentration_profile(u, bad), ParameterError);
}

TEST_CASE("sequence validation") {
    std::vector<GridFunction> few;
    for (int i = 0; i < 5; ++i) few.emplace_back(build_grid(1, 1.0, 8), Eigen::VectorXd::Ones(8));
    CHECK_THROWS_AS(make_sequence(few), ParameterError);

    std::vector<GridFunction> odd;
    for (int i = 0; i < 8; ++i) odd.emplace_back(build_grid(1, 1.0 + 0.25 * i, 8 + 2 * i), Eigen::VectorXd::Ones(8 + 2 * i));
    odd[3] = GridFunction(build_grid(1, 1.125, 9), Eigen::VectorXd::Ones(9));
    CHECK_THROWS_AS(make_sequence(odd), StructuralError);

    std::vector<GridFunction> good;
    for (int i = 0; i < 9; ++i) good.emplace_back(build_grid(1, 1.0 + 0.25 * i, 8 + 2 * i), Eigen::VectorXd::Ones(8 + 2 * i));
    for (auto& e : good) e.values /= std::sqrt(e.mass());
    CHECK(make_sequence(good).mass_limit == doctest::Approx(1.0));
    good.back().values *= 2.0;
    CHECK_THROWS_AS(make_sequence(good), ParameterError);
}

TEST_CASE("generated families are classified as designed") {
    const std::pair<SequenceFamily, Verdict> cases[] = {
        {SequenceFamily::translating_bump, Verdict::compactness},
        {SequenceFamily::flattening_bump, Verdict::vanishing},
        {SequenceFamily::separating_pair, Verdict::dichotomy},
    };
    for (const auto& [family, expected] : cases) {
        for (std::uint64_t seed : {1u, 7u, 19u}) {
            GeneratorOptions o;
            o.seed = seed;
            if (family == SequenceFamily::separating_pair) o.bump_mass = 0.4;
            const FunctionSequence seq = generate_sequence(family, o);
            const TrichotomyReport r = classify(seq, 0.1 * seq.mass_limit);
            CHECK_MESSAGE(r.verdict == expected, to_string(family), " seed ", seed);
            if (expected == Verdict::dichotomy) {
                REQUIRE(r.alpha.has_value());
                CHECK(std::abs(*r.alpha - 0.4) <= 0.1 * seq.mass_limit);
            }
            if (expected == Verdict::compactness) CHECK(r.centers.size() == static_cast<std::size_t>(seq.entries.size() - r.tail_begin));
        }
    }
}

TEST_CASE("classify is deterministic") {
    GeneratorOptions o;
    o.seed = 4;
    const FunctionSequence a = generate_sequence(SequenceFamily::translating_bump, o);
    const FunctionSequence b = generate_sequence(SequenceFamily::translating_bump, o);
    REQUIRE(a.entries.size() == b.entries.size());
    for (std::size_t k = 0; k < a.entries.size(); ++k) CHECK(a.entries[k].values == b.entries[k].values);
    CHECK(classify(a, 0.1).profiles == classify(b, 0.1).profiles);
    CHECK_THROWS_AS(sequence_family_from_string("wandering"), ParameterError);
    CHECK(sequence_family_from_string(to_string(SequenceFamily::separating_pair)) == SequenceFamily::separating_pair);
}

TEST_CASE("cut-off functions") {
    const Cutoffs c = make_cutoffs(2.0);
    CHECK(c.phi(0.0) == 1.0);
    CHECK(c.phi(2.0) == 1.0);
    CHECK(c.phi(4.0) == 0.0);
    CHECK(c.phi(3.0) == doctest::Approx(0.5));
    for (double r = 0.0; r <= 5.0; r += 0.05) {
        CHECK(c.phi(r) * c.phi(r) + c.psi(r) * c.psi(r) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(c.phi(r) >= c.phi(r + 0.05));
    }
    CHECK_THROWS_AS(make_cutoffs(0.0), ParameterError);
}

TEST_CASE("weighted form against an ordered-pair loop") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (const auto& [dim, res] : {std::pair{1, 24}, std::pair{2, 7}}) {
        const Grid g = build_grid(dim, 1.0, res);
        const StiffnessOperator op = assemble_stiffness(g, 0.4);
        Eigen::VectorXd u(g.cell_count()), w(g.cell_count());
        for (int i = 0; i < g.cell_count(); ++i) {
            u(i) = unit(rng) - 0.5;
            w(i) = unit(rng);
        }
        const GridFunction f(g, u);
        for (double ext : {0.0, 1.0}) {
            const double ref = weighted_oracle(dim, 1.0, res, 0.4, u, w, op.tail(), ext);
            CHECK(weighted_form(op, f, w, ext) == doctest::Approx(ref).epsilon(1e-12));
        }
        CHECK(weighted_form(op, f, Eigen::VectorXd::Ones(g.cell_count()), 1.0) ==
              doctest::Approx(gagliardo_sq(op, f)).epsilon(1e-12));
    }
}

TEST_CASE("cut-off defect decays with the radius") {
    const Grid g = build_grid(1, 32.0, 512);
    const StiffnessOperator op = assemble_stiffness(g, 0.5);
    const GridFunction u(g, oracle::gaussian(g, 0.0, 0.0, 1.0));
    double prev = 1e300;
    for (double r : {2.0, 4.0, 8.0}) {
        const double d = cutoff_defect(op, u, Point{0.0, 0.0}, r);
        CHECK(d < prev);
        CHECK(d >= 0.0);
        prev = d;
    }
    CHECK_THROWS_AS(cutoff_defect(op, u, Point{0.0, 0.0}, 16.5), ParameterError);
    CHECK_THROWS_AS(cutoff_defect(op, u, Point{0.0, 0.0}, -1.0), ParameterError);
}

TEST_CASE("dichotomy split") {
    const Grid g = build_grid(1, 24.0, 384);
    const StiffnessOperator op = assemble_stiffness(g, 0.5);
    const GridFunction u(g, oracle::gaussian(g, -8.0, 0.0, 0.7) + oracle::gaussian(g, 8.0, 0.0, 0.7));
    const SplitPair sp = dichotomy_split(op, u, Point{-8.0, 0.0}, 2.0, 6.0);
    CHECK(sp.nominal_gap == doctest::Approx(2.0));
    CHECK(sp.support_gap >= sp.nominal_gap - g.h());
    CHECK(sp.mass_residual <= sp.annulus_mass + 1e-15);
    CHECK(sp.bound_holds);
    CHECK(sp.v.mass() == doctest::Approx(0.5 * u.mass()).epsilon(1e-3));
    CHECK_THROWS_AS(dichotomy_split(op, u, Point{-8.0, 0.0}, 0.0, 1.0), ParameterError);
    try {
        dichotomy_split(op, u, Point{-8.0, 0.0}, 2.0, 3.0);
        CHECK(false);
    } catch (const ParameterError& e) {
        CHECK(e.field() == "R2");
    }
}

TEST_CASE("Lieb translation search") {
    const Grid g = build_grid(1, 2.0, 32);
    const StiffnessOperator op = assemble_stiffness(g, 0.5);
    std::vector<int> ia, ib;
    for (int i = 2; i < 8; ++i) ia.push_back(i);
    for (int i = 20; i < 28; ++i) ib.push_back(i);
    const DomainMask a = DomainMask::from_indices(g, ia), b = DomainMask::from_indices(g, ib);
    const LiebResult r = lieb_translation_search(op, a, b);
    CHECK(r.satisfied);
    CHECK(r.z[0] != 0);
    const DomainMask inter = a.translated(r.z).intersect(b);
    REQUIRE(!inter.empty());
    const double l1 = eigenpairs(restrict_to(op, inter), 1).eigenvalues[0];
    CHECK(r.lambda1_intersection == doctest::Approx(l1).epsilon(1e-8));
    const double la = eigenpairs(restrict_to(op, a), 1).eigenvalues[0];
    const double lb = eigenpairs(restrict_to(op, b), 1).eigenvalues[0];
    CHECK(r.bound == doctest::Approx(2.0 * (la + lb)).epsilon(1e-8));
    CHECK(r.lambda1_intersection <= r.bound);
    // The first qualifying shift in the scan order is the smallest |z|.
    for (int z = 0; z < std::abs(r.z[0]); ++z)
        for (int sgn : {-1, 1}) {
            bool ok = false;
            const DomainMask t = a.translated(Shift{sgn * z, 0}, &ok);
            if (!ok || t.intersect(b).empty()) continue;
            CHECK(eigenpairs(restrict_to(op, t.intersect(b)), 1).eigenvalues[0] > r.bound);
        }
    CHECK_THROWS_AS(lieb_translation_search(op, DomainMask(g), b), DomainEmptyError);
}
