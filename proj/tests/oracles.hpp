// Independent reference computations used by the tests. Nothing here calls
// into the library's numerical kernels.
#ifndef FRACSHAPE_TESTS_ORACLES_HPP
#define FRACSHAPE_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include "fracshape/grid.hpp"

namespace oracle {

inline std::vector<std::array<double, 2>> centres(int dim, double half_width, int resolution) {
    const double h = 2.0 * half_width / resolution;
    std::vector<std::array<double, 2>> out;
    if (dim == 1) {
        for (int i = 0; i < resolution; ++i) out.push_back({-half_width + (i + 0.5) * h, 0.0});
    } else {
        for (int y = 0; y < resolution; ++y)
            for (int x = 0; x < resolution; ++x)
                out.push_back({-half_width + (x + 0.5) * h, -half_width + (y + 0.5) * h});
    }
    return out;
}

/// sum_{i<j} h^{2N} (u_i - u_j)^2 / |x_i - x_j|^{N+2s}, as a plain double loop.
inline double pair_energy(int dim, double half_width, int resolution, double s, const Eigen::VectorXd& u) {
    const auto x = centres(dim, half_width, resolution);
    const double h = 2.0 * half_width / resolution;
    const double w = std::pow(h, 2 * dim);
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const double dx = x[i][0] - x[j][0], dy = x[i][1] - x[j][1];
            const double r = std::sqrt(dx * dx + dy * dy);
            const double d = u(static_cast<Eigen::Index>(i)) - u(static_cast<Eigen::Index>(j));
            acc += w * d * d / std::pow(r, dim + 2.0 * s);
        }
    return acc;
}

/// C_{s,N} = s 4^s Gamma((N+2s)/2) / (pi^{N/2} Gamma(1-s)).
inline double c_norm_closed_form(double s, int dim) {
    return s * std::pow(4.0, s) * std::tgamma(0.5 * (dim + 2.0 * s)) /
           (std::pow(M_PI, 0.5 * dim) * std::tgamma(1.0 - s));
}

/// 1 / (2 pi \int_0^inf (1 - J0(r)) r^{-1-2s} dr), the polar form for N = 2:
/// the angular integral of 1 - cos(r cos theta) is 2 pi (1 - J0(r)).
inline double c_norm_polar_j0(double s) {
    using boost::math::cyl_bessel_j;
    boost::math::quadrature::tanh_sinh<double> ts;
    const double near = ts.integrate(
        [s](double r) {
            if (r <= 0.0) return 0.0;
            if (r < 1e-3) return (0.25 - r * r / 64.0) * std::pow(r, 1.0 - 2.0 * s);
            return (1.0 - cyl_bessel_j(0, r)) * std::pow(r, -1.0 - 2.0 * s);
        },
        0.0, 1.0);
    // Oscillatory part between consecutive zeros of J0, summed with repeated averaging.
    auto j0w = [s](double r) { return cyl_bessel_j(0, r) * std::pow(r, -1.0 - 2.0 * s); };
    const int terms = 80;
    std::vector<double> partial;
    double a = 1.0, acc = 0.0;
    for (int k = 1; k <= terms; ++k) {
        const double b = boost::math::cyl_bessel_j_zero(0.0, k);
        acc += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(j0w, a, b, 10, 1e-14);
        partial.push_back(acc);
        a = b;
    }
    std::vector<double> v(partial.end() - 40, partial.end());
    while (v.size() > 1) {
        std::vector<double> next;
        for (std::size_t i = 0; i + 1 < v.size(); ++i) next.push_back(0.5 * (v[i] + v[i + 1]));
        v = std::move(next);
    }
    const double integral = near + 1.0 / (2.0 * s) - v.front();
    return 1.0 / (2.0 * M_PI * integral);
}

/// Exterior kernel integral for the interval [-a, a].
inline double exterior_1d(double a, double x, double s) {
    return (std::pow(a - x, -2.0 * s) + std::pow(a + x, -2.0 * s)) / (2.0 * s);
}

/// Exterior kernel integral for the square [-a, a]^2 by composite Simpson
/// over the angle of r_b(theta)^{-2s} / (2s), r_b the distance to the boundary.
inline double exterior_2d(double a, double x, double y, double s, int panels = 400000) {
    auto rb = [&](double t) {
        const double c = std::cos(t), sn = std::sin(t);
        double r = 1e300;
        if (c > 0) r = std::min(r, (a - x) / c);
        if (c < 0) r = std::min(r, (-a - x) / c);
        if (sn > 0) r = std::min(r, (a - y) / sn);
        if (sn < 0) r = std::min(r, (-a - y) / sn);
        return std::pow(r, -2.0 * s) / (2.0 * s);
    };
    const double h = 2.0 * M_PI / panels;
    double acc = rb(0.0) + rb(2.0 * M_PI);
    for (int i = 1; i < panels; ++i) acc += (i % 2 ? 4.0 : 2.0) * rb(i * h);
    return acc * h / 3.0;
}

/// Dense generalized eigenvalues of the principal submatrix on `cells`, divided by h^N.
inline Eigen::VectorXd dense_eigenvalues(const Eigen::MatrixXd& a, const std::vector<int>& cells, double cell_volume) {
    const auto n = static_cast<Eigen::Index>(cells.size());
    Eigen::MatrixXd sub(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) sub(i, j) = a(cells[static_cast<std::size_t>(i)], cells[static_cast<std::size_t>(j)]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub);
    return es.eigenvalues() / cell_volume;
}

/// Dense solve of the principal submatrix system A w = h^N 1 on `cells`, embedded in the grid.
inline Eigen::VectorXd dense_torsion(const Eigen::MatrixXd& a, const std::vector<int>& cells, double cell_volume) {
    const auto n = static_cast<Eigen::Index>(cells.size());
    Eigen::MatrixXd sub(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) sub(i, j) = a(cells[static_cast<std::size_t>(i)], cells[static_cast<std::size_t>(j)]);
    const Eigen::VectorXd x = sub.ldlt().solve(Eigen::VectorXd::Constant(n, cell_volume));
    Eigen::VectorXd out = Eigen::VectorXd::Zero(a.rows());
    for (Eigen::Index i = 0; i < n; ++i) out(cells[static_cast<std::size_t>(i)]) = x(i);
    return out;
}

/// Random mask with each cell set with probability p, at least `min_cells` set.
inline fracshape::DomainMask random_mask(const fracshape::Grid& g, std::mt19937_64& rng, double p, int min_cells) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    fracshape::DomainMask m(g);
    while (m.count() < min_cells)
        for (int i = 0; i < g.cell_count(); ++i)
            if (unit(rng) < p) m.set(i);
    return m;
}

/// Removes a random number (at least one) of cells, keeping at least `keep`.
inline fracshape::DomainMask random_submask(const fracshape::DomainMask& outer, std::mt19937_64& rng, int keep) {
    std::vector<int> cells = outer.indices();
    std::shuffle(cells.begin(), cells.end(), rng);
    const int removable = static_cast<int>(cells.size()) - keep;
    const int remove = std::uniform_int_distribution<int>(1, std::max(1, removable))(rng);
    fracshape::DomainMask inner = outer;
    for (int i = 0; i < std::min(remove, removable); ++i) inner.set(cells[static_cast<std::size_t>(i)], false);
    return inner;
}

/// Gaussian exp(-|x - c|^2 / (2 w^2)) sampled at cell centres.
inline Eigen::VectorXd gaussian(const fracshape::Grid& g, double cx, double cy, double width) {
    Eigen::VectorXd u(g.cell_count());
    for (int i = 0; i < g.cell_count(); ++i) {
        const auto p = g.center(i);
        const double dx = p[0] - cx, dy = g.dim() == 2 ? p[1] - cy : 0.0;
        u(i) = std::exp(-0.5 * (dx * dx + dy * dy) / (width * width));
    }
    return u;
}

/// Smallest lambda_1 over all contiguous intervals of `len` cells of a 1D operator.
inline double best_interval_lambda1(const Eigen::MatrixXd& a, int cells, int len, double cell_volume) {
    double best = 1e300;
    for (int start = 0; start + len <= cells; ++start) {
        std::vector<int> idx(static_cast<std::size_t>(len));
        for (int k = 0; k < len; ++k) idx[static_cast<std::size_t>(k)] = start + k;
        best = std::min(best, dense_eigenvalues(a, idx, cell_volume)(0));
    }
    return best;
}

}  // namespace oracle

#endif
