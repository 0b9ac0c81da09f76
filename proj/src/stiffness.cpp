#include "fracshape/stiffness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/zeta.hpp>
#include <fftw3.h>

#include "fracshape/errors.hpp"

namespace fracshape {

namespace {

using boost::math::quadrature::gauss_kronrod;
using std::numbers::pi;

constexpr double kQuadratureTarget = 1e-8;

void require_order(double s) {
    if (!(s > 0.0 && s < 1.0)) throw ParameterError("s", "must lie in (0,1), got " + std::to_string(s));
}

// Adaptive Gauss-Kronrod with an error check against an absolute budget.
template <class F>
double integrate_checked(F f, double a, double b, double abs_budget) {
    double err = 0.0;
    const double v = gauss_kronrod<double, 31>::integrate(f, a, b, 25, 1e-14, &err);
    if (!(err <= abs_budget)) throw NumericError("quadrature did not converge on [" + std::to_string(a) + "," +
                                                     std::to_string(b) + "]", err);
    return v;
}

// \int_R (1 - cos z) |z|^{-1-2s} dz
double cosine_integral_1d(double s) {
    const double a = 1.0 + 2.0 * s;
    // On [0,1] the z^2/2 part is integrated in closed form; the remainder
    // 1 - cos z - z^2/2 = O(z^4) leaves a bounded integrand.
    const double near = 1.0 / (2.0 * (2.0 - 2.0 * s));
    boost::math::quadrature::tanh_sinh<double> ts;
    double inner_err = 0.0, inner_l1 = 0.0;
    const double inner = ts.integrate(
        [a](double z) {
            if (z <= 0.0) return 0.0;
            if (z < 0.1) {
                const double z2 = z * z;
                return (-1.0 / 24.0 + z2 * (1.0 / 720.0 - z2 / 40320.0)) * std::pow(z, 4.0 - a);
            }
            const double sh = std::sin(0.5 * z);
            return (2.0 * sh * sh - 0.5 * z * z) * std::pow(z, -a);
        },
        0.0, 1.0, 1e-15, &inner_err, &inner_l1);
    if (!(inner_err <= 1e-13)) throw NumericError("quadrature did not converge on [0,1]", inner_err);

    // \int_1^inf z^{-a} = 1/(2s); subtract \int_1^inf cos(z) z^{-a}.
    constexpr int kPeriods = 64;
    const double z_end = 2.0 * pi * kPeriods;
    double osc = integrate_checked([a](double z) { return std::cos(z) * std::pow(z, -a); }, 1.0, 2.0 * pi, 1e-13);
    for (int k = 1; k < kPeriods; ++k) {
        for (int half = 0; half < 2; ++half) {
            const double lo = 2.0 * pi * k + pi * half;
            osc += integrate_checked([a](double z) { return std::cos(z) * std::pow(z, -a); }, lo, lo + pi, 1e-14);
        }
    }
    // Beyond a multiple of 2 pi: I_b = b Z^{-b-1} - b (b+1) I_{b+2}.
    double remainder = 0.0, coeff = 1.0, b = a;
    for (int term = 0; term < 6; ++term) {
        remainder += coeff * b * std::pow(z_end, -b - 1.0);
        coeff *= -b * (b + 1.0);
        b += 2.0;
    }
    osc += remainder;
    return 2.0 * (near + inner + 1.0 / (2.0 * s) - osc);
}

// \int_R (1 + t^2)^{-(1+s)} dt, folded onto [0,1] with t -> 1/t for the outer half.
double transverse_factor(double s) {
    boost::math::quadrature::tanh_sinh<double> ts;
    double err1 = 0.0, err2 = 0.0;
    const double inner = ts.integrate([s](double t) { return std::pow(1.0 + t * t, -1.0 - s); }, 0.0, 1.0, 1e-14, &err1);
    const double outer = ts.integrate(
        [s](double u) { return u <= 0.0 ? 0.0 : std::pow(u, 2.0 * s) * std::pow(u * u + 1.0, -1.0 - s); }, 0.0, 1.0,
        1e-14, &err2);
    if (!(err1 + err2 <= 1e-10)) throw NumericError("transverse quadrature did not converge", err1 + err2);
    return 2.0 * (inner + outer);
}

// Dirichlet beta at a positive argument, alternating series with the
// Cohen-Rodriguez Villegas-Zagier acceleration.
double dirichlet_beta(double x) {
    constexpr int n = 40;
    double d = std::pow(3.0 + std::sqrt(8.0), n);
    d = 0.5 * (d + 1.0 / d);
    double b = -1.0, c = -d, sum = 0.0;
    for (int k = 0; k < n; ++k) {
        c = b - c;
        sum += c * std::pow(2.0 * k + 1.0, -x);
        b *= (k + n) * (k - n) / ((k + 0.5) * (k + 1.0));
    }
    return sum / d;
}

// sum over nonzero k in Z^dim of |k|^{2s}, by analytic continuation.
double lattice_power_sum(double s, int dim) {
    if (dim == 1) return 2.0 * boost::math::zeta(-2.0 * s);
    // Epstein zeta of the square lattice: 4 zeta(z) beta(z) at z = -s,
    // beta continued through beta(1-x) = (2/pi)^x sin(pi x/2) Gamma(x) beta(x).
    const double x = 1.0 + s;
    const double beta_neg = std::pow(2.0 / pi, x) * std::sin(0.5 * pi * x) * boost::math::tgamma(x) * dirichlet_beta(x);
    return 4.0 * boost::math::zeta(-s) * beta_neg;
}

}  // namespace

double normalization_constant(double s, int dim) {
    require_order(s);
    if (dim != 1 && dim != 2) throw ParameterError("dim", "must be 1 or 2");
    double inv = cosine_integral_1d(s);
    if (dim == 2) inv *= transverse_factor(s);
    if (!(inv > 0.0) || !std::isfinite(inv)) throw NumericError("normalization integral is not positive", inv);
    return 1.0 / inv;
}

FracParams make_frac_params(double s, int dim) { return FracParams{s, dim, normalization_constant(s, dim)}; }

double exterior_kernel_integral(const Grid& grid, const Point& x, double s) {
    const double a = grid.half_width();
    const double two_s = 2.0 * s;
    // Padded shell out to radius r_out, analytic radial remainder beyond it.
    const double r_out = 4.0 * a * (grid.dim() == 2 ? std::sqrt(2.0) : 1.0);
    const double shell_end = std::pow(r_out, -two_s);
    if (grid.dim() == 1) {
        const double right = a - x[0], left = a + x[0];
        const double shell = (std::pow(right, -two_s) - shell_end + std::pow(left, -two_s) - shell_end) / two_s;
        return shell + 2.0 * shell_end / two_s;
    }
    // Along the ray at angle theta the radial integral of r^{-1-2s} from the box
    // exit distance to r_out is closed form; the angular integral is split at
    // the corner directions so each piece is smooth.
    auto exit_distance = [&](double theta) {
        const double c = std::cos(theta), sn = std::sin(theta);
        double t = std::numeric_limits<double>::infinity();
        if (c > 0) t = std::min(t, (a - x[0]) / c);
        if (c < 0) t = std::min(t, (-a - x[0]) / c);
        if (sn > 0) t = std::min(t, (a - x[1]) / sn);
        if (sn < 0) t = std::min(t, (-a - x[1]) / sn);
        return t;
    };
    std::array<double, 4> corners{std::atan2(a - x[1], a - x[0]), std::atan2(a - x[1], -a - x[0]),
                                  std::atan2(-a - x[1], -a - x[0]), std::atan2(-a - x[1], a - x[0])};
    for (auto& c : corners)
        if (c < corners[0]) c += 2.0 * pi;
    std::sort(corners.begin(), corners.end());
    double shell = 0.0;
    for (int k = 0; k < 4; ++k) {
        const double lo = corners[static_cast<std::size_t>(k)];
        const double hi = k == 3 ? corners[0] + 2.0 * pi : corners[static_cast<std::size_t>(k) + 1];
        shell += integrate_checked(
            [&](double th) { return (std::pow(exit_distance(th), -two_s) - shell_end) / two_s; }, lo, hi,
            1e-12 * std::abs(hi - lo) * std::pow(a, -two_s) + 1e-300);
    }
    return shell + 2.0 * pi * shell_end / two_s;
}

StiffnessOperator::StiffnessOperator(Grid grid, FracParams params, Eigen::MatrixXd matrix, Eigen::VectorXd tail)
    : grid_(grid), params_(params), matrix_(std::move(matrix)), tail_(std::move(tail)) {}

StiffnessOperator assemble_stiffness(const Grid& grid, double s) {
    require_order(s);
    const int m = grid.cell_count();
    if (m > kMaxAssemblyCells)
        throw ParameterError("resolution", "dense assembly budget is " + std::to_string(kMaxAssemblyCells) +
                                               " cells, grid has " + std::to_string(m));
    const FracParams params = make_frac_params(s, grid.dim());
    const int n = grid.dim();
    const double h = grid.h();
    const double cell = grid.cell_volume();
    const double weight = cell * cell / std::pow(h, n + 2.0 * s);  // k_ij in units of lattice distance
    const double expo = -(n + 2.0 * s) / 2.0;

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        const Shift ci = grid.coords(i);
        for (int j = i + 1; j < m; ++j) {
            const Shift cj = grid.coords(j);
            const double dx = ci[0] - cj[0], dy = ci[1] - cj[1];
            const double k = weight * std::pow(dx * dx + dy * dy, expo);
            a(i, j) = -k;
            a(j, i) = -k;
        }
    }
    Eigen::VectorXd tail(m);
    for (int i = 0; i < m; ++i) {
        tail(i) = cell * exterior_kernel_integral(grid, grid.center(i), s);
        a(i, i) = tail(i) - a.row(i).sum();
    }
    return StiffnessOperator(grid, params, std::move(a), std::move(tail));
}

double gagliardo_sq(const StiffnessOperator& op, const GridFunction& u) {
    require_same_grid(op.grid(), u.grid);
    const auto& a = op.matrix();
    const auto& v = u.values;
    const int m = op.size();
    double pairs = 0.0, tail = 0.0;
    for (int j = 0; j < m; ++j) {
        const double vj = v(j);
        for (int i = 0; i < j; ++i) {
            const double d = v(i) - vj;
            pairs -= a(i, j) * d * d;
        }
        tail += op.tail()(j) * vj * vj;
    }
    return pairs + tail;
}

double fourier_seminorm_sq(const Grid& grid, const FracParams& params, const GridFunction& u, int padding) {
    require_same_grid(grid, u.grid);
    if (padding < 4) throw ParameterError("padding", "must be at least 4");
    const int n = grid.resolution();
    const int p = padding * n;
    const int dim = grid.dim();
    const double h = grid.h();
    const double s = params.s;
    const double dxi = 2.0 * pi / (p * h);
    const double scale = std::pow(h / std::sqrt(2.0 * pi), dim);

    const std::size_t total = dim == 1 ? static_cast<std::size_t>(p) : static_cast<std::size_t>(p) * p;
    std::vector<std::complex<double>> buf(total, 0.0);
    for (int i = 0; i < grid.cell_count(); ++i) {
        const Shift c = grid.coords(i);
        buf[static_cast<std::size_t>(dim == 1 ? c[0] : c[1] * p + c[0])] = u.values(i);
    }
    auto* data = reinterpret_cast<fftw_complex*>(buf.data());
    fftw_plan plan = dim == 1 ? fftw_plan_dft_1d(p, data, data, FFTW_FORWARD, FFTW_ESTIMATE)
                              : fftw_plan_dft_2d(p, p, data, data, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);

    auto freq = [&](int k) { return (k <= p / 2 ? k : k - p) * dxi; };
    double sum = 0.0;
    for (std::size_t idx = 0; idx < total; ++idx) {
        const int kx = static_cast<int>(idx % static_cast<std::size_t>(p));
        const int ky = dim == 1 ? 0 : static_cast<int>(idx / static_cast<std::size_t>(p));
        const double xi2 = freq(kx) * freq(kx) + (dim == 2 ? freq(ky) * freq(ky) : 0.0);
        if (xi2 == 0.0) continue;
        sum += std::pow(xi2, s) * std::norm(buf[idx]);
    }
    const double cell = std::pow(dxi, dim);
    double integral = scale * scale * sum * cell;
    // Lattice sums of |xi|^{2s} g(xi) overshoot the integral by
    // g(0) * zeta_lattice(-2s) * dxi^{N+2s} at leading order.
    const double g0 = scale * scale * std::norm(buf[0]);
    integral -= lattice_power_sum(s, dim) * g0 * std::pow(dxi, dim + 2.0 * s);
    return integral / params.c_norm;
}

DirichletOperator::DirichletOperator(Grid grid, FracParams params, DomainMask mask, Eigen::MatrixXd matrix)
    : grid_(grid), params_(params), mask_(std::move(mask)), active_(mask_.indices()), matrix_(std::move(matrix)) {
    if (static_cast<Eigen::Index>(active_.size()) != matrix_.rows())
        throw StructuralError("restricted matrix does not match mask size");
}

GridFunction DirichletOperator::extend(const Eigen::VectorXd& local) const {
    GridFunction out(grid_);
    for (std::size_t k = 0; k < active_.size(); ++k) out.values(active_[k]) = local(static_cast<Eigen::Index>(k));
    return out;
}

Eigen::VectorXd DirichletOperator::gather(const GridFunction& f) const {
    require_same_grid(grid_, f.grid);
    Eigen::VectorXd out(static_cast<Eigen::Index>(active_.size()));
    for (std::size_t k = 0; k < active_.size(); ++k) out(static_cast<Eigen::Index>(k)) = f.values(active_[k]);
    return out;
}

DirichletOperator restrict_to(const StiffnessOperator& op, const DomainMask& mask) {
    require_same_grid(op.grid(), mask.grid());
    const std::vector<int> idx = mask.indices();
    if (idx.empty()) throw DomainEmptyError();
    const auto n = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd sub(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) sub(i, j) = op.matrix()(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    return DirichletOperator(op.grid(), op.params(), mask, std::move(sub));
}

}  // namespace fracshape
