#include "fracshape/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "fracshape/errors.hpp"

namespace fracshape {

CgResult conjugate_gradient(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double tol, int max_iterations) {
    const Eigen::Index n = b.size();
    CgResult out;
    out.x = Eigen::VectorXd::Zero(n);
    const double bnorm = b.norm();
    if (bnorm == 0.0) return out;
    const Eigen::VectorXd inv_diag = a.diagonal().cwiseInverse();
    Eigen::VectorXd r = b;
    Eigen::VectorXd z = inv_diag.cwiseProduct(r);
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    for (int it = 0; it < max_iterations; ++it) {
        const Eigen::VectorXd ap = a * p;
        const double alpha = rz / p.dot(ap);
        out.x += alpha * p;
        r -= alpha * ap;
        out.iterations = it + 1;
        out.relative_residual = r.norm() / bnorm;
        if (out.relative_residual <= tol) {
            // Recompute the true residual once; recurrences drift.
            r = b - a * out.x;
            out.relative_residual = r.norm() / bnorm;
            if (out.relative_residual <= tol) return out;
        }
        z = inv_diag.cwiseProduct(r);
        const double rz_next = r.dot(z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    throw NumericError("conjugate gradients hit the iteration cap of " + std::to_string(max_iterations),
                       out.relative_residual);
}

namespace {

// Orthogonalize the columns of w against v and against each other (two passes
// of classical Gram-Schmidt), dropping columns that collapse.
Eigen::MatrixXd orthonormal_extension(const Eigen::MatrixXd& v, Eigen::MatrixXd w) {
    std::vector<Eigen::VectorXd> kept;
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
        Eigen::VectorXd x = w.col(c);
        const double original = x.norm();
        if (original == 0.0) continue;
        for (int pass = 0; pass < 2; ++pass) {
            if (v.cols() > 0) x -= v * (v.transpose() * x);
            for (const auto& q : kept) x -= q * q.dot(x);
        }
        const double nx = x.norm();
        if (nx > 1e-10 * original) kept.push_back(x / nx);
    }
    Eigen::MatrixXd out(w.rows(), static_cast<Eigen::Index>(kept.size()));
    for (std::size_t k = 0; k < kept.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = kept[k];
    return out;
}

std::vector<Eigen::Index> ritz_order(const Eigen::VectorXd& theta, RitzOrder order) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(theta.size()));
    std::iota(idx.begin(), idx.end(), 0);
    if (order == RitzOrder::largest_magnitude)
        std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return std::abs(theta(a)) > std::abs(theta(b)); });
    return idx;  // SelfAdjointEigenSolver already sorts ascending
}

void append_columns(Eigen::MatrixXd& m, const Eigen::MatrixXd& extra) {
    const Eigen::Index old = m.cols();
    m.conservativeResize(m.rows(), old + extra.cols());
    m.rightCols(extra.cols()) = extra;
}

}  // namespace

KrylovResult block_krylov(const std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>& apply, int n,
                          const KrylovOptions& options) {
    if (options.nev < 1 || options.nev > n) throw ParameterError("k", "must lie in [1, " + std::to_string(n) + "]");
    const int block = std::clamp(options.block, 1, n);
    const int max_basis = std::min(n, std::max({8 * block, 40, options.nev + 2 * block}));
    const int keep = std::min(max_basis - block, std::max(options.nev + block, max_basis / 2));

    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Eigen::MatrixXd start(n, block);
    for (Eigen::Index j = 0; j < start.cols(); ++j)
        for (Eigen::Index i = 0; i < start.rows(); ++i) start(i, j) = unit(rng);

    Eigen::MatrixXd v = orthonormal_extension(Eigen::MatrixXd(n, 0), start);
    Eigen::MatrixXd av = apply(v);
    Eigen::Index last_begin = 0;  // first column of the block to expand from

    KrylovResult result;
    double worst = kInfinity;
    for (int cycle = 0; cycle <= options.max_restarts; ++cycle) {
        while (v.cols() < max_basis) {
            const Eigen::Index last_cols = v.cols() - last_begin;
            if (last_cols == 0) break;
            Eigen::MatrixXd w = orthonormal_extension(v, av.middleCols(last_begin, last_cols));
            if (w.cols() == 0) break;  // invariant subspace
            if (v.cols() + w.cols() > max_basis) w.conservativeResize(Eigen::NoChange, max_basis - v.cols());
            last_begin = v.cols();
            append_columns(v, w);
            append_columns(av, apply(w));
        }

        Eigen::MatrixXd h = v.transpose() * av;
        h = 0.5 * (h + h.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
        const Eigen::VectorXd& theta = es.eigenvalues();
        const auto idx = ritz_order(theta, options.order);
        const Eigen::Index m = v.cols();
        const Eigen::Index want = std::min<Eigen::Index>(options.nev, m);

        Eigen::MatrixXd s_sel(m, m);
        Eigen::VectorXd th_sel(m);
        for (Eigen::Index c = 0; c < m; ++c) {
            s_sel.col(c) = es.eigenvectors().col(idx[static_cast<std::size_t>(c)]);
            th_sel(c) = theta(idx[static_cast<std::size_t>(c)]);
        }
        const Eigen::MatrixXd y = v * s_sel.leftCols(want);
        const Eigen::MatrixXd ay = av * s_sel.leftCols(want);
        result.values = th_sel.head(want);
        result.vectors = y;
        result.residuals.resize(want);
        worst = 0.0;
        const double scale = std::abs(th_sel(0));
        for (Eigen::Index c = 0; c < want; ++c) {
            const double denom = std::max(std::abs(th_sel(c)), 1e-300 + 1e-14 * scale);
            result.residuals(c) = (ay.col(c) - th_sel(c) * y.col(c)).norm() / denom;
            worst = std::max(worst, result.residuals(c));
        }
        // Zero operator: every Ritz value vanishes and the basis is invariant.
        if (scale == 0.0) {
            result.residuals.setZero();
            return result;
        }
        if (worst <= options.tol) return result;
        if (m == n && worst <= std::max(options.tol, 1e-12)) return result;

        // Thick restart on the leading Ritz vectors; expand from the wanted block.
        const Eigen::Index kept = std::min<Eigen::Index>(keep, m);
        v = v * s_sel.leftCols(kept);
        av = av * s_sel.leftCols(kept);
        last_begin = 0;
        // Expanding from all kept vectors would refill the basis at once; use the wanted ones.
        const Eigen::Index expand = std::min<Eigen::Index>(std::max<Eigen::Index>(want, block), kept);
        Eigen::MatrixXd w = orthonormal_extension(v, av.leftCols(expand));
        if (w.cols() == 0) return result;
        if (v.cols() + w.cols() > max_basis) w.conservativeResize(Eigen::NoChange, max_basis - v.cols());
        last_begin = v.cols();
        append_columns(v, w);
        append_columns(av, apply(w));
    }
    throw NumericError("block Krylov iteration did not converge", worst);
}

namespace {

int cg_cap(const SolverOptions& o, Eigen::Index n) { return std::max(1, o.cg_iteration_factor * static_cast<int>(n)); }

}  // namespace

TorsionFunction solve_torsion(const DirichletOperator& op, const SolverOptions& options) {
    const Eigen::VectorXd rhs = Eigen::VectorXd::Constant(op.size(), op.grid().cell_volume());
    const CgResult cg = conjugate_gradient(op.matrix(), rhs, options.cg_tol, cg_cap(options, op.size()));
    return TorsionFunction{op.mask(), op.extend(cg.x), cg.relative_residual};
}

GridFunction apply_resolvent(const DirichletOperator& op, const GridFunction& f, const SolverOptions& options) {
    const Eigen::VectorXd rhs = op.grid().cell_volume() * op.gather(f);
    const CgResult cg = conjugate_gradient(op.matrix(), rhs, options.cg_tol, cg_cap(options, op.size()));
    return op.extend(cg.x);
}

Spectrum eigenpairs(const DirichletOperator& op, int k, const SolverOptions& options) {
    const int n = op.size();
    if (k < 1 || k > n) throw ParameterError("k", "must lie in [1, " + std::to_string(n) + "]");
    const Eigen::MatrixXd& a = op.matrix();
    KrylovOptions ko;
    ko.nev = k;
    ko.block = k + 2;
    ko.tol = options.eig_tol;
    ko.seed = options.seed;
    const KrylovResult kr = block_krylov([&a](const Eigen::MatrixXd& x) -> Eigen::MatrixXd { return a * x; }, n, ko);

    const double cell = op.grid().cell_volume();
    Spectrum out;
    for (int j = 0; j < k; ++j) {
        Eigen::VectorXd y = kr.vectors.col(j);
        Eigen::Index imax = 0;
        y.cwiseAbs().maxCoeff(&imax);
        if (y(imax) < 0) y = -y;
        out.eigenvalues.push_back(kr.values(j) / cell);
        out.eigenfunctions.push_back(op.extend(y / std::sqrt(cell)));
        out.residuals.push_back(kr.residuals(j));
    }
    return out;
}

namespace {

// Resolvent of one Dirichlet operator, factored once; acts on vectors indexed
// by a common set of grid cells.
struct FactoredResolvent {
    Eigen::LLT<Eigen::MatrixXd> llt;
    std::vector<Eigen::Index> positions;  // where each active cell sits in the common index
    double cell = 1.0;

    FactoredResolvent(const DirichletOperator& op, const std::vector<int>& common) : llt(op.matrix()) {
        if (llt.info() != Eigen::Success) throw NumericError("restricted operator is not positive definite", 0.0);
        cell = op.grid().cell_volume();
        for (int c : op.active()) {
            const auto it = std::lower_bound(common.begin(), common.end(), c);
            positions.push_back(it - common.begin());
        }
    }

    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
        const auto n = static_cast<Eigen::Index>(positions.size());
        Eigen::MatrixXd local(n, x.cols());
        for (Eigen::Index i = 0; i < n; ++i) local.row(i) = x.row(positions[static_cast<std::size_t>(i)]);
        const Eigen::MatrixXd sol = llt.solve(cell * local);
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), x.cols());
        for (Eigen::Index i = 0; i < n; ++i) out.row(positions[static_cast<std::size_t>(i)]) = sol.row(i);
        return out;
    }
};

double largest_magnitude(const std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>& apply, int n,
                         const SolverOptions& options) {
    KrylovOptions ko;
    ko.nev = 1;
    ko.block = 1;
    ko.tol = options.eig_tol;
    ko.seed = options.seed;
    ko.order = RitzOrder::largest_magnitude;
    const KrylovResult kr = block_krylov(apply, n, ko);
    return std::abs(kr.values(0));
}

}  // namespace

double resolvent_norm_diff(const DirichletOperator& a, const DirichletOperator& b, const SolverOptions& options) {
    require_same_grid(a.grid(), b.grid());
    if (a.mask() == b.mask()) return 0.0;
    const std::vector<int> common = a.mask().unite(b.mask()).indices();
    const FactoredResolvent ra(a, common), rb(b, common);
    return largest_magnitude([&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd { return ra.apply(x) - rb.apply(x); },
                             static_cast<int>(common.size()), options);
}

double resolvent_norm(const DirichletOperator& a, const SolverOptions& options) {
    const FactoredResolvent ra(a, a.active());
    return largest_magnitude([&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd { return ra.apply(x); }, a.size(),
                             options);
}

TorsionResolventReport torsion_resolvent_bound_check(const DirichletOperator& a, const DirichletOperator& b,
                                                     const SolverOptions& options) {
    require_same_grid(a.grid(), b.grid());
    if (!b.mask().is_subset_of(a.mask())) throw StructuralError("second mask must be contained in the first");
    TorsionResolventReport rep;
    rep.in_bound_range = a.grid().dim() < 4.0 * a.params().s;
    rep.lhs = resolvent_norm_diff(a, b, options);
    const TorsionFunction wa = solve_torsion(a, options);
    const TorsionFunction wb = solve_torsion(b, options);
    const GridFunction dw(a.grid(), wa.values.values - wb.values.values);
    rep.torsion_distance = dw.l2_norm();
    rep.constant = rep.torsion_distance > 0.0 ? rep.lhs / rep.torsion_distance : 0.0;

    // int (R_A f - R_B f) against int f (w_A - w_B), from separate solves, for
    // f = 1 on the larger mask and for a seeded random f.
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    GridFunction ones(a.grid()), random_f(a.grid());
    for (int c : a.active()) {
        ones.values(c) = 1.0;
        random_f.values(c) = unit(rng);
    }
    for (const GridFunction* f : {&ones, &random_f}) {
        const GridFunction ra = apply_resolvent(a, *f, options);
        const GridFunction rb = apply_resolvent(b, *f, options);
        const double left = ra.integral() - rb.integral();
        const double right = f->dot(dw);
        const double diff = std::abs(left - right);
        rep.duality_residual = std::max(rep.duality_residual, diff);
        const double scale = std::max(std::abs(left) + std::abs(right), 1e-300);
        rep.duality_relative = std::max(rep.duality_relative, diff / scale);
    }
    return rep;
}

ExponentFit fit_torsion_resolvent_exponent(const std::vector<TorsionResolventReport>& family) {
    std::vector<double> xs, ys;
    for (const auto& r : family) {
        if (r.lhs > 0.0 && r.torsion_distance > 0.0) {
            xs.push_back(std::log(r.torsion_distance));
            ys.push_back(std::log(r.lhs));
        }
    }
    ExponentFit fit;
    fit.points = static_cast<int>(xs.size());
    if (xs.size() < 2) return fit;
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0.0) return fit;
    fit.alpha = sxy / sxx;
    fit.constant = std::exp(my - fit.alpha * mx);
    return fit;
}

double poincare_constant(const DirichletOperator& op, const SolverOptions& options) {
    const Spectrum sp = eigenpairs(op, 1, options);
    return 1.0 / std::sqrt(sp.eigenvalues.front());
}

double capacity_estimate(const StiffnessOperator& base, const DomainMask& mask, const CapacityOptions& options) {
    require_same_grid(base.grid(), mask.grid());
    if (mask.empty()) return 0.0;
    const Eigen::MatrixXd& a = base.matrix();
    const double step = 1.0 / (2.0 * a.diagonal().maxCoeff());
    const int m = base.size();
    Eigen::VectorXd u = Eigen::VectorXd::Zero(m);
    for (int c : mask.indices()) u(c) = 1.0;
    Eigen::VectorXd au = a * u;
    double energy = u.dot(au);
    double checkpoint = energy;
    for (int it = 1; it <= options.max_iterations; ++it) {
        u -= step * 2.0 * au;
        for (int c = 0; c < m; ++c)
            if (mask.contains(c) && u(c) < 1.0) u(c) = 1.0;
        au.noalias() = a * u;
        energy = u.dot(au);
        if (it % options.window == 0) {
            if (checkpoint - energy < options.stall_tol * energy) return energy;
            checkpoint = energy;
        }
    }
    throw NumericError("projected gradient exhausted its iteration budget", energy);
}

}  // namespace fracshape
