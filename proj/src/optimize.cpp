#include "ringcqed/optimize.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ringcqed {

Bounds Bounds::none(Eigen::Index n) {
    const double inf = std::numeric_limits<double>::infinity();
    return {Eigen::VectorXd::Constant(n, -inf), Eigen::VectorXd::Constant(n, inf)};
}

Eigen::VectorXd Bounds::clamp(const Eigen::VectorXd& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

void Bounds::check(Eigen::Index n) const {
    if (lower.size() != n || upper.size() != n) throw std::invalid_argument("bounds: size mismatch");
    for (Eigen::Index i = 0; i < n; ++i)
        if (lower(i) > upper(i)) throw std::invalid_argument("bounds: lower exceeds upper");
}

namespace {

// Forward differences that step inward at an active upper bound.
Eigen::MatrixXd jacobian_fd(const ResidualFn& r, const Eigen::VectorXd& x, const Eigen::VectorXd& rx,
                            const Bounds& b, double rel, int& evals) {
    Eigen::MatrixXd j(rx.size(), x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        double h = rel * std::max(std::abs(x(k)), 1.0);
        if (x(k) + h > b.upper(k)) h = -h;
        Eigen::VectorXd xp = x;
        xp(k) += h;
        j.col(k) = (r(xp) - rx) / h;
        ++evals;
    }
    return j;
}

Eigen::VectorXd gradient_fd(const ObjectiveFn& f, const Eigen::VectorXd& x, const Bounds& b, double rel, int& evals) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double h = std::cbrt(rel) * 1e-2 * std::max(std::abs(x(k)), 1.0);
        Eigen::VectorXd xp = x, xm = x;
        xp(k) = std::min(x(k) + h, b.upper(k));
        xm(k) = std::max(x(k) - h, b.lower(k));
        const double d = xp(k) - xm(k);
        g(k) = d > 0.0 ? (f(xp) - f(xm)) / d : 0.0;
        evals += 2;
    }
    return g;
}

}  // namespace

OptimizeResult least_squares(const ResidualFn& residual, const Eigen::VectorXd& x0, const Bounds& bounds,
                             const OptimizeOptions& options) {
    bounds.check(x0.size());
    OptimizeResult res;
    Eigen::VectorXd x = bounds.clamp(x0);
    Eigen::VectorXd r = residual(x);
    res.evaluations = 1;
    if (r.size() < x.size()) throw std::invalid_argument("least_squares: fewer residuals than parameters");
    double cost = 0.5 * r.squaredNorm();
    if (!std::isfinite(cost)) throw std::invalid_argument("least_squares: non-finite residual at the start point");
    double lambda = 1e-3;
    Eigen::MatrixXd j = jacobian_fd(residual, x, r, bounds, options.diff_step, res.evaluations);

    for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
        const Eigen::MatrixXd jtj = j.transpose() * j;
        const Eigen::VectorXd grad = j.transpose() * r;
        // Projected gradient test.
        Eigen::VectorXd pg = bounds.clamp(x - grad) - x;
        if (pg.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance * std::max(1.0, cost)) {
            res.converged = true;
            res.message = "projected gradient below tolerance";
            break;
        }
        bool accepted = false;
        for (int attempt = 0; attempt < 30; ++attempt) {
            Eigen::MatrixXd a = jtj;
            a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12 * std::max(jtj.diagonal().maxCoeff(), 1e-300));
            const Eigen::VectorXd step = a.ldlt().solve(-grad);
            const Eigen::VectorXd xn = bounds.clamp(x + step);
            const Eigen::VectorXd rn = residual(xn);
            ++res.evaluations;
            const double cn = 0.5 * rn.squaredNorm();
            if (std::isfinite(cn) && cn < cost) {
                const double rel_change = (cost - cn) / std::max(cost, 1e-300);
                const double step_norm = (xn - x).norm() / std::max(x.norm(), 1e-12);
                x = xn;
                r = rn;
                cost = cn;
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                if (rel_change < options.tolerance || step_norm < options.tolerance) {
                    res.converged = true;
                    res.message = "relative cost change below tolerance";
                }
                break;
            }
            lambda *= 4.0;
        }
        if (!accepted) {
            res.converged = true;
            res.message = "no downhill step (local minimum within resolution)";
            break;
        }
        j = jacobian_fd(residual, x, r, bounds, options.diff_step, res.evaluations);
        if (res.converged) break;
    }
    if (!res.converged) res.message = "iteration limit reached; returning best point";
    res.x = x;
    res.cost = cost;
    res.jacobian = j;
    const Eigen::Index dof = r.size() - x.size();
    const double s2 = dof > 0 ? 2.0 * cost / static_cast<double>(dof) : 0.0;
    res.covariance = s2 * (j.transpose() * j).completeOrthogonalDecomposition().pseudoInverse();
    return res;
}

OptimizeResult minimize_bfgs_box(const ObjectiveFn& f, const Eigen::VectorXd& x0, const Bounds& bounds,
                                 const OptimizeOptions& options) {
    bounds.check(x0.size());
    const Eigen::Index n = x0.size();
    OptimizeResult res;
    Eigen::VectorXd x = bounds.clamp(x0);
    double fx = f(x);
    res.evaluations = 1;
    Eigen::VectorXd g = gradient_fd(f, x, bounds, options.diff_step, res.evaluations);
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);  // inverse Hessian estimate

    for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
        const Eigen::VectorXd pg = bounds.clamp(x - g) - x;
        if (pg.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
            res.converged = true;
            res.message = "projected gradient below tolerance";
            break;
        }
        // Variables pinned at a bound with the gradient pushing outward are frozen.
        Eigen::VectorXd free = Eigen::VectorXd::Ones(n);
        for (Eigen::Index k = 0; k < n; ++k)
            if ((x(k) <= bounds.lower(k) && g(k) > 0.0) || (x(k) >= bounds.upper(k) && g(k) < 0.0)) free(k) = 0.0;
        Eigen::VectorXd d = -(h * g.cwiseProduct(free)).cwiseProduct(free);
        if (d.dot(g) >= 0.0) {
            h.setIdentity();
            d = -g.cwiseProduct(free);
        }
        double t = 1.0;
        Eigen::VectorXd xn;
        double fn = fx;
        bool ok = false;
        for (int ls = 0; ls < 40; ++ls) {
            xn = bounds.clamp(x + t * d);
            fn = f(xn);
            ++res.evaluations;
            if (std::isfinite(fn) && fn <= fx + 1e-4 * g.dot(xn - x)) {
                ok = true;
                break;
            }
            t *= 0.5;
        }
        if (!ok) {
            res.converged = true;
            res.message = "line search failed (local minimum within resolution)";
            break;
        }
        const Eigen::VectorXd gn = gradient_fd(f, xn, bounds, options.diff_step, res.evaluations);
        const Eigen::VectorXd s = xn - x;
        const Eigen::VectorXd y = gn - g;
        const double rel = std::abs(fx - fn) / std::max(std::abs(fx), 1e-300);
        x = xn;
        g = gn;
        const double prev = fx;
        fx = fn;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd i = Eigen::MatrixXd::Identity(n, n);
            h = (i - rho * s * y.transpose()) * h * (i - rho * y * s.transpose()) + rho * s * s.transpose();
        }
        if (rel < options.tolerance && prev - fn >= 0.0) {
            res.converged = true;
            res.message = "relative objective change below tolerance";
            break;
        }
    }
    if (!res.converged) res.message = "iteration limit reached; returning best point";
    res.x = x;
    res.cost = fx;
    return res;
}

namespace {

// Golden-section / parabolic (Brent) minimization of f(x + t d) for t in [lo, hi].
double line_minimize(const ObjectiveFn& f, const Eigen::VectorXd& x, const Eigen::VectorXd& d, double lo, double hi,
                     double& fbest, int& evals, double tol) {
    const double golden = 0.3819660112501051;
    auto phi = [&](double t) {
        ++evals;
        return f(x + t * d);
    };
    double a = lo, b = hi;
    double xm = 0.0;
    if (xm < a || xm > b) xm = 0.5 * (a + b);
    double w = xm, v = xm;
    double fx = phi(xm), fw = fx, fv = fx;
    double e = 0.0, step = 0.0;
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (a + b);
        const double tol1 = tol * std::abs(xm) + 1e-12;
        const double tol2 = 2.0 * tol1;
        if (std::abs(xm - mid) <= tol2 - 0.5 * (b - a)) break;
        bool parabolic = false;
        if (std::abs(e) > tol1) {
            const double r = (xm - w) * (fx - fv);
            double q = (xm - v) * (fx - fw);
            double p = (xm - v) * q - (xm - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            q = std::abs(q);
            if (std::abs(p) < std::abs(0.5 * q * e) && p > q * (a - xm) && p < q * (b - xm)) {
                e = step;
                step = p / q;
                const double u = xm + step;
                if (u - a < tol2 || b - u < tol2) step = xm < mid ? tol1 : -tol1;
                parabolic = true;
            }
        }
        if (!parabolic) {
            e = (xm < mid) ? b - xm : a - xm;
            step = golden * e;
        }
        const double u = std::abs(step) >= tol1 ? xm + step : xm + (step > 0 ? tol1 : -tol1);
        const double fu = phi(u);
        if (fu <= fx) {
            if (u < xm) b = xm; else a = xm;
            v = w; fv = fw;
            w = xm; fw = fx;
            xm = u; fx = fu;
        } else {
            if (u < xm) a = u; else b = u;
            if (fu <= fw || w == xm) {
                v = w; fv = fw;
                w = u; fw = fu;
            } else if (fu <= fv || v == xm || v == w) {
                v = u; fv = fu;
            }
        }
    }
    fbest = fx;
    return xm;
}

// Feasible step interval [lo, hi] along d from x.
void feasible_interval(const Eigen::VectorXd& x, const Eigen::VectorXd& d, const Bounds& b, double scale, double& lo,
                       double& hi) {
    lo = -scale;
    hi = scale;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        if (d(k) == 0.0) continue;
        const double t1 = (b.lower(k) - x(k)) / d(k);
        const double t2 = (b.upper(k) - x(k)) / d(k);
        lo = std::max(lo, std::min(t1, t2));
        hi = std::min(hi, std::max(t1, t2));
    }
    if (lo > 0.0) lo = 0.0;
    if (hi < 0.0) hi = 0.0;
}

}  // namespace

OptimizeResult minimize_powell(const ObjectiveFn& f, const Eigen::VectorXd& x0, const Bounds& bounds,
                               const OptimizeOptions& options) {
    bounds.check(x0.size());
    const Eigen::Index n = x0.size();
    OptimizeResult res;
    Eigen::VectorXd x = bounds.clamp(x0);
    double fx = f(x);
    res.evaluations = 1;
    Eigen::MatrixXd dirs = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index k = 0; k < n; ++k) dirs(k, k) = std::max(std::abs(x(k)), 1.0) * 0.1;

    for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
        const double f_start = fx;
        const Eigen::VectorXd x_start = x;
        Eigen::Index biggest = 0;
        double biggest_drop = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            double lo, hi;
            feasible_interval(x, dirs.col(k), bounds, 10.0, lo, hi);
            double fnew = fx;
            const double t = line_minimize(f, x, dirs.col(k), lo, hi, fnew, res.evaluations, 1e-6);
            if (fnew < fx) {
                x = bounds.clamp(x + t * dirs.col(k));
                if (fx - fnew > biggest_drop) {
                    biggest_drop = fx - fnew;
                    biggest = k;
                }
                fx = fnew;
            }
        }
        if (2.0 * (f_start - fx) <= options.tolerance * (std::abs(f_start) + std::abs(fx)) + 1e-300) {
            res.converged = true;
            res.message = "relative objective change below tolerance";
            break;
        }
        const Eigen::VectorXd new_dir = x - x_start;
        if (new_dir.norm() > 0.0) {
            double lo, hi;
            feasible_interval(x, new_dir, bounds, 2.0, lo, hi);
            double fnew = fx;
            const double t = line_minimize(f, x, new_dir, lo, hi, fnew, res.evaluations, 1e-6);
            if (fnew < fx) {
                x = bounds.clamp(x + t * new_dir);
                fx = fnew;
            }
            dirs.col(biggest) = dirs.col(n - 1);
            dirs.col(n - 1) = new_dir;
        }
    }
    if (!res.converged) res.message = "iteration limit reached; returning best point";
    res.x = x;
    res.cost = fx;
    return res;
}

}  // namespace ringcqed
