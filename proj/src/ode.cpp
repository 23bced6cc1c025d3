#include "ringcqed/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ringcqed {

namespace {

// Dormand-Prince tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - b_hat (error weights).
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

double error_norm(const Eigen::MatrixXcd& err, const Eigen::MatrixXcd& y0, const Eigen::MatrixXcd& y1,
                  const OdeOptions& o) {
    double acc = 0.0;
    const Eigen::Index n = err.size();
    const cplx* e = err.data();
    const cplx* p = y0.data();
    const cplx* q = y1.data();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sc = o.atol + o.rtol * std::max(std::abs(p[i]), std::abs(q[i]));
        const double r = std::abs(e[i]) / sc;
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(std::max<Eigen::Index>(n, 1)));
}

}  // namespace

OdeStats integrate(const OdeRhs& rhs, double t0, Eigen::MatrixXcd y, const std::vector<double>& times,
                   const OdeObserver& observe, const OdeOptions& options) {
    OdeStats stats;
    if (times.empty()) return stats;
    if (times.front() < t0) throw std::invalid_argument("integrate: output times precede t0");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (times[i] < times[i - 1]) throw std::invalid_argument("integrate: output times must not decrease");

    const Eigen::Index rows = y.rows();
    const Eigen::Index cols = y.cols();
    Eigen::MatrixXcd k1(rows, cols), k2(rows, cols), k3(rows, cols), k4(rows, cols), k5(rows, cols),
        k6(rows, cols), k7(rows, cols), tmp(rows, cols), ynew(rows, cols);

    double t = t0;
    rhs(t, y, k1);
    ++stats.evaluations;

    const double span = times.back() - t0;
    double h = options.initial_step;
    if (h <= 0.0) {
        const double d0 = y.norm();
        const double d1 = k1.norm();
        h = (d0 > 1e-300 && d1 > 1e-300) ? 0.01 * d0 / d1 : 1e-6 * std::max(span, 1e-300);
        if (span > 0.0) h = std::min(h, span);
    }

    std::size_t next = 0;
    while (next < times.size() && times[next] <= t) observe(next, times[next], y), ++next;

    const double eps = std::numeric_limits<double>::epsilon();
    while (next < times.size()) {
        const double target = times[next];
        if (options.max_step > 0.0) h = std::min(h, options.max_step);
        bool hits = false;
        double step = h;
        // Stretch by up to 1% rather than leave a sliver before the output time.
        if (t + 1.01 * step >= target - 4 * eps * std::abs(target)) {
            step = target - t;
            hits = true;
        }
        if (step < 16 * eps * std::max(std::abs(t), 1e-300) || step <= 0.0) {
            std::ostringstream os;
            os << "step size underflow at t=" << t << " (h=" << step
               << "); reduce the Fock cutoff or loosen the tolerances";
            throw StiffnessError(os.str());
        }
        if (stats.accepted + stats.rejected > options.max_steps)
            throw StiffnessError("step budget exhausted; reduce the Fock cutoff or loosen the tolerances");

        tmp = y + step * a21 * k1;
        rhs(t + c2 * step, tmp, k2);
        tmp = y + step * (a31 * k1 + a32 * k2);
        rhs(t + c3 * step, tmp, k3);
        tmp = y + step * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs(t + c4 * step, tmp, k4);
        tmp = y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(t + c5 * step, tmp, k5);
        tmp = y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        rhs(t + step, tmp, k6);
        ynew = y + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        rhs(t + step, ynew, k7);
        stats.evaluations += 6;

        tmp = step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double err = error_norm(tmp, y, ynew, options);

        if (std::isfinite(err) && err <= 1.0) {
            ++stats.accepted;
            t = hits ? target : t + step;
            y.swap(ynew);
            k1.swap(k7);  // first-same-as-last
            while (next < times.size() && times[next] <= t) observe(next, times[next], y), ++next;
            const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            // Keep the untruncated step length when the step was clipped to an output time.
            h = hits ? std::max(h, step * fac) : step * fac;
        } else {
            ++stats.rejected;
            const double fac = std::isfinite(err) ? std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9) : 0.1;
            h = step * fac;
        }
    }
    return stats;
}

}  // namespace ringcqed
