#include <doctest.h>

#include <random>

#include "ringcqed/optimize.hpp"

using namespace ringcqed;

namespace {

double rosenbrock(const Eigen::VectorXd& x) {
    return (1 - x(0)) * (1 - x(0)) + 100 * (x(1) - x(0) * x(0)) * (x(1) - x(0) * x(0));
}

}  // namespace

TEST_CASE("least squares") {
    SUBCASE("Rosenbrock residuals") {
        auto r = [](const Eigen::VectorXd& x) {
            Eigen::VectorXd v(2);
            v << 1 - x(0), 10 * (x(1) - x(0) * x(0));
            return v;
        };
        auto res = least_squares(r, Eigen::Vector2d(-1.2, 1.0), Bounds::none(2));
        CHECK(res.converged);
        CHECK(res.x(0) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(res.x(1) == doctest::Approx(1.0).epsilon(1e-6));
    }
    SUBCASE("active bound") {
        auto r = [](const Eigen::VectorXd& x) {
            Eigen::VectorXd v(2);
            v << x(0) - 3.0, x(1) + 1.0;
            return v;
        };
        Bounds b{Eigen::Vector2d(0, 0), Eigen::Vector2d(2, 5)};
        auto res = least_squares(r, Eigen::Vector2d(1, 1), b);
        CHECK(res.x(0) == doctest::Approx(2.0));
        CHECK(res.x(1) == doctest::Approx(0.0));
    }
    SUBCASE("linear regression covariance") {
        std::mt19937_64 rng(1);
        std::normal_distribution<double> noise(0.0, 0.1);
        const int m = 200;
        Eigen::VectorXd t(m), y(m);
        for (int i = 0; i < m; ++i) {
            t(i) = i / double(m);
            y(i) = 2.0 + 3.0 * t(i) + noise(rng);
        }
        auto r = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd { return (p(0) + p(1) * t.array() - y.array()).matrix(); };
        auto res = least_squares(r, Eigen::Vector2d(0, 0), Bounds::none(2));
        Eigen::MatrixXd a(m, 2);
        a.col(0).setOnes();
        a.col(1) = t;
        const Eigen::Vector2d exact = (a.transpose() * a).ldlt().solve(a.transpose() * y);
        CHECK((res.x - exact).norm() < 1e-7);
        const double s2 = (a * exact - y).squaredNorm() / (m - 2);
        const Eigen::Matrix2d cov = s2 * (a.transpose() * a).inverse();
        CHECK((res.covariance - cov).cwiseAbs().maxCoeff() < 1e-6 * cov.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("projected BFGS") {
    auto res = minimize_bfgs_box(rosenbrock, Eigen::Vector2d(-1.2, 1.0), Bounds::none(2), {.max_iterations = 500});
    CHECK(res.x(0) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(res.x(1) == doctest::Approx(1.0).epsilon(1e-4));
    Bounds b{Eigen::Vector2d(-2, -2), Eigen::Vector2d(0.5, 2)};
    auto bounded = minimize_bfgs_box(rosenbrock, Eigen::Vector2d(-1.2, 1.0), b, {.max_iterations = 500});
    CHECK(bounded.x(0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(bounded.x(1) == doctest::Approx(0.25).epsilon(1e-3));
}

TEST_CASE("Powell direction sets") {
    auto quad = [](const Eigen::VectorXd& x) {
        return 3 * (x(0) - 1) * (x(0) - 1) + (x(1) + 2) * (x(1) + 2) + (x(0) - 1) * (x(1) + 2) + 5;
    };
    auto res = minimize_powell(quad, Eigen::Vector2d(4, 4), Bounds::none(2));
    CHECK(res.x(0) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(res.x(1) == doctest::Approx(-2.0).epsilon(1e-5));
    auto ros = minimize_powell(rosenbrock, Eigen::Vector2d(-1.2, 1.0), Bounds::none(2), {.max_iterations = 2000});
    CHECK(ros.x(0) == doctest::Approx(1.0).epsilon(1e-3));
    Bounds b{Eigen::Vector2d(2, -10), Eigen::Vector2d(5, 10)};
    auto bounded = minimize_powell(quad, Eigen::Vector2d(4, 4), b);
    CHECK(bounded.x(0) == doctest::Approx(2.0).epsilon(1e-6));
}
