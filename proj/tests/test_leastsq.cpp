#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "parampkit/leastsq.hpp"

using namespace parampkit;

TEST_CASE("quadratic model recovers exact parameters") {
    // y = 2 + 3 x - 0.5 x^2 sampled exactly.
    std::vector<double> xs, ys;
    for (int i = 0; i < 25; ++i) {
        const double x = -2.0 + 0.2 * i;
        xs.push_back(x);
        ys.push_back(2.0 + 3.0 * x - 0.5 * x * x);
    }
    const auto residual = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(static_cast<long>(xs.size()));
        for (size_t i = 0; i < xs.size(); ++i) {
            r[static_cast<long>(i)] = p[0] + p[1] * xs[i] + p[2] * xs[i] * xs[i] - ys[i];
        }
        return r;
    };
    Eigen::VectorXd init(3);
    init << 0.0, 0.0, 0.0;
    const FitResult res = least_squares(residual, init);
    CHECK(res.converged);
    CHECK(res.params[0] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(res.params[1] == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(res.params[2] == doctest::Approx(-0.5).epsilon(1e-10));
    CHECK(res.residual_norm < 1e-9);
}

TEST_CASE("nonlinear exponential fit converges from a rough seed") {
    std::vector<double> xs, ys;
    for (int i = 0; i < 40; ++i) {
        const double x = 0.1 * i;
        xs.push_back(x);
        ys.push_back(4.0 * std::exp(-1.7 * x) + 0.3);
    }
    const auto residual = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(static_cast<long>(xs.size()));
        for (size_t i = 0; i < xs.size(); ++i) {
            r[static_cast<long>(i)] = p[0] * std::exp(-p[1] * xs[i]) + p[2] - ys[i];
        }
        return r;
    };
    Eigen::VectorXd init(3);
    init << 1.0, 1.0, 0.0;
    const FitResult res = least_squares(residual, init);
    CHECK(res.converged);
    CHECK(res.params[0] == doctest::Approx(4.0).epsilon(1e-8));
    CHECK(res.params[1] == doctest::Approx(1.7).epsilon(1e-8));
    CHECK(res.params[2] == doctest::Approx(0.3).epsilon(1e-8));
}

TEST_CASE("covariance scales with residual noise") {
    std::vector<double> xs, ys;
    for (int i = 0; i < 50; ++i) {
        const double x = 0.1 * i;
        xs.push_back(x);
        ys.push_back(1.0 + 2.0 * x + ((i % 2) ? 0.01 : -0.01));
    }
    const FitResult res = weighted_line_fit(xs, ys, {});
    CHECK(res.params[1] == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(res.sigma[1] > 0.0);
    CHECK(res.sigma[1] < 0.01);
}

TEST_CASE("degenerate line fit is rejected") {
    CHECK_THROWS_AS(weighted_line_fit({1.0, 1.0, 1.0}, {1.0, 2.0, 3.0}, {}), FitError);
    CHECK_THROWS_AS(weighted_line_fit({1.0}, {1.0}, {}), std::invalid_argument);
}
