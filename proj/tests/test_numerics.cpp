#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "palcurv/numerics.hpp"

using namespace palcurv;
using namespace palcurv::numerics;

namespace {

std::vector<double> sample(double (*f)(double), double x0, double h, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = f(x0 + h * static_cast<double>(i));
    return v;
}

}  // namespace

// Standard 5-point weights.
TEST(Stencil, CentralFourthOrderWeights) {
    const auto s1 = central_stencil(1, 4, 1.0);
    const std::vector<double> w1 = {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
    ASSERT_EQ(s1.weights.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(s1.weights[i], w1[i], 1e-14);

    const auto s2 = central_stencil(2, 4, 1.0);
    const std::vector<double> w2 = {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12};
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(s2.weights[i], w2[i], 1e-13);
    EXPECT_EQ(s1.order, 4);
}

// A stencil of formal order p differentiates monomials of degree <= d + p - 1 exactly.
TEST(Stencil, ExactOnMonomials) {
    const double h = 0.1;
    for (int d = 1; d <= 2; ++d) {
        for (int acc : {2, 4}) {
            const auto st = central_stencil(d, acc, h);
            for (int deg = 0; deg <= d + acc - 1; ++deg) {
                std::vector<double> f;
                for (int o : st.offsets) f.push_back(std::pow(0.3 + o * h, deg));
                const std::size_t c = static_cast<std::size_t>(-st.offsets.front());
                const double exact = d == 1 ? (deg >= 1 ? deg * std::pow(0.3, deg - 1) : 0.0)
                                            : (deg >= 2 ? deg * (deg - 1) * std::pow(0.3, deg - 2) : 0.0);
                EXPECT_NEAR(st.apply(f, c), exact, 1e-9 * (1 + std::abs(exact))) << "d=" << d << " acc=" << acc << " deg=" << deg;
            }
        }
    }
    const auto os = one_sided_stencil(1, -1, h);
    std::vector<double> q = {0.1 * 0.1, 0.2 * 0.2, 0.3 * 0.3};  // x^2 at 0.1, 0.2, 0.3
    EXPECT_NEAR(os.apply(q, 2), 0.6, 1e-12);
}

TEST(FiniteDifference, QuadraticExactEverywhere) {
    const double h = 0.25;
    const auto f = sample([](double x) { return x * x; }, -1.0, h, 12);
    const auto d1 = fd_derivative(f, h, 1, 4);
    const auto d2 = fd_derivative(f, h, 2, 4);
    for (std::size_t i = 0; i < f.size(); ++i) {
        EXPECT_NEAR(d1[i], 2 * (-1.0 + h * i), 1e-12);
        EXPECT_NEAR(d2[i], 2.0, 1e-10);
    }
}

TEST(FiniteDifference, InteriorConvergesAtFourthOrder) {
    double err[2];
    for (int k = 0; k < 2; ++k) {
        const double h = 0.05 / (1 << k);
        const std::size_t n = static_cast<std::size_t>(std::lround(1.0 / h)) + 1;
        const auto f = sample([](double x) { return std::sin(3 * x); }, 0.0, h, n);
        const auto d = fd_derivative(f, h, 1, 4);
        const std::size_t mid = n / 2;
        err[k] = std::abs(d[mid] - 3 * std::cos(3 * h * mid));
    }
    EXPECT_GT(observed_order(err[0], err[1]), 3.8);
}

TEST(FiniteDifference, EndpointsAreSecondOrder) {
    double err[2];
    for (int k = 0; k < 2; ++k) {
        const double h = 0.02 / (1 << k);
        const auto f = sample([](double x) { return std::exp(x); }, 0.0, h, 40);
        err[k] = std::abs(fd_derivative(f, h, 1, 4)[0] - 1.0);
    }
    EXPECT_NEAR(observed_order(err[0], err[1]), 2.0, 0.2);
}

TEST(FiniteDifference, TooFewSamplesThrows) {
    std::vector<double> f = {1, 2, 3, 4};
    EXPECT_THROW(fd_derivative(f, 0.1, 1, 4), InvalidArgument);
    EXPECT_THROW(fd_derivative(f, 0.1, 3, 2), InvalidArgument);
    EXPECT_NO_THROW(fd_derivative(f, 0.1, 1, 2));
}

TEST(Richardson, RemovesLeadingTerm) {
    // F(h) = 1 + h^2
    EXPECT_NEAR(richardson(1 + 0.04, 1 + 0.01, 2), 1.0, 1e-15);
    EXPECT_NEAR(observed_order(16.0, 1.0), 4.0, 1e-15);
}

// Unit-speed rotation: one revolution in N steps, radius drift O(h^4) per revolution.
TEST(Rk4, CircleDriftFourthOrder) {
    auto field = [](const Vec2& p) -> Vec2 { return Vec2(-p.y(), p.x()) / p.norm(); };
    double err[2];
    for (int k = 0; k < 2; ++k) {
        const int n = 64 << k;
        const double h = 2 * M_PI / n;
        Vec2 y(1.0, 0.0);
        for (int i = 0; i < n; ++i) y = rk4_step(field, y, h);
        err[k] = (y - Vec2(1.0, 0.0)).norm();
    }
    EXPECT_GT(observed_order(err[0], err[1]), 3.5);
}

TEST(Rk4, NonlinearFieldOrder) {
    // dy/dt = (y2, -sin y1): pendulum; reference by a much finer run.
    auto field = [](const Vec2& p) { return Vec2(p.y(), -std::sin(p.x())); };
    auto run = [&](int n) {
        Vec2 y(1.0, 0.0);
        const double h = 2.0 / n;
        for (int i = 0; i < n; ++i) y = rk4_step(field, y, h);
        return y;
    };
    const Vec2 ref = run(20000);
    const double e1 = (run(50) - ref).norm(), e2 = (run(100) - ref).norm();
    EXPECT_GT(observed_order(e1, e2), 3.5);
}

TEST(Rk4, AddsStageContext) {
    auto field = [](const Vec2& p) -> Vec2 {
        if (p.x() > 0.05) throw Error("outside");
        return Vec2(1, 0);
    };
    try {
        rk4_step(field, Vec2(0, 0), 0.2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("rk4 stage 2"), std::string::npos);
    }
}

TEST(Spline, ReproducesCubicWhenClamped) {
    std::vector<double> x, y;
    auto f = [](double t) { return 2 * t * t * t - t * t + 3 * t - 1; };
    auto df = [](double t) { return 6 * t * t - 2 * t + 3; };
    for (int i = 0; i <= 7; ++i) {
        const double t = -1.0 + 0.3 * i + 0.01 * i * i;
        x.push_back(t);
        y.push_back(f(t));
    }
    CubicSpline s(x, y, df(x.front()), df(x.back()));
    for (double t = x.front(); t <= x.back(); t += 0.037) {
        EXPECT_NEAR(s(t), f(t), 1e-12);
        EXPECT_NEAR(s.derivative(t), df(t), 1e-11);
        EXPECT_NEAR(s.second_derivative(t), 12 * t - 2, 1e-10);
    }
}

TEST(Spline, NaturalInterpolatesKnotsAndHasZeroEndCurvature) {
    std::vector<double> x = {0, 1, 2, 3, 4}, y = {0, 1, 0, 1, 0};
    CubicSpline s(x, y);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(s(x[i]), y[i], 1e-14);
    EXPECT_NEAR(s.second_derivative(0.0), 0.0, 1e-14);
    EXPECT_NEAR(s.second_derivative(4.0), 0.0, 1e-14);
}

TEST(Spline, FourthOrderInterpolation) {
    double err[2];
    for (int k = 0; k < 2; ++k) {
        const int n = 20 << k;
        std::vector<double> x, y;
        for (int i = 0; i <= n; ++i) {
            x.push_back(static_cast<double>(i) / n);
            y.push_back(std::sin(4 * x.back()));
        }
        CubicSpline s(x, y, 4.0, 4 * std::cos(4.0));
        double e = 0;
        for (int i = 0; i < n; ++i) {
            const double t = (i + 0.5) / n;
            e = std::max(e, std::abs(s(t) - std::sin(4 * t)));
        }
        err[k] = e;
    }
    EXPECT_GT(observed_order(err[0], err[1]), 3.7);
}

TEST(Spline, RejectsBadKnots) {
    EXPECT_THROW(CubicSpline({0, 1, 2}, {0, 1, 2}), InvalidArgument);
    EXPECT_THROW(CubicSpline({0, 1, 1, 2}, {0, 1, 2, 3}), InvalidArgument);
}

// Random symmetric matrices: A e = lambda e, orthonormal, lambda1 >= lambda2.
TEST(SymEig2, RandomMatricesReconstruct) {
    std::mt19937_64 rng(20261016);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int t = 0; t < 100000; ++t) {
        const double a = u(rng), b = u(rng), c = u(rng);
        const auto e = sym_eig2(a, b, c);
        ASSERT_FALSE(e.degenerate);
        Eigen::Matrix2d m;
        m << a, b, b, c;
        const double scale = std::max({std::abs(a), std::abs(b), std::abs(c)});
        ASSERT_GE(e.lambda1, e.lambda2);
        ASSERT_NEAR((m * e.e1 - e.lambda1 * e.e1).norm(), 0.0, 1e-12 * scale);
        ASSERT_NEAR((m * e.e2 - e.lambda2 * e.e2).norm(), 0.0, 1e-12 * scale);
        ASSERT_NEAR(e.e1.dot(e.e2), 0.0, 1e-14);
        ASSERT_NEAR(e.e1.norm(), 1.0, 1e-14);
    }
}

TEST(SymEig2, DegenerateFlag) {
    EXPECT_TRUE(sym_eig2(2.0, 0.0, 2.0).degenerate);
    EXPECT_TRUE(sym_eig2(0.0, 0.0, 0.0).degenerate);
    EXPECT_FALSE(sym_eig2(2.0, 1e-6, 2.0).degenerate);
}
