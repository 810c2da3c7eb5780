#include "gaussbm/transport.hpp"
#include "gaussbm/quadrature.hpp"

#include "generators.hpp"

#include <doctest.h>

#include <array>
#include <cmath>
#include <memory>

using namespace gbm;

namespace {

BrenierMap linear_1d(double s)
{
    return BrenierMap::linear(SpdMatrix::scalar(1, s));
}

Eigen::VectorXd v1(double x)
{
    return Eigen::VectorXd::Constant(1, x);
}

}  // namespace

TEST_CASE("gaussian targets give linear maps")
{
    auto const id = brenier_from_gaussian(EvenStrongLogConcave::gaussian(SpdMatrix::identity(2)));
    Eigen::Vector2d const x(0.3, -1.2);
    CHECK((id.apply(x) - x).norm() <= 1e-15);

    CounterRng rng(31);
    auto const cov = gbm::testing::random_spd(rng, 3, 0.1, 1.0);
    auto const m = brenier_from_gaussian(EvenStrongLogConcave::gaussian(cov));
    REQUIRE(m.as_linear());
    Eigen::MatrixXd const ref = gbm::testing::reference_sqrt(cov.matrix());
    CHECK((m.jacobian(Eigen::Vector3d::Zero()) - ref).norm() <= 1e-12);
}

TEST_CASE("monotone rearrangement of a gaussian matches the linear map")
{
    auto const tab = std::make_shared<EvenCdf1D const>([](double x) { return -2 * x * x; }, 10);
    Monotone1D const m(tab);
    for (int i = 0; i <= 200; ++i)
    {
        double const x = -5 + 10 * i / 200.0;
        CHECK(std::abs(m.apply(x) - 0.5 * x) <= 1e-8);
        CHECK(std::abs(m.derivative(x) - 0.5) <= 1e-7);
    }
}

TEST_CASE("truncated gaussian map")
{
    auto const target = EvenStrongLogConcave::truncated_gaussian(SymmetricBody::interval(1));
    auto const map = brenier_from_gaussian(target);
    double prev = -INFINITY;
    for (int i = 0; i <= 400; ++i)
    {
        double const x = -8 + 16 * i / 400.0;
        double const y = map.apply(v1(x))(0);
        // strictly increasing until the tail saturates at the support edge
        if (std::abs(x) <= 5)
            CHECK(y > prev);
        CHECK(y >= prev);
        CHECK(std::abs(y) <= 1 + 1e-12);
        CHECK(map.apply(v1(-x))(0) == doctest::Approx(-y).epsilon(1e-14));
        prev = y;
        // pushforward: F(T(x)) = Phi(x)
        if (std::abs(x) <= 5)
            CHECK(std::abs(cdf_1d(target, y) - quad::normal_cdf(x)) <= 1e-8);
    }
    auto const cert = lipschitz_certificate(map);
    CHECK(cert.max_slope <= 1 + 1e-8);
    CHECK(cert.min_slope > 0);
    CHECK_THROWS_AS(map.inverse(v1(1.5)), std::runtime_error);
    for (double y : {-0.9, -0.1, 0.0, 0.5, 0.99})
        CHECK(map.apply(map.inverse(v1(y)))(0) == doctest::Approx(y).epsilon(1e-10));
}

TEST_CASE("strongly log-concave targets give contractions")
{
    for (double lam : {0.1, 1.0, 10.0})
    {
        auto const map = brenier_from_gaussian(EvenStrongLogConcave::one_d(quartic_potential(lam)));
        CHECK(lipschitz_certificate(map).max_slope <= 1 + 1e-8);
    }
    auto const box = brenier_from_gaussian(
        EvenStrongLogConcave::truncated_gaussian(SymmetricBody::box(Eigen::Vector2d(0.5, 2.0))));
    CHECK(box.separable());
    CHECK(lipschitz_certificate(box).max_slope <= 1 + 1e-8);
    CHECK(lipschitz_certificate(BrenierMap::identity(3)).max_slope == 1);
    CHECK(lipschitz_certificate(BrenierMap::identity(3)).min_slope == 1);
    CHECK(lipschitz_certificate(linear_1d(0.5)).max_slope == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("interpolant of a linear pair")
{
    Coupling const c(linear_1d(0.5), linear_1d(0.8));
    auto const mid = interpolant(c, 0.5);
    CHECK(mid.apply(v1(2.0))(0) == doctest::Approx(1.3).epsilon(1e-15));
    CHECK(mid.jacobian(v1(0.3))(0, 0) == doctest::Approx(0.65).epsilon(1e-15));
    CHECK(mid.log_det(v1(-1.0)) == doctest::Approx(std::log(0.65)).epsilon(1e-14));
    CHECK(interpolant(c, 0).apply(v1(2.0))(0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(mid.inverse(v1(1.3))(0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(velocity_at(c, 0.5, v1(1.0))(0) == doctest::Approx(0.3 / 0.65).epsilon(1e-14));
    CHECK(velocity_at(c, 0.5, v1(1.0))(0) == doctest::Approx(0.4615385).epsilon(1e-7));
    CHECK_THROWS_AS(interpolant(c, 1.5), std::invalid_argument);
}

TEST_CASE("interpolant inverse round trips")
{
    CounterRng rng(32);
    auto const a = gbm::testing::random_spd(rng, 3, 0.2, 1.0);
    auto const b = gbm::testing::random_spd(rng, 3, 0.2, 1.0);
    Coupling const lin(BrenierMap::linear(a), BrenierMap::linear(b));
    auto const sep_target = EvenStrongLogConcave::product({{quartic_potential(1.0), 10}, {quartic_potential(0.2), 10}});
    Coupling const sep(brenier_from_gaussian(sep_target), BrenierMap::identity(2));
    for (double t : {0.0, 0.3, 0.7, 1.0})
    {
        auto const il = interpolant(lin, t);
        auto const is = interpolant(sep, t);
        for (int k = 0; k < 20; ++k)
        {
            Eigen::VectorXd const x3 = gbm::testing::normal_vector(rng, 3);
            CHECK((il.inverse(il.apply(x3)) - x3).norm() <= 1e-10);
            Eigen::VectorXd const x2 = gbm::testing::normal_vector(rng, 2);
            CHECK((is.inverse(is.apply(x2)) - x2).norm() <= 1e-9);
        }
    }
}

TEST_CASE("mean square displacement")
{
    Coupling const c(linear_1d(0.5), linear_1d(0.8));
    CHECK(mean_square_displacement(c).value == doctest::Approx(0.09).epsilon(1e-14));
    Coupling const c2(BrenierMap::linear(SpdMatrix::diagonal(Eigen::Vector2d(0.5, 0.9))),
                      BrenierMap::linear(SpdMatrix::diagonal(Eigen::Vector2d(0.8, 0.9))));
    CHECK(mean_square_displacement(c2).value == doctest::Approx(0.09).epsilon(1e-14));
    Coupling const same(linear_1d(0.7), linear_1d(0.7));
    CHECK(mean_square_displacement(same).value == 0);

    // quadrature against an independent adaptive integral, and Monte Carlo within 3 SE
    auto const t0 = brenier_from_gaussian(EvenStrongLogConcave::truncated_gaussian(SymmetricBody::interval(1)));
    auto const t1 = brenier_from_gaussian(EvenStrongLogConcave::truncated_gaussian(SymmetricBody::interval(2)));
    Coupling const tc(t0, t1);
    auto const q = mean_square_displacement(tc, {IntegrationMethod::quadrature});
    double const oracle = quad::gaussian_expectation([&](double x) {
        double const d = t0.apply(v1(x))(0) - t1.apply(v1(x))(0);
        return d * d;
    }, {}, 1e-11, 10).value;
    CHECK(q.value == doctest::Approx(oracle).epsilon(1e-8));
    auto const mc = mean_square_displacement(tc, {IntegrationMethod::monte_carlo, 200000, 3});
    CHECK(std::abs(mc.value - q.value) <= 3 * mc.std_error);
    CHECK_THROWS_AS(mean_square_displacement(tc, {IntegrationMethod::closed_form}), std::invalid_argument);
}

TEST_CASE("interpolants never cross")
{
    std::array<double, 5> const grid{0.0, 0.25, 0.5, 0.75, 1.0};
    auto const id = no_crossing_check(Coupling(BrenierMap::identity(2), BrenierMap::identity(2)), 200, grid, 1);
    CHECK(id.min_monotonicity == doctest::Approx(1).epsilon(1e-12));

    auto const lin = no_crossing_check(Coupling(linear_1d(0.5), linear_1d(0.8)), 200, grid, 1);
    CHECK(lin.min_monotonicity == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(lin.certified_lambda == doctest::Approx(0.5).epsilon(1e-12));

    auto const t0 = brenier_from_gaussian(EvenStrongLogConcave::truncated_gaussian(SymmetricBody::interval(0.5)));
    auto const t1 = brenier_from_gaussian(EvenStrongLogConcave::truncated_gaussian(SymmetricBody::interval(2)));
    auto const tr = no_crossing_check(Coupling(t0, t1), 500, grid, 2);
    CHECK(tr.certified_lambda > 0);
    CHECK(tr.min_monotonicity >= tr.certified_lambda - 1e-12);

    Coupling const same(linear_1d(0.6), linear_1d(0.6));
    CHECK(velocity_at(same, 0.4, v1(0.9))(0) == 0);
}
