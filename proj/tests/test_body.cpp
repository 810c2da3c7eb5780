#include "gaussbm/body.hpp"

#include "generators.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace gbm;
using gbm::testing::normal_vector;
using gbm::testing::uniform_in;

namespace {

std::vector<SymmetricBody> sample_bodies()
{
    Eigen::MatrixXd shape(2, 2);
    shape << 2.0, 0.6, 0.6, 1.0;
    Eigen::MatrixXd normals(3, 2);
    normals << 1, 0, 0, 1, 1, 1;
    Eigen::MatrixXd shape3 = Eigen::Vector3d(1.0, 0.5, 2.0).asDiagonal();
    return {SymmetricBody::interval(1.3),
            SymmetricBody::box(Eigen::Vector2d(1.0, 2.0)),
            SymmetricBody::ellipsoid(SpdMatrix(shape)),
            SymmetricBody::ellipsoid(SpdMatrix(shape3)),
            SymmetricBody::pnorm_ball(2, 1, 1.5),
            SymmetricBody::pnorm_ball(3, 2, 0.8),
            SymmetricBody::pnorm_ball(2, 3, 1.0),
            SymmetricBody::pnorm_ball(2, INFINITY, 0.7),
            SymmetricBody::hpolytope(normals, Eigen::Vector3d(1.0, 1.0, 1.5))};
}

}  // namespace

TEST_CASE("construction rejects invalid bodies")
{
    CHECK_THROWS_AS(SymmetricBody::interval(0), std::invalid_argument);
    CHECK_THROWS_AS(SymmetricBody::box(Eigen::Vector2d(1, -1)), std::invalid_argument);
    CHECK_THROWS_AS(SymmetricBody::pnorm_ball(2, 0.5, 1), std::invalid_argument);
    Eigen::MatrixXd rank_deficient(2, 2);
    rank_deficient << 1, 0, 2, 0;
    CHECK_THROWS_AS(SymmetricBody::hpolytope(rank_deficient, Eigen::Vector2d(1, 1)),
                    std::invalid_argument);
}

TEST_CASE("membership is symmetric and projection lands in the body")
{
    CounterRng rng(21);
    for (auto const& k : sample_bodies())
    {
        int const n = k.dimension();
        for (int trial = 0; trial < 300; ++trial)
        {
            Eigen::VectorXd const x = 2 * normal_vector(rng, n);
            CHECK(k.contains(x) == k.contains(-x));
            Eigen::VectorXd const px = k.project(x);
            // projected points sit inside up to a tiny outward slack
            CHECK(k.contains(px * (1 - 1e-7)));
            if (k.contains(x))
                CHECK((px - x).norm() <= 1e-9);
            // projection is idempotent
            CHECK((k.project(px) - px).norm() <= 1e-7);
        }
    }
}

TEST_CASE("projection satisfies the obtuse-angle criterion")
{
    CounterRng rng(22);
    for (auto const& k : sample_bodies())
    {
        int const n = k.dimension();
        INFO(k.describe());
        for (int trial = 0; trial < 60; ++trial)
        {
            Eigen::VectorXd const x = 3 * normal_vector(rng, n);
            Eigen::VectorXd const px = k.project(x);
            for (int s = 0; s < 30; ++s)
            {
                Eigen::VectorXd const y = k.project(2 * normal_vector(rng, n));
                CHECK((x - px).dot(y - px) <= 1e-6 * (1 + (x - px).norm()));
            }
        }
    }
}

TEST_CASE("support function dominates sampled points and is attained")
{
    CounterRng rng(23);
    for (auto const& k : sample_bodies())
    {
        int const n = k.dimension();
        for (int trial = 0; trial < 40; ++trial)
        {
            Eigen::VectorXd u = normal_vector(rng, n);
            u.normalize();
            double const h = k.support(u);
            CHECK(h > 0);
            CHECK(k.support(-u) == doctest::Approx(h).epsilon(1e-12));
            // the projection of a far point along u nearly attains h(u)
            Eigen::VectorXd const far = k.project(1e4 * u);
            CHECK(far.dot(u) <= h + 1e-9);
            CHECK(far.dot(u) >= h - 1e-3 * h);
            for (int s = 0; s < 20; ++s)
            {
                Eigen::VectorXd const y = k.project(3 * normal_vector(rng, n));
                CHECK(y.dot(u) <= h + 1e-7);
            }
        }
    }
}

TEST_CASE("inradius ball lies inside")
{
    CounterRng rng(24);
    for (auto const& k : sample_bodies())
    {
        double const r = k.inradius();
        CHECK(r > 0);
        for (int trial = 0; trial < 200; ++trial)
        {
            Eigen::VectorXd u = normal_vector(rng, k.dimension());
            u.normalize();
            CHECK(k.contains(u * r * (1 - 1e-9)));
            CHECK(k.support(u) >= r * (1 - 1e-12));
        }
    }
}

TEST_CASE("l1 ball projection matches brute force in 2-D")
{
    CounterRng rng(25);
    for (int trial = 0; trial < 100; ++trial)
    {
        Eigen::VectorXd const x = 2 * normal_vector(rng, 2);
        double const r = uniform_in(rng, 0.2, 2);
        Eigen::VectorXd const p = project_l1_ball(x, r);
        CHECK(p.lpNorm<1>() <= r * (1 + 1e-12));
        // brute force over the boundary and interior grid
        double best = (x - p).norm();
        for (int i = 0; i <= 2000; ++i)
        {
            double const s = -r + 2 * r * i / 2000.0;
            for (double sign : {-1.0, 1.0})
            {
                Eigen::Vector2d y(s, sign * (r - std::abs(s)));
                CHECK((x - y).norm() >= best - 1e-9);
            }
        }
        if (x.lpNorm<1>() <= r)
            CHECK(best == 0);
    }
}

TEST_CASE("exact gaussian measures")
{
    using gbm::testing::erf_interval;
    auto const m = SymmetricBody::interval(1).exact_gaussian_measure();
    REQUIRE(m);
    CHECK(*m == doctest::Approx(erf_interval(-1, 1)).epsilon(1e-15));
    CHECK(-std::log(*m) == doctest::Approx(0.381715146).epsilon(1e-9));
    CHECK(*SymmetricBody::interval(2).exact_gaussian_measure() == doctest::Approx(0.9544997).epsilon(1e-7));
    CHECK(*SymmetricBody::box(Eigen::Vector2d(1, 2)).exact_gaussian_measure()
          == doctest::Approx(erf_interval(-1, 1) * erf_interval(-2, 2)).epsilon(1e-14));
    CHECK(gaussian_box_measure(Eigen::VectorXd::Constant(1, 2.5), Eigen::VectorXd::Constant(1, 3.5))
          == doctest::Approx(erf_interval(2.5, 3.5)).epsilon(1e-12));
    // far tails keep relative accuracy
    double const tail = gaussian_box_measure(Eigen::VectorXd::Constant(1, 10), Eigen::VectorXd::Constant(1, 11));
    CHECK(tail == doctest::Approx(0.5 * (std::erfc(10 / std::sqrt(2.0)) - std::erfc(11 / std::sqrt(2.0)))).epsilon(1e-12));
    CHECK_FALSE(SymmetricBody::pnorm_ball(2, 2, 1).exact_gaussian_measure());
    CHECK(SymmetricBody::pnorm_ball(2, INFINITY, 1).as_box());
}

TEST_CASE("body equality and description")
{
    CHECK(SymmetricBody::interval(1) == SymmetricBody::box(Eigen::VectorXd::Constant(1, 1)));
    CHECK_FALSE(SymmetricBody::interval(1) == SymmetricBody::interval(2));
    CHECK_FALSE(SymmetricBody::interval(1).describe().empty());
}
