#include "gaussbm/entropy_flow.hpp"
#include "gaussbm/quadrature.hpp"
#include "gaussbm/transport.hpp"

#include "generators.hpp"

#include <doctest.h>

#include <array>
#include <cmath>
#include <sstream>

using namespace gbm;

namespace {

BrenierMap linear_1d(double s)
{
    return BrenierMap::linear(SpdMatrix::scalar(1, s));
}

BrenierMap truncated_map(double a)
{
    return brenier_from_gaussian(EvenStrongLogConcave::truncated_gaussian(SymmetricBody::interval(a)));
}

//! Closed-form curve of a scalar linear pair, independent of the library
struct LinearCurve
{
    double s0;
    double s1;
    double m(double t) const { return (1 - t) * s0 + t * s1; }
    double d(double t) const { return 0.5 * (m(t) * m(t) - 1 - 2 * std::log(m(t))); }
    double d1(double t) const { return (s1 - s0) * (m(t) - 1 / m(t)); }
    double d2(double t) const { return (s1 - s0) * (s1 - s0) * (1 + 1 / (m(t) * m(t))); }
};

}  // namespace

TEST_CASE("closed-form fixture of the linear pair")
{
    auto const ctx = WeightedContext::gaussian(1);
    Coupling const c(linear_1d(0.5), linear_1d(0.8));
    LinearCurve const ref{0.5, 0.8};

    auto const fm = flow_moments(ctx, c, 0.5);
    CHECK(fm.entropy.method == IntegrationMethod::closed_form);
    CHECK(fm.entropy.value == doctest::Approx(ref.d(0.5)).epsilon(1e-14));
    CHECK(fm.entropy.value == doctest::Approx(0.1420330).epsilon(1e-6));
    CHECK(-fm.l.value == doctest::Approx(ref.d1(0.5)).epsilon(1e-14));
    CHECK(-fm.l.value == doctest::Approx(-0.2665385).epsilon(1e-6));
    CHECK(fm.curvature.value == doctest::Approx(ref.d2(0.5)).epsilon(1e-14));
    CHECK(fm.curvature.value == doctest::Approx(0.3030178).epsilon(1e-6));
    CHECK(fm.speed.value == doctest::Approx(0.09).epsilon(1e-14));

    double const gap = ref.d2(0.5) - 2 * 0.09 - ref.d1(0.5) * ref.d1(0.5);
    CHECK(fm.local_gap.value == doctest::Approx(gap).epsilon(1e-12));
    CHECK(std::abs(fm.local_gap.value - 0.0519748) <= 1e-6);
    CHECK(local_inequality_gap(ctx, c, 0.5).value == doctest::Approx(gap).epsilon(1e-12));
}

TEST_CASE("integration methods agree on a linear pair")
{
    auto const ctx = WeightedContext::gaussian(1);
    Coupling const c(linear_1d(0.5), linear_1d(0.8));
    for (double t : {0.0, 0.3, 0.5, 1.0})
    {
        auto const cf = flow_moments(ctx, c, t, {IntegrationMethod::closed_form});
        auto const q = flow_moments(ctx, c, t, {IntegrationMethod::quadrature});
        CHECK(q.entropy.value == doctest::Approx(cf.entropy.value).epsilon(1e-9));
        CHECK(q.l.value == doctest::Approx(cf.l.value).epsilon(1e-9));
        CHECK(q.curvature.value == doctest::Approx(cf.curvature.value).epsilon(1e-9));
        auto const mc = flow_moments(ctx, c, t, {IntegrationMethod::monte_carlo, 200000, 4});
        CHECK(std::abs(mc.entropy.value - cf.entropy.value) <= 4 * mc.entropy.std_error + 1e-12);
        CHECK(std::abs(mc.local_gap.value - cf.local_gap.value) <= 4 * mc.local_gap.std_error + 1e-12);
    }
}

TEST_CASE("quadrature and monte carlo agree on truncated pairs")
{
    auto const ctx = WeightedContext::gaussian(1);
    Coupling const c(truncated_map(1), truncated_map(2));
    auto const q = flow_moments(ctx, c, 0.4, {IntegrationMethod::quadrature});
    auto const mc = flow_moments(ctx, c, 0.4, {IntegrationMethod::monte_carlo, 400000, 9});
    CHECK(std::abs(mc.entropy.value - q.entropy.value) <= 4 * mc.entropy.std_error);
    CHECK(std::abs(mc.l.value - q.l.value) <= 4 * mc.l.std_error);
    CHECK(std::abs(mc.curvature.value - q.curvature.value) <= 4 * mc.curvature.std_error);
    CHECK(mc.local_gap.value >= -3 * mc.local_gap.std_error);
    CHECK(q.local_gap.value >= -1e-8);
}

TEST_CASE("restriction entropy at the endpoint")
{
    Coupling const c(truncated_map(1), truncated_map(1));
    double const oracle = -std::log(gbm::testing::erf_interval(-1, 1));
    CHECK(pushforward_entropy(c, 0).value == doctest::Approx(oracle).epsilon(1e-8));
    CHECK(oracle == doctest::Approx(0.3816).epsilon(1e-4));
    Coupling const id(BrenierMap::identity(2), BrenierMap::identity(2));
    CHECK(std::abs(pushforward_entropy(id, 0.3).value) <= 1e-15);
    CHECK(entropy_first_derivative(WeightedContext::gaussian(2), id, 0.3).value == 0);
}

TEST_CASE("derivative symmetry under reversal")
{
    auto const ctx = WeightedContext::gaussian(1);
    Coupling const fwd(truncated_map(0.5), truncated_map(2));
    Coupling const rev(truncated_map(2), truncated_map(0.5));
    for (double t : {0.2, 0.5, 0.9})
    {
        double const a = entropy_first_derivative(ctx, fwd, t).value;
        double const b = entropy_first_derivative(ctx, rev, 1 - t).value;
        CHECK(a == doctest::Approx(-b).epsilon(1e-9));
    }
}

TEST_CASE("analytic derivatives match finite differences")
{
    auto const ctx = WeightedContext::gaussian(1);
    std::array<double, 5> const grid{0.0, 0.25, 0.5, 0.75, 1.0};
    for (auto const& c : {Coupling(linear_1d(0.5), linear_1d(0.8)),
                          Coupling(truncated_map(0.5), truncated_map(2)),
                          Coupling(brenier_from_gaussian(EvenStrongLogConcave::one_d(quartic_potential(1.0))),
                                   linear_1d(0.7))})
    {
        auto const r = entropy_curve(ctx, c, grid);
        CHECK(r.fd_points_skipped == 0);
        CHECK(r.worst_first_fd_error <= 1e-5);
        CHECK(r.worst_second_fd_error <= 1e-4);
        CHECK(r.min_plain_gap >= -1e-6);
        CHECK(r.worst_concavity_defect <= 1e-9);
    }
}

TEST_CASE("finite differences skip endpoints with a degenerate jacobian")
{
    // slopes of the truncated map vanish in the source tails while the
    // quartic map keeps slopes near 0.2, so D diverges at t = 1 only
    auto const ctx = WeightedContext::gaussian(1);
    std::array<double, 5> const grid{0.0, 0.25, 0.5, 0.75, 1.0};
    Coupling const c(brenier_from_gaussian(EvenStrongLogConcave::one_d(quartic_potential(0.5))),
                     truncated_map(1));
    CHECK(jacobian_ratio_bound(c, 1.0) > 1e6);
    CHECK(jacobian_ratio_bound(c, 0.75) <= 4);
    auto const r = entropy_curve(ctx, c, grid);
    CHECK(r.fd_points_skipped == 1);
    CHECK(r.worst_first_fd_error <= 1e-5);
    CHECK(r.worst_second_fd_error <= 1e-4);

    Coupling const lin(linear_1d(0.5), linear_1d(0.8));
    CHECK(jacobian_ratio_bound(lin, 0.0) == doctest::Approx(0.6));
    CHECK(entropy_curve(ctx, lin, grid).fd_points_skipped == 0);
}

TEST_CASE("gaussian pairs satisfy the entropic inequality")
{
    CounterRng rng(41);
    for (int trial = 0; trial < 60; ++trial)
    {
        int const n = 1 + static_cast<int>(rng.uniform() * 6);
        auto const a = gbm::testing::random_spd(rng, n, 0.05, 1.0);
        auto const b = gbm::testing::random_spd(rng, n, 0.05, 1.0);
        Coupling const c(brenier_from_gaussian(EvenStrongLogConcave::gaussian(a)),
                         brenier_from_gaussian(EvenStrongLogConcave::gaussian(b)));
        std::array<double, 3> const grid{0.1, 0.5, 0.9};
        auto const r = entropy_curve(WeightedContext::gaussian(n), c, grid);
        // theta^2 is tr((A^{1/2} - B^{1/2})^2)
        Eigen::MatrixXd const d = gbm::testing::reference_sqrt(a.matrix()) - gbm::testing::reference_sqrt(b.matrix());
        CHECK(r.theta * r.theta == doctest::Approx((d * d).trace()).epsilon(1e-10));
        for (std::size_t i = 0; i < grid.size(); ++i)
        {
            CHECK(r.plain_gap[i] >= -1e-10);
            CHECK(r.sigma_gap[i] >= -1e-10);
            CHECK(r.sigma_gap[i] <= r.plain_gap[i] + 1e-15);
            CHECK(r.local_gap[i] >= -1e-8);
        }
    }
}

TEST_CASE("identical endpoints give a flat curve")
{
    auto const s = SpdMatrix::scalar(2, 0.25);
    Coupling const c(BrenierMap::linear(spd_sqrt(s)), BrenierMap::linear(spd_sqrt(s)));
    std::array<double, 4> const grid{0.0, 0.3, 0.6, 1.0};
    auto const r = entropy_curve(WeightedContext::gaussian(2), c, grid);
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
        CHECK(std::abs(r.plain_gap[i]) <= 1e-12);
        CHECK(std::abs(r.sigma_gap[i]) <= 1e-12);
        CHECK(std::abs(r.first_derivative_analytic[i]) <= 1e-12);
        CHECK(r.entropy[i] == doctest::Approx(r.entropy[0]).epsilon(1e-15));
    }
}

TEST_CASE("local inequality requires contractions")
{
    Coupling const c(linear_1d(2.0), linear_1d(0.5));
    CHECK_THROWS_AS(local_inequality_gap(WeightedContext::gaussian(1), c, 0.5), std::domain_error);
    std::array<double, 0> const empty{};
    CHECK_THROWS_AS(entropy_curve(WeightedContext::gaussian(1), c, empty), std::invalid_argument);
}

TEST_CASE("entropy curve csv has ten columns")
{
    Coupling const c(linear_1d(0.5), linear_1d(0.8));
    std::array<double, 3> const grid{0.25, 0.5, 0.75};
    auto const r = entropy_curve(WeightedContext::gaussian(1), c, grid);
    std::ostringstream os;
    write_entropy_curve_csv(r, os);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,D,dD_analytic,dD_fd,d2D_analytic,d2D_fd,l,local_gap,plain_gap,sigma_gap");
    int rows = 0;
    while (std::getline(in, line))
    {
        CHECK(std::count(line.begin(), line.end(), ',') == 9);
        ++rows;
    }
    CHECK(rows == 3);
}

TEST_CASE("weighted bochner identity")
{
    auto const ctx = WeightedContext::gaussian(1);
    VectorField id;
    id.n = 1;
    id.label = "x";
    id.value = [](Eigen::VectorXd const& x) { return x; };
    id.jacobian = [](Eigen::VectorXd const&) { return Eigen::MatrixXd::Identity(1, 1); };
    id.hessians = [](Eigen::VectorXd const&) { return std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Zero(1, 1)}; };
    auto const b = bochner_identity_check(ctx, id, Eigen::VectorXd::Constant(1, 2.0));
    CHECK(b.lhs == doctest::Approx(5).epsilon(1e-15));
    CHECK(b.rhs == doctest::Approx(5).epsilon(1e-15));
    CHECK(std::abs(b.residual) <= 1e-14);

    CounterRng rng(42);
    for (int n : {1, 2, 3})
    {
        std::vector<WeightedContext> ctxs{WeightedContext::gaussian(n),
                                          WeightedContext::separable(n, quartic_potential(0.5))};
        for (auto const& w : ctxs)
        {
            for (auto const& field : standard_test_fields(n))
            {
                auto bare = field;
                bare.jacobian = nullptr;
                bare.hessians = nullptr;
                for (int k = 0; k < 5; ++k)
                {
                    Eigen::VectorXd const x = gbm::testing::normal_vector(rng, n);
                    auto const exact = bochner_identity_check(w, field, x);
                    CHECK(std::abs(exact.residual) <= 1e-8);
                    CHECK_FALSE(exact.finite_differences);
                    auto const fd = bochner_identity_check(w, bare, x);
                    CHECK(fd.finite_differences);
                    CHECK(std::abs(fd.residual) <= 1e-4 * (1 + std::abs(fd.lhs)));
                }
            }
        }
    }
}

TEST_CASE("trace chain for contractions of the inverse")
{
    CounterRng rng(43);
    for (int trial = 0; trial < 2000; ++trial)
    {
        int const n = 1 + static_cast<int>(rng.uniform() * 6);
        Eigen::MatrixXd const a = gbm::testing::random_symmetric(rng, n, -3, 3);
        Eigen::MatrixXd const b = gbm::testing::random_symmetric(rng, n, 1, 5);
        auto const tc = trace_chain(a, b);
        CHECK(tc.ab_squared == doctest::Approx((a * b * a * b).trace()).epsilon(1e-12));
        CHECK(tc.ab_squared >= tc.a2b - 1e-10);
        CHECK(tc.a2b >= tc.a2 - 1e-10);
    }
}
