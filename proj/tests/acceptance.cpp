// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "gaussbm/entropy_flow.hpp"
#include "gaussbm/functional.hpp"
#include "gaussbm/geometry.hpp"
#include "gaussbm/transport.hpp"

#include "generators.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

using namespace gbm;
using gbm::testing::erf_interval;
using gbm::testing::random_spd;
using gbm::testing::uniform_in;

namespace {

struct Outcome
{
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, char const* title, double time_limit_s, std::function<Outcome()> const& body)
{
    auto const start = std::chrono::steady_clock::now();
    Outcome o;
    try
    {
        o = body();
    }
    catch (std::exception const& e)
    {
        o = {false, std::string("exception: ") + e.what()};
    }
    double const secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool const in_time = time_limit_s <= 0 || secs < time_limit_s;
    bool const pass = o.pass && in_time;
    failures += !pass;
    std::string timing = fmt::format("{:.2f} s", secs);
    if (time_limit_s > 0)
        timing += fmt::format(" of {:.0f} s", time_limit_s);
    fmt::print("{} {:2d} {}: {} [{}]\n", pass ? "PASS" : "FAIL", id, title, o.detail, timing);
    std::fflush(stdout);
}

std::array<double, 9> const kInterior{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};

Coupling gaussian_coupling(SpdMatrix const& a, SpdMatrix const& b)
{
    return Coupling(brenier_from_gaussian(EvenStrongLogConcave::gaussian(a)),
                    brenier_from_gaussian(EvenStrongLogConcave::gaussian(b)));
}

//! Random covariance pairs with A, B below the identity, dimensions 1..6
struct GaussianSuite
{
    std::vector<SpdMatrix> a, b;
};

GaussianSuite gaussian_suite(int count, std::uint64_t seed)
{
    CounterRng rng(seed);
    GaussianSuite s;
    for (int k = 0; k < count; ++k)
    {
        int const n = 1 + k % 6;
        s.a.push_back(random_spd(rng, n, 0.05, 1.0));
        s.b.push_back(random_spd(rng, n, 0.05, 1.0));
    }
    return s;
}

EntropyCurveReport closed_curve(Coupling const& c, std::span<double const> grid)
{
    return entropy_curve(WeightedContext::gaussian(c.t0.dimension()), c, grid,
                         {IntegrationMethod::closed_form});
}

EvenStrongLogConcave truncated(double h)
{
    return EvenStrongLogConcave::truncated_gaussian(SymmetricBody::interval(h));
}

EvenStrongLogConcave quartic(double lambda)
{
    return EvenStrongLogConcave::one_d(quartic_potential(lambda));
}

//! The one-dimensional non-Gaussian pairs
std::vector<std::pair<std::string, Coupling>> one_d_pairs()
{
    std::vector<std::pair<std::string, Coupling>> out;
    for (double a : {0.5, 1.0, 2.0})
        for (double b : {0.5, 1.0, 2.0})
            out.emplace_back(fmt::format("trunc({})~trunc({})", a, b),
                             Coupling(brenier_from_gaussian(truncated(a)), brenier_from_gaussian(truncated(b))));
    out.emplace_back("quartic(0.1)~quartic(1)",
                     Coupling(brenier_from_gaussian(quartic(0.1)), brenier_from_gaussian(quartic(1.0))));
    out.emplace_back("quartic(1)~gauss(0.5)",
                     Coupling(brenier_from_gaussian(quartic(1.0)),
                              brenier_from_gaussian(EvenStrongLogConcave::gaussian(SpdMatrix::scalar(1, 0.5)))));
    out.emplace_back("quartic(0.1)~trunc(1)",
                     Coupling(brenier_from_gaussian(quartic(0.1)), brenier_from_gaussian(truncated(1.0))));
    return out;
}

SymmetricBody ellipse2()
{
    Eigen::MatrixXd m(2, 2);
    m << 2.0, 0.9, 0.9, 0.6;
    return SymmetricBody::ellipsoid(SpdMatrix(m));
}

SymmetricBody ellipsoid3()
{
    Eigen::MatrixXd m = Eigen::Vector3d(3.0, 0.2, 1.0).asDiagonal();
    return SymmetricBody::ellipsoid(SpdMatrix(m));
}

}  // namespace

int main()
{
    criterion(1, "gaussian entropic inequality", 5, [] {
        auto const s = gaussian_suite(500, 101);
        double worst = INFINITY;
        for (std::size_t k = 0; k < s.a.size(); ++k)
        {
            auto const r = closed_curve(gaussian_coupling(s.a[k], s.b[k]), kInterior);
            worst = std::min(worst, *std::min_element(r.plain_gap.begin(), r.plain_gap.end()));
        }
        return Outcome{worst >= -1e-10, fmt::format("500 pairs, n in 1..6, min plain_gap {:.3e}", worst)};
    });

    criterion(2, "curvature-strengthened bound", 5, [] {
        auto const s = gaussian_suite(500, 101);
        double worst = INFINITY, worst_order = -INFINITY;
        for (std::size_t k = 0; k < s.a.size(); ++k)
        {
            auto const r = closed_curve(gaussian_coupling(s.a[k], s.b[k]), kInterior);
            // theta^2 = tr((A^1/2 - B^1/2)^2), computed independently
            Eigen::MatrixXd const d = gbm::testing::reference_sqrt(s.a[k].matrix())
                                      - gbm::testing::reference_sqrt(s.b[k].matrix());
            if (std::abs(r.theta * r.theta - (d * d).trace()) > 1e-12)
                return Outcome{false, fmt::format("theta mismatch at pair {}", k)};
            for (std::size_t i = 0; i < kInterior.size(); ++i)
            {
                worst = std::min(worst, r.sigma_gap[i]);
                worst_order = std::max(worst_order, r.sigma_gap[i] - r.plain_gap[i]);
            }
        }
        return Outcome{worst >= -1e-10 && worst_order <= 1e-12,
                       fmt::format("min sigma_gap {:.3e}, max (sigma_gap - plain_gap) {:.3e}", worst, worst_order)};
    });

    criterion(3, "equality characterization", 0, [] {
        std::array<double, 11> grid{};
        for (int i = 0; i <= 10; ++i)
            grid[i] = i / 10.0;
        CounterRng rng(103);
        double worst_equal = 0;
        for (int k = 0; k < 100; ++k)
        {
            auto const a = random_spd(rng, 1 + k % 6, 0.05, 1.0);
            auto const r = closed_curve(gaussian_coupling(a, a), grid);
            for (double g : r.plain_gap)
                worst_equal = std::max(worst_equal, std::abs(g));
        }
        double min_strict = INFINITY;
        int accepted = 0;
        while (accepted < 100)
        {
            int const n = 1 + accepted % 6;
            auto const a = random_spd(rng, n, 0.05, 1.0);
            auto const b = random_spd(rng, n, 0.05, 1.0);
            Eigen::MatrixXd const d = gbm::testing::reference_sqrt(a.matrix())
                                      - gbm::testing::reference_sqrt(b.matrix());
            if (d.norm() < 0.05)
                continue;
            ++accepted;
            auto const r = closed_curve(gaussian_coupling(a, b), kInterior);
            min_strict = std::min(min_strict, *std::min_element(r.plain_gap.begin(), r.plain_gap.end()));
        }
        return Outcome{worst_equal <= 1e-12 && min_strict > 0,
                       fmt::format("max |gap| for A = B {:.3e}; min gap over 100 distinct pairs {:.3e}",
                                   worst_equal, min_strict)};
    });

    criterion(4, "one-dimensional non-gaussian pipeline", 60, [] {
        double worst = INFINITY;
        std::string where;
        IntegrationSpec const q{IntegrationMethod::quadrature};
        for (auto const& [name, c] : one_d_pairs())
        {
            double const d0 = pushforward_entropy(c, 0, q).value;
            double const d1 = pushforward_entropy(c, 1, q).value;
            for (double t : {0.25, 0.5, 0.75})
            {
                double const dt = pushforward_entropy(c, t, q).value;
                double const theta = std::sqrt(mean_square_displacement(c, q).value);
                double const g = entropic_bm_gaps(d0, d1, dt, t, 1, theta).plain_gap;
                if (g < worst)
                {
                    worst = g;
                    where = fmt::format("{} t={}", name, t);
                }
            }
        }
        return Outcome{worst >= -1e-6, fmt::format("12 pairs, min plain_gap {:.3e} at {}", worst, where)};
    });

    criterion(5, "derivative identities and bochner formula", 0, [] {
        std::array<double, 3> const grid{0.25, 0.5, 0.75};
        double first = 0, second = 0;
        int skipped = 0;
        CounterRng rng(105);
        std::vector<Coupling> couplings;
        for (int n : {1, 2, 3})
            couplings.push_back(gaussian_coupling(random_spd(rng, n, 0.1, 1.0), random_spd(rng, n, 0.1, 1.0)));
        for (auto& [name, c] : one_d_pairs())
            couplings.push_back(c);
        for (auto const& c : couplings)
        {
            IntegrationSpec const spec{c.t0.as_linear() && c.t1.as_linear() ? IntegrationMethod::closed_form
                                                                            : IntegrationMethod::quadrature};
            auto const r = entropy_curve(WeightedContext::gaussian(c.t0.dimension()), c, grid, spec);
            first = std::max(first, r.worst_first_fd_error);
            second = std::max(second, r.worst_second_fd_error);
            skipped += r.fd_points_skipped;
        }
        double bochner = 0;
        for (int n : {1, 2, 3})
        {
            std::array<WeightedContext, 2> const ctxs{WeightedContext::gaussian(n),
                                                      WeightedContext::separable(n, quartic_potential(0.5))};
            for (auto const& ctx : ctxs)
                for (auto const& field : standard_test_fields(n))
                    for (int k = 0; k < 5; ++k)
                    {
                        auto const rep = bochner_identity_check(ctx, field, gbm::testing::normal_vector(rng, n));
                        bochner = std::max(bochner, rep.residual);
                    }
        }
        return Outcome{first <= 1e-5 && second <= 1e-4 && skipped == 0 && bochner <= 1e-8,
                       fmt::format("{} curves, {} points skipped: first-derivative rel err {:.2e}, second {:.2e}; "
                                   "bochner residual {:.2e}",
                                   couplings.size(), skipped, first, second, bochner)};
    });

    criterion(6, "local inequality", 0, [] {
        auto const ctx1 = WeightedContext::gaussian(1);
        Coupling const fixture(BrenierMap::linear(SpdMatrix::scalar(1, 0.5)),
                               BrenierMap::linear(SpdMatrix::scalar(1, 0.8)));
        double const fix = local_inequality_gap(ctx1, fixture, 0.5).value;

        double closed = INFINITY;
        auto const s = gaussian_suite(200, 106);
        for (std::size_t k = 0; k < s.a.size(); ++k)
        {
            auto const c = gaussian_coupling(s.a[k], s.b[k]);
            auto const ctx = WeightedContext::gaussian(c.t0.dimension());
            for (double t : {0.1, 0.5, 0.9})
                closed = std::min(closed, local_inequality_gap(ctx, c, t, {IntegrationMethod::closed_form}).value);
        }
        double quad = INFINITY;
        for (auto const& [name, c] : one_d_pairs())
            for (double t : {0.25, 0.5, 0.75})
                quad = std::min(quad, local_inequality_gap(ctx1, c, t, {IntegrationMethod::quadrature}).value);

        // Monte Carlo on non-separable 2-D pairs, in units of the standard error
        double mc = INFINITY;
        auto const box = brenier_from_gaussian(
            EvenStrongLogConcave::truncated_gaussian(SymmetricBody::box(Eigen::Vector2d(0.7, 1.5))));
        Eigen::Matrix2d cov;
        cov << 0.6, 0.25, 0.25, 0.4;
        auto const rot = brenier_from_gaussian(EvenStrongLogConcave::gaussian(SpdMatrix(cov)));
        Coupling const mixed(box, rot);
        auto const ctx2 = WeightedContext::gaussian(2);
        for (double t : {0.25, 0.5, 0.75})
        {
            auto const e = local_inequality_gap(ctx2, mixed, t, {IntegrationMethod::monte_carlo, 200000, 61});
            mc = std::min(mc, e.value / e.std_error);
        }
        bool const ok = std::abs(fix - 0.0519748) <= 1e-6 && closed >= -1e-8 && quad >= -1e-8 && mc >= -3;
        return Outcome{ok, fmt::format("fixture {:.7f}; min closed form {:.3e}; min quadrature {:.3e}; "
                                       "min MC z-score {:.2f}",
                                       fix, closed, quad, mc)};
    });

    criterion(7, "contraction and no-crossing", 0, [] {
        std::vector<BrenierMap> maps;
        for (double h : {0.5, 1.0, 2.0})
            maps.push_back(brenier_from_gaussian(truncated(h)));
        for (double lam : {0.1, 1.0})
            maps.push_back(brenier_from_gaussian(quartic(lam)));
        maps.push_back(brenier_from_gaussian(
            EvenStrongLogConcave::truncated_gaussian(SymmetricBody::box(Eigen::Vector3d(0.3, 1.0, 2.5)))));
        maps.push_back(brenier_from_gaussian(
            EvenStrongLogConcave::product({{quartic_potential(0.1), 10}, {quartic_potential(2.0), 10}})));
        auto const s = gaussian_suite(60, 107);
        for (auto const& a : s.a)
            maps.push_back(brenier_from_gaussian(EvenStrongLogConcave::gaussian(a)));
        double slope = 0;
        for (auto const& m : maps)
            slope = std::max(slope, lipschitz_certificate(m).max_slope);

        std::array<double, 5> const grid{0.0, 0.25, 0.5, 0.75, 1.0};
        double margin = INFINITY, lambda = INFINITY;
        for (std::size_t i = 0; i + 1 < 5; ++i)
        {
            auto const r = no_crossing_check(Coupling(maps[i], maps[i + 1]), 2000, grid, 70 + i);
            margin = std::min(margin, r.min_monotonicity - r.certified_lambda);
            lambda = std::min(lambda, r.certified_lambda);
        }
        auto const r3 = no_crossing_check(Coupling(maps[5], BrenierMap::identity(3)), 2000, grid, 75);
        margin = std::min(margin, r3.min_monotonicity - r3.certified_lambda);
        lambda = std::min(lambda, r3.certified_lambda);
        bool const ok = slope <= 1 + 1e-8 && margin >= -1e-12 && lambda > 0;
        return Outcome{ok, fmt::format("{} maps, max slope {:.12f}; no-crossing margin {:.3e}, min certified lambda {:.3e}",
                                       maps.size(), slope, margin, lambda)};
    });

    criterion(8, "geometric inequality for symmetric bodies", 120, [] {
        auto const fix = geometric_bm_check(SymmetricBody::interval(1), SymmetricBody::interval(2), 0.5);
        auto const boxes = geometric_bm_check(SymmetricBody::box(Eigen::Vector2d(0.5, 2)),
                                              SymmetricBody::box(Eigen::Vector2d(2, 0.3)), 0.4);
        std::vector<std::pair<SymmetricBody, SymmetricBody>> const mc_pairs{
            {ellipse2(), SymmetricBody::box(Eigen::Vector2d(0.2, 2.0))},
            {SymmetricBody::pnorm_ball(2, 1, 2.0), ellipse2()},
            {ellipsoid3(), SymmetricBody::pnorm_ball(3, 1, 1.5)}};
        double worst = INFINITY;
        std::string parts;
        std::uint64_t seed = 80;
        for (auto const& [k0, k1] : mc_pairs)
        {
            auto const r = geometric_bm_check(k0, k1, 0.5, 1'000'000, seed++);
            worst = std::min(worst, r.confidence_gap);
            parts += fmt::format(" {:.4f}+-{:.1e}", r.gap, r.std_error);
            if (r.unreliable)
                return Outcome{false, "boundary-uncertain fraction above 1e-3"};
        }
        bool const ok = std::abs(fix.gap - 0.0477910) <= 1e-6 && boxes.gap >= 0 && worst >= 0;
        return Outcome{ok, fmt::format("interval fixture gap {:.7f}; box pair gap {:.4f}; MC gaps{}; "
                                       "min confidence_gap {:.4f}",
                                       fix.gap, boxes.gap, parts, worst)};
    });

    criterion(9, "asymmetric counterexample", 0, [] {
        auto const r = asymmetry_counterexample(SymmetricBody::interval(1), Eigen::VectorXd::Constant(1, 6), 0.5);
        double const oracle = erf_interval(2.5, 3.5) - 0.5 * erf_interval(-1, 1);
        double const target = -0.3353657;
        bool const ok = std::abs(r.gap - target) <= 1e-6;
        return Outcome{ok, fmt::format("gap {:.7f} (erf oracle {:.7f}), target {:.7f}, |diff| {:.2e}",
                                       r.gap, oracle, target, std::abs(r.gap - target))};
    });

    criterion(10, "variational principle", 0, [] {
        double worst_eq = 0, worst_strict = INFINITY;
        for (double h : {0.5, 1.0, 2.0})
        {
            std::vector<CandidateLaw> const cands{restriction_candidate(h), uniform_candidate(h),
                                                  truncated_normal_candidate(0.5, h),
                                                  truncated_normal_candidate(2.0, h), mixture_candidate(0.5, h),
                                                  point_mass_candidate()};
            auto const r = variational_principle_check(SymmetricBody::interval(h), cands);
            worst_eq = std::max(worst_eq, std::abs(r.candidates[0].exp_minus_entropy - r.measure));
            for (std::size_t i = 1; i < r.candidates.size(); ++i)
                worst_strict = std::min(worst_strict, r.measure - r.candidates[i].exp_minus_entropy);
        }
        return Outcome{worst_eq <= 1e-6 && worst_strict > 0,
                       fmt::format("max |e^-D - gamma(K)| at restriction {:.2e}; min margin elsewhere {:.3e}",
                                   worst_eq, worst_strict)};
    });

    criterion(11, "functional inequality", 0, [] {
        auto const fin = [](double p) { return ExtendedReal::finite(p); };
        auto const r = bbl_check({LogConcaveFunction::gaussian_1d(1), LogConcaveFunction::gaussian_1d(3), fin(0), 0.5});
        auto const ind = bbl_check({LogConcaveFunction::indicator(SymmetricBody::interval(1)),
                                    LogConcaveFunction::indicator(SymmetricBody::interval(2)),
                                    ExtendedReal::pos_infinity(), 0.5});
        int searched = 0, refuted = 0;
        std::vector<LogConcaveFunction> fs{LogConcaveFunction::gaussian_1d(0.3), LogConcaveFunction::gaussian_1d(4),
                                           LogConcaveFunction::tabulated(1.5, {0, -0.1, -0.4, -0.9, -1.6}),
                                           LogConcaveFunction::tabulated(3, {0, -0.02, -0.5, -2, -6})};
        for (std::size_t i = 0; i < fs.size(); ++i)
            for (std::size_t j = 0; j < fs.size(); ++j)
                for (double p : {0.0, 0.5, 2.0})
                {
                    if (i == j || (i < 2 && j < 2))
                        continue;
                    auto const c = bbl_check({fs[i], fs[j], fin(p), 0.35});
                    ++searched;
                    refuted += c.verdict == Verdict::fail;
                }
        bool const ok = std::abs(r.gap - 0.0378520) <= 1e-6 && std::abs(ind.gap - 0.0477910) <= 1e-6
                        && refuted == 0;
        return Outcome{ok, fmt::format("gaussian fixture gap {:.7f}; indicator gap {:.7f}; "
                                       "{} search cases, {} refuted",
                                       r.gap, ind.gap, searched, refuted)};
    });

    criterion(12, "homogeneous measures and duality", 0, [] {
        double worst = INFINITY;
        std::vector<RadialFunction> const fs{smooth_cap(0.7, 2), smooth_cap(2.0, 4), smooth_cap(1.2, 1.5),
                                             radial_from(LogConcaveFunction::gaussian_1d(2))};
        int cases = 0;
        for (double beta : {1.5, 2.0, 4.0})
            for (std::size_t i = 0; i < fs.size(); ++i)
                for (std::size_t j = i + 1; j < fs.size(); ++j)
                    for (double p : {0.0, 1.0})
                    {
                        auto const c = bbl_homogeneous_check(fs[i], fs[j], ExtendedReal::finite(p), 0.4, beta);
                        worst = std::min(worst, c.gap + c.tolerance);
                        ++cases;
                    }
        auto const two = dv_duality_check({0, std::log(3.0)}, {0.5, 0.5}, {{0.25, 0.75}, {0.5, 0.5}});
        double discrete = two.equality_residual;
        CounterRng rng(112);
        for (int k = 0; k < 50; ++k)
        {
            std::vector<double> phi(5), nu(5);
            double s = 0;
            for (int i = 0; i < 5; ++i)
            {
                phi[i] = uniform_in(rng, -3, 3);
                nu[i] = uniform_in(rng, 0.01, 1);
                s += nu[i];
            }
            for (auto& v : nu)
                v /= s;
            discrete = std::max(discrete, dv_duality_check(phi, nu, {}).equality_residual);
        }
        double quad = 0;
        for (auto const& phi : std::vector<std::function<double(double)>>{
                 [](double x) { return -0.25 * x * x; }, [](double x) { return 0.5 * std::sin(x) + 0.3 * x; },
                 [](double x) { return -std::abs(x); }})
            quad = std::max(quad, dv_duality_check_gaussian(phi, {uniform_candidate(1)}).equality_residual);
        bool const ok = worst >= 0 && discrete <= 1e-8 && quad <= 1e-6
                        && std::abs(two.lhs - std::log(2.0)) <= 1e-12;
        return Outcome{ok, fmt::format("{} homogeneous cases, min gap + tolerance {:.3e}; "
                                       "DV residual {:.2e} discrete, {:.2e} quadrature; two-point lhs {:.12f}",
                                       cases, worst, discrete, quad, two.lhs)};
    });

    criterion(13, "trace chain", 0, [] {
        CounterRng rng(113);
        double worst_upper = INFINITY, worst_lower = INFINITY;
        for (int k = 0; k < 10000; ++k)
        {
            int const n = 1 + k % 6;
            Eigen::MatrixXd const a = gbm::testing::random_symmetric(rng, n, -2, 2);
            Eigen::MatrixXd const b = gbm::testing::random_symmetric(rng, n, 1, 4);
            auto const c = trace_chain(a, b);
            worst_upper = std::min(worst_upper, c.ab_squared - c.a2b);
            worst_lower = std::min(worst_lower, c.a2b - c.a2);
        }
        return Outcome{worst_upper >= -1e-10 && worst_lower >= -1e-10,
                       fmt::format("10000 pairs, min tr((AB)^2) - tr(A^2 B) {:.3e}, min tr(A^2 B) - tr(A^2) {:.3e}",
                                   worst_upper, worst_lower)};
    });

    fmt::print("{} of 13 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
