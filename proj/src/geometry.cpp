#include "gaussbm/geometry.hpp"

#include "gaussbm/quadrature.hpp"
#include "gaussbm/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace gbm {
namespace {

constexpr int kChunk = 65536;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<Eigen::VectorXd> build_net(int n)
{
    std::vector<Eigen::VectorXd> net;
    if (n == 1)
    {
        net.push_back(Eigen::VectorXd::Constant(1, 1.0));
        net.push_back(Eigen::VectorXd::Constant(1, -1.0));
    }
    else if (n == 2)
    {
        for (int k = 0; k < 256; ++k)
        {
            double const a = 2 * std::numbers::pi * k / 256;
            Eigen::VectorXd u(2);
            u << std::cos(a), std::sin(a);
            net.push_back(u);
        }
    }
    else if (n == 3)
    {
        int const m = 1024;
        double const golden = std::numbers::pi * (3 - std::sqrt(5.0));
        for (int k = 0; k < m; ++k)
        {
            double const z = 1 - (2 * k + 1.0) / m;
            double const r = std::sqrt(1 - z * z);
            Eigen::VectorXd u(3);
            u << r * std::cos(golden * k), r * std::sin(golden * k), z;
            net.push_back(u);
        }
    }
    else
    {
        CounterRng rng(0x6e6574ull, std::uint64_t(n));
        for (int k = 0; k < 1024; ++k)
        {
            Eigen::VectorXd u(n);
            for (int i = 0; i < n; ++i)
                u(i) = rng.normal();
            net.push_back(u.normalized());
        }
    }
    return net;
}

// Exact membership with a tolerance shell: push the point out and in
Membership shell_membership(SymmetricBody const& b,
                            Eigen::VectorXd const& x,
                            double tol)
{
    double const r = x.norm();
    if (r <= tol)
        return Membership::inside;
    if (b.contains(x * (1 + tol / r)))
        return Membership::inside;
    if (!b.contains(x * (1 - tol / r)))
        return Membership::outside;
    return Membership::boundary_uncertain;
}

double unit_ball_measure_lower(int n, double r)
{
    return boost::math::gamma_p(0.5 * n, 0.5 * r * r);
}

}  // namespace

//---------------------------------------------------------------------------//
MinkowskiCombination::MinkowskiCombination(SymmetricBody k0,
                                           SymmetricBody k1,
                                           double t)
    : k0_(std::move(k0)), k1_(std::move(k1)), t_(t)
{
    if (k0_.dimension() != k1_.dimension())
        throw std::invalid_argument("MinkowskiCombination: dimension mismatch");
    if (!(t >= 0 && t <= 1))
        throw std::invalid_argument("MinkowskiCombination: t must lie in [0, 1]");
    auto const& net = direction_net(dimension());
    net_h_.reserve(net.size());
    for (auto const& u : net)
        net_h_.push_back(support(u));
}

double MinkowskiCombination::support(Eigen::VectorXd const& u) const
{
    double s = 0;
    if (t_ < 1)
        s += (1 - t_) * k0_.support(u);
    if (t_ > 0)
        s += t_ * k1_.support(u);
    return s;
}

double MinkowskiCombination::inradius() const
{
    return (1 - t_) * k0_.inradius() + t_ * k1_.inradius();
}

std::optional<SymmetricBody> MinkowskiCombination::exact_body() const
{
    if (t_ == 0 || k0_ == k1_)
        return k0_;
    if (t_ == 1)
        return k1_;
    auto const a = k0_.as_box();
    auto const b = k1_.as_box();
    if (a && b)
        return SymmetricBody::box((1 - t_) * *a + t_ * *b);
    auto const* p = std::get_if<PNormBall>(&k0_.variant());
    auto const* q = std::get_if<PNormBall>(&k1_.variant());
    if (p && q && p->p == q->p)
    {
        return SymmetricBody::pnorm_ball(
            p->dim, p->p, (1 - t_) * p->radius + t_ * q->radius);
    }
    return std::nullopt;
}

char const* to_string(Membership m)
{
    switch (m)
    {
        case Membership::inside:
            return "inside";
        case Membership::outside:
            return "outside";
        case Membership::boundary_uncertain:
            return "boundary_uncertain";
    }
    return "unknown";
}

std::vector<Eigen::VectorXd> const& direction_net(int n)
{
    if (n < 1)
        throw std::invalid_argument("direction_net: dimension must be >= 1");
    static std::mutex mtx;
    static std::map<int, std::vector<Eigen::VectorXd>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end())
        it = cache.emplace(n, build_net(n)).first;
    return it->second;
}

Membership combo_membership(MinkowskiCombination const& mc,
                            Eigen::VectorXd const& x,
                            double tol,
                            int max_iter)
{
    if (!(tol > 0))
        throw std::invalid_argument("combo_membership: tol must be positive");
    if (x.size() != mc.dimension())
        throw std::invalid_argument("combo_membership: dimension mismatch");
    double const t = mc.t();
    if (auto b = mc.exact_body())
        return shell_membership(*b, x, tol);

    // Certified outer test over the net; the smallest net slack also bounds
    // the margin of x from above
    auto const& net = direction_net(mc.dimension());
    auto const& h = mc.net_support();
    double net_margin = kInf;
    for (std::size_t k = 0; k < net.size(); ++k)
    {
        double const slack = h[k] - x.dot(net[k]);
        if (slack < -tol)
            return Membership::outside;
        net_margin = std::min(net_margin, slack);
    }
    double const r = x.norm();
    if (r <= tol)
        return Membership::inside;
    auto const& k0 = mc.k0();
    auto const& k1 = mc.k1();
    {
        Eigen::VectorXd const xp = x * (1 + tol / r);
        // K0 and K1 both contain 0 and are convex, so their intersection lies
        // in every combination
        if (k0.contains(xp) && k1.contains(xp))
            return Membership::inside;
    }

    auto separated = [&](Eigen::VectorXd const& res_vec) {
        double const n2 = res_vec.norm();
        if (n2 == 0)
            return false;
        Eigen::VectorXd const u = res_vec / n2;
        return x.dot(u) > mc.support(u) + tol;
    };

    // A point z of the combination within delta * r_in of x' = (1 + delta) x
    // certifies x: x = z' / (1 + delta) with the defect absorbed by the
    // inscribed ball. Larger pushes give looser targets, so try those first.
    std::vector<double> pushes;
    if (net_margin > 4 * tol)
    {
        pushes.push_back(0.5 * net_margin / r);
        pushes.push_back(0.1 * net_margin / r);
    }
    pushes.push_back(tol / r);

    double const r_in = mc.inradius();
    Eigen::VectorXd y0 = k0.project(x);
    Eigen::VectorXd y1 = k1.project(x);
    Eigen::VectorXd res = x - (1 - t) * y0 - t * y1;
    int const budget = std::max(1, max_iter / int(pushes.size()));
    for (double delta : pushes)
    {
        Eigen::VectorXd const xp = x * (1 + delta);
        double const target = delta * r_in;
        double prev = kInf;
        for (int it = 0; it < budget; ++it)
        {
            y0 = k0.project((xp - t * y1) / (1 - t));
            y1 = k1.project((xp - (1 - t) * y0) / t);
            res = xp - (1 - t) * y0 - t * y1;
            double const rn = res.norm();
            if (rn <= target)
                return Membership::inside;
            if (it % 5 == 4 && separated(res))
                return Membership::outside;
            if (prev - rn <= 1e-15 * std::max(1.0, rn))
                break;
            prev = rn;
        }
        if (separated(res))
            return Membership::outside;
    }
    return Membership::boundary_uncertain;
}

//---------------------------------------------------------------------------//
MeasureEstimate gaussian_measure_mc(Region const& region,
                                    int samples,
                                    std::uint64_t seed,
                                    MeasureOptions const& opts)
{
    if (samples <= 0)
        throw std::invalid_argument("gaussian_measure_mc: samples must be positive");
    std::function<Membership(Eigen::VectorXd const&)> classify;
    int n = 0;
    if (auto const* b = std::get_if<SymmetricBody>(&region))
    {
        n = b->dimension();
        classify = [b](Eigen::VectorXd const& z) {
            return b->contains(z) ? Membership::inside : Membership::outside;
        };
    }
    else
    {
        auto const& mc = std::get<MinkowskiCombination>(region);
        n = mc.dimension();
        if (auto eb = mc.exact_body())
        {
            classify = [body = *eb](Eigen::VectorXd const& z) {
                return body.contains(z) ? Membership::inside : Membership::outside;
            };
        }
        else
        {
            classify = [&mc, opts](Eigen::VectorXd const& z) {
                return combo_membership(mc, z, opts.tol, opts.max_iter);
            };
        }
    }

    long inside = 0;
    long uncertain = 0;
    Eigen::VectorXd z(n);
    for (int start = 0, stream = 0; start < samples; start += kChunk, ++stream)
    {
        CounterRng rng(seed, std::uint64_t(stream));
        int const stop = std::min(samples, start + kChunk);
        for (int k = start; k < stop; ++k)
        {
            for (int i = 0; i < n; ++i)
                z(i) = rng.normal();
            switch (classify(z))
            {
                case Membership::inside:
                    ++inside;
                    break;
                case Membership::boundary_uncertain:
                    ++uncertain;
                    break;
                case Membership::outside:
                    break;
            }
        }
    }
    MeasureEstimate m;
    m.estimate = double(inside) / samples;
    m.std_error = std::sqrt(m.estimate * (1 - m.estimate) / samples);
    m.uncertain_fraction = double(uncertain) / samples;
    m.unreliable = m.uncertain_fraction > 1e-3;
    return m;
}

GeometricBmReport geometric_bm_check(SymmetricBody const& k0,
                                     SymmetricBody const& k1,
                                     double t,
                                     int samples,
                                     std::uint64_t seed,
                                     MeasureOptions const& opts)
{
    if (k0.dimension() != k1.dimension())
        throw std::invalid_argument("geometric_bm_check: dimension mismatch");
    if (!(t >= 0 && t <= 1))
        throw std::invalid_argument("geometric_bm_check: t must lie in [0, 1]");
    int const n = k0.dimension();
    double const inv_n = 1.0 / n;
    GeometricBmReport rep;

    if (k0 == k1)
    {
        // Same body on both sides: the inequality is an identity
        auto m = k0.exact_gaussian_measure();
        MeasureEstimate est;
        if (!m)
            est = gaussian_measure_mc(k0, samples, seed, opts);
        double const v = std::pow(m ? *m : est.estimate, inv_n);
        rep.lhs = v;
        rep.rhs = v;
        rep.exact = true;
        return rep;
    }

    MinkowskiCombination const mc(k0, k1, t);
    auto const eb = mc.exact_body();
    // Exact measures where available, -1 otherwise
    Eigen::Vector3d const exact(
        eb ? eb->exact_gaussian_measure().value_or(-1) : -1,
        k0.exact_gaussian_measure().value_or(-1),
        k1.exact_gaussian_measure().value_or(-1));

    if ((exact.array() >= 0).all())
    {
        rep.lhs = std::pow(exact(0), inv_n);
        rep.rhs = (1 - t) * std::pow(exact(1), inv_n) + t * std::pow(exact(2), inv_n);
        rep.gap = rep.lhs - rep.rhs;
        rep.confidence_gap = rep.gap;
        rep.exact = true;
        return rep;
    }

    // Common samples for the three indicators; exact measures are not sampled
    std::array<bool, 3> const sampled{exact(0) < 0, exact(1) < 0, exact(2) < 0};
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
    long uncertain = 0;
    Eigen::VectorXd z(n);
    Eigen::Vector3d ind;
    for (int start = 0, stream = 0; start < samples; start += kChunk, ++stream)
    {
        CounterRng rng(seed, std::uint64_t(stream));
        int const stop = std::min(samples, start + kChunk);
        for (int k = start; k < stop; ++k)
        {
            for (int i = 0; i < n; ++i)
                z(i) = rng.normal();
            ind.setZero();
            if (sampled[0])
            {
                Membership const m = eb ? (eb->contains(z) ? Membership::inside
                                                           : Membership::outside)
                                        : combo_membership(mc, z, opts.tol,
                                                           opts.max_iter);
                ind(0) = m == Membership::inside;
                uncertain += m == Membership::boundary_uncertain;
            }
            if (sampled[1])
                ind(1) = k0.contains(z);
            if (sampled[2])
                ind(2) = k1.contains(z);
            sum += ind;
            cross += ind * ind.transpose();
        }
    }
    double const m = samples;
    Eigen::Vector3d p = sum / m;
    for (int i = 0; i < 3; ++i)
        if (!sampled[i])
            p(i) = exact(i);
    Eigen::Matrix3d cov = (cross / m - (sum / m) * (sum / m).transpose()) / m;
    for (int i = 0; i < 3; ++i)
    {
        if (!sampled[i])
        {
            cov.row(i).setZero();
            cov.col(i).setZero();
        }
    }
    rep.lhs = std::pow(p(0), inv_n);
    rep.rhs = (1 - t) * std::pow(p(1), inv_n) + t * std::pow(p(2), inv_n);
    rep.gap = rep.lhs - rep.rhs;
    auto dpow = [&](double q) {
        return q > 0 ? inv_n * std::pow(q, inv_n - 1) : kInf;
    };
    Eigen::Vector3d g(sampled[0] ? dpow(p(0)) : 0.0,
                      sampled[1] ? -(1 - t) * dpow(p(1)) : 0.0,
                      sampled[2] ? -t * dpow(p(2)) : 0.0);
    rep.std_error = std::sqrt(std::max(0.0, g.dot(cov * g)));
    rep.confidence_gap = rep.gap - 3 * rep.std_error;
    rep.uncertain_fraction = double(uncertain) / m;
    rep.unreliable = rep.uncertain_fraction > 1e-3;
    return rep;
}

CounterexampleReport asymmetry_counterexample(SymmetricBody const& k0,
                                              Eigen::VectorXd const& shift,
                                              double t)
{
    auto const hw = k0.as_box();
    if (!hw)
        throw std::invalid_argument(
            "asymmetry_counterexample: needs a box or 1-D body");
    if (shift.size() != hw->size())
        throw std::invalid_argument("asymmetry_counterexample: dimension mismatch");
    if (!(t >= 0 && t <= 1))
        throw std::invalid_argument("asymmetry_counterexample: t must lie in [0, 1]");
    double const inv_n = 1.0 / double(hw->size());
    Eigen::VectorXd const lo = -(1 - t) * *hw + t * shift;
    Eigen::VectorXd const hi = (1 - t) * *hw + t * shift;
    CounterexampleReport r;
    r.lhs = std::pow(gaussian_box_measure(lo, hi), inv_n);
    // A single point has zero Gaussian measure unless t = 0 removes it
    r.rhs = (1 - t) * std::pow(gaussian_box_measure(-*hw, *hw), inv_n);
    r.gap = r.lhs - r.rhs;
    return r;
}

EvenStrongLogConcave restricted_measure(SymmetricBody const& k)
{
    double measure;
    if (auto m = k.exact_gaussian_measure())
        measure = *m;
    else
    {
        measure = unit_ball_measure_lower(k.dimension(), k.inradius());
        if (measure < 1e-9)
            measure = gaussian_measure_mc(k, 1'000'000, 0).estimate;
    }
    if (measure < 1e-9)
    {
        std::ostringstream os;
        os << "restricted_measure: gamma(" << k.describe() << ") = " << measure
           << " is below 1e-9";
        throw std::invalid_argument(os.str());
    }
    return EvenStrongLogConcave::truncated_gaussian(k);
}

//---------------------------------------------------------------------------//
CandidateLaw restriction_candidate(double half_width)
{
    std::ostringstream os;
    os << "restriction[-" << half_width << "," << half_width << "]";
    return {os.str(), half_width, [](double x) { return -0.5 * x * x; }, false};
}

CandidateLaw uniform_candidate(double half_width)
{
    std::ostringstream os;
    os << "uniform[-" << half_width << "," << half_width << "]";
    return {os.str(), half_width, [](double) { return 0.0; }, false};
}

CandidateLaw truncated_normal_candidate(double sigma, double half_width)
{
    if (!(sigma > 0))
        throw std::invalid_argument("truncated_normal_candidate: sigma must be positive");
    std::ostringstream os;
    os << "normal(" << sigma << ")|[-" << half_width << "," << half_width << "]";
    double const s2 = sigma * sigma;
    return {os.str(), half_width, [s2](double x) { return -0.5 * x * x / s2; },
            false};
}

CandidateLaw mixture_candidate(double w, double half_width)
{
    if (!(w >= 0 && w <= 1))
        throw std::invalid_argument("mixture_candidate: weight must lie in [0, 1]");
    double const z1 = std::sqrt(2 * std::numbers::pi)
                      * std::erf(half_width / std::numbers::sqrt2);
    double const u = 1 / (2 * half_width);
    std::ostringstream os;
    os << "mixture(" << w << ")";
    return {os.str(),
            half_width,
            [=](double x) { return std::log(w * std::exp(-0.5 * x * x) / z1 + (1 - w) * u); },
            false};
}

CandidateLaw point_mass_candidate()
{
    return {"point_mass(0)", 0, nullptr, true};
}

double candidate_relative_entropy(CandidateLaw const& law)
{
    if (law.point_mass)
        return kInf;
    double const a = law.support_radius;
    if (!(a > 0))
        throw std::invalid_argument("candidate_relative_entropy: empty support");
    double const shift = std::max(law.log_density(0), law.log_density(a));
    auto rho = [&](double x) { return std::exp(law.log_density(x) - shift); };
    std::array<double, 3> pts{-a, 0.0, a};
    double const mass = quad::integrate_pieces(rho, pts, 1e-12).value;
    double const log_z = std::log(mass) + shift;
    auto integrand = [&](double x) {
        double const ld = law.log_density(x);
        return std::exp(ld - log_z) * (ld - log_z - quad::normal_log_pdf(x));
    };
    return quad::integrate_pieces(integrand, pts, 1e-12, 1e-15).value;
}

VariationalReport variational_principle_check(
    SymmetricBody const& k, std::vector<CandidateLaw> const& candidates)
{
    if (k.dimension() != 1)
        throw std::invalid_argument(
            "variational_principle_check: only 1-D bodies are supported");
    double const h = (*k.as_box())(0);
    VariationalReport rep;
    rep.measure = *k.exact_gaussian_measure();
    rep.bound_holds = true;
    for (auto const& c : candidates)
    {
        CandidateResult cr;
        cr.label = c.label;
        if (!c.point_mass && c.support_radius > h * (1 + 1e-12))
        {
            cr.accepted = false;
            std::ostringstream os;
            os << "support [-" << c.support_radius << ", " << c.support_radius
               << "] is not contained in the body";
            cr.diagnostic = os.str();
            rep.candidates.push_back(cr);
            continue;
        }
        cr.accepted = true;
        cr.relative_entropy = candidate_relative_entropy(c);
        cr.exp_minus_entropy = std::exp(-cr.relative_entropy);
        rep.best_exponential = std::max(rep.best_exponential, cr.exp_minus_entropy);
        if (cr.exp_minus_entropy > rep.measure + 1e-10)
            rep.bound_holds = false;
        rep.candidates.push_back(cr);
    }
    double const d_restricted
        = candidate_relative_entropy(restriction_candidate(h));
    rep.attained_by_restriction
        = std::abs(std::exp(-d_restricted) - rep.measure) <= 1e-6;
    return rep;
}

}  // namespace gbm
