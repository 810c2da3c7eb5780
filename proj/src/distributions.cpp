#include "gaussbm/distributions.hpp"

#include "gaussbm/quadrature.hpp"
#include "gaussbm/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace gbm {
namespace {

constexpr int kGridPoints = 257;
constexpr double kInf = std::numeric_limits<double>::infinity();

template<class... Ts>
struct Overloaded : Ts...
{
    using Ts::operator()...;
};
template<class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Golden-section maximization of a concave function on [a, b]
template<class F>
double argmax_concave(F&& f, double a, double b)
{
    double const r = 0.5 * (std::sqrt(5.0) - 1);
    double c = b - r * (b - a);
    double d = a + r * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > 1e-12 * std::max(1.0, std::abs(a) + std::abs(b)))
    {
        if (fc < fd)
        {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        else
        {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        }
    }
    return 0.5 * (a + b);
}

void check_truncation(OneDPotential const& f, EvenCdf1D const& table)
{
    double const r = f.truncation_radius;
    double const slope = f.potential.first(r);
    if (!(slope > 0))
        throw std::invalid_argument("one_d: potential is not increasing at R");
    // For convex U the mass beyond R is at most exp(-U(R)) / U'(R); compare in
    // units where the density at the origin is one, so the core mass is
    // 1 / pdf(0).
    double const log_tail = -(f.potential.value(r) - f.potential.value(0))
                            - std::log(slope);
    double const log_mass = -std::log(table.pdf(0));
    if (log_tail > std::log(1e-10) + log_mass)
    {
        throw std::invalid_argument(
            "one_d: truncation radius leaves more than 1e-10 of the mass");
    }
}

// Law of sqrt(1-eps) X + sqrt(eps) Z for a 1-D potential, by quadrature over
// the posterior of X given the sum.
OneDPotential smooth_potential(OneDPotential const& f, double eps)
{
    double const c = std::sqrt(1 - eps);
    double const r = f.truncation_radius;
    auto u = f.potential.value;
    double const u0 = u(0);

    struct Moments
    {
        double log_mass;
        double mean;  // posterior mean of (y - c x) / eps
        double var;
    };
    auto moments = [=](double y, int order) {
        auto g = [&](double x) {
            double const s = y - c * x;
            return -(u(x) - u0) - s * s / (2 * eps);
        };
        double const xm = argmax_concave(g, -r, r);
        double const gm = g(xm);
        double const spread = std::sqrt(eps);
        std::vector<double> pts{-r, r};
        for (double k : {-8.0, -2.0, 0.0, 2.0, 8.0})
        {
            double const b = xm + k * spread;
            if (b > -r && b < r)
                pts.push_back(b);
        }
        std::sort(pts.begin(), pts.end());
        auto moment = [&](int power) {
            auto integrand = [&](double x) {
                double const s = (y - c * x) / eps;
                return std::pow(s, power) * std::exp(g(x) - gm);
            };
            // The integrand peaks at 1, so tail pieces far below that are noise.
            // g - gm cancels terms of size U(x), which limits accuracy to ~1e-12
            return quad::integrate_pieces(integrand, pts, 1e-10, 1e-17).value;
        };
        double const m0 = moment(0);
        double const m1 = order >= 1 ? moment(1) / m0 : 0.0;
        double const m2 = order >= 2 ? moment(2) / m0 : 0.0;
        return Moments{std::log(m0) + gm, m1, std::max(0.0, m2 - m1 * m1)};
    };
    // Normalize so that U_eps(0) = 0 with the Gaussian factor included
    double const offset = moments(0, 0).log_mass;

    PotentialOracle out;
    out.value = [=](double y) { return -(moments(y, 0).log_mass - offset); };
    out.first = [=](double y) { return moments(y, 1).mean; };
    out.second = [=](double y) { return 1 / eps - moments(y, 2).var; };
    std::ostringstream os;
    os << "ou(" << f.potential.label << ", eps=" << eps << ")";
    out.label = os.str();
    // sqrt(1-eps) X lives in [-cR, cR]; the Gaussian part adds a thin tail
    return OneDPotential{std::move(out), c * r + 10 * std::sqrt(eps)};
}

}  // namespace

//---------------------------------------------------------------------------//
PotentialOracle quartic_potential(double lambda)
{
    if (!(lambda >= 0) || !std::isfinite(lambda))
        throw std::invalid_argument("quartic_potential: lambda must be >= 0");
    PotentialOracle p;
    p.value = [lambda](double x) {
        double const x2 = x * x;
        return 0.5 * x2 + lambda * x2 * x2;
    };
    p.first = [lambda](double x) { return x + 4 * lambda * x * x * x; };
    p.second = [lambda](double x) { return 1 + 12 * lambda * x * x; };
    std::ostringstream os;
    os << "quartic(" << lambda << ")";
    p.label = os.str();
    return p;
}

//---------------------------------------------------------------------------//
EvenCdf1D::EvenCdf1D(LogDensity log_density, double radius, int cells)
    : log_density_(std::move(log_density)), radius_(radius)
{
    if (!(radius > 0) || !std::isfinite(radius))
        throw std::invalid_argument("EvenCdf1D: radius must be positive");
    if (cells < 16)
        throw std::invalid_argument("EvenCdf1D: too few cells");
    shift_ = log_density_(0.0);
    if (!std::isfinite(shift_))
        throw std::invalid_argument("EvenCdf1D: density vanishes at the origin");
    width_ = radius_ / cells;
    cum_.assign(cells + 1, 0.0);
    auto rho = [this](double x) { return std::exp(log_density_(x) - shift_); };
    for (int k = 0; k < cells; ++k)
    {
        double const a = -radius_ + k * width_;
        cum_[k + 1] = cum_[k] + quad::gauss_legendre(rho, a, a + width_);
    }
    half_mass_ = cum_.back();

    // Cross-check the tabulated mass with an adaptive rule
    double const ref = quad::integrate(rho, -radius_, 0.0, 1e-11).value;
    if (std::abs(ref - half_mass_) > 1e-10 * ref)
    {
        throw quad::QuadratureError(
            "EvenCdf1D: tabulated mass disagrees with adaptive quadrature");
    }
}

double EvenCdf1D::left_mass(double x) const
{
    if (x <= -radius_)
        return 0;
    double const pos = (x + radius_) / width_;
    auto k = static_cast<std::size_t>(std::floor(pos));
    if (k >= cum_.size() - 1)
        return half_mass_;
    double const a = -radius_ + double(k) * width_;
    auto rho = [this](double s) { return std::exp(log_density_(s) - shift_); };
    return cum_[k] + quad::gauss_legendre(rho, a, x);
}

double EvenCdf1D::cdf(double x) const
{
    if (x <= 0)
        return 0.5 * left_mass(x) / half_mass_;
    return 1 - 0.5 * left_mass(-x) / half_mass_;
}

double EvenCdf1D::left_quantile(double m) const
{
    auto it = std::upper_bound(cum_.begin(), cum_.end(), m);
    std::size_t k = (it == cum_.begin()) ? 0 : std::size_t(it - cum_.begin()) - 1;
    k = std::min(k, cum_.size() - 2);
    double lo = -radius_ + double(k) * width_;
    double hi = std::min(0.0, lo + width_);
    double x = 0.5 * (lo + hi);
    for (int it_count = 0; it_count < 100; ++it_count)
    {
        double const f = left_mass(x) - m;
        if (f > 0)
            hi = x;
        else
            lo = x;
        double const d = std::exp(log_density_(x) - shift_);
        double next = (d > 0) ? x - f / d : 0.5 * (lo + hi);
        if (!(next > lo && next < hi))
            next = 0.5 * (lo + hi);
        // Near a truncation edge neighbouring quantiles differ by ~1e-14,
        // so stop only at a few ulps
        double const tol = 4 * std::numeric_limits<double>::epsilon() * std::max(std::abs(x), 1e-3);
        if (std::abs(next - x) <= tol || hi - lo <= tol)
        {
            x = next;
            break;
        }
        x = next;
    }
    return x;
}

double EvenCdf1D::quantile(double u) const
{
    if (!(u > 0 && u < 1))
        throw std::invalid_argument("EvenCdf1D::quantile: u must lie in (0, 1)");
    if (u == 0.5)
        return 0;
    if (u < 0.5)
        return left_quantile(2 * u * half_mass_);
    return -left_quantile(2 * (1 - u) * half_mass_);
}

double EvenCdf1D::log_pdf(double x) const
{
    if (std::abs(x) > radius_)
        return -kInf;
    return log_density_(x) - shift_ - std::log(2 * half_mass_);
}

double EvenCdf1D::pdf(double x) const
{
    return std::exp(log_pdf(x));
}

//---------------------------------------------------------------------------//
EvenStrongLogConcave::EvenStrongLogConcave(Variant v) : v_(std::move(v))
{
    auto potential_table = [](OneDPotential const& f) {
        if (!(f.truncation_radius > 0) || !std::isfinite(f.truncation_radius))
            throw std::invalid_argument("one_d: truncation radius must be positive");
        auto u = f.potential.value;
        auto table = std::make_shared<EvenCdf1D const>(
            [u](double x) { return -u(x); }, f.truncation_radius);
        check_truncation(f, *table);
        return table;
    };
    auto gaussian_table = [](double half_width) {
        return std::make_shared<EvenCdf1D const>(
            [](double x) { return -0.5 * x * x; }, half_width);
    };
    std::visit(Overloaded{
                   [](GaussianZeroMean const&) {},
                   [&](OneDPotential const& f) {
                       tables_.push_back(potential_table(f));
                   },
                   [&](ProductOfOneD const& p) {
                       for (auto const& f : p.factors)
                           tables_.push_back(potential_table(f));
                   },
                   [&](TruncatedGaussian const& t) {
                       if (auto hw = t.body.as_box())
                       {
                           for (Eigen::Index i = 0; i < hw->size(); ++i)
                               tables_.push_back(gaussian_table((*hw)(i)));
                       }
                   },
               },
               v_);
}

EvenStrongLogConcave EvenStrongLogConcave::gaussian(SpdMatrix const& cov)
{
    return EvenStrongLogConcave(GaussianZeroMean{cov});
}

EvenStrongLogConcave
EvenStrongLogConcave::one_d(PotentialOracle potential, double truncation_radius)
{
    if (!potential.value || !potential.first || !potential.second)
        throw std::invalid_argument("one_d: potential oracle is incomplete");
    return EvenStrongLogConcave(
        OneDPotential{std::move(potential), truncation_radius});
}

EvenStrongLogConcave
EvenStrongLogConcave::product(std::vector<OneDPotential> factors)
{
    if (factors.empty())
        throw std::invalid_argument("product: no factors");
    for (auto const& f : factors)
    {
        if (!f.potential.value || !f.potential.first || !f.potential.second)
            throw std::invalid_argument("product: potential oracle is incomplete");
    }
    return EvenStrongLogConcave(ProductOfOneD{std::move(factors)});
}

EvenStrongLogConcave
EvenStrongLogConcave::truncated_gaussian(SymmetricBody const& body)
{
    return EvenStrongLogConcave(TruncatedGaussian{body});
}

int EvenStrongLogConcave::dimension() const
{
    return std::visit(
        Overloaded{
            [](GaussianZeroMean const& g) { return g.cov.dimension(); },
            [](OneDPotential const&) { return 1; },
            [](ProductOfOneD const& p) { return int(p.factors.size()); },
            [](TruncatedGaussian const& t) { return t.body.dimension(); },
        },
        v_);
}

std::string EvenStrongLogConcave::describe() const
{
    std::ostringstream os;
    std::visit(Overloaded{
                   [&](GaussianZeroMean const& g) {
                       os << "gaussian(n=" << g.cov.dimension() << ")";
                   },
                   [&](OneDPotential const& f) {
                       os << "potential(" << f.potential.label
                          << ", R=" << f.truncation_radius << ")";
                   },
                   [&](ProductOfOneD const& p) {
                       os << "product(";
                       for (std::size_t i = 0; i < p.factors.size(); ++i)
                           os << (i ? "," : "") << p.factors[i].potential.label;
                       os << ")";
                   },
                   [&](TruncatedGaussian const& t) {
                       os << "truncated(" << t.body.describe() << ")";
                   },
               },
               v_);
    return os.str();
}

double EvenStrongLogConcave::log_density(Eigen::VectorXd const& x) const
{
    if (x.size() != dimension())
        throw std::invalid_argument("log_density: dimension mismatch");
    return std::visit(
        Overloaded{
            [&](GaussianZeroMean const& g) {
                Eigen::LLT<Eigen::MatrixXd> llt(g.cov.matrix());
                return -0.5 * x.dot(llt.solve(x));
            },
            [&](OneDPotential const& f) {
                if (std::abs(x(0)) > f.truncation_radius)
                    return -kInf;
                return -f.potential.value(x(0));
            },
            [&](ProductOfOneD const& p) {
                double s = 0;
                for (std::size_t i = 0; i < p.factors.size(); ++i)
                {
                    auto const& f = p.factors[i];
                    if (std::abs(x(i)) > f.truncation_radius)
                        return -kInf;
                    s -= f.potential.value(x(i));
                }
                return s;
            },
            [&](TruncatedGaussian const& t) {
                return t.body.contains(x) ? -0.5 * x.squaredNorm() : -kInf;
            },
        },
        v_);
}

std::shared_ptr<EvenCdf1D const> EvenStrongLogConcave::table(int i) const
{
    if (i < 0 || i >= int(tables_.size()))
        throw std::out_of_range("table: no CDF table for this coordinate");
    return tables_[i];
}

//---------------------------------------------------------------------------//
ValidationReport validate(EvenStrongLogConcave const& dist)
{
    ValidationReport rep;
    int const n = dist.dimension();

    // Evenness along the axes and the main diagonal
    double extent = 3.0;
    if (auto const* f = std::get_if<OneDPotential>(&dist.variant()))
        extent = f->truncation_radius;
    std::vector<Eigen::VectorXd> dirs;
    for (int i = 0; i < n; ++i)
        dirs.push_back(Eigen::VectorXd::Unit(n, i));
    dirs.push_back(Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(double(n))));
    for (auto const& d : dirs)
    {
        for (int k = 0; k < kGridPoints; ++k)
        {
            double const s = -extent + 2 * extent * k / (kGridPoints - 1);
            double const a = dist.log_density(s * d);
            double const b = dist.log_density(-s * d);
            if (std::isinf(a) || std::isinf(b))
            {
                if (a != b)
                    rep.worst_asymmetry = kInf;
                continue;
            }
            rep.worst_asymmetry
                = std::max(rep.worst_asymmetry, std::abs(std::expm1(a - b)));
        }
    }
    rep.even_ok = rep.worst_asymmetry <= 1e-12;

    auto check_potential = [&](OneDPotential const& f) {
        double const h = 1e-2;
        double const r = f.truncation_radius - h;
        auto u = f.potential.value;
        for (int k = 0; k < kGridPoints; ++k)
        {
            double const x = -r + 2 * r * k / (kGridPoints - 1);
            double const d2 = (u(x + h) - 2 * u(x) + u(x - h)) / (h * h);
            rep.worst_violation = std::max(rep.worst_violation, 1 - d2);
        }
    };
    std::visit(Overloaded{
                   [&](GaussianZeroMean const& g) {
                       rep.worst_violation
                           = std::max(0.0, 1 - 1 / g.cov.max_eigenvalue());
                       rep.slc_ok = g.cov.max_eigenvalue() <= 1 + 1e-10;
                   },
                   [&](OneDPotential const& f) {
                       check_potential(f);
                       rep.slc_ok = rep.worst_violation <= 1e-6;
                   },
                   [&](ProductOfOneD const& p) {
                       for (auto const& f : p.factors)
                           check_potential(f);
                       rep.slc_ok = rep.worst_violation <= 1e-6;
                   },
                   [&](TruncatedGaussian const&) { rep.slc_ok = true; },
               },
               dist.variant());
    rep.worst_violation = std::max(0.0, rep.worst_violation);
    return rep;
}

EvenStrongLogConcave ou_smooth(EvenStrongLogConcave const& dist, double eps)
{
    if (!(eps > 0 && eps < 0.5))
        throw std::invalid_argument("ou_smooth: epsilon must lie in (0, 1/2)");
    return std::visit(
        Overloaded{
            [&](GaussianZeroMean const& g) {
                int const n = g.cov.dimension();
                Eigen::MatrixXd c = (1 - eps) * g.cov.matrix()
                                    + eps * Eigen::MatrixXd::Identity(n, n);
                return EvenStrongLogConcave::gaussian(SpdMatrix(c));
            },
            [&](OneDPotential const& f) {
                auto s = smooth_potential(f, eps);
                return EvenStrongLogConcave::one_d(std::move(s.potential),
                                                   s.truncation_radius);
            },
            [&](ProductOfOneD const& p) {
                std::vector<OneDPotential> out;
                for (auto const& f : p.factors)
                    out.push_back(smooth_potential(f, eps));
                return EvenStrongLogConcave::product(std::move(out));
            },
            [&](TruncatedGaussian const& t) -> EvenStrongLogConcave {
                auto hw = t.body.as_box();
                if (!hw)
                {
                    throw std::invalid_argument(
                        "ou_smooth: only box-truncated Gaussians are supported");
                }
                // Each factor exp(-x^2/2) on [-h, h] as a potential with a
                // steep wall outside, smoothed factor-wise
                std::vector<OneDPotential> out;
                for (Eigen::Index i = 0; i < hw->size(); ++i)
                {
                    double const h = (*hw)(i);
                    PotentialOracle p;
                    p.value = [h](double x) {
                        return std::abs(x) <= h ? 0.5 * x * x : kInf;
                    };
                    p.first = [](double x) { return x; };
                    p.second = [](double) { return 1.0; };
                    p.label = "interval";
                    out.push_back(smooth_potential(OneDPotential{p, h}, eps));
                }
                if (out.size() == 1)
                {
                    return EvenStrongLogConcave::one_d(
                        std::move(out[0].potential), out[0].truncation_radius);
                }
                return EvenStrongLogConcave::product(std::move(out));
            },
        },
        dist.variant());
}

SampleSet sample(EvenStrongLogConcave const& dist, int count, std::uint64_t seed)
{
    if (count <= 0)
        throw std::invalid_argument("sample: count must be positive");
    int const n = dist.dimension();
    SampleSet out;
    out.dimension = n;
    out.seed = seed;
    out.generator_id = std::string(CounterRng::generator_id);
    out.points.resize(count, n);
    CounterRng rng(seed);

    if (auto const* g = std::get_if<GaussianZeroMean>(&dist.variant()))
    {
        Eigen::MatrixXd const s = spd_sqrt(g->cov).matrix();
        Eigen::VectorXd z(n);
        for (int k = 0; k < count; ++k)
        {
            for (int i = 0; i < n; ++i)
                z(i) = rng.normal();
            out.points.row(k) = (s * z).transpose();
        }
        return out;
    }
    if (auto const* t = std::get_if<TruncatedGaussian>(&dist.variant()))
    {
        if (auto m = t->body.exact_gaussian_measure(); m && *m < 1e-6)
        {
            throw SamplingError(
                "sample: rejection acceptance rate below 1e-6 for "
                + t->body.describe());
        }
        Eigen::VectorXd z(n);
        std::uint64_t tries = 0;
        for (int k = 0; k < count;)
        {
            for (int i = 0; i < n; ++i)
                z(i) = rng.normal();
            ++tries;
            if (t->body.contains(z))
                out.points.row(k++) = z.transpose();
            else if (tries > 10'000'000 && double(k) < 1e-6 * double(tries))
                throw SamplingError("sample: rejection acceptance rate below 1e-6");
        }
        return out;
    }
    for (int k = 0; k < count; ++k)
    {
        for (int i = 0; i < n; ++i)
            out.points(k, i) = dist.table(i)->quantile(rng.uniform_open());
    }
    return out;
}

double cdf_1d(EvenStrongLogConcave const& dist, double x)
{
    if (dist.dimension() != 1)
        throw std::invalid_argument("cdf_1d: distribution is not 1-dimensional");
    if (auto const* g = std::get_if<GaussianZeroMean>(&dist.variant()))
        return quad::normal_cdf(x / std::sqrt(g->cov.matrix()(0, 0)));
    if (!dist.separable())
        throw std::invalid_argument("cdf_1d: no table for this distribution");
    return dist.table(0)->cdf(x);
}

}  // namespace gbm
