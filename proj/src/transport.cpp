#include "gaussbm/transport.hpp"

#include "gaussbm/quadrature.hpp"
#include "gaussbm/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace gbm {
namespace {

template<class... Ts>
struct Overloaded : Ts...
{
    using Ts::operator()...;
};
template<class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

class TransportError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

// Solve g(x) = y for increasing g with derivative dg, bracket [lo, hi]
template<class G, class DG>
double solve_increasing(G&& g, DG&& dg, double y, double lo, double hi)
{
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it)
    {
        double const f = g(x) - y;
        if (f == 0)
            return x;
        if (f > 0)
            hi = x;
        else
            lo = x;
        double const d = dg(x);
        double next = d > 0 ? x - f / d : 0.5 * (lo + hi);
        if (!(next > lo && next < hi))
            next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x))
            || hi - lo <= 1e-15 * std::max(1.0, std::abs(x)))
        {
            return next;
        }
        x = next;
    }
    return x;
}

std::vector<double> const& source_panels()
{
    static std::vector<double> const panels = [] {
        std::vector<double> p;
        double const r = Monotone1D::default_source_radius;
        int const cells = Monotone1D::default_nodes - 1;
        double const outer = Monotone1D::inverse_limit;
        for (int k = 0; k < 6; ++k)
            p.push_back(-outer + k * (outer - r) / 6);
        for (int k = 0; k <= cells; ++k)
            p.push_back(-r + 2 * r * k / cells);
        for (int k = 1; k <= 6; ++k)
            p.push_back(r + k * (outer - r) / 6);
        return p;
    }();
    return panels;
}

Eigen::VectorXd newton_inverse(InterpolantMap const& m, Eigen::VectorXd const& y)
{
    Eigen::VectorXd x = y;
    double const tol = 1e-13 * std::max(1.0, y.norm());
    Eigen::VectorXd r = m.apply(x) - y;
    for (int it = 0; it < 100; ++it)
    {
        if (r.norm() <= tol)
            return x;
        Eigen::VectorXd const step = m.jacobian(x).partialPivLu().solve(r);
        double damp = 1;
        for (int k = 0; k < 40; ++k, damp *= 0.5)
        {
            Eigen::VectorXd const trial = x - damp * step;
            Eigen::VectorXd const rt = m.apply(trial) - y;
            if (rt.norm() < r.norm() || k == 39)
            {
                x = trial;
                r = rt;
                break;
            }
        }
    }
    if (r.norm() > 1e-10 * std::max(1.0, y.norm()))
        throw TransportError("inverse: Newton iteration did not converge");
    return x;
}

}  // namespace

//---------------------------------------------------------------------------//
Monotone1D::Monotone1D(std::shared_ptr<EvenCdf1D const> target,
                       int nodes,
                       double source_radius)
    : target_(std::move(target)), radius_(source_radius)
{
    if (!target_)
        throw std::invalid_argument("Monotone1D: null target");
    if (nodes < 5 || nodes % 2 == 0)
        throw std::invalid_argument("Monotone1D: node count must be odd and >= 5");
    if (!(source_radius > 0))
        throw std::invalid_argument("Monotone1D: source radius must be positive");

    std::size_t const n = nodes;
    std::size_t const mid = n / 2;
    h_ = 2 * radius_ / double(n - 1);
    x_.resize(n);
    y_.resize(n);
    d_.resize(n);
    for (std::size_t j = 0; j < mid; ++j)
    {
        double const x = -radius_ + double(j) * h_;
        double const y = target_->quantile(quad::normal_cdf(x));
        double const rho = target_->pdf(y);
        if (!(rho > 0))
            throw std::runtime_error("Monotone1D: zero target density at a node");
        x_[j] = x;
        y_[j] = y;
        d_[j] = quad::normal_pdf(x) / rho;
        x_[n - 1 - j] = -x;
        y_[n - 1 - j] = -y;
        d_[n - 1 - j] = d_[j];
    }
    x_[mid] = 0;
    y_[mid] = 0;
    d_[mid] = quad::normal_pdf(0) / target_->pdf(0);

    // Fritsch-Carlson limiter keeps every cubic piece monotone
    for (std::size_t j = 0; j + 1 < n; ++j)
    {
        double const delta = (y_[j + 1] - y_[j]) / h_;
        if (!(delta > 0))
            throw std::runtime_error("Monotone1D: node values are not increasing");
        double const a = d_[j] / delta;
        double const b = d_[j + 1] / delta;
        double const s = a * a + b * b;
        if (s > 9)
        {
            double const tau = 3 / std::sqrt(s);
            d_[j] = tau * a * delta;
            d_[j + 1] = tau * b * delta;
        }
    }
}

std::size_t Monotone1D::cell(double x) const
{
    auto k = static_cast<std::ptrdiff_t>(std::floor((x + radius_) / h_));
    return static_cast<std::size_t>(
        std::clamp<std::ptrdiff_t>(k, 0, std::ptrdiff_t(x_.size()) - 2));
}

double Monotone1D::apply(double x) const
{
    // Linear tails, kept inside the target support
    if (x <= -radius_)
        return std::max(y_.front() + d_.front() * (x + radius_), -target_->radius());
    if (x >= radius_)
        return std::min(y_.back() + d_.back() * (x - radius_), target_->radius());
    std::size_t const k = cell(x);
    double const s = (x - x_[k]) / h_;
    double const s2 = s * s;
    double const s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y_[k] + (s3 - 2 * s2 + s) * h_ * d_[k]
           + (-2 * s3 + 3 * s2) * y_[k + 1] + (s3 - s2) * h_ * d_[k + 1];
}

double Monotone1D::derivative(double x) const
{
    if (x <= -radius_)
        return d_.front();
    if (x >= radius_)
        return d_.back();
    std::size_t const k = cell(x);
    double const s = (x - x_[k]) / h_;
    double const s2 = s * s;
    return (6 * s2 - 6 * s) / h_ * (y_[k] - y_[k + 1])
           + (3 * s2 - 4 * s + 1) * d_[k] + (3 * s2 - 2 * s) * d_[k + 1];
}

double Monotone1D::inverse(double y) const
{
    double x;
    if (y <= y_.front())
        x = -radius_ + (y - y_.front()) / d_.front();
    else if (y >= y_.back())
        x = radius_ + (y - y_.back()) / d_.back();
    else
    {
        auto it = std::upper_bound(y_.begin(), y_.end(), y);
        std::size_t const k = std::size_t(it - y_.begin()) - 1;
        x = solve_increasing([this](double s) { return apply(s); },
                             [this](double s) { return derivative(s); },
                             y,
                             x_[k],
                             x_[k + 1]);
    }
    if (!(std::abs(x) <= inverse_limit))
    {
        std::ostringstream os;
        os << "Monotone1D::inverse: " << y << " lies outside the covered range";
        throw TransportError(os.str());
    }
    return x;
}

double apply(Map1D const& m, double x)
{
    return std::visit(Overloaded{
                          [x](ScalarLinear const& s) { return s.slope * x; },
                          [x](Monotone1D const& f) { return f.apply(x); },
                      },
                      m);
}

double derivative(Map1D const& m, double x)
{
    return std::visit(Overloaded{
                          [](ScalarLinear const& s) { return s.slope; },
                          [x](Monotone1D const& f) { return f.derivative(x); },
                      },
                      m);
}

double inverse(Map1D const& m, double y)
{
    return std::visit(Overloaded{
                          [y](ScalarLinear const& s) { return y / s.slope; },
                          [y](Monotone1D const& f) { return f.inverse(y); },
                      },
                      m);
}

//---------------------------------------------------------------------------//
BrenierMap BrenierMap::linear(SpdMatrix const& s)
{
    return BrenierMap(LinearMap{s});
}

BrenierMap BrenierMap::monotone(Monotone1D m)
{
    return BrenierMap(std::move(m));
}

BrenierMap BrenierMap::product(std::vector<Map1D> factors)
{
    if (factors.empty())
        throw std::invalid_argument("BrenierMap::product: no factors");
    for (auto const& f : factors)
    {
        if (auto const* s = std::get_if<ScalarLinear>(&f); s && !(s->slope > 0))
            throw std::invalid_argument("BrenierMap::product: slope must be positive");
    }
    return BrenierMap(ProductMap{std::move(factors)});
}

BrenierMap BrenierMap::identity(int n)
{
    return linear(SpdMatrix::identity(n));
}

int BrenierMap::dimension() const
{
    return std::visit(Overloaded{
                          [](LinearMap const& l) { return l.s.dimension(); },
                          [](Monotone1D const&) { return 1; },
                          [](ProductMap const& p) { return int(p.factors.size()); },
                      },
                      v_);
}

Eigen::VectorXd BrenierMap::apply(Eigen::VectorXd const& x) const
{
    if (x.size() != dimension())
        throw std::invalid_argument("BrenierMap::apply: dimension mismatch");
    return std::visit(Overloaded{
                          [&](LinearMap const& l) -> Eigen::VectorXd {
                              return l.s.matrix() * x;
                          },
                          [&](Monotone1D const& m) -> Eigen::VectorXd {
                              return Eigen::VectorXd::Constant(1, m.apply(x(0)));
                          },
                          [&](ProductMap const& p) -> Eigen::VectorXd {
                              Eigen::VectorXd y(x.size());
                              for (Eigen::Index i = 0; i < x.size(); ++i)
                                  y(i) = gbm::apply(p.factors[i], x(i));
                              return y;
                          },
                      },
                      v_);
}

Eigen::MatrixXd BrenierMap::jacobian(Eigen::VectorXd const& x) const
{
    if (x.size() != dimension())
        throw std::invalid_argument("BrenierMap::jacobian: dimension mismatch");
    if (auto const* l = as_linear())
        return l->s.matrix();
    Eigen::VectorXd d(x.size());
    auto const f = factors();
    for (Eigen::Index i = 0; i < x.size(); ++i)
        d(i) = derivative(f[i], x(i));
    return d.asDiagonal();
}

double BrenierMap::log_det(Eigen::VectorXd const& x) const
{
    if (auto const* l = as_linear())
        return l->s.eigenvalues().array().log().sum();
    double s = 0;
    auto const f = factors();
    for (Eigen::Index i = 0; i < x.size(); ++i)
        s += std::log(derivative(f[i], x(i)));
    return s;
}

Eigen::VectorXd BrenierMap::inverse(Eigen::VectorXd const& y) const
{
    if (y.size() != dimension())
        throw std::invalid_argument("BrenierMap::inverse: dimension mismatch");
    if (auto const* l = as_linear())
    {
        auto const& v = l->s.eigenvectors();
        return v * (v.transpose() * y).cwiseQuotient(l->s.eigenvalues());
    }
    auto const f = factors();
    Eigen::VectorXd x(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i)
        x(i) = gbm::inverse(f[i], y(i));
    return x;
}

bool BrenierMap::separable() const
{
    if (auto const* l = as_linear())
        return l->s.is_diagonal();
    return true;
}

std::vector<Map1D> BrenierMap::factors() const
{
    return std::visit(
        Overloaded{
            [](LinearMap const& l) {
                if (!l.s.is_diagonal())
                    throw std::logic_error("factors: linear map is not diagonal");
                std::vector<Map1D> out;
                for (int i = 0; i < l.s.dimension(); ++i)
                    out.emplace_back(ScalarLinear{l.s.matrix()(i, i)});
                return out;
            },
            [](Monotone1D const& m) { return std::vector<Map1D>{m}; },
            [](ProductMap const& p) { return p.factors; },
        },
        v_);
}

BrenierMap brenier_from_gaussian(EvenStrongLogConcave const& target)
{
    if (auto const* g = std::get_if<GaussianZeroMean>(&target.variant()))
        return BrenierMap::linear(spd_sqrt(g->cov));
    if (!target.separable())
    {
        throw std::invalid_argument(
            "brenier_from_gaussian: unsupported target family "
            + target.describe());
    }
    int const n = target.dimension();
    if (n == 1)
        return BrenierMap::monotone(Monotone1D(target.table(0)));
    std::vector<Map1D> factors;
    for (int i = 0; i < n; ++i)
        factors.emplace_back(Monotone1D(target.table(i)));
    return BrenierMap::product(std::move(factors));
}

SlopeCertificate lipschitz_certificate(BrenierMap const& map)
{
    if (auto const* l = map.as_linear())
        return {l->s.max_eigenvalue(), l->s.min_eigenvalue()};
    SlopeCertificate c{0, std::numeric_limits<double>::infinity()};
    for (auto const& f : map.factors())
    {
        if (auto const* s = std::get_if<ScalarLinear>(&f))
        {
            c.max_slope = std::max(c.max_slope, s->slope);
            c.min_slope = std::min(c.min_slope, s->slope);
            continue;
        }
        auto const& m = std::get<Monotone1D>(f);
        auto const x = m.nodes();
        auto const y = m.values();
        for (std::size_t j = 0; j + 1 < x.size(); ++j)
        {
            double const q = (y[j + 1] - y[j]) / (x[j + 1] - x[j]);
            c.max_slope = std::max(c.max_slope, q);
            c.min_slope = std::min(c.min_slope, q);
        }
    }
    return c;
}

//---------------------------------------------------------------------------//
Coupling::Coupling(BrenierMap a, BrenierMap b)
    : t0(std::move(a)), t1(std::move(b)), n(t0.dimension())
{
    if (t1.dimension() != n)
        throw std::invalid_argument("Coupling: maps have different dimensions");
}

InterpolantMap::InterpolantMap(Coupling const& c, double t) : c_(c), t_(t)
{
    if (!(t >= 0 && t <= 1))
        throw std::invalid_argument("interpolant: t must lie in [0, 1]");
}

Eigen::VectorXd InterpolantMap::apply(Eigen::VectorXd const& x) const
{
    return (1 - t_) * c_.t0.apply(x) + t_ * c_.t1.apply(x);
}

Eigen::MatrixXd InterpolantMap::jacobian(Eigen::VectorXd const& x) const
{
    return (1 - t_) * c_.t0.jacobian(x) + t_ * c_.t1.jacobian(x);
}

double InterpolantMap::log_det(Eigen::VectorXd const& x) const
{
    if (c_.separable())
    {
        auto const f0 = c_.t0.factors();
        auto const f1 = c_.t1.factors();
        double s = 0;
        for (Eigen::Index i = 0; i < x.size(); ++i)
        {
            s += std::log((1 - t_) * derivative(f0[i], x(i))
                          + t_ * derivative(f1[i], x(i)));
        }
        return s;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(jacobian(x));
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("log_det: interpolant Jacobian is not SPD");
    return 2 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

Eigen::VectorXd InterpolantMap::inverse(Eigen::VectorXd const& y) const
{
    if (c_.linear())
    {
        Eigen::MatrixXd const m = (1 - t_) * c_.t0.as_linear()->s.matrix()
                                  + t_ * c_.t1.as_linear()->s.matrix();
        return m.llt().solve(y);
    }
    if (!c_.separable())
        return newton_inverse(*this, y);

    auto const f0 = c_.t0.factors();
    auto const f1 = c_.t1.factors();
    Eigen::VectorXd x(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i)
    {
        auto const& a = f0[i];
        auto const& b = f1[i];
        auto g = [&](double s) {
            return (1 - t_) * gbm::apply(a, s) + t_ * gbm::apply(b, s);
        };
        auto dg = [&](double s) {
            return (1 - t_) * derivative(a, s) + t_ * derivative(b, s);
        };
        if (std::holds_alternative<ScalarLinear>(a)
            && std::holds_alternative<ScalarLinear>(b))
        {
            x(i) = y(i) / dg(0);
            continue;
        }
        double const lim = Monotone1D::inverse_limit;
        if (y(i) < g(-lim) || y(i) > g(lim))
        {
            std::ostringstream os;
            os << "interpolant inverse: " << y(i)
               << " lies outside the covered range";
            throw TransportError(os.str());
        }
        x(i) = solve_increasing(g, dg, y(i), -lim, lim);
    }
    return x;
}

InterpolantMap interpolant(Coupling const& c, double t)
{
    return InterpolantMap(c, t);
}

//---------------------------------------------------------------------------//
double source_expectation_1d(std::function<double(double)> const& f)
{
    return quad::composite_gauss_legendre(
        [&f](double x) { return f(x) * quad::normal_pdf(x); }, source_panels());
}

Estimate mean_square_displacement(Coupling const& c, IntegrationSpec const& spec)
{
    using M = IntegrationMethod;
    bool const closed = spec.method == M::closed_form
                        || (spec.method == M::automatic && c.linear());
    if (closed)
    {
        if (!c.linear())
            throw std::invalid_argument(
                "mean_square_displacement: no closed form for this coupling");
        Eigen::MatrixXd const d = c.t0.as_linear()->s.matrix()
                                  - c.t1.as_linear()->s.matrix();
        return {d.squaredNorm(), 0, M::closed_form};
    }
    bool const quadrature = spec.method == M::quadrature
                            || (spec.method == M::automatic && c.separable());
    if (quadrature)
    {
        if (!c.separable())
            throw std::invalid_argument(
                "mean_square_displacement: quadrature needs a separable coupling");
        auto const f0 = c.t0.factors();
        auto const f1 = c.t1.factors();
        double total = 0;
        for (std::size_t i = 0; i < f0.size(); ++i)
        {
            total += source_expectation_1d([&](double x) {
                double const d = apply(f1[i], x) - apply(f0[i], x);
                return d * d;
            });
        }
        return {total, 0, M::quadrature};
    }
    auto mc = monte_carlo_moments(
        c.n, 1, spec.samples, spec.seed,
        [&c](Eigen::VectorXd const& z, Eigen::Ref<Eigen::VectorXd> out) {
            out(0) = (c.t1.apply(z) - c.t0.apply(z)).squaredNorm();
        });
    return {mc.mean(0), std::sqrt(mc.mean_covariance(0, 0)), M::monte_carlo};
}

NoCrossingReport no_crossing_check(Coupling const& c,
                                   int pair_count,
                                   std::span<double const> t_grid,
                                   std::uint64_t seed)
{
    if (pair_count <= 0)
        throw std::invalid_argument("no_crossing_check: pair_count must be positive");
    NoCrossingReport rep;
    rep.certified_lambda = std::min(lipschitz_certificate(c.t0).min_slope,
                                    lipschitz_certificate(c.t1).min_slope);
    rep.min_monotonicity = std::numeric_limits<double>::infinity();
    CounterRng rng(seed);
    Eigen::VectorXd x(c.n);
    Eigen::VectorXd y(c.n);
    for (int k = 0; k < pair_count; ++k)
    {
        for (int i = 0; i < c.n; ++i)
        {
            x(i) = rng.normal();
            y(i) = rng.normal();
        }
        Eigen::VectorXd const dx = x - y;
        double const d2 = dx.squaredNorm();
        if (d2 == 0)
            continue;
        Eigen::VectorXd const a0 = c.t0.apply(x) - c.t0.apply(y);
        Eigen::VectorXd const a1 = c.t1.apply(x) - c.t1.apply(y);
        for (double t : t_grid)
        {
            double const m = ((1 - t) * a0 + t * a1).dot(dx) / d2;
            rep.min_monotonicity = std::min(rep.min_monotonicity, m);
        }
    }
    return rep;
}

Eigen::VectorXd velocity_at(Coupling const& c, double t, Eigen::VectorXd const& y)
{
    Eigen::VectorXd const x = interpolant(c, t).inverse(y);
    return c.t1.apply(x) - c.t0.apply(x);
}

}  // namespace gbm
