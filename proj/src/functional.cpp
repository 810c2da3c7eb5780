#include "gaussbm/functional.hpp"

#include "gaussbm/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace gbm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_psd(Eigen::MatrixXd const& a)
{
    if (a.rows() == 0 || a.rows() != a.cols())
        throw std::invalid_argument("LogConcaveFunction: matrix must be square and nonempty");
    double const scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw std::invalid_argument("LogConcaveFunction: matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    if (es.eigenvalues()(0) < -1e-12 * scale)
        throw std::invalid_argument("LogConcaveFunction: matrix is not positive semidefinite");
}

bool positive_definite(Eigen::MatrixXd const& a)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    return es.eigenvalues()(0) > 1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
}

//! det(I + A)^{-1/2}
double gaussian_quadratic_integral(Eigen::MatrixXd const& a)
{
    Eigen::MatrixXd const m = Eigen::MatrixXd::Identity(a.rows(), a.cols()) + a;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    double logdet = 0;
    for (int i = 0; i < m.rows(); ++i)
        logdet += 2 * std::log(llt.matrixL()(i, i));
    return std::exp(-0.5 * logdet);
}

double nonneg_p(ExtendedReal p, char const* who)
{
    if (p.is_neg_infinity() || (p.is_finite() && p.to_double() < 0))
        throw std::invalid_argument(std::string(who) + ": p must be in [0, inf]");
    return p.to_double();
}

void require_t(double t, char const* who)
{
    if (!(t >= 0 && t <= 1))
        throw std::invalid_argument(std::string(who) + ": t must lie in [0, 1]");
}

//! Maximize the power-mean objective over x0 in [lo, hi]
double search_on(std::function<double(double)> const& f,
                 std::function<double(double)> const& g,
                 ExtendedReal p,
                 double t,
                 double x,
                 double lo,
                 double hi,
                 SearchSpec const& s)
{
    if (!(hi >= lo))
        return 0;
    auto obj = [&](double x0) {
        double const x1 = (x - (1 - t) * x0) / t;
        return power_mean(p, t, f(x0), g(x1));
    };
    int const m = std::max(3, s.grid_points);
    double const step = (hi - lo) / (m - 1);
    int best_k = 0;
    double best = -1;
    for (int k = 0; k < m; ++k)
    {
        double const v = obj(lo + k * step);
        if (v > best)
        {
            best = v;
            best_k = k;
        }
    }
    if (step == 0)
        return best;
    double a = lo + std::max(0, best_k - 1) * step;
    double b = lo + std::min(m - 1, best_k + 1) * step;
    double const invphi = (std::sqrt(5.0) - 1) / 2;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = obj(c);
    double fd = obj(d);
    while (b - a > s.polish_tol)
    {
        if (fc >= fd)
        {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = obj(c);
        }
        else
        {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = obj(d);
        }
    }
    return std::max({best, fc, fd});
}

//! Range of x0 for which both f(x0) and g(x1) can be nonzero
std::pair<double, double> search_range(double rf, double rg, double t, double x, double radius)
{
    double lo = -std::min(radius, rf);
    double hi = std::min(radius, rf);
    if (std::isfinite(rg))
    {
        lo = std::max(lo, (x - t * rg) / (1 - t));
        hi = std::min(hi, (x + t * rg) / (1 - t));
    }
    return {lo, hi};
}

//! Composite 8-point Gauss-Legendre of an even function over [0, L], doubled
double even_integral(std::function<double(double)> const& h, double l, int panels)
{
    std::vector<double> bp(panels + 1);
    for (int i = 0; i <= panels; ++i)
        bp[i] = l * i / panels;
    return 2 * quad::composite_gauss_legendre(h, bp);
}

//! Partial derivatives of M_q^t(a, b) by central differences
std::pair<double, double> mean_partials(ExtendedReal q, double t, double a, double b)
{
    double const ha = 1e-6 * std::max(a, 1e-12);
    double const hb = 1e-6 * std::max(b, 1e-12);
    double const da = (power_mean(q, t, a + ha, b) - power_mean(q, t, std::max(0.0, a - ha), b))
                      / (a + ha - std::max(0.0, a - ha));
    double const db = (power_mean(q, t, a, b + hb) - power_mean(q, t, a, std::max(0.0, b - hb)))
                      / (b + hb - std::max(0.0, b - hb));
    return {da, db};
}

}  // namespace

//---------------------------------------------------------------------------//
LogConcaveFunction LogConcaveFunction::gaussian(Eigen::MatrixXd const& a)
{
    require_psd(a);
    Eigen::MatrixXd s = 0.5 * (a + a.transpose());
    return LogConcaveFunction(GaussianQuadratic{std::move(s)});
}

LogConcaveFunction LogConcaveFunction::gaussian_1d(double a)
{
    return gaussian(Eigen::MatrixXd::Constant(1, 1, a));
}

LogConcaveFunction LogConcaveFunction::indicator(SymmetricBody const& k)
{
    return LogConcaveFunction(BodyIndicator{k});
}

LogConcaveFunction LogConcaveFunction::tabulated(double radius, std::vector<double> log_values)
{
    if (!(radius > 0) || !std::isfinite(radius))
        throw std::invalid_argument("LogConcaveFunction: radius must be positive and finite");
    if (log_values.size() < 2)
        throw std::invalid_argument("LogConcaveFunction: need at least two tabulated values");
    for (double v : log_values)
        if (!std::isfinite(v))
            throw std::invalid_argument("LogConcaveFunction: tabulated log-values must be finite");
    double scale = 1;
    for (double v : log_values)
        scale = std::max(scale, std::abs(v));
    // Second differences, including the one across the origin
    std::size_t const m = log_values.size();
    for (std::size_t k = 0; k + 1 < m; ++k)
    {
        double const left = k == 0 ? log_values[1] : log_values[k - 1];
        if (left - 2 * log_values[k] + log_values[k + 1] > 1e-12 * scale)
            throw std::invalid_argument("LogConcaveFunction: tabulated values are not log-concave");
    }
    return LogConcaveFunction(TabulatedEven1D{radius, std::move(log_values)});
}

int LogConcaveFunction::dimension() const
{
    return std::visit(
        [](auto const& v) -> int {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, GaussianQuadratic>)
                return static_cast<int>(v.a.rows());
            else if constexpr (std::is_same_v<T, BodyIndicator>)
                return v.k.dimension();
            else
                return 1;
        },
        v_);
}

std::string LogConcaveFunction::describe() const
{
    std::ostringstream os;
    std::visit(
        [&](auto const& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, GaussianQuadratic>)
            {
                if (v.a.rows() == 1)
                    os << "gaussian(a=" << v.a(0, 0) << ")";
                else
                    os << "gaussian(n=" << v.a.rows() << ")";
            }
            else if constexpr (std::is_same_v<T, BodyIndicator>)
                os << "indicator(" << v.k.describe() << ")";
            else
                os << "tabulated(R=" << v.radius << ", m=" << v.log_values.size() << ")";
        },
        v_);
    return os.str();
}

double LogConcaveFunction::value(Eigen::VectorXd const& x) const
{
    if (x.size() != dimension())
        throw std::invalid_argument("LogConcaveFunction::value: dimension mismatch");
    return std::visit(
        [&](auto const& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, GaussianQuadratic>)
                return std::exp(-0.5 * x.dot(v.a * x));
            else if constexpr (std::is_same_v<T, BodyIndicator>)
                return v.k.contains(x) ? 1.0 : 0.0;
            else
                return value_1d(x(0));
        },
        v_);
}

double LogConcaveFunction::value_1d(double x) const
{
    if (auto const* g = std::get_if<GaussianQuadratic>(&v_))
    {
        if (g->a.rows() != 1)
            throw std::invalid_argument("LogConcaveFunction::value_1d: not one-dimensional");
        return std::exp(-0.5 * g->a(0, 0) * x * x);
    }
    if (auto const* b = std::get_if<BodyIndicator>(&v_))
    {
        if (b->k.dimension() != 1)
            throw std::invalid_argument("LogConcaveFunction::value_1d: not one-dimensional");
        return b->k.contains(Eigen::VectorXd::Constant(1, x)) ? 1.0 : 0.0;
    }
    auto const& tab = std::get<TabulatedEven1D>(v_);
    double const ax = std::abs(x);
    if (ax > tab.radius)
        return 0;
    double const h = tab.radius / static_cast<double>(tab.log_values.size() - 1);
    std::size_t k = std::min(static_cast<std::size_t>(ax / h), tab.log_values.size() - 2);
    double const w = ax / h - static_cast<double>(k);
    return std::exp((1 - w) * tab.log_values[k] + w * tab.log_values[k + 1]);
}

double LogConcaveFunction::support_radius_1d() const
{
    if (std::holds_alternative<GaussianQuadratic>(v_))
        return kInf;
    if (auto const* b = std::get_if<BodyIndicator>(&v_))
        return (*b->k.as_box())(0);
    return std::get<TabulatedEven1D>(v_).radius;
}

std::optional<double> LogConcaveFunction::gaussian_integral() const
{
    if (auto const* g = std::get_if<GaussianQuadratic>(&v_))
        return gaussian_quadratic_integral(g->a);
    if (auto const* b = std::get_if<BodyIndicator>(&v_))
        return b->k.exact_gaussian_measure();
    auto const& tab = std::get<TabulatedEven1D>(v_);
    std::vector<double> bp(tab.log_values.size());
    for (std::size_t i = 0; i < bp.size(); ++i)
        bp[i] = tab.radius * static_cast<double>(i) / static_cast<double>(bp.size() - 1);
    auto integrand = [&](double x) { return value_1d(x) * quad::normal_pdf(x); };
    return 2 * quad::composite_gauss_legendre(integrand, bp);
}

//---------------------------------------------------------------------------//
Eigen::MatrixXd gaussian_sup_convolution_form(Eigen::MatrixXd const& a,
                                              Eigen::MatrixXd const& b,
                                              double t)
{
    if (!positive_definite(a) || !positive_definite(b))
        throw std::invalid_argument("gaussian_sup_convolution_form: forms must be positive definite");
    Eigen::MatrixXd const s = (1 - t) * a.inverse() + t * b.inverse();
    Eigen::MatrixXd c = s.inverse();
    return 0.5 * (c + c.transpose());
}

double sup_convolution_search_1d(std::function<double(double)> const& f,
                                 std::function<double(double)> const& g,
                                 ExtendedReal p,
                                 double t,
                                 double x,
                                 SearchSpec const& search)
{
    nonneg_p(p, "sup_convolution_search_1d");
    if (!(t > 0 && t < 1))
        throw std::invalid_argument("sup_convolution_search_1d: t must lie in (0, 1)");
    return search_on(f, g, p, t, x, -search.radius, search.radius, search);
}

SupConvolutionValue sup_convolution(SupConvolutionSpec const& spec,
                                    Eigen::VectorXd const& x,
                                    SearchSpec const& search)
{
    nonneg_p(spec.p, "sup_convolution");
    require_t(spec.t, "sup_convolution");
    int const n = spec.f.dimension();
    if (spec.g.dimension() != n || x.size() != n)
        throw std::invalid_argument("sup_convolution: dimension mismatch");
    double const t = spec.t;
    if (t == 0)
        return {spec.f.value(x), false};
    if (t == 1)
        return {spec.g.value(x), false};

    auto const* gf = std::get_if<GaussianQuadratic>(&spec.f.variant());
    auto const* gg = std::get_if<GaussianQuadratic>(&spec.g.variant());
    if (gf && gg && spec.p == ExtendedReal::finite(0) && positive_definite(gf->a)
        && positive_definite(gg->a))
    {
        Eigen::MatrixXd const c = gaussian_sup_convolution_form(gf->a, gg->a, t);
        return {std::exp(-0.5 * x.dot(c * x)), false};
    }

    auto const* bf = std::get_if<BodyIndicator>(&spec.f.variant());
    auto const* bg = std::get_if<BodyIndicator>(&spec.g.variant());
    if (bf && bg)
    {
        MinkowskiCombination const mc(bf->k, bg->k, t);
        if (auto body = mc.exact_body())
            return {body->contains(x) ? 1.0 : 0.0, false};
        switch (combo_membership(mc, x))
        {
            case Membership::inside:
                return {1.0, false};
            case Membership::outside:
                return {0.0, false};
            case Membership::boundary_uncertain:
                return {0.0, true};
        }
    }

    if (n != 1)
        throw std::invalid_argument(
            "sup_convolution: no method for this pair beyond one dimension");
    auto f = [&](double y) { return spec.f.value_1d(y); };
    auto g = [&](double y) { return spec.g.value_1d(y); };
    auto [lo, hi] = search_range(
        spec.f.support_radius_1d(), spec.g.support_radius_1d(), t, x(0), search.radius);
    return {search_on(f, g, spec.p, t, x(0), lo, hi, search), true};
}

//---------------------------------------------------------------------------//
char const* to_string(Verdict v)
{
    switch (v)
    {
        case Verdict::pass:
            return "pass";
        case Verdict::inconclusive:
            return "inconclusive";
        case Verdict::fail:
            return "fail";
    }
    return "unknown";
}

ExtendedReal bbl_exponent(ExtendedReal p, int n)
{
    double const pv = nonneg_p(p, "bbl_exponent");
    if (n < 1)
        throw std::invalid_argument("bbl_exponent: n must be positive");
    if (p.is_pos_infinity())
        return ExtendedReal::finite(1.0 / n);
    return ExtendedReal::finite(pv / (1 + n * pv));
}

ExtendedReal homogeneous_exponent(ExtendedReal p, int n, double beta)
{
    double const pv = nonneg_p(p, "homogeneous_exponent");
    if (!(beta > 1))
        throw std::invalid_argument("homogeneous_exponent: beta must exceed 1");
    if (n < 1)
        throw std::invalid_argument("homogeneous_exponent: n must be positive");
    if (p.is_pos_infinity())
        return ExtendedReal::finite((beta - 1) / (beta * n));
    return ExtendedReal::finite((beta - 1) * pv / ((beta - 1) + beta * n * pv));
}

Verdict bbl_verdict(double gap, double tolerance, double slack)
{
    if (gap >= -tolerance)
        return Verdict::pass;
    if (gap >= -(tolerance + slack))
        return Verdict::inconclusive;
    return Verdict::fail;
}

BblReport bbl_check(SupConvolutionSpec const& spec,
                    IntegratorSpec const& integ,
                    SearchSpec const& search)
{
    nonneg_p(spec.p, "bbl_check");
    require_t(spec.t, "bbl_check");
    int const n = spec.f.dimension();
    if (spec.g.dimension() != n)
        throw std::invalid_argument("bbl_check: dimension mismatch");
    double const t = spec.t;

    BblReport rep;
    rep.exponent = bbl_exponent(spec.p, n);

    auto const* bf = std::get_if<BodyIndicator>(&spec.f.variant());
    auto const* bg = std::get_if<BodyIndicator>(&spec.g.variant());
    auto const* gf = std::get_if<GaussianQuadratic>(&spec.f.variant());
    auto const* gg = std::get_if<GaussianQuadratic>(&spec.g.variant());

    if (bf && bg)
    {
        // Indicator pair: h is the indicator of the Minkowski combination
        auto measure = [&](Region const& r, std::uint64_t stream) -> MeasureEstimate {
            if (auto const* b = std::get_if<SymmetricBody>(&r))
                if (auto m = b->exact_gaussian_measure())
                    return {*m, 0, 0, false};
            if (auto const* mc = std::get_if<MinkowskiCombination>(&r))
                if (auto body = mc->exact_body())
                    if (auto m = body->exact_gaussian_measure())
                        return {*m, 0, 0, false};
            return gaussian_measure_mc(r, integ.samples, integ.seed + stream);
        };
        MeasureEstimate const mf = measure(bf->k, 1);
        MeasureEstimate const mg = measure(bg->k, 2);
        MeasureEstimate const mh = measure(MinkowskiCombination(bf->k, bg->k, t), 3);
        rep.lhs = mh.estimate;
        rep.rhs = power_mean(rep.exponent, t, mf.estimate, mg.estimate);
        rep.gap = rep.lhs - rep.rhs;
        auto [da, db] = mean_partials(rep.exponent, t, mf.estimate, mg.estimate);
        rep.exact = mf.std_error == 0 && mg.std_error == 0 && mh.std_error == 0;
        rep.tolerance = rep.exact ? 1e-12
                                  : 3 * (mh.std_error + std::abs(da) * mf.std_error
                                         + std::abs(db) * mg.std_error);
        rep.slack = mh.uncertain_fraction;
        rep.verdict = bbl_verdict(rep.gap, rep.tolerance, rep.slack);
        return rep;
    }

    auto const int_f = spec.f.gaussian_integral();
    auto const int_g = spec.g.gaussian_integral();
    if (!int_f || !int_g)
        throw std::invalid_argument("bbl_check: integrals of f and g are not available");
    rep.rhs = power_mean(rep.exponent, t, *int_f, *int_g);

    if (t == 0 || t == 1)
    {
        rep.lhs = t == 0 ? *int_f : *int_g;
        rep.exact = true;
    }
    else if (gf && gg && spec.p == ExtendedReal::finite(0) && positive_definite(gf->a)
             && positive_definite(gg->a))
    {
        rep.lhs = gaussian_quadratic_integral(gaussian_sup_convolution_form(gf->a, gg->a, t));
        rep.exact = true;
    }
    else if (n == 1)
    {
        double const rf = spec.f.support_radius_1d();
        double const rg = spec.g.support_radius_1d();
        double const l = std::min(12.0, (1 - t) * rf + t * rg);
        Eigen::VectorXd x(1);
        auto h = [&](double y) {
            x(0) = y;
            return sup_convolution(spec, x, search).value * quad::normal_pdf(y);
        };
        int const panels = std::max(2, integ.panels);
        double const fine = even_integral(h, l, panels);
        double const coarse = even_integral(h, l, panels / 2);
        rep.lhs = fine;
        rep.tolerance = std::abs(fine - coarse) + 1e-10;
        rep.slack = 1e-8 * std::max(1.0, rep.lhs);
    }
    else
    {
        throw std::invalid_argument("bbl_check: no integration method for this pair");
    }
    if (rep.exact)
        rep.tolerance = 1e-12;
    rep.gap = rep.lhs - rep.rhs;
    rep.verdict = bbl_verdict(rep.gap, rep.tolerance, rep.slack);
    return rep;
}

//---------------------------------------------------------------------------//
RadialFunction smooth_cap(double a, double m)
{
    if (!(a > 0) || !(m >= 1))
        throw std::invalid_argument("smooth_cap: need a > 0 and m >= 1");
    RadialFunction r;
    r.value = [a, m](double x) { return std::exp(-std::pow(std::abs(x) / a, m)); };
    // Beyond this radius the value underflows
    r.support_radius = a * std::pow(745.0, 1.0 / m);
    std::ostringstream os;
    os << "cap(a=" << a << ", m=" << m << ")";
    r.label = os.str();
    return r;
}

RadialFunction radial_from(LogConcaveFunction const& f)
{
    if (f.dimension() != 1)
        throw std::invalid_argument("radial_from: function must be one-dimensional");
    RadialFunction r;
    r.value = [f](double x) { return f.value_1d(x); };
    r.support_radius = f.support_radius_1d();
    r.label = f.describe();
    return r;
}

double homogeneous_normalizer(double beta)
{
    if (!(beta > 1))
        throw std::invalid_argument("homogeneous_normalizer: beta must exceed 1");
    return 2 * std::tgamma(1 + 1 / beta) * std::pow(beta, 1 / beta);
}

namespace {

void require_radially_decreasing(RadialFunction const& f, double cutoff)
{
    double const r = std::min(f.support_radius, cutoff);
    int const m = 2001;
    double prev = f.value(0);
    if (!(prev >= 0) || !std::isfinite(prev))
        throw std::invalid_argument("bbl_homogeneous_check: " + f.label + " is not a finite nonnegative function");
    for (int k = 1; k < m; ++k)
    {
        double const x = r * k / (m - 1);
        double const v = f.value(x);
        double const vm = f.value(-x);
        if (!(v >= 0) || v > prev * (1 + 1e-12) + 1e-300)
            throw std::invalid_argument("bbl_homogeneous_check: " + f.label
                                        + " is not radially decreasing");
        if (std::abs(v - vm) > 1e-12 * std::max(v, vm))
            throw std::invalid_argument("bbl_homogeneous_check: " + f.label + " is not even");
        prev = v;
    }
}

}  // namespace

BblReport bbl_homogeneous_check(RadialFunction const& f,
                                RadialFunction const& g,
                                ExtendedReal p,
                                double t,
                                double beta,
                                IntegratorSpec const& integ,
                                SearchSpec const& search)
{
    nonneg_p(p, "bbl_homogeneous_check");
    require_t(t, "bbl_homogeneous_check");
    double const z = homogeneous_normalizer(beta);
    // Density of nu falls below e^-60 beyond the cutoff
    double const cutoff = std::pow(60 * beta, 1 / beta);
    auto nu = [&](double x) { return std::exp(-std::pow(std::abs(x), beta) / beta) / z; };
    {
        std::array<double, 3> bp{0.0, 1.0, cutoff};
        double const mass = 2 * quad::integrate_pieces(nu, bp, 1e-12).value;
        if (std::abs(mass - 1) > 1e-9)
            throw std::runtime_error("bbl_homogeneous_check: reference measure normalization failed");
    }
    require_radially_decreasing(f, cutoff);
    require_radially_decreasing(g, cutoff);

    BblReport rep;
    rep.exponent = homogeneous_exponent(p, 1, beta);

    auto integral_of = [&](RadialFunction const& u) {
        double const r = std::min(u.support_radius, cutoff);
        std::array<double, 2> bp{0.0, r};
        return 2 * quad::integrate_pieces([&](double x) { return u.value(x) * nu(x); }, bp, 1e-12, 1e-16).value;
    };
    double const int_f = integral_of(f);
    double const int_g = integral_of(g);
    rep.rhs = power_mean(rep.exponent, t, int_f, int_g);

    if (t == 0 || t == 1)
    {
        rep.lhs = t == 0 ? int_f : int_g;
        rep.tolerance = 1e-10;
    }
    else
    {
        double const l = std::min(cutoff, (1 - t) * f.support_radius + t * g.support_radius);
        double const radius = std::max(search.radius, std::isfinite(f.support_radius) ? 0.0 : cutoff);
        auto h = [&](double x) {
            auto [lo, hi] = search_range(f.support_radius, g.support_radius, t, x, radius);
            return search_on(f.value, g.value, p, t, x, lo, hi, search) * nu(x);
        };
        int const panels = std::max(2, integ.panels);
        double const fine = even_integral(h, l, panels);
        double const coarse = even_integral(h, l, panels / 2);
        rep.lhs = fine;
        rep.tolerance = std::abs(fine - coarse) + 1e-10;
        rep.slack = 1e-8 * std::max(1.0, rep.lhs);
    }
    rep.gap = rep.lhs - rep.rhs;
    rep.verdict = bbl_verdict(rep.gap, rep.tolerance, rep.slack);
    return rep;
}

//---------------------------------------------------------------------------//
DvReport dv_duality_check(std::vector<double> const& phi,
                          std::vector<double> const& nu,
                          std::vector<std::vector<double>> const& family)
{
    std::size_t const m = phi.size();
    if (m == 0 || nu.size() != m)
        throw std::invalid_argument("dv_duality_check: phi and nu must have the same nonzero size");
    double total = 0;
    for (std::size_t i = 0; i < m; ++i)
    {
        if (!std::isfinite(phi[i]))
            throw std::invalid_argument("dv_duality_check: phi must be finite");
        if (!(nu[i] >= 0))
            throw std::invalid_argument("dv_duality_check: nu must be nonnegative");
        total += nu[i];
    }
    if (std::abs(total - 1) > 1e-12)
        throw std::invalid_argument("dv_duality_check: nu must sum to 1");

    double shift = -kInf;
    for (std::size_t i = 0; i < m; ++i)
        if (nu[i] > 0)
            shift = std::max(shift, phi[i]);
    double acc = 0;
    for (std::size_t i = 0; i < m; ++i)
        if (nu[i] > 0)
            acc += nu[i] * std::exp(phi[i] - shift);

    DvReport rep;
    rep.lhs = shift + std::log(acc);

    auto value_of = [&](std::vector<double> const& mu) {
        double v = 0;
        for (std::size_t i = 0; i < m; ++i)
            if (mu[i] > 0)
                v += mu[i] * (phi[i] - std::log(mu[i] / nu[i]));
        return v;
    };

    std::vector<double> gibbs(m);
    for (std::size_t i = 0; i < m; ++i)
        gibbs[i] = nu[i] > 0 ? nu[i] * std::exp(phi[i] - rep.lhs) : 0.0;
    rep.gibbs_value = value_of(gibbs);
    rep.equality_residual = std::abs(rep.lhs - rep.gibbs_value);
    rep.sup_over_family = rep.gibbs_value;
    rep.bound_holds = true;

    int idx = 0;
    for (auto const& mu : family)
    {
        DvMember mem;
        mem.label = "member " + std::to_string(idx++);
        double s = 0;
        bool valid = mu.size() == m;
        for (std::size_t i = 0; valid && i < m; ++i)
        {
            valid = mu[i] >= 0;
            s += mu[i];
        }
        if (!valid || std::abs(s - 1) > 1e-9)
        {
            mem.diagnostic = "not a probability vector on the reference set";
            rep.members.push_back(mem);
            continue;
        }
        bool ac = true;
        for (std::size_t i = 0; i < m; ++i)
            if (mu[i] > 0 && nu[i] == 0)
                ac = false;
        if (!ac)
        {
            mem.diagnostic = "not absolutely continuous with respect to the reference";
            rep.members.push_back(mem);
            continue;
        }
        mem.accepted = true;
        mem.value = value_of(mu);
        rep.sup_over_family = std::max(rep.sup_over_family, mem.value);
        if (mem.value > rep.lhs + 1e-12)
            rep.bound_holds = false;
        rep.members.push_back(mem);
    }
    return rep;
}

DvReport dv_duality_check_gaussian(std::function<double(double)> const& phi,
                                   std::vector<CandidateLaw> const& family)
{
    double const radius = 12;
    DvReport rep;
    {
        // log E_gamma e^phi with the maximum of phi + log pdf factored out
        double shift = -kInf;
        for (int k = 0; k <= 2400; ++k)
        {
            double const x = -radius + k * 0.01;
            shift = std::max(shift, phi(x) + quad::normal_log_pdf(x));
        }
        std::array<double, 3> bp{-radius, 0.0, radius};
        auto integrand = [&](double x) { return std::exp(phi(x) + quad::normal_log_pdf(x) - shift); };
        rep.lhs = shift + std::log(quad::integrate_pieces(integrand, bp, 1e-12).value);
    }

    auto expectation = [&](CandidateLaw const& law) {
        double const a = law.support_radius;
        double const s = std::max(law.log_density(0), law.log_density(a));
        std::array<double, 3> bp{-a, 0.0, a};
        auto rho = [&](double x) { return std::exp(law.log_density(x) - s); };
        double const mass = quad::integrate_pieces(rho, bp, 1e-12).value;
        auto num = [&](double x) { return rho(x) * phi(x); };
        return quad::integrate_pieces(num, bp, 1e-12, 1e-15).value / mass;
    };
    auto value_of = [&](CandidateLaw const& law) {
        return expectation(law) - candidate_relative_entropy(law);
    };

    CandidateLaw gibbs;
    gibbs.label = "gibbs";
    gibbs.support_radius = radius;
    gibbs.log_density = [&phi](double x) { return phi(x) + quad::normal_log_pdf(x); };
    rep.gibbs_value = value_of(gibbs);
    rep.equality_residual = std::abs(rep.lhs - rep.gibbs_value);
    rep.sup_over_family = rep.gibbs_value;
    rep.bound_holds = true;

    for (auto const& law : family)
    {
        DvMember mem;
        mem.label = law.label;
        if (law.point_mass)
        {
            mem.diagnostic = "not absolutely continuous with respect to the reference";
            rep.members.push_back(mem);
            continue;
        }
        mem.accepted = true;
        mem.value = value_of(law);
        rep.sup_over_family = std::max(rep.sup_over_family, mem.value);
        if (mem.value > rep.lhs + 1e-9)
            rep.bound_holds = false;
        rep.members.push_back(mem);
    }
    return rep;
}

}  // namespace gbm
