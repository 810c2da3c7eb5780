#include "gaussbm/entropy_flow.hpp"

#include "gaussbm/quadrature.hpp"
#include "gaussbm/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace gbm {
namespace {

using M = IntegrationMethod;

// Raw moments (entropy, l, curvature, speed) with their covariance
struct RawMoments
{
    Eigen::Vector4d mean;
    Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
    M method;
};

RawMoments closed_form_moments(Coupling const& c, double t)
{
    Eigen::MatrixXd const s0 = c.t0.as_linear()->s.matrix();
    Eigen::MatrixXd const s1 = c.t1.as_linear()->s.matrix();
    Eigen::MatrixXd const m = (1 - t) * s0 + t * s1;
    Eigen::MatrixXd const d = s1 - s0;
    SpdMatrix const mt(m);
    Eigen::MatrixXd const a = d * mt.inverse();
    RawMoments r;
    r.mean(0) = gaussian_relative_entropy_from_spectrum(
        mt.eigenvalues().array().square().matrix());
    r.mean(1) = a.trace() - (m * d).trace();
    r.mean(2) = (a * a).trace() + (d * d).trace();
    r.mean(3) = (d * d).trace();
    r.method = M::closed_form;
    return r;
}

RawMoments quadrature_moments(WeightedContext const& ctx,
                              Coupling const& c,
                              double t)
{
    auto const f0 = c.t0.factors();
    auto const f1 = c.t1.factors();
    bool const gaussian = ctx.is_gaussian();
    auto const& w = ctx.coordinate_potential();
    RawMoments r;
    r.mean.setZero();
    for (std::size_t i = 0; i < f0.size(); ++i)
    {
        auto const& a = f0[i];
        auto const& b = f1[i];
        r.mean(0) += source_expectation_1d([&](double z) {
            double const y = (1 - t) * apply(a, z) + t * apply(b, z);
            double const jt = (1 - t) * derivative(a, z) + t * derivative(b, z);
            if (gaussian)
                return 0.5 * (y * y - z * z) - std::log(jt);
            return quad::normal_log_pdf(z) + w.value(y) - std::log(jt);
        });
        r.mean(1) += source_expectation_1d([&](double z) {
            double const y = (1 - t) * apply(a, z) + t * apply(b, z);
            double const j0 = derivative(a, z);
            double const j1 = derivative(b, z);
            double const jt = (1 - t) * j0 + t * j1;
            double const v = apply(b, z) - apply(a, z);
            double const gw = gaussian ? y : w.first(y);
            return (j1 - j0) / jt - gw * v;
        });
        r.mean(2) += source_expectation_1d([&](double z) {
            double const y = (1 - t) * apply(a, z) + t * apply(b, z);
            double const j0 = derivative(a, z);
            double const j1 = derivative(b, z);
            double const q = (j1 - j0) / ((1 - t) * j0 + t * j1);
            double const v = apply(b, z) - apply(a, z);
            double const hw = gaussian ? 1.0 : w.second(y);
            return q * q + hw * v * v;
        });
        r.mean(3) += source_expectation_1d([&](double z) {
            double const v = apply(b, z) - apply(a, z);
            return v * v;
        });
    }
    r.method = M::quadrature;
    return r;
}

RawMoments mc_moments(WeightedContext const& ctx,
                      Coupling const& c,
                      double t,
                      IntegrationSpec const& spec)
{
    int const n = c.n;
    double const log_norm = -0.5 * n * std::log(2 * std::numbers::pi);
    auto f = [&](Eigen::VectorXd const& z, Eigen::Ref<Eigen::VectorXd> out) {
        Eigen::VectorXd const y0 = c.t0.apply(z);
        Eigen::VectorXd const y1 = c.t1.apply(z);
        Eigen::VectorXd const y = (1 - t) * y0 + t * y1;
        Eigen::VectorXd const v = y1 - y0;
        Eigen::MatrixXd const j0 = c.t0.jacobian(z);
        Eigen::MatrixXd const j1 = c.t1.jacobian(z);
        Eigen::MatrixXd const jt = (1 - t) * j0 + t * j1;
        Eigen::LLT<Eigen::MatrixXd> llt(jt);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("flow_moments: interpolant Jacobian is not SPD");
        double const logdet
            = 2 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        if (!std::isfinite(logdet))
            throw std::runtime_error("flow_moments: non-finite log-determinant");
        // A = W' J_t^{-1} = (J_t^{-1} W')^T since both are symmetric
        Eigen::MatrixXd const a = llt.solve(j1 - j0).transpose();
        if (ctx.is_gaussian())
            out(0) = 0.5 * (y.squaredNorm() - z.squaredNorm()) - logdet;
        else
            out(0) = log_norm - 0.5 * z.squaredNorm() + ctx.value(y) - logdet;
        out(1) = a.trace() - ctx.gradient(y).dot(v);
        out(2) = (a * a).trace() + v.dot(ctx.hessian(y) * v);
        out(3) = v.squaredNorm();
    };
    auto mc = monte_carlo_moments(n, 4, spec.samples, spec.seed, f);
    RawMoments r;
    r.mean = mc.mean;
    r.cov = mc.mean_covariance;
    r.method = M::monte_carlo;
    return r;
}

RawMoments raw_moments(WeightedContext const& ctx,
                       Coupling const& c,
                       double t,
                       IntegrationSpec const& spec)
{
    if (ctx.dimension() != c.n)
        throw std::invalid_argument("flow_moments: context dimension mismatch");
    if (!(t >= 0 && t <= 1))
        throw std::invalid_argument("flow_moments: t must lie in [0, 1]");
    switch (spec.method)
    {
        case M::closed_form:
            if (!c.linear() || !ctx.is_gaussian())
                throw std::invalid_argument(
                    "flow_moments: closed form needs linear maps and a "
                    "Gaussian reference");
            return closed_form_moments(c, t);
        case M::quadrature:
            if (!c.separable() || !ctx.is_separable())
                throw std::invalid_argument(
                    "flow_moments: quadrature needs separable maps and reference");
            return quadrature_moments(ctx, c, t);
        case M::monte_carlo:
            return mc_moments(ctx, c, t, spec);
        case M::automatic:
            break;
    }
    if (c.linear() && ctx.is_gaussian())
        return closed_form_moments(c, t);
    if (c.separable() && ctx.is_separable())
        return quadrature_moments(ctx, c, t);
    return mc_moments(ctx, c, t, spec);
}

double relative_fd_error(double analytic, double fd, double floor)
{
    double const diff = std::abs(analytic - fd);
    if (diff <= floor)
        return 0;
    return diff / std::abs(analytic);
}

void require_contraction(BrenierMap const& m)
{
    double const s = lipschitz_certificate(m).max_slope;
    if (s > 1 + 1e-8)
    {
        throw std::domain_error(
            "local_inequality_gap: map slope " + std::to_string(s)
            + " exceeds 1; the trace bounds do not apply");
    }
}

}  // namespace

//---------------------------------------------------------------------------//
WeightedContext WeightedContext::gaussian(int n)
{
    if (n < 1)
        throw std::invalid_argument("WeightedContext: dimension must be >= 1");
    WeightedContext c;
    c.kind_ = Kind::gaussian;
    c.n_ = n;
    c.w_ = quartic_potential(0.0);
    return c;
}

WeightedContext WeightedContext::separable(int n, PotentialOracle w)
{
    if (n < 1)
        throw std::invalid_argument("WeightedContext: dimension must be >= 1");
    if (!w.value || !w.first || !w.second)
        throw std::invalid_argument("WeightedContext: incomplete potential");
    WeightedContext c;
    c.kind_ = Kind::separable;
    c.n_ = n;
    c.w_ = std::move(w);
    return c;
}

WeightedContext
WeightedContext::general(int n, Value value, Gradient grad, Hessian hess)
{
    if (n < 1)
        throw std::invalid_argument("WeightedContext: dimension must be >= 1");
    if (!value || !grad || !hess)
        throw std::invalid_argument("WeightedContext: incomplete potential");
    WeightedContext c;
    c.kind_ = Kind::general;
    c.n_ = n;
    c.value_ = std::move(value);
    c.grad_ = std::move(grad);
    c.hess_ = std::move(hess);
    return c;
}

double WeightedContext::value(Eigen::VectorXd const& x) const
{
    switch (kind_)
    {
        case Kind::gaussian:
            return 0.5 * x.squaredNorm();
        case Kind::separable: {
            double s = 0;
            for (Eigen::Index i = 0; i < x.size(); ++i)
                s += w_.value(x(i));
            return s;
        }
        case Kind::general:
            break;
    }
    return value_(x);
}

Eigen::VectorXd WeightedContext::gradient(Eigen::VectorXd const& x) const
{
    switch (kind_)
    {
        case Kind::gaussian:
            return x;
        case Kind::separable: {
            Eigen::VectorXd g(x.size());
            for (Eigen::Index i = 0; i < x.size(); ++i)
                g(i) = w_.first(x(i));
            return g;
        }
        case Kind::general:
            break;
    }
    return grad_(x);
}

Eigen::MatrixXd WeightedContext::hessian(Eigen::VectorXd const& x) const
{
    switch (kind_)
    {
        case Kind::gaussian:
            return Eigen::MatrixXd::Identity(x.size(), x.size());
        case Kind::separable: {
            Eigen::VectorXd h(x.size());
            for (Eigen::Index i = 0; i < x.size(); ++i)
                h(i) = w_.second(x(i));
            return h.asDiagonal();
        }
        case Kind::general:
            break;
    }
    return hess_(x);
}

//---------------------------------------------------------------------------//
FlowMoments flow_moments(WeightedContext const& ctx,
                         Coupling const& c,
                         double t,
                         IntegrationSpec const& spec)
{
    RawMoments const r = raw_moments(ctx, c, t, spec);
    auto se = [&](int i) { return std::sqrt(std::max(0.0, r.cov(i, i))); };
    FlowMoments out;
    out.entropy = {r.mean(0), se(0), r.method};
    out.l = {r.mean(1), se(1), r.method};
    out.curvature = {r.mean(2), se(2), r.method};
    out.speed = {r.mean(3), se(3), r.method};
    double const n = c.n;
    Eigen::Vector4d grad(0, -2 * r.mean(1) / n, 1, -2);
    double const var = grad.dot(r.cov * grad);
    out.local_gap = {r.mean(2) - 2 * r.mean(3) - r.mean(1) * r.mean(1) / n,
                     std::sqrt(std::max(0.0, var)),
                     r.method};
    return out;
}

Estimate pushforward_entropy(Coupling const& c, double t, IntegrationSpec const& spec)
{
    return flow_moments(WeightedContext::gaussian(c.n), c, t, spec).entropy;
}

Estimate entropy_first_derivative(WeightedContext const& ctx,
                                  Coupling const& c,
                                  double t,
                                  IntegrationSpec const& spec)
{
    Estimate l = flow_moments(ctx, c, t, spec).l;
    l.value = -l.value;
    return l;
}

Estimate entropy_second_derivative(WeightedContext const& ctx,
                                   Coupling const& c,
                                   double t,
                                   IntegrationSpec const& spec)
{
    return flow_moments(ctx, c, t, spec).curvature;
}

Estimate local_inequality_gap(WeightedContext const& ctx,
                              Coupling const& c,
                              double t,
                              IntegrationSpec const& spec)
{
    if (!ctx.is_gaussian())
        throw std::invalid_argument(
            "local_inequality_gap: requires the Gaussian reference");
    require_contraction(c.t0);
    require_contraction(c.t1);
    return flow_moments(ctx, c, t, spec).local_gap;
}

//---------------------------------------------------------------------------//
double jacobian_ratio_bound(Coupling const& c, double t)
{
    if (!c.separable())
    {
        auto const s0 = lipschitz_certificate(c.t0);
        auto const s1 = lipschitz_certificate(c.t1);
        double const lo = (1 - t) * s0.min_slope + t * s1.min_slope;
        double const spread = std::max(s1.max_slope - s0.min_slope, s0.max_slope - s1.min_slope);
        return lo > 0 ? std::max(0.0, spread) / lo : std::numeric_limits<double>::infinity();
    }
    auto const f0 = c.t0.factors();
    auto const f1 = c.t1.factors();
    double worst = 0;
    for (std::size_t i = 0; i < f0.size(); ++i)
    {
        for (int k = 0; k <= 4000; ++k)
        {
            double const x = -10 + 20 * k / 4000.0;
            double const d0 = derivative(f0[i], x);
            double const d1 = derivative(f1[i], x);
            double const dt = (1 - t) * d0 + t * d1;
            if (!(dt > 0))
                return std::numeric_limits<double>::infinity();
            worst = std::max(worst, std::abs(d1 - d0) / dt);
        }
    }
    return worst;
}

EntropyCurveReport entropy_curve(WeightedContext const& ctx,
                                 Coupling const& c,
                                 std::span<double const> t_grid,
                                 IntegrationSpec const& spec,
                                 CurveOptions const& opts)
{
    if (t_grid.empty())
        throw std::invalid_argument("entropy_curve: empty t grid");
    for (std::size_t i = 0; i < t_grid.size(); ++i)
    {
        if (!(t_grid[i] >= 0 && t_grid[i] <= 1)
            || (i > 0 && !(t_grid[i] > t_grid[i - 1])))
        {
            throw std::invalid_argument(
                "entropy_curve: t grid must be increasing within [0, 1]");
        }
    }
    double const h = opts.fd_step;
    int const n = c.n;
    auto entropy_at = [&](double t) {
        return raw_moments(ctx, c, t, spec).mean(0);
    };

    EntropyCurveReport r;
    r.t_grid.assign(t_grid.begin(), t_grid.end());
    double const d0 = entropy_at(0.0);
    double const d1 = entropy_at(1.0);
    Estimate const msd = mean_square_displacement(c, spec);
    r.theta = std::sqrt(msd.value);
    r.min_plain_gap = std::numeric_limits<double>::infinity();
    r.min_sigma_gap = std::numeric_limits<double>::infinity();

    for (double t : t_grid)
    {
        FlowMoments const fm = flow_moments(ctx, c, t, spec);
        r.method = fm.entropy.method;
        double const d = fm.entropy.value;
        r.entropy.push_back(d);
        r.entropy_std_error.push_back(fm.entropy.std_error);
        r.l_values.push_back(fm.l.value);
        r.first_derivative_analytic.push_back(-fm.l.value);
        r.second_derivative_analytic.push_back(fm.curvature.value);
        r.local_gap.push_back(fm.local_gap.value);
        r.local_gap_std_error.push_back(fm.local_gap.std_error);

        double fd1;
        double fd2;
        if (t - 2 * h >= 0 && t + 2 * h <= 1)
        {
            double const p1 = entropy_at(t + h);
            double const p2 = entropy_at(t + 2 * h);
            double const m1 = entropy_at(t - h);
            double const m2 = entropy_at(t - 2 * h);
            fd1 = (-p2 + 8 * p1 - 8 * m1 + m2) / (12 * h);
            fd2 = (-p2 + 16 * p1 - 30 * d + 16 * m1 - m2) / (12 * h * h);
        }
        else
        {
            // One-sided stencils pointing into [0, 1]
            double const s = (t - 2 * h < 0) ? 1.0 : -1.0;
            double const e1 = entropy_at(t + s * h);
            double const e2 = entropy_at(t + 2 * s * h);
            double const e3 = entropy_at(t + 3 * s * h);
            fd1 = s * (-3 * d + 4 * e1 - e2) / (2 * h);
            fd2 = (2 * d - 5 * e1 + 4 * e2 - e3) / (h * h);
        }
        r.first_derivative_fd.push_back(fd1);
        r.second_derivative_fd.push_back(fd2);
        if (jacobian_ratio_bound(c, t) <= opts.max_fd_ratio)
        {
            r.worst_first_fd_error
                = std::max(r.worst_first_fd_error,
                           relative_fd_error(-fm.l.value, fd1, opts.first_fd_floor));
            r.worst_second_fd_error = std::max(
                r.worst_second_fd_error,
                relative_fd_error(fm.curvature.value, fd2, opts.second_fd_floor));
        }
        else
        {
            ++r.fd_points_skipped;
        }

        BmGaps const g = entropic_bm_gaps(d0, d1, d, t, n, r.theta);
        r.plain_gap.push_back(g.plain_gap);
        r.sigma_gap.push_back(g.sigma_gap);
        r.min_plain_gap = std::min(r.min_plain_gap, g.plain_gap);
        r.min_sigma_gap = std::min(r.min_sigma_gap, g.sigma_gap);
    }

    for (std::size_t i = 1; i + 1 < t_grid.size(); ++i)
    {
        double const a = t_grid[i - 1];
        double const b = t_grid[i];
        double const cc = t_grid[i + 1];
        auto e = [&](std::size_t k) { return std::exp(-r.entropy[k] / n); };
        double const chord = ((cc - b) * e(i - 1) + (b - a) * e(i + 1)) / (cc - a);
        r.worst_concavity_defect
            = std::max(r.worst_concavity_defect, chord - e(i));
    }
    return r;
}

void write_entropy_curve_csv(EntropyCurveReport const& r, std::ostream& os)
{
    os << "t,D,dD_analytic,dD_fd,d2D_analytic,d2D_fd,l,local_gap,plain_gap,"
          "sigma_gap\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    for (std::size_t i = 0; i < r.t_grid.size(); ++i)
    {
        os << num(r.t_grid[i]) << ',' << num(r.entropy[i]) << ','
           << num(r.first_derivative_analytic[i]) << ','
           << num(r.first_derivative_fd[i]) << ','
           << num(r.second_derivative_analytic[i]) << ','
           << num(r.second_derivative_fd[i]) << ',' << num(r.l_values[i]) << ','
           << num(r.local_gap[i]) << ',' << num(r.plain_gap[i]) << ','
           << num(r.sigma_gap[i]) << '\n';
    }
}

//---------------------------------------------------------------------------//
BochnerReport bochner_identity_check(WeightedContext const& ctx,
                                     VectorField const& field,
                                     Eigen::VectorXd const& x)
{
    int const n = field.n;
    if (x.size() != n || ctx.dimension() != n)
        throw std::invalid_argument("bochner_identity_check: dimension mismatch");

    BochnerReport rep;
    Eigen::VectorXd const v = field.value(x);
    Eigen::MatrixXd j;
    std::vector<Eigen::MatrixXd> hs;
    if (field.jacobian && field.hessians)
    {
        j = field.jacobian(x);
        hs = field.hessians(x);
    }
    else
    {
        rep.finite_differences = true;
        double const h1 = 1e-5 * std::max(1.0, x.norm());
        j.resize(n, n);
        for (int k = 0; k < n; ++k)
        {
            Eigen::VectorXd const e = h1 * Eigen::VectorXd::Unit(n, k);
            j.col(k) = (field.value(x + e) - field.value(x - e)) / (2 * h1);
        }
        double const h2 = 1e-4 * std::max(1.0, x.norm());
        hs.assign(n, Eigen::MatrixXd::Zero(n, n));
        for (int a = 0; a < n; ++a)
        {
            for (int b = a; b < n; ++b)
            {
                Eigen::VectorXd const ea = h2 * Eigen::VectorXd::Unit(n, a);
                Eigen::VectorXd const eb = h2 * Eigen::VectorXd::Unit(n, b);
                Eigen::VectorXd const d
                    = (field.value(x + ea + eb) - field.value(x + ea - eb)
                       - field.value(x - ea + eb) + field.value(x - ea - eb))
                      / (4 * h2 * h2);
                for (int i = 0; i < n; ++i)
                {
                    hs[i](a, b) = d(i);
                    hs[i](b, a) = d(i);
                }
            }
        }
    }

    Eigen::VectorXd const gw = ctx.gradient(x);
    Eigen::MatrixXd const hw = ctx.hessian(x);
    double const tr_j2 = (j * j).trace();
    rep.lhs = tr_j2 + v.dot(hw * v);

    // div(J v) = sum_ij d_i d_j v_i v_j + tr(J^2)
    Eigen::VectorXd h_row = Eigen::VectorXd::Zero(n);  // h_k = sum_i d_i d_k v_i
    for (int i = 0; i < n; ++i)
        h_row += hs[i].row(i).transpose();
    double const div_u = h_row.dot(v) + tr_j2;
    double const divw_u = div_u - gw.dot(j * v);
    Eigen::VectorXd const grad_divw_v = h_row - hw * v - j.transpose() * gw;
    rep.rhs = divw_u - grad_divw_v.dot(v);
    rep.residual = std::abs(rep.lhs - rep.rhs);
    return rep;
}

std::vector<VectorField> standard_test_fields(int n, std::uint64_t seed)
{
    if (n < 1)
        throw std::invalid_argument("standard_test_fields: dimension must be >= 1");
    CounterRng rng(seed);
    auto coef = [&rng] { return 2 * rng.uniform() - 1; };

    std::vector<VectorField> out;
    auto zeros = [n](Eigen::VectorXd const&) {
        return std::vector<Eigen::MatrixXd>(n, Eigen::MatrixXd::Zero(n, n));
    };

    VectorField zero;
    zero.n = n;
    zero.value = [n](Eigen::VectorXd const&) { return Eigen::VectorXd::Zero(n); };
    zero.jacobian = [n](Eigen::VectorXd const&) { return Eigen::MatrixXd::Zero(n, n); };
    zero.hessians = zeros;
    zero.label = "zero";
    out.push_back(zero);

    Eigen::VectorXd cst(n);
    for (int i = 0; i < n; ++i)
        cst(i) = coef();
    VectorField constant;
    constant.n = n;
    constant.value = [cst](Eigen::VectorXd const&) { return cst; };
    constant.jacobian = [n](Eigen::VectorXd const&) {
        return Eigen::MatrixXd::Zero(n, n);
    };
    constant.hessians = zeros;
    constant.label = "constant";
    out.push_back(constant);

    VectorField ident;
    ident.n = n;
    ident.value = [](Eigen::VectorXd const& x) { return x; };
    ident.jacobian = [n](Eigen::VectorXd const&) {
        return Eigen::MatrixXd::Identity(n, n);
    };
    ident.hessians = zeros;
    ident.label = "identity";
    out.push_back(ident);

    // v_i = sum_j B_ij x_j + sum_jk C_ijk x_j x_k with C_i symmetric
    Eigen::MatrixXd bm(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            bm(i, k) = coef();
    std::vector<Eigen::MatrixXd> cm(n, Eigen::MatrixXd(n, n));
    for (int i = 0; i < n; ++i)
    {
        for (int a = 0; a < n; ++a)
            for (int b = a; b < n; ++b)
                cm[i](a, b) = cm[i](b, a) = coef();
    }
    VectorField quadratic;
    quadratic.n = n;
    quadratic.value = [bm, cm, n](Eigen::VectorXd const& x) {
        Eigen::VectorXd v = bm * x;
        for (int i = 0; i < n; ++i)
            v(i) += x.dot(cm[i] * x);
        return v;
    };
    quadratic.jacobian = [bm, cm, n](Eigen::VectorXd const& x) {
        Eigen::MatrixXd j = bm;
        for (int i = 0; i < n; ++i)
            j.row(i) += 2 * (cm[i] * x).transpose();
        return j;
    };
    quadratic.hessians = [cm](Eigen::VectorXd const&) {
        std::vector<Eigen::MatrixXd> h;
        for (auto const& c : cm)
            h.push_back(2 * c);
        return h;
    };
    quadratic.label = "quadratic";
    out.push_back(quadratic);

    // v_i = x_i^3 + x_{i+1} x_i (indices cyclic)
    VectorField cubic;
    cubic.n = n;
    cubic.value = [n](Eigen::VectorXd const& x) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i)
            v(i) = x(i) * x(i) * x(i) + x((i + 1) % n) * x(i);
        return v;
    };
    cubic.jacobian = [n](Eigen::VectorXd const& x) {
        Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i)
        {
            int const k = (i + 1) % n;
            j(i, i) += 3 * x(i) * x(i) + x(k);
            j(i, k) += x(i);
        }
        return j;
    };
    cubic.hessians = [n](Eigen::VectorXd const& x) {
        std::vector<Eigen::MatrixXd> h(n, Eigen::MatrixXd::Zero(n, n));
        for (int i = 0; i < n; ++i)
        {
            int const k = (i + 1) % n;
            h[i](i, i) += 6 * x(i);
            h[i](i, k) += 1;
            h[i](k, i) += 1;
        }
        return h;
    };
    cubic.label = "cubic";
    out.push_back(cubic);
    return out;
}

TraceChain trace_chain(Eigen::MatrixXd const& a, Eigen::MatrixXd const& b)
{
    Eigen::MatrixXd const ab = a * b;
    Eigen::MatrixXd const a2 = a * a;
    return {(ab * ab).trace(), (a2 * b).trace(), a2.trace()};
}

}  // namespace gbm
