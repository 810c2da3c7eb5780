#include "gaussbm/body.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
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

double pnorm(Eigen::VectorXd const& x, double p)
{
    double const m = x.cwiseAbs().maxCoeff();
    if (std::isinf(p) || m == 0)
        return m;
    if (p == 1)
        return x.cwiseAbs().sum();
    if (p == 2)
        return x.norm();
    double s = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        s += std::pow(std::abs(x(i)) / m, p);
    return m * std::pow(s, 1.0 / p);
}

double dual_exponent(double p)
{
    if (std::isinf(p))
        return 1.0;
    if (p == 1)
        return std::numeric_limits<double>::infinity();
    return p / (p - 1);
}

// Solve y + mu * y^(p-1) = a on [0, a] for p > 1
double shrink_coordinate(double a, double mu, double p)
{
    double lo = 0;
    double hi = a;
    for (int it = 0; it < 200 && hi - lo > 1e-16 * std::max(a, 1e-300); ++it)
    {
        double const mid = 0.5 * (lo + hi);
        if (mid + mu * std::pow(mid, p - 1) > a)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

Eigen::VectorXd project_pnorm(Eigen::VectorXd const& x, double p, double r)
{
    if (pnorm(x, p) <= r)
        return x;
    if (std::isinf(p))
        return x.cwiseMax(-r).cwiseMin(r);
    if (p == 2)
        return x * (r / x.norm());
    if (p == 1)
        return project_l1_ball(x, r);

    // Stationarity: y_i + mu y_i^(p-1) = |x_i| with mu >= 0 set by the radius
    Eigen::VectorXd const a = x.cwiseAbs();
    auto solve = [&](double mu) {
        Eigen::VectorXd y(a.size());
        for (Eigen::Index i = 0; i < a.size(); ++i)
            y(i) = shrink_coordinate(a(i), mu, p);
        return y;
    };
    double mu_lo = 0;
    double mu_hi = 1;
    while (pnorm(solve(mu_hi), p) > r)
    {
        mu_lo = mu_hi;
        mu_hi *= 2;
        if (mu_hi > 1e300)
            throw std::runtime_error("project: p-norm multiplier diverged");
    }
    for (int it = 0; it < 200 && mu_hi - mu_lo > 1e-15 * mu_hi; ++it)
    {
        double const mid = 0.5 * (mu_lo + mu_hi);
        if (pnorm(solve(mid), p) > r)
            mu_lo = mid;
        else
            mu_hi = mid;
    }
    Eigen::VectorXd y = solve(mu_hi);
    for (Eigen::Index i = 0; i < y.size(); ++i)
        y(i) = std::copysign(y(i), x(i));
    return y;
}

Eigen::VectorXd project_ellipsoid(Ellipsoid const& e, Eigen::VectorXd const& x)
{
    Eigen::MatrixXd const& v = e.shape.eigenvectors();
    Eigen::VectorXd const& lam = e.shape.eigenvalues();
    Eigen::VectorXd const xt = v.transpose() * x;
    auto f = [&](double mu, double* df) {
        double s = 0;
        double ds = 0;
        for (Eigen::Index i = 0; i < xt.size(); ++i)
        {
            double const d = 1 + mu * lam(i);
            double const q = lam(i) * xt(i) * xt(i) / (d * d);
            s += q;
            ds += -2 * q * lam(i) / d;
        }
        *df = ds;
        return s - 1;
    };
    double df = 0;
    if (f(0, &df) <= 0)
        return x;
    // f is convex and decreasing in mu, so Newton from 0 increases monotonically
    double mu = 0;
    for (int it = 0; it < 200; ++it)
    {
        double const val = f(mu, &df);
        if (val <= 1e-15)
            break;
        double const next = mu - val / df;
        if (!(next > mu))
            break;
        mu = next;
    }
    Eigen::VectorXd yt(xt.size());
    for (Eigen::Index i = 0; i < xt.size(); ++i)
        yt(i) = xt(i) / (1 + mu * lam(i));
    Eigen::VectorXd y = v * yt;
    // Absorb residual rounding so the result is a member
    double const q = y.dot(e.shape.matrix() * y);
    if (q > 1)
        y /= std::sqrt(q);
    return y;
}

Eigen::VectorXd project_slab(Eigen::VectorXd const& z,
                             Eigen::VectorXd const& a,
                             double b)
{
    double const s = a.dot(z);
    double const aa = a.squaredNorm();
    if (s > b)
        return z - ((s - b) / aa) * a;
    if (s < -b)
        return z - ((s + b) / aa) * a;
    return z;
}

//! Number of signed constraint subsets of size at most n among m slabs
double face_count(int m, int n)
{
    double total = 0, choose = 1;
    for (int k = 0; k <= n && k <= m; ++k)
    {
        total += choose * std::ldexp(1.0, k);
        choose = choose * (m - k) / (k + 1);
    }
    return total;
}

/*!
 * Exact projection by enumerating faces: the nearest point of the polytope is
 * the nearest feasible point among projections onto affine hulls of faces.
 */
Eigen::VectorXd project_by_faces(HPolytopeSym const& h, Eigen::VectorXd const& x)
{
    int const n = static_cast<int>(x.size());
    int const m = static_cast<int>(h.normals.rows());
    double const feas_tol = 1e-12 * h.bounds.maxCoeff();
    Eigen::VectorXd best;
    double best_d = INFINITY;
    std::vector<int> idx;
    std::function<void(int)> visit = [&](int start) {
        int const k = static_cast<int>(idx.size());
        if (k > 0)
        {
            for (int mask = 0; mask < (1 << k); ++mask)
            {
                Eigen::MatrixXd a(k, n);
                Eigen::VectorXd b(k);
                for (int r = 0; r < k; ++r)
                {
                    double const sign = (mask >> r) & 1 ? -1.0 : 1.0;
                    a.row(r) = sign * h.normals.row(idx[r]);
                    b(r) = h.bounds(idx[r]);
                }
                // y = x - A^T lambda with A y = b
                Eigen::MatrixXd const gram = a * a.transpose();
                Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
                if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-12)
                    continue;
                Eigen::VectorXd const lambda = ldlt.solve(a * x - b);
                Eigen::VectorXd const y = x - a.transpose() * lambda;
                if (((h.normals * y).cwiseAbs() - h.bounds).maxCoeff() > feas_tol)
                    continue;
                double const d = (y - x).squaredNorm();
                if (d < best_d)
                {
                    best_d = d;
                    best = y;
                }
            }
        }
        if (k == n)
            return;
        for (int i = start; i < m; ++i)
        {
            idx.push_back(i);
            visit(i + 1);
            idx.pop_back();
        }
    };
    visit(0);
    return best;
}

Eigen::VectorXd project_hpolytope(HPolytopeSym const& h,
                                  Eigen::VectorXd const& x)
{
    Eigen::Index const m = h.normals.rows();
    if (((h.normals * x).cwiseAbs() - h.bounds).maxCoeff() <= 0)
        return x;
    if (face_count(static_cast<int>(m), static_cast<int>(x.size())) <= 20000)
        return project_by_faces(h, x);
    Eigen::VectorXd y = x;
    Eigen::MatrixXd incr = Eigen::MatrixXd::Zero(x.size(), m);
    double const tol = 1e-13 * std::max(1.0, x.norm());
    for (int cycle = 0; cycle < 20000; ++cycle)
    {
        // y can return to the same point while the corrections still move,
        // so both must settle
        double moved = 0;
        for (Eigen::Index i = 0; i < m; ++i)
        {
            Eigen::VectorXd const z = y + incr.col(i);
            Eigen::VectorXd const a = h.normals.row(i).transpose();
            Eigen::VectorXd const next = project_slab(z, a, h.bounds(i));
            moved += (next - y).norm() + (z - next - incr.col(i)).norm();
            y = next;
            incr.col(i) = z - y;
        }
        if (moved <= tol)
            break;
    }
    return y;
}

std::vector<Eigen::VectorXd> enumerate_vertices(Eigen::MatrixXd const& a,
                                                Eigen::VectorXd const& b)
{
    int const n = static_cast<int>(a.cols());
    int const m = static_cast<int>(a.rows());
    std::vector<Eigen::VectorXd> out;
    std::vector<int> idx(n);
    std::function<void(int, int)> choose = [&](int start, int depth) {
        if (depth == n)
        {
            Eigen::MatrixXd sub(n, n);
            Eigen::VectorXd rhs(n);
            for (int k = 0; k < n; ++k)
                sub.row(k) = a.row(idx[k]);
            Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
            if (lu.rank() < n)
                return;
            for (int mask = 0; mask < (1 << n); ++mask)
            {
                for (int k = 0; k < n; ++k)
                    rhs(k) = ((mask >> k) & 1 ? -1.0 : 1.0) * b(idx[k]);
                Eigen::VectorXd v = lu.solve(rhs);
                Eigen::VectorXd slack = (a * v).cwiseAbs() - b;
                if ((slack.array() <= 1e-9 * b.array() + 1e-12).all())
                    out.push_back(std::move(v));
            }
            return;
        }
        for (int i = start; i < m; ++i)
        {
            idx[depth] = i;
            choose(i + 1, depth + 1);
        }
    };
    choose(0, 0);
    return out;
}

}  // namespace

//---------------------------------------------------------------------------//
SymmetricBody SymmetricBody::box(Eigen::VectorXd const& half_widths)
{
    if (half_widths.size() == 0)
        throw std::invalid_argument("box: empty half widths");
    for (Eigen::Index i = 0; i < half_widths.size(); ++i)
    {
        if (!(half_widths(i) > 0) || !std::isfinite(half_widths(i)))
            throw std::invalid_argument(
                "box: half widths must be positive and finite");
    }
    return SymmetricBody(Box{half_widths});
}

SymmetricBody SymmetricBody::interval(double half_width)
{
    return box(Eigen::VectorXd::Constant(1, half_width));
}

SymmetricBody SymmetricBody::ellipsoid(SpdMatrix const& shape)
{
    return SymmetricBody(Ellipsoid{shape, shape.inverse()});
}

SymmetricBody SymmetricBody::pnorm_ball(int dim, double p, double radius)
{
    if (dim < 1)
        throw std::invalid_argument("pnorm_ball: dimension must be >= 1");
    if (!(p >= 1))
        throw std::invalid_argument("pnorm_ball: p must be >= 1");
    if (!(radius > 0) || !std::isfinite(radius))
        throw std::invalid_argument("pnorm_ball: radius must be positive");
    return SymmetricBody(PNormBall{dim, p, radius});
}

SymmetricBody SymmetricBody::hpolytope(Eigen::MatrixXd const& normals,
                                       Eigen::VectorXd const& bounds)
{
    if (normals.rows() == 0 || normals.rows() != bounds.size())
        throw std::invalid_argument("hpolytope: need one bound per row");
    if (!normals.allFinite() || !bounds.allFinite())
        throw std::invalid_argument("hpolytope: non-finite data");
    if ((bounds.array() <= 0).any())
        throw std::invalid_argument("hpolytope: bounds must be positive");
    Eigen::FullPivLU<Eigen::MatrixXd> lu(normals);
    if (lu.rank() < normals.cols())
        throw std::invalid_argument(
            "hpolytope: normals do not span the space, body is unbounded");
    HPolytopeSym h{normals, bounds, enumerate_vertices(normals, bounds)};
    if (h.vertices.empty())
        throw std::invalid_argument("hpolytope: no vertices found");
    return SymmetricBody(std::move(h));
}

int SymmetricBody::dimension() const
{
    return std::visit(Overloaded{
                          [](Box const& b) { return int(b.half_widths.size()); },
                          [](Ellipsoid const& e) { return e.shape.dimension(); },
                          [](PNormBall const& p) { return p.dim; },
                          [](HPolytopeSym const& h) { return int(h.normals.cols()); },
                      },
                      v_);
}

bool SymmetricBody::contains(Eigen::VectorXd const& x) const
{
    if (x.size() != dimension())
        throw std::invalid_argument("contains: dimension mismatch");
    return std::visit(
        Overloaded{
            [&](Box const& b) {
                return (x.cwiseAbs().array() <= b.half_widths.array()).all();
            },
            [&](Ellipsoid const& e) {
                return x.dot(e.shape.matrix() * x) <= 1.0;
            },
            [&](PNormBall const& p) { return pnorm(x, p.p) <= p.radius; },
            [&](HPolytopeSym const& h) {
                return ((h.normals * x).cwiseAbs().array() <= h.bounds.array())
                    .all();
            },
        },
        v_);
}

Eigen::VectorXd SymmetricBody::project(Eigen::VectorXd const& x) const
{
    if (x.size() != dimension())
        throw std::invalid_argument("project: dimension mismatch");
    return std::visit(
        Overloaded{
            [&](Box const& b) -> Eigen::VectorXd {
                return x.cwiseMax(-b.half_widths).cwiseMin(b.half_widths);
            },
            [&](Ellipsoid const& e) -> Eigen::VectorXd {
                return project_ellipsoid(e, x);
            },
            [&](PNormBall const& p) -> Eigen::VectorXd {
                return project_pnorm(x, p.p, p.radius);
            },
            [&](HPolytopeSym const& h) -> Eigen::VectorXd {
                return project_hpolytope(h, x);
            },
        },
        v_);
}

double SymmetricBody::support(Eigen::VectorXd const& u) const
{
    if (u.size() != dimension())
        throw std::invalid_argument("support: dimension mismatch");
    return std::visit(
        Overloaded{
            [&](Box const& b) { return u.cwiseAbs().dot(b.half_widths); },
            [&](Ellipsoid const& e) {
                return std::sqrt(u.dot(e.shape_inverse * u));
            },
            [&](PNormBall const& p) {
                return p.radius * pnorm(u, dual_exponent(p.p));
            },
            [&](HPolytopeSym const& h) {
                double best = -std::numeric_limits<double>::infinity();
                for (auto const& v : h.vertices)
                    best = std::max(best, u.dot(v));
                return best;
            },
        },
        v_);
}

double SymmetricBody::inradius() const
{
    return std::visit(
        Overloaded{
            [](Box const& b) { return b.half_widths.minCoeff(); },
            [](Ellipsoid const& e) {
                return 1 / std::sqrt(e.shape.max_eigenvalue());
            },
            [](PNormBall const& p) {
                double const e = std::min(0.0, 0.5 - 1 / p.p);
                return p.radius * std::pow(double(p.dim), e);
            },
            [](HPolytopeSym const& h) {
                return (h.bounds.array() / h.normals.rowwise().norm().array())
                    .minCoeff();
            },
        },
        v_);
}

std::optional<Eigen::VectorXd> SymmetricBody::as_box() const
{
    if (auto const* b = std::get_if<Box>(&v_))
        return b->half_widths;
    if (auto const* p = std::get_if<PNormBall>(&v_))
    {
        if (std::isinf(p->p) || p->dim == 1)
            return Eigen::VectorXd::Constant(p->dim, p->radius);
    }
    if (dimension() == 1)
        return Eigen::VectorXd::Constant(1, support(Eigen::VectorXd::Ones(1)));
    return std::nullopt;
}

std::optional<double> SymmetricBody::exact_gaussian_measure() const
{
    if (auto hw = as_box())
        return gaussian_box_measure(*hw);
    return std::nullopt;
}

std::string SymmetricBody::describe() const
{
    std::ostringstream os;
    os.precision(6);
    std::visit(Overloaded{
                   [&](Box const& b) {
                       os << "box(";
                       for (Eigen::Index i = 0; i < b.half_widths.size(); ++i)
                           os << (i ? "," : "") << b.half_widths(i);
                       os << ")";
                   },
                   [&](Ellipsoid const& e) {
                       os << "ellipsoid(n=" << e.shape.dimension() << ")";
                   },
                   [&](PNormBall const& p) {
                       os << "l" << p.p << "-ball(n=" << p.dim
                          << ",r=" << p.radius << ")";
                   },
                   [&](HPolytopeSym const& h) {
                       os << "hpolytope(n=" << h.normals.cols()
                          << ",m=" << h.normals.rows() << ")";
                   },
               },
               v_);
    return os.str();
}

bool operator==(SymmetricBody const& a, SymmetricBody const& b)
{
    if (a.v_.index() != b.v_.index() || a.dimension() != b.dimension())
        return false;
    return std::visit(
        Overloaded{
            [&](Box const& x) {
                return x.half_widths == std::get<Box>(b.v_).half_widths;
            },
            [&](Ellipsoid const& x) {
                return x.shape.matrix()
                       == std::get<Ellipsoid>(b.v_).shape.matrix();
            },
            [&](PNormBall const& x) {
                auto const& y = std::get<PNormBall>(b.v_);
                return x.p == y.p && x.radius == y.radius;
            },
            [&](HPolytopeSym const& x) {
                auto const& y = std::get<HPolytopeSym>(b.v_);
                return x.normals.rows() == y.normals.rows()
                       && x.normals == y.normals && x.bounds == y.bounds;
            },
        },
        a.v_);
}

//---------------------------------------------------------------------------//
double gaussian_box_measure(Eigen::VectorXd const& half_widths)
{
    double prod = 1;
    for (Eigen::Index i = 0; i < half_widths.size(); ++i)
        prod *= std::erf(half_widths(i) / std::numbers::sqrt2);
    return prod;
}

double gaussian_box_measure(Eigen::VectorXd const& lo, Eigen::VectorXd const& hi)
{
    if (lo.size() != hi.size())
        throw std::invalid_argument("gaussian_box_measure: size mismatch");
    double prod = 1;
    for (Eigen::Index i = 0; i < lo.size(); ++i)
    {
        if (hi(i) <= lo(i))
            return 0;
        // Difference of upper tails is accurate when both ends are large
        double const a = lo(i) / std::numbers::sqrt2;
        double const b = hi(i) / std::numbers::sqrt2;
        double m;
        if (a >= 0)
            m = 0.5 * (std::erfc(a) - std::erfc(b));
        else if (b <= 0)
            m = 0.5 * (std::erfc(-b) - std::erfc(-a));
        else
            m = 0.5 * (std::erf(b) - std::erf(a));
        prod *= m;
    }
    return prod;
}

Eigen::VectorXd project_l1_ball(Eigen::VectorXd const& x, double radius)
{
    Eigen::VectorXd const a = x.cwiseAbs();
    if (a.sum() <= radius)
        return x;
    std::vector<double> u(a.data(), a.data() + a.size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cum = 0;
    double theta = 0;
    for (std::size_t j = 0; j < u.size(); ++j)
    {
        cum += u[j];
        double const cand = (cum - radius) / double(j + 1);
        if (u[j] - cand > 0)
            theta = cand;
    }
    Eigen::VectorXd y(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
        y(i) = std::copysign(std::max(a(i) - theta, 0.0), x(i));
    return y;
}

}  // namespace gbm
