#include "gaussbm/gauss_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace gbm {
namespace {

void require_unit_interval(double t, char const* who)
{
    if (!(t >= 0.0 && t <= 1.0))
    {
        std::ostringstream os;
        os << who << ": t = " << t << " outside [0, 1]";
        throw std::invalid_argument(os.str());
    }
}

}  // namespace

//---------------------------------------------------------------------------//
ExtendedReal ExtendedReal::finite(double v)
{
    if (!std::isfinite(v))
        throw std::invalid_argument("ExtendedReal::finite: non-finite value");
    return ExtendedReal(Kind::finite, v);
}

ExtendedReal ExtendedReal::from_double(double v)
{
    if (std::isnan(v))
        throw std::invalid_argument("ExtendedReal: NaN");
    if (std::isinf(v))
        return v > 0 ? pos_infinity() : neg_infinity();
    return ExtendedReal(Kind::finite, v);
}

double ExtendedReal::to_double() const
{
    switch (kind_)
    {
        case Kind::neg_infinity:
            return -std::numeric_limits<double>::infinity();
        case Kind::pos_infinity:
            return std::numeric_limits<double>::infinity();
        case Kind::finite:
            break;
    }
    return value_;
}

std::string ExtendedReal::str() const
{
    if (kind_ == Kind::neg_infinity)
        return "-inf";
    if (kind_ == Kind::pos_infinity)
        return "inf";
    std::ostringstream os;
    os << value_;
    return os.str();
}

bool operator<(ExtendedReal const& a, ExtendedReal const& b)
{
    return a.to_double() < b.to_double();
}

//---------------------------------------------------------------------------//
SpdMatrix::SpdMatrix(Eigen::MatrixXd const& m)
{
    if (m.rows() == 0 || m.rows() != m.cols())
        throw std::invalid_argument("SpdMatrix: matrix must be square and "
                                    "non-empty");
    if (!m.allFinite())
        throw std::invalid_argument("SpdMatrix: non-finite entries");

    double const scale = m.cwiseAbs().maxCoeff();
    double const asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale)
    {
        std::ostringstream os;
        os << "SpdMatrix: asymmetric input (deviation " << asym << ")";
        throw std::invalid_argument(os.str());
    }
    m_ = 0.5 * (m + m.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m_);
    if (es.info() != Eigen::Success)
        throw std::invalid_argument("SpdMatrix: eigendecomposition failed");
    evals_ = es.eigenvalues();
    evecs_ = es.eigenvectors();

    double const top = evals_(evals_.size() - 1);
    if (!(top > 0.0) || !(evals_(0) > 1e-12 * top))
    {
        std::ostringstream os;
        os << "SpdMatrix: not positive definite (eigenvalues in [" << evals_(0)
           << ", " << top << "])";
        throw std::invalid_argument(os.str());
    }
}

SpdMatrix SpdMatrix::identity(int n)
{
    return SpdMatrix(Eigen::MatrixXd::Identity(n, n));
}

SpdMatrix SpdMatrix::scalar(int n, double value)
{
    return SpdMatrix(value * Eigen::MatrixXd::Identity(n, n));
}

SpdMatrix SpdMatrix::diagonal(Eigen::VectorXd const& diag)
{
    return SpdMatrix(Eigen::MatrixXd(diag.asDiagonal()));
}

bool SpdMatrix::is_diagonal() const
{
    Eigen::MatrixXd off = m_;
    off.diagonal().setZero();
    return off.isZero(0.0);
}

Eigen::MatrixXd SpdMatrix::inverse() const
{
    return evecs_ * evals_.cwiseInverse().asDiagonal() * evecs_.transpose();
}

//---------------------------------------------------------------------------//
double power_mean(ExtendedReal p, double t, double x, double y)
{
    require_unit_interval(t, "power_mean");
    if (!std::isfinite(x) || !std::isfinite(y))
        throw std::invalid_argument("power_mean: non-finite argument");
    if (x < 0 || y < 0)
        throw std::invalid_argument("power_mean: negative argument");

    if (x == 0.0 || y == 0.0)
        return 0.0;
    if (t == 0.0)
        return x;
    if (t == 1.0)
        return y;

    switch (p.kind())
    {
        case ExtendedReal::Kind::neg_infinity:
            return std::min(x, y);
        case ExtendedReal::Kind::pos_infinity:
            return std::max(x, y);
        case ExtendedReal::Kind::finite:
            break;
    }

    double const q = p.to_double();
    if (q == 0.0)
        return std::exp((1 - t) * std::log(x) + t * std::log(y));

    double const direct = (1 - t) * std::pow(x, q) + t * std::pow(y, q);
    if (std::isfinite(direct) && direct > std::numeric_limits<double>::min())
        return std::pow(direct, 1.0 / q);

    // Overflow or underflow of x^q: work in the log domain.
    double const wa = std::log1p(-t) + q * std::log(x);
    double const wb = std::log(t) + q * std::log(y);
    double const hi = std::max(wa, wb);
    double const lo = std::min(wa, wb);
    return std::exp((hi + std::log1p(std::exp(lo - hi))) / q);
}

double log_mixture(double t, double u, double v)
{
    require_unit_interval(t, "log_mixture");
    if (t == 0.0)
        return u;
    if (t == 1.0)
        return v;
    double const wa = std::log1p(-t) + u;
    double const wb = std::log(t) + v;
    double const hi = std::max(wa, wb);
    return hi + std::log1p(std::exp(std::min(wa, wb) - hi));
}

//---------------------------------------------------------------------------//
double sigma_theta_limit(int n)
{
    return std::sqrt(n / 2.0) * std::numbers::pi;
}

double sigma_comparison(SigmaParams const& params, double t)
{
    require_unit_interval(t, "sigma_comparison");
    if (params.n < 1)
        throw std::invalid_argument("sigma_comparison: dimension must be >= 1");
    if (!(params.theta >= 0.0) || !std::isfinite(params.theta))
        throw std::invalid_argument("sigma_comparison: theta must be finite "
                                    "and nonnegative");
    if (params.theta >= sigma_theta_limit(params.n))
    {
        std::ostringstream os;
        os << "sigma_comparison: theta = " << params.theta
           << " is not below sqrt(n/2)*pi = " << sigma_theta_limit(params.n);
        throw std::domain_error(os.str());
    }

    double const k = std::sqrt(2.0 / params.n) * params.theta;
    if (k > 1e-6)
    {
        // The ratio is >= t; clamp away rounding below it.
        return std::max(t, std::sin(k * t) / std::sin(k));
    }

    // sin(kt)/sin(k) = t [1 + (1-t^2) k^2/6 + (7 - 10t^2 + 3t^4) k^4/360 + ...]
    double const k2 = k * k;
    double const t2 = t * t;
    return t
           * (1.0 + (1.0 - t2) * k2 / 6.0
              + (7.0 - 10.0 * t2 + 3.0 * t2 * t2) * k2 * k2 / 360.0);
}

//---------------------------------------------------------------------------//
SpdMatrix spd_sqrt(SpdMatrix const& m)
{
    Eigen::MatrixXd const& v = m.eigenvectors();
    Eigen::MatrixXd r = v * m.eigenvalues().cwiseSqrt().asDiagonal()
                        * v.transpose();
    return SpdMatrix(0.5 * (r + r.transpose()));
}

double gaussian_relative_entropy_from_spectrum(Eigen::VectorXd const& evals)
{
    double sum = 0;
    for (double lam : evals)
    {
        if (!(lam > 0) || !std::isfinite(lam))
            throw std::invalid_argument("gaussian_relative_entropy: "
                                        "covariance is not positive definite");
        // lam - 1 - log(lam), accurate near lam = 1
        double const d = lam - 1.0;
        sum += d - std::log1p(d);
    }
    return 0.5 * sum;
}

double gaussian_relative_entropy(SpdMatrix const& cov)
{
    return gaussian_relative_entropy_from_spectrum(cov.eigenvalues());
}

//---------------------------------------------------------------------------//
BmGaps entropic_bm_gaps(
    double d0, double d1, double dt, double t, int n, double theta)
{
    require_unit_interval(t, "entropic_bm_gaps");
    if (n < 1)
        throw std::invalid_argument("entropic_bm_gaps: dimension must be >= 1");
    for (double d : {d0, d1, dt})
    {
        if (!std::isfinite(d) || d < -1e-9)
            throw std::invalid_argument("entropic_bm_gaps: relative entropies "
                                        "must be finite and nonnegative");
    }

    double const e0 = std::exp(-d0 / n);
    double const e1 = std::exp(-d1 / n);
    double const et = std::exp(-dt / n);

    BmGaps out;
    out.plain_gap = et - (1 - t) * e0 - t * e1;
    SigmaParams const sp{n, theta};
    out.sigma_gap = et - sigma_comparison(sp, 1 - t) * e0
                    - sigma_comparison(sp, t) * e1;
    return out;
}

}  // namespace gbm
