#include "gaussbm/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>

namespace gbm::quad {
namespace {

constexpr std::array<double, 8> kGlNodes = {
    -0.9602898564975362316835609,
    -0.7966664774136267395915539,
    -0.5255324099163289858177390,
    -0.1834346424956498049394761,
    0.1834346424956498049394761,
    0.5255324099163289858177390,
    0.7966664774136267395915539,
    0.9602898564975362316835609,
};

constexpr std::array<double, 8> kGlWeights = {
    0.1012285362903762591525314,
    0.2223810344533744705443560,
    0.3137066458778872873379622,
    0.3626837833783619829651504,
    0.3626837833783619829651504,
    0.3137066458778872873379622,
    0.2223810344533744705443560,
    0.1012285362903762591525314,
};

constexpr int kMaxPanels = 4000;

}  // namespace

//---------------------------------------------------------------------------//
Result integrate(
    Integrand const& f, double a, double b, double rel_tol, double abs_floor)
{
    if (!(a <= b))
        throw std::invalid_argument("integrate: require a <= b");
    if (a == b)
        return {};

    // Globally adaptive: always bisect the panel with the largest error.
    // Boost's recursive driver compares unit-interval errors against scaled
    // targets, so only its single-panel rule is used.
    using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
    struct Panel
    {
        double a, b, value, err, l1;
        bool operator<(Panel const& o) const { return err < o.err; }
    };
    auto rule = [&f](double lo, double hi) {
        Panel p{lo, hi, 0, 0, 0};
        p.value = GK::integrate(f, lo, hi, 0, 0.0, &p.err, &p.l1);
        p.err *= 0.5 * (hi - lo);
        return p;
    };
    std::vector<Panel> heap{rule(a, b)};
    double value = heap[0].value, err = heap[0].err, l1 = heap[0].l1;
    auto converged = [&] {
        return err <= std::max(rel_tol * std::abs(value), abs_floor) || err <= rel_tol * l1;
    };
    for (int split = 0; split < kMaxPanels && !converged(); ++split)
    {
        if (!std::isfinite(value))
            break;
        std::pop_heap(heap.begin(), heap.end());
        Panel const worst = heap.back();
        heap.pop_back();
        double const mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b))
            break;
        Panel const left = rule(worst.a, mid);
        Panel const right = rule(mid, worst.b);
        value += left.value + right.value - worst.value;
        err += left.err + right.err - worst.err;
        l1 += left.l1 + right.l1 - worst.l1;
        for (Panel const& p : {left, right})
        {
            heap.push_back(p);
            std::push_heap(heap.begin(), heap.end());
        }
    }
    if (!std::isfinite(value))
        throw QuadratureError("integrate: non-finite integral");
    if (!converged())
    {
        // Recompute the sums to shed accumulated update rounding
        value = err = l1 = 0;
        for (Panel const& p : heap)
        {
            value += p.value;
            err += p.err;
            l1 += p.l1;
        }
    }
    if (!converged())
    {
        std::ostringstream os;
        os << "integrate: no convergence on [" << a << ", " << b
           << "], estimate " << value << " +/- " << err;
        throw QuadratureError(os.str());
    }
    return {value, err};
}

Result integrate_pieces(Integrand const& f,
                        std::span<double const> breakpoints,
                        double rel_tol,
                        double abs_floor)
{
    Result total;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
    {
        if (breakpoints[i + 1] <= breakpoints[i])
            continue;
        Result r = integrate(
            f, breakpoints[i], breakpoints[i + 1], rel_tol, abs_floor);
        total.value += r.value;
        total.error += r.error;
    }
    return total;
}

std::span<double const> gl_nodes()
{
    return kGlNodes;
}

std::span<double const> gl_weights()
{
    return kGlWeights;
}

double gauss_legendre(Integrand const& f, double a, double b)
{
    double const half = 0.5 * (b - a);
    double const mid = 0.5 * (a + b);
    double sum = 0;
    for (std::size_t i = 0; i < kGlNodes.size(); ++i)
        sum += kGlWeights[i] * f(mid + half * kGlNodes[i]);
    return half * sum;
}

double composite_gauss_legendre(Integrand const& f,
                                std::span<double const> breakpoints)
{
    double sum = 0;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
        sum += gauss_legendre(f, breakpoints[i], breakpoints[i + 1]);
    return sum;
}

Result gaussian_expectation(Integrand const& f,
                            std::span<double const> breakpoints,
                            double rel_tol,
                            double radius)
{
    std::vector<double> pts{-radius, 0.0, radius};
    for (double b : breakpoints)
    {
        if (b > -radius && b < radius)
            pts.push_back(b);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    auto weighted = [&f](double x) { return f(x) * normal_pdf(x); };
    return integrate_pieces(weighted, pts, rel_tol, 1e-300);
}

//---------------------------------------------------------------------------//
double normal_pdf(double x)
{
    return std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi);
}

double normal_log_pdf(double x)
{
    return -0.5 * x * x - 0.5 * std::log(2 * std::numbers::pi);
}

double normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double normal_quantile(double u)
{
    if (!(u > 0.0 && u < 1.0))
        throw std::invalid_argument("normal_quantile: u must lie in (0, 1)");
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

}  // namespace gbm::quad
