#pragma once

// One-dimensional integration helpers and standard normal functions.

#include <functional>
#include <span>
#include <stdexcept>
#include <string>

namespace gbm::quad {

class QuadratureError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

struct Result
{
    double value = 0;
    double error = 0;  //!< estimated absolute error
};

using Integrand = std::function<double(double)>;

/*!
 * Globally adaptive 21-point Gauss-Kronrod integration on [a, b].
 *
 * Throws QuadratureError when, after at most 4000 bisections, the error
 * estimate exceeds both max(rel_tol * |I|, abs_floor) and rel_tol * L1.
 */
Result integrate(Integrand const& f,
                 double a,
                 double b,
                 double rel_tol = 1e-10,
                 double abs_floor = 1e-300);

//! Adaptive integration over consecutive pieces [x_0, x_1], [x_1, x_2], ...
Result integrate_pieces(Integrand const& f,
                        std::span<double const> breakpoints,
                        double rel_tol = 1e-10,
                        double abs_floor = 1e-300);

//! Fixed 8-point Gauss-Legendre rule on [a, b]
double gauss_legendre(Integrand const& f, double a, double b);

//! 8-point Gauss-Legendre abscissae and weights on [-1, 1]
std::span<double const> gl_nodes();
std::span<double const> gl_weights();

//! Composite 8-point Gauss-Legendre over consecutive breakpoint panels
double composite_gauss_legendre(Integrand const& f,
                                std::span<double const> breakpoints);

/*!
 * Expectation of f under the one-dimensional standard Gaussian.
 *
 * The integral is taken over [-radius, radius]; breakpoints inside that range
 * (discontinuities of f) are honoured.
 */
Result gaussian_expectation(Integrand const& f,
                            std::span<double const> breakpoints = {},
                            double rel_tol = 1e-10,
                            double radius = 12.0);

double normal_pdf(double x);
double normal_cdf(double x);
//! Inverse of normal_cdf on (0, 1)
double normal_quantile(double u);
//! log of the standard normal density
double normal_log_pdf(double x);

}  // namespace gbm::quad
