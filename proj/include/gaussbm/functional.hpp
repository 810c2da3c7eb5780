#pragma once

// Sup-convolutions of log-concave functions and the functional inequalities
// checked on them.

#include "gaussbm/body.hpp"
#include "gaussbm/gauss_core.hpp"
#include "gaussbm/geometry.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace gbm {

//! f(x) = exp(-x^T A x / 2), A positive semidefinite
struct GaussianQuadratic
{
    Eigen::MatrixXd a;
};

struct BodyIndicator
{
    SymmetricBody k;
};

//! Even function on [-R, R] from log-values at k R / (m - 1), k = 0..m-1;
//! log-linear between nodes and zero outside
struct TabulatedEven1D
{
    double radius = 1;
    std::vector<double> log_values;
};

class LogConcaveFunction
{
  public:
    using Variant = std::variant<GaussianQuadratic, BodyIndicator, TabulatedEven1D>;

    static LogConcaveFunction gaussian(Eigen::MatrixXd const& a);
    static LogConcaveFunction gaussian_1d(double a);
    static LogConcaveFunction indicator(SymmetricBody const& k);
    static LogConcaveFunction tabulated(double radius, std::vector<double> log_values);

    int dimension() const;
    Variant const& variant() const { return v_; }
    std::string describe() const;

    double value(Eigen::VectorXd const& x) const;
    double value_1d(double x) const;
    //! Half-width of the support in 1-D (infinite for Gaussians)
    double support_radius_1d() const;

    //! Integral against the standard Gaussian when computable without sampling
    std::optional<double> gaussian_integral() const;

  private:
    explicit LogConcaveFunction(Variant v) : v_(std::move(v)) {}
    Variant v_;
};

struct SupConvolutionSpec
{
    LogConcaveFunction f;
    LogConcaveFunction g;
    ExtendedReal p = ExtendedReal::finite(0);
    double t = 0.5;
};

struct SearchSpec
{
    int grid_points = 4097;
    double radius = 10;  //!< x0 ranges over [-radius, radius]
    double polish_tol = 1e-10;
};

struct SupConvolutionValue
{
    double value = 0;
    //! True when value comes from a search and may underestimate h(x)
    bool lower_bound = false;
};

SupConvolutionValue sup_convolution(SupConvolutionSpec const& spec,
                                    Eigen::VectorXd const& x,
                                    SearchSpec const& search = {});

/*!
 * One-dimensional sup-convolution of arbitrary nonnegative functions by grid
 * search over x0 with golden-section refinement around the best node.
 */
double sup_convolution_search_1d(std::function<double(double)> const& f,
                                 std::function<double(double)> const& g,
                                 ExtendedReal p,
                                 double t,
                                 double x,
                                 SearchSpec const& search = {});

//! Matrix C with h(x) = exp(-x^T C x / 2) for a Gaussian pair at p = 0
Eigen::MatrixXd gaussian_sup_convolution_form(Eigen::MatrixXd const& a,
                                              Eigen::MatrixXd const& b,
                                              double t);

//---------------------------------------------------------------------------//
enum class Verdict
{
    pass,
    inconclusive,
    fail
};

char const* to_string(Verdict v);

struct BblReport
{
    double lhs = 0;
    double rhs = 0;
    double gap = 0;
    ExtendedReal exponent = ExtendedReal::finite(0);
    //! Allowed integration error; gaps above -tolerance pass
    double tolerance = 0;
    //! Extra allowance for search-based lower bounds of h
    double slack = 0;
    Verdict verdict = Verdict::fail;
    bool exact = false;
};

//! p / (1 + n p), with p = inf mapped to 1/n
ExtendedReal bbl_exponent(ExtendedReal p, int n);

//! (beta - 1) p / ((beta - 1) + beta n p), with p = inf mapped to (beta - 1) / (beta n)
ExtendedReal homogeneous_exponent(ExtendedReal p, int n, double beta);

Verdict bbl_verdict(double gap, double tolerance, double slack);

struct IntegratorSpec
{
    int panels = 128;
    int samples = 1'000'000;  //!< Monte Carlo budget for indicator pairs
    std::uint64_t seed = 0;
};

BblReport bbl_check(SupConvolutionSpec const& spec,
                    IntegratorSpec const& integ = {},
                    SearchSpec const& search = {});

//! Radially decreasing even function on the line
struct RadialFunction
{
    std::function<double(double)> value;
    double support_radius = 10;  //!< zero beyond
    std::string label;
};

//! exp(-(|x| / a)^m)
RadialFunction smooth_cap(double a, double m);
RadialFunction radial_from(LogConcaveFunction const& f);

//! Z_beta = integral of exp(-|x|^beta / beta) over the line
double homogeneous_normalizer(double beta);

BblReport bbl_homogeneous_check(RadialFunction const& f,
                                RadialFunction const& g,
                                ExtendedReal p,
                                double t,
                                double beta,
                                IntegratorSpec const& integ = {},
                                SearchSpec const& search = {});

//---------------------------------------------------------------------------//
struct DvMember
{
    std::string label;
    bool accepted = false;
    std::string diagnostic;
    double value = 0;  //!< integral phi dmu - D(mu || nu)
};

struct DvReport
{
    double lhs = 0;  //!< log integral e^phi dnu
    double sup_over_family = 0;
    double gibbs_value = 0;
    double equality_residual = 0;
    bool bound_holds = false;  //!< every accepted member stays below lhs
    std::vector<DvMember> members;
};

/*!
 * Discrete duality on a finite set with reference weights nu (summing to 1).
 * Each family member is a probability vector on the same set.
 */
DvReport dv_duality_check(std::vector<double> const& phi,
                          std::vector<double> const& nu,
                          std::vector<std::vector<double>> const& family);

/*!
 * Duality against the 1-D standard Gaussian by quadrature. Family members are
 * laws on the line; point masses are rejected as not absolutely continuous.
 */
DvReport dv_duality_check_gaussian(std::function<double(double)> const& phi,
                                   std::vector<CandidateLaw> const& family);

}  // namespace gbm
