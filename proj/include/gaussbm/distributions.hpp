#pragma once

// Even strongly log-concave distributions: representation, validation,
// Ornstein-Uhlenbeck smoothing and sampling.

#include "gaussbm/body.hpp"
#include "gaussbm/gauss_core.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace gbm {

//! Even convex potential U with its first two derivatives
struct PotentialOracle
{
    std::function<double(double)> value;
    std::function<double(double)> first;
    std::function<double(double)> second;
    std::string label;
};

//! U(x) = x^2/2 + lambda x^4
PotentialOracle quartic_potential(double lambda);

//---------------------------------------------------------------------------//
/*!
 * Cumulative distribution table of an even density on [-R, R].
 *
 * Only the left half is tabulated; values on the right follow from
 * F(x) = 1 - F(-x), which keeps both tails accurate and the quantile map
 * exactly odd about 1/2.
 */
class EvenCdf1D
{
  public:
    using LogDensity = std::function<double(double)>;

    static constexpr int default_cells = 2048;

    //! log_density need not be normalized; it must be even on [-R, R]
    EvenCdf1D(LogDensity log_density, double radius, int cells = default_cells);

    double radius() const { return radius_; }

    double cdf(double x) const;
    //! Inverse of cdf on (0, 1), accurate to 1e-12 absolute
    double quantile(double u) const;
    //! Normalized density; zero outside [-R, R]
    double pdf(double x) const;
    double log_pdf(double x) const;

  private:
    LogDensity log_density_;
    double radius_;
    double shift_;  // log density at the origin
    double width_;
    std::vector<double> cum_;  // unnormalized mass of [-R, -R + k width]
    double half_mass_;

    double left_mass(double x) const;  // unnormalized mass of [-R, x], x <= 0
    double left_quantile(double m) const;
};

//---------------------------------------------------------------------------//
struct GaussianZeroMean
{
    SpdMatrix cov;
};

struct OneDPotential
{
    PotentialOracle potential;
    double truncation_radius = 10;
};

struct ProductOfOneD
{
    std::vector<OneDPotential> factors;
};

struct TruncatedGaussian
{
    SymmetricBody body;
};

//---------------------------------------------------------------------------//
/*!
 * Zero-symmetric law with density exp(-U), Hess U >= I.
 *
 * Separable non-Gaussian members (1-D potentials, products and
 * box-truncated Gaussians) carry one EvenCdf1D per coordinate, built at
 * construction.
 */
class EvenStrongLogConcave
{
  public:
    using Variant = std::variant<GaussianZeroMean,
                                 OneDPotential,
                                 ProductOfOneD,
                                 TruncatedGaussian>;

    static EvenStrongLogConcave gaussian(SpdMatrix const& cov);
    static EvenStrongLogConcave one_d(PotentialOracle potential,
                                      double truncation_radius = 10);
    static EvenStrongLogConcave product(std::vector<OneDPotential> factors);
    static EvenStrongLogConcave truncated_gaussian(SymmetricBody const& body);

    int dimension() const;
    Variant const& variant() const { return v_; }
    std::string describe() const;

    //! Unnormalized log density; -inf outside the support
    double log_density(Eigen::VectorXd const& x) const;

    //! True when every coordinate has a CDF table
    bool separable() const { return !tables_.empty(); }
    //! Table for coordinate i of a separable non-Gaussian law
    std::shared_ptr<EvenCdf1D const> table(int i) const;

  private:
    explicit EvenStrongLogConcave(Variant v);

    Variant v_;
    std::vector<std::shared_ptr<EvenCdf1D const>> tables_;
};

//---------------------------------------------------------------------------//
struct ValidationReport
{
    bool even_ok = false;
    bool slc_ok = false;
    double worst_violation = 0;  //!< largest defect in Hess U >= I
    double worst_asymmetry = 0;  //!< largest relative |rho(x) - rho(-x)|
};

ValidationReport validate(EvenStrongLogConcave const& dist);

//! Law of sqrt(1 - eps) X + sqrt(eps) Z for eps in (0, 1/2)
EvenStrongLogConcave ou_smooth(EvenStrongLogConcave const& dist, double eps);

struct SampleSet
{
    int dimension = 0;
    Eigen::MatrixXd points;  //!< one sample per row
    std::uint64_t seed = 0;
    std::string generator_id;
};

class SamplingError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

SampleSet sample(EvenStrongLogConcave const& dist, int count, std::uint64_t seed);

//! CDF of a one-dimensional law
double cdf_1d(EvenStrongLogConcave const& dist, double x);

}  // namespace gbm
