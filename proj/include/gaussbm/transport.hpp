#pragma once

// Brenier maps from the standard Gaussian, couplings of two such maps over a
// shared source, and their displacement interpolants.

#include "gaussbm/distributions.hpp"
#include "gaussbm/gauss_core.hpp"
#include "gaussbm/integration.hpp"

#include <Eigen/Dense>

#include <memory>
#include <span>
#include <variant>
#include <vector>

namespace gbm {

//---------------------------------------------------------------------------//
/*!
 * Increasing rearrangement F^{-1} o Phi on the real line.
 *
 * Node values come from the target quantile function; node slopes are the
 * exact derivative phi(x) / rho(T(x)). Between nodes the map is the cubic
 * Hermite interpolant of these data, beyond the last node it is extended
 * linearly.
 */
class Monotone1D
{
  public:
    static constexpr int default_nodes = 2049;
    static constexpr double default_source_radius = 7.0;
    //! Largest |x| accepted from inverse()
    static constexpr double inverse_limit = 10.0;

    explicit Monotone1D(std::shared_ptr<EvenCdf1D const> target,
                        int nodes = default_nodes,
                        double source_radius = default_source_radius);

    double apply(double x) const;
    double derivative(double x) const;
    double inverse(double y) const;

    double source_radius() const { return radius_; }
    std::span<double const> nodes() const { return x_; }
    std::span<double const> values() const { return y_; }
    std::span<double const> slopes() const { return d_; }
    EvenCdf1D const& target() const { return *target_; }

  private:
    std::shared_ptr<EvenCdf1D const> target_;
    double radius_;
    double h_;
    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> d_;

    std::size_t cell(double x) const;
};

struct ScalarLinear
{
    double slope = 1;
};

using Map1D = std::variant<ScalarLinear, Monotone1D>;

double apply(Map1D const& m, double x);
double derivative(Map1D const& m, double x);
double inverse(Map1D const& m, double y);

struct LinearMap
{
    SpdMatrix s;
};

struct ProductMap
{
    std::vector<Map1D> factors;
};

//---------------------------------------------------------------------------//
/*!
 * Gradient of a convex function pushing the standard Gaussian forward.
 */
class BrenierMap
{
  public:
    using Variant = std::variant<LinearMap, Monotone1D, ProductMap>;

    static BrenierMap linear(SpdMatrix const& s);
    static BrenierMap monotone(Monotone1D m);
    static BrenierMap product(std::vector<Map1D> factors);
    static BrenierMap identity(int n);

    int dimension() const;
    Variant const& variant() const { return v_; }

    Eigen::VectorXd apply(Eigen::VectorXd const& x) const;
    Eigen::MatrixXd jacobian(Eigen::VectorXd const& x) const;
    double log_det(Eigen::VectorXd const& x) const;
    Eigen::VectorXd inverse(Eigen::VectorXd const& y) const;

    //! Acts coordinate-wise (diagonal linear maps included)
    bool separable() const;
    //! Coordinate maps of a separable map
    std::vector<Map1D> factors() const;

    LinearMap const* as_linear() const { return std::get_if<LinearMap>(&v_); }

  private:
    explicit BrenierMap(Variant v) : v_(std::move(v)) {}
    Variant v_;
};

BrenierMap brenier_from_gaussian(EvenStrongLogConcave const& target);

struct SlopeCertificate
{
    double max_slope = 0;
    double min_slope = 0;
};

/*!
 * Extreme slopes: exact eigenvalues for linear maps, node-to-node difference
 * quotients of the tabulated values for monotone maps.
 */
SlopeCertificate lipschitz_certificate(BrenierMap const& map);

//---------------------------------------------------------------------------//
struct Coupling
{
    Coupling(BrenierMap t0, BrenierMap t1);

    BrenierMap t0;
    BrenierMap t1;
    int n;

    bool separable() const { return t0.separable() && t1.separable(); }
    bool linear() const { return t0.as_linear() && t1.as_linear(); }
};

//! T_t = (1 - t) T0 + t T1
class InterpolantMap
{
  public:
    InterpolantMap(Coupling const& c, double t);

    double time() const { return t_; }
    Eigen::VectorXd apply(Eigen::VectorXd const& x) const;
    Eigen::MatrixXd jacobian(Eigen::VectorXd const& x) const;
    double log_det(Eigen::VectorXd const& x) const;
    //! Solves T_t(x) = y
    Eigen::VectorXd inverse(Eigen::VectorXd const& y) const;

  private:
    Coupling c_;
    double t_;
};

InterpolantMap interpolant(Coupling const& c, double t);

/*!
 * Expectation of f under the one-dimensional standard Gaussian using 8-point
 * Gauss-Legendre panels that follow the node grid of monotone maps, over
 * [-10, 10].
 */
double source_expectation_1d(std::function<double(double)> const& f);

//! E|T0(Z) - T1(Z)|^2
Estimate mean_square_displacement(Coupling const& c,
                                  IntegrationSpec const& spec = {});

struct NoCrossingReport
{
    double min_monotonicity = 0;  //!< min <T_t x - T_t y, x - y> / |x - y|^2
    double certified_lambda = 0;  //!< smaller certified lower slope
};

NoCrossingReport no_crossing_check(Coupling const& c,
                                   int pair_count,
                                   std::span<double const> t_grid,
                                   std::uint64_t seed);

//! (T1 - T0)(T_t^{-1}(y))
Eigen::VectorXd velocity_at(Coupling const& c, double t, Eigen::VectorXd const& y);

}  // namespace gbm
