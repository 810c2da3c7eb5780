#pragma once

// Relative entropy along displacement interpolants, its first two time
// derivatives, and the pointwise weighted Bochner identity.

#include "gaussbm/distributions.hpp"
#include "gaussbm/integration.hpp"
#include "gaussbm/transport.hpp"

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gbm {

//---------------------------------------------------------------------------//
/*!
 * Reference density proportional to exp(-W).
 *
 * The Gaussian case W = |x|^2 / 2 and coordinate-separable potentials
 * W(x) = sum_i w(x_i) admit one-dimensional quadrature; a general W is
 * integrated by Monte Carlo.
 */
class WeightedContext
{
  public:
    using Value = std::function<double(Eigen::VectorXd const&)>;
    using Gradient = std::function<Eigen::VectorXd(Eigen::VectorXd const&)>;
    using Hessian = std::function<Eigen::MatrixXd(Eigen::VectorXd const&)>;

    static WeightedContext gaussian(int n);
    static WeightedContext separable(int n, PotentialOracle w);
    static WeightedContext general(int n, Value value, Gradient grad, Hessian hess);

    int dimension() const { return n_; }
    bool is_gaussian() const { return kind_ == Kind::gaussian; }
    //! Gaussian or coordinate-separable
    bool is_separable() const { return kind_ != Kind::general; }

    double value(Eigen::VectorXd const& x) const;
    Eigen::VectorXd gradient(Eigen::VectorXd const& x) const;
    Eigen::MatrixXd hessian(Eigen::VectorXd const& x) const;

    //! Per-coordinate potential of a separable context
    PotentialOracle const& coordinate_potential() const { return w_; }

  private:
    enum class Kind
    {
        gaussian,
        separable,
        general
    };

    WeightedContext() = default;

    Kind kind_ = Kind::gaussian;
    int n_ = 1;
    PotentialOracle w_;
    Value value_;
    Gradient grad_;
    Hessian hess_;
};

//---------------------------------------------------------------------------//
/*!
 * Integrals along the interpolant at one time, all pulled back to the
 * Gaussian source.
 *
 * With w = T1 - T0, J_t the interpolant Jacobian and W' = J1 - J0:
 *   entropy = E[log phi_n(Z) - log det J_t + W(T_t)]
 *   l       = E[tr(W' J_t^{-1}) - <grad W(T_t), w>]       (= -dD/dt)
 *   curvature = E[tr((W' J_t^{-1})^2) + <Hess W(T_t) w, w>] (= d2D/dt2)
 *   speed   = E|w|^2
 * For non-Gaussian W the entropy omits the log normalizing constant of
 * exp(-W).
 */
struct FlowMoments
{
    Estimate entropy;
    Estimate l;
    Estimate curvature;
    Estimate speed;
    //! curvature - 2 speed - l^2 / n, with a delta-method standard error
    Estimate local_gap;
};

FlowMoments flow_moments(WeightedContext const& ctx,
                         Coupling const& c,
                         double t,
                         IntegrationSpec const& spec = {});

//! D(law of T_t(Z) || gamma_n)
Estimate pushforward_entropy(Coupling const& c,
                             double t,
                             IntegrationSpec const& spec = {});

Estimate entropy_first_derivative(WeightedContext const& ctx,
                                  Coupling const& c,
                                  double t,
                                  IntegrationSpec const& spec = {});

Estimate entropy_second_derivative(WeightedContext const& ctx,
                                   Coupling const& c,
                                   double t,
                                   IntegrationSpec const& spec = {});

/*!
 * curvature - 2 speed - l^2 / n for the Gaussian reference.
 *
 * Throws std::domain_error if either map has a certified slope above
 * 1 + 1e-8, since the underlying trace bounds need Jacobians below I.
 */
Estimate local_inequality_gap(WeightedContext const& ctx,
                              Coupling const& c,
                              double t,
                              IntegrationSpec const& spec = {});

//---------------------------------------------------------------------------//
struct EntropyCurveReport
{
    std::vector<double> t_grid;
    std::vector<double> entropy;
    std::vector<double> entropy_std_error;
    std::vector<double> first_derivative_analytic;
    std::vector<double> first_derivative_fd;
    std::vector<double> second_derivative_analytic;
    std::vector<double> second_derivative_fd;
    std::vector<double> l_values;
    std::vector<double> local_gap;
    std::vector<double> local_gap_std_error;
    std::vector<double> plain_gap;
    std::vector<double> sigma_gap;
    double theta = 0;
    IntegrationMethod method = IntegrationMethod::closed_form;

    double worst_first_fd_error = 0;  //!< max |analytic - fd| / |analytic|
    double worst_second_fd_error = 0;
    //! Grid points left out of the FD errors because the Jacobian ratio bound
    //! exceeded CurveOptions::max_fd_ratio (the derivatives of D blow up there)
    int fd_points_skipped = 0;
    double worst_concavity_defect = 0;  //!< largest midpoint shortfall of e^{-D/n}
    double min_plain_gap = 0;
    double min_sigma_gap = 0;
};

struct CurveOptions
{
    double fd_step = 1e-4;
    //! Absolute floors below which FD errors are not scaled by the value
    double first_fd_floor = 1e-10;
    double second_fd_floor = 1e-7;
    //! FD errors count only where jacobian_ratio_bound stays below this
    double max_fd_ratio = 1e4;
};

/*!
 * Upper bound on |DT1 - DT0| / DT_t over the source. Separable couplings are
 * scanned pointwise on [-10, 10]; otherwise extreme slopes are combined.
 */
double jacobian_ratio_bound(Coupling const& c, double t);

EntropyCurveReport entropy_curve(WeightedContext const& ctx,
                                 Coupling const& c,
                                 std::span<double const> t_grid,
                                 IntegrationSpec const& spec = {},
                                 CurveOptions const& opts = {});

//! CSV with columns t, D, dD_analytic, dD_fd, d2D_analytic, d2D_fd, l,
//! local_gap, plain_gap, sigma_gap
void write_entropy_curve_csv(EntropyCurveReport const& r, std::ostream& os);

//---------------------------------------------------------------------------//
//! Smooth vector field; derivatives are optional
struct VectorField
{
    int n = 1;
    std::function<Eigen::VectorXd(Eigen::VectorXd const&)> value;
    //! J(x)_{ij} = d v_i / d x_j
    std::function<Eigen::MatrixXd(Eigen::VectorXd const&)> jacobian;
    //! Hessian of each component v_i
    std::function<std::vector<Eigen::MatrixXd>(Eigen::VectorXd const&)> hessians;
    std::string label;
};

struct BochnerReport
{
    double lhs = 0;  //!< tr((grad v)^2) + <Hess W v, v>
    double rhs = 0;  //!< div^W(grad_v v) - <grad div^W v, v>
    double residual = 0;
    bool finite_differences = false;
};

/*!
 * Pointwise weighted Bochner identity. Uses the field's analytic
 * derivatives when present, otherwise nested central differences.
 */
BochnerReport bochner_identity_check(WeightedContext const& ctx,
                                     VectorField const& v,
                                     Eigen::VectorXd const& x);

//! Polynomial fields with exact derivatives: zero, constant, identity,
//! quadratic and cubic
std::vector<VectorField> standard_test_fields(int n, std::uint64_t seed = 7);

//! The three traces tr((AB)^2), tr(A^2 B), tr(A^2)
struct TraceChain
{
    double ab_squared = 0;
    double a2b = 0;
    double a2 = 0;
};

TraceChain trace_chain(Eigen::MatrixXd const& a, Eigen::MatrixXd const& b);

}  // namespace gbm
