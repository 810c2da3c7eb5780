#pragma once

// Minkowski combinations of symmetric bodies, Gaussian measure estimates and
// the geometric Brunn-Minkowski type checks built on them.

#include "gaussbm/body.hpp"
#include "gaussbm/distributions.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace gbm {

//! (1 - t) K0 + t K1
class MinkowskiCombination
{
  public:
    MinkowskiCombination(SymmetricBody k0, SymmetricBody k1, double t);

    SymmetricBody const& k0() const { return k0_; }
    SymmetricBody const& k1() const { return k1_; }
    double t() const { return t_; }
    int dimension() const { return k0_.dimension(); }

    double support(Eigen::VectorXd const& u) const;
    //! Lower bound on the inradius: (1 - t) r0 + t r1
    double inradius() const;
    //! The combination as a single body when this is exact (equal bodies,
    //! two boxes, or two p-norm balls with the same p)
    std::optional<SymmetricBody> exact_body() const;
    //! Support values over direction_net(n), in net order
    std::vector<double> const& net_support() const { return net_h_; }

  private:
    SymmetricBody k0_;
    SymmetricBody k1_;
    double t_;
    std::vector<double> net_h_;
};

enum class Membership
{
    inside,
    outside,
    boundary_uncertain
};

char const* to_string(Membership m);

//! Unit directions: +-1 in 1-D, 256 equally spaced in 2-D, 1024 Fibonacci
//! points in 3-D, 1024 seeded random directions otherwise
std::vector<Eigen::VectorXd> const& direction_net(int n);

/*!
 * Three-valued membership in a Minkowski combination.
 *
 * Alternating exact minimization over y0 in K0 and y1 in K1 of
 * |x' - (1-t) y0 - t y1| at pushed-out points x' = x (1 + delta), with delta
 * taken from the margin seen on the direction net and finally tol/|x|.
 * A residual below delta * r_in certifies x inside (r_in a lower bound on
 * the inradius). A direction u with <x, u> > h(u) + tol, taken from the
 * residual or from the direction net, certifies x outside.
 */
Membership combo_membership(MinkowskiCombination const& mc,
                            Eigen::VectorXd const& x,
                            double tol = 1e-6,
                            int max_iter = 1000);

//---------------------------------------------------------------------------//
struct MeasureEstimate
{
    double estimate = 0;
    double std_error = 0;
    double uncertain_fraction = 0;
    bool unreliable = false;  //!< uncertain_fraction above 1e-3
};

struct MeasureOptions
{
    double tol = 1e-6;
    int max_iter = 1000;
};

using Region = std::variant<SymmetricBody, MinkowskiCombination>;

/*!
 * Hit fraction of N(0, I) samples. Boundary-uncertain points count as
 * misses, so the estimate is biased low by at most their fraction.
 */
MeasureEstimate gaussian_measure_mc(Region const& region,
                                    int samples,
                                    std::uint64_t seed,
                                    MeasureOptions const& opts = {});

struct GeometricBmReport
{
    double lhs = 0;  //!< gamma((1-t) K0 + t K1)^{1/n}
    double rhs = 0;  //!< (1-t) gamma(K0)^{1/n} + t gamma(K1)^{1/n}
    double gap = 0;
    double std_error = 0;
    double confidence_gap = 0;  //!< gap - 3 std_error
    double uncertain_fraction = 0;
    bool exact = false;
    bool unreliable = false;
};

GeometricBmReport geometric_bm_check(SymmetricBody const& k0,
                                     SymmetricBody const& k1,
                                     double t,
                                     int samples = 1'000'000,
                                     std::uint64_t seed = 0,
                                     MeasureOptions const& opts = {});

struct CounterexampleReport
{
    double lhs = 0;
    double rhs = 0;
    double gap = 0;
};

/*!
 * Both sides of the dimensional inequality with K1 = {shift}, a single
 * point. Needs a box or 1-D body.
 */
CounterexampleReport asymmetry_counterexample(SymmetricBody const& k0,
                                              Eigen::VectorXd const& shift,
                                              double t);

//! gamma restricted to k and normalized; rejects gamma(k) < 1e-9
EvenStrongLogConcave restricted_measure(SymmetricBody const& k);

//---------------------------------------------------------------------------//
//! Probability law on the line, absolutely continuous or a point mass
struct CandidateLaw
{
    std::string label;
    double support_radius = 0;  //!< law lives in [-R, R]
    std::function<double(double)> log_density;  //!< unnormalized
    bool point_mass = false;
};

CandidateLaw restriction_candidate(double half_width);
CandidateLaw uniform_candidate(double half_width);
//! N(0, sigma^2) conditioned on [-half_width, half_width]
CandidateLaw truncated_normal_candidate(double sigma, double half_width);
//! w * restriction + (1 - w) * uniform on [-half_width, half_width]
CandidateLaw mixture_candidate(double w, double half_width);
CandidateLaw point_mass_candidate();

//! D(mu || gamma) for a 1-D candidate (infinite for a point mass)
double candidate_relative_entropy(CandidateLaw const& law);

struct CandidateResult
{
    std::string label;
    bool accepted = false;
    std::string diagnostic;
    double relative_entropy = 0;
    double exp_minus_entropy = 0;
};

struct VariationalReport
{
    double measure = 0;  //!< gamma(k)
    double best_exponential = 0;  //!< max e^{-D} over accepted candidates
    //! e^{-D} of the normalized restriction is within 1e-6 of gamma(k)
    bool attained_by_restriction = false;
    bool bound_holds = false;  //!< gamma(k) >= e^{-D} - 1e-10 for all
    std::vector<CandidateResult> candidates;
};

/*!
 * Checks gamma(k) >= exp(-D(mu || gamma)) over candidates supported in k,
 * with equality at the normalized restriction. One-dimensional bodies only.
 */
VariationalReport variational_principle_check(
    SymmetricBody const& k, std::vector<CandidateLaw> const& candidates);

}  // namespace gbm
