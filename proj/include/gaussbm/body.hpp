#pragma once

// Origin-symmetric convex bodies with membership, projection and support
// function oracles.

#include "gaussbm/gauss_core.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace gbm {

//! Axis-aligned box prod_i [-h_i, h_i]
struct Box
{
    Eigen::VectorXd half_widths;
};

//! { x : x^T A x <= 1 }
struct Ellipsoid
{
    SpdMatrix shape;
    Eigen::MatrixXd shape_inverse;
};

//! { x : ||x||_p <= radius }, p in [1, inf]
struct PNormBall
{
    int dim = 1;
    double p = 2;
    double radius = 1;
};

//! { x : |<a_i, x>| <= b_i for every row i }
struct HPolytopeSym
{
    Eigen::MatrixXd normals;  //!< one row a_i per slab
    Eigen::VectorXd bounds;  //!< b_i > 0
    std::vector<Eigen::VectorXd> vertices;  //!< cached for support queries
};

//---------------------------------------------------------------------------//
/*!
 * Origin-symmetric convex body.
 *
 * Symmetry holds structurally for every variant; boundedness is checked at
 * construction. Projection is exact for boxes, ellipsoids and p-norm balls
 * with p in {1, 2, inf} and for small polytopes (face enumeration); larger
 * polytopes use cyclic Dykstra projection onto the slabs and general p-norms
 * a nested bisection.
 */
class SymmetricBody
{
  public:
    using Variant = std::variant<Box, Ellipsoid, PNormBall, HPolytopeSym>;

    static SymmetricBody box(Eigen::VectorXd const& half_widths);
    //! One-dimensional [-a, a]
    static SymmetricBody interval(double half_width);
    static SymmetricBody ellipsoid(SpdMatrix const& shape);
    static SymmetricBody pnorm_ball(int dim, double p, double radius);
    static SymmetricBody hpolytope(Eigen::MatrixXd const& normals,
                                   Eigen::VectorXd const& bounds);

    int dimension() const;
    Variant const& variant() const { return v_; }

    bool contains(Eigen::VectorXd const& x) const;
    Eigen::VectorXd project(Eigen::VectorXd const& x) const;
    double support(Eigen::VectorXd const& u) const;
    //! Radius of the largest centered Euclidean ball inside the body
    double inradius() const;

    //! Half widths when the body is a box (any 1-D body, sup-norm balls)
    std::optional<Eigen::VectorXd> as_box() const;
    //! gamma(K) when a closed form exists (boxes and 1-D bodies)
    std::optional<double> exact_gaussian_measure() const;

    std::string describe() const;

    friend bool operator==(SymmetricBody const& a, SymmetricBody const& b);

  private:
    explicit SymmetricBody(Variant v) : v_(std::move(v)) {}

    Variant v_;
};

//! gamma(prod [-h_i, h_i]) = prod erf(h_i / sqrt 2)
double gaussian_box_measure(Eigen::VectorXd const& half_widths);

//! gamma of an axis-aligned box [lo_i, hi_i]
double gaussian_box_measure(Eigen::VectorXd const& lo,
                            Eigen::VectorXd const& hi);

//! Euclidean projection onto the l1 ball of the given radius
Eigen::VectorXd project_l1_ball(Eigen::VectorXd const& x, double radius);

}  // namespace gbm
