#pragma once

// Exact scalar and matrix kernels: power means, the sine-ratio comparison
// function, SPD square roots and closed-form Gaussian relative entropy.

#include <Eigen/Dense>

#include <string>

namespace gbm {

//---------------------------------------------------------------------------//
/*!
 * Real number extended with the two infinities.
 *
 * Used for power-mean exponents, where p = -inf, 0, +inf are limits with
 * their own closed forms.
 */
class ExtendedReal
{
  public:
    enum class Kind
    {
        neg_infinity,
        finite,
        pos_infinity
    };

    //! Zero
    constexpr ExtendedReal() = default;

    static constexpr ExtendedReal neg_infinity()
    {
        return ExtendedReal(Kind::neg_infinity, 0.0);
    }
    static constexpr ExtendedReal pos_infinity()
    {
        return ExtendedReal(Kind::pos_infinity, 0.0);
    }
    //! Finite value; rejects NaN and infinities
    static ExtendedReal finite(double v);
    //! Maps IEEE infinities onto the tagged infinities; rejects NaN
    static ExtendedReal from_double(double v);

    Kind kind() const { return kind_; }
    bool is_finite() const { return kind_ == Kind::finite; }
    bool is_pos_infinity() const { return kind_ == Kind::pos_infinity; }
    bool is_neg_infinity() const { return kind_ == Kind::neg_infinity; }

    //! Finite value, or IEEE infinity for the tags
    double to_double() const;

    std::string str() const;

    friend bool operator==(ExtendedReal const& a, ExtendedReal const& b)
    {
        return a.kind_ == b.kind_ && a.value_ == b.value_;
    }
    friend bool operator<(ExtendedReal const& a, ExtendedReal const& b);

  private:
    constexpr ExtendedReal(Kind k, double v) : kind_(k), value_(v) {}

    Kind kind_ = Kind::finite;
    double value_ = 0.0;
};

//---------------------------------------------------------------------------//
/*!
 * Symmetric positive-definite matrix.
 *
 * Construction validates symmetry (max entry deviation at most 1e-12 of the
 * largest entry) and positive definiteness (smallest eigenvalue above 1e-12
 * times the largest). The stored matrix is exactly symmetrized and its
 * spectral decomposition is cached.
 */
class SpdMatrix
{
  public:
    explicit SpdMatrix(Eigen::MatrixXd const& m);

    static SpdMatrix identity(int n);
    static SpdMatrix scalar(int n, double value);
    static SpdMatrix diagonal(Eigen::VectorXd const& diag);

    int dimension() const { return static_cast<int>(m_.rows()); }
    Eigen::MatrixXd const& matrix() const { return m_; }
    //! Ascending eigenvalues
    Eigen::VectorXd const& eigenvalues() const { return evals_; }
    Eigen::MatrixXd const& eigenvectors() const { return evecs_; }

    double min_eigenvalue() const { return evals_(0); }
    double max_eigenvalue() const { return evals_(evals_.size() - 1); }
    bool is_diagonal() const;

    Eigen::MatrixXd inverse() const;

  private:
    Eigen::MatrixXd m_;
    Eigen::VectorXd evals_;
    Eigen::MatrixXd evecs_;
};

//---------------------------------------------------------------------------//
// POWER MEANS
//---------------------------------------------------------------------------//

/*!
 * Weighted power mean M_p^t(x, y) of two nonnegative numbers.
 *
 * Returns 0 whenever x*y = 0. For x*y > 0 the limits p = 0, +inf, -inf are the
 * geometric mean, max and min; at t = 0 or t = 1 every exponent returns x or
 * y respectively.
 */
double power_mean(ExtendedReal p, double t, double x, double y);

//! Psi_t(u, v) = log((1-t) e^u + t e^v), evaluated without overflow.
double log_mixture(double t, double u, double v);

//---------------------------------------------------------------------------//
// CURVATURE COMPARISON
//---------------------------------------------------------------------------//

struct SigmaParams
{
    int n = 1;  //!< ambient dimension
    double theta = 0.0;  //!< root-mean-square displacement
};

//! Largest admissible theta: sqrt(n/2) * pi (exclusive)
double sigma_theta_limit(int n);

/*!
 * sin(sqrt(2/n) t theta) / sin(sqrt(2/n) theta).
 *
 * Uses a three-term series when sqrt(2/n) theta <= 1e-6. Throws
 * std::domain_error when theta >= sqrt(n/2) pi.
 */
double sigma_comparison(SigmaParams const& params, double t);

//---------------------------------------------------------------------------//
// GAUSSIAN KERNELS
//---------------------------------------------------------------------------//

//! Principal square root via spectral decomposition
SpdMatrix spd_sqrt(SpdMatrix const& m);

//! D(N(0, cov) || N(0, I)) = (tr cov - n - ln det cov) / 2
double gaussian_relative_entropy(SpdMatrix const& cov);

//! Same, from the eigenvalues of the covariance
double gaussian_relative_entropy_from_spectrum(Eigen::VectorXd const& evals);

struct BmGaps
{
    double plain_gap = 0;
    double sigma_gap = 0;
};

/*!
 * Residuals of the dimensional entropy inequality and of its
 * curvature-strengthened form for entropies (d0, d1, dt) at time t.
 */
BmGaps entropic_bm_gaps(
    double d0, double d1, double dt, double t, int n, double theta);

}  // namespace gbm
