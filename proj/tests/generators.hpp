#pragma once

// Seeded generators for property tests.

#include "gaussbm/gauss_core.hpp"
#include "gaussbm/random.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace gbm::testing {

inline double uniform_in(CounterRng& rng, double lo, double hi)
{
    return lo + (hi - lo) * rng.uniform();
}

inline Eigen::VectorXd normal_vector(CounterRng& rng, int n)
{
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i)
        v(i) = rng.normal();
    return v;
}

//! Haar-ish orthogonal matrix from the QR factor of a Gaussian matrix
inline Eigen::MatrixXd random_orthogonal(CounterRng& rng, int n)
{
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            g(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    return qr.householderQ();
}

//! Symmetric matrix with eigenvalues uniform in [lo, hi] and a random basis
inline Eigen::MatrixXd random_symmetric(CounterRng& rng, int n, double lo, double hi)
{
    Eigen::MatrixXd const q = random_orthogonal(rng, n);
    Eigen::VectorXd ev(n);
    for (int i = 0; i < n; ++i)
        ev(i) = uniform_in(rng, lo, hi);
    Eigen::MatrixXd m = q * ev.asDiagonal() * q.transpose();
    return 0.5 * (m + m.transpose());
}

inline SpdMatrix random_spd(CounterRng& rng, int n, double lo, double hi)
{
    return SpdMatrix(random_symmetric(rng, n, lo, hi));
}

//! Symmetric square root by eigendecomposition, independent of spd_sqrt
inline Eigen::MatrixXd reference_sqrt(Eigen::MatrixXd const& m)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    return es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal()
           * es.eigenvectors().transpose();
}

//! gamma([a, b]) from std::erf
inline double erf_interval(double a, double b)
{
    return 0.5 * (std::erf(b / std::sqrt(2.0)) - std::erf(a / std::sqrt(2.0)));
}

}  // namespace gbm::testing
