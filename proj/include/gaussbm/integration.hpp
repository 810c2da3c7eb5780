#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>

namespace gbm {

enum class IntegrationMethod
{
    automatic,  //!< closed form, then quadrature, then Monte Carlo
    closed_form,
    quadrature,
    monte_carlo,
};

struct IntegrationSpec
{
    IntegrationMethod method = IntegrationMethod::automatic;
    int samples = 1'000'000;  //!< Monte Carlo budget
    std::uint64_t seed = 0;
};

//! Value with its standard error (zero for deterministic methods)
struct Estimate
{
    double value = 0;
    double std_error = 0;
    IntegrationMethod method = IntegrationMethod::closed_form;
};

char const* to_string(IntegrationMethod m);

//! Sample means of a vector-valued function of a standard Gaussian vector
struct McMoments
{
    Eigen::VectorXd mean;
    Eigen::MatrixXd mean_covariance;  //!< covariance of the sample mean
};

using McIntegrand
    = std::function<void(Eigen::VectorXd const& z, Eigen::Ref<Eigen::VectorXd> out)>;

/*!
 * Monte Carlo over Z ~ N(0, I_dim).
 *
 * Samples are drawn in chunks of 65536, each from its own CounterRng stream,
 * so results depend only on (seed, samples).
 */
McMoments monte_carlo_moments(int dim,
                              int outputs,
                              int samples,
                              std::uint64_t seed,
                              McIntegrand const& f);

}  // namespace gbm
