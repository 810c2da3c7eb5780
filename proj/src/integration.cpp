#include "gaussbm/integration.hpp"

#include "gaussbm/random.hpp"

#include <algorithm>
#include <stdexcept>

namespace gbm {

char const* to_string(IntegrationMethod m)
{
    switch (m)
    {
        case IntegrationMethod::automatic:
            return "automatic";
        case IntegrationMethod::closed_form:
            return "closed_form";
        case IntegrationMethod::quadrature:
            return "quadrature";
        case IntegrationMethod::monte_carlo:
            return "monte_carlo";
    }
    return "unknown";
}

McMoments monte_carlo_moments(
    int dim, int outputs, int samples, std::uint64_t seed, McIntegrand const& f)
{
    if (samples < 2)
        throw std::invalid_argument("monte_carlo_moments: need at least 2 samples");
    constexpr int chunk = 65536;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(outputs);
    Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(outputs, outputs);
    Eigen::VectorXd z(dim);
    Eigen::VectorXd val(outputs);
    // Shift by the first value to limit cancellation in the second moments
    Eigen::VectorXd ref;
    for (int start = 0, stream = 0; start < samples; start += chunk, ++stream)
    {
        CounterRng rng(seed, static_cast<std::uint64_t>(stream));
        int const stop = std::min(samples, start + chunk);
        for (int k = start; k < stop; ++k)
        {
            for (int i = 0; i < dim; ++i)
                z(i) = rng.normal();
            f(z, val);
            if (ref.size() == 0)
                ref = val;
            Eigen::VectorXd const d = val - ref;
            sum += d;
            cross.noalias() += d * d.transpose();
        }
    }
    double const m = samples;
    McMoments out;
    Eigen::VectorXd const md = sum / m;
    out.mean = ref + md;
    out.mean_covariance = (cross / m - md * md.transpose()) * (m / (m - 1)) / m;
    return out;
}

}  // namespace gbm
