#pragma once

// Experiment configuration, suite orchestration and report emission.

#include "gaussbm/body.hpp"
#include "gaussbm/distributions.hpp"
#include "gaussbm/entropy_flow.hpp"
#include "gaussbm/functional.hpp"
#include "gaussbm/geometry.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gbm {

inline constexpr char const* kVersion = "0.1.0";

class ConfigError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

struct Tolerances
{
    double closed_form = 1e-10;
    double quadrature = 1e-6;
    double mc_sigmas = 3;
    double fd_first = 1e-5;
    double fd_second = 1e-4;
    double local_closed_form = 1e-8;
    double bochner = 1e-8;
    double lipschitz = 1e-8;
    double variational = 1e-6;
    double dv_discrete = 1e-8;
    double dv_quadrature = 1e-6;
};

//---------------------------------------------------------------------------//
// CONFIGURATION
//---------------------------------------------------------------------------//

struct NamedDistribution
{
    std::string name;
    EvenStrongLogConcave dist;
};

struct NamedBody
{
    std::string name;
    SymmetricBody body;
};

//! Either a log-concave function (usable everywhere) or a radial-only cap
struct NamedFunction
{
    std::string name;
    std::optional<LogConcaveFunction> function;
    RadialFunction radial;
};

struct FunctionPairSpec
{
    std::string f;
    std::string g;
    std::vector<ExtendedReal> p_values;
    std::vector<double> betas;  //!< used by the homogeneous suite only
};

struct CounterexampleSpec
{
    std::string body;
    Eigen::VectorXd shift;
    double t = 0.5;
};

struct DiscreteDvSpec
{
    std::string name;
    std::vector<double> phi;
    std::vector<double> nu;
    std::vector<std::vector<double>> family;
};

struct GaussianDvSpec
{
    std::string name;
    std::vector<double> phi_coefficients;  //!< phi(x) = sum_k c_k x^k
    std::vector<CandidateLaw> family;
};

struct ExperimentConfig
{
    std::string suite = "all";
    std::vector<double> t_grid;
    int samples = 1'000'000;
    std::uint64_t seed = 0;
    Tolerances tolerances;
    std::filesystem::path output_dir = "out";

    std::vector<NamedDistribution> distributions;
    std::vector<std::pair<std::string, std::string>> pairs;
    std::vector<NamedBody> bodies;
    std::vector<std::pair<std::string, std::string>> body_pairs;
    std::vector<std::string> variational_bodies;
    std::vector<NamedFunction> functions;
    std::vector<FunctionPairSpec> function_pairs;
    std::vector<FunctionPairSpec> homogeneous_pairs;
    std::vector<DiscreteDvSpec> dv_discrete;
    std::vector<GaussianDvSpec> dv_gaussian;
    std::vector<CounterexampleSpec> counterexamples;
    std::vector<int> bochner_dims;
};

//! Suites accepted by run and by the CLI
std::vector<std::string> const& suite_names();

//! Parses and validates; throws ConfigError with a path-like message
ExperimentConfig parse_config(nlohmann::json const& j);
ExperimentConfig load_config(std::filesystem::path const& path);

//---------------------------------------------------------------------------//
// REPORTS
//---------------------------------------------------------------------------//

/*!
 * How a stored value maps to a verdict.
 *
 * at_least:   pass if value >= -tol, inconclusive if value >= -(tol + slack)
 * confidence: pass if value >= tol, inconclusive if value >= -tol
 * positive:   pass if value > tol
 * negative:   pass if value < -tol
 * residual:   pass if |value| <= tol
 * Records with an error always fail.
 */
enum class CheckMode
{
    at_least,
    confidence,
    positive,
    negative,
    residual
};

char const* to_string(CheckMode m);

struct CheckRecord
{
    std::string name;
    std::string suite;
    std::string inputs_digest;  //!< FNV-1a of the canonical inputs
    nlohmann::json inputs;
    std::optional<double> t;
    double lhs = 0;
    double rhs = 0;
    double value = 0;  //!< gap or residual
    double tolerance = 0;
    double slack = 0;
    CheckMode mode = CheckMode::at_least;
    bool error = false;
    std::string diagnostic;
    Verdict verdict = Verdict::fail;
    double runtime_ms = 0;
};

//! Recomputes the verdict from the stored numbers alone
Verdict derive_verdict(CheckRecord const& r);

struct MeasureRow
{
    std::string name;
    double t = 0;
    double lhs = 0;
    double rhs = 0;
    double gap = 0;
    double std_error = 0;
};

struct SuiteReport
{
    std::string suite;
    std::uint64_t seed = 0;
    int samples = 0;
    std::string version = kVersion;
    std::string timestamp;
    std::vector<CheckRecord> checks;
    std::vector<std::pair<std::string, EntropyCurveReport>> curves;
    std::vector<MeasureRow> measures;

    int count(Verdict v) const;
};

//! 64-bit FNV-1a as 16 hex digits
std::string fnv1a_hex(std::string const& s);

SuiteReport run(ExperimentConfig const& config);

/*!
 * JSON object with metadata, a verdict summary and the check records.
 * With volatile_fields false the timestamp and runtimes are omitted, which
 * makes the output a pure function of (config, seed).
 */
nlohmann::json report_to_json(SuiteReport const& r, bool volatile_fields = true);
void write_report(SuiteReport const& r, std::filesystem::path const& path);

//! Selectors: entropy-curve, gap-vs-t, measure-ci
std::vector<std::string> const& plot_selectors();

//! Writes the CSV files for one selector into dir; returns their paths.
//! Throws std::invalid_argument for an unknown selector.
std::vector<std::filesystem::path> emit_plot_data(SuiteReport const& r,
                                                  std::string const& selector,
                                                  std::filesystem::path const& dir);

}  // namespace gbm
