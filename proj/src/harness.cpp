#include "gaussbm/harness.hpp"

#include "gaussbm/random.hpp"
#include "gaussbm/transport.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace gbm {
namespace {

using nlohmann::json;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void config_fail(std::string const& path, std::string const& what)
{
    throw ConfigError(path + ": " + what);
}

json const& need(json const& j, char const* key, std::string const& path)
{
    if (!j.is_object() || !j.contains(key))
        config_fail(path + "." + key, "missing");
    return j.at(key);
}

double number(json const& j, std::string const& path)
{
    if (!j.is_number())
        config_fail(path, "expected a number");
    return j.get<double>();
}

std::string text(json const& j, std::string const& path)
{
    if (!j.is_string())
        config_fail(path, "expected a string");
    return j.get<std::string>();
}

std::vector<double> number_list(json const& j, std::string const& path)
{
    if (!j.is_array())
        config_fail(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

Eigen::VectorXd vector_of(json const& j, std::string const& path)
{
    auto const v = number_list(j, path);
    return Eigen::Map<Eigen::VectorXd const>(v.data(), static_cast<Eigen::Index>(v.size()));
}

//! Square matrix from nested arrays; a scalar gives a 1x1 matrix
Eigen::MatrixXd matrix_of(json const& j, std::string const& path)
{
    if (j.is_number())
        return Eigen::MatrixXd::Constant(1, 1, j.get<double>());
    if (!j.is_array() || j.empty())
        config_fail(path, "expected a nonempty matrix");
    auto const n = static_cast<Eigen::Index>(j.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        auto const row = number_list(j[i], path + "[" + std::to_string(i) + "]");
        if (static_cast<Eigen::Index>(row.size()) != n)
            config_fail(path, "matrix must be square");
        for (Eigen::Index k = 0; k < n; ++k)
            m(i, k) = row[k];
    }
    return m;
}

ExtendedReal extended(json const& j, std::string const& path)
{
    if (j.is_number())
        return ExtendedReal::finite(j.get<double>());
    if (j.is_string())
    {
        auto const s = j.get<std::string>();
        if (s == "inf" || s == "+inf")
            return ExtendedReal::pos_infinity();
        if (s == "-inf")
            return ExtendedReal::neg_infinity();
    }
    config_fail(path, "expected a number or \"inf\"");
}

//! Runs a module constructor, turning its errors into config errors
template<class F>
auto construct(std::string const& path, F&& f) -> decltype(f())
{
    try
    {
        return f();
    }
    catch (ConfigError const&)
    {
        throw;
    }
    catch (std::exception const& e)
    {
        config_fail(path, e.what());
    }
}

SymmetricBody parse_body(json const& j, std::string const& path)
{
    auto const variant = text(need(j, "variant", path), path + ".variant");
    return construct(path, [&] {
        if (variant == "interval")
            return SymmetricBody::interval(number(need(j, "half_width", path), path + ".half_width"));
        if (variant == "box")
            return SymmetricBody::box(vector_of(need(j, "half_widths", path), path + ".half_widths"));
        if (variant == "ellipsoid")
            return SymmetricBody::ellipsoid(SpdMatrix(matrix_of(need(j, "shape", path), path + ".shape")));
        if (variant == "pnorm_ball")
            return SymmetricBody::pnorm_ball(
                static_cast<int>(number(need(j, "dim", path), path + ".dim")),
                extended(need(j, "p", path), path + ".p").to_double(),
                number(need(j, "radius", path), path + ".radius"));
        if (variant == "hpolytope")
            return SymmetricBody::hpolytope(
                [&] {
                    auto const& rows = need(j, "normals", path);
                    if (!rows.is_array() || rows.empty())
                        config_fail(path + ".normals", "expected a nonempty array of rows");
                    auto const first = number_list(rows[0], path + ".normals[0]");
                    Eigen::MatrixXd m(rows.size(), first.size());
                    for (std::size_t i = 0; i < rows.size(); ++i)
                    {
                        auto const r = number_list(rows[i], path + ".normals");
                        if (r.size() != first.size())
                            config_fail(path + ".normals", "ragged rows");
                        for (std::size_t k = 0; k < r.size(); ++k)
                            m(i, k) = r[k];
                    }
                    return m;
                }(),
                vector_of(need(j, "bounds", path), path + ".bounds"));
        config_fail(path + ".variant", "unknown body variant '" + variant + "'");
    });
}

template<class T>
T const& lookup(std::vector<T> const& items, std::string const& name, std::string const& path)
{
    for (auto const& it : items)
        if (it.name == name)
            return it;
    config_fail(path, "unknown name '" + name + "'");
}

SymmetricBody body_ref(json const& j, std::vector<NamedBody> const& bodies, std::string const& path)
{
    if (j.is_string())
        return lookup(bodies, j.get<std::string>(), path).body;
    return parse_body(j, path);
}

EvenStrongLogConcave parse_distribution(json const& j,
                                        std::vector<NamedBody> const& bodies,
                                        std::string const& path)
{
    auto const family = text(need(j, "family", path), path + ".family");
    auto dist = construct(path, [&] {
        if (family == "gaussian")
        {
            if (j.contains("diag"))
                return EvenStrongLogConcave::gaussian(SpdMatrix::diagonal(vector_of(j["diag"], path + ".diag")));
            return EvenStrongLogConcave::gaussian(SpdMatrix(matrix_of(need(j, "cov", path), path + ".cov")));
        }
        if (family == "quartic")
            return EvenStrongLogConcave::one_d(
                quartic_potential(number(need(j, "lambda", path), path + ".lambda")),
                j.contains("truncation_radius") ? number(j["truncation_radius"], path) : 10.0);
        if (family == "product_quartic")
        {
            std::vector<OneDPotential> f;
            for (double lam : number_list(need(j, "lambdas", path), path + ".lambdas"))
                f.push_back({quartic_potential(lam), 10.0});
            return EvenStrongLogConcave::product(std::move(f));
        }
        if (family == "truncated_gaussian")
            return EvenStrongLogConcave::truncated_gaussian(
                body_ref(need(j, "body", path), bodies, path + ".body"));
        config_fail(path + ".family", "unknown distribution family '" + family + "'");
    });
    if (j.contains("ou_epsilon"))
    {
        double const eps = number(j["ou_epsilon"], path + ".ou_epsilon");
        dist = construct(path + ".ou_epsilon", [&] { return ou_smooth(dist, eps); });
    }
    return dist;
}

NamedFunction parse_function(json const& j,
                             std::vector<NamedBody> const& bodies,
                             std::string const& path)
{
    NamedFunction nf;
    nf.name = text(need(j, "name", path), path + ".name");
    auto const family = text(need(j, "family", path), path + ".family");
    if (family == "cap")
    {
        nf.radial = construct(path, [&] {
            return smooth_cap(number(need(j, "a", path), path + ".a"),
                              number(need(j, "m", path), path + ".m"));
        });
        return nf;
    }
    nf.function = construct(path, [&] {
        if (family == "gaussian")
            return LogConcaveFunction::gaussian(matrix_of(need(j, "a", path), path + ".a"));
        if (family == "indicator")
            return LogConcaveFunction::indicator(body_ref(need(j, "body", path), bodies, path + ".body"));
        if (family == "tabulated")
        {
            double const r = number(need(j, "radius", path), path + ".radius");
            if (j.contains("log_values"))
                return LogConcaveFunction::tabulated(r, number_list(j["log_values"], path + ".log_values"));
            // Samples of -a x^2 / 2 on the node grid
            double const a = number(need(j, "quadratic", path), path + ".quadratic");
            int const m = static_cast<int>(number(need(j, "points", path), path + ".points"));
            if (m < 2)
                config_fail(path + ".points", "need at least two points");
            std::vector<double> lv(m);
            for (int k = 0; k < m; ++k)
            {
                double const x = r * k / (m - 1);
                lv[k] = -0.5 * a * x * x;
            }
            return LogConcaveFunction::tabulated(r, std::move(lv));
        }
        config_fail(path + ".family", "unknown function family '" + family + "'");
    });
    if (nf.function->dimension() == 1)
        nf.radial = radial_from(*nf.function);
    return nf;
}

CandidateLaw parse_candidate(json const& j, std::string const& path)
{
    auto const kind = text(need(j, "kind", path), path + ".kind");
    return construct(path, [&] {
        auto h = [&] { return number(need(j, "h", path), path + ".h"); };
        if (kind == "restriction")
            return restriction_candidate(h());
        if (kind == "uniform")
            return uniform_candidate(h());
        if (kind == "truncated_normal")
            return truncated_normal_candidate(number(need(j, "sigma", path), path + ".sigma"), h());
        if (kind == "mixture")
            return mixture_candidate(number(need(j, "w", path), path + ".w"), h());
        if (kind == "point_mass")
            return point_mass_candidate();
        config_fail(path + ".kind", "unknown candidate kind '" + kind + "'");
    });
}

std::vector<std::pair<std::string, std::string>>
name_pairs(json const& j, std::string const& path)
{
    if (!j.is_array())
        config_fail(path, "expected an array of name pairs");
    std::vector<std::pair<std::string, std::string>> out;
    for (std::size_t i = 0; i < j.size(); ++i)
    {
        auto const p = path + "[" + std::to_string(i) + "]";
        if (!j[i].is_array() || j[i].size() != 2)
            config_fail(p, "expected [name, name]");
        out.emplace_back(text(j[i][0], p), text(j[i][1], p));
    }
    return out;
}

FunctionPairSpec parse_function_pair(json const& j, bool homogeneous, std::string const& path)
{
    FunctionPairSpec s;
    s.f = text(need(j, "f", path), path + ".f");
    s.g = text(need(j, "g", path), path + ".g");
    auto const& ps = need(j, "p", path);
    if (!ps.is_array() || ps.empty())
        config_fail(path + ".p", "expected a nonempty array");
    for (std::size_t i = 0; i < ps.size(); ++i)
    {
        auto const p = extended(ps[i], path + ".p");
        if (p.is_neg_infinity() || (p.is_finite() && p.to_double() < 0))
            config_fail(path + ".p", "exponents must lie in [0, inf]");
        s.p_values.push_back(p);
    }
    if (homogeneous)
    {
        s.betas = number_list(need(j, "beta", path), path + ".beta");
        for (double b : s.betas)
            if (!(b > 1))
                config_fail(path + ".beta", "beta must exceed 1");
    }
    return s;
}

void parse_tolerances(json const& j, Tolerances& t, std::string const& path)
{
    if (!j.is_object())
        config_fail(path, "expected an object");
    std::map<std::string, double*> const fields{
        {"closed_form", &t.closed_form},
        {"quadrature", &t.quadrature},
        {"mc_sigmas", &t.mc_sigmas},
        {"fd_first", &t.fd_first},
        {"fd_second", &t.fd_second},
        {"local_closed_form", &t.local_closed_form},
        {"bochner", &t.bochner},
        {"lipschitz", &t.lipschitz},
        {"variational", &t.variational},
        {"dv_discrete", &t.dv_discrete},
        {"dv_quadrature", &t.dv_quadrature},
    };
    for (auto const& [key, val] : j.items())
    {
        auto it = fields.find(key);
        if (it == fields.end())
            config_fail(path + "." + key, "unknown tolerance");
        double const v = number(val, path + "." + key);
        if (!(v >= 0))
            config_fail(path + "." + key, "must be nonnegative");
        *it->second = v;
    }
}

json const& array_field(json const& j, std::string const& key)
{
    auto const& arr = j[key];
    if (!arr.is_array())
        config_fail("$." + key, "expected an array");
    return arr;
}

}  // namespace

//---------------------------------------------------------------------------//
std::vector<std::string> const& suite_names()
{
    static std::vector<std::string> const names{"entropic",
                                                "sigma",
                                                "geometric",
                                                "dynamics",
                                                "bbl",
                                                "bbl-homogeneous",
                                                "dv",
                                                "counterexample",
                                                "all"};
    return names;
}

ExperimentConfig parse_config(json const& j)
{
    if (!j.is_object())
        config_fail("$", "config must be a JSON object");
    ExperimentConfig c;
    if (j.contains("suite"))
    {
        c.suite = text(j["suite"], "$.suite");
        auto const& names = suite_names();
        if (std::find(names.begin(), names.end(), c.suite) == names.end())
            config_fail("$.suite", "unknown suite '" + c.suite + "'");
    }
    c.t_grid = number_list(need(j, "t_grid", "$"), "$.t_grid");
    if (c.t_grid.empty())
        config_fail("$.t_grid", "must not be empty");
    for (std::size_t i = 0; i < c.t_grid.size(); ++i)
    {
        if (!(c.t_grid[i] >= 0 && c.t_grid[i] <= 1))
            config_fail("$.t_grid", "values must lie in [0, 1]");
        if (i > 0 && !(c.t_grid[i] > c.t_grid[i - 1]))
            config_fail("$.t_grid", "values must be strictly increasing");
    }
    if (j.contains("samples"))
    {
        double const s = number(j["samples"], "$.samples");
        if (!(s >= 1 && s <= 2e9) || s != std::floor(s))
            config_fail("$.samples", "must be a positive integer");
        c.samples = static_cast<int>(s);
    }
    if (j.contains("seed"))
    {
        if (!j["seed"].is_number_unsigned())
            config_fail("$.seed", "must be a nonnegative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("tolerances"))
        parse_tolerances(j["tolerances"], c.tolerances, "$.tolerances");
    if (j.contains("output_dir"))
        c.output_dir = text(j["output_dir"], "$.output_dir");

    std::set<std::string> seen;
    auto unique_name = [&](std::string const& name, std::string const& path) {
        if (!seen.insert(name).second)
            config_fail(path, "duplicate name '" + name + "'");
    };

    if (j.contains("bodies"))
    {
        auto const& arr = array_field(j, "bodies");
        for (std::size_t i = 0; i < arr.size(); ++i)
        {
            auto const p = "$.bodies[" + std::to_string(i) + "]";
            auto const name = text(need(arr[i], "name", p), p + ".name");
            unique_name(name, p);
            c.bodies.push_back({name, parse_body(arr[i], p)});
        }
    }
    if (j.contains("distributions"))
    {
        auto const& arr = array_field(j, "distributions");
        for (std::size_t i = 0; i < arr.size(); ++i)
        {
            auto const p = "$.distributions[" + std::to_string(i) + "]";
            auto const name = text(need(arr[i], "name", p), p + ".name");
            unique_name(name, p);
            c.distributions.push_back({name, parse_distribution(arr[i], c.bodies, p)});
        }
    }
    if (j.contains("functions"))
    {
        auto const& arr = array_field(j, "functions");
        for (std::size_t i = 0; i < arr.size(); ++i)
        {
            auto const p = "$.functions[" + std::to_string(i) + "]";
            c.functions.push_back(parse_function(arr[i], c.bodies, p));
            unique_name(c.functions.back().name, p);
        }
    }

    if (j.contains("pairs"))
    {
        c.pairs = name_pairs(j["pairs"], "$.pairs");
        for (auto const& [a, b] : c.pairs)
        {
            auto const& da = lookup(c.distributions, a, "$.pairs");
            auto const& db = lookup(c.distributions, b, "$.pairs");
            if (da.dist.dimension() != db.dist.dimension())
                config_fail("$.pairs", "pair " + a + "/" + b + " mixes dimensions");
        }
    }
    if (j.contains("body_pairs"))
    {
        c.body_pairs = name_pairs(j["body_pairs"], "$.body_pairs");
        for (auto const& [a, b] : c.body_pairs)
            if (lookup(c.bodies, a, "$.body_pairs").body.dimension()
                != lookup(c.bodies, b, "$.body_pairs").body.dimension())
                config_fail("$.body_pairs", "pair " + a + "/" + b + " mixes dimensions");
    }
    if (j.contains("variational_bodies"))
    {
        auto const& arr = array_field(j, "variational_bodies");
        for (std::size_t i = 0; i < arr.size(); ++i)
        {
            auto const name = text(arr[i], "$.variational_bodies");
            if (lookup(c.bodies, name, "$.variational_bodies").body.dimension() != 1)
                config_fail("$.variational_bodies", name + " is not one-dimensional");
            c.variational_bodies.push_back(name);
        }
    }
    if (j.contains("function_pairs"))
    {
        auto const& arr = array_field(j, "function_pairs");
        for (std::size_t i = 0; i < arr.size(); ++i)
        {
            auto const p = "$.function_pairs[" + std::to_string(i) + "]";
            auto s = parse_function_pair(arr[i], false, p);
            auto const& f = lookup(c.functions, s.f, p + ".f");
            auto const& g = lookup(c.functions, s.g, p + ".g");
            if (!f.function || !g.function)
                config_fail(p, "radial-only functions cannot enter this suite");
            if (f.function->dimension() != g.function->dimension())
                config_fail(p, "functions have different dimensions");
            c.function_pairs.push_back(std::move(s));
        }
    }
    if (j.contains("homogeneous_pairs"))
    {
        auto const& arr = array_field(j, "homogeneous_pairs");
        for (std::size_t i = 0; i < arr.size(); ++i)
        {
            auto const p = "$.homogeneous_pairs[" + std::to_string(i) + "]";
            auto s = parse_function_pair(arr[i], true, p);
            if (!lookup(c.functions, s.f, p + ".f").radial.value
                || !lookup(c.functions, s.g, p + ".g").radial.value)
                config_fail(p, "functions must be one-dimensional");
            c.homogeneous_pairs.push_back(std::move(s));
        }
    }
    if (j.contains("dv_discrete"))
    {
        auto const& arr = array_field(j, "dv_discrete");
        for (std::size_t i = 0; i < arr.size(); ++i)
        {
            auto const p = "$.dv_discrete[" + std::to_string(i) + "]";
            DiscreteDvSpec s;
            s.name = text(need(arr[i], "name", p), p + ".name");
            s.phi = number_list(need(arr[i], "phi", p), p + ".phi");
            s.nu = number_list(need(arr[i], "nu", p), p + ".nu");
            auto const& fam = need(arr[i], "family", p);
            for (std::size_t k = 0; k < fam.size(); ++k)
                s.family.push_back(number_list(fam[k], p + ".family"));
            c.dv_discrete.push_back(std::move(s));
        }
    }
    if (j.contains("dv_gaussian"))
    {
        auto const& arr = array_field(j, "dv_gaussian");
        for (std::size_t i = 0; i < arr.size(); ++i)
        {
            auto const p = "$.dv_gaussian[" + std::to_string(i) + "]";
            GaussianDvSpec s;
            s.name = text(need(arr[i], "name", p), p + ".name");
            s.phi_coefficients = number_list(need(arr[i], "phi", p), p + ".phi");
            auto const& fam = need(arr[i], "family", p);
            for (std::size_t k = 0; k < fam.size(); ++k)
                s.family.push_back(parse_candidate(fam[k], p + ".family[" + std::to_string(k) + "]"));
            c.dv_gaussian.push_back(std::move(s));
        }
    }
    if (j.contains("counterexamples"))
    {
        auto const& arr = array_field(j, "counterexamples");
        for (std::size_t i = 0; i < arr.size(); ++i)
        {
            auto const p = "$.counterexamples[" + std::to_string(i) + "]";
            CounterexampleSpec s;
            s.body = text(need(arr[i], "body", p), p + ".body");
            s.shift = vector_of(need(arr[i], "shift", p), p + ".shift");
            if (arr[i].contains("t"))
                s.t = number(arr[i]["t"], p + ".t");
            if (lookup(c.bodies, s.body, p + ".body").body.dimension() != s.shift.size())
                config_fail(p + ".shift", "dimension mismatch with the body");
            c.counterexamples.push_back(std::move(s));
        }
    }
    if (j.contains("bochner_dims"))
    {
        for (double d : number_list(j["bochner_dims"], "$.bochner_dims"))
        {
            if (!(d >= 1 && d <= 8) || d != std::floor(d))
                config_fail("$.bochner_dims", "dimensions must be integers in [1, 8]");
            c.bochner_dims.push_back(static_cast<int>(d));
        }
    }
    return c;
}

ExperimentConfig load_config(std::filesystem::path const& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(path.string() + ": cannot open");
    json j;
    try
    {
        in >> j;
    }
    catch (json::parse_error const& e)
    {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_config(j);
}

//---------------------------------------------------------------------------//
char const* to_string(CheckMode m)
{
    switch (m)
    {
        case CheckMode::at_least:
            return "at_least";
        case CheckMode::confidence:
            return "confidence";
        case CheckMode::positive:
            return "positive";
        case CheckMode::negative:
            return "negative";
        case CheckMode::residual:
            return "residual";
    }
    return "unknown";
}

Verdict derive_verdict(CheckRecord const& r)
{
    if (r.error || !std::isfinite(r.value))
        return Verdict::fail;
    double const v = r.value;
    double const tol = r.tolerance;
    switch (r.mode)
    {
        case CheckMode::at_least:
            return bbl_verdict(v, tol, r.slack);
        case CheckMode::confidence:
            if (v >= tol)
                return Verdict::pass;
            return v >= -tol ? Verdict::inconclusive : Verdict::fail;
        case CheckMode::positive:
            return v > tol ? Verdict::pass : Verdict::fail;
        case CheckMode::negative:
            return v < -tol ? Verdict::pass : Verdict::fail;
        case CheckMode::residual:
            return std::abs(v) <= tol ? Verdict::pass : Verdict::fail;
    }
    return Verdict::fail;
}

int SuiteReport::count(Verdict v) const
{
    return static_cast<int>(
        std::count_if(checks.begin(), checks.end(), [v](auto const& c) { return c.verdict == v; }));
}

std::string fnv1a_hex(std::string const& s)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : s)
    {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

//---------------------------------------------------------------------------//
namespace {

std::string fmt_t(double t)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", t);
    return buf;
}

std::uint64_t check_seed(std::uint64_t base, std::string const& name)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : name)
    {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return splitmix64_mix(base ^ h);
}

class Runner
{
  public:
    Runner(ExperimentConfig const& cfg, SuiteReport& rep) : cfg_(cfg), rep_(rep) {}

    void run_suite(std::string const& s)
    {
        if (s == "entropic")
            entropic();
        else if (s == "sigma")
            sigma();
        else if (s == "dynamics")
            dynamics();
        else if (s == "geometric")
            geometric();
        else if (s == "bbl")
            bbl();
        else if (s == "bbl-homogeneous")
            bbl_homogeneous();
        else if (s == "dv")
            dv();
        else if (s == "counterexample")
            counterexample();
    }

  private:
    using Fill = std::function<void(CheckRecord&)>;

    //! Runs one check; module errors become a failing record
    void add(std::string const& suite,
             std::string const& name,
             json inputs,
             std::optional<double> t,
             Fill const& fill)
    {
        CheckRecord r;
        r.suite = suite;
        r.name = name;
        r.t = t;
        r.inputs = std::move(inputs);
        r.inputs_digest = fnv1a_hex(r.inputs.dump());
        auto const start = std::chrono::steady_clock::now();
        try
        {
            fill(r);
        }
        catch (std::exception const& e)
        {
            r.error = true;
            r.diagnostic = e.what();
            r.lhs = r.rhs = r.value = kNan;
        }
        r.runtime_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start)
                           .count();
        r.verdict = derive_verdict(r);
        rep_.checks.push_back(std::move(r));
    }

    BrenierMap const& brenier(std::string const& name)
    {
        auto it = maps_.find(name);
        if (it == maps_.end())
        {
            auto const& d = lookup(cfg_.distributions, name, "pairs").dist;
            it = maps_.emplace(name, brenier_from_gaussian(d)).first;
        }
        return it->second;
    }

    Coupling coupling(std::pair<std::string, std::string> const& p)
    {
        return Coupling(brenier(p.first), brenier(p.second));
    }

    static std::string pair_name(std::pair<std::string, std::string> const& p)
    {
        return p.first + "~" + p.second;
    }

    json pair_inputs(std::pair<std::string, std::string> const& p) const
    {
        return json{{"a", lookup(cfg_.distributions, p.first, "pairs").dist.describe()},
                    {"b", lookup(cfg_.distributions, p.second, "pairs").dist.describe()},
                    {"samples", cfg_.samples},
                    {"seed", cfg_.seed}};
    }

    //! Entropy curve of a pair, computed once; rethrows a stored failure
    EntropyCurveReport const& curve(std::pair<std::string, std::string> const& p)
    {
        auto const key = pair_name(p);
        if (auto e = curve_errors_.find(key); e != curve_errors_.end())
            throw std::runtime_error(e->second);
        auto it = curves_.find(key);
        if (it != curves_.end())
            return it->second;
        try
        {
            IntegrationSpec spec{IntegrationMethod::automatic, cfg_.samples,
                                 check_seed(cfg_.seed, "curve/" + key)};
            auto r = entropy_curve(WeightedContext::gaussian(brenier(p.first).dimension()),
                                   coupling(p), cfg_.t_grid, spec);
            rep_.curves.emplace_back(key, r);
            return curves_.emplace(key, std::move(r)).first->second;
        }
        catch (std::exception const& e)
        {
            curve_errors_.emplace(key, e.what());
            throw;
        }
    }

    //! Tolerance on a curve gap at grid index i
    double gap_tolerance(EntropyCurveReport const& c, std::size_t i, int n) const
    {
        switch (c.method)
        {
            case IntegrationMethod::closed_form:
                return cfg_.tolerances.closed_form;
            case IntegrationMethod::monte_carlo:
                // Each exp(-D/n) moves by at most |dD| / n; two entropies per gap
                return cfg_.tolerances.mc_sigmas * 2 * c.entropy_std_error[i] / n;
            default:
                return cfg_.tolerances.quadrature;
        }
    }

    void entropic()
    {
        for (auto const& p : cfg_.pairs)
        {
            int const n = lookup(cfg_.distributions, p.first, "pairs").dist.dimension();
            for (std::size_t i = 0; i < cfg_.t_grid.size(); ++i)
            {
                double const t = cfg_.t_grid[i];
                auto inputs = pair_inputs(p);
                inputs["t"] = t;
                add("entropic", "entropic/" + pair_name(p) + "/t=" + fmt_t(t), inputs, t,
                    [&](CheckRecord& r) {
                        auto const& c = curve(p);
                        r.lhs = std::exp(-c.entropy[i] / n);
                        r.value = c.plain_gap[i];
                        r.rhs = r.lhs - r.value;
                        r.tolerance = gap_tolerance(c, i, n);
                        r.mode = CheckMode::at_least;
                    });
            }
        }
    }

    void sigma()
    {
        for (auto const& p : cfg_.pairs)
        {
            int const n = lookup(cfg_.distributions, p.first, "pairs").dist.dimension();
            for (std::size_t i = 0; i < cfg_.t_grid.size(); ++i)
            {
                double const t = cfg_.t_grid[i];
                auto inputs = pair_inputs(p);
                inputs["t"] = t;
                add("sigma", "sigma/" + pair_name(p) + "/t=" + fmt_t(t), inputs, t,
                    [&](CheckRecord& r) {
                        auto const& c = curve(p);
                        r.lhs = std::exp(-c.entropy[i] / n);
                        r.value = c.sigma_gap[i];
                        r.rhs = r.lhs - r.value;
                        r.tolerance = gap_tolerance(c, i, n);
                    });
                add("sigma", "sigma-below-plain/" + pair_name(p) + "/t=" + fmt_t(t), inputs, t,
                    [&](CheckRecord& r) {
                        auto const& c = curve(p);
                        r.lhs = c.plain_gap[i];
                        r.rhs = c.sigma_gap[i];
                        r.value = r.lhs - r.rhs;
                        r.tolerance = 1e-12;
                    });
            }
        }
    }

    void dynamics()
    {
        std::vector<std::string> seen;
        for (auto const& p : cfg_.pairs)
        {
            for (auto const& name : {p.first, p.second})
            {
                if (std::find(seen.begin(), seen.end(), name) != seen.end())
                    continue;
                seen.push_back(name);
                json inputs{{"distribution",
                             lookup(cfg_.distributions, name, "pairs").dist.describe()}};
                add("dynamics", "lipschitz/" + name, inputs, std::nullopt, [&](CheckRecord& r) {
                    auto const cert = lipschitz_certificate(brenier(name));
                    r.lhs = 1;
                    r.rhs = cert.max_slope;
                    r.value = 1 - cert.max_slope;
                    r.tolerance = cfg_.tolerances.lipschitz;
                });
            }
        }
        for (auto const& p : cfg_.pairs)
        {
            auto const inputs = pair_inputs(p);
            NoCrossingReport nc;
            bool have_nc = false;
            add("dynamics", "no-crossing/" + pair_name(p), inputs, std::nullopt,
                [&](CheckRecord& r) {
                    nc = no_crossing_check(coupling(p), 2000, cfg_.t_grid,
                                           check_seed(cfg_.seed, "no-crossing/" + pair_name(p)));
                    have_nc = true;
                    r.lhs = nc.min_monotonicity;
                    r.rhs = nc.certified_lambda;
                    r.value = r.lhs - r.rhs;
                    r.tolerance = 1e-12;
                });
            add("dynamics", "no-crossing-lambda/" + pair_name(p), inputs, std::nullopt,
                [&](CheckRecord& r) {
                    if (!have_nc)
                        throw std::runtime_error("no-crossing check did not complete");
                    r.lhs = r.value = nc.certified_lambda;
                    r.mode = CheckMode::positive;
                });

            bool const mc = [&] {
                try
                {
                    return curve(p).method == IntegrationMethod::monte_carlo;
                }
                catch (std::exception const&)
                {
                    return false;
                }
            }();
            if (!mc)
            {
                add("dynamics", "first-derivative/" + pair_name(p), inputs, std::nullopt,
                    [&](CheckRecord& r) {
                        r.value = curve(p).worst_first_fd_error;
                        r.tolerance = cfg_.tolerances.fd_first;
                        r.mode = CheckMode::residual;
                        if (int const k = curve(p).fd_points_skipped)
                            r.diagnostic = std::to_string(k) + " grid point(s) skipped: degenerate Jacobian";
                    });
                add("dynamics", "second-derivative/" + pair_name(p), inputs, std::nullopt,
                    [&](CheckRecord& r) {
                        r.value = curve(p).worst_second_fd_error;
                        r.tolerance = cfg_.tolerances.fd_second;
                        r.mode = CheckMode::residual;
                        if (int const k = curve(p).fd_points_skipped)
                            r.diagnostic = std::to_string(k) + " grid point(s) skipped: degenerate Jacobian";
                    });
            }
            for (std::size_t i = 0; i < cfg_.t_grid.size(); ++i)
            {
                double const t = cfg_.t_grid[i];
                auto in_t = inputs;
                in_t["t"] = t;
                add("dynamics", "local/" + pair_name(p) + "/t=" + fmt_t(t), in_t, t,
                    [&](CheckRecord& r) {
                        auto const& c = curve(p);
                        r.value = c.local_gap[i];
                        r.lhs = c.second_derivative_analytic[i];
                        r.rhs = r.lhs - r.value;
                        switch (c.method)
                        {
                            case IntegrationMethod::closed_form:
                                r.tolerance = cfg_.tolerances.local_closed_form;
                                break;
                            case IntegrationMethod::monte_carlo:
                                r.tolerance = cfg_.tolerances.mc_sigmas * c.local_gap_std_error[i];
                                break;
                            default:
                                r.tolerance = cfg_.tolerances.quadrature;
                        }
                    });
            }
        }

        auto const dims = cfg_.bochner_dims.empty() ? std::vector<int>{1, 2, 3} : cfg_.bochner_dims;
        for (int n : dims)
        {
            std::vector<std::pair<std::string, WeightedContext>> ctxs{
                {"gaussian", WeightedContext::gaussian(n)},
                {"quartic", WeightedContext::separable(n, quartic_potential(0.5))}};
            for (auto const& [cname, ctx] : ctxs)
            {
                for (auto const& field : standard_test_fields(n))
                {
                    auto const name = "bochner/" + cname + "/" + field.label + "/n=" + std::to_string(n);
                    json inputs{{"context", cname}, {"field", field.label}, {"n", n}, {"seed", cfg_.seed}};
                    add("dynamics", name, inputs, std::nullopt, [&](CheckRecord& r) {
                        CounterRng rng(check_seed(cfg_.seed, name));
                        double worst = 0;
                        for (int k = 0; k < 5; ++k)
                        {
                            Eigen::VectorXd x(n);
                            for (int i = 0; i < n; ++i)
                                x(i) = rng.normal();
                            auto const b = bochner_identity_check(ctx, field, x);
                            if (std::abs(b.residual) >= std::abs(worst))
                            {
                                worst = b.residual;
                                r.lhs = b.lhs;
                                r.rhs = b.rhs;
                            }
                        }
                        r.value = worst;
                        r.tolerance = cfg_.tolerances.bochner;
                        r.mode = CheckMode::residual;
                    });
                }
            }
        }
    }

    void geometric()
    {
        for (auto const& [a, b] : cfg_.body_pairs)
        {
            auto const& k0 = lookup(cfg_.bodies, a, "body_pairs").body;
            auto const& k1 = lookup(cfg_.bodies, b, "body_pairs").body;
            for (double t : cfg_.t_grid)
            {
                auto const name = "geometric/" + a + "~" + b + "/t=" + fmt_t(t);
                json inputs{{"k0", k0.describe()}, {"k1", k1.describe()}, {"t", t},
                            {"samples", cfg_.samples}, {"seed", cfg_.seed}};
                add("geometric", name, inputs, t, [&](CheckRecord& r) {
                    auto const g = geometric_bm_check(k0, k1, t, cfg_.samples,
                                                      check_seed(cfg_.seed, name));
                    r.lhs = g.lhs;
                    r.rhs = g.rhs;
                    r.value = g.gap;
                    if (g.exact)
                    {
                        r.tolerance = cfg_.tolerances.closed_form;
                    }
                    else
                    {
                        r.mode = CheckMode::confidence;
                        r.tolerance = cfg_.tolerances.mc_sigmas * g.std_error;
                        r.slack = g.uncertain_fraction;
                        if (g.unreliable)
                            r.diagnostic = "boundary-uncertain fraction above 1e-3";
                    }
                    rep_.measures.push_back({a + "~" + b, t, g.lhs, g.rhs, g.gap, g.std_error});
                });
            }
        }
        for (auto const& name : cfg_.variational_bodies)
        {
            auto const& k = lookup(cfg_.bodies, name, "variational_bodies").body;
            double const h = (*k.as_box())(0);
            std::vector<CandidateLaw> const cands{restriction_candidate(h),
                                                  uniform_candidate(h),
                                                  truncated_normal_candidate(0.5, h),
                                                  truncated_normal_candidate(2.0, h),
                                                  mixture_candidate(0.5, h),
                                                  point_mass_candidate()};
            json inputs{{"body", k.describe()}};
            VariationalReport vr;
            bool have = false;
            add("geometric", "variational/" + name + "/attained", inputs, std::nullopt,
                [&](CheckRecord& r) {
                    vr = variational_principle_check(k, cands);
                    have = true;
                    r.lhs = vr.measure;
                    r.rhs = vr.candidates.at(0).exp_minus_entropy;
                    r.value = r.lhs - r.rhs;
                    r.tolerance = cfg_.tolerances.variational;
                    r.mode = CheckMode::residual;
                });
            for (std::size_t i = 1; i < cands.size(); ++i)
            {
                auto in_c = inputs;
                in_c["candidate"] = cands[i].label;
                add("geometric", "variational/" + name + "/" + cands[i].label, in_c,
                    std::nullopt, [&](CheckRecord& r) {
                        if (!have)
                            throw std::runtime_error("variational check did not complete");
                        auto const& cr = vr.candidates.at(i);
                        if (!cr.accepted)
                            throw std::runtime_error("candidate rejected: " + cr.diagnostic);
                        r.lhs = vr.measure;
                        r.rhs = cr.exp_minus_entropy;
                        r.value = r.lhs - r.rhs;
                        r.tolerance = 1e-10;
                        r.mode = CheckMode::positive;
                    });
            }
        }
    }

    void counterexample()
    {
        for (auto const& s : cfg_.counterexamples)
        {
            auto const& k = lookup(cfg_.bodies, s.body, "counterexamples").body;
            std::vector<double> shift(s.shift.data(), s.shift.data() + s.shift.size());
            json inputs{{"body", k.describe()}, {"shift", shift}, {"t", s.t}};
            std::ostringstream name;
            name << "counterexample/" << s.body << "/shift=" << s.shift.transpose()
                 << "/t=" << fmt_t(s.t);
            add("counterexample", name.str(), inputs, s.t, [&](CheckRecord& r) {
                auto const c = asymmetry_counterexample(k, s.shift, s.t);
                r.lhs = c.lhs;
                r.rhs = c.rhs;
                r.value = c.gap;
                r.mode = CheckMode::negative;
            });
        }
    }

    void bbl()
    {
        for (auto const& fp : cfg_.function_pairs)
        {
            auto const& f = *lookup(cfg_.functions, fp.f, "function_pairs").function;
            auto const& g = *lookup(cfg_.functions, fp.g, "function_pairs").function;
            for (auto const& p : fp.p_values)
            {
                for (double t : cfg_.t_grid)
                {
                    auto const name = "bbl/" + fp.f + "~" + fp.g + "/p=" + p.str() + "/t=" + fmt_t(t);
                    json inputs{{"f", f.describe()}, {"g", g.describe()}, {"p", p.str()},
                                {"t", t}, {"samples", cfg_.samples}, {"seed", cfg_.seed}};
                    add("bbl", name, inputs, t, [&](CheckRecord& r) {
                        IntegratorSpec integ;
                        integ.samples = cfg_.samples;
                        integ.seed = check_seed(cfg_.seed, name);
                        auto const b = bbl_check({f, g, p, t}, integ);
                        r.lhs = b.lhs;
                        r.rhs = b.rhs;
                        r.value = b.gap;
                        r.tolerance = b.tolerance;
                        r.slack = b.slack;
                    });
                }
            }
        }
    }

    void bbl_homogeneous()
    {
        for (auto const& fp : cfg_.homogeneous_pairs)
        {
            auto const& f = lookup(cfg_.functions, fp.f, "homogeneous_pairs").radial;
            auto const& g = lookup(cfg_.functions, fp.g, "homogeneous_pairs").radial;
            for (double beta : fp.betas)
            {
                for (auto const& p : fp.p_values)
                {
                    for (double t : cfg_.t_grid)
                    {
                        auto const name = "bbl-homogeneous/" + fp.f + "~" + fp.g + "/beta="
                                          + fmt_t(beta) + "/p=" + p.str() + "/t=" + fmt_t(t);
                        json inputs{{"f", f.label}, {"g", g.label}, {"beta", beta},
                                    {"p", p.str()}, {"t", t}};
                        add("bbl-homogeneous", name, inputs, t, [&](CheckRecord& r) {
                            auto const b = bbl_homogeneous_check(f, g, p, t, beta);
                            r.lhs = b.lhs;
                            r.rhs = b.rhs;
                            r.value = b.gap;
                            r.tolerance = b.tolerance;
                            r.slack = b.slack;
                        });
                    }
                }
            }
        }
    }

    void dv()
    {
        for (auto const& s : cfg_.dv_discrete)
        {
            json inputs{{"phi", s.phi}, {"nu", s.nu}, {"family", s.family}};
            DvReport rep;
            bool have = false;
            add("dv", "dv/" + s.name + "/equality", inputs, std::nullopt, [&](CheckRecord& r) {
                rep = dv_duality_check(s.phi, s.nu, s.family);
                have = true;
                r.lhs = rep.lhs;
                r.rhs = rep.gibbs_value;
                r.value = r.lhs - r.rhs;
                r.tolerance = cfg_.tolerances.dv_discrete;
                r.mode = CheckMode::residual;
            });
            add("dv", "dv/" + s.name + "/bound", inputs, std::nullopt, [&](CheckRecord& r) {
                if (!have)
                    throw std::runtime_error("duality check did not complete");
                r.lhs = rep.lhs;
                r.rhs = rep.sup_over_family;
                r.value = r.lhs - r.rhs;
                r.tolerance = 1e-12;
            });
        }
        for (auto const& s : cfg_.dv_gaussian)
        {
            std::vector<std::string> labels;
            for (auto const& c : s.family)
                labels.push_back(c.label);
            json inputs{{"phi", s.phi_coefficients}, {"family", labels}};
            auto const coeffs = s.phi_coefficients;
            auto phi = [coeffs](double x) {
                double v = 0;
                for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it)
                    v = v * x + *it;
                return v;
            };
            DvReport rep;
            bool have = false;
            add("dv", "dv/" + s.name + "/equality", inputs, std::nullopt, [&](CheckRecord& r) {
                rep = dv_duality_check_gaussian(phi, s.family);
                have = true;
                r.lhs = rep.lhs;
                r.rhs = rep.gibbs_value;
                r.value = r.lhs - r.rhs;
                r.tolerance = cfg_.tolerances.dv_quadrature;
                r.mode = CheckMode::residual;
            });
            add("dv", "dv/" + s.name + "/bound", inputs, std::nullopt, [&](CheckRecord& r) {
                if (!have)
                    throw std::runtime_error("duality check did not complete");
                r.lhs = rep.lhs;
                r.rhs = rep.sup_over_family;
                r.value = r.lhs - r.rhs;
                r.tolerance = 1e-9;
            });
        }
    }

    ExperimentConfig const& cfg_;
    SuiteReport& rep_;
    std::map<std::string, BrenierMap> maps_;
    std::map<std::string, EntropyCurveReport> curves_;
    std::map<std::string, std::string> curve_errors_;
};

std::string utc_timestamp()
{
    auto const now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string g17(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(std::string const& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s)
    {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

std::string file_stem(std::string s)
{
    for (char& c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_')
            c = '_';
    return s;
}

}  // namespace

SuiteReport run(ExperimentConfig const& config)
{
    auto const& names = suite_names();
    if (std::find(names.begin(), names.end(), config.suite) == names.end())
        throw ConfigError("$.suite: unknown suite '" + config.suite + "'");
    if (config.t_grid.empty())
        throw ConfigError("$.t_grid: must not be empty");
    SuiteReport rep;
    rep.suite = config.suite;
    rep.seed = config.seed;
    rep.samples = config.samples;
    rep.timestamp = utc_timestamp();
    Runner runner(config, rep);
    if (config.suite == "all")
    {
        for (auto const& s : names)
            if (s != "all")
                runner.run_suite(s);
    }
    else
    {
        runner.run_suite(config.suite);
    }
    return rep;
}

nlohmann::json report_to_json(SuiteReport const& r, bool volatile_fields)
{
    json meta{{"suite", r.suite}, {"seed", r.seed}, {"samples", r.samples}, {"version", r.version}};
    if (volatile_fields)
        meta["timestamp"] = r.timestamp;
    json checks = json::array();
    for (auto const& c : r.checks)
    {
        json jc{{"name", c.name},
                {"suite", c.suite},
                {"inputs_digest", c.inputs_digest},
                {"inputs", c.inputs},
                {"t", c.t ? json(*c.t) : json(nullptr)},
                {"lhs", c.lhs},
                {"rhs", c.rhs},
                {"value", c.value},
                {"tolerance", c.tolerance},
                {"slack", c.slack},
                {"mode", to_string(c.mode)},
                {"error", c.error},
                {"diagnostic", c.diagnostic},
                {"verdict", to_string(c.verdict)}};
        if (volatile_fields)
            jc["runtime_ms"] = c.runtime_ms;
        checks.push_back(std::move(jc));
    }
    return json{{"metadata", meta},
                {"summary",
                 {{"total", r.checks.size()},
                  {"pass", r.count(Verdict::pass)},
                  {"inconclusive", r.count(Verdict::inconclusive)},
                  {"fail", r.count(Verdict::fail)}}},
                {"checks", checks}};
}

void write_report(SuiteReport const& r, std::filesystem::path const& path)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("write_report: cannot open " + path.string());
    out << report_to_json(r).dump(2) << "\n";
}

std::vector<std::string> const& plot_selectors()
{
    static std::vector<std::string> const s{"entropy-curve", "gap-vs-t", "measure-ci"};
    return s;
}

std::vector<std::filesystem::path> emit_plot_data(SuiteReport const& r,
                                                  std::string const& selector,
                                                  std::filesystem::path const& dir)
{
    auto const& sel = plot_selectors();
    if (std::find(sel.begin(), sel.end(), selector) == sel.end())
        throw std::invalid_argument("emit_plot_data: unknown selector '" + selector + "'");
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> out;
    auto open = [&](std::string const& stem) {
        auto const path = dir / (stem + ".csv");
        out.push_back(path);
        std::ofstream f(path);
        if (!f)
            throw std::runtime_error("emit_plot_data: cannot open " + path.string());
        return f;
    };

    if (selector == "entropy-curve")
    {
        for (auto const& [name, curve] : r.curves)
        {
            auto f = open("entropy_curve_" + file_stem(name));
            write_entropy_curve_csv(curve, f);
        }
    }
    else if (selector == "gap-vs-t")
    {
        auto f = open("gap_vs_t");
        f << "name,suite,t,lhs,rhs,gap,tolerance,verdict\n";
        for (auto const& c : r.checks)
        {
            if (!c.t)
                continue;
            f << csv_field(c.name) << ',' << c.suite << ',' << g17(*c.t) << ',' << g17(c.lhs)
              << ',' << g17(c.rhs) << ',' << g17(c.value) << ',' << g17(c.tolerance) << ','
              << to_string(c.verdict) << '\n';
        }
    }
    else
    {
        auto f = open("measure_ci");
        f << "pair,t,lhs,rhs,gap,std_error,ci_low,ci_high\n";
        for (auto const& m : r.measures)
        {
            f << csv_field(m.name) << ',' << g17(m.t) << ',' << g17(m.lhs) << ','
              << g17(m.rhs) << ',' << g17(m.gap) << ',' << g17(m.std_error) << ','
              << g17(m.gap - 3 * m.std_error) << ',' << g17(m.gap + 3 * m.std_error) << '\n';
        }
    }
    return out;
}

}  // namespace gbm
