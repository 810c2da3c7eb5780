// verify <suite> --config FILE [--seed N] [--samples N] [--out DIR]

#include "gaussbm/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"Run verification suites and write report.json plus CSV plot tables"};
    app.require_subcommand(1, 1);

    std::string config_path;
    std::uint64_t seed = 0;
    int samples = 0;
    std::string out_dir;

    for (auto const& name : gbm::suite_names())
    {
        auto* sub = app.add_subcommand(name, "Run the " + name + " suite");
        sub->add_option("--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "Override the config seed");
        sub->add_option("--samples", samples, "Override the Monte Carlo budget")->check(CLI::PositiveNumber);
        sub->add_option("--out", out_dir, "Output directory (default: config output_dir)");
    }
    CLI11_PARSE(app, argc, argv);

    auto* sub = app.get_subcommands().front();
    gbm::ExperimentConfig cfg;
    try
    {
        cfg = gbm::load_config(config_path);
    }
    catch (gbm::ConfigError const& e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    cfg.suite = sub->get_name();
    if (sub->count("--seed"))
        cfg.seed = seed;
    if (sub->count("--samples"))
        cfg.samples = samples;
    if (!out_dir.empty())
        cfg.output_dir = out_dir;

    gbm::SuiteReport const rep = gbm::run(cfg);
    gbm::write_report(rep, cfg.output_dir / "report.json");
    for (auto const& sel : gbm::plot_selectors())
        gbm::emit_plot_data(rep, sel, cfg.output_dir);

    for (auto const& c : rep.checks)
    {
        if (c.verdict == gbm::Verdict::pass)
            continue;
        std::cout << gbm::to_string(c.verdict) << "  " << c.name;
        if (!c.diagnostic.empty())
            std::cout << "  (" << c.diagnostic << ")";
        std::cout << "\n";
    }
    std::printf("%zu checks: %d pass, %d inconclusive, %d fail; report in %s\n",
                rep.checks.size(),
                rep.count(gbm::Verdict::pass),
                rep.count(gbm::Verdict::inconclusive),
                rep.count(gbm::Verdict::fail),
                cfg.output_dir.string().c_str());
    return rep.count(gbm::Verdict::fail) == 0 ? 0 : 1;
}
