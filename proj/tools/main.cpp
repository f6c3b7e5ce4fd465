#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "spatwhite/errors.hpp"
#include "spatwhite/harness.hpp"
#include "spatwhite/serialize.hpp"

namespace fs = std::filesystem;
using namespace spatwhite;

namespace {

struct CliOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    std::optional<long> trials;
    std::string format = "csv";
};

void add_common(CLI::App* sub, CliOptions& opt) {
    sub->add_option("--config", opt.config_path, "experiment config file (json)");
    sub->add_option("--seed", opt.seed, "override the config seed");
    sub->add_option("--out", opt.out_dir, "output directory")->capture_default_str();
    sub->add_option("--trials", opt.trials, "override the Monte Carlo trial count");
    sub->add_option("--format", opt.format, "table format")
        ->check(CLI::IsMember({"csv"}))
        ->capture_default_str();
}

ExperimentConfig resolve_config(const CliOptions& opt) {
    ExperimentConfig config;
    if (!opt.config_path.empty()) config = load_config(opt.config_path);
    if (opt.seed) config.seed = *opt.seed;
    if (opt.trials) config.trials = *opt.trials;
    config.validate();
    return config;
}

// Metadata echoes the fully resolved config, budgets included.
ExperimentConfig echo_config(const ExperimentConfig& config) {
    ExperimentConfig echo = config;
    echo.budgets = config.resolved_budgets();
    return echo;
}

fs::path ensure_out(const CliOptions& opt) {
    fs::create_directories(opt.out_dir);
    return fs::path(opt.out_dir);
}

std::string radius_file(double r) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "whitening_r%g.json", r);
    return buf;
}

void write_solutions(const fs::path& out, const ExperimentContext& ctx,
                     const ExperimentConfig& config) {
    std::size_t ri = 0;
    for (const auto& scheme : ctx.schemes) {
        if (!scheme.solution) continue;
        const double r = config.radii.at(ri++);
        const fs::path path = out / radius_file(r);
        write_solution_artifact(path, *scheme.solution, r);
        std::cout << "wrote " << path.string() << " (divergence "
                  << format_double(scheme.solution->divergence) << ", "
                  << (scheme.solution->trace.size() - 1) << " sweeps)\n";
    }
}

int run_generate(const CliOptions& opt) {
    const ExperimentConfig config = resolve_config(opt);
    const fs::path out = ensure_out(opt);
    const auto [net, cov] = prepare_network(config);
    write_network_artifact(out / "network.json", net, cov);
    write_metadata(out / "metadata.json", echo_config(config), "generate");
    std::cout << "wrote " << (out / "network.json").string() << "\n";
    return 0;
}

int run_whiten(const CliOptions& opt) {
    const ExperimentConfig config = resolve_config(opt);
    const fs::path out = ensure_out(opt);
    // Solves for the configured radii regardless of the schemes list.
    ExperimentConfig solve = config;
    solve.schemes = {"whitened"};
    const ExperimentContext ctx = prepare_experiment(solve);
    write_solutions(out, ctx, config);
    write_metadata(out / "metadata.json", echo_config(config), "whiten");
    return 0;
}

int run_evaluate(const CliOptions& opt) {
    const ExperimentConfig config = resolve_config(opt);
    const fs::path out = ensure_out(opt);
    const SweepResult result = run_experiment(config, false);
    write_sweep_csv(out / "sweep.csv", result);
    write_metadata(out / "metadata.json", echo_config(config), "evaluate");
    std::cout << "wrote " << (out / "sweep.csv").string() << " (" << result.rows.size()
              << " rows)\n";
    return 0;
}

int run_validate(const CliOptions& opt) {
    const ExperimentConfig config = resolve_config(opt);
    const fs::path out = ensure_out(opt);
    const SweepResult result = run_experiment(config, true);
    write_sweep_csv(out / "validate.csv", result);
    write_metadata(out / "metadata.json", echo_config(config), "validate");

    std::size_t agree = 0;
    for (const auto& row : result.rows) {
        const double gap = std::abs(*row.mc_mse - row.analytic_mse);
        const double limit = std::max(3.0 * *row.mc_halfwidth, 0.1 * row.analytic_mse);
        const bool ok = gap <= limit;
        agree += ok;
        std::printf("%-16s B=%-5d analytic=%-12s mc=%-12s hw=%-10s %s\n", row.scheme.c_str(),
                    row.budget, format_double(row.analytic_mse).c_str(),
                    format_double(*row.mc_mse).c_str(), format_double(*row.mc_halfwidth).c_str(),
                    ok ? "agree" : "DISAGREE");
    }
    std::printf("validate: %zu/%zu cells within max(3 halfwidths, 10%% relative)\n", agree,
                result.rows.size());
    std::cout << "wrote " << (out / "validate.csv").string() << "\n";
    return 0;
}

int run_all(const CliOptions& opt) {
    const ExperimentConfig config = resolve_config(opt);
    const fs::path out = ensure_out(opt);
    const ExperimentContext ctx = prepare_experiment(config);
    write_network_artifact(out / "network.json", ctx.net, ctx.cov);
    std::cout << "wrote " << (out / "network.json").string() << "\n";
    write_solutions(out, ctx, config);
    const SweepResult result = run_experiment(ctx, config, true);
    write_sweep_csv(out / "sweep.csv", result);
    write_metadata(out / "metadata.json", echo_config(config), "all");
    std::cout << "wrote " << (out / "sweep.csv").string() << " (" << result.rows.size()
              << " rows)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adjacency-constrained spatial whitening for quantized distributed estimation"};
    app.require_subcommand(1);

    CliOptions opt;
    CLI::App* generate = app.add_subcommand("generate", "build the network/covariance artifact");
    CLI::App* whiten = app.add_subcommand("whiten", "solve whitening at the configured radii");
    CLI::App* evaluate = app.add_subcommand("evaluate", "sweep bit budgets, write the CSV");
    CLI::App* validate = app.add_subcommand("validate", "Monte Carlo vs analytic MSE report");
    CLI::App* all = app.add_subcommand("all", "generate + whiten + evaluate with Monte Carlo");
    for (CLI::App* sub : {generate, whiten, evaluate, validate, all}) add_common(sub, opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (generate->parsed()) return run_generate(opt);
        if (whiten->parsed()) return run_whiten(opt);
        if (evaluate->parsed()) return run_evaluate(opt);
        if (validate->parsed()) return run_validate(opt);
        return run_all(opt);
    } catch (const optimization_failure& e) {
        std::cerr << "optimization failure: " << e.what() << "\n";
        return 3;
    } catch (const numeric_failure& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
