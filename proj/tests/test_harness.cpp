#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "spatwhite/errors.hpp"
#include "spatwhite/harness.hpp"
#include "spatwhite/serialize.hpp"

using namespace spatwhite;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig config;
    config.n = 10;
    config.seed = 5;
    config.radii = {0.3, 0.8};
    config.budgets = {20, 80};
    config.trials = 1000;
    return config;
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("spatwhite_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("default budgets span n/2 to 16n log-spaced") {
    ExperimentConfig config;
    config.n = 50;
    const std::vector<int> budgets = config.resolved_budgets();
    REQUIRE(budgets.size() == 9);
    CHECK(budgets.front() == 25);
    CHECK(budgets.back() == 800);
    for (std::size_t i = 1; i < budgets.size(); ++i) {
        CHECK(budgets[i] > budgets[i - 1]);
        // roughly constant ratio
        const double ratio = budgets[i] / static_cast<double>(budgets[i - 1]);
        CHECK(ratio > 1.3);
        CHECK(ratio < 1.8);
    }

    config.budgets = {7, 7};
    CHECK(config.resolved_budgets() == std::vector<int>{7, 7});
}

TEST_CASE("config validation rejects out-of-range fields") {
    CHECK_NOTHROW(ExperimentConfig{}.validate());

    auto expect_invalid = [](auto&& mutate) {
        ExperimentConfig config;
        mutate(config);
        CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    };
    expect_invalid([](ExperimentConfig& c) { c.n = 0; });
    expect_invalid([](ExperimentConfig& c) { c.alpha = 0.0; });
    expect_invalid([](ExperimentConfig& c) { c.alpha = 1.0; });
    expect_invalid([](ExperimentConfig& c) { c.sigma_sq_range = {0.0, 1.0}; });
    expect_invalid([](ExperimentConfig& c) { c.sigma_sq_range = {2.0, 1.0}; });
    expect_invalid([](ExperimentConfig& c) { c.range_limit = 0.0; });
    expect_invalid([](ExperimentConfig& c) { c.radii = {-0.1}; });
    expect_invalid([](ExperimentConfig& c) { c.radii = {0.2, 0.2}; });
    expect_invalid([](ExperimentConfig& c) { c.budgets = {0}; });
    expect_invalid([](ExperimentConfig& c) { c.trials = 999; });
    expect_invalid([](ExperimentConfig& c) { c.restarts = 0; });
    expect_invalid([](ExperimentConfig& c) { c.tol = 0.0; });
    expect_invalid([](ExperimentConfig& c) { c.max_sweeps = 0; });
    expect_invalid([](ExperimentConfig& c) { c.schemes = {}; });
    expect_invalid([](ExperimentConfig& c) { c.schemes = {"raw", "zca"}; });
    expect_invalid([](ExperimentConfig& c) { c.schemes = {"raw", "raw"}; });
    expect_invalid([](ExperimentConfig& c) {
        c.schemes = {"whitened"};
        c.radii = {};
    });
    expect_invalid([](ExperimentConfig& c) {
        c.zero_bit_policy = ZeroBitPolicy::floor_to_one;
        c.budgets = {c.n - 1};
    });
}

TEST_CASE("prepare_experiment builds schemes in config order") {
    const ExperimentConfig config = small_config();
    const ExperimentContext ctx = prepare_experiment(config);

    REQUIRE(ctx.schemes.size() == 5);  // raw, whitened x2, pca, cholesky
    CHECK(ctx.schemes[0].label == "raw");
    CHECK(ctx.schemes[1].label == "whitened(0.3)");
    CHECK(ctx.schemes[2].label == "whitened(0.8)");
    CHECK(ctx.schemes[3].label == "pca");
    CHECK(ctx.schemes[4].label == "cholesky");

    CHECK(ctx.crb_value == doctest::Approx(crb(ctx.cov.matrix)).epsilon(1e-14));
    for (const auto& scheme : ctx.schemes) {
        CHECK(scheme.divergence >= -1e-9);
        // every transform preserves the mean, so fusion stays unbiased
        for (Eigen::Index i = 0; i < scheme.transform.rows(); ++i) {
            CHECK(std::abs(scheme.transform.row(i).sum() - 1.0) < 1e-10);
        }
    }
    CHECK(ctx.schemes[1].solution.has_value());
    CHECK_FALSE(ctx.schemes[0].solution.has_value());

    // sigma draws respect the configured range
    for (Eigen::Index k = 0; k < ctx.cov.sigmas.size(); ++k) {
        const double var = ctx.cov.sigmas(k) * ctx.cov.sigmas(k);
        CHECK(var >= config.sigma_sq_range[0]);
        CHECK(var <= config.sigma_sq_range[1]);
    }
}

TEST_CASE("run_experiment emits one row per scheme and budget, deterministically") {
    const ExperimentConfig config = small_config();
    const SweepResult a = run_experiment(config, false);
    REQUIRE(a.rows.size() == 5 * 2);

    std::size_t idx = 0;
    for (const auto& label :
         {"raw", "whitened(0.3)", "whitened(0.8)", "pca", "cholesky"}) {
        for (int budget : {20, 80}) {
            const SweepRow& row = a.rows[idx++];
            CHECK(row.scheme == label);
            CHECK(row.budget == budget);
            CHECK(row.bits_total <= budget);
            CHECK(row.bits_total > 0);
            CHECK(row.lambda > 0.0);
            CHECK(row.analytic_mse >= row.crb - 1e-12);
            CHECK_FALSE(row.mc_mse.has_value());
            CHECK_FALSE(row.mc_halfwidth.has_value());
        }
    }

    const SweepResult b = run_experiment(config, false);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].analytic_mse == b.rows[i].analytic_mse);
        CHECK(a.rows[i].lambda == b.rows[i].lambda);
    }

    // monte carlo fills both optional columns
    ExperimentConfig mc_config = config;
    mc_config.budgets = {20};
    const SweepResult c = run_experiment(mc_config, true);
    for (const auto& row : c.rows) {
        REQUIRE(row.mc_mse.has_value());
        REQUIRE(row.mc_halfwidth.has_value());
        CHECK(*row.mc_halfwidth > 0.0);
    }
}

TEST_CASE("single-sensor experiment matches the scalar closed form") {
    ExperimentConfig config;
    config.n = 1;
    config.seed = 9;
    config.radii = {0.1};
    config.budgets = {5};
    const ExperimentContext ctx = prepare_experiment(config);
    const double sigma_sq = ctx.cov.matrix(0, 0);
    const SweepResult result = run_experiment(ctx, config, false);

    REQUIRE(result.rows.size() == 4);
    const double u = config.range_limit;
    const double expect = sigma_sq + u * u / ((31.0) * (31.0));  // B=5 bits
    for (const auto& row : result.rows) {
        CHECK(row.bits_total == 5);
        CHECK(row.analytic_mse == doctest::Approx(expect).epsilon(1e-10));
        CHECK(row.crb == doctest::Approx(sigma_sq).epsilon(1e-12));
    }
}

TEST_CASE("near-zero correlation makes every scheme equivalent") {
    // alpha^d must vanish at the smallest sensor separation, not just be
    // small: d ~ 0.1 turns alpha = 1e-20 into percent-level correlation
    ExperimentConfig config = small_config();
    config.alpha = 1e-300;

    const ExperimentContext ctx = prepare_experiment(config);
    Eigen::MatrixXd off = ctx.cov.matrix;
    off.diagonal().setZero();
    REQUIRE(off.cwiseAbs().maxCoeff() < 1e-20);

    const SweepResult result = run_experiment(ctx, config, false);
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
        const SweepRow& row = result.rows[i];
        const SweepRow& raw = result.rows[i % 2];  // same budget, raw scheme
        CHECK(std::abs(row.analytic_mse - raw.analytic_mse) / raw.analytic_mse < 1e-6);
    }
}

TEST_CASE("monte_carlo_mse: unquantized identity covariance recovers the CRB") {
    const CovarianceModel model =
        covariance_from_matrix(Eigen::MatrixXd::Identity(10, 10));
    const MonteCarloResult mc = monte_carlo_mse(
        Eigen::MatrixXd::Identity(10, 10), model, std::nullopt, 0.0, 100000, 77);
    CHECK(std::abs(mc.mse - 0.1) < 3.0 * mc.halfwidth);
    CHECK(mc.halfwidth < 0.005);
}

TEST_CASE("monte_carlo_mse is shift-equivariant in theta") {
    const ExperimentConfig config = small_config();
    const ExperimentContext ctx = prepare_experiment(config);
    const BitAllocation alloc =
        solve_budget(ctx.schemes[0].alloc_variances, 30, config.range_limit);
    const MonteCarloResult at0 = monte_carlo_mse(ctx.schemes[0].transform, ctx.cov, alloc,
                                                 0.0, 4000, 11);
    const MonteCarloResult at5 = monte_carlo_mse(ctx.schemes[0].transform, ctx.cov, alloc,
                                                 5.0, 4000, 11);
    CHECK(std::abs(at0.mse - at5.mse) <= 3.0 * (at0.halfwidth + at5.halfwidth));
}

TEST_CASE("monte_carlo_mse validates trials and sizes") {
    const CovarianceModel model =
        covariance_from_matrix(Eigen::MatrixXd::Identity(3, 3));
    CHECK_THROWS_AS(monte_carlo_mse(Eigen::MatrixXd::Identity(3, 3), model, std::nullopt,
                                    0.0, 999, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(monte_carlo_mse(Eigen::MatrixXd::Identity(2, 2), model, std::nullopt,
                                    0.0, 1000, 1),
                    std::invalid_argument);
}

TEST_CASE("run_experiment attaches scheme and budget context to errors") {
    const ExperimentConfig config = small_config();
    const ExperimentContext ctx = prepare_experiment(config);

    // an unsatisfiable floor allocation in the first cell surfaces with
    // the scheme label and budget prepended, category preserved
    ExperimentConfig bad = config;
    bad.zero_bit_policy = ZeroBitPolicy::floor_to_one;
    bad.budgets = {5};  // < n, so the floor cannot fit
    try {
        run_experiment(ctx, bad, false);
        FAIL("expected invalid_argument");
    } catch (const std::invalid_argument& e) {
        const std::string what = e.what();
        CHECK(what.find("raw at B=5") != std::string::npos);
    }
}

TEST_CASE("config json round-trips losslessly") {
    ExperimentConfig config = small_config();
    config.tol = 3.5e-9;
    config.theta = -2.25;
    config.schemes = {"pca", "raw"};
    config.zero_bit_policy = ZeroBitPolicy::floor_to_one;
    config.budgets = {20, 80};

    const nlohmann::json j = to_json(config);
    const ExperimentConfig back = config_from_json(j);
    CHECK(back.n == config.n);
    CHECK(back.seed == config.seed);
    CHECK(back.sigma_sq_range == config.sigma_sq_range);
    CHECK(back.alpha == config.alpha);
    CHECK(back.range_limit == config.range_limit);
    CHECK(back.radii == config.radii);
    CHECK(back.budgets == config.budgets);
    CHECK(back.trials == config.trials);
    CHECK(back.theta == config.theta);
    CHECK(back.tol == config.tol);
    CHECK(back.schemes == config.schemes);
    CHECK(back.zero_bit_policy == config.zero_bit_policy);
    CHECK(config_hash(back) == config_hash(config));
}

TEST_CASE("config json rejects unknown fields and bad values") {
    nlohmann::json j = {{"n", 5}, {"frobnicate", true}};
    CHECK_THROWS_AS(config_from_json(j), std::invalid_argument);
    nlohmann::json bad_policy = {{"zero_bit_policy", "sometimes"}};
    CHECK_THROWS_AS(config_from_json(bad_policy), std::invalid_argument);
    nlohmann::json bad_value = {{"alpha", 1.5}};
    CHECK_THROWS_AS(config_from_json(bad_value), std::invalid_argument);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), std::invalid_argument);
}

TEST_CASE("network artifact round-trips bit for bit") {
    TempDir tmp;
    const ExperimentConfig config = small_config();
    const auto [net, cov] = prepare_network(config);
    const std::filesystem::path path = tmp.path / "network.json";
    write_network_artifact(path, net, cov);

    const auto [net2, cov2] = read_network_artifact(path);
    CHECK(net2.n == net.n);
    CHECK(net2.seed == net.seed);
    CHECK((net2.positions.array() == net.positions.array()).all());
    CHECK((net2.distances.array() == net.distances.array()).all());
    CHECK((cov2.matrix.array() == cov.matrix.array()).all());
    CHECK((cov2.sigmas.array() == cov.sigmas.array()).all());
    CHECK(cov2.alpha == cov.alpha);
}

TEST_CASE("solution artifact round-trips") {
    TempDir tmp;
    const ExperimentConfig config = small_config();
    const ExperimentContext ctx = prepare_experiment(config);
    REQUIRE(ctx.schemes[1].solution.has_value());
    const WhiteningSolution& sol = *ctx.schemes[1].solution;

    const std::filesystem::path path = tmp.path / "solution.json";
    write_solution_artifact(path, sol, 0.3);
    const WhiteningSolution back = read_solution_artifact(path);
    CHECK((back.z.array() == sol.z.array()).all());
    CHECK((back.w.array() == sol.w.array()).all());
    CHECK((back.d.array() == sol.d.array()).all());
    CHECK(back.divergence == sol.divergence);
    CHECK(back.trace == sol.trace);
    CHECK(back.converged == sol.converged);
    CHECK(back.restarts_used == sol.restarts_used);
}

TEST_CASE("sweep csv is stable and carries the exact header") {
    const ExperimentConfig config = small_config();
    const SweepResult result = run_experiment(config, false);

    std::ostringstream a, b;
    write_sweep_csv(a, result);
    write_sweep_csv(b, result);
    CHECK(a.str() == b.str());

    std::istringstream lines(a.str());
    std::string header;
    std::getline(lines, header);
    CHECK(header ==
          "scheme,B,lambda,bits_total,analytic_mse,mc_mse,mc_halfwidth,crb,divergence");

    // without monte carlo the two optional columns are empty
    std::string first;
    std::getline(lines, first);
    CHECK(first.find(",,") != std::string::npos);

    std::size_t rows = 2;  // header + first
    std::string line;
    while (std::getline(lines, line)) ++rows;
    CHECK(rows == 1 + result.rows.size());
}

TEST_CASE("metadata sidecar echoes the resolved config") {
    TempDir tmp;
    ExperimentConfig config = small_config();
    config.budgets.clear();  // force resolution into the echo
    ExperimentConfig echoed = config;
    echoed.budgets = config.resolved_budgets();

    const std::filesystem::path path = tmp.path / "metadata.json";
    write_metadata(path, echoed, "evaluate");

    std::ifstream in(path);
    nlohmann::json j;
    in >> j;
    CHECK(j.at("command") == "evaluate");
    CHECK(j.at("seed") == config.seed);
    CHECK(j.at("config").at("budgets").size() == echoed.budgets.size());
    CHECK(j.at("config_hash") == config_hash(echoed));
    CHECK(j.at("versions").contains("spatwhite"));
    CHECK(j.at("versions").contains("eigen"));
}

TEST_CASE("format_double uses %.12g") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(800.0) == "800");
    CHECK(format_double(3.06504936098e-07) == "3.06504936098e-07");
}
