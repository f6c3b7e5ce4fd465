#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spatwhite/baselines.hpp"
#include "spatwhite/estimation.hpp"
#include "spatwhite/network.hpp"
#include "spatwhite/whitening.hpp"

namespace spatwhite {

// Full description of one experiment run. Every field has a default, so
// a config file only needs to list what it overrides; budgets left empty
// resolve to a log-spaced sweep from n/2 to 16n.
struct ExperimentConfig {
    int n = 50;
    std::uint64_t seed = 1;
    std::array<double, 2> sigma_sq_range{0.5, 1.5};  // per-sensor variance draw
    double alpha = 0.02;
    double range_limit = 20.0;
    std::vector<double> radii{0.1, 0.5};
    std::vector<int> budgets;
    long trials = 20000;
    double theta = 1.0;
    int restarts = 4;
    double tol = 1e-8;
    int max_sweeps = 500;
    std::vector<std::string> schemes{"raw", "whitened", "pca", "cholesky"};
    ZeroBitPolicy zero_bit_policy = ZeroBitPolicy::drop;

    std::vector<int> resolved_budgets() const;
    void validate() const;
};

// One scheme instance of the sweep: the transform every sensor applies,
// the variances fed to the bit-allocation rule, and the exact
// post-transform covariance the fusion center uses.
struct SchemeInstance {
    std::string label;
    Eigen::MatrixXd transform;
    Eigen::VectorXd alloc_variances;
    Eigen::MatrixXd post_cov;
    double divergence = 0.0;  // residual whitening divergence of this scheme
    std::optional<WhiteningSolution> solution;  // present for whitened(r) schemes
};

// Network, covariance and all requested scheme transforms, solved once
// and shared across the budget sweep.
struct ExperimentContext {
    SensorNetwork net;
    CovarianceModel cov;
    std::vector<SchemeInstance> schemes;
    double crb_value = 0.0;
};

struct SweepRow {
    std::string scheme;
    int budget = 0;
    double lambda = 0.0;
    int bits_total = 0;
    double analytic_mse = 0.0;
    std::optional<double> mc_mse;
    std::optional<double> mc_halfwidth;
    double crb = 0.0;
    double divergence = 0.0;
};

struct SweepResult {
    ExperimentConfig config;
    std::vector<SweepRow> rows;
};

// Network and covariance only, seed-deterministic (the `generate` stage).
std::pair<SensorNetwork, CovarianceModel> prepare_network(const ExperimentConfig& config);

// Builds the network and covariance from the config (seed-deterministic)
// and solves/constructs every requested scheme transform.
ExperimentContext prepare_experiment(const ExperimentConfig& config);

// Runs the (scheme x budget) sweep; rows appear in config order. With
// with_monte_carlo set, every cell is also simulated with config.trials
// trials.
SweepResult run_experiment(const ExperimentConfig& config, bool with_monte_carlo = false);
SweepResult run_experiment(const ExperimentContext& ctx, const ExperimentConfig& config,
                           bool with_monte_carlo = false);

struct MonteCarloResult {
    double mse = 0.0;
    double halfwidth = 0.0;  // 95% confidence
};

// Simulates sample -> transform -> clip -> quantize -> fuse per trial.
// Trials use independent RNG streams derived from `seed`, so the result
// does not depend on how the trial loop is scheduled. Pass an empty
// allocation to skip quantization (fusion of the clipped transformed
// observations themselves).
MonteCarloResult monte_carlo_mse(const Eigen::MatrixXd& transform, const CovarianceModel& model,
                                 const std::optional<BitAllocation>& alloc, double theta,
                                 long trials, std::uint64_t seed);

}  // namespace spatwhite
