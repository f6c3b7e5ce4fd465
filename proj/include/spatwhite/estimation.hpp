#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spatwhite/rng.hpp"
#include "spatwhite/whitening.hpp"

namespace spatwhite {

// Handling of sensors whose near-optimal allocation rounds to zero bits.
// `drop` excludes them from transmission and fusion; `floor_to_one`
// forces at least one bit everywhere (requires budget >= n).
enum class ZeroBitPolicy { drop, floor_to_one };

struct BitAllocation {
    Eigen::VectorXi bits;        // per sensor, >= 0
    double lambda = 0.0;         // multiplier that produced `bits`
    int budget = 0;              // requested total
    int total = 0;               // achieved total, sum(bits)
    double range_limit = 0.0;    // quantizer range U
    std::vector<bool> active;    // bits[k] >= 1
};

// Diagonal quantization-noise model U^2/(2^b - 1)^2, kept only for
// active sensors (inactive sensors transmit nothing).
struct QuantizationNoise {
    std::vector<int> sensors;    // active sensor indices, ascending
    Eigen::VectorXd q_diag;      // aligned with `sensors`
};

struct EstimationReport {
    std::string scheme;
    double analytic_mse = 0.0;
    std::optional<double> mc_mse;
    std::optional<double> mc_halfwidth;  // 95% normal-approximation halfwidth
    double crb = 0.0;
    int budget = 0;
    long trials = 0;
};

// Near-optimal per-sensor bit counts round(log2(1 + 1/(lambda * var))),
// rounded half away from zero and clamped at 0.
Eigen::VectorXi allocate_bits(const Eigen::VectorXd& variances, double lambda);

// Bisection on log10(lambda) in [-9, 9] to match the requested total.
// The total is a step function of lambda, so when the budget falls in a
// gap the nearest achievable total below it is returned.
BitAllocation solve_budget(const Eigen::VectorXd& variances, int budget, double range_limit,
                           ZeroBitPolicy policy = ZeroBitPolicy::drop);

QuantizationNoise quantization_noise(const BitAllocation& alloc);

// Probabilistic uniform quantization to one of the two adjacent grid
// points of the 2^bits-point uniform grid on [-U, U], with probabilities
// that make the message conditionally unbiased. Requires bits >= 1 and
// x within range.
double quantize(double x, int bits, double range_limit, RngEngine& rng);

// Weighted least-squares fusion (1' C^-1 1)^-1 1' C^-1 m over the active subset.
double fuse(const Eigen::VectorXd& messages, const Eigen::MatrixXd& c_active);

// Distortion model 1' C^-1 (C + Q) C^-1 1 / (1' C^-1 1)^2 on the active subset.
double analytic_mse(const Eigen::MatrixXd& c_active, const Eigen::VectorXd& q_diag);

// Cramer-Rao bound 1 / (1' sigma^-1 1) for unquantized estimation.
double crb(const Eigen::MatrixXd& sigma);

// Post-transform noise variances used by the bit-allocation rule.
struct SchemeVariances {
    Eigen::VectorXd exact;        // diagonal of T sigma T'
    Eigen::VectorXd local_model;  // the locally computable surrogate (z*1)^-2 where available
    double max_rel_gap = 0.0;     // largest relative gap between the two
};

SchemeVariances scheme_variances(const Eigen::MatrixXd& transform, const Eigen::MatrixXd& sigma);
SchemeVariances scheme_variances(const WhiteningSolution& solution, const Eigen::MatrixXd& sigma);

// Square submatrix / subvector over the listed sensor indices.
Eigen::MatrixXd active_submatrix(const Eigen::MatrixXd& m, const std::vector<int>& sensors);
Eigen::VectorXd active_subvector(const Eigen::VectorXd& v, const std::vector<int>& sensors);

}  // namespace spatwhite
