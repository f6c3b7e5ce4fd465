#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "spatwhite/rng.hpp"

namespace spatwhite {

// Sensor placement in the unit square together with the pairwise
// Euclidean distance matrix. Immutable after construction.
struct SensorNetwork {
    int n = 0;
    Eigen::Matrix<double, Eigen::Dynamic, 2> positions;
    Eigen::MatrixXd distances;
    std::uint64_t seed = 0;
};

// Boolean adjacency support with forced self-loops. Matrices living in
// the associated sparse set have zeros exactly where mask is false.
struct SparsityPattern {
    int n = 0;
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask;
    // neighborhoods[k] lists the column indices j with mask(k, j), ascending.
    std::vector<std::vector<int>> neighborhoods;
};

// Exponentially correlated covariance: matrix(i,j) = sigma_i sigma_j alpha^d(i,j).
struct CovarianceModel {
    Eigen::VectorXd sigmas;  // standard deviations, all positive
    double alpha = 0.0;      // correlation decay, in (0, 1)
    Eigen::MatrixXd matrix;
};

// Draws n i.i.d. uniform positions in the unit square and fills the
// distance matrix. Deterministic for a fixed seed. Requires n >= 2.
SensorNetwork generate_rgg(int n, std::uint64_t seed);

// Builds a network from explicit positions (deserialization, or the
// degenerate single-sensor setup which generate_rgg does not cover).
SensorNetwork network_from_positions(const Eigen::Matrix<double, Eigen::Dynamic, 2>& positions,
                                     std::uint64_t seed = 0);

// mask(i,j) = (distance <= r); the diagonal is always true.
SparsityPattern adjacency_pattern(const SensorNetwork& net, double r);

// Builds a pattern from an explicit mask; symmetrizes nothing, validates
// symmetry and the all-true diagonal.
SparsityPattern pattern_from_mask(const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& mask);

// All-true and identity convenience patterns.
SparsityPattern full_pattern(int n);
SparsityPattern identity_pattern(int n);

// Assembles the covariance and checks positive definiteness
// (smallest eigenvalue > 1e-10 * largest).
CovarianceModel build_covariance(const SensorNetwork& net, const Eigen::VectorXd& sigmas,
                                 double alpha);

// Covariance from an explicit SPD matrix; sigmas taken from the diagonal.
// alpha is carried along for serialization only.
CovarianceModel covariance_from_matrix(const Eigen::MatrixXd& sigma, double alpha = 0.0);

// Each row is one multivariate-normal draw with mean theta*1 and
// covariance model.matrix, clipped elementwise to [-range_limit, range_limit].
// Pass an infinite range_limit to disable clipping.
Eigen::MatrixXd sample_observations(const CovarianceModel& model, double theta, long count,
                                    std::uint64_t seed, double range_limit);

}  // namespace spatwhite
