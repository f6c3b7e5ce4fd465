#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spatwhite/network.hpp"

namespace spatwhite {

struct WhiteningProblem {
    CovarianceModel sigma;
    SparsityPattern pattern;
};

// Validates dimension agreement and the pattern diagonal.
WhiteningProblem make_problem(CovarianceModel sigma, SparsityPattern pattern);

// Result of the block-coordinate-descent solve. z has exact structural
// zeros off the pattern; w and d are the mean-preserving split of z,
// w = diag(z*1)^-1 * z and d = (z*1)^-2 elementwise.
struct WhiteningSolution {
    Eigen::MatrixXd z;
    Eigen::MatrixXd w;
    Eigen::VectorXd d;
    double divergence = 0.0;
    std::vector<double> trace;  // best run; trace[0] is the initial value, then one entry per sweep
    std::vector<std::vector<double>> run_traces;  // one trace per restart that produced an iterate
    int restarts_used = 0;
    bool converged = false;
    double stationarity = 0.0;  // max-abs entry of the masked gradient at z
};

// One row's coordinate subproblem: minimize
//   g(v) = 1/2 v' sigma_k v - log(v' c_k)
// over the neighborhood coordinates of row k.
struct RowSubproblem {
    int k = 0;
    std::vector<int> neighborhood;
    Eigen::MatrixXd sigma_k;  // clique covariance, SPD
    Eigen::VectorXd c_k;      // cofactor vector (any positive multiple)
};

// Log-determinant divergence between SPD matrices:
//   tr(Q^-1 P) - log det P - n + log det Q.
// Nonnegative, zero iff P = Q. Throws std::invalid_argument on non-SPD input.
double log_det_divergence(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q);

// Divergence of z*sigma*z' from the identity, as a function of z:
//   tr(z sigma z') - log det(z z') + c0,     c0 = -n - log det sigma.
// Returns +infinity for singular z.
double cost(const Eigen::MatrixXd& z, const Eigen::MatrixXd& sigma);

// Masked first-order condition 2(z*sigma - z^-T) .* mask. Verification
// tool, not a descent direction. Throws numeric_failure for singular z.
Eigen::MatrixXd gradient(const Eigen::MatrixXd& z, const Eigen::MatrixXd& sigma,
                         const SparsityPattern& pattern);

// Cofactor vector of row k restricted to its neighborhood, up to a
// positive scale. Uses the adjugate identity against the maintained
// inverse: cof(k, j) = det(z) * z_inv(j, k), and the det(z) factor is
// dropped since the row minimizer is invariant to positive scaling.
// The sign is chosen so that the current row satisfies z_k' c_k >= 0.
Eigen::VectorXd cofactor_vector(const Eigen::MatrixXd& z, const Eigen::MatrixXd& z_inv, int k,
                                const SparsityPattern& pattern);

// Closed-form minimizer sigma_k^-1 c_k / sqrt(c_k' sigma_k^-1 c_k).
Eigen::VectorXd row_update(const RowSubproblem& sub);

// Inverse of z after replacing row k by new_row, via Sherman-Morrison.
// Throws singular_update_error when the update denominator is below 1e-12;
// callers then re-factorize from scratch.
Eigen::MatrixXd rank_one_inverse_update(const Eigen::MatrixXd& z_inv, int k,
                                        const Eigen::VectorXd& old_row,
                                        const Eigen::VectorXd& new_row);

enum class InitStrategy { diagonal, perturbed_diagonal };

// Feasible starting point: diag(1/sigma_k), optionally with seeded
// uniform noise of magnitude 0.1/sigma_k on pattern-allowed off-diagonals.
Eigen::MatrixXd initialize(const WhiteningProblem& problem, InitStrategy strategy,
                           std::uint64_t seed = 0);

struct OptimizeOptions {
    int restarts = 4;
    double tol = 1e-8;
    int max_sweeps = 500;
    std::uint64_t seed = 0;  // base seed for the perturbed restarts
};

// Block coordinate descent over rows with a maintained inverse, repeated
// from `restarts` starting points; returns the best run. Throws
// optimization_failure if every restart dies on a degenerate row.
WhiteningSolution optimize(const WhiteningProblem& problem, const OptimizeOptions& options = {});

// Mean-preserving split (w, d) of a transform z; requires nonzero row sums.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> extract_wd(const Eigen::MatrixXd& z);

}  // namespace spatwhite
