#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace spatwhite {

enum class BaselineKind { pca, cholesky };

// A dense (non-local) whitening transform normalized to preserve the
// signal mean: every kept row of `transform` sums to 1, and the
// post-transform noise covariance is diagonal with entries `variances`.
struct GlobalWhitening {
    Eigen::MatrixXd transform;      // kept_components x n
    Eigen::VectorXd variances;
    BaselineKind label = BaselineKind::pca;
    std::vector<int> dropped;       // components excluded by the drop policy (pca only)
};

// What to do with eigenvectors orthogonal to the all-ones vector, for
// which the mean normalization is undefined.
enum class DegeneratePolicy { error, drop };

// Eigendecomposition-based whitening T = diag(U'1)^-1 U'. Components are
// sorted by descending eigenvalue with signs fixed so U'1 >= 0.
GlobalWhitening pca_whitening(const Eigen::MatrixXd& sigma,
                              DegeneratePolicy policy = DegeneratePolicy::error);

// Inverse-Cholesky whitening with rows rescaled to sum to 1; the
// post-transform variances are (row sums of L^-1)^-2.
GlobalWhitening cholesky_whitening(const Eigen::MatrixXd& sigma);

}  // namespace spatwhite
