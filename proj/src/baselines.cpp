#include "spatwhite/baselines.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "spatwhite/errors.hpp"

namespace spatwhite {

GlobalWhitening pca_whitening(const Eigen::MatrixXd& sigma, DegeneratePolicy policy) {
    if (sigma.rows() != sigma.cols()) {
        throw std::invalid_argument("pca_whitening: matrix must be square");
    }
    const int n = static_cast<int>(sigma.rows());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
    if (es.info() != Eigen::Success) {
        throw numeric_failure("pca_whitening: eigendecomposition failed");
    }
    if (es.eigenvalues().minCoeff() <= 0.0) {
        throw numeric_failure("pca_whitening: matrix is not positive definite");
    }

    // Descending eigenvalues, signs fixed so u'1 >= 0; keeps the output
    // independent of the linear-algebra backend's conventions.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return es.eigenvalues()(a) > es.eigenvalues()(b); });

    std::vector<int> kept;
    std::vector<int> dropped;  // ranks in the descending eigenvalue order
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const int idx = order[rank];
        const double mean_gain = es.eigenvectors().col(idx).sum();
        if (std::abs(mean_gain) < 1e-10) {
            if (policy == DegeneratePolicy::error) {
                throw degenerate_eigenvector_error(
                    "pca_whitening: eigenvector orthogonal to the all-ones vector "
                    "(eigenvalue " + std::to_string(es.eigenvalues()(idx)) + ")");
            }
            dropped.push_back(static_cast<int>(rank));
        } else {
            kept.push_back(idx);
        }
    }

    GlobalWhitening result;
    result.label = BaselineKind::pca;
    result.transform.resize(static_cast<Eigen::Index>(kept.size()), n);
    result.variances.resize(static_cast<Eigen::Index>(kept.size()));
    for (std::size_t i = 0; i < kept.size(); ++i) {
        Eigen::VectorXd u = es.eigenvectors().col(kept[i]);
        double mean_gain = u.sum();
        if (mean_gain < 0.0) {
            u = -u;
            mean_gain = -mean_gain;
        }
        result.transform.row(static_cast<Eigen::Index>(i)) = u.transpose() / mean_gain;
        result.variances(static_cast<Eigen::Index>(i)) =
            es.eigenvalues()(kept[i]) / (mean_gain * mean_gain);
    }
    result.dropped = std::move(dropped);
    return result;
}

GlobalWhitening cholesky_whitening(const Eigen::MatrixXd& sigma) {
    if (sigma.rows() != sigma.cols()) {
        throw std::invalid_argument("cholesky_whitening: matrix must be square");
    }
    const int n = static_cast<int>(sigma.rows());
    const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw numeric_failure("cholesky_whitening: matrix is not positive definite");
    }
    const Eigen::MatrixXd l_inv =
        Eigen::MatrixXd(llt.matrixL()).triangularView<Eigen::Lower>().solve(
            Eigen::MatrixXd::Identity(n, n));

    const Eigen::VectorXd row_sums = l_inv.rowwise().sum();
    for (int k = 0; k < n; ++k) {
        if (std::abs(row_sums(k)) < 1e-10) {
            throw degenerate_row_error("cholesky_whitening: row " + std::to_string(k) +
                                       " of the inverse factor sums to (near) zero");
        }
    }
    GlobalWhitening result;
    result.label = BaselineKind::cholesky;
    result.transform = row_sums.cwiseInverse().asDiagonal() * l_inv;
    result.variances = row_sums.array().square().inverse();
    return result;
}

}  // namespace spatwhite
