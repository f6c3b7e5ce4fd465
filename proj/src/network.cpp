#include "spatwhite/network.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "spatwhite/errors.hpp"

namespace spatwhite {

namespace {

Eigen::MatrixXd pairwise_distances(const Eigen::Matrix<double, Eigen::Dynamic, 2>& positions) {
    const int n = static_cast<int>(positions.rows());
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double dist = (positions.row(i) - positions.row(j)).norm();
            d(i, j) = dist;
            d(j, i) = dist;
        }
    }
    return d;
}

std::vector<std::vector<int>> collect_neighborhoods(
    const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& mask) {
    const int n = static_cast<int>(mask.rows());
    std::vector<std::vector<int>> hoods(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (mask(i, j)) hoods[i].push_back(j);
        }
    }
    return hoods;
}

}  // namespace

SensorNetwork generate_rgg(int n, std::uint64_t seed) {
    if (n < 2) {
        throw std::invalid_argument("generate_rgg: need at least 2 sensors");
    }
    RngEngine rng(seed);
    Eigen::Matrix<double, Eigen::Dynamic, 2> positions(n, 2);
    for (int i = 0; i < n; ++i) {
        positions(i, 0) = uniform01(rng);
        positions(i, 1) = uniform01(rng);
    }
    SensorNetwork net;
    net.n = n;
    net.positions = positions;
    net.distances = pairwise_distances(positions);
    net.seed = seed;
    return net;
}

SensorNetwork network_from_positions(const Eigen::Matrix<double, Eigen::Dynamic, 2>& positions,
                                     std::uint64_t seed) {
    if (positions.rows() < 1) {
        throw std::invalid_argument("network_from_positions: need at least 1 position");
    }
    SensorNetwork net;
    net.n = static_cast<int>(positions.rows());
    net.positions = positions;
    net.distances = pairwise_distances(positions);
    net.seed = seed;
    return net;
}

SparsityPattern adjacency_pattern(const SensorNetwork& net, double r) {
    if (r < 0.0) {
        throw std::invalid_argument("adjacency_pattern: radius must be nonnegative");
    }
    const int n = net.n;
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            mask(i, j) = (i == j) || (net.distances(i, j) <= r);
        }
    }
    SparsityPattern pattern;
    pattern.n = n;
    pattern.mask = mask;
    pattern.neighborhoods = collect_neighborhoods(mask);
    return pattern;
}

SparsityPattern pattern_from_mask(const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& mask) {
    if (mask.rows() != mask.cols()) {
        throw std::invalid_argument("pattern_from_mask: mask must be square");
    }
    const int n = static_cast<int>(mask.rows());
    for (int i = 0; i < n; ++i) {
        if (!mask(i, i)) {
            throw std::invalid_argument("pattern_from_mask: diagonal must be all true");
        }
        for (int j = 0; j < i; ++j) {
            if (mask(i, j) != mask(j, i)) {
                throw std::invalid_argument("pattern_from_mask: mask must be symmetric");
            }
        }
    }
    SparsityPattern pattern;
    pattern.n = n;
    pattern.mask = mask;
    pattern.neighborhoods = collect_neighborhoods(mask);
    return pattern;
}

SparsityPattern full_pattern(int n) {
    return pattern_from_mask(Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, true));
}

SparsityPattern identity_pattern(int n) {
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask =
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, false);
    mask.diagonal().setConstant(true);
    return pattern_from_mask(mask);
}

CovarianceModel build_covariance(const SensorNetwork& net, const Eigen::VectorXd& sigmas,
                                 double alpha) {
    const int n = net.n;
    if (sigmas.size() != n) {
        throw std::invalid_argument("build_covariance: sigma count does not match network size");
    }
    if ((sigmas.array() <= 0.0).any()) {
        throw std::invalid_argument("build_covariance: standard deviations must be positive");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("build_covariance: alpha must lie in (0, 1)");
    }
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) {
        m(i, i) = sigmas(i) * sigmas(i);
        for (int j = 0; j < i; ++j) {
            const double v = sigmas(i) * sigmas(j) * std::pow(alpha, net.distances(i, j));
            m(i, j) = v;
            m(j, i) = v;
        }
    }
    CovarianceModel model;
    model.sigmas = sigmas;
    model.alpha = alpha;
    model.matrix = m;

    // Should never trip for this model on distinct positions, but the
    // downstream clique solves rely on it.
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 1e-10 * hi)) {
        throw numeric_failure("build_covariance: covariance is not positive definite");
    }
    return model;
}

CovarianceModel covariance_from_matrix(const Eigen::MatrixXd& sigma, double alpha) {
    if (sigma.rows() != sigma.cols()) {
        throw std::invalid_argument("covariance_from_matrix: matrix must be square");
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > 1e-10 * es.eigenvalues().maxCoeff())) {
        throw numeric_failure("covariance_from_matrix: matrix is not positive definite");
    }
    CovarianceModel model;
    model.sigmas = sigma.diagonal().cwiseSqrt();
    model.alpha = alpha;
    model.matrix = sigma;
    return model;
}

Eigen::MatrixXd sample_observations(const CovarianceModel& model, double theta, long count,
                                    std::uint64_t seed, double range_limit) {
    if (!(range_limit > 0.0)) {
        throw std::invalid_argument("sample_observations: range limit must be positive");
    }
    const int n = static_cast<int>(model.matrix.rows());
    const Eigen::LLT<Eigen::MatrixXd> llt(model.matrix);
    if (llt.info() != Eigen::Success) {
        throw numeric_failure("sample_observations: Cholesky factorization failed");
    }
    const Eigen::MatrixXd l = llt.matrixL();

    RngEngine rng(seed);
    Eigen::MatrixXd samples(count, n);
    Eigen::VectorXd z(n);
    const bool clip = std::isfinite(range_limit);
    for (long t = 0; t < count; ++t) {
        for (int i = 0; i < n; ++i) z(i) = standard_normal(rng);
        Eigen::VectorXd x = Eigen::VectorXd::Constant(n, theta) + l * z;
        if (clip) {
            x = x.cwiseMax(-range_limit).cwiseMin(range_limit);
        }
        samples.row(t) = x;
    }
    return samples;
}

}  // namespace spatwhite
