#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "spatwhite/network.hpp"
#include "spatwhite/rng.hpp"
#include "spatwhite/whitening.hpp"

// Independent reference implementations the tests check the library
// against: direct minor expansion for cofactors, central differences for
// the gradient, and seeded random problem generators.
namespace testutil {

using spatwhite::RngEngine;

inline Eigen::MatrixXd random_orthogonal(RngEngine& rng, int n) {
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) a(i, j) = spatwhite::standard_normal(rng);
    }
    return Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
}

// SPD with eigenvalues drawn from [0.5, 3].
inline Eigen::MatrixXd random_spd(RngEngine& rng, int n) {
    const Eigen::MatrixXd q = random_orthogonal(rng, n);
    Eigen::VectorXd evals(n);
    for (int i = 0; i < n; ++i) evals(i) = spatwhite::uniform_in(rng, 0.5, 3.0);
    const Eigen::MatrixXd m = q * evals.asDiagonal() * q.transpose();
    return 0.5 * (m + m.transpose());
}

// Symmetric pattern with unit diagonal and off-diagonal density p.
inline spatwhite::SparsityPattern random_pattern(RngEngine& rng, int n, double p) {
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask(n, n);
    mask.setConstant(false);
    for (int i = 0; i < n; ++i) {
        mask(i, i) = true;
        for (int j = i + 1; j < n; ++j) {
            const bool on = spatwhite::uniform01(rng) < p;
            mask(i, j) = on;
            mask(j, i) = on;
        }
    }
    return spatwhite::pattern_from_mask(mask);
}

// Feasible, diagonally dominant, hence safely invertible.
inline Eigen::MatrixXd random_feasible(RngEngine& rng, const spatwhite::SparsityPattern& pattern) {
    const int n = pattern.n;
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        z(i, i) = spatwhite::uniform_in(rng, 0.8, 1.6);
        for (int j : pattern.neighborhoods[i]) {
            if (j != i) z(i, j) = spatwhite::uniform_in(rng, -0.05, 0.05);
        }
    }
    return z;
}

inline double minor_det(const Eigen::MatrixXd& z, int row, int col) {
    const int n = static_cast<int>(z.rows());
    if (n == 1) return 1.0;  // empty minor
    Eigen::MatrixXd m(n - 1, n - 1);
    int ri = 0;
    for (int i = 0; i < n; ++i) {
        if (i == row) continue;
        int ci = 0;
        for (int j = 0; j < n; ++j) {
            if (j == col) continue;
            m(ri, ci++) = z(i, j);
        }
        ++ri;
    }
    return Eigen::FullPivLU<Eigen::MatrixXd>(m).determinant();
}

// Signed-minor cofactors of row k over its neighborhood.
inline Eigen::VectorXd brute_force_cofactors(const Eigen::MatrixXd& z, int k,
                                             const spatwhite::SparsityPattern& pattern) {
    const auto& hood = pattern.neighborhoods[static_cast<std::size_t>(k)];
    Eigen::VectorXd c(static_cast<Eigen::Index>(hood.size()));
    for (std::size_t i = 0; i < hood.size(); ++i) {
        const int j = hood[i];
        const double sign = ((k + j) % 2 == 0) ? 1.0 : -1.0;
        c(static_cast<Eigen::Index>(i)) = sign * minor_det(z, k, j);
    }
    return c;
}

// Central finite differences of the divergence cost over pattern entries.
inline Eigen::MatrixXd fd_gradient(const Eigen::MatrixXd& z, const Eigen::MatrixXd& sigma,
                                   const spatwhite::SparsityPattern& pattern, double h) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(z.rows(), z.cols());
    Eigen::MatrixXd zp = z;
    for (int i = 0; i < pattern.n; ++i) {
        for (int j : pattern.neighborhoods[static_cast<std::size_t>(i)]) {
            zp(i, j) = z(i, j) + h;
            const double up = spatwhite::cost(zp, sigma);
            zp(i, j) = z(i, j) - h;
            const double dn = spatwhite::cost(zp, sigma);
            zp(i, j) = z(i, j);
            g(i, j) = (up - dn) / (2.0 * h);
        }
    }
    return g;
}

}  // namespace testutil
