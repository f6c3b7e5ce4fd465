#include <cmath>
#include <limits>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "spatwhite/baselines.hpp"
#include "spatwhite/errors.hpp"
#include "spatwhite/whitening.hpp"

using namespace spatwhite;

TEST_CASE("pca on the symmetric 2x2 case: degenerate second component") {
    Eigen::MatrixXd sigma(2, 2);
    sigma << 1.0, 0.5, 0.5, 1.0;  // eigenvalues 1.5 and 0.5

    // [1,-1]/sqrt(2) is orthogonal to the all-ones vector
    CHECK_THROWS_AS(pca_whitening(sigma), degenerate_eigenvector_error);

    const GlobalWhitening gw = pca_whitening(sigma, DegeneratePolicy::drop);
    REQUIRE(gw.transform.rows() == 1);
    CHECK(gw.transform(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(gw.transform(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(gw.variances(0) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(gw.dropped == std::vector<int>{1});
    CHECK(gw.label == BaselineKind::pca);
}

TEST_CASE("pca whitening diagonalizes and preserves the mean") {
    RngEngine rng(101);
    for (int rep = 0; rep < 10; ++rep) {
        const int n = 4 + rep % 4;
        const Eigen::MatrixXd sigma = testutil::random_spd(rng, n);
        const GlobalWhitening gw = pca_whitening(sigma);
        REQUIRE(gw.transform.rows() == n);

        const Eigen::MatrixXd post = gw.transform * sigma * gw.transform.transpose();
        for (int i = 0; i < n; ++i) {
            CHECK(std::abs(gw.transform.row(i).sum() - 1.0) < 1e-10);
            CHECK(std::abs(post(i, i) - gw.variances(i)) < 1e-10);
            for (int j = 0; j < n; ++j) {
                if (i != j) CHECK(std::abs(post(i, j)) < 1e-9);
            }
        }

        // rows follow descending eigenvalues
        double prev = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            const Eigen::VectorXd u = gw.transform.row(i).normalized();
            const double lambda = u.dot(sigma * u);
            CHECK(lambda <= prev + 1e-10);
            prev = lambda;
        }
    }
}

TEST_CASE("pca rejects non-positive-definite input") {
    Eigen::MatrixXd indefinite(2, 2);
    indefinite << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(pca_whitening(indefinite), numeric_failure);
}

TEST_CASE("cholesky whitening on a diagonal covariance is the identity") {
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(2, 2);
    sigma(0, 0) = 4.0;
    sigma(1, 1) = 9.0;
    const GlobalWhitening gw = cholesky_whitening(sigma);
    CHECK((gw.transform - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(gw.variances(0) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(gw.variances(1) == doctest::Approx(9.0).epsilon(1e-14));
    CHECK(gw.label == BaselineKind::cholesky);
    CHECK(gw.dropped.empty());
}

TEST_CASE("cholesky whitening diagonalizes and preserves the mean") {
    RngEngine rng(113);
    for (int rep = 0; rep < 10; ++rep) {
        const int n = 3 + rep % 5;
        const Eigen::MatrixXd sigma = testutil::random_spd(rng, n);
        const GlobalWhitening gw = cholesky_whitening(sigma);

        const Eigen::MatrixXd post = gw.transform * sigma * gw.transform.transpose();
        for (int i = 0; i < n; ++i) {
            CHECK(std::abs(gw.transform.row(i).sum() - 1.0) < 1e-10);
            CHECK(std::abs(post(i, i) - gw.variances(i)) < 1e-9);
            for (int j = 0; j < n; ++j) {
                if (i != j) CHECK(std::abs(post(i, j)) < 1e-9);
            }
        }

        // lower-triangular support survives the row rescaling
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                CHECK(gw.transform(i, j) == 0.0);
            }
        }
    }
}

TEST_CASE("cholesky whitening flags a zero row sum") {
    // L = [[1,0],[1,1]] gives L^-1 = [[1,0],[-1,1]] whose second row sums to 0
    Eigen::MatrixXd sigma(2, 2);
    sigma << 1.0, 1.0, 1.0, 2.0;
    CHECK_THROWS_AS(cholesky_whitening(sigma), degenerate_row_error);
}

TEST_CASE("cholesky rejects non-positive-definite input") {
    Eigen::MatrixXd indefinite(2, 2);
    indefinite << 1.0, 3.0, 3.0, 1.0;
    CHECK_THROWS_AS(cholesky_whitening(indefinite), numeric_failure);
}
