#include "spatwhite/estimation.hpp"

#include <cmath>
#include <stdexcept>

#include "spatwhite/errors.hpp"

namespace spatwhite {

namespace {

int policy_total(const Eigen::VectorXd& variances, double lambda, ZeroBitPolicy policy) {
    Eigen::VectorXi bits = allocate_bits(variances, lambda);
    if (policy == ZeroBitPolicy::floor_to_one) {
        bits = bits.cwiseMax(1);
    }
    return bits.sum();
}

}  // namespace

Eigen::VectorXi allocate_bits(const Eigen::VectorXd& variances, double lambda) {
    if (!(lambda > 0.0)) {
        throw std::invalid_argument("allocate_bits: lambda must be positive");
    }
    Eigen::VectorXi bits(variances.size());
    for (Eigen::Index k = 0; k < variances.size(); ++k) {
        const double value = std::log2(1.0 + 1.0 / (lambda * variances(k)));
        bits(k) = static_cast<int>(std::max<long long>(0, std::llround(value)));
    }
    return bits;
}

BitAllocation solve_budget(const Eigen::VectorXd& variances, int budget, double range_limit,
                           ZeroBitPolicy policy) {
    if (budget < 0) {
        throw std::invalid_argument("solve_budget: budget must be nonnegative");
    }
    if (!(range_limit > 0.0)) {
        throw std::invalid_argument("solve_budget: range limit must be positive");
    }
    if ((variances.array() <= 0.0).any()) {
        throw std::invalid_argument("solve_budget: variances must be positive");
    }
    const int n = static_cast<int>(variances.size());
    if (policy == ZeroBitPolicy::floor_to_one && budget < n) {
        throw std::invalid_argument(
            "solve_budget: floor_to_one needs at least one bit per sensor");
    }

    // The total is a nonincreasing step function of lambda; bisect on
    // log10(lambda) toward the boundary of {lambda : total <= budget}.
    double lo = -9.0;  // total(10^lo) is the largest reachable
    double hi = 9.0;   // total(10^hi) is the smallest reachable
    if (policy_total(variances, std::pow(10.0, lo), policy) <= budget) {
        hi = lo;  // even the most generous multiplier stays within budget
    } else {
        for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (policy_total(variances, std::pow(10.0, mid), policy) > budget) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }

    BitAllocation alloc;
    alloc.lambda = std::pow(10.0, hi);
    alloc.bits = allocate_bits(variances, alloc.lambda);
    if (policy == ZeroBitPolicy::floor_to_one) {
        alloc.bits = alloc.bits.cwiseMax(1);
    }
    alloc.budget = budget;
    alloc.total = alloc.bits.sum();
    alloc.range_limit = range_limit;
    alloc.active.resize(n);
    for (int k = 0; k < n; ++k) alloc.active[k] = alloc.bits(k) >= 1;
    return alloc;
}

QuantizationNoise quantization_noise(const BitAllocation& alloc) {
    QuantizationNoise noise;
    for (int k = 0; k < alloc.bits.size(); ++k) {
        if (!alloc.active[k]) continue;
        noise.sensors.push_back(k);
    }
    noise.q_diag.resize(static_cast<Eigen::Index>(noise.sensors.size()));
    for (std::size_t i = 0; i < noise.sensors.size(); ++i) {
        const double levels = std::ldexp(1.0, alloc.bits(noise.sensors[i])) - 1.0;
        noise.q_diag(static_cast<Eigen::Index>(i)) =
            (alloc.range_limit * alloc.range_limit) / (levels * levels);
    }
    return noise;
}

double quantize(double x, int bits, double range_limit, RngEngine& rng) {
    if (bits < 1) {
        throw std::invalid_argument("quantize: inactive sensors (0 bits) cannot transmit");
    }
    if (!(range_limit > 0.0)) {
        throw std::invalid_argument("quantize: range limit must be positive");
    }
    if (!(x >= -range_limit && x <= range_limit)) {
        throw std::invalid_argument("quantize: observation outside the quantizer range");
    }
    const double points = std::ldexp(1.0, bits);  // 2^bits grid points
    const double step = 2.0 * range_limit / (points - 1.0);
    double cell = std::floor((x + range_limit) / step);
    if (cell >= points - 1.0) cell = points - 2.0;  // x == +U lands in the top cell
    const double lower = -range_limit + cell * step;
    const double upper = lower + step;
    const double p_lower = (upper - x) / step;
    return uniform01(rng) < p_lower ? lower : upper;
}

double fuse(const Eigen::VectorXd& messages, const Eigen::MatrixXd& c_active) {
    if (messages.size() != c_active.rows()) {
        throw std::invalid_argument("fuse: message and covariance sizes disagree");
    }
    if (messages.size() == 0) {
        throw undefined_estimate_error("fuse: no active sensors");
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(c_active);
    if (llt.info() != Eigen::Success) {
        throw numeric_failure("fuse: fusion covariance is not positive definite");
    }
    const Eigen::VectorXd weights = llt.solve(Eigen::VectorXd::Ones(messages.size()));
    return weights.dot(messages) / weights.sum();
}

double analytic_mse(const Eigen::MatrixXd& c_active, const Eigen::VectorXd& q_diag) {
    if (c_active.rows() == 0) {
        throw undefined_estimate_error("analytic_mse: no active sensors");
    }
    if (q_diag.size() != c_active.rows()) {
        throw std::invalid_argument("analytic_mse: noise diagonal size disagrees with covariance");
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(c_active);
    if (llt.info() != Eigen::Success) {
        throw numeric_failure("analytic_mse: fusion covariance is not positive definite");
    }
    const Eigen::VectorXd y = llt.solve(Eigen::VectorXd::Ones(c_active.rows()));
    const double info = y.sum();  // 1' C^-1 1
    return (info + y.dot(q_diag.asDiagonal() * y)) / (info * info);
}

double crb(const Eigen::MatrixXd& sigma) {
    if (sigma.rows() != sigma.cols() || sigma.rows() == 0) {
        throw std::invalid_argument("crb: matrix must be square and nonempty");
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw numeric_failure("crb: covariance is not positive definite");
    }
    const double info = llt.solve(Eigen::VectorXd::Ones(sigma.rows())).sum();
    if (!(info > 0.0)) {
        throw numeric_failure("crb: nonpositive Fisher information");
    }
    return 1.0 / info;
}

SchemeVariances scheme_variances(const Eigen::MatrixXd& transform, const Eigen::MatrixXd& sigma) {
    SchemeVariances v;
    v.exact = (transform * sigma * transform.transpose()).diagonal();
    v.local_model = v.exact;
    v.max_rel_gap = 0.0;
    return v;
}

SchemeVariances scheme_variances(const WhiteningSolution& solution, const Eigen::MatrixXd& sigma) {
    SchemeVariances v;
    v.exact = (solution.w * sigma * solution.w.transpose()).diagonal();
    v.local_model = solution.d;
    v.max_rel_gap =
        ((v.exact - v.local_model).cwiseAbs().array() / v.exact.array()).maxCoeff();
    return v;
}

Eigen::MatrixXd active_submatrix(const Eigen::MatrixXd& m, const std::vector<int>& sensors) {
    Eigen::MatrixXd sub(sensors.size(), sensors.size());
    for (std::size_t a = 0; a < sensors.size(); ++a) {
        for (std::size_t b = 0; b < sensors.size(); ++b) {
            sub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                m(sensors[a], sensors[b]);
        }
    }
    return sub;
}

Eigen::VectorXd active_subvector(const Eigen::VectorXd& v, const std::vector<int>& sensors) {
    Eigen::VectorXd sub(sensors.size());
    for (std::size_t i = 0; i < sensors.size(); ++i) {
        sub(static_cast<Eigen::Index>(i)) = v(sensors[i]);
    }
    return sub;
}

}  // namespace spatwhite
