#include "spatwhite/whitening.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "spatwhite/errors.hpp"

namespace spatwhite {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Re-factorize the maintained inverse after this many row replacements
// to keep round-off from accumulating.
constexpr int kRefreshInterval = 50;

void check_square(const Eigen::MatrixXd& m, const char* who) {
    if (m.rows() != m.cols()) {
        throw std::invalid_argument(std::string(who) + ": matrix must be square");
    }
}

void check_spd(const Eigen::MatrixXd& m, const char* who) {
    check_square(m, who);
    const double scale = m.cwiseAbs().maxCoeff();
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + scale)) {
        throw std::invalid_argument(std::string(who) + ": matrix is not symmetric");
    }
    if (Eigen::LLT<Eigen::MatrixXd>(m).info() != Eigen::Success) {
        throw std::invalid_argument(std::string(who) + ": matrix is not positive definite");
    }
}

// log |det M| from an LU factorization; -inf when M is singular.
double log_abs_det(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu) {
    double acc = 0.0;
    const auto diag = lu.matrixLU().diagonal();
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
        const double d = std::abs(diag(i));
        if (d == 0.0) return -kInf;
        acc += std::log(d);
    }
    return acc;
}

double log_det_spd(const Eigen::MatrixXd& m) {
    const Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) {
        throw numeric_failure("log_det_spd: Cholesky factorization failed");
    }
    return 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
}

// tr(z sigma z') - 2 log|det z| + c0; +inf for singular z.
double cost_with_constant(const Eigen::MatrixXd& z, const Eigen::MatrixXd& sigma, double c0) {
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(z);
    const double lad = log_abs_det(lu);
    if (!std::isfinite(lad)) return kInf;
    const double trace_term = (z * sigma).cwiseProduct(z).sum();
    return trace_term - 2.0 * lad + c0;
}

// The minimizer of 1/2 v' S v - log(v' c) given an LLT of S.
Eigen::VectorXd row_minimizer(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::VectorXd& c) {
    const Eigen::VectorXd s = llt.solve(c);
    const double quad = c.dot(s);
    if (!(quad > 0.0) || !std::isfinite(quad)) {
        throw numeric_failure("row_update: clique solve produced a non-positive quadratic form");
    }
    return s / std::sqrt(quad);
}

struct RunOutcome {
    bool valid = false;
    std::string failure;
    Eigen::MatrixXd z;
    double divergence = kInf;
    std::vector<double> trace;
    bool converged = false;
};

}  // namespace

WhiteningProblem make_problem(CovarianceModel sigma, SparsityPattern pattern) {
    if (sigma.matrix.rows() != pattern.n) {
        throw std::invalid_argument("make_problem: covariance and pattern dimensions disagree");
    }
    for (int i = 0; i < pattern.n; ++i) {
        if (!pattern.mask(i, i)) {
            throw std::invalid_argument("make_problem: pattern diagonal must be all true");
        }
    }
    return WhiteningProblem{std::move(sigma), std::move(pattern)};
}

double log_det_divergence(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q) {
    if (p.rows() != q.rows() || p.cols() != q.cols()) {
        throw std::invalid_argument("log_det_divergence: dimension mismatch");
    }
    check_spd(p, "log_det_divergence");
    check_spd(q, "log_det_divergence");
    const int n = static_cast<int>(p.rows());
    const Eigen::LLT<Eigen::MatrixXd> llt_q(q);
    const double trace_term = llt_q.solve(p).trace();
    return trace_term - log_det_spd(p) - n + log_det_spd(q);
}

double cost(const Eigen::MatrixXd& z, const Eigen::MatrixXd& sigma) {
    check_square(z, "cost");
    check_square(sigma, "cost");
    const int n = static_cast<int>(z.rows());
    const double c0 = -n - log_det_spd(sigma);
    return cost_with_constant(z, sigma, c0);
}

Eigen::MatrixXd gradient(const Eigen::MatrixXd& z, const Eigen::MatrixXd& sigma,
                         const SparsityPattern& pattern) {
    check_square(z, "gradient");
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(z);
    if (!lu.isInvertible()) {
        throw numeric_failure("gradient: z is singular");
    }
    const Eigen::MatrixXd z_inv_t = lu.inverse().transpose();
    Eigen::MatrixXd g = 2.0 * (z * sigma - z_inv_t);
    for (int i = 0; i < pattern.n; ++i) {
        for (int j = 0; j < pattern.n; ++j) {
            if (!pattern.mask(i, j)) g(i, j) = 0.0;
        }
    }
    return g;
}

Eigen::VectorXd cofactor_vector(const Eigen::MatrixXd& z, const Eigen::MatrixXd& z_inv, int k,
                                const SparsityPattern& pattern) {
    const auto& hood = pattern.neighborhoods.at(k);
    Eigen::VectorXd c(hood.size());
    for (std::size_t i = 0; i < hood.size(); ++i) {
        c(static_cast<Eigen::Index>(i)) = z_inv(hood[i], k);
    }
    const double scale = std::max(1.0, z_inv.cwiseAbs().maxCoeff());
    if (c.norm() < 1e-12 * scale) {
        throw degenerate_row_error("cofactor_vector: cofactor vector of row " + std::to_string(k) +
                                   " is numerically zero");
    }
    // z_k' c = (z z^-1)(k,k) = 1 for a consistent inverse, so the raw
    // column slice already satisfies the sign convention; flip only if
    // drift of the maintained inverse inverted it.
    double dot = 0.0;
    for (std::size_t i = 0; i < hood.size(); ++i) {
        dot += z(k, hood[i]) * c(static_cast<Eigen::Index>(i));
    }
    if (dot < 0.0) c = -c;
    return c;
}

Eigen::VectorXd row_update(const RowSubproblem& sub) {
    if (sub.c_k.size() != sub.sigma_k.rows()) {
        throw std::invalid_argument("row_update: cofactor and clique dimensions disagree");
    }
    if (sub.c_k.norm() == 0.0) {
        throw degenerate_row_error("row_update: zero cofactor vector");
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(sub.sigma_k);
    if (llt.info() != Eigen::Success) {
        throw numeric_failure("row_update: clique covariance is not positive definite");
    }
    return row_minimizer(llt, sub.c_k);
}

Eigen::MatrixXd rank_one_inverse_update(const Eigen::MatrixXd& z_inv, int k,
                                        const Eigen::VectorXd& old_row,
                                        const Eigen::VectorXd& new_row) {
    const Eigen::VectorXd delta = new_row - old_row;
    const Eigen::VectorXd u = z_inv.col(k);         // z^-1 e_k
    const double denom = 1.0 + delta.dot(u);
    if (std::abs(denom) < 1e-12) {
        throw singular_update_error("rank_one_inverse_update: update denominator is near zero");
    }
    const Eigen::RowVectorXd v = delta.transpose() * z_inv;  // delta' z^-1
    return z_inv - (u * v) / denom;
}

Eigen::MatrixXd initialize(const WhiteningProblem& problem, InitStrategy strategy,
                           std::uint64_t seed) {
    const int n = problem.pattern.n;
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        z(k, k) = 1.0 / problem.sigma.sigmas(k);
    }
    if (strategy == InitStrategy::perturbed_diagonal) {
        RngEngine rng(seed);
        for (int k = 0; k < n; ++k) {
            const double amp = 0.1 / problem.sigma.sigmas(k);
            for (int j : problem.pattern.neighborhoods[k]) {
                if (j == k) continue;
                z(k, j) = uniform_in(rng, -amp, amp);
            }
        }
    }
    return z;
}

WhiteningSolution optimize(const WhiteningProblem& problem, const OptimizeOptions& options) {
    if (options.restarts < 1) {
        throw std::invalid_argument("optimize: need at least one restart");
    }
    if (!(options.tol > 0.0)) {
        throw std::invalid_argument("optimize: tolerance must be positive");
    }
    if (options.max_sweeps < 1) {
        throw std::invalid_argument("optimize: need at least one sweep");
    }
    const int n = problem.pattern.n;
    const Eigen::MatrixXd& sigma = problem.sigma.matrix;
    const double c0 = -n - log_det_spd(sigma);

    // Clique factorizations are shared by every sweep and restart.
    std::vector<Eigen::LLT<Eigen::MatrixXd>> clique_llt;
    clique_llt.reserve(n);
    for (int k = 0; k < n; ++k) {
        const auto& hood = problem.pattern.neighborhoods[k];
        Eigen::MatrixXd clique(hood.size(), hood.size());
        for (std::size_t a = 0; a < hood.size(); ++a) {
            for (std::size_t b = 0; b < hood.size(); ++b) {
                clique(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                    sigma(hood[a], hood[b]);
            }
        }
        clique_llt.emplace_back(clique);
        if (clique_llt.back().info() != Eigen::Success) {
            throw numeric_failure("optimize: clique covariance of row " + std::to_string(k) +
                                  " is not positive definite");
        }
    }

    std::vector<RunOutcome> runs;
    runs.reserve(options.restarts);

    for (int r = 0; r < options.restarts; ++r) {
        RunOutcome run;
        Eigen::MatrixXd z =
            (r == 0) ? initialize(problem, InitStrategy::diagonal)
                     : initialize(problem, InitStrategy::perturbed_diagonal,
                                  derive_seed(options.seed, static_cast<std::uint64_t>(r)));
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(z);
        if (!std::isfinite(log_abs_det(lu))) {
            run.failure = "singular starting point";
            runs.push_back(std::move(run));
            continue;
        }
        Eigen::MatrixXd z_inv = lu.inverse();

        double previous = cost_with_constant(z, sigma, c0);
        run.trace.push_back(previous);
        int updates_since_refresh = 0;
        bool dead = false;

        for (int sweep = 0; sweep < options.max_sweeps && !dead; ++sweep) {
            for (int k = 0; k < n && !dead; ++k) {
                Eigen::VectorXd c;
                try {
                    c = cofactor_vector(z, z_inv, k, problem.pattern);
                } catch (const degenerate_row_error& e) {
                    run.failure = e.what();
                    dead = true;
                    break;
                }
                const Eigen::VectorXd v = row_minimizer(clique_llt[k], c);

                const auto& hood = problem.pattern.neighborhoods[k];
                Eigen::VectorXd new_row = Eigen::VectorXd::Zero(n);
                for (std::size_t i = 0; i < hood.size(); ++i) {
                    new_row(hood[i]) = v(static_cast<Eigen::Index>(i));
                }
                const Eigen::VectorXd old_row = z.row(k).transpose();

                bool refreshed = false;
                try {
                    z_inv = rank_one_inverse_update(z_inv, k, old_row, new_row);
                } catch (const singular_update_error&) {
                    refreshed = true;
                }
                z.row(k) = new_row.transpose();
                if (refreshed || ++updates_since_refresh >= kRefreshInterval) {
                    Eigen::PartialPivLU<Eigen::MatrixXd> fresh(z);
                    if (!std::isfinite(log_abs_det(fresh))) {
                        run.failure = "iterate became singular";
                        dead = true;
                        break;
                    }
                    z_inv = fresh.inverse();
                    updates_since_refresh = 0;
                }
            }
            if (dead) break;
            const double current = cost_with_constant(z, sigma, c0);
            run.trace.push_back(current);
            if (previous - current < options.tol) {
                run.converged = true;
                previous = current;
                break;
            }
            previous = current;
        }

        if (!dead) {
            run.valid = true;
            run.z = z;
            run.divergence = previous;
        }
        runs.push_back(std::move(run));
    }

    const RunOutcome* best = nullptr;
    for (const auto& run : runs) {
        if (run.valid && (best == nullptr || run.divergence < best->divergence)) {
            best = &run;
        }
    }
    if (best == nullptr) {
        std::ostringstream msg;
        msg << "optimize: all " << options.restarts << " restarts failed:";
        for (std::size_t r = 0; r < runs.size(); ++r) {
            msg << " [restart " << r << ": " << runs[r].failure << "]";
        }
        throw optimization_failure(msg.str());
    }

    WhiteningSolution solution;
    solution.z = best->z;
    solution.divergence = best->divergence;
    solution.trace = best->trace;
    for (const auto& run : runs) {
        if (!run.trace.empty()) solution.run_traces.push_back(run.trace);
    }
    solution.restarts_used = options.restarts;
    solution.converged = best->converged;
    solution.stationarity = gradient(best->z, sigma, problem.pattern).cwiseAbs().maxCoeff();
    auto [w, d] = extract_wd(best->z);
    solution.w = std::move(w);
    solution.d = std::move(d);
    return solution;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> extract_wd(const Eigen::MatrixXd& z) {
    check_square(z, "extract_wd");
    const int n = static_cast<int>(z.rows());
    const Eigen::VectorXd row_sums = z.rowwise().sum();
    for (int k = 0; k < n; ++k) {
        if (std::abs(row_sums(k)) < 1e-10) {
            throw mean_degenerate_error("extract_wd: row " + std::to_string(k) +
                                        " of z sums to (near) zero");
        }
    }
    const Eigen::MatrixXd w = row_sums.cwiseInverse().asDiagonal() * z;
    const Eigen::VectorXd d = row_sums.array().square().inverse();
    return {w, d};
}

}  // namespace spatwhite
