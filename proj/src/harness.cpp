#include "spatwhite/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <stdexcept>
#include <tuple>
#include <utility>

#include "spatwhite/errors.hpp"

namespace spatwhite {

namespace {

// Sub-stream tags under the master seed. Kept in disjoint ranges so the
// sigma draw, each whitening restart family, and each Monte Carlo cell
// get independent streams.
constexpr std::uint64_t kSigmaStream = 0x53474d41ULL;
constexpr std::uint64_t kWhitenStreamBase = 0x5748490000ULL;
constexpr std::uint64_t kMonteCarloStreamBase = 0x4d430000ULL;

std::string radius_label(double r) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "whitened(%g)", r);
    return buf;
}

// Residual non-diagonality of a scheme's post-transform covariance,
// measured the same way the whitening objective measures it.
double residual_divergence(const Eigen::MatrixXd& post_cov) {
    const Eigen::MatrixXd diag = post_cov.diagonal().asDiagonal();
    return log_det_divergence(post_cov, diag);
}

// Rethrows module errors with the scheme/budget cell attached, keeping
// the error category (and thus the CLI exit code) intact.
template <typename Fn>
auto with_context(const std::string& context, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const optimization_failure& e) {
        throw optimization_failure(context + ": " + e.what());
    } catch (const numeric_failure& e) {
        throw numeric_failure(context + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(context + ": " + e.what());
    }
}

}  // namespace

std::vector<int> ExperimentConfig::resolved_budgets() const {
    if (!budgets.empty()) return budgets;
    const double lo = std::max(1, (n + 1) / 2);
    const double hi = 16.0 * n;
    std::vector<int> out;
    for (int i = 0; i <= 8; ++i) {
        const int b = static_cast<int>(std::lround(lo * std::pow(hi / lo, i / 8.0)));
        if (out.empty() || b != out.back()) out.push_back(b);
    }
    return out;
}

void ExperimentConfig::validate() const {
    if (n < 1) throw std::invalid_argument("config: n must be >= 1");
    if (!(sigma_sq_range[0] > 0.0) || !(sigma_sq_range[1] >= sigma_sq_range[0])) {
        throw std::invalid_argument("config: sigma_sq_range must satisfy 0 < lo <= hi");
    }
    if (!(alpha > 0.0) || !(alpha < 1.0)) {
        throw std::invalid_argument("config: alpha must be in (0, 1)");
    }
    if (!(range_limit > 0.0) || !std::isfinite(range_limit)) {
        throw std::invalid_argument("config: range_limit must be positive and finite");
    }
    for (double r : radii) {
        if (!(r >= 0.0)) throw std::invalid_argument("config: radii must be nonnegative");
    }
    {
        std::set<double> seen(radii.begin(), radii.end());
        if (seen.size() != radii.size()) {
            throw std::invalid_argument("config: duplicate radius");
        }
    }
    for (int b : budgets) {
        if (b < 1) throw std::invalid_argument("config: budgets must be >= 1");
    }
    if (trials < 1000) throw std::invalid_argument("config: trials must be >= 1000");
    if (!std::isfinite(theta)) throw std::invalid_argument("config: theta must be finite");
    if (restarts < 1) throw std::invalid_argument("config: restarts must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("config: tol must be positive");
    if (max_sweeps < 1) throw std::invalid_argument("config: max_sweeps must be >= 1");
    if (schemes.empty()) throw std::invalid_argument("config: schemes must not be empty");
    static const std::set<std::string> known{"raw", "whitened", "pca", "cholesky"};
    std::set<std::string> seen;
    for (const auto& s : schemes) {
        if (!known.count(s)) throw std::invalid_argument("config: unknown scheme '" + s + "'");
        if (!seen.insert(s).second) {
            throw std::invalid_argument("config: duplicate scheme '" + s + "'");
        }
    }
    if (seen.count("whitened") && radii.empty()) {
        throw std::invalid_argument("config: whitened scheme requested but radii is empty");
    }
    if (zero_bit_policy == ZeroBitPolicy::floor_to_one) {
        for (int b : resolved_budgets()) {
            if (b < n) {
                throw std::invalid_argument("config: floor_to_one needs every budget >= n");
            }
        }
    }
}

std::pair<SensorNetwork, CovarianceModel> prepare_network(const ExperimentConfig& config) {
    config.validate();
    SensorNetwork net;
    if (config.n == 1) {
        // generate_rgg has no single-sensor case; one sensor sits anywhere.
        Eigen::Matrix<double, Eigen::Dynamic, 2> pos(1, 2);
        pos << 0.5, 0.5;
        net = network_from_positions(pos, config.seed);
    } else {
        net = generate_rgg(config.n, config.seed);
    }

    RngEngine sigma_rng(derive_seed(config.seed, kSigmaStream));
    Eigen::VectorXd sigmas(config.n);
    for (int k = 0; k < config.n; ++k) {
        sigmas(k) =
            std::sqrt(uniform_in(sigma_rng, config.sigma_sq_range[0], config.sigma_sq_range[1]));
    }
    CovarianceModel cov = build_covariance(net, sigmas, config.alpha);
    return {std::move(net), std::move(cov)};
}

ExperimentContext prepare_experiment(const ExperimentConfig& config) {
    ExperimentContext ctx;
    std::tie(ctx.net, ctx.cov) = prepare_network(config);
    ctx.crb_value = crb(ctx.cov.matrix);

    for (const auto& name : config.schemes) {
        if (name == "raw") {
            SchemeInstance s;
            s.label = "raw";
            s.transform = Eigen::MatrixXd::Identity(config.n, config.n);
            s.alloc_variances = ctx.cov.matrix.diagonal();
            s.post_cov = ctx.cov.matrix;
            s.divergence = residual_divergence(s.post_cov);
            ctx.schemes.push_back(std::move(s));
        } else if (name == "whitened") {
            for (std::size_t ri = 0; ri < config.radii.size(); ++ri) {
                const double r = config.radii[ri];
                SchemeInstance s;
                s.label = radius_label(r);
                with_context(s.label, [&] {
                    WhiteningProblem problem =
                        make_problem(ctx.cov, adjacency_pattern(ctx.net, r));
                    OptimizeOptions opts;
                    opts.restarts = config.restarts;
                    opts.tol = config.tol;
                    opts.max_sweeps = config.max_sweeps;
                    opts.seed = derive_seed(config.seed, kWhitenStreamBase + ri);
                    WhiteningSolution solution = optimize(problem, opts);
                    s.transform = solution.w;
                    s.alloc_variances = solution.d;
                    s.post_cov = solution.w * ctx.cov.matrix * solution.w.transpose();
                    s.divergence = solution.divergence;
                    s.solution = std::move(solution);
                });
                ctx.schemes.push_back(std::move(s));
            }
        } else if (name == "pca") {
            SchemeInstance s;
            s.label = "pca";
            with_context(s.label, [&] {
                GlobalWhitening gw = pca_whitening(ctx.cov.matrix);
                s.transform = std::move(gw.transform);
                s.alloc_variances = std::move(gw.variances);
                s.post_cov = s.transform * ctx.cov.matrix * s.transform.transpose();
                s.divergence = residual_divergence(s.post_cov);
            });
            ctx.schemes.push_back(std::move(s));
        } else {
            SchemeInstance s;
            s.label = "cholesky";
            with_context(s.label, [&] {
                GlobalWhitening gw = cholesky_whitening(ctx.cov.matrix);
                s.transform = std::move(gw.transform);
                s.alloc_variances = std::move(gw.variances);
                s.post_cov = s.transform * ctx.cov.matrix * s.transform.transpose();
                s.divergence = residual_divergence(s.post_cov);
            });
            ctx.schemes.push_back(std::move(s));
        }
    }
    return ctx;
}

SweepResult run_experiment(const ExperimentContext& ctx, const ExperimentConfig& config,
                           bool with_monte_carlo) {
    SweepResult result;
    result.config = config;
    result.config.budgets = config.resolved_budgets();
    const auto& budgets = result.config.budgets;

    for (std::size_t si = 0; si < ctx.schemes.size(); ++si) {
        const SchemeInstance& scheme = ctx.schemes[si];
        for (std::size_t bi = 0; bi < budgets.size(); ++bi) {
            const int budget = budgets[bi];
            const std::string cell = scheme.label + " at B=" + std::to_string(budget);
            result.rows.push_back(with_context(cell, [&] {
                SweepRow row;
                row.scheme = scheme.label;
                row.budget = budget;
                const BitAllocation alloc = solve_budget(
                    scheme.alloc_variances, budget, config.range_limit, config.zero_bit_policy);
                row.lambda = alloc.lambda;
                row.bits_total = alloc.total;
                const QuantizationNoise noise = quantization_noise(alloc);
                row.analytic_mse = analytic_mse(active_submatrix(scheme.post_cov, noise.sensors),
                                                noise.q_diag);
                row.crb = ctx.crb_value;
                row.divergence = scheme.divergence;
                if (with_monte_carlo) {
                    const MonteCarloResult mc = monte_carlo_mse(
                        scheme.transform, ctx.cov, alloc, config.theta, config.trials,
                        derive_seed(config.seed,
                                    kMonteCarloStreamBase + si * 0x100 + bi));
                    row.mc_mse = mc.mse;
                    row.mc_halfwidth = mc.halfwidth;
                }
                return row;
            }));
        }
    }
    return result;
}

SweepResult run_experiment(const ExperimentConfig& config, bool with_monte_carlo) {
    return run_experiment(prepare_experiment(config), config, with_monte_carlo);
}

MonteCarloResult monte_carlo_mse(const Eigen::MatrixXd& transform, const CovarianceModel& model,
                                 const std::optional<BitAllocation>& alloc, double theta,
                                 long trials, std::uint64_t seed) {
    if (trials < 1000) {
        throw std::invalid_argument("monte_carlo_mse: trials must be >= 1000");
    }
    if (transform.cols() != model.matrix.rows()) {
        throw std::invalid_argument("monte_carlo_mse: transform/covariance size mismatch");
    }

    std::vector<int> sensors;
    double range = 0.0;
    if (alloc) {
        if (alloc->bits.size() != transform.rows()) {
            throw std::invalid_argument("monte_carlo_mse: allocation/transform size mismatch");
        }
        const QuantizationNoise noise = quantization_noise(*alloc);
        sensors = noise.sensors;
        range = alloc->range_limit;
        if (sensors.empty()) {
            throw undefined_estimate_error("monte_carlo_mse: no active sensors");
        }
    } else {
        sensors.resize(static_cast<std::size_t>(transform.rows()));
        std::iota(sensors.begin(), sensors.end(), 0);
    }

    const auto n = model.matrix.rows();
    const auto m = static_cast<Eigen::Index>(sensors.size());
    Eigen::MatrixXd t_active(m, n);
    for (Eigen::Index i = 0; i < m; ++i) t_active.row(i) = transform.row(sensors[i]);

    const Eigen::MatrixXd c_active = t_active * model.matrix * t_active.transpose();
    Eigen::LLT<Eigen::MatrixXd> fusion_llt(c_active);
    if (fusion_llt.info() != Eigen::Success) {
        throw numeric_failure("monte_carlo_mse: post-transform covariance is not SPD");
    }
    const Eigen::VectorXd y = fusion_llt.solve(Eigen::VectorXd::Ones(m));
    const double info = y.sum();
    if (!(info > 0.0)) {
        throw numeric_failure("monte_carlo_mse: nonpositive fusion information");
    }
    const Eigen::VectorXd weights = y / info;

    Eigen::LLT<Eigen::MatrixXd> sample_llt(model.matrix);
    if (sample_llt.info() != Eigen::Success) {
        throw numeric_failure("monte_carlo_mse: observation covariance is not SPD");
    }
    const Eigen::MatrixXd chol = sample_llt.matrixL();

    // Per-trial streams plus a post-loop reduction keep the result
    // independent of any parallel scheduling of the trial loop.
    std::vector<double> sq_errors(static_cast<std::size_t>(trials));
    Eigen::VectorXd draw(n), x(n), transformed(m), messages(m);
    for (long t = 0; t < trials; ++t) {
        RngEngine rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        for (Eigen::Index i = 0; i < n; ++i) draw(i) = standard_normal(rng);
        x.noalias() = chol * draw;
        x.array() += theta;
        transformed.noalias() = t_active * x;
        if (alloc) {
            for (Eigen::Index i = 0; i < m; ++i) {
                const double clipped = std::clamp(transformed(i), -range, range);
                messages(i) = quantize(clipped, alloc->bits(sensors[i]), range, rng);
            }
        } else {
            messages = transformed;
        }
        const double err = weights.dot(messages) - theta;
        sq_errors[static_cast<std::size_t>(t)] = err * err;
    }

    double mean = 0.0;
    for (double v : sq_errors) mean += v;
    mean /= static_cast<double>(trials);
    double var = 0.0;
    for (double v : sq_errors) var += (v - mean) * (v - mean);
    var /= static_cast<double>(trials - 1);
    return {mean, 1.959963984540054 * std::sqrt(var / static_cast<double>(trials))};
}

}  // namespace spatwhite
