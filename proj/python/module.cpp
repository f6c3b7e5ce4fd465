#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "spatwhite/baselines.hpp"
#include "spatwhite/errors.hpp"
#include "spatwhite/estimation.hpp"
#include "spatwhite/harness.hpp"
#include "spatwhite/network.hpp"
#include "spatwhite/whitening.hpp"

namespace py = pybind11;
using namespace spatwhite;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Adjacency-constrained spatial whitening for quantized distributed estimation";

    // error and all its subclasses surface as spatwhite.Error;
    // std::invalid_argument keeps the builtin ValueError translation.
    py::register_exception<error>(m, "Error");

    py::class_<SensorNetwork>(m, "SensorNetwork")
        .def_readonly("n", &SensorNetwork::n)
        .def_readonly("positions", &SensorNetwork::positions)
        .def_readonly("distances", &SensorNetwork::distances)
        .def_readonly("seed", &SensorNetwork::seed);

    py::class_<SparsityPattern>(m, "SparsityPattern")
        .def_readonly("n", &SparsityPattern::n)
        .def_readonly("mask", &SparsityPattern::mask)
        .def_readonly("neighborhoods", &SparsityPattern::neighborhoods);

    py::class_<CovarianceModel>(m, "CovarianceModel")
        .def_readonly("sigmas", &CovarianceModel::sigmas)
        .def_readonly("alpha", &CovarianceModel::alpha)
        .def_readonly("matrix", &CovarianceModel::matrix);

    py::class_<WhiteningSolution>(m, "WhiteningSolution")
        .def_readonly("z", &WhiteningSolution::z)
        .def_readonly("w", &WhiteningSolution::w)
        .def_readonly("d", &WhiteningSolution::d)
        .def_readonly("divergence", &WhiteningSolution::divergence)
        .def_readonly("trace", &WhiteningSolution::trace)
        .def_readonly("run_traces", &WhiteningSolution::run_traces)
        .def_readonly("restarts_used", &WhiteningSolution::restarts_used)
        .def_readonly("converged", &WhiteningSolution::converged)
        .def_readonly("stationarity", &WhiteningSolution::stationarity);

    py::enum_<BaselineKind>(m, "BaselineKind")
        .value("pca", BaselineKind::pca)
        .value("cholesky", BaselineKind::cholesky);

    py::enum_<DegeneratePolicy>(m, "DegeneratePolicy")
        .value("error", DegeneratePolicy::error)
        .value("drop", DegeneratePolicy::drop);

    py::class_<GlobalWhitening>(m, "GlobalWhitening")
        .def_readonly("transform", &GlobalWhitening::transform)
        .def_readonly("variances", &GlobalWhitening::variances)
        .def_readonly("label", &GlobalWhitening::label)
        .def_readonly("dropped", &GlobalWhitening::dropped);

    py::enum_<ZeroBitPolicy>(m, "ZeroBitPolicy")
        .value("drop", ZeroBitPolicy::drop)
        .value("floor_to_one", ZeroBitPolicy::floor_to_one);

    py::class_<BitAllocation>(m, "BitAllocation")
        .def_readonly("bits", &BitAllocation::bits)
        .def_readonly("lam", &BitAllocation::lambda)
        .def_readonly("budget", &BitAllocation::budget)
        .def_readonly("total", &BitAllocation::total)
        .def_readonly("range_limit", &BitAllocation::range_limit)
        .def_readonly("active", &BitAllocation::active);

    py::class_<QuantizationNoise>(m, "QuantizationNoise")
        .def_readonly("sensors", &QuantizationNoise::sensors)
        .def_readonly("q_diag", &QuantizationNoise::q_diag);

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init<>())
        .def_readwrite("n", &ExperimentConfig::n)
        .def_readwrite("seed", &ExperimentConfig::seed)
        .def_readwrite("sigma_sq_range", &ExperimentConfig::sigma_sq_range)
        .def_readwrite("alpha", &ExperimentConfig::alpha)
        .def_readwrite("range_limit", &ExperimentConfig::range_limit)
        .def_readwrite("radii", &ExperimentConfig::radii)
        .def_readwrite("budgets", &ExperimentConfig::budgets)
        .def_readwrite("trials", &ExperimentConfig::trials)
        .def_readwrite("theta", &ExperimentConfig::theta)
        .def_readwrite("restarts", &ExperimentConfig::restarts)
        .def_readwrite("tol", &ExperimentConfig::tol)
        .def_readwrite("max_sweeps", &ExperimentConfig::max_sweeps)
        .def_readwrite("schemes", &ExperimentConfig::schemes)
        .def_readwrite("zero_bit_policy", &ExperimentConfig::zero_bit_policy)
        .def("resolved_budgets", &ExperimentConfig::resolved_budgets)
        .def("validate", &ExperimentConfig::validate);

    py::class_<SweepRow>(m, "SweepRow")
        .def_readonly("scheme", &SweepRow::scheme)
        .def_readonly("budget", &SweepRow::budget)
        .def_readonly("lam", &SweepRow::lambda)
        .def_readonly("bits_total", &SweepRow::bits_total)
        .def_readonly("analytic_mse", &SweepRow::analytic_mse)
        .def_readonly("mc_mse", &SweepRow::mc_mse)
        .def_readonly("mc_halfwidth", &SweepRow::mc_halfwidth)
        .def_readonly("crb", &SweepRow::crb)
        .def_readonly("divergence", &SweepRow::divergence);

    py::class_<SweepResult>(m, "SweepResult")
        .def_readonly("config", &SweepResult::config)
        .def_readonly("rows", &SweepResult::rows);

    py::class_<MonteCarloResult>(m, "MonteCarloResult")
        .def_readonly("mse", &MonteCarloResult::mse)
        .def_readonly("halfwidth", &MonteCarloResult::halfwidth);

    py::class_<SchemeVariances>(m, "SchemeVariances")
        .def_readonly("exact", &SchemeVariances::exact)
        .def_readonly("local_model", &SchemeVariances::local_model)
        .def_readonly("max_rel_gap", &SchemeVariances::max_rel_gap);

    m.def("generate_rgg", &generate_rgg, py::arg("n"), py::arg("seed"));
    m.def("adjacency_pattern", &adjacency_pattern, py::arg("net"), py::arg("r"));
    m.def("pattern_from_mask", &pattern_from_mask, py::arg("mask"));
    m.def("full_pattern", &full_pattern, py::arg("n"));
    m.def("identity_pattern", &identity_pattern, py::arg("n"));
    m.def("build_covariance", &build_covariance, py::arg("net"), py::arg("sigmas"),
          py::arg("alpha"));
    m.def("covariance_from_matrix", &covariance_from_matrix, py::arg("sigma"),
          py::arg("alpha") = 0.0);
    m.def("sample_observations", &sample_observations, py::arg("model"), py::arg("theta"),
          py::arg("count"), py::arg("seed"), py::arg("range_limit"));

    m.def("log_det_divergence", &log_det_divergence, py::arg("p"), py::arg("q"));
    m.def("cost", &cost, py::arg("z"), py::arg("sigma"));
    m.def("gradient", &gradient, py::arg("z"), py::arg("sigma"), py::arg("pattern"));
    m.def(
        "optimize",
        [](const CovarianceModel& cov, const SparsityPattern& pattern, int restarts, double tol,
           int max_sweeps, std::uint64_t seed) {
            OptimizeOptions options;
            options.restarts = restarts;
            options.tol = tol;
            options.max_sweeps = max_sweeps;
            options.seed = seed;
            return optimize(make_problem(cov, pattern), options);
        },
        py::arg("cov"), py::arg("pattern"), py::arg("restarts") = 4, py::arg("tol") = 1e-8,
        py::arg("max_sweeps") = 500, py::arg("seed") = 0);
    m.def("extract_wd", &extract_wd, py::arg("z"));

    m.def("pca_whitening", &pca_whitening, py::arg("sigma"),
          py::arg("policy") = DegeneratePolicy::error);
    m.def("cholesky_whitening", &cholesky_whitening, py::arg("sigma"));

    m.def("allocate_bits", &allocate_bits, py::arg("variances"), py::arg("lam"));
    m.def("solve_budget", &solve_budget, py::arg("variances"), py::arg("budget"),
          py::arg("range_limit"), py::arg("policy") = ZeroBitPolicy::drop);
    m.def("quantization_noise", &quantization_noise, py::arg("alloc"));
    m.def(
        "quantize",
        [](double x, int bits, double range_limit, std::uint64_t seed) {
            RngEngine rng(seed);
            return quantize(x, bits, range_limit, rng);
        },
        py::arg("x"), py::arg("bits"), py::arg("range_limit"), py::arg("seed"));
    m.def("fuse", &fuse, py::arg("messages"), py::arg("c_active"));
    m.def("analytic_mse", &analytic_mse, py::arg("c_active"), py::arg("q_diag"));
    m.def("crb", &crb, py::arg("sigma"));
    m.def(
        "scheme_variances",
        [](const Eigen::MatrixXd& transform, const Eigen::MatrixXd& sigma) {
            return scheme_variances(transform, sigma);
        },
        py::arg("transform"), py::arg("sigma"));

    m.def("prepare_network", &prepare_network, py::arg("config"));
    m.def(
        "run_experiment",
        [](const ExperimentConfig& config, bool with_monte_carlo) {
            return run_experiment(config, with_monte_carlo);
        },
        py::arg("config"), py::arg("with_monte_carlo") = false);
    m.def("monte_carlo_mse", &monte_carlo_mse, py::arg("transform"), py::arg("model"),
          py::arg("alloc"), py::arg("theta"), py::arg("trials"), py::arg("seed"));
}
