#include "spatwhite/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#ifndef SPATWHITE_VERSION
#define SPATWHITE_VERSION "0.0.0"
#endif

namespace spatwhite {

using nlohmann::json;

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (rows == 0) return Eigen::MatrixXd(0, 0);
    const auto cols = static_cast<Eigen::Index>(j.at(0).size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(i, c) = j.at(i).at(c).get<double>();
        }
    }
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j.at(i).get<double>();
    return v;
}

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open " + path.string());
    }
    json j;
    in >> j;
    return j;
}

void save_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) {
        throw std::invalid_argument("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

}  // namespace

json to_json(const SensorNetwork& net) {
    json positions = json::array();
    for (int i = 0; i < net.n; ++i) {
        positions.push_back({net.positions(i, 0), net.positions(i, 1)});
    }
    return json{{"n", net.n}, {"seed", net.seed}, {"positions", std::move(positions)}};
}

SensorNetwork network_from_json(const json& j) {
    const int n = j.at("n").get<int>();
    Eigen::Matrix<double, Eigen::Dynamic, 2> positions(n, 2);
    const auto& pos = j.at("positions");
    if (static_cast<int>(pos.size()) != n) {
        throw std::invalid_argument("network_from_json: position count disagrees with n");
    }
    for (int i = 0; i < n; ++i) {
        positions(i, 0) = pos.at(i).at(0).get<double>();
        positions(i, 1) = pos.at(i).at(1).get<double>();
    }
    return network_from_positions(positions, j.at("seed").get<std::uint64_t>());
}

json to_json(const CovarianceModel& model) {
    return json{{"alpha", model.alpha}, {"sigmas", vector_to_json(model.sigmas)}};
}

CovarianceModel covariance_from_json(const json& j, const SensorNetwork& net) {
    return build_covariance(net, vector_from_json(j.at("sigmas")), j.at("alpha").get<double>());
}

json to_json(const WhiteningSolution& solution) {
    return json{{"z", matrix_to_json(solution.z)},
                {"w", matrix_to_json(solution.w)},
                {"d", vector_to_json(solution.d)},
                {"divergence", solution.divergence},
                {"trace", solution.trace},
                {"restarts_used", solution.restarts_used},
                {"converged", solution.converged},
                {"stationarity", solution.stationarity}};
}

WhiteningSolution solution_from_json(const json& j) {
    WhiteningSolution solution;
    solution.z = matrix_from_json(j.at("z"));
    solution.w = matrix_from_json(j.at("w"));
    solution.d = vector_from_json(j.at("d"));
    solution.divergence = j.at("divergence").get<double>();
    solution.trace = j.at("trace").get<std::vector<double>>();
    solution.restarts_used = j.at("restarts_used").get<int>();
    solution.converged = j.at("converged").get<bool>();
    solution.stationarity = j.at("stationarity").get<double>();
    return solution;
}

json to_json(const ExperimentConfig& config) {
    return json{{"n", config.n},
                {"seed", config.seed},
                {"sigma_sq_range", {config.sigma_sq_range[0], config.sigma_sq_range[1]}},
                {"alpha", config.alpha},
                {"range_limit", config.range_limit},
                {"radii", config.radii},
                {"budgets", config.budgets},
                {"trials", config.trials},
                {"theta", config.theta},
                {"restarts", config.restarts},
                {"tol", config.tol},
                {"max_sweeps", config.max_sweeps},
                {"schemes", config.schemes},
                {"zero_bit_policy",
                 config.zero_bit_policy == ZeroBitPolicy::drop ? "drop" : "floor_to_one"}};
}

ExperimentConfig config_from_json(const json& j) {
    static const std::set<std::string> known{
        "n",      "seed",     "sigma_sq_range", "alpha",      "range_limit",
        "radii",  "budgets",  "trials",         "theta",      "restarts",
        "tol",    "max_sweeps", "schemes",      "zero_bit_policy"};
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!known.count(key)) {
            throw std::invalid_argument("config: unknown field '" + key + "'");
        }
    }
    ExperimentConfig config;
    if (j.contains("n")) config.n = j.at("n").get<int>();
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("sigma_sq_range")) {
        config.sigma_sq_range[0] = j.at("sigma_sq_range").at(0).get<double>();
        config.sigma_sq_range[1] = j.at("sigma_sq_range").at(1).get<double>();
    }
    if (j.contains("alpha")) config.alpha = j.at("alpha").get<double>();
    if (j.contains("range_limit")) config.range_limit = j.at("range_limit").get<double>();
    if (j.contains("radii")) config.radii = j.at("radii").get<std::vector<double>>();
    if (j.contains("budgets")) config.budgets = j.at("budgets").get<std::vector<int>>();
    if (j.contains("trials")) config.trials = j.at("trials").get<long>();
    if (j.contains("theta")) config.theta = j.at("theta").get<double>();
    if (j.contains("restarts")) config.restarts = j.at("restarts").get<int>();
    if (j.contains("tol")) config.tol = j.at("tol").get<double>();
    if (j.contains("max_sweeps")) config.max_sweeps = j.at("max_sweeps").get<int>();
    if (j.contains("schemes")) config.schemes = j.at("schemes").get<std::vector<std::string>>();
    if (j.contains("zero_bit_policy")) {
        const auto policy = j.at("zero_bit_policy").get<std::string>();
        if (policy == "drop") {
            config.zero_bit_policy = ZeroBitPolicy::drop;
        } else if (policy == "floor_to_one") {
            config.zero_bit_policy = ZeroBitPolicy::floor_to_one;
        } else {
            throw std::invalid_argument("config: unknown zero_bit_policy '" + policy + "'");
        }
    }
    config.validate();
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    try {
        return config_from_json(load_json_file(path));
    } catch (const json::exception& e) {
        throw std::invalid_argument("config: " + path.string() + ": " + e.what());
    }
}

void write_network_artifact(const std::filesystem::path& path, const SensorNetwork& net,
                            const CovarianceModel& model) {
    save_json_file(path, json{{"network", to_json(net)}, {"covariance", to_json(model)}});
}

std::pair<SensorNetwork, CovarianceModel> read_network_artifact(const std::filesystem::path& path) {
    const json j = load_json_file(path);
    SensorNetwork net = network_from_json(j.at("network"));
    CovarianceModel model = covariance_from_json(j.at("covariance"), net);
    return {std::move(net), std::move(model)};
}

void write_solution_artifact(const std::filesystem::path& path, const WhiteningSolution& solution,
                             double radius) {
    json j = to_json(solution);
    j["radius"] = radius;
    save_json_file(path, j);
}

WhiteningSolution read_solution_artifact(const std::filesystem::path& path) {
    return solution_from_json(load_json_file(path));
}

std::string format_double(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    return buf;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
    out << "scheme,B,lambda,bits_total,analytic_mse,mc_mse,mc_halfwidth,crb,divergence\n";
    for (const auto& row : result.rows) {
        out << row.scheme << ',' << row.budget << ',' << format_double(row.lambda) << ','
            << row.bits_total << ',' << format_double(row.analytic_mse) << ','
            << (row.mc_mse ? format_double(*row.mc_mse) : "") << ','
            << (row.mc_halfwidth ? format_double(*row.mc_halfwidth) : "") << ','
            << format_double(row.crb) << ',' << format_double(row.divergence) << '\n';
    }
}

void write_sweep_csv(const std::filesystem::path& path, const SweepResult& result) {
    std::ofstream out(path);
    if (!out) {
        throw std::invalid_argument("cannot write " + path.string());
    }
    write_sweep_csv(out, result);
}

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string config_hash(const ExperimentConfig& config) {
    // nlohmann objects keep keys sorted, so dump() is canonical.
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(to_json(config).dump())));
    return buf;
}

void write_metadata(const std::filesystem::path& path, const ExperimentConfig& config,
                    const std::string& command) {
    json versions{{"spatwhite", SPATWHITE_VERSION},
                  {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION)},
                  {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                        std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                        std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
    save_json_file(path, json{{"command", command},
                              {"config", to_json(config)},
                              {"config_hash", config_hash(config)},
                              {"seed", config.seed},
                              {"versions", std::move(versions)}});
}

}  // namespace spatwhite
