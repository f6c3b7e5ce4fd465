#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "spatwhite/harness.hpp"

namespace spatwhite {

// JSON artifact forms. Every artifact contains enough to re-run the
// experiment stage that produced it.
nlohmann::json to_json(const SensorNetwork& net);
SensorNetwork network_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CovarianceModel& model);
CovarianceModel covariance_from_json(const nlohmann::json& j, const SensorNetwork& net);

nlohmann::json to_json(const WhiteningSolution& solution);
WhiteningSolution solution_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

// Combined network + covariance artifact (the `generate` output).
void write_network_artifact(const std::filesystem::path& path, const SensorNetwork& net,
                            const CovarianceModel& model);
std::pair<SensorNetwork, CovarianceModel> read_network_artifact(const std::filesystem::path& path);

void write_solution_artifact(const std::filesystem::path& path, const WhiteningSolution& solution,
                             double radius);
WhiteningSolution read_solution_artifact(const std::filesystem::path& path);

// CSV with header scheme,B,lambda,bits_total,analytic_mse,mc_mse,mc_halfwidth,crb,divergence.
// Missing Monte Carlo fields are left empty. Formatting is fixed so that
// identical results serialize to identical bytes.
void write_sweep_csv(std::ostream& out, const SweepResult& result);
void write_sweep_csv(const std::filesystem::path& path, const SweepResult& result);

// Sidecar recording the fully resolved config, its hash, and versions.
void write_metadata(const std::filesystem::path& path, const ExperimentConfig& config,
                    const std::string& command);

std::string format_double(double value);        // shortest %.12g form
std::uint64_t fnv1a64(const std::string& data);
std::string config_hash(const ExperimentConfig& config);

}  // namespace spatwhite
