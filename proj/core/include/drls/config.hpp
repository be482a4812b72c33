#pragma once

// Scenario configuration: a single JSON document describing the network, the
// estimator and the Monte-Carlo run. Field names are documented in the README.

#include "drls/net_model.hpp"
#include "drls/tuner.hpp"
#include "drls/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace drls {

enum class EstimatorKind { drea, centralized, ekf };

enum class InitialEstimateRule {
    offset,  // x̂₀ = x₀ + scale·(i+1)·δ_i·[1, …, 1]ᵀ, δ_i ~ N(0, 1) once per trial
    exact,   // x̂₀ = x₀
};

struct ScenarioConfig {
    std::string name;
    std::shared_ptr<const NetworkModel> model;
    std::string topology;
    UncertaintySpec uncertainty;
    NoiseMode noise = NoiseMode::stochastic;
    EstimatorKind estimator = EstimatorKind::drea;
    TunerConfig tuner;
    long horizon = 100;
    std::size_t trials = 200;
    std::uint64_t seed = 1;
    std::vector<Vec> initial_states;
    InitialEstimateRule initial_rule = InitialEstimateRule::offset;
    double initial_scale = 0.2;
    std::vector<Mat> initial_prior_cov;  // P̆₀ per node
    nlohmann::json source;               // resolved document the config was built from
};

/// Parses and validates a configuration document. Throws ConfigError with
/// the JSON path of the offending field.
[[nodiscard]] ScenarioConfig parse_config(const nlohmann::json& doc);

/// Loads a JSON file, or a builtin when `path` has the form "builtin:<name>".
[[nodiscard]] ScenarioConfig load_config(const std::string& path);

/// Raw JSON for a builtin scenario; throws ConfigError for unknown names.
[[nodiscard]] nlohmann::json builtin_scenario(std::string_view name);
[[nodiscard]] std::vector<std::string> builtin_names();

/// Coupling table for a named 4-node topology (paper_full, star, ring, chain).
[[nodiscard]] Mat topology_preset(std::string_view name);

[[nodiscard]] std::string_view to_string(EstimatorKind kind);
[[nodiscard]] EstimatorKind estimator_from_string(std::string_view s);

/// 64-bit FNV-1a of the canonical dump of `source`, as 16 hex digits.
[[nodiscard]] std::string config_hash(const ScenarioConfig& config);

}  // namespace drls
