#pragma once

// Experiment configuration: every module parameter plus the master seed.
// Loaded from a JSON file whose sections mirror the modules; anything left
// out keeps its default.

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "agcml/runtime.hpp"

namespace agcml {

struct SignalSettings {
    WiFiPattern pattern = WiFiPattern::defaults();
    std::size_t length = 2400;
    SynthOptions options;
};

struct SplitSettings {
    std::size_t folds = 5;
    std::size_t repeats = 3;
    double test_fraction = 0.30;
    double validation_fraction = 0.15;  // tail of each train piece used for epoch selection
    std::size_t window_len = 10;
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    Environment env;
    SweepSpec sweep = SweepSpec::defaults();
    SignalSettings signal;
    SplitSettings split;
    TrainHyper train;
    PerSweepSpec per;
    std::optional<int> blacklist_threshold = 3;

    /// Stage seeds are derived from the master seed.
    std::uint64_t stage_seed(std::uint64_t salt) const;
    /// Propagates the master seed into the per-stage structures.
    void apply_seed();
    void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// SHA-256 of the canonical JSON form, hex encoded.
std::string config_hash(const ExperimentConfig& cfg);

std::string sha256_hex(const std::string& data);

inline constexpr const char* kToolVersion = "agcml 1.0.0";

}  // namespace agcml
