#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "agcml/pipeline.hpp"

namespace agcml::fixture {

/// Default-environment sweep, labeled once per test binary.
inline const std::vector<LabeledConfig>& default_pool() {
    static const std::vector<LabeledConfig> pool = sweep_dataset(SweepSpec::defaults(), Environment{});
    return pool;
}

inline SyntheticSignal signal_of(const WiFiPattern& pattern, std::size_t length, std::uint64_t seed) {
    return synthesize_signal(pattern, default_pool(), length, seed, Environment{});
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("agcml_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace agcml::fixture
