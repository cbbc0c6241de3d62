#pragma once

// Synthetic signal structures following Wi-Fi burst patterns, blocked
// train/test splitting and sliding-window sample assembly.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "agcml/labeling.hpp"

namespace agcml {

/// Raised when a pattern band has no matching configuration in the pool.
class CoverageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when the signal is too short for the requested folds/window.
class SizingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Band { High, Mean, Weak, Absent };

std::string to_string(Band b);
Band band_from_string(const std::string& s);

/// Interferer power to band:
///   High   [-23, +inf)      Mean [-46, -23)
///   Weak   [-71, -46)       Absent < -71 dBm or no interferer
Band band_of(PowerDbm blocker_dbm);

struct WiFiPattern {
    std::vector<std::pair<Band, int>> runs;  // (band, packet count), repeated cyclically

    static WiFiPattern defaults();
    void validate() const;
    /// Band of the k-th packet of a signal following this pattern.
    Band band_at(std::size_t k) const;
    /// True when packet k opens a run (k = 0 included).
    bool run_starts_at(std::size_t k) const;
};

struct SignalPacket {
    Band band = Band::Absent;
    LabeledConfig config;      // labels (AGC_optim) for this configuration
    ReceptionRecord observed;  // native reception as it happened in the signal
};

struct SynthOptions {
    double reference_wanted_dbm = -60.0;
    double after_freeze_probability = 0.5;  // chance a burst starts after the freeze
    std::vector<double> offsets_mhz;        // pool filter; empty keeps all offsets
    /// One configuration per band run (a single Wi-Fi source per burst)
    /// instead of a fresh draw for every packet.
    bool draw_per_run = true;
};

struct SyntheticSignal {
    double reference_wanted_dbm = -60.0;
    std::uint64_t seed = 0;
    WiFiPattern pattern;
    std::vector<SignalPacket> packets;

    std::size_t size() const { return packets.size(); }
};

SyntheticSignal synthesize_signal(const WiFiPattern& pattern, const std::vector<LabeledConfig>& pool,
                                  std::size_t length, std::uint64_t seed, const Environment& env,
                                  const SynthOptions& opts = {});

/// Half-open packet index range [begin, end).
struct Run {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
    bool contains(std::size_t i) const { return i >= begin && i < end; }
    bool operator==(const Run&) const = default;
};

struct SplitPlan {
    std::vector<Run> folds;
    std::vector<Run> train;  // contiguous pieces, fold order
    std::vector<Run> test;
    std::uint64_t seed = 0;
};

/// Cuts the signal into `folds` contiguous folds and takes one contiguous
/// stretch of round(test_frac * fold_len) packets per fold for testing.
SplitPlan blocked_split(std::size_t signal_len, std::size_t folds, double test_frac,
                        std::uint64_t seed, std::size_t window_len);

/// Class id of an AGC_optim label: gain index, or G for X.
int class_id(std::optional<GainIndex> cls, int gain_count);
std::optional<GainIndex> class_from_id(int id, int gain_count);

struct WindowSample {
    std::vector<double> features;  // window_len x kMetricCount, packet-major
    int label = 0;                 // class id of packet window_len + 1
    std::size_t window_len = 0;
    std::size_t first_packet = 0;  // signal index of the first feature packet
};

struct WindowStats {
    std::size_t emitted = 0;
    std::size_t short_runs = 0;       // runs that contributed nothing
    std::size_t excluded_labels = 0;  // label packet had a radio error
};

/// Flattened raw features (sentinels applied) of the records, packet-major.
std::vector<double> flatten_features(const std::vector<const MetricsVector*>& packets);

std::vector<WindowSample> make_windows(const SyntheticSignal& signal, const std::vector<Run>& pieces,
                                       std::size_t window_len, int gain_count,
                                       WindowStats* stats = nullptr);

/// Splits each train piece into a fit head and a validation tail.
std::pair<std::vector<Run>, std::vector<Run>> holdout_tail(const std::vector<Run>& pieces,
                                                           double frac, std::size_t window_len);

struct CrossvalRun {
    SplitPlan plan;
    std::map<int, std::size_t> train_balance;  // class id -> count of labelled packets
    std::map<int, std::size_t> test_balance;
};

std::vector<CrossvalRun> crossval_runs(const SyntheticSignal& signal, std::size_t folds,
                                       std::size_t k_repeats, std::uint64_t seed,
                                       std::size_t window_len, int gain_count,
                                       double test_frac = 0.30);

inline constexpr const char* kSignalSchema = "agcml-signal/1";
inline constexpr const char* kWindowsSchema = "agcml-windows/1";

void write_signal_csv(std::ostream& os, const SyntheticSignal& signal);
void write_windows_csv(std::ostream& os, const std::vector<WindowSample>& samples);
std::vector<WindowSample> read_windows_csv(std::istream& is);

}  // namespace agcml
