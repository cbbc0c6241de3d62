#pragma once

// Functional-mode replay: packet-by-packet reception with T1/T2/T3 metric
// capture, a sliding history of the last N packets, prediction at T3 and
// PER measurement for the reference and ML-assisted (scenario 4) modes.

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "agcml/mlengine.hpp"

namespace agcml {

class ConfigurationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class RuntimeMode { Reference, Scenario4 };

std::string to_string(RuntimeMode m);
RuntimeMode runtime_mode_from_string(const std::string& s);

enum class CountermeasureAction { None, BlacklistChannel };

struct RuntimeScenario {
    RuntimeMode mode = RuntimeMode::Reference;
    std::optional<int> blacklist_threshold;  // consecutive X predictions; none = no countermeasure
};

CountermeasureAction countermeasure_hook(int consecutive_x, int threshold);

/// Per-packet staging of the metrics captured at T1 (AGC freeze),
/// T2 (mid-payload) and T3 (packet end). Reset at every freeze event.
class CaptureBuffer {
public:
    enum class Stage { Empty, T1, T2, T3 };

    void reset();
    void capture_t1(const ReceptionRecord& rec);
    void capture_t2(const ReceptionRecord& rec);
    MetricsVector capture_t3(const ReceptionRecord& rec);
    Stage stage() const { return stage_; }

private:
    Stage stage_ = Stage::Empty;
    MetricsVector staged_;
};

struct PacketTrace {
    GainIndex warm_up_limit = 0;
    GainIndex native_index = 0;
    GainIndex frozen_index = 0;
    std::optional<int> applied_class;  // prediction used for this packet, if any
    CountermeasureAction action = CountermeasureAction::None;
};

struct RunCounters {
    std::size_t predictions = 0;
    std::size_t buffer_resets = 0;
    std::size_t blacklist_events = 0;
};

struct PerRow {
    std::optional<double> blocker_dbm;
    RuntimeMode mode = RuntimeMode::Reference;
    std::size_t packets_sent = 0;
    std::size_t packets_good = 0;
    double per_percent = 0.0;
    std::size_t repetitions = 1;
    double per_std = 0.0;
    std::size_t blacklist_events = 0;
};

struct RunResult {
    std::vector<ReceptionRecord> records;
    std::vector<PacketTrace> trace;
    PerRow row;
    RunCounters counters;
};

/// Replays the packets in order. Scenario 4 needs a model whose window
/// length matches `window_len`; the reference mode ignores any model.
RunResult run_signal(std::span<const PacketScenario> packets, const TrainedModel* model,
                     const RuntimeScenario& scn, std::size_t window_len, const Environment& env);

std::vector<PacketScenario> scenarios_of(const SyntheticSignal& signal);

struct PerSweepSpec {
    double wanted_dbm = -60.0;
    double offset_mhz = 12.0;
    std::size_t packets = 50;
    std::size_t repetitions = 3;
    std::vector<double> blocker_dbm{-41.0, -35.0, -29.0, -23.0, -17.0, -11.0};
    std::uint64_t seed = 2024;

    void validate() const;
};

/// Continuous (always-on) interferer at `blocker` for one repetition.
std::vector<PacketScenario> continuous_signal(const PerSweepSpec& spec, double blocker, std::size_t rep);

struct PerReport {
    std::vector<PerRow> rows;  // level-major, then mode in the requested order

    const PerRow* find(double blocker_dbm, RuntimeMode mode) const;
};

PerReport per_sweep(const PerSweepSpec& spec, const std::vector<RuntimeScenario>& modes,
                    const TrainedModel* model, std::size_t window_len, const Environment& env);

inline constexpr const char* kPerSchema = "agcml-per/1";

/// One row per level x mode.
void write_per_rows_csv(std::ostream& os, const PerReport& report);
/// blocker_dbm, per_ref, per_s4, per_std_ref, per_std_s4.
void write_per_table_csv(std::ostream& os, const PerReport& report);
/// Two-column "blocker_dbm per_percent" data for one mode.
void write_per_gnuplot(std::ostream& os, const PerReport& report, RuntimeMode mode);

}  // namespace agcml
