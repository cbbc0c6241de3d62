#pragma once

// Reception status, per-packet metrics, AGC_optim labels from the
// before/after-freeze replay, the forced-index flip experiment and the
// individual-packet dataset sweep.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agcml/agc.hpp"
#include "agcml/rxsim.hpp"

namespace agcml {

enum class ReceptionStatus { NoReception, RadioError, BadReception, GoodReception };

std::string to_string(ReceptionStatus s);
ReceptionStatus status_from_string(const std::string& s);

/// Status table. `crc_ok` means "CRC check passed" (no error flagged):
///   aa=0, pass -> NoReception     aa=0, fail -> RadioError
///   aa=1, pass -> GoodReception   aa=1, fail -> BadReception
ReceptionStatus status_of(bool aa_found, bool crc_ok);

/// Bounded monotone map from SNR to a 0..255 link quality indicator.
int lqi_from_snr(double snr_db);

inline constexpr std::size_t kMetricCount = 7;

/// Sentinels used for packets without an access address.
inline constexpr double kSentinelSnrDb = -30.0;
inline constexpr double kSentinelLqi = 0.0;

struct MetricsVector {
    double rssi_wb_dbm = 0.0;
    std::optional<double> rssi_nb_dbm;  // undefined when nothing was received
    std::optional<double> snr_db;
    std::optional<int> lqi;
    bool crc_flag = true;  // CRC check passed
    bool aa_flag = false;
    GainIndex frozen_index = 0;
    double noise_floor_dbm = 0.0;  // at the frozen index; rssi_nb sentinel

    /// Feature order: rssi_wb, rssi_nb, snr, lqi, crc_flag, aa_flag, frozen_index.
    std::array<double, kMetricCount> features() const;
    static const std::array<std::string, kMetricCount>& names();
};

struct ReceptionRecord {
    PacketScenario scenario;
    GainIndex preamble_index = 0;  // gain seen by the sync detector
    GainIndex frozen_index = 0;    // gain applied to the payload
    ReceptionStatus status = ReceptionStatus::NoReception;
    MetricsVector metrics;
    double rssi_wb_preamble_dbm = 0.0;  // T1 capture, not a model feature
};

/// Simulates one packet with the given preamble and frozen payload gain.
/// Reported metrics carry seeded jitter; the outcome does not.
ReceptionRecord receive_packet(const PacketScenario& scn, GainIndex preamble_index,
                               GainIndex frozen_index, const GainTable& table,
                               const LinkBudget& budget);

struct SweepPoint {
    double wanted_dbm = -60.0;
    PowerDbm blocker_dbm;
    double offset_mhz = 0.0;
    std::uint64_t seed = 0;

    PacketScenario scenario(Arrival arrival) const;
};

struct LabeledConfig {
    SweepPoint config;
    GainIndex agc_before = 0;
    GainIndex agc_after = 0;
    ReceptionStatus status_before = ReceptionStatus::NoReception;
    ReceptionStatus status_after = ReceptionStatus::NoReception;
    ReceptionStatus status_forced = ReceptionStatus::NoReception;  // after-replay at agc_before
    std::optional<GainIndex> agc_optim;  // nullopt is the class X
    bool excluded = false;               // radio error in a replay: never used as a label
    ReceptionRecord record_before;
    ReceptionRecord record_after;
};

struct Environment {
    GainTable table = GainTable::defaults();
    LinkBudget budget = LinkBudget::defaults();
    AgcConfig agc;

    void validate() const;
};

/// Replays the same configuration with the interferer arriving before and
/// after the AGC freeze and derives AGC_optim.
LabeledConfig label_config(const SweepPoint& config, const Environment& env);

/// Payload replay in the after-freeze case with the frozen index forced.
ReceptionStatus replay_after_forced(const SweepPoint& config, GainIndex forced_index,
                                    const Environment& env);

struct FlipReport {
    std::size_t considered = 0;
    std::size_t qualifying = 0;  // good before freeze, bad after
    std::size_t flipped = 0;     // good once forced to agc_before
    std::optional<double> fraction;
    std::map<double, std::pair<std::size_t, std::size_t>> per_offset;  // offset -> (qualifying, flipped)
    static constexpr double kHardwareReference = 0.61;
};

FlipReport flip_experiment(const std::vector<LabeledConfig>& configs, const Environment& env);

struct SweepSpec {
    std::vector<double> wanted_dbm;
    std::vector<PowerDbm> blocker_dbm;  // nullopt entries mean "no interferer"
    std::vector<double> offsets_mhz;
    std::uint64_t seed = 1;

    /// Wanted {-70,-60,-50}; blocker absent, a few sub-threshold levels and
    /// -71..-2 step 3 plus 0 dBm; offsets {12,18,20,22,37,47} MHz.
    static SweepSpec defaults();
    void validate() const;
    std::size_t size() const { return wanted_dbm.size() * blocker_dbm.size() * offsets_mhz.size(); }
};

/// Seed for a configuration depends on its values only, so labeling is
/// independent of sweep order.
std::uint64_t config_seed(std::uint64_t sweep_seed, double wanted, PowerDbm blocker, double offset);

std::vector<LabeledConfig> sweep_dataset(const SweepSpec& spec, const Environment& env);

std::map<double, std::size_t> count_per_offset(const std::vector<LabeledConfig>& configs);

std::string agc_class_name(std::optional<GainIndex> cls);

inline constexpr const char* kDatasetSchema = "agcml-dataset/1";

/// One row per configuration; the schema tag sits in a leading comment line.
void write_dataset_csv(std::ostream& os, const std::vector<LabeledConfig>& configs);

}  // namespace agcml
