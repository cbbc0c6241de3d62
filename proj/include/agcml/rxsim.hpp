#pragma once

// Two-phase (preamble / payload) scalar power model of a BLE/802.15.4
// receiver front end facing a single interferer.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace agcml {

/// Raised for invalid arguments and violated preconditions at API boundaries.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A power level in dBm; std::nullopt stands for "absent" (zero linear power).
using PowerDbm = std::optional<double>;

/// Power sum in the linear domain: 10*log10(sum 10^(p/10)). Absent terms
/// contribute nothing; an all-absent list yields -infinity.
double combine_dbm(std::span<const PowerDbm> levels);
double combine_dbm(std::initializer_list<PowerDbm> levels);

using GainIndex = int;

struct GainTable {
    std::vector<double> gains_db;         // ascending, one entry per AGC index
    std::vector<double> noise_floor_dbm;  // equivalent input noise per index
    double sat_threshold_dbm = -8.0;      // ADC clip, referred to input + gain

    /// 8 indices, 0..42 dB in 6 dB steps, noise floor -85..-99 dBm.
    static GainTable defaults();

    int size() const { return static_cast<int>(gains_db.size()); }
    GainIndex max_index() const { return size() - 1; }
    bool valid_index(GainIndex i) const { return i >= 0 && i < size(); }
    double gain_db(GainIndex i) const;
    double noise_floor(GainIndex i) const;

    /// Throws UsageError on any broken invariant.
    void validate() const;
};

/// Channel-filter rejection versus carrier offset, piecewise linear and
/// clamped to the last point beyond the table.
class RejectionCurve {
public:
    RejectionCurve() = default;
    explicit RejectionCurve(std::vector<std::pair<double, double>> points);

    double at(double offset_mhz) const;
    const std::vector<std::pair<double, double>>& points() const { return points_; }

private:
    std::vector<std::pair<double, double>> points_;  // (offset MHz, rejection dB)
};

struct LinkBudget {
    RejectionCurve rejection;
    double snr_aa_threshold_db = 8.0;
    double snr_crc_threshold_db = 10.0;
    double overdrive_margin_db = 2.0;
    double distortion_db_per_db = 3.0;  // SNR loss per dB of clip overdrive
    double metric_jitter_db = 0.5;      // reported metrics only

    static LinkBudget defaults();

    double rejection_db(double offset_mhz) const { return rejection.at(offset_mhz); }
    double distortion_penalty(double overdrive_db) const { return distortion_db_per_db * overdrive_db; }
    void validate() const;
};

enum class Arrival { BeforeFreeze, AfterFreeze, Absent };
enum class Phase { Preamble, Payload };

std::string to_string(Arrival a);
Arrival arrival_from_string(const std::string& s);

struct PacketScenario {
    double wanted_dbm = -60.0;
    PowerDbm blocker_dbm;
    double offset_mhz = 0.0;
    Arrival arrival = Arrival::Absent;
    std::uint64_t seed = 0;

    bool interferer_in(Phase phase) const;
    PacketScenario with_arrival(Arrival a) const;
    void validate() const;
};

struct PhaseState {
    Phase phase = Phase::Preamble;
    GainIndex gain_index = 0;
    double in_band_dbm = 0.0;   // post-filter interference plus noise
    double wideband_dbm = 0.0;  // pre-filter total at the antenna
    double snr_db = 0.0;
    double overdrive_db = 0.0;
};

PhaseState effective_snr(const PacketScenario& scn, GainIndex gain_index, Phase phase,
                         const LinkBudget& budget, const GainTable& table);

struct DetectOutcome {
    bool aa_found = false;
    /// "CRC check passed". When no access address was found the CRC engine
    /// never ran and the flag reads as passed (normal idle working).
    bool crc_ok = true;
};

DetectOutcome detect_outcomes(const PhaseState& preamble, const PhaseState& payload,
                              const LinkBudget& budget);

}  // namespace agcml
