#include "agcml/rxsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace agcml {

double combine_dbm(std::span<const PowerDbm> levels) {
    if (levels.empty()) throw UsageError("combine_dbm: empty level list");
    double linear = 0.0;
    for (const auto& p : levels) {
        if (!p) continue;
        if (!std::isfinite(*p)) throw UsageError("combine_dbm: non-finite level");
        linear += std::pow(10.0, *p / 10.0);
    }
    if (linear <= 0.0) return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(linear);
}

double combine_dbm(std::initializer_list<PowerDbm> levels) {
    return combine_dbm(std::span<const PowerDbm>(levels.begin(), levels.size()));
}

GainTable GainTable::defaults() {
    GainTable t;
    for (int i = 0; i < 8; ++i) {
        t.gains_db.push_back(6.0 * i);
        t.noise_floor_dbm.push_back(-85.0 - 2.0 * i);
    }
    t.sat_threshold_dbm = -8.0;
    return t;
}

double GainTable::gain_db(GainIndex i) const {
    if (!valid_index(i)) throw UsageError("gain index " + std::to_string(i) + " out of range");
    return gains_db[static_cast<std::size_t>(i)];
}

double GainTable::noise_floor(GainIndex i) const {
    if (!valid_index(i)) throw UsageError("gain index " + std::to_string(i) + " out of range");
    return noise_floor_dbm[static_cast<std::size_t>(i)];
}

void GainTable::validate() const {
    if (gains_db.size() < 4) throw UsageError("gain table needs at least 4 indices");
    if (noise_floor_dbm.size() != gains_db.size())
        throw UsageError("gain table: noise_floor_dbm and gains_db differ in length");
    for (std::size_t i = 1; i < gains_db.size(); ++i) {
        if (!(gains_db[i] > gains_db[i - 1]))
            throw UsageError("gain table: gains must be strictly increasing");
        if (noise_floor_dbm[i] > noise_floor_dbm[i - 1])
            throw UsageError("gain table: noise floor must be non-increasing with gain");
    }
    if (!std::isfinite(sat_threshold_dbm)) throw UsageError("gain table: bad sat_threshold_dbm");
}

RejectionCurve::RejectionCurve(std::vector<std::pair<double, double>> points)
    : points_(std::move(points)) {
    if (points_.empty()) throw UsageError("rejection curve: no points");
    if (points_.front().first != 0.0 || points_.front().second != 0.0)
        throw UsageError("rejection curve must start at (0 MHz, 0 dB)");
    for (std::size_t i = 1; i < points_.size(); ++i) {
        if (!(points_[i].first > points_[i - 1].first))
            throw UsageError("rejection curve: offsets must be strictly increasing");
        if (points_[i].second < points_[i - 1].second)
            throw UsageError("rejection curve: rejection must be non-decreasing");
    }
}

double RejectionCurve::at(double offset_mhz) const {
    if (points_.empty()) return 0.0;
    if (offset_mhz <= points_.front().first) return points_.front().second;
    for (std::size_t i = 1; i < points_.size(); ++i) {
        const auto [x1, y1] = points_[i];
        if (offset_mhz <= x1) {
            const auto [x0, y0] = points_[i - 1];
            return y0 + (y1 - y0) * (offset_mhz - x0) / (x1 - x0);
        }
    }
    return points_.back().second;
}

LinkBudget LinkBudget::defaults() {
    LinkBudget b;
    b.rejection = RejectionCurve({{0.0, 0.0}, {2.0, 30.0}, {4.0, 45.0}, {12.0, 58.0},
                                  {22.0, 65.0}, {47.0, 72.0}});
    return b;
}

void LinkBudget::validate() const {
    if (rejection.points().empty()) throw UsageError("link budget: empty rejection curve");
    if (snr_crc_threshold_db < snr_aa_threshold_db - 6.0)
        throw UsageError("link budget: snr_crc_threshold_db must be >= snr_aa_threshold_db - 6");
    if (!(overdrive_margin_db >= 0.0)) throw UsageError("link budget: overdrive_margin_db < 0");
    if (!(distortion_db_per_db > 0.0))
        throw UsageError("link budget: distortion slope must be positive");
    if (!(metric_jitter_db >= 0.0)) throw UsageError("link budget: metric_jitter_db < 0");
}

std::string to_string(Arrival a) {
    switch (a) {
        case Arrival::BeforeFreeze: return "before_freeze";
        case Arrival::AfterFreeze: return "after_freeze";
        case Arrival::Absent: return "absent";
    }
    return "absent";
}

Arrival arrival_from_string(const std::string& s) {
    if (s == "before_freeze") return Arrival::BeforeFreeze;
    if (s == "after_freeze") return Arrival::AfterFreeze;
    if (s == "absent") return Arrival::Absent;
    throw UsageError("unknown arrival '" + s + "'");
}

bool PacketScenario::interferer_in(Phase phase) const {
    switch (arrival) {
        case Arrival::BeforeFreeze: return true;
        case Arrival::AfterFreeze: return phase == Phase::Payload;
        case Arrival::Absent: return false;
    }
    return false;
}

PacketScenario PacketScenario::with_arrival(Arrival a) const {
    PacketScenario s = *this;
    s.arrival = a;
    return s;
}

void PacketScenario::validate() const {
    auto in_range = [](double p) { return p >= -110.0 && p <= 10.0; };
    if (!in_range(wanted_dbm)) throw UsageError("scenario: wanted_dbm outside [-110, 10]");
    if (blocker_dbm && !in_range(*blocker_dbm))
        throw UsageError("scenario: blocker_dbm outside [-110, 10]");
    if (!(offset_mhz >= 0.0)) throw UsageError("scenario: offset_mhz must be >= 0");
    if ((arrival == Arrival::Absent) != !blocker_dbm.has_value())
        throw UsageError("scenario: arrival must be absent exactly when the blocker is absent");
}

PhaseState effective_snr(const PacketScenario& scn, GainIndex gain_index, Phase phase,
                         const LinkBudget& budget, const GainTable& table) {
    const bool blocker = scn.interferer_in(phase) && scn.blocker_dbm.has_value();
    const PowerDbm at_antenna = blocker ? scn.blocker_dbm : std::nullopt;
    const PowerDbm in_band_blocker =
        blocker ? PowerDbm(*scn.blocker_dbm - budget.rejection_db(scn.offset_mhz)) : std::nullopt;

    PhaseState st;
    st.phase = phase;
    st.gain_index = gain_index;
    st.wideband_dbm = combine_dbm({scn.wanted_dbm, at_antenna});
    st.overdrive_db =
        std::max(0.0, st.wideband_dbm + table.gain_db(gain_index) - table.sat_threshold_dbm);
    st.in_band_dbm = combine_dbm({table.noise_floor(gain_index), in_band_blocker});
    st.snr_db = scn.wanted_dbm - st.in_band_dbm - budget.distortion_penalty(st.overdrive_db);
    return st;
}

DetectOutcome detect_outcomes(const PhaseState& preamble, const PhaseState& payload,
                              const LinkBudget& budget) {
    DetectOutcome out;
    out.aa_found = preamble.snr_db >= budget.snr_aa_threshold_db &&
                   preamble.overdrive_db <= budget.overdrive_margin_db;
    if (out.aa_found) {
        out.crc_ok = payload.snr_db >= budget.snr_crc_threshold_db &&
                     payload.overdrive_db <= budget.overdrive_margin_db;
    }
    return out;
}

}  // namespace agcml
