#include "agcml/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>

#include "agcml/seed.hpp"

namespace agcml {

std::string to_string(ReceptionStatus s) {
    switch (s) {
        case ReceptionStatus::NoReception: return "NR";
        case ReceptionStatus::RadioError: return "RE";
        case ReceptionStatus::BadReception: return "BR";
        case ReceptionStatus::GoodReception: return "GR";
    }
    return "NR";
}

ReceptionStatus status_from_string(const std::string& s) {
    if (s == "NR") return ReceptionStatus::NoReception;
    if (s == "RE") return ReceptionStatus::RadioError;
    if (s == "BR") return ReceptionStatus::BadReception;
    if (s == "GR") return ReceptionStatus::GoodReception;
    throw UsageError("unknown reception status '" + s + "'");
}

ReceptionStatus status_of(bool aa_found, bool crc_ok) {
    if (!aa_found) return crc_ok ? ReceptionStatus::NoReception : ReceptionStatus::RadioError;
    return crc_ok ? ReceptionStatus::GoodReception : ReceptionStatus::BadReception;
}

int lqi_from_snr(double snr_db) {
    // -5 dB .. 30 dB spans the full 0..255 range.
    const double scaled = (snr_db + 5.0) * 255.0 / 35.0;
    return static_cast<int>(std::clamp(std::floor(scaled), 0.0, 255.0));
}

std::array<double, kMetricCount> MetricsVector::features() const {
    return {rssi_wb_dbm,
            rssi_nb_dbm.value_or(noise_floor_dbm),
            snr_db.value_or(kSentinelSnrDb),
            lqi ? static_cast<double>(*lqi) : kSentinelLqi,
            crc_flag ? 1.0 : 0.0,
            aa_flag ? 1.0 : 0.0,
            static_cast<double>(frozen_index)};
}

const std::array<std::string, kMetricCount>& MetricsVector::names() {
    static const std::array<std::string, kMetricCount> n{
        "rssi_wb_dbm", "rssi_nb_dbm", "snr_db", "lqi", "crc_flag", "aa_flag", "frozen_index"};
    return n;
}

ReceptionRecord receive_packet(const PacketScenario& scn, GainIndex preamble_index,
                               GainIndex frozen_index, const GainTable& table,
                               const LinkBudget& budget) {
    const PhaseState pre = effective_snr(scn, preamble_index, Phase::Preamble, budget, table);
    const PhaseState pay = effective_snr(scn, frozen_index, Phase::Payload, budget, table);
    const DetectOutcome out = detect_outcomes(pre, pay, budget);

    std::mt19937_64 rng(derive_seed(scn.seed, {kSaltMetrics}));
    std::normal_distribution<double> jitter(0.0, 1.0);
    const double sigma = budget.metric_jitter_db;
    // Always draw the same number of variates so streams stay aligned.
    const double j_wb_pre = sigma * jitter(rng);
    const double j_wb = sigma * jitter(rng);
    const double j_nb = sigma * jitter(rng);
    const double j_snr = sigma * jitter(rng);

    ReceptionRecord rec;
    rec.scenario = scn;
    rec.preamble_index = preamble_index;
    rec.frozen_index = frozen_index;
    rec.status = status_of(out.aa_found, out.crc_ok);
    rec.rssi_wb_preamble_dbm = pre.wideband_dbm + j_wb_pre;

    MetricsVector& m = rec.metrics;
    m.rssi_wb_dbm = pay.wideband_dbm + j_wb;
    m.crc_flag = out.crc_ok;
    m.aa_flag = out.aa_found;
    m.frozen_index = frozen_index;
    m.noise_floor_dbm = table.noise_floor(frozen_index);
    if (out.aa_found) {
        m.rssi_nb_dbm = combine_dbm({scn.wanted_dbm, pay.in_band_dbm}) + j_nb;
        m.snr_db = pay.snr_db + j_snr;
        m.lqi = lqi_from_snr(*m.snr_db);
    }
    return rec;
}

PacketScenario SweepPoint::scenario(Arrival arrival) const {
    PacketScenario s;
    s.wanted_dbm = wanted_dbm;
    s.blocker_dbm = blocker_dbm;
    s.offset_mhz = offset_mhz;
    s.arrival = blocker_dbm ? arrival : Arrival::Absent;
    s.seed = seed;
    return s;
}

void Environment::validate() const {
    table.validate();
    budget.validate();
    agc.validate(table);
}

ReceptionStatus replay_after_forced(const SweepPoint& config, GainIndex forced_index,
                                    const Environment& env) {
    const PacketScenario after = config.scenario(Arrival::AfterFreeze);
    const GainIndex native =
        run_preamble_agc(after, env.table.max_index(), env.table, env.budget, env.agc);
    return receive_packet(after, native, forced_index, env.table, env.budget).status;
}

LabeledConfig label_config(const SweepPoint& config, const Environment& env) {
    const PacketScenario before = config.scenario(Arrival::BeforeFreeze);
    const PacketScenario after = config.scenario(Arrival::AfterFreeze);
    before.validate();

    const GainIndex top = env.table.max_index();
    LabeledConfig lc;
    lc.config = config;
    lc.agc_before = run_preamble_agc(before, top, env.table, env.budget, env.agc);
    lc.agc_after = run_preamble_agc(after, top, env.table, env.budget, env.agc);
    lc.record_before = receive_packet(before, lc.agc_before, lc.agc_before, env.table, env.budget);
    lc.record_after = receive_packet(after, lc.agc_after, lc.agc_after, env.table, env.budget);
    lc.status_before = lc.record_before.status;
    lc.status_after = lc.record_after.status;
    // Native AGC converges on the wanted signal alone, then the frozen index
    // is replaced by the one chosen with the interferer already present.
    lc.status_forced =
        receive_packet(after, lc.agc_after, lc.agc_before, env.table, env.budget).status;

    if (lc.status_after == ReceptionStatus::GoodReception) {
        lc.agc_optim = lc.agc_after;
    } else if (lc.status_forced == ReceptionStatus::GoodReception) {
        lc.agc_optim = lc.agc_before;
    }
    lc.excluded = lc.status_before == ReceptionStatus::RadioError ||
                  lc.status_after == ReceptionStatus::RadioError;
    return lc;
}

FlipReport flip_experiment(const std::vector<LabeledConfig>& configs, const Environment& env) {
    FlipReport rep;
    rep.considered = configs.size();
    for (const auto& lc : configs) {
        if (lc.status_before != ReceptionStatus::GoodReception ||
            lc.status_after != ReceptionStatus::BadReception)
            continue;
        ++rep.qualifying;
        auto& slot = rep.per_offset[lc.config.offset_mhz];
        ++slot.first;
        if (replay_after_forced(lc.config, lc.agc_before, env) == ReceptionStatus::GoodReception) {
            ++rep.flipped;
            ++slot.second;
        }
    }
    if (rep.qualifying > 0)
        rep.fraction = static_cast<double>(rep.flipped) / static_cast<double>(rep.qualifying);
    return rep;
}

SweepSpec SweepSpec::defaults() {
    SweepSpec s;
    s.wanted_dbm = {-70.0, -60.0, -50.0};
    s.blocker_dbm = {std::nullopt, -95.0, -85.0, -78.0, -74.0};
    for (int p = -71; p <= -2; p += 3) s.blocker_dbm.emplace_back(static_cast<double>(p));
    s.blocker_dbm.emplace_back(0.0);
    s.offsets_mhz = {12.0, 18.0, 20.0, 22.0, 37.0, 47.0};
    s.seed = 1;
    return s;
}

void SweepSpec::validate() const {
    if (wanted_dbm.empty()) throw UsageError("sweep axis 'wanted_dbm' is empty");
    if (blocker_dbm.empty()) throw UsageError("sweep axis 'blocker_dbm' is empty");
    if (offsets_mhz.empty()) throw UsageError("sweep axis 'offsets_mhz' is empty");
    for (double o : offsets_mhz)
        if (!(o >= 0.0)) throw UsageError("sweep axis 'offsets_mhz' has a negative offset");
}

std::uint64_t config_seed(std::uint64_t sweep_seed, double wanted, PowerDbm blocker, double offset) {
    return derive_seed(sweep_seed, {kSaltSweep, seed_bits(wanted),
                                    blocker ? seed_bits(*blocker) : 0x61627365ULL,
                                    seed_bits(offset)});
}

std::vector<LabeledConfig> sweep_dataset(const SweepSpec& spec, const Environment& env) {
    spec.validate();
    env.validate();
    std::vector<LabeledConfig> out;
    out.reserve(spec.size());
    for (double w : spec.wanted_dbm) {
        for (const auto& b : spec.blocker_dbm) {
            for (double o : spec.offsets_mhz) {
                SweepPoint p{w, b, o, config_seed(spec.seed, w, b, o)};
                out.push_back(label_config(p, env));
            }
        }
    }
    return out;
}

std::map<double, std::size_t> count_per_offset(const std::vector<LabeledConfig>& configs) {
    std::map<double, std::size_t> counts;
    for (const auto& lc : configs) ++counts[lc.config.offset_mhz];
    return counts;
}

std::string agc_class_name(std::optional<GainIndex> cls) {
    return cls ? std::to_string(*cls) : std::string("X");
}

namespace {

void write_metric(std::ostream& os, const std::optional<double>& v) {
    if (v) os << *v;
    os << ',';
}

void write_record(std::ostream& os, const ReceptionRecord& r) {
    const MetricsVector& m = r.metrics;
    os << m.rssi_wb_dbm << ',';
    write_metric(os, m.rssi_nb_dbm);
    write_metric(os, m.snr_db);
    if (m.lqi) os << *m.lqi;
    os << ',' << (m.crc_flag ? 1 : 0) << ',' << (m.aa_flag ? 1 : 0);
}

}  // namespace

void write_dataset_csv(std::ostream& os, const std::vector<LabeledConfig>& configs) {
    os << "# schema: " << kDatasetSchema << '\n';
    os << "wanted_dbm,blocker_dbm,offset_mhz,seed,agc_before,agc_after,status_before,"
          "status_after,status_forced,agc_optim,excluded,"
          "before_rssi_wb_dbm,before_rssi_nb_dbm,before_snr_db,before_lqi,before_crc,before_aa,"
          "after_rssi_wb_dbm,after_rssi_nb_dbm,after_snr_db,after_lqi,after_crc,after_aa\n";
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << std::setprecision(10);
    for (const auto& lc : configs) {
        os << lc.config.wanted_dbm << ',';
        if (lc.config.blocker_dbm) os << *lc.config.blocker_dbm;
        os << ',' << lc.config.offset_mhz << ',' << lc.config.seed << ',' << lc.agc_before << ','
           << lc.agc_after << ',' << to_string(lc.status_before) << ','
           << to_string(lc.status_after) << ',' << to_string(lc.status_forced) << ','
           << agc_class_name(lc.agc_optim) << ',' << (lc.excluded ? 1 : 0) << ',';
        write_record(os, lc.record_before);
        os << ',';
        write_record(os, lc.record_after);
        os << '\n';
    }
    os.flags(flags);
    os.precision(prec);
}

}  // namespace agcml
