#include "agcml/runtime.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <iomanip>
#include <ostream>

#include "agcml/seed.hpp"

namespace agcml {

std::string to_string(RuntimeMode m) {
    return m == RuntimeMode::Reference ? "reference" : "scenario4";
}

RuntimeMode runtime_mode_from_string(const std::string& s) {
    if (s == "reference") return RuntimeMode::Reference;
    if (s == "scenario4") return RuntimeMode::Scenario4;
    throw UsageError("unknown runtime mode '" + s + "'");
}

CountermeasureAction countermeasure_hook(int consecutive_x, int threshold) {
    if (threshold < 1) throw UsageError("countermeasure threshold must be >= 1");
    return consecutive_x >= threshold ? CountermeasureAction::BlacklistChannel
                                      : CountermeasureAction::None;
}

void CaptureBuffer::reset() {
    stage_ = Stage::Empty;
    staged_ = MetricsVector{};
}

void CaptureBuffer::capture_t1(const ReceptionRecord& rec) {
    if (stage_ != Stage::Empty) throw std::logic_error("T1 capture without a reset at freeze");
    staged_.frozen_index = rec.metrics.frozen_index;
    staged_.noise_floor_dbm = rec.metrics.noise_floor_dbm;
    staged_.aa_flag = rec.metrics.aa_flag;
    stage_ = Stage::T1;
}

void CaptureBuffer::capture_t2(const ReceptionRecord& rec) {
    if (stage_ != Stage::T1) throw std::logic_error("T2 capture out of order");
    staged_.rssi_wb_dbm = rec.metrics.rssi_wb_dbm;
    staged_.rssi_nb_dbm = rec.metrics.rssi_nb_dbm;
    staged_.snr_db = rec.metrics.snr_db;
    stage_ = Stage::T2;
}

MetricsVector CaptureBuffer::capture_t3(const ReceptionRecord& rec) {
    if (stage_ != Stage::T2) throw std::logic_error("T3 capture out of order");
    staged_.crc_flag = rec.metrics.crc_flag;
    staged_.lqi = rec.metrics.lqi;
    stage_ = Stage::T3;
    return staged_;
}

namespace {

void check_model(const TrainedModel& model, std::size_t window_len, const Environment& env) {
    if (model.meta.window_len != window_len)
        throw ConfigurationError("model window length " + std::to_string(model.meta.window_len) +
                                 " does not match runtime buffer length " + std::to_string(window_len));
    if (model.meta.metrics_per_packet != kMetricCount || model.n_features != window_len * kMetricCount)
        throw ConfigurationError("model metric schema does not match the runtime metrics");
    if (model.gain_count() != env.table.size())
        throw ConfigurationError("model class map has " + std::to_string(model.gain_count()) +
                                 " gain classes, gain table has " + std::to_string(env.table.size()));
}

}  // namespace

RunResult run_signal(std::span<const PacketScenario> packets, const TrainedModel* model,
                     const RuntimeScenario& scn, std::size_t window_len, const Environment& env) {
    if (window_len < 1) throw UsageError("run_signal: window length must be >= 1");
    const bool assisted = scn.mode == RuntimeMode::Scenario4;
    if (assisted) {
        if (!model) throw ConfigurationError("scenario4 requires a trained model");
        check_model(*model, window_len, env);
    }
    if (scn.blacklist_threshold && *scn.blacklist_threshold < 1)
        throw UsageError("countermeasure threshold must be >= 1");

    const int gains = env.table.size();
    const GainIndex top = env.table.max_index();
    RunResult res;
    res.records.reserve(packets.size());
    res.trace.reserve(packets.size());

    CaptureBuffer capture;
    std::deque<MetricsVector> history;
    std::optional<int> pending;  // class predicted at the previous T3
    int consecutive_x = 0;

    for (const PacketScenario& pkt : packets) {
        PacketTrace tr;
        std::optional<GainIndex> predicted_gain;
        if (assisted && pending) {
            tr.applied_class = pending;
            predicted_gain = class_from_id(*pending, gains);
        }
        // Warm-up: the prediction is the upper limit and initial index.
        tr.warm_up_limit = predicted_gain ? std::clamp(*predicted_gain, 0, top) : top;
        tr.native_index = run_preamble_agc(pkt, tr.warm_up_limit, env.table, env.budget, env.agc,
                                           env.agc.preamble_step_budget);
        capture.reset();
        ++res.counters.buffer_resets;
        tr.frozen_index = predicted_gain ? std::clamp(*predicted_gain, 0, top) : tr.native_index;

        ReceptionRecord rec = receive_packet(pkt, tr.native_index, tr.frozen_index, env.table, env.budget);
        capture.capture_t1(rec);
        capture.capture_t2(rec);
        history.push_back(capture.capture_t3(rec));
        if (history.size() > window_len) history.pop_front();

        pending.reset();
        if (assisted && history.size() == window_len) {
            std::vector<const MetricsVector*> ptrs;
            for (const auto& m : history) ptrs.push_back(&m);
            const auto feats = flatten_features(ptrs);
            pending = predict(*model, std::span<const double>(feats)).class_id;
            ++res.counters.predictions;
            if (*pending == gains) {
                ++consecutive_x;
                if (scn.blacklist_threshold &&
                    countermeasure_hook(consecutive_x, *scn.blacklist_threshold) ==
                        CountermeasureAction::BlacklistChannel) {
                    tr.action = CountermeasureAction::BlacklistChannel;
                    ++res.counters.blacklist_events;
                }
            } else {
                consecutive_x = 0;
            }
        }
        res.records.push_back(std::move(rec));
        res.trace.push_back(tr);
    }

    PerRow& row = res.row;
    row.mode = scn.mode;
    row.packets_sent = packets.size();
    row.packets_good = static_cast<std::size_t>(
        std::count_if(res.records.begin(), res.records.end(), [](const ReceptionRecord& r) {
            return r.status == ReceptionStatus::GoodReception;
        }));
    row.per_percent = packets.empty() ? 0.0
                                      : 100.0 * (1.0 - static_cast<double>(row.packets_good) /
                                                           static_cast<double>(row.packets_sent));
    row.blacklist_events = res.counters.blacklist_events;
    if (!packets.empty()) row.blocker_dbm = packets.front().blocker_dbm;
    return res;
}

std::vector<PacketScenario> scenarios_of(const SyntheticSignal& signal) {
    std::vector<PacketScenario> out;
    out.reserve(signal.size());
    for (const auto& p : signal.packets) out.push_back(p.observed.scenario);
    return out;
}

void PerSweepSpec::validate() const {
    if (repetitions < 1) throw UsageError("per sweep: repetitions must be >= 1");
    if (packets < 1) throw UsageError("per sweep: packets must be >= 1");
    if (blocker_dbm.empty()) throw UsageError("per sweep: no blocker levels");
}

std::vector<PacketScenario> continuous_signal(const PerSweepSpec& spec, double blocker, std::size_t rep) {
    std::vector<PacketScenario> out;
    out.reserve(spec.packets);
    for (std::size_t k = 0; k < spec.packets; ++k) {
        PacketScenario s;
        s.wanted_dbm = spec.wanted_dbm;
        s.blocker_dbm = blocker;
        s.offset_mhz = spec.offset_mhz;
        s.arrival = Arrival::BeforeFreeze;  // always on: present at every freeze
        s.seed = derive_seed(spec.seed, {kSaltPer, seed_bits(blocker), rep, k});
        s.validate();
        out.push_back(s);
    }
    return out;
}

const PerRow* PerReport::find(double blocker_dbm, RuntimeMode mode) const {
    for (const auto& r : rows)
        if (r.mode == mode && r.blocker_dbm && *r.blocker_dbm == blocker_dbm) return &r;
    return nullptr;
}

PerReport per_sweep(const PerSweepSpec& spec, const std::vector<RuntimeScenario>& modes,
                    const TrainedModel* model, std::size_t window_len, const Environment& env) {
    spec.validate();
    env.validate();
    if (modes.empty()) throw UsageError("per sweep: no runtime modes");

    // Every (level, mode, repetition) cell is independent; results are
    // merged in a fixed order.
    std::vector<std::future<PerRow>> cells;
    for (double level : spec.blocker_dbm)
        for (const auto& mode : modes)
            for (std::size_t rep = 0; rep < spec.repetitions; ++rep)
                cells.push_back(std::async(std::launch::async, [&, level, mode, rep] {
                    const auto sig = continuous_signal(spec, level, rep);
                    return run_signal(sig, model, mode, window_len, env).row;
                }));

    PerReport report;
    std::size_t next = 0;
    for (double level : spec.blocker_dbm) {
        for (const auto& mode : modes) {
            PerRow agg;
            agg.blocker_dbm = level;
            agg.mode = mode.mode;
            agg.repetitions = spec.repetitions;
            std::vector<double> pers;
            for (std::size_t rep = 0; rep < spec.repetitions; ++rep) {
                const PerRow r = cells[next++].get();
                agg.packets_sent += r.packets_sent;
                agg.packets_good += r.packets_good;
                agg.blacklist_events += r.blacklist_events;
                pers.push_back(r.per_percent);
            }
            double mean = 0.0;
            for (double p : pers) mean += p;
            mean /= static_cast<double>(pers.size());
            double var = 0.0;
            for (double p : pers) var += (p - mean) * (p - mean);
            agg.per_percent = mean;
            agg.per_std = pers.size() > 1 ? std::sqrt(var / static_cast<double>(pers.size() - 1)) : 0.0;
            report.rows.push_back(agg);
        }
    }
    return report;
}

void write_per_rows_csv(std::ostream& os, const PerReport& report) {
    os << "# schema: " << kPerSchema << '\n';
    os << "blocker_dbm,mode,packets_sent,packets_good,per_percent,repetitions,per_std,blacklist_events\n";
    const auto prec = os.precision();
    os << std::setprecision(10);
    for (const auto& r : report.rows) {
        if (r.blocker_dbm) os << *r.blocker_dbm;
        os << ',' << to_string(r.mode) << ',' << r.packets_sent << ',' << r.packets_good << ','
           << r.per_percent << ',' << r.repetitions << ',' << r.per_std << ',' << r.blacklist_events << '\n';
    }
    os.precision(prec);
}

void write_per_table_csv(std::ostream& os, const PerReport& report) {
    os << "blocker_dbm,per_ref,per_s4,per_std_ref,per_std_s4\n";
    const auto prec = os.precision();
    os << std::setprecision(10);
    std::vector<double> levels;
    for (const auto& r : report.rows)
        if (r.blocker_dbm && std::find(levels.begin(), levels.end(), *r.blocker_dbm) == levels.end())
            levels.push_back(*r.blocker_dbm);
    for (double level : levels) {
        const PerRow* ref = report.find(level, RuntimeMode::Reference);
        const PerRow* s4 = report.find(level, RuntimeMode::Scenario4);
        os << level << ',';
        if (ref) os << ref->per_percent;
        os << ',';
        if (s4) os << s4->per_percent;
        os << ',';
        if (ref) os << ref->per_std;
        os << ',';
        if (s4) os << s4->per_std;
        os << '\n';
    }
    os.precision(prec);
}

void write_per_gnuplot(std::ostream& os, const PerReport& report, RuntimeMode mode) {
    os << "# " << to_string(mode) << ": blocker_dbm per_percent\n";
    const auto prec = os.precision();
    os << std::setprecision(10);
    for (const auto& r : report.rows)
        if (r.mode == mode && r.blocker_dbm) os << *r.blocker_dbm << ' ' << r.per_percent << '\n';
    os.precision(prec);
}

}  // namespace agcml
