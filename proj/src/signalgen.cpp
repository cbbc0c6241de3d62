#include "agcml/signalgen.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "agcml/seed.hpp"

namespace agcml {

std::string to_string(Band b) {
    switch (b) {
        case Band::High: return "high";
        case Band::Mean: return "mean";
        case Band::Weak: return "weak";
        case Band::Absent: return "absent";
    }
    return "absent";
}

Band band_from_string(const std::string& s) {
    if (s == "high") return Band::High;
    if (s == "mean") return Band::Mean;
    if (s == "weak") return Band::Weak;
    if (s == "absent") return Band::Absent;
    throw UsageError("unknown band '" + s + "'");
}

Band band_of(PowerDbm blocker_dbm) {
    if (!blocker_dbm) return Band::Absent;
    const double p = *blocker_dbm;
    if (p >= -23.0) return Band::High;
    if (p >= -46.0) return Band::Mean;
    if (p >= -71.0) return Band::Weak;
    return Band::Absent;
}

WiFiPattern WiFiPattern::defaults() {
    return WiFiPattern{{{Band::High, 24},
                        {Band::Absent, 30},
                        {Band::Mean, 24},
                        {Band::Weak, 18},
                        {Band::Absent, 24},
                        {Band::High, 18},
                        {Band::Mean, 20}}};
}

void WiFiPattern::validate() const {
    if (runs.empty()) throw UsageError("wifi pattern has no runs");
    for (const auto& [band, len] : runs)
        if (len < 1) throw UsageError("wifi pattern run length must be >= 1");
}

bool WiFiPattern::run_starts_at(std::size_t k) const {
    std::size_t period = 0;
    for (const auto& r : runs) period += static_cast<std::size_t>(r.second);
    std::size_t pos = k % period;
    for (const auto& r : runs) {
        if (pos == 0) return true;
        if (pos < static_cast<std::size_t>(r.second)) return false;
        pos -= static_cast<std::size_t>(r.second);
    }
    return false;
}

Band WiFiPattern::band_at(std::size_t k) const {
    std::size_t period = 0;
    for (const auto& r : runs) period += static_cast<std::size_t>(r.second);
    std::size_t pos = k % period;
    for (const auto& [band, len] : runs) {
        if (pos < static_cast<std::size_t>(len)) return band;
        pos -= static_cast<std::size_t>(len);
    }
    return runs.back().first;
}

SyntheticSignal synthesize_signal(const WiFiPattern& pattern, const std::vector<LabeledConfig>& pool,
                                  std::size_t length, std::uint64_t seed, const Environment& env,
                                  const SynthOptions& opts) {
    pattern.validate();
    if (!(opts.after_freeze_probability >= 0.0 && opts.after_freeze_probability <= 1.0))
        throw UsageError("after_freeze_probability outside [0, 1]");

    std::map<Band, std::vector<const LabeledConfig*>> by_band;
    for (const auto& lc : pool) {
        if (lc.config.wanted_dbm != opts.reference_wanted_dbm) continue;
        if (!opts.offsets_mhz.empty() &&
            std::find(opts.offsets_mhz.begin(), opts.offsets_mhz.end(), lc.config.offset_mhz) ==
                opts.offsets_mhz.end())
            continue;
        by_band[band_of(lc.config.blocker_dbm)].push_back(&lc);
    }
    for (const auto& [band, len] : pattern.runs) {
        if (by_band[band].empty())
            throw CoverageError("no pool configuration for band '" + to_string(band) + "' at " +
                                std::to_string(opts.reference_wanted_dbm) + " dBm wanted");
    }

    SyntheticSignal sig;
    sig.reference_wanted_dbm = opts.reference_wanted_dbm;
    sig.seed = seed;
    sig.pattern = pattern;
    sig.packets.reserve(length);

    std::mt19937_64 rng(derive_seed(seed, {kSaltSynth}));
    std::bernoulli_distribution late(opts.after_freeze_probability);
    const GainIndex top = env.table.max_index();
    const LabeledConfig* current = nullptr;
    for (std::size_t k = 0; k < length; ++k) {
        const Band band = pattern.band_at(k);
        const auto& candidates = by_band[band];
        std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
        const LabeledConfig* drawn = candidates[pick(rng)];
        if (!opts.draw_per_run || pattern.run_starts_at(k) || current == nullptr) current = drawn;
        const LabeledConfig& lc = *current;
        const bool after = late(rng);
        SignalPacket pkt;
        pkt.band = band;
        pkt.config = lc;
        PacketScenario scn =
            lc.config.scenario(after ? Arrival::AfterFreeze : Arrival::BeforeFreeze);
        scn.seed = derive_seed(seed, {kSaltSynth, k});
        // Observed through the same step-limited native AGC the runtime uses.
        const GainIndex native =
            run_preamble_agc(scn, top, env.table, env.budget, env.agc, env.agc.preamble_step_budget);
        pkt.observed = receive_packet(scn, native, native, env.table, env.budget);
        sig.packets.push_back(std::move(pkt));
    }
    return sig;
}

SplitPlan blocked_split(std::size_t signal_len, std::size_t folds, double test_frac,
                        std::uint64_t seed, std::size_t window_len) {
    if (folds < 1) throw UsageError("blocked_split: folds must be >= 1");
    if (!(test_frac > 0.0 && test_frac < 1.0)) throw UsageError("blocked_split: test_frac outside (0, 1)");
    const std::size_t base = signal_len / folds;
    if (base <= window_len + 1)
        throw SizingError("fold length " + std::to_string(base) + " too short for window length " +
                          std::to_string(window_len));

    SplitPlan plan;
    plan.seed = seed;
    const std::size_t extra = signal_len % folds;
    std::size_t begin = 0;
    for (std::size_t f = 0; f < folds; ++f) {
        const std::size_t len = base + (f < extra ? 1 : 0);
        const Run fold{begin, begin + len};
        plan.folds.push_back(fold);

        const auto test_len = static_cast<std::size_t>(std::llround(test_frac * static_cast<double>(len)));
        std::mt19937_64 rng(derive_seed(seed, {kSaltSplit, f}));
        std::uniform_int_distribution<std::size_t> start(0, len - test_len);
        const std::size_t t0 = fold.begin + start(rng);
        const Run test{t0, t0 + test_len};
        if (test.begin > fold.begin) plan.train.push_back({fold.begin, test.begin});
        if (test.size() > 0) plan.test.push_back(test);
        if (test.end < fold.end) plan.train.push_back({test.end, fold.end});
        begin = fold.end;
    }
    return plan;
}

int class_id(std::optional<GainIndex> cls, int gain_count) { return cls ? *cls : gain_count; }

std::optional<GainIndex> class_from_id(int id, int gain_count) {
    if (id < 0 || id > gain_count) throw UsageError("class id " + std::to_string(id) + " out of range");
    if (id == gain_count) return std::nullopt;
    return id;
}

std::vector<double> flatten_features(const std::vector<const MetricsVector*>& packets) {
    std::vector<double> out;
    out.reserve(packets.size() * kMetricCount);
    for (const auto* m : packets) {
        const auto f = m->features();
        out.insert(out.end(), f.begin(), f.end());
    }
    return out;
}

std::vector<WindowSample> make_windows(const SyntheticSignal& signal, const std::vector<Run>& pieces,
                                       std::size_t window_len, int gain_count, WindowStats* stats) {
    if (window_len < 1) throw UsageError("make_windows: window length must be >= 1");
    WindowStats local;
    std::vector<WindowSample> out;
    std::vector<const MetricsVector*> buf;
    for (const Run& run : pieces) {
        if (run.end > signal.size()) throw UsageError("make_windows: run exceeds signal length");
        if (run.size() < window_len + 1) {
            ++local.short_runs;
            continue;
        }
        for (std::size_t s = run.begin; s + window_len < run.end; ++s) {
            const SignalPacket& target = signal.packets[s + window_len];
            if (target.config.excluded) {
                ++local.excluded_labels;
                continue;
            }
            buf.clear();
            for (std::size_t k = s; k < s + window_len; ++k) buf.push_back(&signal.packets[k].observed.metrics);
            WindowSample w;
            w.features = flatten_features(buf);
            w.label = class_id(target.config.agc_optim, gain_count);
            w.window_len = window_len;
            w.first_packet = s;
            out.push_back(std::move(w));
        }
    }
    local.emitted = out.size();
    if (stats) *stats = local;
    return out;
}

std::pair<std::vector<Run>, std::vector<Run>> holdout_tail(const std::vector<Run>& pieces,
                                                           double frac, std::size_t window_len) {
    std::vector<Run> fit, val;
    for (const Run& r : pieces) {
        const auto tail = static_cast<std::size_t>(std::llround(frac * static_cast<double>(r.size())));
        if (tail >= window_len + 1 && r.size() - tail >= window_len + 1) {
            fit.push_back({r.begin, r.end - tail});
            val.push_back({r.end - tail, r.end});
        } else {
            fit.push_back(r);
        }
    }
    return {fit, val};
}

namespace {

std::map<int, std::size_t> balance(const SyntheticSignal& signal, const std::vector<Run>& pieces,
                                   int gain_count) {
    std::map<int, std::size_t> counts;
    for (const Run& r : pieces)
        for (std::size_t k = r.begin; k < r.end; ++k)
            ++counts[class_id(signal.packets[k].config.agc_optim, gain_count)];
    return counts;
}

}  // namespace

std::vector<CrossvalRun> crossval_runs(const SyntheticSignal& signal, std::size_t folds,
                                       std::size_t k_repeats, std::uint64_t seed,
                                       std::size_t window_len, int gain_count, double test_frac) {
    if (k_repeats < 1) throw UsageError("crossval_runs: k_repeats must be >= 1");
    std::vector<CrossvalRun> runs;
    for (std::size_t r = 0; r < k_repeats; ++r) {
        const std::uint64_t s = r == 0 ? seed : derive_seed(seed, {kSaltSplit, r});
        CrossvalRun cv;
        cv.plan = blocked_split(signal.size(), folds, test_frac, s, window_len);
        cv.train_balance = balance(signal, cv.plan.train, gain_count);
        cv.test_balance = balance(signal, cv.plan.test, gain_count);
        runs.push_back(std::move(cv));
    }
    return runs;
}

void write_signal_csv(std::ostream& os, const SyntheticSignal& signal) {
    os << "# schema: " << kSignalSchema << '\n';
    os << "index,band,wanted_dbm,blocker_dbm,offset_mhz,arrival,agc_optim,status,frozen_index";
    for (const auto& n : MetricsVector::names()) os << ',' << n;
    os << '\n';
    const auto prec = os.precision();
    os << std::setprecision(10);
    for (std::size_t k = 0; k < signal.packets.size(); ++k) {
        const SignalPacket& p = signal.packets[k];
        os << k << ',' << to_string(p.band) << ',' << p.config.config.wanted_dbm << ',';
        if (p.config.config.blocker_dbm) os << *p.config.config.blocker_dbm;
        os << ',' << p.config.config.offset_mhz << ',' << to_string(p.observed.scenario.arrival) << ','
           << agc_class_name(p.config.agc_optim) << ',' << to_string(p.observed.status) << ','
           << p.observed.frozen_index;
        for (double f : p.observed.metrics.features()) os << ',' << f;
        os << '\n';
    }
    os.precision(prec);
}

void write_windows_csv(std::ostream& os, const std::vector<WindowSample>& samples) {
    os << "# schema: " << kWindowsSchema << '\n';
    const std::size_t width = samples.empty() ? 0 : samples.front().features.size();
    os << "first_packet,window_len,label";
    for (std::size_t i = 0; i < width; ++i) os << ",f" << i;
    os << '\n';
    const auto prec = os.precision();
    os << std::setprecision(17);
    for (const auto& w : samples) {
        os << w.first_packet << ',' << w.window_len << ',' << w.label;
        for (double f : w.features) os << ',' << f;
        os << '\n';
    }
    os.precision(prec);
}

std::vector<WindowSample> read_windows_csv(std::istream& is) {
    std::vector<WindowSample> out;
    std::string line;
    bool header = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.starts_with("# schema:") && line.find(kWindowsSchema) == std::string::npos)
                throw UsageError("windows file: unsupported schema line '" + line + "'");
            continue;
        }
        if (!header) {
            header = true;
            continue;
        }
        std::istringstream row(line);
        std::string cell;
        WindowSample w;
        std::getline(row, cell, ',');
        w.first_packet = std::stoull(cell);
        std::getline(row, cell, ',');
        w.window_len = std::stoull(cell);
        std::getline(row, cell, ',');
        w.label = std::stoi(cell);
        while (std::getline(row, cell, ',')) w.features.push_back(std::stod(cell));
        out.push_back(std::move(w));
    }
    return out;
}

}  // namespace agcml
