#include "agcml/config.hpp"

#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "agcml/seed.hpp"

namespace agcml {

using nlohmann::json;

std::uint64_t ExperimentConfig::stage_seed(std::uint64_t salt) const { return derive_seed(seed, {salt}); }

void ExperimentConfig::apply_seed() {
    sweep.seed = stage_seed(kSaltSweep);
    train.seed = stage_seed(kSaltTrain);
    per.seed = stage_seed(kSaltPer);
}

void ExperimentConfig::validate() const {
    env.validate();
    sweep.validate();
    signal.pattern.validate();
    if (signal.length < 1) throw UsageError("signal.length must be >= 1");
    if (split.folds < 1) throw UsageError("split.folds must be >= 1");
    if (split.repeats < 1) throw UsageError("split.repeats must be >= 1");
    if (split.window_len < 1) throw UsageError("split.window_len must be >= 1");
    if (!(split.test_fraction > 0.0 && split.test_fraction < 1.0))
        throw UsageError("split.test_fraction outside (0, 1)");
    if (!(split.validation_fraction >= 0.0 && split.validation_fraction < 1.0))
        throw UsageError("split.validation_fraction outside [0, 1)");
    per.validate();
    if (blacklist_threshold && *blacklist_threshold < 1)
        throw UsageError("runtime.blacklist_threshold must be >= 1");
}

namespace {

json power_to_json(const PowerDbm& p) { return p ? json(*p) : json(nullptr); }

void check_keys(const json& j, const std::string& section, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw UsageError("config section '" + section + "' must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items())
        if (!ok.count(key)) throw UsageError("config: unknown key '" + section + "." + key + "'");
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

json to_json(const ExperimentConfig& cfg) {
    json rej = json::array();
    for (const auto& [o, r] : cfg.env.budget.rejection.points()) rej.push_back({o, r});
    json blockers = json::array();
    for (const auto& b : cfg.sweep.blocker_dbm) blockers.push_back(power_to_json(b));
    json pattern = json::array();
    for (const auto& [band, len] : cfg.signal.pattern.runs) pattern.push_back({to_string(band), len});

    json j;
    j["seed"] = cfg.seed;
    j["gain_table"] = {{"gains_db", cfg.env.table.gains_db},
                       {"noise_floor_dbm", cfg.env.table.noise_floor_dbm},
                       {"sat_threshold_dbm", cfg.env.table.sat_threshold_dbm}};
    j["link_budget"] = {{"rejection_db", rej},
                        {"snr_aa_threshold_db", cfg.env.budget.snr_aa_threshold_db},
                        {"snr_crc_threshold_db", cfg.env.budget.snr_crc_threshold_db},
                        {"overdrive_margin_db", cfg.env.budget.overdrive_margin_db},
                        {"distortion_db_per_db", cfg.env.budget.distortion_db_per_db},
                        {"metric_jitter_db", cfg.env.budget.metric_jitter_db}};
    j["agc"] = {{"window_low_dbm", cfg.env.agc.window_low_dbm},
                {"window_high_dbm", cfg.env.agc.window_high_dbm},
                {"preamble_step_budget", cfg.env.agc.preamble_step_budget}};
    j["sweep"] = {{"wanted_dbm", cfg.sweep.wanted_dbm},
                  {"blocker_dbm", blockers},
                  {"offsets_mhz", cfg.sweep.offsets_mhz}};
    j["signal"] = {{"pattern", pattern},
                   {"length", cfg.signal.length},
                   {"reference_wanted_dbm", cfg.signal.options.reference_wanted_dbm},
                   {"after_freeze_probability", cfg.signal.options.after_freeze_probability},
                   {"offsets_mhz", cfg.signal.options.offsets_mhz},
                   {"draw_per_run", cfg.signal.options.draw_per_run}};
    j["split"] = {{"folds", cfg.split.folds},
                  {"repeats", cfg.split.repeats},
                  {"test_fraction", cfg.split.test_fraction},
                  {"validation_fraction", cfg.split.validation_fraction},
                  {"window_len", cfg.split.window_len}};
    j["train"] = {{"lr", cfg.train.lr},
                  {"epochs", cfg.train.epochs},
                  {"l2", cfg.train.l2},
                  {"init_scale", cfg.train.init_scale},
                  {"class_weights", cfg.train.class_weights}};
    j["runtime"] = {{"blacklist_threshold", cfg.blacklist_threshold ? json(*cfg.blacklist_threshold) : json(nullptr)},
                    {"wanted_dbm", cfg.per.wanted_dbm},
                    {"offset_mhz", cfg.per.offset_mhz},
                    {"packets", cfg.per.packets},
                    {"repetitions", cfg.per.repetitions},
                    {"blocker_dbm", cfg.per.blocker_dbm}};
    return j;
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig cfg;
    try {
        check_keys(j, "<root>", {"seed", "gain_table", "link_budget", "agc", "sweep", "signal", "split", "train", "runtime"});
        read_if(j, "seed", cfg.seed);
        if (j.contains("gain_table")) {
            const json& s = j.at("gain_table");
            check_keys(s, "gain_table", {"gains_db", "noise_floor_dbm", "sat_threshold_dbm"});
            read_if(s, "gains_db", cfg.env.table.gains_db);
            read_if(s, "noise_floor_dbm", cfg.env.table.noise_floor_dbm);
            read_if(s, "sat_threshold_dbm", cfg.env.table.sat_threshold_dbm);
        }
        if (j.contains("link_budget")) {
            const json& s = j.at("link_budget");
            check_keys(s, "link_budget", {"rejection_db", "snr_aa_threshold_db", "snr_crc_threshold_db",
                                          "overdrive_margin_db", "distortion_db_per_db", "metric_jitter_db"});
            if (s.contains("rejection_db"))
                cfg.env.budget.rejection =
                    RejectionCurve(s.at("rejection_db").get<std::vector<std::pair<double, double>>>());
            read_if(s, "snr_aa_threshold_db", cfg.env.budget.snr_aa_threshold_db);
            read_if(s, "snr_crc_threshold_db", cfg.env.budget.snr_crc_threshold_db);
            read_if(s, "overdrive_margin_db", cfg.env.budget.overdrive_margin_db);
            read_if(s, "distortion_db_per_db", cfg.env.budget.distortion_db_per_db);
            read_if(s, "metric_jitter_db", cfg.env.budget.metric_jitter_db);
        }
        if (j.contains("agc")) {
            const json& s = j.at("agc");
            check_keys(s, "agc", {"window_low_dbm", "window_high_dbm", "preamble_step_budget"});
            read_if(s, "window_low_dbm", cfg.env.agc.window_low_dbm);
            read_if(s, "window_high_dbm", cfg.env.agc.window_high_dbm);
            read_if(s, "preamble_step_budget", cfg.env.agc.preamble_step_budget);
        }
        if (j.contains("sweep")) {
            const json& s = j.at("sweep");
            check_keys(s, "sweep", {"wanted_dbm", "blocker_dbm", "offsets_mhz"});
            read_if(s, "wanted_dbm", cfg.sweep.wanted_dbm);
            read_if(s, "offsets_mhz", cfg.sweep.offsets_mhz);
            if (s.contains("blocker_dbm")) {
                cfg.sweep.blocker_dbm.clear();
                for (const auto& b : s.at("blocker_dbm"))
                    cfg.sweep.blocker_dbm.push_back(b.is_null() ? PowerDbm{} : PowerDbm(b.get<double>()));
            }
        }
        if (j.contains("signal")) {
            const json& s = j.at("signal");
            check_keys(s, "signal", {"pattern", "length", "reference_wanted_dbm", "after_freeze_probability", "offsets_mhz", "draw_per_run"});
            if (s.contains("pattern")) {
                cfg.signal.pattern.runs.clear();
                for (const auto& r : s.at("pattern"))
                    cfg.signal.pattern.runs.emplace_back(band_from_string(r.at(0).get<std::string>()), r.at(1).get<int>());
            }
            read_if(s, "length", cfg.signal.length);
            read_if(s, "reference_wanted_dbm", cfg.signal.options.reference_wanted_dbm);
            read_if(s, "after_freeze_probability", cfg.signal.options.after_freeze_probability);
            read_if(s, "offsets_mhz", cfg.signal.options.offsets_mhz);
            read_if(s, "draw_per_run", cfg.signal.options.draw_per_run);
        }
        if (j.contains("split")) {
            const json& s = j.at("split");
            check_keys(s, "split", {"folds", "repeats", "test_fraction", "validation_fraction", "window_len"});
            read_if(s, "folds", cfg.split.folds);
            read_if(s, "repeats", cfg.split.repeats);
            read_if(s, "test_fraction", cfg.split.test_fraction);
            read_if(s, "validation_fraction", cfg.split.validation_fraction);
            read_if(s, "window_len", cfg.split.window_len);
        }
        if (j.contains("train")) {
            const json& s = j.at("train");
            check_keys(s, "train", {"lr", "epochs", "l2", "init_scale", "class_weights"});
            read_if(s, "lr", cfg.train.lr);
            read_if(s, "epochs", cfg.train.epochs);
            read_if(s, "l2", cfg.train.l2);
            read_if(s, "init_scale", cfg.train.init_scale);
            read_if(s, "class_weights", cfg.train.class_weights);
        }
        if (j.contains("runtime")) {
            const json& s = j.at("runtime");
            check_keys(s, "runtime", {"blacklist_threshold", "wanted_dbm", "offset_mhz", "packets", "repetitions", "blocker_dbm"});
            if (s.contains("blacklist_threshold"))
                cfg.blacklist_threshold = s.at("blacklist_threshold").is_null()
                                              ? std::nullopt
                                              : std::optional<int>(s.at("blacklist_threshold").get<int>());
            read_if(s, "wanted_dbm", cfg.per.wanted_dbm);
            read_if(s, "offset_mhz", cfg.per.offset_mhz);
            read_if(s, "packets", cfg.per.packets);
            read_if(s, "repetitions", cfg.per.repetitions);
            read_if(s, "blocker_dbm", cfg.per.blocker_dbm);
        }
    } catch (const json::exception& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    cfg.apply_seed();
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw UsageError("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(is);
    } catch (const json::exception& e) {
        throw UsageError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return os.str();
}

std::string config_hash(const ExperimentConfig& cfg) { return sha256_hex(to_json(cfg).dump()); }

}  // namespace agcml
