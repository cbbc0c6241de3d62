#include "agcml/cli.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "agcml/pipeline.hpp"

namespace agcml::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Context {
    ExperimentConfig cfg;
    std::string hash;
    fs::path dir;
    std::string mode = "both";
    std::ostream* out = nullptr;
};

std::string read_file(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& body) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << body;
    if (!os) throw std::runtime_error("write failed for " + path.string());
}

std::string manifest_name(const std::string& stage) { return stage + ".manifest.json"; }

std::string run_name(std::size_t r) { return "run" + std::to_string(r); }

std::string with_provenance_line(const Context& ctx, const std::string& body) {
    std::ostringstream ss;
    ss << "# provenance: config_hash=" << ctx.hash << " seed=" << ctx.cfg.seed << " tool=" << kToolVersion << '\n'
       << body;
    return ss.str();
}

/// Collects one stage's artifacts, each stamped with the provenance.
class StageWriter {
public:
    StageWriter(const Context& ctx, std::string stage) : ctx_(ctx), stage_(std::move(stage)) {}

    /// Text artifacts (CSV, plot data) get a leading comment line.
    void text(const std::string& rel, const std::string& body) { put(rel, with_provenance_line(ctx_, body)); }

    void document(const std::string& rel, json doc) {
        doc["provenance"] = provenance();
        put(rel, doc.dump(2) + "\n");
    }

    void upstream(const std::string& stage) {
        const fs::path p = ctx_.dir / manifest_name(stage);
        upstream_.push_back({{"stage", stage}, {"manifest_sha256", sha256_hex(read_file(p))}});
    }

    void finish(json details = json::object()) {
        json m;
        m["stage"] = stage_;
        m["tool_version"] = kToolVersion;
        m["config_hash"] = ctx_.hash;
        m["seed"] = ctx_.cfg.seed;
        m["artifacts"] = artifacts_;
        m["upstream"] = upstream_;
        m["details"] = std::move(details);
        write_file(ctx_.dir / manifest_name(stage_), m.dump(2) + "\n");
    }

private:
    json provenance() const {
        return {{"config_hash", ctx_.hash}, {"seed", ctx_.cfg.seed}, {"tool_version", kToolVersion}};
    }

    void put(const std::string& rel, const std::string& body) {
        write_file(ctx_.dir / rel, body);
        artifacts_.push_back({{"path", rel}, {"sha256", sha256_hex(body)}});
    }

    const Context& ctx_;
    std::string stage_;
    json artifacts_ = json::array();
    json upstream_ = json::array();
};

/// Loads and checks an upstream manifest against the current config and
/// the files on disk.
json require_stage(const Context& ctx, const std::string& stage, const std::string& needed_by) {
    const fs::path p = ctx.dir / manifest_name(stage);
    if (!fs::exists(p))
        throw StageDependencyError("stage '" + needed_by + "' needs the output of stage '" + stage + "': " +
                                   p.string() + " not found (run 'agcml " + stage + "' with the same --out first)");
    json m;
    try {
        m = json::parse(read_file(p));
    } catch (const json::exception& e) {
        throw StageDependencyError("manifest " + p.string() + " is not valid JSON: " + e.what());
    }
    if (m.value("stage", std::string()) != stage)
        throw StageDependencyError("manifest " + p.string() + " does not describe stage '" + stage + "'");
    if (m.value("config_hash", std::string()) != ctx.hash)
        throw StageDependencyError("stage '" + stage + "' output in " + ctx.dir.string() +
                                   " was produced with a different config (hash " +
                                   m.value("config_hash", std::string("?")) + ", current " + ctx.hash + ")");
    for (const auto& a : m.at("artifacts")) {
        const fs::path ap = ctx.dir / a.at("path").get<std::string>();
        if (!fs::exists(ap)) throw StageDependencyError("artifact " + ap.string() + " of stage '" + stage + "' is missing");
        if (sha256_hex(read_file(ap)) != a.at("sha256").get<std::string>())
            throw StageDependencyError("artifact " + ap.string() + " of stage '" + stage +
                                       "' does not match its manifest checksum");
    }
    return m;
}

std::string artifact_sha(const json& manifest, const std::string& rel) {
    for (const auto& a : manifest.at("artifacts"))
        if (a.at("path").get<std::string>() == rel) return a.at("sha256").get<std::string>();
    throw StageDependencyError("manifest of stage '" + manifest.value("stage", std::string("?")) +
                               "' lists no artifact " + rel);
}

/// Upstream objects are recomputed from the config; the recomputation must
/// reproduce the recorded artifact byte for byte.
void check_reproduced(const Context& ctx, const json& manifest, const std::string& rel, const std::string& body) {
    if (sha256_hex(with_provenance_line(ctx, body)) != artifact_sha(manifest, rel))
        throw StageDependencyError("recomputed " + rel + " differs from the recorded artifact; rerun stage '" +
                                   manifest.value("stage", std::string("?")) + "'");
}

std::string dataset_text(const std::vector<LabeledConfig>& configs) {
    std::ostringstream ss;
    write_dataset_csv(ss, configs);
    return ss.str();
}

std::string signal_text(const SyntheticSignal& signal) {
    std::ostringstream ss;
    write_signal_csv(ss, signal);
    return ss.str();
}

std::string windows_text(const std::vector<WindowSample>& w) {
    std::ostringstream ss;
    write_windows_csv(ss, w);
    return ss.str();
}

std::vector<WindowSample> load_windows(const Context& ctx, const std::string& rel) {
    std::ifstream is(ctx.dir / rel, std::ios::binary);
    return read_windows_csv(is);
}

json runs_to_json(const std::vector<Run>& runs) {
    json a = json::array();
    for (const auto& r : runs) a.push_back({r.begin, r.end});
    return a;
}

json balance_to_json(const std::map<int, std::size_t>& b, int gains) {
    json o = json::object();
    for (const auto& [id, n] : b) o[agc_class_name(class_from_id(id, gains))] = n;
    return o;
}

std::vector<LabeledConfig> sweep_checked(const Context& ctx, const json& sweep_manifest) {
    auto configs = run_sweep_stage(ctx.cfg);
    check_reproduced(ctx, sweep_manifest, "dataset.csv", dataset_text(configs));
    return configs;
}

// ---- stages -------------------------------------------------------------

void cmd_sweep(const Context& ctx) {
    const auto configs = run_sweep_stage(ctx.cfg);
    StageWriter w(ctx, "sweep");
    w.text("dataset.csv", dataset_text(configs));
    json per_offset = json::object();
    std::size_t x_count = 0;
    for (const auto& [off, n] : count_per_offset(configs)) {
        std::ostringstream k;
        k << off;
        per_offset[k.str()] = n;
    }
    for (const auto& c : configs) x_count += c.agc_optim ? 0 : 1;
    w.finish({{"configs", configs.size()}, {"per_offset", per_offset}, {"x_labels", x_count}});
    *ctx.out << "sweep: " << configs.size() << " labeled configs (" << x_count << " X) -> "
             << (ctx.dir / "dataset.csv").string() << '\n';
}

void cmd_synth(const Context& ctx) {
    const json up = require_stage(ctx, "sweep", "synth");
    const auto pool = sweep_checked(ctx, up);
    const SyntheticSignal sig = run_synth_stage(ctx.cfg, pool);
    StageWriter w(ctx, "synth");
    w.upstream("sweep");
    w.text("signal.csv", signal_text(sig));
    json pattern = json::array();
    for (const auto& [band, n] : sig.pattern.runs) pattern.push_back({to_string(band), n});
    w.finish({{"packets", sig.size()}, {"signal_seed", sig.seed}, {"pattern", pattern},
              {"reference_wanted_dbm", sig.reference_wanted_dbm}});
    *ctx.out << "synth: " << sig.size() << " packets -> " << (ctx.dir / "signal.csv").string() << '\n';
}

SyntheticSignal signal_checked(const Context& ctx, const json& synth_manifest) {
    const json sweep_m = require_stage(ctx, "sweep", synth_manifest.value("stage", std::string("synth")));
    const auto pool = sweep_checked(ctx, sweep_m);
    SyntheticSignal sig = run_synth_stage(ctx.cfg, pool);
    check_reproduced(ctx, synth_manifest, "signal.csv", signal_text(sig));
    return sig;
}

void cmd_split(const Context& ctx) {
    const json up = require_stage(ctx, "synth", "split");
    const SyntheticSignal sig = signal_checked(ctx, up);
    const auto runs = run_split_stage(ctx.cfg, sig);
    const int gains = ctx.cfg.env.table.size();
    StageWriter w(ctx, "split");
    w.upstream("synth");
    json plans = json::array();
    for (std::size_t r = 0; r < runs.size(); ++r) {
        const auto& pr = runs[r];
        const std::string base = "windows/" + run_name(r);
        w.text(base + "_fit.csv", windows_text(pr.fit));
        w.text(base + "_val.csv", windows_text(pr.val));
        w.text(base + "_test.csv", windows_text(pr.test));
        plans.push_back({{"run", r},
                         {"seed", pr.cv.plan.seed},
                         {"folds", runs_to_json(pr.cv.plan.folds)},
                         {"train", runs_to_json(pr.cv.plan.train)},
                         {"test", runs_to_json(pr.cv.plan.test)},
                         {"windows", {{"fit", pr.fit.size()}, {"val", pr.val.size()}, {"test", pr.test.size()}}},
                         {"excluded_labels", pr.train_stats.excluded_labels + pr.test_stats.excluded_labels},
                         {"train_balance", balance_to_json(pr.cv.train_balance, gains)},
                         {"test_balance", balance_to_json(pr.cv.test_balance, gains)}});
        *ctx.out << "split: " << run_name(r) << " fit=" << pr.fit.size() << " val=" << pr.val.size()
                 << " test=" << pr.test.size() << '\n';
    }
    w.document("split.json", {{"window_len", ctx.cfg.split.window_len}, {"runs", plans}});
    w.finish({{"runs", runs.size()}, {"window_len", ctx.cfg.split.window_len}});
}

std::size_t run_count(const json& split_manifest) { return split_manifest.at("details").at("runs").get<std::size_t>(); }

void cmd_train(const Context& ctx) {
    const json up = require_stage(ctx, "split", "train");
    const std::size_t runs = run_count(up);
    StageWriter w(ctx, "train");
    w.upstream("split");
    json summary = json::array();
    std::optional<TrainedModel> deployed;
    for (std::size_t r = 0; r < runs; ++r) {
        const std::string base = "windows/" + run_name(r);
        const auto fit = load_windows(ctx, base + "_fit.csv");
        const auto val = load_windows(ctx, base + "_val.csv");
        TrainResult tr = train(fit, val, hyper_for_run(ctx.cfg, r), ctx.cfg.env.table.size());
        for (const auto& warn : tr.warnings) *ctx.out << "train: " << run_name(r) << " warning: " << warn << '\n';
        w.document("models/" + run_name(r) + ".json", json::parse(model_to_json(tr.model)));
        std::ostringstream curve;
        write_curve_csv(curve, tr.curve);
        w.text("curves/" + run_name(r) + ".csv", curve.str());
        summary.push_back({{"run", r},
                           {"best_epoch", tr.model.meta.best_epoch},
                           {"final_loss", tr.model.meta.final_loss}});
        *ctx.out << "train: " << run_name(r) << " best_epoch=" << tr.model.meta.best_epoch
                 << " loss=" << tr.model.meta.final_loss << '\n';
        if (r == 0) deployed = std::move(tr.model);
    }
    // The first cross-validation model is the one deployed at runtime.
    w.document("model.json", json::parse(model_to_json(*deployed)));
    w.finish({{"runs", summary}, {"deployed", run_name(0)}});
}

TrainedModel load_stage_model(const Context& ctx, const std::string& rel) {
    return model_from_json(read_file(ctx.dir / rel));
}

void cmd_eval(const Context& ctx) {
    const json up = require_stage(ctx, "train", "eval");
    const json split_m = require_stage(ctx, "split", "eval");
    const std::size_t runs = run_count(split_m);
    const int gains = ctx.cfg.env.table.size();
    StageWriter w(ctx, "eval");
    w.upstream("train");
    json rows = json::array();
    double acc_sum = 0.0;
    for (std::size_t r = 0; r < runs; ++r) {
        const std::string base = "windows/" + run_name(r);
        const TrainedModel model = load_stage_model(ctx, "models/" + run_name(r) + ".json");
        const auto fit = load_windows(ctx, base + "_fit.csv");
        const auto test = load_windows(ctx, base + "_test.csv");
        const Evaluation ev = evaluate(model, test);
        const double base_acc = majority_baseline(fit, test);
        json recall = json::object();
        for (std::size_t c = 0; c < ev.recall.size(); ++c)
            recall[agc_class_name(class_from_id(static_cast<int>(c), gains))] =
                ev.recall[c] ? json(*ev.recall[c]) : json(nullptr);
        rows.push_back({{"run", r},
                        {"accuracy", ev.accuracy},
                        {"baseline", base_acc},
                        {"margin_points", 100.0 * (ev.accuracy - base_acc)},
                        {"test_windows", ev.total},
                        {"recall", recall},
                        {"confusion", ev.confusion}});
        acc_sum += ev.accuracy;
        *ctx.out << "eval: " << run_name(r) << " accuracy=" << std::fixed << std::setprecision(4) << ev.accuracy
                 << " baseline=" << base_acc << std::defaultfloat << std::setprecision(6) << '\n';
    }
    const double mean = runs ? acc_sum / static_cast<double>(runs) : 0.0;
    w.document("evaluation.json", {{"runs", rows}, {"mean_accuracy", mean}});
    w.finish({{"runs", runs}, {"mean_accuracy", mean}});
}

std::vector<RuntimeMode> modes_of(const std::string& m) {
    if (m == "reference") return {RuntimeMode::Reference};
    if (m == "scenario4") return {RuntimeMode::Scenario4};
    return {RuntimeMode::Reference, RuntimeMode::Scenario4};
}

void cmd_report(const Context& ctx) {
    require_stage(ctx, "train", "report");
    const TrainedModel model = load_stage_model(ctx, "model.json");
    const auto modes = modes_of(ctx.mode);
    const PerReport rep = run_report_stage(ctx.cfg, model, modes);
    StageWriter w(ctx, "report");
    w.upstream("train");
    std::ostringstream rows, table;
    write_per_rows_csv(rows, rep);
    write_per_table_csv(table, rep);
    w.text("per_rows.csv", rows.str());
    w.text("per_table.csv", table.str());
    for (RuntimeMode m : modes) {
        std::ostringstream g;
        write_per_gnuplot(g, rep, m);
        w.text("per_" + to_string(m) + ".dat", g.str());
    }
    w.finish({{"mode", ctx.mode}, {"rows", rep.rows.size()}});
    *ctx.out << table.str();
}

void cmd_flip(const Context& ctx) {
    const auto configs = run_sweep_stage(ctx.cfg);
    const FlipReport rep = flip_experiment(configs, ctx.cfg.env);
    json per_offset = json::object();
    for (const auto& [off, qf] : rep.per_offset) {
        std::ostringstream k;
        k << off;
        per_offset[k.str()] = {{"qualifying", qf.first}, {"flipped", qf.second}};
    }
    StageWriter w(ctx, "flip");
    w.document("flip.json", {{"considered", rep.considered},
                             {"qualifying", rep.qualifying},
                             {"flipped", rep.flipped},
                             {"fraction", rep.fraction ? json(*rep.fraction) : json(nullptr)},
                             {"per_offset", per_offset},
                             {"hardware_reference", FlipReport::kHardwareReference}});
    w.finish({{"qualifying", rep.qualifying}, {"flipped", rep.flipped}});
    *ctx.out << "flip: " << rep.flipped << "/" << rep.qualifying << " qualifying configs flip to good";
    if (rep.fraction) *ctx.out << " (" << std::setprecision(4) << 100.0 * *rep.fraction << std::setprecision(6) << "%)";
    *ctx.out << "; hardware reference " << 100.0 * FlipReport::kHardwareReference << "%\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Machine-learning assisted AGC experiment pipeline", "agcml"};
    app.require_subcommand(1, 1);
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    std::string mode = "both";
    app.add_option("--config", config_path, "JSON experiment config (defaults when omitted)")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "Master seed override");
    app.add_option("--out", out_dir, "Output directory shared by all stages");
    app.add_option("--mode", mode, "Runtime modes for the report stage")
        ->check(CLI::IsMember({"reference", "scenario4", "both"}));
    const std::vector<std::pair<std::string, std::string>> stages{
        {"sweep", "Label every sweep configuration"},
        {"synth", "Build the synthetic signal from the labeled pool"},
        {"split", "Blocked cross-validation splits and window samples"},
        {"train", "Train one model per cross-validation run"},
        {"eval", "Score the models on their held-out windows"},
        {"report", "PER sweep of the reference and ML-assisted runtime"},
        {"flip", "Forced-index flip experiment"}};
    for (const auto& [name, help] : stages) app.add_subcommand(name, help)->fallthrough();

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    Context ctx;
    ctx.dir = out_dir;
    ctx.mode = mode;
    ctx.out = &out;
    try {
        ExperimentConfig cfg = config_path.empty() ? config_from_json(nlohmann::json::object()) : load_config(config_path);
        if (seed) {
            cfg.seed = *seed;
            cfg.apply_seed();
        }
        cfg.validate();
        ctx.cfg = std::move(cfg);
        ctx.hash = config_hash(ctx.cfg);
    } catch (const std::exception& e) {
        err << "agcml: config error: " << e.what() << '\n';
        return kExitUsage;
    }

    const std::string sub = app.get_subcommands().front()->get_name();
    try {
        fs::create_directories(ctx.dir);
        if (sub == "sweep") cmd_sweep(ctx);
        else if (sub == "synth") cmd_synth(ctx);
        else if (sub == "split") cmd_split(ctx);
        else if (sub == "train") cmd_train(ctx);
        else if (sub == "eval") cmd_eval(ctx);
        else if (sub == "report") cmd_report(ctx);
        else cmd_flip(ctx);
    } catch (const UsageError& e) {
        err << "agcml " << sub << ": " << e.what() << '\n';
        return kExitUsage;
    } catch (const ConfigurationError& e) {
        err << "agcml " << sub << ": " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "agcml " << sub << ": " << e.what() << '\n';
        return kExitData;
    }
    return kExitOk;
}

int main(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace agcml::cli
