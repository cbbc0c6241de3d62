#include "agcml/pipeline.hpp"

#include "agcml/seed.hpp"

namespace agcml {

std::vector<LabeledConfig> run_sweep_stage(const ExperimentConfig& cfg) {
    return sweep_dataset(cfg.sweep, cfg.env);
}

SyntheticSignal run_synth_stage(const ExperimentConfig& cfg, const std::vector<LabeledConfig>& pool) {
    return synthesize_signal(cfg.signal.pattern, pool, cfg.signal.length, cfg.stage_seed(kSaltSynth),
                             cfg.env, cfg.signal.options);
}

std::vector<PreparedRun> run_split_stage(const ExperimentConfig& cfg, const SyntheticSignal& signal) {
    const int gains = cfg.env.table.size();
    const std::size_t n = cfg.split.window_len;
    std::vector<PreparedRun> out;
    for (auto& cv : crossval_runs(signal, cfg.split.folds, cfg.split.repeats, cfg.stage_seed(kSaltSplit), n,
                                  gains, cfg.split.test_fraction)) {
        PreparedRun pr;
        const auto [fit_pieces, val_pieces] = holdout_tail(cv.plan.train, cfg.split.validation_fraction, n);
        pr.fit = make_windows(signal, fit_pieces, n, gains, &pr.train_stats);
        pr.val = make_windows(signal, val_pieces, n, gains);
        pr.test = make_windows(signal, cv.plan.test, n, gains, &pr.test_stats);
        pr.cv = std::move(cv);
        out.push_back(std::move(pr));
    }
    return out;
}

TrainHyper hyper_for_run(const ExperimentConfig& cfg, std::size_t run_index) {
    TrainHyper h = cfg.train;
    h.seed = derive_seed(cfg.train.seed, {run_index});
    return h;
}

ModelRun train_and_evaluate(const ExperimentConfig& cfg, const PreparedRun& run, std::size_t run_index) {
    ModelRun mr;
    mr.trained = train(run.fit, run.val, hyper_for_run(cfg, run_index), cfg.env.table.size());
    mr.test_eval = evaluate(mr.trained.model, run.test);
    mr.baseline = majority_baseline(run.fit, run.test);
    return mr;
}

PerReport run_report_stage(const ExperimentConfig& cfg, const TrainedModel& model,
                           const std::vector<RuntimeMode>& modes) {
    std::vector<RuntimeScenario> scenarios;
    for (RuntimeMode m : modes) scenarios.push_back({m, cfg.blacklist_threshold});
    return per_sweep(cfg.per, scenarios, &model, cfg.split.window_len, cfg.env);
}

}  // namespace agcml
