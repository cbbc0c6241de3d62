#pragma once

// Stage glue shared by the CLI, the acceptance suite and the Python module.

#include <vector>

#include "agcml/config.hpp"

namespace agcml {

std::vector<LabeledConfig> run_sweep_stage(const ExperimentConfig& cfg);

SyntheticSignal run_synth_stage(const ExperimentConfig& cfg, const std::vector<LabeledConfig>& pool);

struct PreparedRun {
    CrossvalRun cv;
    std::vector<WindowSample> fit;   // train pieces minus validation tails
    std::vector<WindowSample> val;
    std::vector<WindowSample> test;
    WindowStats train_stats;
    WindowStats test_stats;
};

std::vector<PreparedRun> run_split_stage(const ExperimentConfig& cfg, const SyntheticSignal& signal);

struct ModelRun {
    TrainResult trained;
    Evaluation test_eval;
    double baseline = 0.0;  // majority class of the training windows, scored on test
};

TrainHyper hyper_for_run(const ExperimentConfig& cfg, std::size_t run_index);

ModelRun train_and_evaluate(const ExperimentConfig& cfg, const PreparedRun& run, std::size_t run_index);

PerReport run_report_stage(const ExperimentConfig& cfg, const TrainedModel& model,
                           const std::vector<RuntimeMode>& modes);

}  // namespace agcml
