#pragma once

// Multinomial logistic regression over flattened window features, trained
// by full-batch gradient descent. A hidden layer would slot in behind
// class_scores() without touching the persistence or evaluation surface.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "agcml/signalgen.hpp"

namespace agcml {

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(int epoch)
        : std::runtime_error("training diverged: non-finite loss at epoch " + std::to_string(epoch)),
          epoch_(epoch) {}
    int epoch() const { return epoch_; }

private:
    int epoch_;
};

class ModelNotFoundError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ModelLoadError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kScalerStdFloor = 1e-6;

struct FeatureScaler {
    std::vector<double> mean;
    std::vector<double> stddev;

    static FeatureScaler fit(const std::vector<WindowSample>& samples);
    static FeatureScaler identity(std::size_t dim);
    std::size_t dim() const { return mean.size(); }
    std::vector<double> apply(std::span<const double> raw) const;
};

struct TrainHyper {
    double lr = 0.5;
    int epochs = 400;
    double l2 = 1e-4;
    std::uint64_t seed = 7;
    double init_scale = 0.01;          // std of the seeded initial weights
    std::vector<double> class_weights;  // empty = uniform
};

struct TrainingMeta {
    int epochs = 0;
    int best_epoch = 0;
    double final_loss = 0.0;
    std::uint64_t seed = 0;
    std::size_t window_len = 0;
    std::size_t metrics_per_packet = kMetricCount;
    std::vector<std::string> class_map;  // class id -> "0".."G-1", "X"
    double lr = 0.0;
    double l2 = 0.0;
};

struct TrainedModel {
    FeatureScaler scaler;
    std::size_t n_classes = 0;
    std::size_t n_features = 0;
    std::vector<double> weights;  // n_classes x n_features, row-major
    std::vector<double> bias;     // n_classes
    TrainingMeta meta;

    int gain_count() const { return static_cast<int>(n_classes) - 1; }
};

struct EpochStat {
    int epoch = 0;
    double train_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainResult {
    TrainedModel model;
    std::vector<EpochStat> curve;
    std::vector<std::string> warnings;
};

/// Standardised design matrix with integer labels.
struct Batch {
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<double> x;  // n x d row-major
    std::vector<int> y;
};

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad_w;
    std::vector<double> grad_b;
};

/// Weighted mean cross-entropy plus 0.5 * l2 * |W|^2 and its gradient.
LossGrad loss_and_gradient(const Batch& batch, std::span<const double> weights,
                           std::span<const double> bias, std::size_t n_classes, double l2,
                           std::span<const double> class_weights);

/// Numerically stable softmax of the scores, in place.
void softmax_inplace(std::span<double> scores);

std::vector<double> encode_features(const WindowSample& window, const FeatureScaler& scaler);
Batch make_batch(const std::vector<WindowSample>& samples, const FeatureScaler& scaler);

TrainResult train(const std::vector<WindowSample>& train_samples,
                  const std::vector<WindowSample>& val_samples, const TrainHyper& hyper,
                  int gain_count);

struct Prediction {
    int class_id = 0;
    std::vector<double> probabilities;

    std::optional<GainIndex> agc_class(int gain_count) const { return class_from_id(class_id, gain_count); }
};

/// Argmax with ties going to the lowest class id (lowest gain).
int argmax_low(std::span<const double> scores);

Prediction predict(const TrainedModel& model, std::span<const double> raw_features);
Prediction predict(const TrainedModel& model, const WindowSample& window);

/// Same model with the scaler folded into the weights, for raw inputs.
struct FoldedModel {
    std::size_t n_classes = 0;
    std::size_t n_features = 0;
    std::vector<double> weights;
    std::vector<double> bias;
};

FoldedModel fold_scaler(const TrainedModel& model);
Prediction predict_raw(const FoldedModel& model, std::span<const double> raw_features);

struct Evaluation {
    double accuracy = 0.0;
    std::size_t total = 0;
    std::vector<std::optional<double>> recall;          // per class; nullopt without support
    std::vector<std::vector<std::size_t>> confusion;    // [true][predicted]
};

Evaluation evaluate(const TrainedModel& model, const std::vector<WindowSample>& samples);

/// Accuracy of always predicting the most frequent label of `reference`.
double majority_baseline(const std::vector<WindowSample>& reference,
                         const std::vector<WindowSample>& samples);

inline constexpr const char* kModelSchema = "agcml-model/1";

std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const std::string& text);
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

void write_curve_csv(std::ostream& os, const std::vector<EpochStat>& curve);

}  // namespace agcml
