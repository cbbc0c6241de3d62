#include "agcml/mlengine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "agcml/seed.hpp"

namespace agcml {

using nlohmann::json;

FeatureScaler FeatureScaler::fit(const std::vector<WindowSample>& samples) {
    if (samples.empty()) throw UsageError("FeatureScaler::fit: no samples");
    const std::size_t d = samples.front().features.size();
    FeatureScaler s;
    s.mean.assign(d, 0.0);
    s.stddev.assign(d, 0.0);
    for (const auto& w : samples) {
        if (w.features.size() != d) throw ShapeError("FeatureScaler::fit: ragged feature rows");
        for (std::size_t j = 0; j < d; ++j) s.mean[j] += w.features[j];
    }
    const auto n = static_cast<double>(samples.size());
    for (auto& m : s.mean) m /= n;
    for (const auto& w : samples)
        for (std::size_t j = 0; j < d; ++j) {
            const double e = w.features[j] - s.mean[j];
            s.stddev[j] += e * e;
        }
    for (auto& v : s.stddev) v = std::max(std::sqrt(v / n), kScalerStdFloor);
    return s;
}

FeatureScaler FeatureScaler::identity(std::size_t dim) {
    return FeatureScaler{std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

std::vector<double> FeatureScaler::apply(std::span<const double> raw) const {
    if (raw.size() != dim())
        throw ShapeError("feature length " + std::to_string(raw.size()) + " does not match scaler " +
                         std::to_string(dim()));
    std::vector<double> out(raw.size());
    for (std::size_t j = 0; j < raw.size(); ++j) {
        // Zero-variance features collapse exactly to 0.
        out[j] = stddev[j] <= kScalerStdFloor ? 0.0 : (raw[j] - mean[j]) / stddev[j];
    }
    return out;
}

std::vector<double> encode_features(const WindowSample& window, const FeatureScaler& scaler) {
    if (window.features.size() != window.window_len * kMetricCount)
        throw ShapeError("window features do not match window_len x metric count");
    return scaler.apply(window.features);
}

Batch make_batch(const std::vector<WindowSample>& samples, const FeatureScaler& scaler) {
    Batch b;
    b.n = samples.size();
    b.d = scaler.dim();
    b.x.reserve(b.n * b.d);
    b.y.reserve(b.n);
    for (const auto& w : samples) {
        const auto row = encode_features(w, scaler);
        b.x.insert(b.x.end(), row.begin(), row.end());
        b.y.push_back(w.label);
    }
    return b;
}

void softmax_inplace(std::span<double> scores) {
    const double mx = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (auto& s : scores) {
        s = std::exp(s - mx);
        sum += s;
    }
    for (auto& s : scores) s /= sum;
}

namespace {

void class_scores(std::span<const double> x, std::span<const double> weights,
                  std::span<const double> bias, std::size_t n_classes, std::span<double> out) {
    const std::size_t d = x.size();
    for (std::size_t c = 0; c < n_classes; ++c) {
        double acc = bias[c];
        const double* w = weights.data() + c * d;
        for (std::size_t j = 0; j < d; ++j) acc += w[j] * x[j];
        out[c] = acc;
    }
}

double batch_accuracy(const Batch& b, std::span<const double> weights, std::span<const double> bias,
                      std::size_t n_classes) {
    if (b.n == 0) return 0.0;
    std::vector<double> scores(n_classes);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < b.n; ++i) {
        class_scores({b.x.data() + i * b.d, b.d}, weights, bias, n_classes, scores);
        if (argmax_low(scores) == b.y[i]) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(b.n);
}

}  // namespace

LossGrad loss_and_gradient(const Batch& batch, std::span<const double> weights,
                           std::span<const double> bias, std::size_t n_classes, double l2,
                           std::span<const double> class_weights) {
    const std::size_t d = batch.d;
    LossGrad lg;
    lg.grad_w.assign(n_classes * d, 0.0);
    lg.grad_b.assign(n_classes, 0.0);
    std::vector<double> p(n_classes);

    double total_weight = 0.0;
    double nll = 0.0;
    for (std::size_t i = 0; i < batch.n; ++i) {
        const std::span<const double> x{batch.x.data() + i * d, d};
        const int y = batch.y[i];
        const double wy = class_weights.empty() ? 1.0 : class_weights[static_cast<std::size_t>(y)];
        class_scores(x, weights, bias, n_classes, p);
        softmax_inplace(p);
        nll -= wy * std::log(std::max(p[static_cast<std::size_t>(y)], 1e-300));
        total_weight += wy;
        for (std::size_t c = 0; c < n_classes; ++c) {
            const double delta = wy * (p[c] - (static_cast<int>(c) == y ? 1.0 : 0.0));
            lg.grad_b[c] += delta;
            double* g = lg.grad_w.data() + c * d;
            for (std::size_t j = 0; j < d; ++j) g[j] += delta * x[j];
        }
    }
    const double norm = total_weight > 0.0 ? 1.0 / total_weight : 0.0;
    double reg = 0.0;
    for (std::size_t k = 0; k < lg.grad_w.size(); ++k) {
        lg.grad_w[k] = lg.grad_w[k] * norm + l2 * weights[k];
        reg += weights[k] * weights[k];
    }
    for (auto& g : lg.grad_b) g *= norm;
    lg.loss = nll * norm + 0.5 * l2 * reg;
    return lg;
}

TrainResult train(const std::vector<WindowSample>& train_samples,
                  const std::vector<WindowSample>& val_samples, const TrainHyper& hyper,
                  int gain_count) {
    if (train_samples.empty()) throw UsageError("train: empty training set");
    if (hyper.epochs < 0) throw UsageError("train: epochs must be >= 0");
    if (!(hyper.lr >= 0.0)) throw UsageError("train: lr must be >= 0");
    const auto n_classes = static_cast<std::size_t>(gain_count + 1);
    if (!hyper.class_weights.empty() && hyper.class_weights.size() != n_classes)
        throw UsageError("train: class_weights must have one entry per class");

    TrainResult res;
    TrainedModel& m = res.model;
    m.scaler = FeatureScaler::fit(train_samples);
    m.n_classes = n_classes;
    m.n_features = m.scaler.dim();
    m.meta.seed = hyper.seed;
    m.meta.window_len = train_samples.front().window_len;
    m.meta.lr = hyper.lr;
    m.meta.l2 = hyper.l2;
    for (int c = 0; c < gain_count; ++c) m.meta.class_map.push_back(std::to_string(c));
    m.meta.class_map.emplace_back("X");

    const Batch tb = make_batch(train_samples, m.scaler);
    const Batch vb = make_batch(val_samples, m.scaler);
    for (int y : tb.y)
        if (y < 0 || y >= static_cast<int>(n_classes))
            throw UsageError("train: label " + std::to_string(y) + " outside the class map");

    std::vector<std::size_t> support(n_classes, 0);
    for (int y : tb.y) ++support[static_cast<std::size_t>(y)];
    for (std::size_t c = 0; c < n_classes; ++c)
        if (support[c] == 0)
            res.warnings.push_back("class " + m.meta.class_map[c] + " absent from the training set");

    std::mt19937_64 rng(derive_seed(hyper.seed, {kSaltTrain}));
    std::normal_distribution<double> init(0.0, 1.0);
    m.weights.resize(n_classes * m.n_features);
    for (auto& w : m.weights) w = hyper.init_scale * init(rng);
    m.bias.assign(n_classes, 0.0);

    std::vector<double> w = m.weights;
    std::vector<double> b = m.bias;
    LossGrad lg = loss_and_gradient(tb, w, b, n_classes, hyper.l2, hyper.class_weights);
    if (!std::isfinite(lg.loss)) throw DivergenceError(0);

    const Batch& sel = vb.n > 0 ? vb : tb;
    double best_acc = batch_accuracy(sel, w, b, n_classes);
    double best_loss = lg.loss;
    int best_epoch = 0;
    for (int e = 1; e <= hyper.epochs; ++e) {
        for (std::size_t k = 0; k < w.size(); ++k) w[k] -= hyper.lr * lg.grad_w[k];
        for (std::size_t c = 0; c < n_classes; ++c) b[c] -= hyper.lr * lg.grad_b[c];
        lg = loss_and_gradient(tb, w, b, n_classes, hyper.l2, hyper.class_weights);
        if (!std::isfinite(lg.loss)) throw DivergenceError(e);
        const double acc = batch_accuracy(sel, w, b, n_classes);
        res.curve.push_back({e, lg.loss, vb.n > 0 ? acc : std::nan("")});
        if (acc >= best_acc) {
            best_acc = acc;
            best_loss = lg.loss;
            best_epoch = e;
            m.weights = w;
            m.bias = b;
        }
    }
    m.meta.epochs = hyper.epochs;
    m.meta.best_epoch = best_epoch;
    m.meta.final_loss = best_loss;
    return res;
}

int argmax_low(std::span<const double> scores) {
    int best = 0;
    for (std::size_t c = 1; c < scores.size(); ++c)
        if (scores[c] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
    return best;
}

Prediction predict(const TrainedModel& model, std::span<const double> raw_features) {
    if (raw_features.size() != model.n_features)
        throw ShapeError("predict: feature length " + std::to_string(raw_features.size()) +
                         ", model expects " + std::to_string(model.n_features));
    const auto x = model.scaler.apply(raw_features);
    Prediction p;
    p.probabilities.resize(model.n_classes);
    class_scores(x, model.weights, model.bias, model.n_classes, p.probabilities);
    softmax_inplace(p.probabilities);
    p.class_id = argmax_low(p.probabilities);
    return p;
}

Prediction predict(const TrainedModel& model, const WindowSample& window) {
    if (window.window_len != model.meta.window_len)
        throw ShapeError("predict: window length " + std::to_string(window.window_len) +
                         ", model expects " + std::to_string(model.meta.window_len));
    return predict(model, std::span<const double>(window.features));
}

FoldedModel fold_scaler(const TrainedModel& model) {
    FoldedModel f;
    f.n_classes = model.n_classes;
    f.n_features = model.n_features;
    f.weights.resize(model.weights.size());
    f.bias = model.bias;
    for (std::size_t c = 0; c < model.n_classes; ++c) {
        for (std::size_t j = 0; j < model.n_features; ++j) {
            const double wcj = model.weights[c * model.n_features + j];
            const double sd = model.scaler.stddev[j];
            if (sd <= kScalerStdFloor) {
                f.weights[c * model.n_features + j] = 0.0;
                continue;
            }
            f.weights[c * model.n_features + j] = wcj / sd;
            f.bias[c] -= wcj * model.scaler.mean[j] / sd;
        }
    }
    return f;
}

Prediction predict_raw(const FoldedModel& model, std::span<const double> raw_features) {
    if (raw_features.size() != model.n_features) throw ShapeError("predict_raw: feature length mismatch");
    Prediction p;
    p.probabilities.resize(model.n_classes);
    class_scores(raw_features, model.weights, model.bias, model.n_classes, p.probabilities);
    softmax_inplace(p.probabilities);
    p.class_id = argmax_low(p.probabilities);
    return p;
}

Evaluation evaluate(const TrainedModel& model, const std::vector<WindowSample>& samples) {
    if (samples.empty()) throw UsageError("evaluate: empty sample set");
    Evaluation ev;
    ev.total = samples.size();
    ev.confusion.assign(model.n_classes, std::vector<std::size_t>(model.n_classes, 0));
    std::size_t hit = 0;
    for (const auto& w : samples) {
        const int pred = predict(model, w).class_id;
        if (w.label < 0 || w.label >= static_cast<int>(model.n_classes))
            throw ShapeError("evaluate: label outside the model class map");
        ++ev.confusion[static_cast<std::size_t>(w.label)][static_cast<std::size_t>(pred)];
        if (pred == w.label) ++hit;
    }
    ev.accuracy = static_cast<double>(hit) / static_cast<double>(ev.total);
    for (std::size_t c = 0; c < model.n_classes; ++c) {
        const std::size_t sup = std::accumulate(ev.confusion[c].begin(), ev.confusion[c].end(), std::size_t{0});
        ev.recall.push_back(sup ? std::optional<double>(static_cast<double>(ev.confusion[c][c]) / static_cast<double>(sup))
                                : std::nullopt);
    }
    return ev;
}

double majority_baseline(const std::vector<WindowSample>& reference,
                         const std::vector<WindowSample>& samples) {
    if (reference.empty() || samples.empty()) throw UsageError("majority_baseline: empty set");
    std::map<int, std::size_t> counts;
    for (const auto& w : reference) ++counts[w.label];
    int majority = counts.begin()->first;
    for (const auto& [label, n] : counts)
        if (n > counts[majority]) majority = label;
    const auto hits = std::count_if(samples.begin(), samples.end(),
                                    [&](const WindowSample& w) { return w.label == majority; });
    return static_cast<double>(hits) / static_cast<double>(samples.size());
}

std::string model_to_json(const TrainedModel& model) {
    json j;
    j["schema_version"] = kModelSchema;
    j["class_map"] = model.meta.class_map;
    j["scaler"] = {{"mean", model.scaler.mean}, {"std", model.scaler.stddev}};
    json rows = json::array();
    for (std::size_t c = 0; c < model.n_classes; ++c) {
        rows.push_back(std::vector<double>(model.weights.begin() + static_cast<std::ptrdiff_t>(c * model.n_features),
                                           model.weights.begin() + static_cast<std::ptrdiff_t>((c + 1) * model.n_features)));
    }
    j["weights"] = rows;
    j["bias"] = model.bias;
    j["training_meta"] = {{"epochs", model.meta.epochs},
                          {"best_epoch", model.meta.best_epoch},
                          {"final_loss", model.meta.final_loss},
                          {"seed", model.meta.seed},
                          {"window_len", model.meta.window_len},
                          {"metrics_per_packet", model.meta.metrics_per_packet},
                          {"lr", model.meta.lr},
                          {"l2", model.meta.l2}};
    return j.dump(2);
}

TrainedModel model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ModelLoadError(std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        if (!j.is_object() || j.value("schema_version", std::string()) != kModelSchema)
            throw ModelLoadError("model schema_version missing or not " + std::string(kModelSchema));
        TrainedModel m;
        m.meta.class_map = j.at("class_map").get<std::vector<std::string>>();
        m.scaler.mean = j.at("scaler").at("mean").get<std::vector<double>>();
        m.scaler.stddev = j.at("scaler").at("std").get<std::vector<double>>();
        const auto rows = j.at("weights").get<std::vector<std::vector<double>>>();
        m.bias = j.at("bias").get<std::vector<double>>();
        m.n_classes = rows.size();
        m.n_features = m.scaler.mean.size();
        if (m.n_classes < 2 || m.bias.size() != m.n_classes || m.meta.class_map.size() != m.n_classes ||
            m.scaler.stddev.size() != m.n_features)
            throw ModelLoadError("model arrays have inconsistent shapes");
        for (const auto& r : rows) {
            if (r.size() != m.n_features) throw ModelLoadError("model weight row has wrong length");
            m.weights.insert(m.weights.end(), r.begin(), r.end());
        }
        const json& meta = j.at("training_meta");
        m.meta.epochs = meta.at("epochs").get<int>();
        m.meta.best_epoch = meta.at("best_epoch").get<int>();
        m.meta.final_loss = meta.at("final_loss").get<double>();
        m.meta.seed = meta.at("seed").get<std::uint64_t>();
        m.meta.window_len = meta.at("window_len").get<std::size_t>();
        m.meta.metrics_per_packet = meta.at("metrics_per_packet").get<std::size_t>();
        m.meta.lr = meta.at("lr").get<double>();
        m.meta.l2 = meta.at("l2").get<double>();
        if (m.meta.window_len * m.meta.metrics_per_packet != m.n_features)
            throw ModelLoadError("model feature count does not match window_len x metrics");
        return m;
    } catch (const json::exception& e) {
        throw ModelLoadError(std::string("model file has a bad field: ") + e.what());
    }
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write model file " + path.string());
    os << model_to_json(model) << '\n';
}

TrainedModel load_model(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ModelNotFoundError("model file not found: " + path.string());
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return model_from_json(ss.str());
}

void write_curve_csv(std::ostream& os, const std::vector<EpochStat>& curve) {
    os << "epoch,train_loss,val_accuracy\n";
    const auto prec = os.precision();
    os << std::setprecision(12);
    for (const auto& e : curve) {
        os << e.epoch << ',' << e.train_loss << ',';
        if (!std::isnan(e.val_accuracy)) os << e.val_accuracy;
        os << '\n';
    }
    os.precision(prec);
}

}  // namespace agcml
