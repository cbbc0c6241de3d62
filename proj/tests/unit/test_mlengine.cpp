#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace agcml;

namespace {

std::vector<WindowSample> random_samples(std::size_t n, std::size_t window_len, int classes, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> x(0.0, 2.0);
    std::uniform_int_distribution<int> y(0, classes - 1);
    std::vector<WindowSample> out;
    for (std::size_t i = 0; i < n; ++i) {
        WindowSample w;
        w.window_len = window_len;
        w.label = y(rng);
        for (std::size_t j = 0; j < window_len * kMetricCount; ++j) w.features.push_back(x(rng));
        out.push_back(std::move(w));
    }
    return out;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)}); }

}  // namespace

TEST_SUITE("mlengine") {

TEST_CASE("scaler: constant features encode to zero, std floor applies") {
    auto s = random_samples(20, 1, 2, 1);
    for (auto& w : s) w.features[3] = 4.2;
    const auto sc = FeatureScaler::fit(s);
    CHECK(sc.stddev[3] == kScalerStdFloor);
    const auto enc = encode_features(s[5], sc);
    CHECK(enc[3] == 0.0);
    CHECK_THROWS_AS(FeatureScaler::fit({}), UsageError);
}

TEST_CASE("encoding shape and identity round trip") {
    const auto s = random_samples(3, 10, 2, 2);
    const auto id = FeatureScaler::identity(70);
    const auto enc = encode_features(s[0], id);
    CHECK(enc.size() == 70);
    CHECK(enc == s[0].features);
    WindowSample bad = s[0];
    bad.features.pop_back();
    CHECK_THROWS_AS(encode_features(bad, id), ShapeError);
}

TEST_CASE("softmax normalises") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> s(9);
        for (auto& v : s) v = u(rng);
        softmax_inplace(s);
        double sum = 0.0;
        for (double v : s) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
}

TEST_CASE("analytic gradient matches central differences") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> w0(0.0, 0.5);
    for (int inst = 0; inst < 20; ++inst) {
        const std::size_t classes = 2 + inst % 4;
        const auto samples = random_samples(6 + inst % 5, 1, static_cast<int>(classes), 100 + inst);
        const Batch b = make_batch(samples, FeatureScaler::fit(samples));
        std::vector<double> w(classes * b.d), bias(classes);
        for (auto& v : w) v = w0(rng);
        for (auto& v : bias) v = w0(rng);
        std::vector<double> cw;
        if (inst % 2) for (std::size_t c = 0; c < classes; ++c) cw.push_back(0.5 + 0.25 * static_cast<double>(c));
        const double l2 = inst % 3 == 0 ? 0.0 : 1e-2;
        const auto lg = loss_and_gradient(b, w, bias, classes, l2, cw);
        CHECK(lg.loss == doctest::Approx(oracle::reference_loss(b, w, bias, classes, l2, cw)).epsilon(1e-12));
        const auto fd = oracle::central_differences(b, w, bias, classes, l2, cw);
        for (std::size_t k = 0; k < w.size(); ++k) CHECK(rel_err(lg.grad_w[k], fd.w[k]) <= 1e-5);
        for (std::size_t k = 0; k < bias.size(); ++k) CHECK(rel_err(lg.grad_b[k], fd.b[k]) <= 1e-5);
    }
}

TEST_CASE("small learning rate gives a non-increasing loss") {
    const auto s = random_samples(80, 2, 4, 6);
    TrainHyper h;
    h.lr = 1e-3;
    h.epochs = 300;
    const auto r = train(s, {}, h, 3);
    REQUIRE(r.curve.size() == 300);
    for (std::size_t e = 1; e < r.curve.size(); ++e)
        CHECK(r.curve[e].train_loss <= r.curve[e - 1].train_loss + 1e-9);
}

TEST_CASE("zero learning rate leaves the weights alone") {
    const auto s = random_samples(40, 1, 3, 7);
    TrainHyper h;
    h.lr = 0.0;
    h.epochs = 20;
    const auto r = train(s, {}, h, 2);
    for (const auto& e : r.curve) CHECK(e.train_loss == r.curve.front().train_loss);
    TrainHyper h0 = h;
    h0.epochs = 0;
    CHECK(train(s, {}, h0, 2).model.weights == r.model.weights);
}

TEST_CASE("separable toy set is learned within 500 epochs") {
    const auto toy = oracle::separable_toy(100, 9);
    REQUIRE(oracle::perceptron_separates(toy));
    TrainHyper h;
    h.epochs = 500;
    const auto r = train(toy, {}, h, 1);
    CHECK(evaluate(r.model, toy).accuracy >= 0.99);
}

TEST_CASE("training is deterministic per seed") {
    const auto s = random_samples(60, 2, 5, 8);
    TrainHyper h;
    h.epochs = 50;
    const auto a = train(s, s, h, 4);
    const auto b = train(s, s, h, 4);
    CHECK(a.model.weights == b.model.weights);
    CHECK(a.model.bias == b.model.bias);
    h.seed = 99;
    CHECK(train(s, s, h, 4).model.weights != a.model.weights);
}

TEST_CASE("training errors and coverage warnings") {
    TrainHyper h;
    CHECK_THROWS_AS(train({}, {}, h, 3), UsageError);
    auto s = random_samples(10, 1, 2, 9);
    const auto r = train(s, {}, h, 3);
    CHECK(r.warnings.size() == 2);  // classes 2 and X never appear
    h.lr = 1e308;
    s[0].features[0] = 1e6;
    CHECK_THROWS_AS(train(s, {}, h, 3), DivergenceError);
    s[0].label = 7;
    h.lr = 0.1;
    CHECK_THROWS_AS(train(s, {}, h, 3), UsageError);
}

TEST_CASE("single-class data always predicts that class") {
    auto s = random_samples(30, 1, 1, 10);
    for (auto& w : s) w.label = 2;
    TrainHyper h;
    h.epochs = 100;
    const auto r = train(s, {}, h, 4);
    for (const auto& w : random_samples(50, 1, 1, 11)) CHECK(predict(r.model, w).class_id == 2);
}

TEST_CASE("predictions are total and ties go to the lowest class") {
    const auto m = oracle::constant_model(1, 3, 2);
    for (const auto& w : random_samples(20, 1, 2, 12)) {
        const auto p = predict(m, w);
        CHECK(p.class_id == 2);
        double sum = 0.0;
        for (double v : p.probabilities) {
            CHECK(std::isfinite(v));
            sum += v;
        }
        CHECK(sum == doctest::Approx(1.0));
    }
    CHECK(argmax_low(std::vector<double>{1.0, 3.0, 3.0, 0.0}) == 1);
    CHECK(argmax_low(std::vector<double>{2.0, 2.0}) == 0);
    auto tie = oracle::constant_model(1, 3, 0);
    tie.bias.assign(4, 0.5);
    CHECK(predict(tie, random_samples(1, 1, 2, 13)[0]).class_id == 0);
    CHECK_THROWS_AS(predict(m, random_samples(1, 2, 2, 13)[0]), ShapeError);
}

TEST_CASE("folded raw path equals the scaled path") {
    const auto s = random_samples(200, 2, 5, 14);
    TrainHyper h;
    h.epochs = 80;
    const auto m = train(s, {}, h, 4).model;
    const auto f = fold_scaler(m);
    for (const auto& w : random_samples(300, 2, 5, 15)) {
        const auto a = predict(m, w);
        const auto b = predict_raw(f, w.features);
        CHECK(a.class_id == b.class_id);
        for (std::size_t c = 0; c < a.probabilities.size(); ++c)
            CHECK(a.probabilities[c] == doctest::Approx(b.probabilities[c]).epsilon(1e-9));
    }
}

TEST_CASE("evaluation metrics") {
    const auto toy = oracle::separable_toy(50, 3);
    TrainHyper h;
    const auto m = train(toy, {}, h, 1).model;
    const auto ev = evaluate(m, toy);
    CHECK(ev.accuracy == 1.0);
    std::size_t trace = 0, total = 0;
    for (std::size_t i = 0; i < ev.confusion.size(); ++i)
        for (std::size_t j = 0; j < ev.confusion[i].size(); ++j) {
            total += ev.confusion[i][j];
            if (i == j) trace += ev.confusion[i][j];
        }
    CHECK(total == toy.size());
    CHECK(static_cast<double>(trace) / static_cast<double>(total) == ev.accuracy);
    CHECK_THROWS_AS(evaluate(m, {}), UsageError);
}

TEST_CASE("random model on balanced labels scores near chance") {
    const int classes = 5;
    std::vector<WindowSample> s = random_samples(5000, 1, classes, 16);
    for (std::size_t i = 0; i < s.size(); ++i) s[i].label = static_cast<int>(i % classes);
    TrainedModel m = oracle::constant_model(1, classes - 1, 0);
    std::mt19937_64 rng(17);
    std::normal_distribution<double> w(0.0, 1.0);
    for (auto& v : m.weights) v = w(rng);
    m.bias.assign(m.n_classes, 0.0);
    const double acc = evaluate(m, s).accuracy;
    const double p = 1.0 / classes;
    const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(s.size()));
    CHECK(std::abs(acc - p) <= 3.0 * sigma);
}

TEST_CASE("majority baseline") {
    auto ref = random_samples(10, 1, 1, 18);
    for (std::size_t i = 0; i < ref.size(); ++i) ref[i].label = i < 7 ? 3 : 1;
    auto test = random_samples(4, 1, 1, 19);
    for (std::size_t i = 0; i < test.size(); ++i) test[i].label = i == 0 ? 1 : 3;
    CHECK(majority_baseline(ref, test) == 0.75);
    CHECK_THROWS_AS(majority_baseline({}, test), UsageError);
}

TEST_CASE("model persistence round trip and load errors") {
    fixture::TempDir dir("model");
    const auto s = random_samples(120, 2, 4, 20);
    TrainHyper h;
    h.epochs = 60;
    const auto m = train(s, {}, h, 3).model;
    const auto path = dir.path() / "m.json";
    save_model(m, path);
    const auto back = load_model(path);
    CHECK(back.weights == m.weights);
    CHECK(back.bias == m.bias);
    CHECK(back.scaler.mean == m.scaler.mean);
    CHECK(back.meta.class_map == m.meta.class_map);
    for (const auto& w : random_samples(1000, 2, 4, 21)) CHECK(predict(back, w).class_id == predict(m, w).class_id);

    CHECK_THROWS_AS(load_model(dir.path() / "absent.json"), ModelNotFoundError);
    {
        std::ofstream(dir.path() / "broken.json") << "{ not json";
    }
    CHECK_THROWS_AS(load_model(dir.path() / "broken.json"), ModelLoadError);
    {
        std::ofstream(dir.path() / "old.json") << R"({"schema_version": "agcml-model/0"})";
    }
    CHECK_THROWS_AS(load_model(dir.path() / "old.json"), ModelLoadError);
    auto j = model_to_json(m);
    j.replace(j.find("\"bias\""), 6, "\"bia5\"");
    CHECK_THROWS_AS(model_from_json(j), ModelLoadError);
}

TEST_CASE("training curve csv") {
    std::ostringstream os;
    write_curve_csv(os, {{1, 0.5, 0.75}, {2, 0.4, 0.8}});
    CHECK(os.str().find("epoch,train_loss,val_accuracy") != std::string::npos);
}

}  // TEST_SUITE
