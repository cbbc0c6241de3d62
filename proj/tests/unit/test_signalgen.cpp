#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace agcml;

namespace {

std::vector<std::pair<Band, std::size_t>> band_runs(const SyntheticSignal& sig) {
    std::vector<std::pair<Band, std::size_t>> runs;
    for (const auto& p : sig.packets) {
        if (!runs.empty() && runs.back().first == p.band) ++runs.back().second;
        else runs.push_back({p.band, 1});
    }
    return runs;
}

std::set<std::size_t> packets_of(const std::vector<WindowSample>& ws) {
    std::set<std::size_t> s;
    for (const auto& w : ws)
        for (std::size_t k = w.first_packet; k <= w.first_packet + w.window_len; ++k) s.insert(k);
    return s;
}

}  // namespace

TEST_SUITE("signalgen") {

TEST_CASE("band boundaries") {
    CHECK(band_of(0.0) == Band::High);
    CHECK(band_of(-23.0) == Band::High);
    CHECK(band_of(-23.5) == Band::Mean);
    CHECK(band_of(-46.0) == Band::Mean);
    CHECK(band_of(-46.5) == Band::Weak);
    CHECK(band_of(-47.0) == Band::Weak);
    CHECK(band_of(-70.0) == Band::Weak);
    CHECK(band_of(-71.0) == Band::Weak);
    CHECK(band_of(-71.5) == Band::Absent);
    CHECK(band_of(std::nullopt) == Band::Absent);
    for (auto b : {Band::High, Band::Mean, Band::Weak, Band::Absent}) CHECK(band_from_string(to_string(b)) == b);
}

TEST_CASE("pattern validation and cyclic band lookup") {
    CHECK_THROWS_AS(WiFiPattern{}.validate(), UsageError);
    CHECK_THROWS_AS((WiFiPattern{{{Band::High, 0}}}.validate()), UsageError);
    const WiFiPattern p{{{Band::High, 3}, {Band::Absent, 7}}};
    CHECK(p.band_at(0) == Band::High);
    CHECK(p.band_at(2) == Band::High);
    CHECK(p.band_at(3) == Band::Absent);
    CHECK(p.band_at(10) == Band::High);
    CHECK(p.run_starts_at(0));
    CHECK(p.run_starts_at(3));
    CHECK_FALSE(p.run_starts_at(4));
    CHECK(p.run_starts_at(13));
}

TEST_CASE("single absent band gives interferer-free packets") {
    const auto sig = fixture::signal_of(WiFiPattern{{{Band::Absent, 5}}}, 5, 3);
    REQUIRE(sig.size() == 5);
    for (const auto& p : sig.packets) CHECK(band_of(p.config.config.blocker_dbm) == Band::Absent);
}

TEST_CASE("alternating pattern follows the runs in order") {
    const auto sig = fixture::signal_of(WiFiPattern{{{Band::High, 3}, {Band::Absent, 7}}}, 20, 3);
    const auto runs = band_runs(sig);
    REQUIRE(runs.size() == 4);
    CHECK(runs[0] == std::pair<Band, std::size_t>{Band::High, 3});
    CHECK(runs[1] == std::pair<Band, std::size_t>{Band::Absent, 7});
    CHECK(runs[2] == std::pair<Band, std::size_t>{Band::High, 3});
    CHECK(runs[3] == std::pair<Band, std::size_t>{Band::Absent, 7});
}

TEST_CASE("synthesis is deterministic and seed sensitive") {
    const auto a = fixture::signal_of(WiFiPattern::defaults(), 300, 9);
    const auto b = fixture::signal_of(WiFiPattern::defaults(), 300, 9);
    const auto c = fixture::signal_of(WiFiPattern::defaults(), 300, 10);
    std::ostringstream sa, sb, sc;
    write_signal_csv(sa, a);
    write_signal_csv(sb, b);
    write_signal_csv(sc, c);
    CHECK(sa.str() == sb.str());
    CHECK(sa.str() != sc.str());
}

TEST_CASE("band fidelity and shared wanted power") {
    const auto sig = fixture::signal_of(WiFiPattern::defaults(), 1000, 4);
    for (const auto& p : sig.packets) {
        CHECK(band_of(p.config.config.blocker_dbm) == p.band);
        CHECK(p.config.config.wanted_dbm == sig.reference_wanted_dbm);
        CHECK(p.observed.scenario.wanted_dbm == sig.reference_wanted_dbm);
    }
}

TEST_CASE("one configuration per band run") {
    const auto sig = fixture::signal_of(WiFiPattern::defaults(), 400, 6);
    const auto& pat = sig.pattern;
    for (std::size_t k = 1; k < sig.size(); ++k) {
        if (pat.run_starts_at(k)) continue;
        CHECK(sig.packets[k].config.config.blocker_dbm == sig.packets[k - 1].config.config.blocker_dbm);
        CHECK(sig.packets[k].config.config.offset_mhz == sig.packets[k - 1].config.config.offset_mhz);
    }
}

TEST_CASE("missing band coverage names the band") {
    std::vector<LabeledConfig> pool;
    for (const auto& lc : fixture::default_pool())
        if (band_of(lc.config.blocker_dbm) != Band::Weak) pool.push_back(lc);
    CHECK_THROWS_WITH_AS(synthesize_signal(WiFiPattern::defaults(), pool, 100, 1, Environment{}),
                         doctest::Contains("weak"), CoverageError);
}

TEST_CASE("blocked split examples") {
    SUBCASE("100 packets, 1 fold: one contiguous test run of 30") {
        const auto plan = blocked_split(100, 1, 0.30, 7, 10);
        REQUIRE(plan.test.size() == 1);
        CHECK(plan.test[0].size() == 30);
    }
    SUBCASE("1000 packets, 10 folds: 30 test packets each") {
        const auto plan = blocked_split(1000, 10, 0.30, 7, 10);
        REQUIRE(plan.test.size() == 10);
        for (std::size_t f = 0; f < 10; ++f) {
            CHECK(plan.test[f].size() == 30);
            CHECK(plan.folds[f].begin <= plan.test[f].begin);
            CHECK(plan.test[f].end <= plan.folds[f].end);
        }
    }
    SUBCASE("seeds move the test stretch, not its size") {
        const auto a = blocked_split(1000, 5, 0.30, 1, 10);
        const auto b = blocked_split(1000, 5, 0.30, 2, 10);
        bool moved = false;
        for (std::size_t f = 0; f < 5; ++f) {
            CHECK(a.test[f].size() == b.test[f].size());
            moved = moved || a.test[f].begin != b.test[f].begin;
        }
        CHECK(moved);
    }
    SUBCASE("too-short folds are sizing errors") {
        CHECK_THROWS_AS(blocked_split(50, 5, 0.30, 1, 10), SizingError);
        CHECK_THROWS_AS(blocked_split(50, 0, 0.30, 1, 10), UsageError);
    }
}

TEST_CASE("split properties over random sizes") {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<std::size_t> folds(1, 10), n(1, 12), mult(4, 60);
    for (int t = 0; t < 200; ++t) {
        const std::size_t f = folds(rng), w = n(rng);
        const std::size_t len = f * (w + 2 + mult(rng));
        const auto plan = blocked_split(len, f, 0.30, static_cast<std::uint64_t>(t), w);
        std::vector<int> owner(len, 0);
        for (const auto& r : plan.train)
            for (std::size_t k = r.begin; k < r.end; ++k) ++owner[k];
        for (const auto& r : plan.test)
            for (std::size_t k = r.begin; k < r.end; ++k) owner[k] += 10;
        for (int o : owner) CHECK((o == 1 || o == 10));
        for (std::size_t i = 0; i < f; ++i) {
            const double fl = static_cast<double>(plan.folds[i].size());
            std::size_t tl = 0;
            for (const auto& r : plan.test)
                if (plan.folds[i].contains(r.begin)) tl += r.size();
            CHECK(std::abs(static_cast<double>(tl) - 0.30 * fl) <= 1.0);
        }
    }
}

TEST_CASE("window counts") {
    const auto sig = fixture::signal_of(WiFiPattern::defaults(), 200, 2);
    const int g = 8;
    CHECK(make_windows(sig, {{0, 11}}, 10, g).size() == 1);
    CHECK(make_windows(sig, {{0, 10}}, 10, g).empty());
    WindowStats st;
    make_windows(sig, {{0, 10}, {20, 45}}, 10, g, &st);
    CHECK(st.short_runs == 1);
    CHECK(st.emitted == 15);
    CHECK_THROWS_AS(make_windows(sig, {{0, 201}}, 10, g), UsageError);
    CHECK_THROWS_AS(make_windows(sig, {{0, 20}}, 0, g), UsageError);
}

TEST_CASE("window count formula holds for random runs") {
    const auto sig = fixture::signal_of(WiFiPattern::defaults(), 600, 5);
    std::vector<bool> excluded;
    for (const auto& p : sig.packets) excluded.push_back(p.config.excluded);
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<std::size_t> len(1, 80), n(1, 15);
    for (int t = 0; t < 200; ++t) {
        std::vector<Run> runs;
        std::size_t at = 0;
        while (true) {
            const std::size_t l = len(rng);
            if (at + l > sig.size()) break;
            runs.push_back({at, at + l});
            at += l + (t % 3);
        }
        const std::size_t w = n(rng);
        const auto ws = make_windows(sig, runs, w, 8);
        CHECK(ws.size() == oracle::enumerate_windows(runs, w, excluded));
        std::size_t formula = 0;
        for (const auto& r : runs) formula += r.size() > w ? r.size() - w : 0;
        CHECK(ws.size() == formula);
    }
}

TEST_CASE("window contents follow the signal") {
    const auto sig = fixture::signal_of(WiFiPattern::defaults(), 100, 8);
    const auto ws = make_windows(sig, {{5, 40}}, 4, 8);
    REQUIRE(!ws.empty());
    const auto& w = ws[3];
    CHECK(w.first_packet == 8);
    CHECK(w.features.size() == 4 * kMetricCount);
    CHECK(w.label == class_id(sig.packets[12].config.agc_optim, 8));
    const auto f = sig.packets[9].observed.metrics.features();
    for (std::size_t j = 0; j < kMetricCount; ++j) CHECK(w.features[kMetricCount + j] == f[j]);
}

TEST_CASE("class ids") {
    CHECK(class_id(3, 8) == 3);
    CHECK(class_id(std::nullopt, 8) == 8);
    CHECK(class_from_id(8, 8) == std::nullopt);
    CHECK(class_from_id(0, 8) == 0);
    CHECK_THROWS_AS(class_from_id(9, 8), UsageError);
}

TEST_CASE("crossval runs") {
    const auto sig = fixture::signal_of(WiFiPattern::defaults(), 1000, 3);
    const auto runs = crossval_runs(sig, 5, 3, 77, 10, 8);
    REQUIRE(runs.size() == 3);
    CHECK(runs[0].plan.test != runs[1].plan.test);
    CHECK(runs[1].plan.test != runs[2].plan.test);
    const auto single = crossval_runs(sig, 5, 1, 77, 10, 8);
    CHECK(single[0].plan.test == blocked_split(1000, 5, 0.30, 77, 10).test);
    CHECK_THROWS_AS(crossval_runs(sig, 5, 0, 77, 10, 8), UsageError);
    for (const auto& cv : runs) {
        std::size_t covered = 0;
        for (const auto& r : cv.plan.train) covered += r.size();
        for (const auto& r : cv.plan.test) covered += r.size();
        CHECK(covered == sig.size());
        std::size_t balanced = 0;
        for (const auto& [c, n] : cv.train_balance) balanced += n;
        for (const auto& [c, n] : cv.test_balance) balanced += n;
        CHECK(balanced == sig.size());
    }
}

TEST_CASE("no train window touches a test packet") {
    const auto sig = fixture::signal_of(WiFiPattern::defaults(), 1200, 3);
    for (const auto& cv : crossval_runs(sig, 5, 3, 5, 10, 8)) {
        const auto tr = packets_of(make_windows(sig, cv.plan.train, 10, 8));
        const auto te = packets_of(make_windows(sig, cv.plan.test, 10, 8));
        for (std::size_t k : te) CHECK(tr.count(k) == 0);
    }
}

TEST_CASE("validation tails are carved from train pieces") {
    const std::vector<Run> pieces{{0, 100}, {130, 150}, {200, 400}};
    const auto [fit, val] = holdout_tail(pieces, 0.15, 10);
    REQUIRE(fit.size() == 3);
    REQUIRE(val.size() == 2);
    CHECK(fit[0] == Run{0, 85});
    CHECK(val[0] == Run{85, 100});
    CHECK(fit[1] == Run{130, 150});
    CHECK(val[1] == Run{370, 400});
}

TEST_CASE("windows csv round trip is exact") {
    const auto sig = fixture::signal_of(WiFiPattern::defaults(), 120, 8);
    const auto ws = make_windows(sig, {{0, 120}}, 10, 8);
    std::stringstream ss;
    write_windows_csv(ss, ws);
    const auto back = read_windows_csv(ss);
    REQUIRE(back.size() == ws.size());
    for (std::size_t i = 0; i < ws.size(); ++i) {
        CHECK(back[i].features == ws[i].features);
        CHECK(back[i].label == ws[i].label);
        CHECK(back[i].first_packet == ws[i].first_packet);
        CHECK(back[i].window_len == ws[i].window_len);
    }
    std::istringstream bad("# schema: other/9\n");
    CHECK_THROWS_AS(read_windows_csv(bad), UsageError);
}

}  // TEST_SUITE
