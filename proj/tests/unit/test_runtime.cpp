#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace agcml;

namespace {

std::vector<PacketScenario> steady(std::size_t n, double wanted, PowerDbm blocker, double offset, Arrival arrival) {
    std::vector<PacketScenario> out;
    for (std::size_t k = 0; k < n; ++k) {
        PacketScenario s;
        s.wanted_dbm = wanted;
        s.blocker_dbm = blocker;
        s.offset_mhz = offset;
        s.arrival = blocker ? arrival : Arrival::Absent;
        s.seed = 1000 + k;
        out.push_back(s);
    }
    return out;
}

}  // namespace

TEST_SUITE("runtime") {

TEST_CASE("countermeasure hook") {
    CHECK(countermeasure_hook(0, 3) == CountermeasureAction::None);
    CHECK(countermeasure_hook(2, 3) == CountermeasureAction::None);
    CHECK(countermeasure_hook(3, 3) == CountermeasureAction::BlacklistChannel);
    CHECK_THROWS_AS(countermeasure_hook(1, 0), UsageError);
}

TEST_CASE("capture buffer enforces T1 < T2 < T3 and resets at freeze") {
    const Environment env;
    const auto pkt = steady(1, -60.0, std::nullopt, 0.0, Arrival::Absent)[0];
    const auto rec = receive_packet(pkt, 7, 7, env.table, env.budget);
    CaptureBuffer b;
    CHECK_THROWS_AS(b.capture_t2(rec), std::logic_error);
    b.capture_t1(rec);
    CHECK_THROWS_AS(b.capture_t1(rec), std::logic_error);
    CHECK_THROWS_AS(b.capture_t3(rec), std::logic_error);
    b.capture_t2(rec);
    const auto m = b.capture_t3(rec);
    CHECK(b.stage() == CaptureBuffer::Stage::T3);
    CHECK(m.features() == rec.metrics.features());
    b.reset();
    CHECK(b.stage() == CaptureBuffer::Stage::Empty);
}

TEST_CASE("interferer-free signal: both modes lose nothing") {
    const Environment env;
    const auto pkts = steady(40, -60.0, std::nullopt, 0.0, Arrival::Absent);
    const auto model = oracle::constant_model(10, 8, 7);
    const auto ref = run_signal(pkts, nullptr, {RuntimeMode::Reference, std::nullopt}, 10, env);
    const auto s4 = run_signal(pkts, &model, {RuntimeMode::Scenario4, std::nullopt}, 10, env);
    CHECK(ref.row.per_percent == 0.0);
    CHECK(s4.row.per_percent == 0.0);
}

TEST_CASE("reference mode: saturating blocker after the freeze corrupts the packet") {
    const Environment env;
    const auto pkts = steady(5, -60.0, -20.0, 12.0, Arrival::AfterFreeze);
    const auto r = run_signal(pkts, nullptr, {}, 10, env);
    for (const auto& rec : r.records) CHECK(rec.status == ReceptionStatus::BadReception);
    CHECK(r.row.per_percent == 100.0);
}

TEST_CASE("cold start: the first N packets run the native AGC") {
    const Environment env;
    const auto pkts = steady(25, -60.0, -35.0, 12.0, Arrival::BeforeFreeze);
    const auto model = oracle::constant_model(10, 8, 2);
    const auto r = run_signal(pkts, &model, {RuntimeMode::Scenario4, std::nullopt}, 10, env);
    for (std::size_t k = 0; k < 10; ++k) {
        CHECK_FALSE(r.trace[k].applied_class.has_value());
        CHECK(r.trace[k].warm_up_limit == env.table.max_index());
        CHECK(r.trace[k].frozen_index == r.trace[k].native_index);
    }
    for (std::size_t k = 10; k < 25; ++k) {
        REQUIRE(r.trace[k].applied_class.has_value());
        CHECK(r.trace[k].warm_up_limit == 2);
        CHECK(r.trace[k].frozen_index == 2);
        CHECK(r.trace[k].native_index <= 2);
    }
    CHECK(r.counters.predictions == 25 - 10 + 1);
    CHECK(r.counters.buffer_resets == 25);
}

TEST_CASE("X predictions fall back to native and feed the countermeasure") {
    const Environment env;
    const auto pkts = steady(16, -60.0, -35.0, 12.0, Arrival::BeforeFreeze);
    const auto model = oracle::constant_model(4, 8, 8);
    const auto r = run_signal(pkts, &model, {RuntimeMode::Scenario4, 3}, 4, env);
    for (std::size_t k = 4; k < 16; ++k) {
        CHECK(r.trace[k].frozen_index == r.trace[k].native_index);
        CHECK(r.trace[k].warm_up_limit == env.table.max_index());
    }
    // predictions at packets 3..15 are all X; the third in a row blacklists
    CHECK(r.counters.blacklist_events == 13 - 2);
    CHECK(r.row.blacklist_events == r.counters.blacklist_events);
    const auto none = run_signal(pkts, &model, {RuntimeMode::Scenario4, std::nullopt}, 4, env);
    CHECK(none.counters.blacklist_events == 0);
}

TEST_CASE("reference mode ignores any supplied model") {
    const Environment env;
    const auto pkts = steady(30, -60.0, -29.0, 12.0, Arrival::BeforeFreeze);
    const auto model = oracle::constant_model(10, 8, 0);
    const auto a = run_signal(pkts, nullptr, {}, 10, env);
    const auto b = run_signal(pkts, &model, {}, 10, env);
    CHECK(a.row.per_percent == b.row.per_percent);
    CHECK(b.counters.predictions == 0);
    for (std::size_t k = 0; k < pkts.size(); ++k) CHECK(a.records[k].metrics.features() == b.records[k].metrics.features());
}

TEST_CASE("prediction uses only past packets") {
    const Environment env;
    const auto sig = fixture::signal_of(WiFiPattern::defaults(), 300, 4);
    const auto train_w = make_windows(sig, {{0, 300}}, 10, 8);
    TrainHyper h;
    h.epochs = 100;
    const auto model = train(train_w, {}, h, 8).model;
    auto pkts = scenarios_of(sig);
    const auto fwd = run_signal(pkts, &model, {RuntimeMode::Scenario4, std::nullopt}, 10, env);
    // Changing packet k can only affect packets after k.
    auto edited = pkts;
    edited[150].blocker_dbm = -5.0;
    edited[150].arrival = Arrival::BeforeFreeze;
    const auto alt = run_signal(edited, &model, {RuntimeMode::Scenario4, std::nullopt}, 10, env);
    for (std::size_t k = 0; k <= 150; ++k) CHECK(alt.trace[k].applied_class == fwd.trace[k].applied_class);
    std::reverse(pkts.begin(), pkts.end());
    const auto rev = run_signal(pkts, &model, {RuntimeMode::Scenario4, std::nullopt}, 10, env);
    bool differs = false;
    for (std::size_t k = 0; k < pkts.size(); ++k)
        differs = differs || rev.trace[k].applied_class != fwd.trace[pkts.size() - 1 - k].applied_class;
    CHECK(differs);
}

TEST_CASE("model contract errors") {
    const Environment env;
    const auto pkts = steady(5, -60.0, std::nullopt, 0.0, Arrival::Absent);
    CHECK_THROWS_AS(run_signal(pkts, nullptr, {RuntimeMode::Scenario4, std::nullopt}, 10, env), ConfigurationError);
    const auto short_model = oracle::constant_model(5, 8, 7);
    CHECK_THROWS_AS(run_signal(pkts, &short_model, {RuntimeMode::Scenario4, std::nullopt}, 10, env),
                    ConfigurationError);
    const auto few_gains = oracle::constant_model(10, 4, 3);
    CHECK_THROWS_AS(run_signal(pkts, &few_gains, {RuntimeMode::Scenario4, std::nullopt}, 10, env),
                    ConfigurationError);
    CHECK_THROWS_AS(run_signal(pkts, nullptr, {RuntimeMode::Reference, 0}, 10, env), UsageError);
}

TEST_CASE("per sweep shape, bounds and determinism") {
    const Environment env;
    const auto model = oracle::constant_model(10, 8, 3);
    PerSweepSpec spec;
    const std::vector<RuntimeScenario> modes{{RuntimeMode::Reference, std::nullopt},
                                             {RuntimeMode::Scenario4, std::nullopt}};
    const auto a = per_sweep(spec, modes, &model, 10, env);
    const auto b = per_sweep(spec, modes, &model, 10, env);
    REQUIRE(a.rows.size() == 12);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        const auto& r = a.rows[i];
        CHECK(r.per_percent >= 0.0);
        CHECK(r.per_percent <= 100.0);
        CHECK(r.packets_sent == spec.packets * spec.repetitions);
        CHECK(r.per_percent == b.rows[i].per_percent);
        CHECK(r.per_std == b.rows[i].per_std);
        CHECK(r.mode == (i % 2 ? RuntimeMode::Scenario4 : RuntimeMode::Reference));
    }
    REQUIRE(a.find(-41.0, RuntimeMode::Scenario4) != nullptr);
    CHECK(a.find(-40.0, RuntimeMode::Scenario4) == nullptr);
}

TEST_CASE("negligible blocker gives zero PER in both modes") {
    const Environment env;
    const auto model = oracle::constant_model(10, 8, 7);
    PerSweepSpec spec;
    spec.blocker_dbm = {-100.0};
    const auto rep = per_sweep(spec, {{RuntimeMode::Reference, {}}, {RuntimeMode::Scenario4, {}}}, &model, 10, env);
    for (const auto& r : rep.rows) CHECK(r.per_percent == 0.0);
}

TEST_CASE("per sweep validation") {
    const Environment env;
    PerSweepSpec spec;
    spec.repetitions = 0;
    CHECK_THROWS_AS(per_sweep(spec, {{}}, nullptr, 10, env), UsageError);
    spec = PerSweepSpec{};
    CHECK_THROWS_AS(per_sweep(spec, {}, nullptr, 10, env), UsageError);
}

TEST_CASE("continuous signal repetitions use distinct seeds") {
    PerSweepSpec spec;
    const auto a = continuous_signal(spec, -29.0, 0);
    const auto b = continuous_signal(spec, -29.0, 1);
    REQUIRE(a.size() == spec.packets);
    CHECK(a[0].seed != b[0].seed);
    for (const auto& s : a) {
        CHECK(s.arrival == Arrival::BeforeFreeze);
        CHECK(*s.blocker_dbm == -29.0);
    }
}

TEST_CASE("report writers") {
    const Environment env;
    const auto model = oracle::constant_model(10, 8, 3);
    PerSweepSpec spec;
    spec.blocker_dbm = {-41.0, -35.0};
    const auto rep = per_sweep(spec, {{RuntimeMode::Reference, {}}, {RuntimeMode::Scenario4, {}}}, &model, 10, env);
    std::ostringstream table, rows, plot;
    write_per_table_csv(table, rep);
    write_per_rows_csv(rows, rep);
    write_per_gnuplot(plot, rep, RuntimeMode::Scenario4);
    const std::string t = table.str(), g = plot.str();
    CHECK(t.rfind("blocker_dbm,per_ref,per_s4,per_std_ref,per_std_s4\n", 0) == 0);
    CHECK(std::count(t.begin(), t.end(), '\n') == 3);
    CHECK(rows.str().find(kPerSchema) != std::string::npos);
    CHECK(std::count(g.begin(), g.end(), '\n') == 3);
    CHECK(runtime_mode_from_string(to_string(RuntimeMode::Scenario4)) == RuntimeMode::Scenario4);
    CHECK_THROWS_AS(runtime_mode_from_string("scenario3"), UsageError);
}

}  // TEST_SUITE
