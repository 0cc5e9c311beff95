#include <gtest/gtest.h>

#include "fogsim/errors.hpp"
#include "fogsim/metrics.hpp"

namespace fogsim {
namespace {

TEST(LoopTracker, DelayFromOriginToEnd) {
    LoopTracker t({"loop"});
    t.on_origin(0, 1, SimTime::from_ms(100));
    t.on_end(0, 1, SimTime::from_ms(318));
    EXPECT_EQ(t.stats(0).completed, 1u);
    EXPECT_DOUBLE_EQ(*t.stats(0).average_ms(), 218.0);
    EXPECT_EQ(t.open(0), 0u);
}

TEST(LoopTracker, ZeroDelay) {
    LoopTracker t({"loop"});
    t.on_origin(0, 0, SimTime::from_ms(5));
    t.on_end(0, 0, SimTime::from_ms(5));
    EXPECT_DOUBLE_EQ(*t.stats(0).average_ms(), 0.0);
}

TEST(LoopTracker, Average) {
    LoopTracker t({"loop"});
    const int delays[] = {10, 20, 30};
    for (std::uint64_t i = 0; i < 3; ++i) {
        t.on_origin(0, i, SimTime::from_ms(1000));
        t.on_end(0, i, SimTime::from_ms(1000 + delays[i]));
    }
    EXPECT_DOUBLE_EQ(*t.stats(0).average_ms(), 20.0);
    EXPECT_EQ(t.stats(0).min_us, 10'000);
    EXPECT_EQ(t.stats(0).max_us, 30'000);
}

TEST(LoopTracker, Anomalies) {
    LoopTracker t({"a", "b"});
    EXPECT_FALSE(t.stats(0).average_ms().has_value());
    t.on_end(0, 9, SimTime::from_ms(1));  // no origin
    EXPECT_EQ(t.stats(0).orphan_ends, 1u);
    t.on_origin(0, 4, SimTime::from_ms(1));
    t.on_origin(0, 4, SimTime::from_ms(2));  // first origin wins
    t.on_end(0, 4, SimTime::from_ms(3));
    t.on_end(0, 4, SimTime::from_ms(4));  // second end of the same lineage
    EXPECT_EQ(t.stats(0).duplicate_ends, 1u);
    EXPECT_DOUBLE_EQ(*t.stats(0).average_ms(), 2.0);
    t.on_origin(0, 4, SimTime::from_ms(5));  // closed lineages stay closed
    EXPECT_EQ(t.open(0), 0u);
    EXPECT_EQ(t.stats(1).completed, 0u);
}

// Many interleaved lineages exercise growth and deletion in the open table.
TEST(LoopTracker, ManyOpenLineages) {
    LoopTracker t({"loop"});
    for (std::uint64_t i = 0; i < 5000; ++i) t.on_origin(0, i * 7919, SimTime::from_us(static_cast<std::int64_t>(i)));
    EXPECT_EQ(t.open(0), 5000u);
    for (std::uint64_t i = 0; i < 5000; i += 2) t.on_end(0, i * 7919, SimTime::from_us(10'000));
    EXPECT_EQ(t.open(0), 2500u);
    for (std::uint64_t i = 1; i < 5000; i += 2) t.on_end(0, i * 7919, SimTime::from_us(10'000));
    EXPECT_EQ(t.open(0), 0u);
    EXPECT_EQ(t.stats(0).completed, 5000u);
    EXPECT_EQ(t.stats(0).orphan_ends, 0u);
    EXPECT_EQ(t.stats(0).min_us, 10'000 - 4999);
}

TEST(NetworkUsage, ByteMilliseconds) {
    NetworkUsageAccount n;
    const auto l = n.add_link("a->b");
    n.record(l, 500, 4);
    EXPECT_DOUBLE_EQ(n.total(), 2000);
    n.record(l, 0, 4);
    EXPECT_DOUBLE_EQ(n.total(), 2000);
    EXPECT_DOUBLE_EQ(n.link_bytes(l), 500);
    for (int i = 0; i < 9; ++i) n.record(l, 500, 4);
    EXPECT_DOUBLE_EQ(n.total(), 10 * 2000);
}

constexpr double kBusy = 107.339;
constexpr double kIdle = 83.433;

TEST(Energy, IdleBusyAndHalf) {
    EnergyAccount e({{kIdle, kBusy}, {kIdle, kBusy}, {kIdle, kBusy}});
    e.update(1, SimTime::zero(), 1.0);
    e.update(2, SimTime::zero(), 0.5);
    e.flush(SimTime::from_ms(10'000));
    EXPECT_NEAR(e.joules(0), 834.33, 1e-9);
    EXPECT_NEAR(e.joules(1), 1073.39, 1e-9);
    EXPECT_NEAR(e.joules(2), 953.86, 1e-9);
}

TEST(Energy, PiecewiseAndErrors) {
    EnergyAccount e({{10, 20}});
    e.update(0, SimTime::from_ms(1000), 1.0);
    e.update(0, SimTime::from_ms(3000), 0.0);
    e.flush(SimTime::from_ms(4000));
    EXPECT_DOUBLE_EQ(e.joules(0), 10 * 4 + 10 * 2);
    EXPECT_THROW(e.update(0, SimTime::from_ms(4000), 1.5), ArgumentError);
    EXPECT_THROW(e.update(0, SimTime::from_ms(3999), 0.5), ArgumentError);
}

MetricsReport sample_report() {
    MetricsReport r;
    r.labels = {{"scenario", "eeg"}, {"seed", "42"}, {"note", "a,\"b\""}};
    r.duration_ms = 60000;
    r.loops = {LoopReport{"loop", 3, 12.5, 10.0, 15.25, 0, 1}, LoopReport{"empty", 0, {}, {}, {}, 0, 0}};
    r.network_usage = 123456.75;
    r.network_usage_per_s = 2057.6125;
    r.link_bytes = {{"a->b", 1000}, {"b->c", 0.5}};
    r.devices = {DeviceEnergy{"cloud", "cloud", 1234.5, 83.433, 107.339}};
    r.class_energy = {{"cloud", 1234.5}};
    r.tuples = {10, 8, 3, 1, 2};
    r.placement = {{"A", "cloud"}};
    r.events = 999;
    return r;
}

TEST(Report, JsonRoundTrip) {
    const auto r = sample_report();
    const auto text = report_to_json(r);
    EXPECT_EQ(report_from_json(text), r);
    EXPECT_EQ(report_to_json(report_from_json(text)), text);
    EXPECT_DOUBLE_EQ(r.total_energy(), 1234.5);
    EXPECT_DOUBLE_EQ(*r.primary_loop_delay_ms(), 12.5);
}

TEST(Report, Csv) {
    const auto csv = report_to_csv(sample_report());
    EXPECT_EQ(csv.rfind("metric,key,value\r\n", 0), 0u);
    EXPECT_NE(csv.find("\"a,\"\"b\"\"\""), std::string::npos);
    EXPECT_EQ(csv_field("plain"), "plain");
    EXPECT_EQ(csv_field("x\ny"), "\"x\ny\"");
}

TEST(Report, Timing) {
    EXPECT_NE(timing_to_json(RunTiming{12.5, 1024}).find("peak_rss_kb"), std::string::npos);
}

}  // namespace
}  // namespace fogsim
