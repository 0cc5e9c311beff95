#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "fogsim/application.hpp"
#include "fogsim/errors.hpp"
#include "fogsim/scenarios.hpp"

namespace fogsim {
namespace {

std::string read_file(const std::string& name) {
    std::ifstream in(std::string(FOGSIM_TEST_DATA_DIR) + "/" + name, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

AppEdge edge(std::string src, std::string dst, std::string type, double cpu, double nw = 100) {
    AppEdge e;
    e.source = std::move(src);
    e.destination = std::move(dst);
    e.tuple_type = std::move(type);
    e.cpu_mi = cpu;
    e.nw_bytes = nw;
    return e;
}

Sensor sensor(std::string type, double interval_ms) {
    Sensor s;
    s.name = "s-" + type;
    s.tuple_type = std::move(type);
    s.gateway = "g";
    s.distribution = {TransmitKind::deterministic, interval_ms};
    return s;
}

// S -> A -(p)-> B -(p)-> C
ApplicationSpec chain(double p) {
    ApplicationSpec spec;
    spec.name = "chain";
    spec.sensor_types = {"S"};
    spec.modules = {AppModule{"A", 10, {{"S", "AB", {p}}}}, AppModule{"B", 10, {{"AB", "BC", {p}}}},
                    AppModule{"C", 10, {}}};
    spec.edges = {edge("S", "A", "S", 2000), edge("A", "B", "AB", 100), edge("B", "C", "BC", 100)};
    return spec;
}

TEST(Application, EegGraphIsValid) {
    const auto s = build_eeg(1, Headset::A);
    EXPECT_EQ(s.app.modules().size(), 3u);
    EXPECT_EQ(s.app.edges().size(), 7u);
    EXPECT_TRUE(check_application(s.app.spec()).empty());
    ASSERT_TRUE(s.app.find_module("Concentration Calculator"));
    EXPECT_TRUE(s.app.is_actuator_type("DISPLAY"));
    EXPECT_TRUE(s.app.sensor_edge("EEG"));
}

TEST(Application, DegenerateLoopRejected) {
    ApplicationSpec spec;
    spec.name = "one";
    spec.modules = {AppModule{"M", 10, {}}};
    spec.loops = {AppLoop{"l", {"M"}}};
    EXPECT_FALSE(check_application(spec).empty());
    EXPECT_THROW(build_application(spec), ValidationError);
}

TEST(Application, DanglingEndpointRejected) {
    auto spec = chain(1.0);
    spec.edges.push_back(edge("C", "Nowhere", "CX", 1));
    const auto v = check_application(spec);
    ASSERT_FALSE(v.empty());
    bool named = false;
    for (const auto& x : v) named = named || x.message.find("Nowhere") != std::string::npos;
    EXPECT_TRUE(named);
}

TEST(Application, UpDirectionCycleRejected) {
    auto spec = chain(1.0);
    spec.modules[2].selectivity.push_back({"BC", "CA", {1.0}});
    spec.edges.push_back(edge("C", "A", "CA", 1));
    EXPECT_THROW(build_application(spec), ValidationError);
}

TEST(Rates, UnitSelectivity) {
    const auto app = build_application(chain(1.0));
    const std::vector<Sensor> sensors{sensor("S", 10)};
    const auto r = propagate_rates(app, std::span<const Sensor>(sensors));
    EXPECT_DOUBLE_EQ(r.edge_rate[0], 0.1);
    EXPECT_DOUBLE_EQ(r.edge_rate[1], 0.1);
    EXPECT_DOUBLE_EQ(r.module_demand[0], 0.1 * 2000);  // 200 per sensor
}

TEST(Rates, TwoSensorsAdd) {
    const auto app = build_application(chain(1.0));
    const std::vector<Sensor> sensors{sensor("S", 10), sensor("S", 10)};
    const auto r = propagate_rates(app, std::span<const Sensor>(sensors));
    EXPECT_DOUBLE_EQ(r.module_demand[0], 400);
}

TEST(Rates, HalvingChain) {
    const auto app = build_application(chain(0.5));
    const std::vector<Sensor> sensors{sensor("S", 10)};
    const auto r = propagate_rates(app, std::span<const Sensor>(sensors));
    EXPECT_DOUBLE_EQ(r.edge_rate[1], 0.05);
    EXPECT_DOUBLE_EQ(r.edge_rate[2], 0.025);
}

TEST(Rates, UnconsumedSensorWarns) {
    const auto app = build_application(chain(1.0));
    const std::vector<Sensor> sensors{sensor("S", 10), sensor("OTHER", 5)};
    const auto r = propagate_rates(app, std::span<const Sensor>(sensors));
    EXPECT_FALSE(r.warnings.empty());
    EXPECT_DOUBLE_EQ(r.edge_rate[0], 0.1);
}

TEST(Selectivity, CertainAndImpossible) {
    Rng rng(1);
    const auto one = build_application(chain(1.0));
    const auto zero = build_application(chain(0.0));
    for (int i = 0; i < 100; ++i) {
        EXPECT_EQ(apply_selectivity(one, 0, 0, 7, rng).size(), 1u);
        EXPECT_TRUE(apply_selectivity(zero, 0, 0, 7, rng).empty());
    }
    const auto out = apply_selectivity(one, 0, 0, 7, rng);
    EXPECT_EQ(out[0].tuple_type, "AB");
    EXPECT_EQ(out[0].lineage, 7u);
    EXPECT_TRUE(apply_selectivity(one, 2, 2, 7, rng).empty());  // sink
}

// Binomial oracle: 10,000 trials at p = 0.3 stay within 3 sigma of 3000.
TEST(Selectivity, BinomialOracle) {
    const auto app = build_application(chain(0.3));
    Rng rng(12345);
    int hits = 0;
    for (int i = 0; i < 10000; ++i) hits += static_cast<int>(apply_selectivity(app, 0, 0, 0, rng).size());
    const double sigma = std::sqrt(10000 * 0.3 * 0.7);
    EXPECT_LE(std::abs(hits - 3000), 3 * sigma);
}

TEST(ApplicationJson, EegGolden) {
    const auto s = build_eeg(1, Headset::A);
    ApplicationDocument doc{s.app.spec(), {}};
    for (const auto& c : s.constraints) doc.pins.push_back({c.module, c.target});
    EXPECT_EQ(serialize_application_json(doc), read_file("eeg_app.json"));
    EXPECT_EQ(parse_application_json(read_file("eeg_app.json")), doc);
}

TEST(ApplicationJson, RoundTrip) {
    ApplicationDocument doc{chain(0.25), {{"A", "edge"}}};
    doc.spec.edges[2].direction = Direction::down;
    doc.spec.edges[1].kind = EdgeKind::periodic;
    doc.spec.edges[1].period_ms = 100;
    doc.spec.loops = {AppLoop{"loop", {"S", "A", "B"}}};
    EXPECT_EQ(parse_application_json(serialize_application_json(doc)), doc);
}

TEST(ApplicationJson, Rejections) {
    EXPECT_THROW(parse_application_json("[]"), ParseError);
    EXPECT_THROW(parse_application_json(R"({"schema_version": 1})"), ParseError);
}

}  // namespace
}  // namespace fogsim
