// Acceptance checks. Prints one PASS/FAIL line per criterion (indented lines
// are supporting detail) and exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "fogsim/errors.hpp"
#include "fogsim/placement.hpp"
#include "fogsim/processor.hpp"
#include "fogsim/runtime.hpp"
#include "fogsim/scenarios.hpp"

namespace {

using namespace fogsim;

// Tolerances and limits.
constexpr double kCloudFloorMs = 218.0;          // 2 x (6 + 2 + 4 + 100) - 6, strict lower bound
constexpr double kDeskWallLimitMs = 10'000;      // per desk-scale cell
constexpr std::int64_t kPsQuantumUs = 1;         // clock quantum for the PS oracle
constexpr double kScaleWallLimitS = 60.0;
constexpr double kScaleRatioLimit = 25.0;
constexpr double kExpMeanMs = 5.0;
constexpr double kExpRelTolerance = 0.05;
constexpr std::size_t kExpMinEmissions = 100'000;
constexpr Duration kDeskDuration = Duration::seconds(60);

int failures = 0;

void detail(const std::string& line) { std::printf("    %s\n", line.c_str()); }

void verdict(int id, bool ok, const std::string& what) {
    std::printf("%s  criterion %d: %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

struct CellKey {
    std::string scenario;
    std::string variant;  // headset, or "-"
    int config;
    std::string placement;
    auto operator<=>(const CellKey&) const = default;
};

std::string label(const CellKey& k) {
    return fmt::format("{} c{} {} {}", k.scenario, k.config, k.variant, k.placement);
}

std::map<CellKey, ScenarioResult> grid;

void run_grid() {
    for (const std::string scenario : {"eeg", "surveillance"}) {
        const std::vector<std::string> variants = scenario == "eeg" ? std::vector<std::string>{"A", "B"}
                                                                    : std::vector<std::string>{"-"};
        for (const auto& v : variants) {
            for (int c = 1; c <= 5; ++c) {
                for (const std::string placement : {"cloud", "edgeward"}) {
                    ScenarioSpec spec;
                    spec.name = scenario;
                    spec.config = c;
                    if (v != "-") spec.headset = parse_headset(v);
                    spec.placement = placement;
                    spec.duration = kDeskDuration;
                    grid.emplace(CellKey{scenario, v, c, placement}, run_scenario(spec));
                }
            }
        }
    }
}

const MetricsReport& cell(const std::string& s, const std::string& v, int c, const std::string& p) {
    return grid.at(CellKey{s, v, c, p}).report;
}

std::vector<std::pair<std::string, std::string>> series() {
    return {{"eeg", "A"}, {"eeg", "B"}, {"surveillance", "-"}};
}

// ------------------------------------------------------------------ 1

void criterion_loop_latency() {
    bool ok = true;
    for (const auto& [s, v] : series()) {
        for (int c = 1; c <= 5; ++c) {
            const auto& cloud = cell(s, v, c, "cloud");
            const auto& edge = cell(s, v, c, "edgeward");
            const auto dc = cloud.primary_loop_delay_ms();
            const auto de = edge.primary_loop_delay_ms();
            const bool pass = dc && de && *de < *dc;
            ok = ok && pass;
            detail(fmt::format("{} c{} {}: edgeward {:.3f} ms, cloud {:.3f} ms{}", s, c, v, de.value_or(NAN),
                               dc.value_or(NAN), pass ? "" : "  <-- violates"));
            if (c <= 3) {
                for (const std::string p : {"cloud", "edgeward"}) {
                    const double wall = grid.at(CellKey{s, v, c, p}).timing.wall_ms;
                    if (wall >= kDeskWallLimitMs) {
                        ok = false;
                        detail(fmt::format("{} c{} {} {}: wall {:.0f} ms over the desk limit", s, c, v, p, wall));
                    }
                }
            }
        }
    }
    verdict(1, ok, "edge-ward loop delay < cloud-only for every config, headset and scenario");
}

// ------------------------------------------------------------------ 2

void criterion_cloud_floor() {
    bool ok = true;
    double lowest = INFINITY;
    for (const std::string v : {"A", "B"}) {
        for (int c = 1; c <= 5; ++c) {
            const auto d = cell("eeg", v, c, "cloud").primary_loop_delay_ms();
            if (!d || *d < kCloudFloorMs) ok = false;
            if (d) lowest = std::min(lowest, *d);
        }
    }
    detail(fmt::format("lowest cloud-only EEG loop average over configs 1-5, A/B: {:.3f} ms (floor {} ms)", lowest,
                       kCloudFloorMs));
    verdict(2, ok, "cloud-only EEG loop delay >= 218 ms analytic floor");
}

// ------------------------------------------------------------------ 3

// Latency of a named hop recomputed from the topology, independent of the runtime.
double hop_latency_ms(const PhysicalTopology& t, const std::string& link) {
    const auto arrow = link.find("->");
    const std::string a = link.substr(0, arrow);
    const std::string b = link.substr(arrow + 2);
    for (const auto& s : t.sensors())
        if (s.name == a) return s.gateway_latency_ms;
    for (const auto& x : t.actuators())
        if (x.name == b) return x.gateway_latency_ms;
    const DeviceId da = t.device_id(a);
    const DeviceId db = t.device_id(b);
    if (t.parent(da) == db) return t.device(da).uplink_latency_ms;
    if (t.parent(db) == da) return t.device(db).uplink_latency_ms;
    throw std::runtime_error("link '" + link + "' joins unrelated nodes");
}

bool replay_matches(const std::string& scenario, int config, const std::string& placement) {
    ScenarioSpec spec;
    spec.name = scenario;
    spec.config = config;
    spec.placement = placement;
    auto built = build_scenario(spec);
    const auto map = PolicyRegistry::instance().create(placement)->place(built.app, built.topology, built.constraints);
    Simulation sim(built.topology, built.app, map, RuntimeConfig{Duration::millis(1), spec.seed, true});
    sim.run_until(SimTime::zero() + Duration::seconds(10));
    const auto report = sim.finalize();

    double total = 0;
    std::map<std::string, double> bytes;
    for (const auto& tr : sim.transfers()) {
        const auto& name = sim.network().link_name(tr.link);
        total += tr.bytes * hop_latency_ms(built.topology, name);
        bytes[name] += tr.bytes;
    }
    bool ok = total == report.network_usage;
    for (const auto& [name, b] : report.link_bytes) {
        const auto it = bytes.find(name);
        ok = ok && (it == bytes.end() ? b == 0 : it->second == b);
    }
    detail(fmt::format("replay {} c{} {}: {} transfers, replay {:.17g} vs report {:.17g}{}", scenario, config,
                       placement, sim.transfers().size(), total, report.network_usage, ok ? "" : "  <-- mismatch"));
    return ok;
}

void criterion_network_usage() {
    bool ok = true;
    for (const auto& [s, v] : series()) {
        for (int c = 1; c <= 5; ++c) {
            const double uc = cell(s, v, c, "cloud").network_usage;
            const double ue = cell(s, v, c, "edgeward").network_usage;
            const bool pass = uc > ue;
            ok = ok && pass;
            detail(fmt::format("{} c{} {}: cloud {:.6g}, edgeward {:.6g}{}", s, c, v, uc, ue,
                               pass ? "" : "  <-- violates"));
            if (c > 1) {
                for (const std::string p : {"cloud", "edgeward"}) {
                    if (!(cell(s, v, c, p).network_usage > cell(s, v, c - 1, p).network_usage)) {
                        ok = false;
                        detail(fmt::format("{} {} {}: usage not increasing from c{} to c{}", s, v, p, c - 1, c));
                    }
                }
            }
        }
    }
    for (const std::string s : {"eeg", "surveillance"})
        for (const std::string p : {"cloud", "edgeward"}) ok = replay_matches(s, 2, p) && ok;
    verdict(3, ok, "network usage cloud > edge-ward, increasing in config, exact against transfer replay");
}

// ------------------------------------------------------------------ 4

double gateway_energy(const MetricsReport& r) {
    double sum = 0;
    for (const auto& [cls, j] : r.class_energy)
        if (cls.size() >= 7 && cls.ends_with("gateway")) sum += j;
    return sum;
}

void criterion_energy() {
    bool ok = true;
    for (const auto& [s, v] : series()) {
        for (int c = 2; c <= 5; ++c) {
            const auto& cloud = cell(s, v, c, "cloud");
            const auto& edge = cell(s, v, c, "edgeward");
            const double cc = cloud.class_energy.at("cloud");
            const double ce = edge.class_energy.at("cloud");
            const double gc = gateway_energy(cloud);
            const double ge = gateway_energy(edge);
            const bool cloud_ok = ce < cc;
            const bool gw_ok = ge > gc;
            ok = ok && cloud_ok && gw_ok;
            detail(fmt::format("{} c{} {}: cloud device {:.1f} -> {:.1f} J{}; gateways {:.1f} -> {:.1f} J{}", s, c, v,
                               cc, ce, cloud_ok ? "" : " <-- not lower", gc, ge, gw_ok ? "" : " <-- not higher"));
        }
    }
    std::size_t checked = 0;
    for (const auto& [key, result] : grid) {
        const double t = result.report.duration_ms / 1000.0;
        for (const auto& d : result.report.devices) {
            ++checked;
            if (!(d.idle_w * t <= d.joules && d.joules <= d.busy_w * t)) {
                ok = false;
                detail(fmt::format("{} {}: {} J outside [{}, {}]", label(key), d.device, d.joules, d.idle_w * t,
                                   d.busy_w * t));
            }
        }
    }
    detail(fmt::format("idle x T <= E <= busy x T checked on {} device reports", checked));
    verdict(4, ok, "energy moves from the cloud to gateways under edge-ward (configs 2-5); per-device bounds hold");
}

// ------------------------------------------------------------------ 5

// Two sensors feed two modules on one 3000 MIPS device (1 s capacity base).
// Jobs of 2000 MI arrive at 2.0 s and 2.5 s. Closed form: the first has
// 500 MI left at 2.5 s and shares 1500 MIPS, finishing at 2.5 + 1/3 s; the
// second then has 1500 MI left alone, finishing 0.5 s later.
void criterion_processor_sharing() {
    FogDevice cpu{"cpu", std::nullopt, 3000, 1000, 1000, 0, 1000, 2, 1, 0, "cloud"};
    const PhysicalTopology topo({cpu},
                                {Sensor{"s1", "S1", "cpu", 0, {TransmitKind::deterministic, 2000}, 0, 0},
                                 Sensor{"s2", "S2", "cpu", 0, {TransmitKind::deterministic, 2500}, 0, 0}},
                                {});
    ApplicationSpec spec;
    spec.name = "ps-oracle";
    spec.sensor_types = {"S1", "S2"};
    spec.modules = {AppModule{"M1", 10, {}}, AppModule{"M2", 10, {}}};
    spec.edges = {AppEdge{"S1", "M1", "S1", 2000, 0}, AppEdge{"S2", "M2", "S2", 2000, 0}};
    spec.loops = {AppLoop{"one", {"S1", "M1"}}, AppLoop{"two", {"S2", "M2"}}};
    const auto app = build_application(spec);
    Simulation sim(topo, app, place_cloud_only(app, topo, {}), RuntimeConfig{Duration::seconds(1), 0, false});
    sim.run_until(SimTime::from_ms(3900));

    const double t1 = 2.5e6 + 1e6 / 3.0;
    const double t2 = t1 + 0.5e6;
    const auto& a = sim.loops().stats(0);
    const auto& b = sim.loops().stats(1);
    const double got1 = 2.0e6 + static_cast<double>(a.min_us);
    const double got2 = 2.5e6 + static_cast<double>(b.min_us);
    const bool ok = a.completed == 1 && b.completed == 1 && std::abs(got1 - t1) <= kPsQuantumUs &&
                    std::abs(got2 - t2) <= kPsQuantumUs;
    detail(fmt::format("completions at {:.0f} us and {:.0f} us; analytic {:.3f} us and {:.3f} us", got1, got2, t1, t2));

    // The same trace straight on the processor, from t = 0.
    SharedProcessor p(3000, Duration::seconds(1));
    std::vector<std::uint64_t> done;
    p.submit(SimTime::zero(), 1, 2000);
    p.collect_finished(SimTime::from_ms(500), done);
    p.submit(SimTime::from_ms(500), 2, 2000);
    const auto c1 = *p.next_completion();
    p.collect_finished(c1, done);
    const auto c2 = *p.next_completion();
    const bool ok_direct = std::abs(static_cast<double>(c1.us()) - 1e6 * 5 / 6) <= kPsQuantumUs &&
                           std::abs(static_cast<double>(c2.us()) - 1e6 * 4 / 3) <= kPsQuantumUs;
    detail(fmt::format("processor alone: {} us and {} us", c1.us(), c2.us()));
    verdict(5, ok && ok_direct, "processor-sharing completions within one clock quantum of the closed form");
}

// ------------------------------------------------------------------ 6

FogDevice node(std::string name, std::optional<std::string> parent, double mips) {
    return FogDevice{std::move(name), std::move(parent), mips, 1000, 1000, 1000, 1000, 2, 1, 1, "node"};
}

Sensor leaf_sensor(std::string gw) {
    return Sensor{"s@" + gw, "S", gw, 1, {TransmitKind::deterministic, 10}, 1000, 100};
}

void criterion_algorithm_trace() {
    // S -> M1 (1000 MI) -> M2 (2500 MI); one 0.1/ms sensor per leaf, so each
    // leaf path asks 100 for M1 and 250 for M2.
    ApplicationSpec spec;
    spec.name = "two-stage";
    spec.sensor_types = {"S"};
    spec.modules = {AppModule{"M1", 10, {{"S", "X", {1.0}}}}, AppModule{"M2", 10, {}}};
    spec.edges = {AppEdge{"S", "M1", "S", 1000, 100}, AppEdge{"M1", "M2", "X", 2500, 100}};
    const auto app = build_application(spec);
    auto topo = [](double gw, double leaf) {
        return PhysicalTopology({node("cloud", std::nullopt, 10000), node("gw", "cloud", gw),
                                 node("leaf-1", "gw", leaf), node("leaf-2", "gw", leaf)},
                                {leaf_sensor("leaf-1"), leaf_sensor("leaf-2")}, {});
    };
    auto trace = [&](const PhysicalTopology& t, EdgewardOptions o, PlacementMap* map = nullptr) {
        std::vector<PlacementStep> steps;
        auto m = place_edge_ward(app, t, {}, compute_demands(app, t), o, &steps);
        if (map) *map = m;
        return steps;
    };
    using A = PlacementAction;
    bool ok = true;
    auto check = [&](const std::string& name, bool pass) {
        detail(fmt::format("{}: {}", name, pass ? "matches" : "differs"));
        ok = ok && pass;
    };

    // Hand trace 1: merge, then push up (500 >= 300 on the gateway).
    check("merge and push-up", trace(topo(300, 100), {}) == std::vector<PlacementStep>{
                                                               {"leaf-1", "leaf-1", "M1", A::placed, "leaf-1", 100},
                                                               {"leaf-1", "gw", "M2", A::placed, "gw", 250},
                                                               {"leaf-2", "leaf-2", "M1", A::placed, "leaf-2", 100},
                                                               {"leaf-2", "leaf-2", "M2", A::pushed_up, "cloud", 500},
                                                           });
    // Hand trace 2: merged instance fits where it is (500 < 600).
    check("merge in place", trace(topo(600, 100), {}) == std::vector<PlacementStep>{
                                                            {"leaf-1", "leaf-1", "M1", A::placed, "leaf-1", 100},
                                                            {"leaf-1", "gw", "M2", A::placed, "gw", 250},
                                                            {"leaf-2", "leaf-2", "M1", A::placed, "leaf-2", 100},
                                                            {"leaf-2", "leaf-2", "M2", A::merged, "gw", 500},
                                                        });
    // Hand trace 3: single-pass eligibility puts M2 on the gateway even though the leaf has room;
    // M2 is first considered when the walk reaches the gateway.
    check("single pass", trace(topo(10000, 1000), {false}) == std::vector<PlacementStep>{
                                                                  {"leaf-1", "leaf-1", "M1", A::placed, "leaf-1", 100},
                                                                  {"leaf-1", "gw", "M2", A::placed, "gw", 250},
                                                                  {"leaf-2", "leaf-2", "M1", A::placed, "leaf-2", 100},
                                                                  {"leaf-2", "gw", "M2", A::merged, "gw", 500},
                                                              });
    // Hand trace 4: infeasible everywhere.
    bool threw = false;
    try {
        const PhysicalTopology tiny({node("cloud", std::nullopt, 50), node("leaf", "cloud", 50)},
                                    {leaf_sensor("leaf")}, {});
        place_edge_ward(app, tiny, {}, compute_demands(app, tiny));
    } catch (const PlacementError& e) {
        threw = e.module() == "M1" && e.residual_demand() == 100;
    }
    check("infeasible module reported", threw);
    verdict(6, ok, "edge-ward placement reproduces the 4-device hand traces");
}

// ------------------------------------------------------------------ 7

void criterion_determinism() {
    bool ok = true;
    std::vector<ScenarioSpec> specs(4);
    specs[0].name = "eeg";
    specs[0].config = 2;
    specs[1].name = "eeg";
    specs[1].placement = "cloud";
    specs[1].headset = Headset::B;
    specs[1].distribution = TransmitKind::exponential;
    specs[2].name = "surveillance";
    specs[2].config = 2;
    specs[3].name = "surveillance";
    specs[3].distribution = TransmitKind::exponential;
    specs[3].seed = 7;
    for (auto& s : specs) {
        s.duration = Duration::seconds(20);
        const auto a = report_to_json(run_scenario(s).report);
        const auto b = report_to_json(run_scenario(s).report);
        detail(fmt::format("{} c{} {} {} seed {}: {} bytes, {}", s.name, s.config, s.placement, to_string(s.distribution),
                           s.seed, a.size(), a == b ? "identical" : "DIFFERENT"));
        ok = ok && a == b;
    }
    verdict(7, ok, "same seed gives byte-identical report JSON");
}

// ------------------------------------------------------------------ 8

void criterion_scalability() {
    auto wall_s = [](int config) {
        ScenarioSpec s;
        s.name = "eeg";
        s.config = config;
        s.headset = Headset::B;
        s.duration = default_duration("eeg");
        const auto r = run_scenario(s);
        detail(fmt::format("eeg c{} B, 3 h simulated: {:.2f} s wall, {} events, peak RSS {} kB", config,
                           r.timing.wall_ms / 1000, r.report.events, r.timing.peak_rss_kb));
        return r.timing.wall_ms / 1000;
    };
    const double w1 = wall_s(1);
    const double w5 = wall_s(5);
    const double ratio = w5 / w1;
    detail(fmt::format("limit {} s; ratio c5/c1 = {:.2f} (limit {})", kScaleWallLimitS, ratio, kScaleRatioLimit));
    verdict(8, w5 < kScaleWallLimitS && ratio <= kScaleRatioLimit,
            "EEG config 5 / headset B, 3 h simulated, under 60 s wall; c5/c1 wall ratio <= 25");
}

// ------------------------------------------------------------------ 9

void criterion_exponential() {
    bool ok = true;
    FogDevice host{"host", std::nullopt, 1e6, 1000, 1000, 0, 1000, 2, 1, 0, "cloud"};
    const PhysicalTopology topo({host}, {Sensor{"s", "S", "host", 0, {TransmitKind::exponential, kExpMeanMs}, 0, 0}},
                                {});
    ApplicationSpec spec;
    spec.name = "arrivals";
    spec.sensor_types = {"S"};
    spec.modules = {AppModule{"Sink", 10, {}}};
    spec.edges = {AppEdge{"S", "Sink", "S", 1, 1}};
    const auto app = build_application(spec);
    const auto map = place_cloud_only(app, topo, {});
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        Simulation sim(topo, app, map, RuntimeConfig{Duration::millis(1), seed, true});
        sim.run_until(SimTime::from_ms(static_cast<std::int64_t>(kExpMeanMs * kExpMinEmissions * 1.2)));
        const auto& tr = sim.transfers();
        const std::size_t n = tr.size();
        // The first emission follows a draw from t = 0, so every send time is an interval end.
        const double mean = tr.empty() ? 0 : tr.back().sent.ms() / static_cast<double>(n);
        const bool pass = n >= kExpMinEmissions && std::abs(mean - kExpMeanMs) <= kExpRelTolerance * kExpMeanMs;
        detail(fmt::format("seed {}: {} emissions, mean {:.4f} ms", seed, n, mean));
        ok = ok && pass;
    }
    verdict(9, ok, "exponential inter-arrival mean within 5% of 5 ms over >= 1e5 emissions, 3 seeds");
}

}  // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    try {
        run_grid();
        criterion_loop_latency();
        criterion_cloud_floor();
        criterion_network_usage();
        criterion_energy();
        criterion_processor_sharing();
        criterion_algorithm_trace();
        criterion_determinism();
        criterion_scalability();
        criterion_exponential();
    } catch (const std::exception& e) {
        std::printf("FAIL  acceptance run aborted: %s\n", e.what());
        return 2;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%d criteria failed (%.1f s)\n", failures, secs);
    return failures == 0 ? 0 : 1;
}
