#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fogsim/application.hpp"
#include "fogsim/metrics.hpp"
#include "fogsim/placement.hpp"
#include "fogsim/runtime.hpp"
#include "fogsim/topology.hpp"

namespace fogsim {

enum class Headset { A, B };

struct ScenarioSpec {
    std::string name = "eeg";  // "eeg" or "surveillance"
    int config = 1;            // 1..5
    Headset headset = Headset::A;
    Duration duration = Duration::seconds(60);
    std::string placement = "edgeward";
    std::uint64_t seed = 42;
    TransmitKind distribution = TransmitKind::deterministic;
    /// Period of the game-state edges (EEG only).
    double state_period_ms = 100;
};

/// A case study ready to place and run.
struct BuiltScenario {
    PhysicalTopology topology;
    ApplicationGraph app;
    std::vector<PlacementConstraint> constraints;
};

/// Groups per config: 1, 2, 4, 8, 16. Throws ArgumentError outside 1..5.
int groups_for_config(int config);

BuiltScenario build_eeg(int config, Headset headset, TransmitKind distribution = TransmitKind::deterministic,
                        double state_period_ms = 100);
BuiltScenario build_surveillance(int config, TransmitKind distribution = TransmitKind::deterministic);
BuiltScenario build_scenario(const ScenarioSpec& spec);

std::vector<std::string> scenario_names();
Duration default_duration(const std::string& scenario);

std::string headset_name(Headset h);
Headset parse_headset(std::string_view s);
TransmitKind parse_distribution(std::string_view s);
std::string_view to_string(TransmitKind k);

struct ScenarioResult {
    MetricsReport report;
    PlacementMap placement;
    RunTiming timing;
};

/// Builds, places, simulates and reports. PlacementError propagates with
/// the scenario named in its message.
ScenarioResult run_scenario(const ScenarioSpec& spec);

/// Runs an arbitrary topology/application pair under a named policy.
ScenarioResult run_custom(const PhysicalTopology& topology, const ApplicationGraph& app,
                          const std::vector<PlacementConstraint>& constraints, const std::string& placement,
                          Duration duration, std::uint64_t seed);

}  // namespace fogsim
