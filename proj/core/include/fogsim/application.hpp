#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fogsim/rng.hpp"
#include "fogsim/topology.hpp"

namespace fogsim {

using ModuleId = std::uint32_t;
using EdgeId = std::uint32_t;
inline constexpr ModuleId kNoModule = 0xFFFF'FFFFu;

enum class Direction { up, down };
enum class EdgeKind { event, periodic };

/// Fractional selectivity: each input emits on the edge with probability p.
struct SelectivityModel {
    double probability = 1.0;
    bool operator==(const SelectivityModel&) const = default;
};

/// "An input tuple of type `input` produces a tuple on this module's out-edge `output`."
struct SelectivityRule {
    std::string input;
    std::string output;
    SelectivityModel model;
    bool operator==(const SelectivityRule&) const = default;
};

struct AppModule {
    std::string name;
    double ram_mb = 10;
    std::vector<SelectivityRule> selectivity;
    bool operator==(const AppModule&) const = default;
};

/// Data dependency. `source` names a module or a sensor tuple type;
/// `destination` a module or an actuator type.
struct AppEdge {
    std::string source;
    std::string destination;
    std::string tuple_type;
    double cpu_mi = 0;
    double nw_bytes = 0;
    EdgeKind kind = EdgeKind::event;
    double period_ms = 0;  // periodic edges only
    Direction direction = Direction::up;
    bool operator==(const AppEdge&) const = default;
};

/// Chain of element names (sensor type, modules..., module or actuator type)
/// whose end-to-end delay is measured.
struct AppLoop {
    std::string name;
    std::vector<std::string> elements;
    bool operator==(const AppLoop&) const = default;
};

/// Everything needed to build an ApplicationGraph.
struct ApplicationSpec {
    std::string name;
    std::vector<AppModule> modules;
    std::vector<AppEdge> edges;
    std::vector<AppLoop> loops;
    std::vector<std::string> sensor_types;
    std::vector<std::string> actuator_types;
    bool operator==(const ApplicationSpec&) const = default;
};

/// Placement pin carried by application documents: `target` is a device
/// name or a device class tag.
struct ModulePin {
    std::string module;
    std::string target;
    bool operator==(const ModulePin&) const = default;
};

enum class EndpointKind { module, sensor, actuator };

struct ResolvedEdge {
    EndpointKind source_kind = EndpointKind::module;
    EndpointKind destination_kind = EndpointKind::module;
    ModuleId source_module = kNoModule;
    ModuleId destination_module = kNoModule;
};

/// One output of a selectivity rule, resolved to an edge index.
struct ResolvedEmission {
    EdgeId edge = 0;
    double probability = 1.0;
};

/// Validated, indexed application DAG. Immutable once built.
class ApplicationGraph {
public:
    const ApplicationSpec& spec() const { return spec_; }
    const std::string& name() const { return spec_.name; }
    std::span<const AppModule> modules() const { return spec_.modules; }
    std::span<const AppEdge> edges() const { return spec_.edges; }
    std::span<const AppLoop> loops() const { return spec_.loops; }

    const AppModule& module(ModuleId id) const { return spec_.modules.at(id); }
    const AppEdge& edge(EdgeId id) const { return spec_.edges.at(id); }
    const ResolvedEdge& resolved(EdgeId id) const { return resolved_.at(id); }

    std::optional<ModuleId> find_module(std::string_view name) const;
    /// The edge leaving a sensor of this tuple type, if any.
    std::optional<EdgeId> sensor_edge(std::string_view sensor_type) const;
    bool is_actuator_type(std::string_view name) const;

    /// Module-sourced edges that the module emits on after processing
    /// `input_edge`'s tuple type.
    std::span<const ResolvedEmission> emissions(ModuleId module, EdgeId input_edge) const;
    std::span<const EdgeId> periodic_edges_from(ModuleId module) const { return periodic_from_.at(module); }

    /// Predecessors along up-direction module-to-module edges (the placement DAG).
    std::span<const ModuleId> up_predecessors(ModuleId module) const { return up_preds_.at(module); }

    /// Edges ordered so every edge follows the edges that feed it.
    std::span<const EdgeId> rate_order() const { return rate_order_; }

private:
    friend ApplicationGraph build_application(ApplicationSpec spec);

    ApplicationSpec spec_;
    std::vector<ResolvedEdge> resolved_;
    std::unordered_map<std::string, ModuleId> module_by_name_;
    std::unordered_map<std::string, EdgeId> sensor_edge_;
    std::vector<std::string> actuator_types_;
    // emission table: per edge, the emissions its destination module makes on receipt
    std::vector<std::vector<ResolvedEmission>> emissions_by_input_;
    std::vector<std::vector<EdgeId>> periodic_from_;
    std::vector<std::vector<ModuleId>> up_preds_;
    std::vector<EdgeId> rate_order_;
};

struct AppViolation {
    std::string entity;
    std::string message;
};

/// Every problem that would stop build_application(); empty means buildable.
std::vector<AppViolation> check_application(const ApplicationSpec& spec);

/// Validates and indexes. Throws ValidationError listing every problem:
/// dangling endpoints, selectivity referencing missing edges, cycles among
/// up-direction module edges or in the rate dependency, unresolvable loops.
ApplicationGraph build_application(ApplicationSpec spec);

/// Arrival rates per edge (tuples/ms) and the CPU each module needs to keep up.
///
/// Demand is rate x cpu_mi summed over a module's in-edges, i.e. MI per ms;
/// placement compares it directly against device MIPS ratings.
struct RateMap {
    std::vector<double> edge_rate;
    std::vector<double> module_demand;
    std::vector<std::string> warnings;
};

RateMap propagate_rates(const ApplicationGraph& app, std::span<const Sensor> sensors);
RateMap propagate_rates(const ApplicationGraph& app, const std::vector<const Sensor*>& sensors);

/// What a module emits for one input tuple.
struct TupleDescriptor {
    EdgeId edge = 0;
    std::string tuple_type;
    double cpu_mi = 0;
    double nw_bytes = 0;
    std::uint64_t lineage = 0;
};

/// Draws each out-edge's Bernoulli trial in declaration order.
std::vector<TupleDescriptor> apply_selectivity(const ApplicationGraph& app, ModuleId module, EdgeId input_edge,
                                               std::uint64_t lineage, Rng& rng);

/// Application document: the graph spec plus optional placement pins.
struct ApplicationDocument {
    ApplicationSpec spec;
    std::vector<ModulePin> pins;
    bool operator==(const ApplicationDocument&) const = default;
};

inline constexpr int kApplicationSchemaVersion = 1;

/// Throws ParseError for malformed/unknown/missing fields. Graph-level
/// checks are left to build_application().
ApplicationDocument parse_application_json(std::string_view text);
std::string serialize_application_json(const ApplicationDocument& doc);

std::string_view to_string(Direction d);
std::string_view to_string(EdgeKind k);

}  // namespace fogsim
