#pragma once

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fogsim/application.hpp"
#include "fogsim/topology.hpp"

namespace fogsim {

/// Pins `module` to a device, by exact device name or by device class tag
/// (every device carrying the tag receives an instance).
struct PlacementConstraint {
    std::string module;
    std::string target;
    bool operator==(const PlacementConstraint&) const = default;
};

struct ModuleInstance {
    std::string module;
    std::string device;
    /// CPU demand charged to the device for this instance (MI per ms).
    double demand = 0;
    bool operator==(const ModuleInstance&) const = default;
};

/// Module instances per device. A module may run on many devices; a device
/// holds at most one instance of a given module.
class PlacementMap {
public:
    void add(ModuleInstance instance);
    const std::vector<ModuleInstance>& instances() const { return instances_; }
    std::vector<std::string> devices_for(std::string_view module) const;
    bool hosts(std::string_view module, std::string_view device) const;
    bool empty() const { return instances_.empty(); }

    /// Instances sorted by (module, device); used for comparisons and output.
    std::vector<ModuleInstance> sorted() const;

    bool operator==(const PlacementMap& o) const { return sorted() == o.sorted(); }

private:
    std::vector<ModuleInstance> instances_;
};

/// Devices a constraint resolves to. Throws ConfigError when it names nothing.
std::vector<DeviceId> resolve_constraint_target(const PhysicalTopology& topo, const PlacementConstraint& c);

/// Per-device CPU demand of every module: entry [d][m] is what module m
/// needs to keep up with the sensors attached inside d's subtree.
struct DemandTable {
    std::vector<std::vector<double>> per_device;
};

DemandTable compute_demands(const ApplicationGraph& app, const PhysicalTopology& topo);

/// Everything on the cloud root except pinned modules, which go to their pins.
PlacementMap place_cloud_only(const ApplicationGraph& app, const PhysicalTopology& topo,
                              std::span<const PlacementConstraint> constraints);

struct EdgewardOptions {
    /// Re-check eligibility at the same device after each placement so a
    /// chain of small modules can land together. Off = one eligibility scan
    /// per device, exactly as the pseudocode is written.
    bool cascade = true;
};

enum class PlacementAction { pinned, placed, merged, pushed_up };

std::string_view to_string(PlacementAction a);

/// One step of an edge-ward run, for inspection and hand-trace tests.
struct PlacementStep {
    std::string path_leaf;
    std::string at_device;  // device being visited on the path
    std::string module;
    PlacementAction action = PlacementAction::placed;
    std::string host;       // device that ends up hosting the instance
    double demand = 0;      // instance demand after the step
    bool operator==(const PlacementStep&) const = default;
};

/// Edge-ward placement.
///
/// Leaf-to-root paths are visited in leaf-name order. On each path a module
/// becomes a candidate once all its up-direction predecessors are pinned or
/// handled on this path. A candidate already hosted on the path is merged
/// with that instance (demands add) and pushed towards the root while the
/// merged demand is >= the host's free capacity; otherwise it is placed on
/// the current device when its demand is <= the free capacity there.
/// Throws PlacementError when a module cannot be hosted even at the root.
PlacementMap place_edge_ward(const ApplicationGraph& app, const PhysicalTopology& topo,
                             std::span<const PlacementConstraint> constraints, const DemandTable& demands,
                             const EdgewardOptions& options = {}, std::vector<PlacementStep>* trace = nullptr);

enum class PlacementViolationKind { unplaced_module, unknown_module, unknown_device, pin_violated, duplicate_instance };

struct PlacementViolation {
    PlacementViolationKind kind;
    std::string module;
    std::string device;
    std::string message;
};

std::vector<PlacementViolation> validate_placement(const PlacementMap& map, const ApplicationGraph& app,
                                                   const PhysicalTopology& topo,
                                                   std::span<const PlacementConstraint> constraints);

/// Pluggable placement strategy.
class PlacementPolicy {
public:
    virtual ~PlacementPolicy() = default;
    virtual std::string_view name() const = 0;
    virtual PlacementMap place(const ApplicationGraph& app, const PhysicalTopology& topo,
                               std::span<const PlacementConstraint> constraints) const = 0;
};

class CloudOnlyPolicy final : public PlacementPolicy {
public:
    std::string_view name() const override { return "cloud"; }
    PlacementMap place(const ApplicationGraph& app, const PhysicalTopology& topo,
                       std::span<const PlacementConstraint> constraints) const override;
};

class EdgewardPolicy final : public PlacementPolicy {
public:
    explicit EdgewardPolicy(EdgewardOptions options = {}) : options_(options) {}
    std::string_view name() const override { return "edgeward"; }
    PlacementMap place(const ApplicationGraph& app, const PhysicalTopology& topo,
                       std::span<const PlacementConstraint> constraints) const override;

private:
    EdgewardOptions options_;
};

/// Name -> policy factory. Starts with "cloud" and "edgeward".
class PolicyRegistry {
public:
    using Factory = std::function<std::unique_ptr<PlacementPolicy>()>;

    static PolicyRegistry& instance();

    void add(std::string name, Factory factory);
    /// Throws ArgumentError for unknown names.
    std::unique_ptr<PlacementPolicy> create(std::string_view name) const;
    std::vector<std::string> names() const;

private:
    PolicyRegistry();
    std::map<std::string, Factory, std::less<>> factories_;
};

}  // namespace fogsim
