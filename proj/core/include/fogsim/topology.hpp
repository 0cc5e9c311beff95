#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fogsim {

using DeviceId = std::uint32_t;
inline constexpr DeviceId kNoDevice = 0xFFFF'FFFFu;

/// A host in the device tree, from edge gadget to cloud VM.
///
/// Bandwidths are in bytes per millisecond and apply to the link between
/// this device and its parent: `uplink_bw` for child-to-parent traffic,
/// `downlink_bw` for what this device sends down to its own children.
struct FogDevice {
    std::string name;
    std::optional<std::string> parent;
    double mips = 0;
    double ram_mb = 0;
    double storage_mb = 0;
    double uplink_bw = 0;
    double downlink_bw = 0;
    double busy_power_w = 0;
    double idle_power_w = 0;
    double uplink_latency_ms = 0;
    /// Free-form grouping tag ("cloud", "wifi_gateway", ...) used for reporting and pins.
    std::string device_class;

    bool operator==(const FogDevice&) const = default;
};

enum class TransmitKind { deterministic, exponential };

struct TransmitDistribution {
    TransmitKind kind = TransmitKind::deterministic;
    /// Interval (deterministic) or mean (exponential), in ms.
    double value_ms = 0;

    bool operator==(const TransmitDistribution&) const = default;
};

struct Sensor {
    std::string name;
    std::string tuple_type;
    std::string gateway;
    double gateway_latency_ms = 0;
    TransmitDistribution distribution;
    double tuple_cpu_mi = 0;
    double tuple_nw_bytes = 0;

    bool operator==(const Sensor&) const = default;
};

struct Actuator {
    std::string name;
    std::string actuator_type;
    std::string gateway;
    double gateway_latency_ms = 0;

    bool operator==(const Actuator&) const = default;
};

enum class ViolationKind {
    duplicate_name,
    cycle,
    multiple_roots,
    no_root,
    dangling_parent,
    dangling_gateway,
    non_positive_capacity,
    bad_power,
    negative_value,
    bad_distribution,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
    ViolationKind kind;
    std::string entity;
    std::string message;
};

/// Devices, sensors and actuators forming a single-rooted tree.
///
/// The constructor never throws on model violations; it indexes whatever it
/// is given so that validate() can report every problem at once. Tree
/// queries (root(), path_to_root(), level()) require a valid topology.
class PhysicalTopology {
public:
    PhysicalTopology() = default;
    PhysicalTopology(std::vector<FogDevice> devices, std::vector<Sensor> sensors, std::vector<Actuator> actuators);

    const std::vector<FogDevice>& devices() const { return devices_; }
    const std::vector<Sensor>& sensors() const { return sensors_; }
    const std::vector<Actuator>& actuators() const { return actuators_; }

    const FogDevice& device(DeviceId id) const { return devices_.at(id); }
    std::optional<DeviceId> find_device(std::string_view name) const;
    /// Throws ArgumentError for unknown names.
    DeviceId device_id(std::string_view name) const;

    DeviceId root() const;
    /// kNoDevice for the root.
    DeviceId parent(DeviceId id) const { return parent_.at(id); }
    std::span<const DeviceId> children(DeviceId id) const { return children_.at(id); }
    int level(DeviceId id) const;
    bool is_leaf(DeviceId id) const { return children_.at(id).empty(); }
    /// True when `node` is `ancestor` or lies below it.
    bool in_subtree(DeviceId node, DeviceId ancestor) const;

    /// [device, parent, ..., root].
    std::vector<DeviceId> path_to_root(DeviceId id) const;
    std::vector<std::string> path_to_root(std::string_view name) const;

    /// Leaf devices sorted by name.
    std::vector<DeviceId> leaves_by_name() const;

    /// Indices into sensors()/actuators() attached to a device.
    std::span<const std::uint32_t> sensors_at(DeviceId id) const { return sensors_at_.at(id); }
    std::span<const std::uint32_t> actuators_at(DeviceId id) const { return actuators_at_.at(id); }

    bool operator==(const PhysicalTopology& o) const {
        return devices_ == o.devices_ && sensors_ == o.sensors_ && actuators_ == o.actuators_;
    }

private:
    void require_tree() const;

    std::vector<FogDevice> devices_;
    std::vector<Sensor> sensors_;
    std::vector<Actuator> actuators_;

    std::unordered_map<std::string, DeviceId> by_name_;
    std::vector<DeviceId> parent_;
    std::vector<std::vector<DeviceId>> children_;
    std::vector<int> level_;  // -1 when unreachable from a root
    std::vector<std::vector<std::uint32_t>> sensors_at_;
    std::vector<std::vector<std::uint32_t>> actuators_at_;
    DeviceId root_ = kNoDevice;
    bool tree_ok_ = false;
};

/// Every invariant violation in the topology; empty means valid.
std::vector<Violation> validate(const PhysicalTopology& topology);

inline constexpr int kTopologySchemaVersion = 1;

/// Parses the topology document. Throws ParseError for malformed JSON,
/// unknown/missing/mistyped fields and ValidationError when the parsed
/// topology violates an invariant.
PhysicalTopology parse_topology_json(std::string_view text);

/// Canonical form: fixed key order, two-space indent, trailing newline.
/// Throws ValidationError on an invalid topology.
std::string serialize_topology_json(const PhysicalTopology& topology);

}  // namespace fogsim
