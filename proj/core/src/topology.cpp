#include "fogsim/topology.hpp"

#include <algorithm>
#include <set>

#include "fogsim/errors.hpp"
#include "json_util.hpp"

namespace fogsim {

std::string_view to_string(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::duplicate_name: return "duplicate-name";
        case ViolationKind::cycle: return "cycle";
        case ViolationKind::multiple_roots: return "multiple-roots";
        case ViolationKind::no_root: return "no-root";
        case ViolationKind::dangling_parent: return "dangling-parent";
        case ViolationKind::dangling_gateway: return "dangling-gateway";
        case ViolationKind::non_positive_capacity: return "non-positive-capacity";
        case ViolationKind::bad_power: return "bad-power";
        case ViolationKind::negative_value: return "negative-value";
        case ViolationKind::bad_distribution: return "bad-distribution";
    }
    return "unknown";
}

PhysicalTopology::PhysicalTopology(std::vector<FogDevice> devices, std::vector<Sensor> sensors,
                                   std::vector<Actuator> actuators)
    : devices_(std::move(devices)), sensors_(std::move(sensors)), actuators_(std::move(actuators)) {
    const auto n = devices_.size();
    parent_.assign(n, kNoDevice);
    children_.assign(n, {});
    level_.assign(n, -1);
    sensors_at_.assign(n, {});
    actuators_at_.assign(n, {});

    for (DeviceId i = 0; i < n; ++i) by_name_.emplace(devices_[i].name, i);

    std::vector<DeviceId> roots;
    for (DeviceId i = 0; i < n; ++i) {
        const auto& p = devices_[i].parent;
        if (!p) {
            roots.push_back(i);
            continue;
        }
        if (auto it = by_name_.find(*p); it != by_name_.end()) {
            parent_[i] = it->second;
            children_[it->second].push_back(i);
        }
    }
    for (std::uint32_t s = 0; s < sensors_.size(); ++s) {
        if (auto it = by_name_.find(sensors_[s].gateway); it != by_name_.end()) sensors_at_[it->second].push_back(s);
    }
    for (std::uint32_t a = 0; a < actuators_.size(); ++a) {
        if (auto it = by_name_.find(actuators_[a].gateway); it != by_name_.end()) {
            actuators_at_[it->second].push_back(a);
        }
    }

    if (roots.size() == 1) {
        root_ = roots.front();
        std::vector<DeviceId> frontier{root_};
        level_[root_] = 0;
        std::size_t reached = 1;
        while (!frontier.empty()) {
            DeviceId d = frontier.back();
            frontier.pop_back();
            for (DeviceId c : children_[d]) {
                if (level_[c] >= 0) continue;
                level_[c] = level_[d] + 1;
                ++reached;
                frontier.push_back(c);
            }
        }
        tree_ok_ = reached == n && by_name_.size() == n;
    }
}

std::optional<DeviceId> PhysicalTopology::find_device(std::string_view name) const {
    auto it = by_name_.find(std::string(name));
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
}

DeviceId PhysicalTopology::device_id(std::string_view name) const {
    auto id = find_device(name);
    if (!id) throw ArgumentError(fmt::format("unknown device '{}'", name));
    return *id;
}

void PhysicalTopology::require_tree() const {
    if (!tree_ok_) throw ValidationError("topology is not a single-rooted tree");
}

DeviceId PhysicalTopology::root() const {
    require_tree();
    return root_;
}

int PhysicalTopology::level(DeviceId id) const {
    require_tree();
    return level_.at(id);
}

bool PhysicalTopology::in_subtree(DeviceId node, DeviceId ancestor) const {
    const int target = level_.at(ancestor);
    while (node != kNoDevice && level_[node] > target) node = parent_[node];
    return node == ancestor;
}

std::vector<DeviceId> PhysicalTopology::path_to_root(DeviceId id) const {
    require_tree();
    if (id >= devices_.size()) throw ArgumentError(fmt::format("unknown device id {}", id));
    std::vector<DeviceId> path;
    path.reserve(static_cast<std::size_t>(level_[id]) + 1);
    for (DeviceId d = id; d != kNoDevice; d = parent_[d]) path.push_back(d);
    return path;
}

std::vector<std::string> PhysicalTopology::path_to_root(std::string_view name) const {
    std::vector<std::string> names;
    for (DeviceId d : path_to_root(device_id(name))) names.push_back(devices_[d].name);
    return names;
}

std::vector<DeviceId> PhysicalTopology::leaves_by_name() const {
    std::vector<DeviceId> leaves;
    for (DeviceId i = 0; i < devices_.size(); ++i) {
        if (children_[i].empty()) leaves.push_back(i);
    }
    std::sort(leaves.begin(), leaves.end(),
              [this](DeviceId a, DeviceId b) { return devices_[a].name < devices_[b].name; });
    return leaves;
}

std::vector<Violation> validate(const PhysicalTopology& topo) {
    std::vector<Violation> out;
    auto add = [&out](ViolationKind k, const std::string& entity, std::string msg) {
        out.push_back(Violation{k, entity, std::move(msg)});
    };

    std::set<std::string> names;
    auto claim = [&](const std::string& name, std::string_view what) {
        if (!names.insert(name).second) {
            add(ViolationKind::duplicate_name, name, fmt::format("{} name '{}' is already used", what, name));
        }
    };

    const auto& devs = topo.devices();
    std::vector<std::string> roots;
    for (const auto& d : devs) {
        claim(d.name, "device");
        if (!d.parent) {
            roots.push_back(d.name);
        } else if (!topo.find_device(*d.parent)) {
            add(ViolationKind::dangling_parent, d.name, fmt::format("parent '{}' does not exist", *d.parent));
        }
        if (!(d.mips > 0)) add(ViolationKind::non_positive_capacity, d.name, fmt::format("mips must be > 0 (got {})", d.mips));
        if (d.parent && !(d.uplink_bw > 0)) {
            add(ViolationKind::non_positive_capacity, d.name, fmt::format("uplink bandwidth must be > 0 (got {})", d.uplink_bw));
        }
        if (!(d.downlink_bw > 0)) {
            add(ViolationKind::non_positive_capacity, d.name,
                fmt::format("downlink bandwidth must be > 0 (got {})", d.downlink_bw));
        }
        if (d.ram_mb < 0 || d.storage_mb < 0 || d.uplink_latency_ms < 0) {
            add(ViolationKind::negative_value, d.name, "ram, storage and latency must be non-negative");
        }
        if (!(d.idle_power_w >= 0) || !(d.busy_power_w >= d.idle_power_w)) {
            add(ViolationKind::bad_power, d.name,
                fmt::format("need busy >= idle >= 0 (busy {}, idle {})", d.busy_power_w, d.idle_power_w));
        }
    }
    if (roots.empty() && !devs.empty()) add(ViolationKind::no_root, "", "no parentless (root) device");
    if (roots.size() > 1) {
        std::string list;
        for (const auto& r : roots) list += (list.empty() ? "" : ", ") + r;
        add(ViolationKind::multiple_roots, roots[1], fmt::format("{} parentless devices: {}", roots.size(), list));
    }

    // Each cycle is reported once, named by its first member in input order.
    std::vector<int> state(devs.size(), 0);  // 0 = unseen, 1 = on current walk, 2 = done
    for (DeviceId start = 0; start < devs.size(); ++start) {
        if (state[start]) continue;
        std::vector<DeviceId> walk;
        DeviceId d = start;
        while (d != kNoDevice && state[d] == 0) {
            state[d] = 1;
            walk.push_back(d);
            const auto& p = devs[d].parent;
            auto pid = p ? topo.find_device(*p) : std::nullopt;
            d = pid ? *pid : kNoDevice;
        }
        if (d != kNoDevice && state[d] == 1) {
            auto first = std::find(walk.begin(), walk.end(), d);
            std::string members;
            for (auto it = first; it != walk.end(); ++it) members += (members.empty() ? "" : " -> ") + devs[*it].name;
            members += " -> " + devs[d].name;
            add(ViolationKind::cycle, devs[d].name, fmt::format("parent links form a cycle: {}", members));
        }
        for (DeviceId w : walk) state[w] = 2;
    }

    for (const auto& s : topo.sensors()) {
        claim(s.name, "sensor");
        if (!topo.find_device(s.gateway)) {
            add(ViolationKind::dangling_gateway, s.name, fmt::format("gateway '{}' does not exist", s.gateway));
        }
        if (!(s.distribution.value_ms > 0)) {
            add(ViolationKind::bad_distribution, s.name,
                fmt::format("transmit interval/mean must be > 0 (got {})", s.distribution.value_ms));
        }
        if (s.gateway_latency_ms < 0 || s.tuple_cpu_mi < 0 || s.tuple_nw_bytes < 0) {
            add(ViolationKind::negative_value, s.name, "latency and tuple lengths must be non-negative");
        }
    }
    for (const auto& a : topo.actuators()) {
        claim(a.name, "actuator");
        if (!topo.find_device(a.gateway)) {
            add(ViolationKind::dangling_gateway, a.name, fmt::format("gateway '{}' does not exist", a.gateway));
        }
        if (a.gateway_latency_ms < 0) add(ViolationKind::negative_value, a.name, "latency must be non-negative");
    }
    return out;
}

namespace {

using detail::Json;
using detail::ObjectReader;
using detail::OrderedJson;

TransmitDistribution read_distribution(const Json& j, const std::string& context) {
    ObjectReader r(j, context + " distribution");
    r.allow_only({"kind", "value_ms"});
    TransmitDistribution d;
    const auto kind = r.string("kind");
    if (kind == "deterministic") {
        d.kind = TransmitKind::deterministic;
    } else if (kind == "exponential") {
        d.kind = TransmitKind::exponential;
    } else {
        throw ParseError(fmt::format("{}: distribution kind must be 'deterministic' or 'exponential', got '{}'",
                                     r.context(), kind));
    }
    d.value_ms = r.number("value_ms");
    return d;
}

std::string entity_context(std::string_view array, std::size_t i, const Json& j) {
    if (j.is_object() && j.contains("name") && j["name"].is_string()) {
        return fmt::format("{}[{}] '{}'", array, i, j["name"].get<std::string>());
    }
    return fmt::format("{}[{}]", array, i);
}

}  // namespace

PhysicalTopology parse_topology_json(std::string_view text) {
    const Json doc = detail::parse_document(text, "topology");
    ObjectReader top(doc, "topology");
    top.allow_only({"schema_version", "devices", "sensors", "actuators"});
    const double version = top.number("schema_version");
    if (version != kTopologySchemaVersion) {
        throw ParseError(fmt::format("topology: unsupported schema_version {} (expected {})", version,
                                     kTopologySchemaVersion));
    }

    std::vector<FogDevice> devices;
    const Json& devs = top.array("devices");
    for (std::size_t i = 0; i < devs.size(); ++i) {
        ObjectReader r(devs[i], entity_context("devices", i, devs[i]));
        r.allow_only({"name", "parent", "mips", "ram_mb", "storage_mb", "uplink_bw_bytes_per_ms",
                      "downlink_bw_bytes_per_ms", "busy_power_w", "idle_power_w", "uplink_latency_ms", "class"});
        FogDevice d;
        d.name = r.string("name");
        const Json& parent = r.at("parent");
        if (parent.is_string()) {
            d.parent = parent.get<std::string>();
        } else if (!parent.is_null()) {
            throw ParseError(fmt::format("{}: field 'parent' must be a string or null", r.context()));
        }
        d.mips = r.number("mips");
        d.ram_mb = r.number("ram_mb");
        d.storage_mb = r.number("storage_mb");
        d.uplink_bw = r.number("uplink_bw_bytes_per_ms");
        d.downlink_bw = r.number("downlink_bw_bytes_per_ms");
        d.busy_power_w = r.number("busy_power_w");
        d.idle_power_w = r.number("idle_power_w");
        d.uplink_latency_ms = r.number("uplink_latency_ms");
        d.device_class = r.string_or("class", "");
        devices.push_back(std::move(d));
    }

    std::vector<Sensor> sensors;
    const Json& sens = top.array("sensors");
    for (std::size_t i = 0; i < sens.size(); ++i) {
        ObjectReader r(sens[i], entity_context("sensors", i, sens[i]));
        r.allow_only({"name", "tuple_type", "gateway", "gateway_latency_ms", "distribution", "tuple_cpu_mi",
                      "tuple_nw_bytes"});
        Sensor s;
        s.name = r.string("name");
        s.tuple_type = r.string("tuple_type");
        s.gateway = r.string("gateway");
        s.gateway_latency_ms = r.number("gateway_latency_ms");
        s.distribution = read_distribution(r.at("distribution"), r.context());
        s.tuple_cpu_mi = r.number("tuple_cpu_mi");
        s.tuple_nw_bytes = r.number("tuple_nw_bytes");
        sensors.push_back(std::move(s));
    }

    std::vector<Actuator> actuators;
    const Json& acts = top.array("actuators");
    for (std::size_t i = 0; i < acts.size(); ++i) {
        ObjectReader r(acts[i], entity_context("actuators", i, acts[i]));
        r.allow_only({"name", "actuator_type", "gateway", "gateway_latency_ms"});
        Actuator a;
        a.name = r.string("name");
        a.actuator_type = r.string("actuator_type");
        a.gateway = r.string("gateway");
        a.gateway_latency_ms = r.number("gateway_latency_ms");
        actuators.push_back(std::move(a));
    }

    PhysicalTopology topo(std::move(devices), std::move(sensors), std::move(actuators));
    if (auto v = validate(topo); !v.empty()) {
        std::string msg = "topology is invalid:";
        for (const auto& x : v) msg += fmt::format("\n  [{}] {}: {}", to_string(x.kind), x.entity, x.message);
        throw ValidationError(msg);
    }
    return topo;
}

std::string serialize_topology_json(const PhysicalTopology& topo) {
    if (auto v = validate(topo); !v.empty()) {
        throw ValidationError(fmt::format("refusing to serialize an invalid topology ({} violations, first: {}: {})",
                                          v.size(), v.front().entity, v.front().message));
    }
    OrderedJson doc;
    doc["schema_version"] = kTopologySchemaVersion;
    doc["devices"] = OrderedJson::array();
    for (const auto& d : topo.devices()) {
        OrderedJson j;
        j["name"] = d.name;
        j["parent"] = d.parent ? OrderedJson(*d.parent) : OrderedJson(nullptr);
        j["mips"] = d.mips;
        j["ram_mb"] = d.ram_mb;
        j["storage_mb"] = d.storage_mb;
        j["uplink_bw_bytes_per_ms"] = d.uplink_bw;
        j["downlink_bw_bytes_per_ms"] = d.downlink_bw;
        j["busy_power_w"] = d.busy_power_w;
        j["idle_power_w"] = d.idle_power_w;
        j["uplink_latency_ms"] = d.uplink_latency_ms;
        if (!d.device_class.empty()) j["class"] = d.device_class;
        doc["devices"].push_back(std::move(j));
    }
    doc["sensors"] = OrderedJson::array();
    for (const auto& s : topo.sensors()) {
        OrderedJson j;
        j["name"] = s.name;
        j["tuple_type"] = s.tuple_type;
        j["gateway"] = s.gateway;
        j["gateway_latency_ms"] = s.gateway_latency_ms;
        j["distribution"] = {
            {"kind", s.distribution.kind == TransmitKind::deterministic ? "deterministic" : "exponential"},
            {"value_ms", s.distribution.value_ms}};
        j["tuple_cpu_mi"] = s.tuple_cpu_mi;
        j["tuple_nw_bytes"] = s.tuple_nw_bytes;
        doc["sensors"].push_back(std::move(j));
    }
    doc["actuators"] = OrderedJson::array();
    for (const auto& a : topo.actuators()) {
        OrderedJson j;
        j["name"] = a.name;
        j["actuator_type"] = a.actuator_type;
        j["gateway"] = a.gateway;
        j["gateway_latency_ms"] = a.gateway_latency_ms;
        doc["actuators"].push_back(std::move(j));
    }
    return doc.dump(2) + "\n";
}

}  // namespace fogsim
