#include "fogsim/placement.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <mutex>
#include <set>

#include "fogsim/errors.hpp"

namespace fogsim {

std::string_view to_string(PlacementAction a) {
    switch (a) {
        case PlacementAction::pinned: return "pinned";
        case PlacementAction::placed: return "placed";
        case PlacementAction::merged: return "merged";
        case PlacementAction::pushed_up: return "pushed-up";
    }
    return "unknown";
}

void PlacementMap::add(ModuleInstance instance) { instances_.push_back(std::move(instance)); }

std::vector<std::string> PlacementMap::devices_for(std::string_view module) const {
    std::vector<std::string> out;
    for (const auto& i : instances_)
        if (i.module == module) out.push_back(i.device);
    std::sort(out.begin(), out.end());
    return out;
}

bool PlacementMap::hosts(std::string_view module, std::string_view device) const {
    return std::any_of(instances_.begin(), instances_.end(),
                       [&](const ModuleInstance& i) { return i.module == module && i.device == device; });
}

std::vector<ModuleInstance> PlacementMap::sorted() const {
    auto out = instances_;
    std::sort(out.begin(), out.end(), [](const ModuleInstance& a, const ModuleInstance& b) {
        return std::tie(a.module, a.device) < std::tie(b.module, b.device);
    });
    return out;
}

std::vector<DeviceId> resolve_constraint_target(const PhysicalTopology& topo, const PlacementConstraint& c) {
    if (auto id = topo.find_device(c.target)) return {*id};
    std::vector<DeviceId> out;
    for (DeviceId d = 0; d < topo.devices().size(); ++d) {
        if (topo.device(d).device_class == c.target) out.push_back(d);
    }
    if (out.empty()) {
        throw ConfigError(fmt::format("constraint for module '{}' names '{}', which is neither a device nor a device class",
                                      c.module, c.target));
    }
    return out;
}

DemandTable compute_demands(const ApplicationGraph& app, const PhysicalTopology& topo) {
    DemandTable t;
    const auto n = topo.devices().size();
    t.per_device.resize(n);
    for (DeviceId d = 0; d < n; ++d) {
        std::vector<const Sensor*> below;
        for (const auto& s : topo.sensors()) {
            if (topo.in_subtree(topo.device_id(s.gateway), d)) below.push_back(&s);
        }
        t.per_device[d] = propagate_rates(app, below).module_demand;
    }
    return t;
}

namespace {

struct PinSet {
    std::vector<bool> pinned;                      // per module
    std::vector<std::vector<DeviceId>> targets;    // per module
};

PinSet resolve_pins(const ApplicationGraph& app, const PhysicalTopology& topo,
                    std::span<const PlacementConstraint> constraints) {
    PinSet pins;
    pins.pinned.assign(app.modules().size(), false);
    pins.targets.assign(app.modules().size(), {});
    for (const auto& c : constraints) {
        auto m = app.find_module(c.module);
        if (!m) throw ConfigError(fmt::format("constraint names unknown module '{}'", c.module));
        pins.pinned[*m] = true;
        for (DeviceId d : resolve_constraint_target(topo, c)) {
            auto& t = pins.targets[*m];
            if (std::find(t.begin(), t.end(), d) == t.end()) t.push_back(d);
        }
    }
    return pins;
}

}  // namespace

PlacementMap place_cloud_only(const ApplicationGraph& app, const PhysicalTopology& topo,
                              std::span<const PlacementConstraint> constraints) {
    PlacementMap map;
    if (app.modules().empty()) return map;
    const PinSet pins = resolve_pins(app, topo, constraints);
    const DemandTable demands = compute_demands(app, topo);
    const DeviceId root = topo.root();
    for (ModuleId m = 0; m < app.modules().size(); ++m) {
        const auto& name = app.module(m).name;
        if (pins.pinned[m]) {
            for (DeviceId d : pins.targets[m]) map.add({name, topo.device(d).name, demands.per_device[d][m]});
        } else {
            map.add({name, topo.device(root).name, demands.per_device[root][m]});
        }
    }
    return map;
}

namespace {

// Mutable state of one edge-ward run.
class EdgewardRun {
public:
    EdgewardRun(const ApplicationGraph& app, const PhysicalTopology& topo, const DemandTable& demands,
                const EdgewardOptions& options, std::vector<PlacementStep>* trace)
        : app_(app), topo_(topo), demands_(demands), options_(options), trace_(trace) {
        avail_.resize(topo.devices().size());
        for (DeviceId d = 0; d < avail_.size(); ++d) avail_[d] = topo.device(d).mips;
        hosted_.assign(app.modules().size(), {});
    }

    void pin(const PinSet& pins) {
        pinned_ = pins.pinned;
        for (ModuleId m = 0; m < pins.targets.size(); ++m) {
            for (DeviceId d : pins.targets[m]) {
                const double demand = demands_.per_device[d][m];
                hosted_[m][d] = demand;
                avail_[d] -= demand;
                note(d, m, PlacementAction::pinned, d, demand);
            }
        }
    }

    void run_path(DeviceId leaf) {
        const auto path = topo_.path_to_root(leaf);
        const auto& req = demands_.per_device[leaf];
        const auto n = app_.modules().size();
        std::vector<bool> handled(n, false);
        std::vector<bool> listed(n, false);
        std::vector<ModuleId> place_list;
        leaf_ = leaf;

        for (DeviceId d : path) {
            bool progress = true;
            while (progress) {
                progress = false;
                for (ModuleId w = 0; w < n; ++w) {
                    if (pinned_[w] || handled[w] || listed[w]) continue;
                    const auto preds = app_.up_predecessors(w);
                    const bool ready = std::all_of(preds.begin(), preds.end(),
                                                   [&](ModuleId p) { return pinned_[p] || handled[p]; });
                    if (ready) {
                        place_list.push_back(w);
                        listed[w] = true;
                    }
                }
                for (ModuleId theta : place_list) {
                    if (handled[theta]) continue;
                    if (auto f = host_on_path(theta, path)) {
                        merge(theta, *f, req[theta], d);
                        handled[theta] = true;
                        progress = true;
                    } else if (req[theta] <= avail_[d] && app_.module(theta).ram_mb <= topo_.device(d).ram_mb) {
                        hosted_[theta][d] = req[theta];
                        avail_[d] -= req[theta];
                        note(d, theta, PlacementAction::placed, d, req[theta]);
                        handled[theta] = true;
                        progress = true;
                    }
                }
                std::erase_if(place_list, [&](ModuleId m) { return handled[m]; });
                if (!options_.cascade) break;
            }
        }
        for (ModuleId m = 0; m < n; ++m) {
            if (!pinned_[m] && !handled[m]) {
                throw PlacementError(app_.module(m).name, req[m],
                                     fmt::format("module '{}' (demand {:.4g}) cannot be placed on any device of the "
                                                 "path from '{}' to the root",
                                                 app_.module(m).name, req[m], topo_.device(leaf).name));
            }
        }
    }

    PlacementMap result() const {
        PlacementMap map;
        for (ModuleId m = 0; m < hosted_.size(); ++m) {
            for (const auto& [d, demand] : hosted_[m]) map.add({app_.module(m).name, topo_.device(d).name, demand});
        }
        return map;
    }

private:
    std::optional<DeviceId> host_on_path(ModuleId m, const std::vector<DeviceId>& path) const {
        for (DeviceId d : path)
            if (hosted_[m].contains(d)) return d;
        return std::nullopt;
    }

    void merge(ModuleId theta, DeviceId f, double extra, DeviceId visiting) {
        double merged = hosted_[theta][f] + extra;
        avail_[f] += hosted_[theta][f];
        hosted_[theta].erase(f);
        const DeviceId original = f;
        while (merged >= avail_[f]) {
            const DeviceId up = topo_.parent(f);
            if (up == kNoDevice) {
                throw PlacementError(app_.module(theta).name, merged,
                                     fmt::format("merged instance of '{}' (demand {:.4g}) does not fit on the root '{}'",
                                                 app_.module(theta).name, merged, topo_.device(f).name));
            }
            f = up;
            // A sibling path may already have an instance up here; fold it in.
            if (auto it = hosted_[theta].find(f); it != hosted_[theta].end()) {
                merged += it->second;
                avail_[f] += it->second;
                hosted_[theta].erase(it);
            }
        }
        hosted_[theta][f] = merged;
        avail_[f] -= merged;
        note(visiting, theta, f == original ? PlacementAction::merged : PlacementAction::pushed_up, f,
             merged);
    }

    void note(DeviceId at, ModuleId m, PlacementAction a, DeviceId host, double demand) {
        if (!trace_) return;
        trace_->push_back(PlacementStep{a == PlacementAction::pinned ? "" : topo_.device(leaf_).name,
                                        topo_.device(at).name, app_.module(m).name, a, topo_.device(host).name,
                                        demand});
    }

    const ApplicationGraph& app_;
    const PhysicalTopology& topo_;
    const DemandTable& demands_;
    EdgewardOptions options_;
    std::vector<PlacementStep>* trace_;
    std::vector<double> avail_;
    std::vector<std::map<DeviceId, double>> hosted_;
    std::vector<bool> pinned_;
    DeviceId leaf_ = kNoDevice;
};

}  // namespace

PlacementMap place_edge_ward(const ApplicationGraph& app, const PhysicalTopology& topo,
                             std::span<const PlacementConstraint> constraints, const DemandTable& demands,
                             const EdgewardOptions& options, std::vector<PlacementStep>* trace) {
    if (demands.per_device.size() != topo.devices().size()) {
        throw ArgumentError("demand table does not match the topology's device count");
    }
    EdgewardRun run(app, topo, demands, options, trace);
    run.pin(resolve_pins(app, topo, constraints));
    for (DeviceId leaf : topo.leaves_by_name()) run.run_path(leaf);
    return run.result();
}

std::vector<PlacementViolation> validate_placement(const PlacementMap& map, const ApplicationGraph& app,
                                                   const PhysicalTopology& topo,
                                                   std::span<const PlacementConstraint> constraints) {
    std::vector<PlacementViolation> out;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& inst : map.instances()) {
        if (!app.find_module(inst.module)) {
            out.push_back({PlacementViolationKind::unknown_module, inst.module, inst.device,
                           fmt::format("instance of unknown module '{}'", inst.module)});
        }
        if (!topo.find_device(inst.device)) {
            out.push_back({PlacementViolationKind::unknown_device, inst.module, inst.device,
                           fmt::format("'{}' placed on unknown device '{}'", inst.module, inst.device)});
        }
        if (!seen.emplace(inst.module, inst.device).second) {
            out.push_back({PlacementViolationKind::duplicate_instance, inst.module, inst.device,
                           fmt::format("'{}' has two instances on '{}'", inst.module, inst.device)});
        }
    }
    for (const auto& m : app.modules()) {
        if (map.devices_for(m.name).empty()) {
            out.push_back({PlacementViolationKind::unplaced_module, m.name, "",
                           fmt::format("module '{}' has no instance", m.name)});
        }
    }

    std::map<std::string, std::set<std::string>> pinned_to;
    for (const auto& c : constraints) {
        std::vector<DeviceId> targets;
        try {
            targets = resolve_constraint_target(topo, c);
        } catch (const ConfigError& e) {
            out.push_back({PlacementViolationKind::pin_violated, c.module, c.target, e.what()});
            continue;
        }
        for (DeviceId d : targets) pinned_to[c.module].insert(topo.device(d).name);
    }
    for (const auto& [module, wanted] : pinned_to) {
        const auto actual_list = map.devices_for(module);
        const std::set<std::string> actual(actual_list.begin(), actual_list.end());
        std::vector<std::string> missing;
        std::vector<std::string> extra;
        std::set_difference(wanted.begin(), wanted.end(), actual.begin(), actual.end(), std::back_inserter(missing));
        std::set_difference(actual.begin(), actual.end(), wanted.begin(), wanted.end(), std::back_inserter(extra));
        if (missing.empty() && extra.empty()) continue;
        out.push_back({PlacementViolationKind::pin_violated, module, missing.empty() ? extra.front() : missing.front(),
                       fmt::format("pinned module '{}': missing on [{}], unexpected on [{}]", module,
                                   fmt::join(missing, ", "), fmt::join(extra, ", "))});
    }
    return out;
}

PlacementMap CloudOnlyPolicy::place(const ApplicationGraph& app, const PhysicalTopology& topo,
                                    std::span<const PlacementConstraint> constraints) const {
    return place_cloud_only(app, topo, constraints);
}

PlacementMap EdgewardPolicy::place(const ApplicationGraph& app, const PhysicalTopology& topo,
                                   std::span<const PlacementConstraint> constraints) const {
    return place_edge_ward(app, topo, constraints, compute_demands(app, topo), options_);
}

namespace {
std::mutex& registry_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

PolicyRegistry::PolicyRegistry() {
    factories_.emplace("cloud", [] { return std::make_unique<CloudOnlyPolicy>(); });
    factories_.emplace("edgeward", [] { return std::make_unique<EdgewardPolicy>(); });
}

PolicyRegistry& PolicyRegistry::instance() {
    static PolicyRegistry registry;
    return registry;
}

void PolicyRegistry::add(std::string name, Factory factory) {
    std::lock_guard lock(registry_mutex());
    factories_.insert_or_assign(std::move(name), std::move(factory));
}

std::unique_ptr<PlacementPolicy> PolicyRegistry::create(std::string_view name) const {
    std::lock_guard lock(registry_mutex());
    auto it = factories_.find(name);
    if (it == factories_.end()) {
        std::vector<std::string> known;
        for (const auto& [k, _] : factories_) known.push_back(k);
        throw ArgumentError(fmt::format("unknown placement policy '{}' (known: {})", name, fmt::join(known, ", ")));
    }
    return it->second();
}

std::vector<std::string> PolicyRegistry::names() const {
    std::lock_guard lock(registry_mutex());
    std::vector<std::string> out;
    for (const auto& [k, _] : factories_) out.push_back(k);
    return out;
}

}  // namespace fogsim
