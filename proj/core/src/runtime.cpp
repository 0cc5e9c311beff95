#include "fogsim/runtime.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <unordered_map>

#include "fogsim/errors.hpp"

namespace fogsim {

SimTime LinkQueue::transmit(SimTime now, double bytes) {
    const SimTime start = std::max(now, busy_until_);
    std::int64_t serialization_us = 0;
    if (bytes > 0 && bandwidth_ > 0) {
        serialization_us = static_cast<std::int64_t>(std::ceil(bytes * 1000.0 / bandwidth_));
    }
    busy_until_ = start + Duration::micros(serialization_us);
    return busy_until_ + latency_;
}

namespace {

constexpr std::uint32_t kNone = 0xFFFF'FFFFu;
constexpr std::uint64_t kOff = 0xFF;
constexpr std::size_t kMaxLoops = 8;

inline std::uint64_t loop_get(std::uint64_t pos, std::size_t loop) { return (pos >> (8 * loop)) & 0xFF; }
inline std::uint64_t loop_set(std::uint64_t pos, std::size_t loop, std::uint64_t v) {
    return (pos & ~(std::uint64_t{0xFF} << (8 * loop))) | (v << (8 * loop));
}
constexpr std::uint64_t kAllOff = ~std::uint64_t{0};

}  // namespace

struct Simulation::Impl {
    struct Tuple {
        std::uint64_t lineage = 0;
        std::uint64_t loop_pos = kAllOff;
        EdgeId edge = 0;
        DeviceId origin = kNoDevice;
    };

    struct DeviceEntity final : Entity {
        Impl* sim = nullptr;
        DeviceId id = 0;
        void handle(Kernel&, const Event& ev) override { sim->on_device_event(id, ev); }
        std::string_view entity_name() const override { return sim->topo.device(id).name; }
    };
    struct SensorEntity final : Entity {
        Impl* sim = nullptr;
        std::uint32_t id = 0;
        void handle(Kernel&, const Event&) override { sim->on_sensor_emission(id); }
        std::string_view entity_name() const override { return sim->topo.sensors()[id].name; }
    };
    struct ActuatorEntity final : Entity {
        Impl* sim = nullptr;
        std::uint32_t id = 0;
        void handle(Kernel&, const Event& ev) override {
            sim->on_actuator_arrival(std::get<TupleArrival>(ev.payload).tuple);
        }
        std::string_view entity_name() const override { return sim->topo.actuators()[id].name; }
    };

    struct LoopInfo {
        std::vector<std::uint32_t> symbols;
        std::size_t last = 0;
    };

    Impl(PhysicalTopology t, ApplicationGraph a, const PlacementMap& placement, RuntimeConfig c);

    // --- setup helpers
    std::uint32_t intern(const std::string& name) {
        auto [it, _] = symbols.try_emplace(name, static_cast<std::uint32_t>(symbols.size()));
        return it->second;
    }

    // --- tuple pool
    std::uint32_t alloc(const Tuple& t) {
        ++live;
        if (!free_slots.empty()) {
            const std::uint32_t s = free_slots.back();
            free_slots.pop_back();
            pool[s] = t;
            return s;
        }
        pool.push_back(t);
        return static_cast<std::uint32_t>(pool.size() - 1);
    }
    void release(std::uint32_t slot) {
        --live;
        free_slots.push_back(slot);
    }

    // --- event handlers
    void on_device_event(DeviceId d, const Event& ev);
    void on_sensor_emission(std::uint32_t s);
    void on_actuator_arrival(std::uint32_t slot);

    // --- tuple lifecycle
    void route(DeviceId d, std::uint32_t slot);
    void route_down(DeviceId d, std::uint32_t slot, const std::vector<std::uint32_t>& count, std::size_t stride,
                    std::uint32_t target);
    void send_up(DeviceId d, std::uint32_t slot);
    void send_down(DeviceId child, std::uint32_t slot);
    void deliver_to_actuators(DeviceId d, std::uint32_t type, std::uint32_t slot);
    void execute(DeviceId d, std::uint32_t slot);
    void complete(DeviceId d, std::uint32_t slot);
    void emit_from_module(DeviceId d, ModuleId m, EdgeId e, const Tuple& parent, std::uint64_t lineage);
    void cpu_changed(DeviceId d);
    void log_transfer(std::uint32_t link, double bytes, double latency_ms) {
        log_transfer(link, bytes, latency_ms, kernel.now());
    }
    void log_transfer(std::uint32_t link, double bytes, double latency_ms, SimTime sent) {
        net.record(link, bytes, latency_ms);
        if (cfg.record_transfers) transfers.push_back(TransferRecord{sent, link, bytes, latency_ms});
    }
    std::uint64_t loop_start_positions(std::uint32_t source_sym, EdgeId e, std::uint64_t lineage, SimTime at);

    PhysicalTopology topo;
    ApplicationGraph app;
    RuntimeConfig cfg;
    Kernel kernel;

    std::size_t n_devices = 0;
    std::size_t n_modules = 0;
    std::size_t n_act_types = 0;

    std::unordered_map<std::string, std::uint32_t> symbols;
    std::vector<std::uint32_t> module_sym;
    std::vector<LoopInfo> loop_info;

    // per edge
    std::vector<std::int64_t> edge_work;
    std::vector<Duration> edge_period;
    std::vector<double> edge_bytes;
    std::vector<Direction> edge_dir;
    std::vector<ModuleId> edge_module;   // destination module or kNoModule
    std::vector<std::uint32_t> edge_act; // destination actuator type or kNone
    std::vector<std::uint32_t> edge_dest_sym;

    // per device x module (index d * n_modules + m)
    std::vector<std::uint8_t> hosted;
    std::vector<std::uint32_t> module_below;  // instances in the subtree, device included
    std::vector<std::uint8_t> module_above;   // some strict ancestor hosts it
    std::vector<std::uint32_t> module_total;

    // per device x actuator type
    std::vector<std::vector<std::uint32_t>> act_here;
    std::vector<std::uint32_t> act_below;
    std::vector<std::uint8_t> act_above;
    std::vector<std::uint32_t> act_total;

    std::vector<DeviceId> parent;
    std::vector<SharedProcessor> cpus;
    std::vector<std::uint64_t> generation;
    std::vector<SimTime> pending_at;
    std::vector<std::uint8_t> has_pending;
    std::vector<LinkQueue> up_queue;    // child -> parent, indexed by child
    std::vector<LinkQueue> down_queue;  // parent -> child, indexed by child
    std::vector<std::uint32_t> up_link;
    std::vector<std::uint32_t> down_link;
    std::vector<double> link_latency_ms;  // indexed by child device

    std::vector<EdgeId> sensor_edge;
    std::vector<Duration> sensor_latency;
    std::vector<Duration> sensor_interval;  // deterministic sensors
    std::vector<DeviceId> sensor_gateway;
    std::vector<std::uint32_t> sensor_link;
    std::vector<std::uint32_t> sensor_sym;
    std::vector<DeviceId> actuator_gateway;
    std::vector<std::uint32_t> actuator_link;
    std::vector<Duration> actuator_latency;

    std::vector<DeviceEntity> device_entities;
    std::vector<SensorEntity> sensor_entities;
    std::vector<ActuatorEntity> actuator_entities;
    std::vector<EntityId> device_entity;
    std::vector<EntityId> sensor_entity;
    std::vector<EntityId> actuator_entity;

    std::vector<Tuple> pool;
    std::vector<std::uint32_t> free_slots;
    std::uint64_t live = 0;
    std::uint64_t next_lineage = 1;
    std::vector<std::uint64_t> finished;
    std::vector<std::uint32_t> branch_scratch;

    LoopTracker loops;
    EnergyAccount energy;
    NetworkUsageAccount net;
    std::vector<TransferRecord> transfers;
    TupleCounts counts;
    std::vector<std::pair<std::string, std::string>> placement_pairs;
};

Simulation::Impl::Impl(PhysicalTopology t, ApplicationGraph a, const PlacementMap& placement, RuntimeConfig c)
    : topo(std::move(t)), app(std::move(a)), cfg(c), kernel(c.seed) {
    if (auto v = validate(topo); !v.empty()) {
        std::string msg = "invalid topology:";
        for (const auto& x : v) msg += "\n  " + x.message;
        throw ValidationError(msg);
    }
    if (auto v = validate_placement(placement, app, topo, {}); !v.empty()) {
        std::string msg = "invalid placement:";
        for (const auto& x : v) msg += "\n  " + x.message;
        throw ValidationError(msg);
    }
    if (app.loops().size() > kMaxLoops) {
        throw ConfigError(fmt::format("at most {} loops can be tracked, application has {}", kMaxLoops,
                                      app.loops().size()));
    }

    n_devices = topo.devices().size();
    n_modules = app.modules().size();
    parent.resize(n_devices);
    for (DeviceId d = 0; d < n_devices; ++d) parent[d] = topo.parent(d);

    for (const auto& m : app.modules()) module_sym.push_back(intern(m.name));

    std::unordered_map<std::string, std::uint32_t> act_type_index;
    auto act_type = [&](const std::string& name) {
        auto [it, inserted] = act_type_index.try_emplace(name, static_cast<std::uint32_t>(act_type_index.size()));
        return it->second;
    };
    for (const auto& name : app.spec().actuator_types) act_type(name);

    const auto edges = app.edges();
    for (EdgeId e = 0; e < edges.size(); ++e) {
        const auto& edge = edges[e];
        const auto& r = app.resolved(e);
        edge_work.push_back(SharedProcessor::work_units(edge.cpu_mi));
        edge_period.push_back(edge.kind == EdgeKind::periodic ? Duration::from_millis(edge.period_ms) : Duration{});
        edge_bytes.push_back(edge.nw_bytes);
        edge_dir.push_back(edge.direction);
        edge_module.push_back(r.destination_kind == EndpointKind::module ? r.destination_module : kNoModule);
        edge_act.push_back(r.destination_kind == EndpointKind::actuator ? act_type(edge.destination) : kNone);
        edge_dest_sym.push_back(intern(edge.destination));
    }
    n_act_types = act_type_index.size();

    for (const auto& loop : app.loops()) {
        LoopInfo info;
        for (const auto& el : loop.elements) info.symbols.push_back(intern(el));
        info.last = info.symbols.size() - 1;
        loop_info.push_back(std::move(info));
    }
    {
        std::vector<std::string> names;
        for (const auto& loop : app.loops()) names.push_back(loop.name);
        loops = LoopTracker(std::move(names));
    }

    // Module instances.
    hosted.assign(n_devices * n_modules, 0);
    for (const auto& inst : placement.sorted()) placement_pairs.emplace_back(inst.module, inst.device);
    for (const auto& inst : placement.instances()) {
        const DeviceId d = topo.device_id(inst.device);
        const ModuleId m = *app.find_module(inst.module);
        hosted[d * n_modules + m] = 1;
    }
    module_below.assign(n_devices * n_modules, 0);
    module_above.assign(n_devices * n_modules, 0);
    module_total.assign(n_modules, 0);
    for (DeviceId d = 0; d < n_devices; ++d) {
        for (ModuleId m = 0; m < n_modules; ++m) {
            if (!hosted[d * n_modules + m]) continue;
            ++module_total[m];
            for (DeviceId x = d; x != kNoDevice; x = parent[x]) ++module_below[x * n_modules + m];
            for (DeviceId x = 0; x < n_devices; ++x) {
                if (x != d && topo.in_subtree(x, d)) module_above[x * n_modules + m] = 1;
            }
        }
    }

    // Actuators.
    act_here.assign(n_devices * n_act_types, {});
    act_below.assign(n_devices * n_act_types, 0);
    act_above.assign(n_devices * n_act_types, 0);
    act_total.assign(n_act_types, 0);
    const auto& acts = topo.actuators();
    for (std::uint32_t i = 0; i < acts.size(); ++i) {
        const DeviceId d = topo.device_id(acts[i].gateway);
        actuator_gateway.push_back(d);
        actuator_latency.push_back(Duration::from_millis(acts[i].gateway_latency_ms));
        actuator_link.push_back(static_cast<std::uint32_t>(
            net.add_link(fmt::format("{}->{}", topo.device(d).name, acts[i].name))));
        auto it = act_type_index.find(acts[i].actuator_type);
        if (it == act_type_index.end()) continue;
        const std::uint32_t a = it->second;
        act_here[d * n_act_types + a].push_back(i);
        ++act_total[a];
        for (DeviceId x = d; x != kNoDevice; x = parent[x]) ++act_below[x * n_act_types + a];
        for (DeviceId x = 0; x < n_devices; ++x) {
            if (x != d && topo.in_subtree(x, d)) act_above[x * n_act_types + a] = 1;
        }
    }

    // Devices, links, energy.
    std::vector<EnergyAccount::Device> power;
    up_queue.resize(n_devices);
    down_queue.resize(n_devices);
    up_link.assign(n_devices, kNone);
    down_link.assign(n_devices, kNone);
    link_latency_ms.assign(n_devices, 0);
    for (DeviceId d = 0; d < n_devices; ++d) {
        const auto& dev = topo.device(d);
        cpus.emplace_back(dev.mips, cfg.capacity_time_base);
        power.push_back({dev.idle_power_w, dev.busy_power_w});
        if (parent[d] == kNoDevice) continue;
        const auto& par = topo.device(parent[d]);
        const Duration lat = Duration::from_millis(dev.uplink_latency_ms);
        link_latency_ms[d] = dev.uplink_latency_ms;
        up_queue[d] = LinkQueue(dev.uplink_bw, lat);
        down_queue[d] = LinkQueue(par.downlink_bw, lat);
        up_link[d] = static_cast<std::uint32_t>(net.add_link(fmt::format("{}->{}", dev.name, par.name)));
        down_link[d] = static_cast<std::uint32_t>(net.add_link(fmt::format("{}->{}", par.name, dev.name)));
    }
    energy = EnergyAccount(std::move(power));
    generation.assign(n_devices, 0);
    pending_at.assign(n_devices, SimTime::zero());
    has_pending.assign(n_devices, 0);

    const auto& sensors = topo.sensors();
    for (std::uint32_t i = 0; i < sensors.size(); ++i) {
        const DeviceId d = topo.device_id(sensors[i].gateway);
        sensor_gateway.push_back(d);
        sensor_latency.push_back(Duration::from_millis(sensors[i].gateway_latency_ms));
        sensor_interval.push_back(Duration::from_millis(sensors[i].distribution.value_ms));
        sensor_edge.push_back(app.sensor_edge(sensors[i].tuple_type).value_or(kNone));
        sensor_link.push_back(static_cast<std::uint32_t>(
            net.add_link(fmt::format("{}->{}", sensors[i].name, topo.device(d).name))));
        sensor_sym.push_back(intern(sensors[i].tuple_type));
    }

    // Entities are registered once their containers are final.
    device_entities.resize(n_devices);
    for (DeviceId d = 0; d < n_devices; ++d) {
        device_entities[d].sim = this;
        device_entities[d].id = d;
        device_entity.push_back(kernel.register_entity(device_entities[d]));
    }
    sensor_entities.resize(sensors.size());
    for (std::uint32_t i = 0; i < sensors.size(); ++i) {
        sensor_entities[i].sim = this;
        sensor_entities[i].id = i;
        sensor_entity.push_back(kernel.register_entity(sensor_entities[i]));
    }
    actuator_entities.resize(acts.size());
    for (std::uint32_t i = 0; i < acts.size(); ++i) {
        actuator_entities[i].sim = this;
        actuator_entities[i].id = i;
        actuator_entity.push_back(kernel.register_entity(actuator_entities[i]));
    }

    // First emissions.
    for (std::uint32_t i = 0; i < sensors.size(); ++i) {
        if (sensor_edge[i] == kNone) continue;
        const auto& dist = sensors[i].distribution;
        const Duration first = dist.kind == TransmitKind::deterministic
                                   ? Duration::from_millis(dist.value_ms)
                                   : Duration::from_millis(kernel.rng().exponential(dist.value_ms));
        kernel.schedule(first + sensor_latency[i], sensor_entity[i], SensorEmission{});
    }
    for (EdgeId e = 0; e < edges.size(); ++e) {
        if (edges[e].kind != EdgeKind::periodic) continue;
        const ModuleId src = app.resolved(e).source_module;
        for (DeviceId d = 0; d < n_devices; ++d) {
            if (hosted[d * n_modules + src]) {
                kernel.schedule(Duration::from_millis(edges[e].period_ms), device_entity[d], PeriodicTick{e, 0});
            }
        }
    }
}

std::uint64_t Simulation::Impl::loop_start_positions(std::uint32_t source_sym, EdgeId e, std::uint64_t lineage,
                                                     SimTime at) {
    std::uint64_t pos = kAllOff;
    for (std::size_t l = 0; l < loop_info.size(); ++l) {
        const auto& info = loop_info[l];
        if (info.symbols[0] == source_sym && info.symbols[1] == edge_dest_sym[e]) {
            loops.on_origin(l, lineage, at);
            pos = loop_set(pos, l, 1);
        }
    }
    return pos;
}

// A sensor's event fires when its tuple reaches the gateway; the emission
// itself is back-dated by the attachment latency. This saves one event per
// emission. A tuple still on the attachment at the horizon is not counted.
void Simulation::Impl::on_sensor_emission(std::uint32_t s) {
    const auto& sensor = topo.sensors()[s];
    const EdgeId e = sensor_edge[s];
    const SimTime emitted = SimTime::from_us(kernel.now().us() - sensor_latency[s].count_us());
    Tuple t;
    t.edge = e;
    t.lineage = next_lineage++;
    t.origin = sensor_gateway[s];
    t.loop_pos = loop_start_positions(sensor_sym[s], e, t.lineage, emitted);
    const std::uint32_t slot = alloc(t);
    ++counts.emitted;
    log_transfer(sensor_link[s], edge_bytes[e], sensor.gateway_latency_ms, emitted);
    route(sensor_gateway[s], slot);

    const auto& dist = sensor.distribution;
    const Duration next = dist.kind == TransmitKind::deterministic
                              ? sensor_interval[s]
                              : Duration::from_millis(kernel.rng().exponential(dist.value_ms));
    kernel.schedule(next, sensor_entity[s], SensorEmission{});
}

void Simulation::Impl::on_device_event(DeviceId d, const Event& ev) {
    if (const auto* arrival = std::get_if<TupleArrival>(&ev.payload)) {
        route(d, arrival->tuple);
    } else if (const auto* done = std::get_if<TupleCompletion>(&ev.payload)) {
        if (done->generation != generation[d]) return;
        has_pending[d] = 0;
        finished.clear();
        cpus[d].collect_finished(kernel.now(), finished);
        // complete() may submit to this processor again; iterate over a copy of the count.
        const std::size_t n = finished.size();
        for (std::size_t i = 0; i < n; ++i) complete(d, static_cast<std::uint32_t>(finished[i]));
        cpu_changed(d);
    } else if (const auto* tick = std::get_if<PeriodicTick>(&ev.payload)) {
        const EdgeId e = tick->edge;
        const ModuleId src = app.resolved(e).source_module;
        Tuple t;
        t.edge = e;
        t.lineage = next_lineage++;
        t.origin = d;
        t.loop_pos = loop_start_positions(module_sym[src], e, t.lineage, kernel.now());
        ++counts.emitted;
        route(d, alloc(t));
        kernel.schedule(edge_period[e], device_entity[d], PeriodicTick{e, 0});
    } else {
        throw DispatchError(fmt::format("device cannot handle {}", message_kind(ev.payload)));
    }
}

void Simulation::Impl::on_actuator_arrival(std::uint32_t slot) {
    const Tuple& t = pool[slot];
    for (std::size_t l = 0; l < loop_info.size(); ++l) {
        if (loop_get(t.loop_pos, l) == loop_info[l].last) loops.on_end(l, t.lineage, kernel.now());
    }
    ++counts.delivered;
    release(slot);
}

void Simulation::Impl::route(DeviceId d, std::uint32_t slot) {
    const EdgeId e = pool[slot].edge;
    bool above;
    bool below;
    bool elsewhere;
    const ModuleId m = edge_module[e];
    if (m != kNoModule) {
        const std::size_t i = d * n_modules + m;
        if (hosted[i]) {
            execute(d, slot);
            return;
        }
        above = module_above[i];
        below = module_below[i] > 0;
        elsewhere = module_total[m] > module_below[i];
        if ((edge_dir[e] != Direction::up || !above) && below) {
            route_down(d, slot, module_below, n_modules, m);
            return;
        }
    } else {
        const std::uint32_t a = edge_act[e];
        const std::size_t i = d * n_act_types + a;
        if (!act_here[i].empty()) {
            deliver_to_actuators(d, a, slot);
            return;
        }
        above = act_above[i];
        below = act_below[i] > 0;
        elsewhere = act_total[a] > act_below[i];
        if ((edge_dir[e] != Direction::up || !above) && below) {
            route_down(d, slot, act_below, n_act_types, a);
            return;
        }
    }
    if ((above || elsewhere) && parent[d] != kNoDevice) {
        send_up(d, slot);
        return;
    }
    ++counts.undeliverable;
    release(slot);
}

void Simulation::Impl::route_down(DeviceId d, std::uint32_t slot, const std::vector<std::uint32_t>& count,
                                  std::size_t stride, std::uint32_t target) {
    // Tuples that trace back to a device below travel back to it alone.
    const DeviceId origin = pool[slot].origin;
    if (origin != kNoDevice && origin != d) {
        DeviceId c = origin;
        while (c != kNoDevice && parent[c] != d) c = parent[c];
        if (c != kNoDevice && count[c * stride + target] > 0) {
            send_down(c, slot);
            return;
        }
    }
    branch_scratch.clear();
    for (DeviceId c : topo.children(d)) {
        if (count[c * stride + target] > 0) branch_scratch.push_back(c);
    }
    if (branch_scratch.empty()) {
        ++counts.undeliverable;
        release(slot);
        return;
    }
    for (std::size_t i = 0; i + 1 < branch_scratch.size(); ++i) {
        const Tuple copy = pool[slot];
        ++counts.emitted;
        send_down(branch_scratch[i], alloc(copy));
    }
    send_down(branch_scratch.back(), slot);
}

void Simulation::Impl::send_up(DeviceId d, std::uint32_t slot) {
    const double bytes = edge_bytes[pool[slot].edge];
    const SimTime arrival = up_queue[d].transmit(kernel.now(), bytes);
    log_transfer(up_link[d], bytes, link_latency_ms[d]);
    kernel.schedule(arrival - kernel.now(), device_entity[parent[d]], TupleArrival{slot, 0});
}

void Simulation::Impl::send_down(DeviceId child, std::uint32_t slot) {
    const double bytes = edge_bytes[pool[slot].edge];
    const SimTime arrival = down_queue[child].transmit(kernel.now(), bytes);
    log_transfer(down_link[child], bytes, link_latency_ms[child]);
    kernel.schedule(arrival - kernel.now(), device_entity[child], TupleArrival{slot, 0});
}

void Simulation::Impl::deliver_to_actuators(DeviceId d, std::uint32_t type, std::uint32_t slot) {
    const auto& targets = act_here[d * n_act_types + type];
    const double bytes = edge_bytes[pool[slot].edge];
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const std::uint32_t a = targets[i];
        std::uint32_t s = slot;
        if (i + 1 < targets.size()) {
            const Tuple copy = pool[slot];
            ++counts.emitted;
            s = alloc(copy);
        }
        log_transfer(actuator_link[a], bytes, topo.actuators()[a].gateway_latency_ms);
        if (actuator_latency[a].count_us() == 0) {
            on_actuator_arrival(s);  // same instant either way; skip the queue
        } else {
            kernel.schedule(actuator_latency[a], actuator_entity[a], TupleArrival{s, 0});
        }
    }
}

void Simulation::Impl::execute(DeviceId d, std::uint32_t slot) {
    cpus[d].submit_units(kernel.now(), slot, edge_work[pool[slot].edge]);
    cpu_changed(d);
}

void Simulation::Impl::cpu_changed(DeviceId d) {
    const double u = cpus[d].utilization();
    if (u != energy.utilization(d)) energy.update(d, kernel.now(), u);
    const auto next = cpus[d].next_completion();
    if (!next) return;
    // An earlier pending event is kept: it fires, finds nothing done and reschedules.
    if (has_pending[d] && pending_at[d] <= *next) return;
    ++generation[d];
    has_pending[d] = 1;
    pending_at[d] = *next;
    kernel.schedule(*next - kernel.now(), device_entity[d], TupleCompletion{generation[d]});
}

void Simulation::Impl::complete(DeviceId d, std::uint32_t slot) {
    const Tuple t = pool[slot];
    release(slot);
    ++counts.executed;
    const ModuleId m = edge_module[t.edge];
    for (std::size_t l = 0; l < loop_info.size(); ++l) {
        if (loop_get(t.loop_pos, l) == loop_info[l].last) loops.on_end(l, t.lineage, kernel.now());
    }
    for (const auto& em : app.emissions(m, t.edge)) {
        if (!kernel.rng().bernoulli(em.probability)) continue;
        emit_from_module(d, m, em.edge, t, t.lineage);
    }
}

void Simulation::Impl::emit_from_module(DeviceId d, ModuleId m, EdgeId e, const Tuple& parent_tuple,
                                        std::uint64_t lineage) {
    Tuple out;
    out.edge = e;
    out.lineage = lineage;
    out.origin = parent_tuple.origin;
    out.loop_pos = kAllOff;
    for (std::size_t l = 0; l < loop_info.size(); ++l) {
        const auto& info = loop_info[l];
        const std::uint64_t q = loop_get(parent_tuple.loop_pos, l);
        if (q != kOff && q < info.last && info.symbols[q + 1] == edge_dest_sym[e]) {
            out.loop_pos = loop_set(out.loop_pos, l, q + 1);
        } else if (info.symbols[0] == module_sym[m] && info.symbols[1] == edge_dest_sym[e]) {
            loops.on_origin(l, lineage, kernel.now());
            out.loop_pos = loop_set(out.loop_pos, l, 1);
        }
    }
    ++counts.emitted;
    route(d, alloc(out));
}

Simulation::Simulation(PhysicalTopology topology, ApplicationGraph app, const PlacementMap& placement,
                       RuntimeConfig config)
    : impl_(std::make_unique<Impl>(std::move(topology), std::move(app), placement, config)) {}

Simulation::~Simulation() = default;

RunStats Simulation::run_until(SimTime horizon) { return impl_->kernel.run_until(horizon); }

SimTime Simulation::now() const { return impl_->kernel.now(); }
const LoopTracker& Simulation::loops() const { return impl_->loops; }
const NetworkUsageAccount& Simulation::network() const { return impl_->net; }
const EnergyAccount& Simulation::energy() const { return impl_->energy; }
const SharedProcessor& Simulation::processor(DeviceId device) const { return impl_->cpus.at(device); }
const std::vector<TransferRecord>& Simulation::transfers() const { return impl_->transfers; }

TupleCounts Simulation::tuple_counts() const {
    TupleCounts c = impl_->counts;
    c.in_flight = impl_->live;
    return c;
}

MetricsReport Simulation::finalize() {
    auto& s = *impl_;
    const SimTime now = s.kernel.now();
    s.energy.flush(now);

    MetricsReport r;
    r.duration_ms = now.ms();
    r.events = s.kernel.dispatched();
    for (std::size_t l = 0; l < s.loops.loop_count(); ++l) {
        const auto& st = s.loops.stats(l);
        LoopReport lr;
        lr.name = st.name;
        lr.completed = st.completed;
        lr.average_delay_ms = st.average_ms();
        if (st.completed > 0) {
            lr.min_delay_ms = static_cast<double>(st.min_us) / 1000.0;
            lr.max_delay_ms = static_cast<double>(st.max_us) / 1000.0;
        }
        lr.duplicate_ends = st.duplicate_ends;
        lr.orphan_ends = st.orphan_ends;
        r.loops.push_back(std::move(lr));
    }
    r.network_usage = s.net.total();
    r.network_usage_per_s = now.us() > 0 ? s.net.total() / now.seconds() : 0.0;
    for (std::size_t i = 0; i < s.net.link_count(); ++i) r.link_bytes.emplace_back(s.net.link_name(i), s.net.link_bytes(i));
    for (DeviceId d = 0; d < s.n_devices; ++d) {
        const auto& dev = s.topo.device(d);
        const double j = s.energy.joules(d);
        r.devices.push_back(DeviceEnergy{dev.name, dev.device_class, j, dev.idle_power_w, dev.busy_power_w});
        r.class_energy[dev.device_class.empty() ? "unclassified" : dev.device_class] += j;
    }
    r.tuples = tuple_counts();
    r.placement = s.placement_pairs;
    return r;
}

}  // namespace fogsim
