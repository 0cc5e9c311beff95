#include "fogsim/application.hpp"

#include <algorithm>
#include <set>

#include "fogsim/errors.hpp"
#include "json_util.hpp"

namespace fogsim {

std::string_view to_string(Direction d) { return d == Direction::up ? "up" : "down"; }
std::string_view to_string(EdgeKind k) { return k == EdgeKind::event ? "event" : "periodic"; }

namespace {

struct Names {
    std::unordered_map<std::string, ModuleId> modules;
    std::set<std::string> sensors;
    std::set<std::string> actuators;
};

Names index_names(const ApplicationSpec& spec) {
    Names n;
    for (ModuleId i = 0; i < spec.modules.size(); ++i) n.modules.emplace(spec.modules[i].name, i);
    n.sensors.insert(spec.sensor_types.begin(), spec.sensor_types.end());
    n.actuators.insert(spec.actuator_types.begin(), spec.actuator_types.end());
    return n;
}

// Kahn's algorithm; returns false when the graph has a cycle.
bool topo_sort(std::size_t n, const std::vector<std::vector<std::uint32_t>>& succ, std::vector<std::uint32_t>& order) {
    std::vector<int> indeg(n, 0);
    for (const auto& s : succ)
        for (auto v : s) ++indeg[v];
    std::vector<std::uint32_t> ready;
    for (std::uint32_t i = 0; i < n; ++i)
        if (indeg[i] == 0) ready.push_back(i);
    order.clear();
    // process lowest index first for a stable order
    std::reverse(ready.begin(), ready.end());
    while (!ready.empty()) {
        auto u = ready.back();
        ready.pop_back();
        order.push_back(u);
        for (auto v : succ[u]) {
            if (--indeg[v] == 0) {
                ready.push_back(v);
                std::sort(ready.begin(), ready.end(), std::greater<>());
            }
        }
    }
    return order.size() == n;
}

// Edge-level feeding relation: e feeds f when f is emitted by e's destination on receipt of e.
std::vector<std::vector<EdgeId>> rate_successors(const ApplicationSpec& spec, const Names& names) {
    std::vector<std::vector<EdgeId>> succ(spec.edges.size());
    for (EdgeId e = 0; e < spec.edges.size(); ++e) {
        auto dst = names.modules.find(spec.edges[e].destination);
        if (dst == names.modules.end()) continue;
        const auto& mod = spec.modules[dst->second];
        for (const auto& rule : mod.selectivity) {
            if (rule.input != spec.edges[e].tuple_type) continue;
            for (EdgeId f = 0; f < spec.edges.size(); ++f) {
                if (spec.edges[f].source == mod.name && spec.edges[f].tuple_type == rule.output &&
                    spec.edges[f].kind == EdgeKind::event) {
                    succ[e].push_back(f);
                }
            }
        }
    }
    return succ;
}

}  // namespace

std::vector<AppViolation> check_application(const ApplicationSpec& spec) {
    std::vector<AppViolation> out;
    auto add = [&out](std::string entity, std::string msg) { out.push_back({std::move(entity), std::move(msg)}); };
    const Names names = index_names(spec);

    if (names.modules.size() != spec.modules.size()) add(spec.name, "module names are not unique");
    for (const auto& m : spec.modules) {
        if (m.ram_mb < 0) add(m.name, "ram must be non-negative");
    }

    std::set<std::pair<std::string, std::string>> seen_out;
    for (const auto& e : spec.edges) {
        const std::string id = fmt::format("edge {} ({} -> {})", e.tuple_type, e.source, e.destination);
        const bool src_module = names.modules.contains(e.source);
        const bool src_sensor = names.sensors.contains(e.source);
        if (!src_module && !src_sensor) add(id, fmt::format("source '{}' is not a module or sensor type", e.source));
        if (src_sensor && e.tuple_type != e.source) {
            add(id, fmt::format("sensor edge must carry the sensor's tuple type '{}'", e.source));
        }
        if (!names.modules.contains(e.destination) && !names.actuators.contains(e.destination)) {
            add(id, fmt::format("destination '{}' is not a module or actuator type", e.destination));
        }
        if (e.cpu_mi < 0 || e.nw_bytes < 0) add(id, "cpu and network lengths must be non-negative");
        if (e.kind == EdgeKind::periodic) {
            if (!(e.period_ms > 0)) add(id, "periodic edge needs period_ms > 0");
            if (!src_module) add(id, "periodic edges must leave a module");
        }
        if (!seen_out.emplace(e.source, e.tuple_type).second) {
            add(id, fmt::format("'{}' already has an out-edge carrying '{}'", e.source, e.tuple_type));
        }
    }

    for (const auto& m : spec.modules) {
        for (const auto& r : m.selectivity) {
            const bool has_input = std::any_of(spec.edges.begin(), spec.edges.end(), [&](const AppEdge& e) {
                return e.destination == m.name && e.tuple_type == r.input;
            });
            const bool has_output = std::any_of(spec.edges.begin(), spec.edges.end(), [&](const AppEdge& e) {
                return e.source == m.name && e.tuple_type == r.output && e.kind == EdgeKind::event;
            });
            if (!has_input) add(m.name, fmt::format("selectivity input '{}' has no edge into the module", r.input));
            if (!has_output) {
                add(m.name, fmt::format("selectivity output '{}' is not an event edge leaving the module", r.output));
            }
            if (!(r.model.probability >= 0 && r.model.probability <= 1)) {
                add(m.name, fmt::format("selectivity {} -> {} probability {} outside [0,1]", r.input, r.output,
                                        r.model.probability));
            }
        }
    }

    // Placement dependency DAG: up-direction module-to-module edges only.
    std::vector<std::vector<std::uint32_t>> up(spec.modules.size());
    for (const auto& e : spec.edges) {
        auto s = names.modules.find(e.source);
        auto d = names.modules.find(e.destination);
        if (e.direction == Direction::up && s != names.modules.end() && d != names.modules.end()) {
            up[s->second].push_back(d->second);
        }
    }
    std::vector<std::uint32_t> order;
    if (names.modules.size() == spec.modules.size() && !topo_sort(spec.modules.size(), up, order)) {
        add(spec.name, "up-direction module edges form a cycle");
    }
    if (!topo_sort(spec.edges.size(), rate_successors(spec, names), order)) {
        add(spec.name, "selectivity rules form a cyclic rate dependency");
    }

    for (const auto& loop : spec.loops) {
        const std::string id = fmt::format("loop '{}'", loop.name);
        if (loop.elements.size() < 2) {
            add(id, "a loop needs at least two elements");
            continue;
        }
        for (std::size_t i = 0; i + 1 < loop.elements.size(); ++i) {
            const auto& a = loop.elements[i];
            const auto& b = loop.elements[i + 1];
            const bool joined = std::any_of(spec.edges.begin(), spec.edges.end(),
                                            [&](const AppEdge& e) { return e.source == a && e.destination == b; });
            if (!joined) add(id, fmt::format("no edge joins '{}' -> '{}'", a, b));
        }
    }
    return out;
}

ApplicationGraph build_application(ApplicationSpec spec) {
    if (auto v = check_application(spec); !v.empty()) {
        std::string msg = fmt::format("application '{}' is invalid:", spec.name);
        for (const auto& x : v) msg += fmt::format("\n  {}: {}", x.entity, x.message);
        throw ValidationError(msg);
    }
    const Names names = index_names(spec);
    ApplicationGraph g;
    g.module_by_name_.insert(names.modules.begin(), names.modules.end());
    g.actuator_types_ = spec.actuator_types;

    const auto n_mod = spec.modules.size();
    const auto n_edge = spec.edges.size();
    g.resolved_.resize(n_edge);
    g.emissions_by_input_.resize(n_edge);
    g.periodic_from_.resize(n_mod);
    g.up_preds_.resize(n_mod);

    for (EdgeId e = 0; e < n_edge; ++e) {
        const auto& edge = spec.edges[e];
        auto& r = g.resolved_[e];
        if (auto it = names.modules.find(edge.source); it != names.modules.end()) {
            r.source_kind = EndpointKind::module;
            r.source_module = it->second;
        } else {
            r.source_kind = EndpointKind::sensor;
            g.sensor_edge_.emplace(edge.source, e);
        }
        if (auto it = names.modules.find(edge.destination); it != names.modules.end()) {
            r.destination_kind = EndpointKind::module;
            r.destination_module = it->second;
        } else {
            r.destination_kind = EndpointKind::actuator;
        }
        if (edge.kind == EdgeKind::periodic) g.periodic_from_[r.source_module].push_back(e);
        if (edge.direction == Direction::up && r.source_kind == EndpointKind::module &&
            r.destination_kind == EndpointKind::module) {
            auto& preds = g.up_preds_[r.destination_module];
            if (std::find(preds.begin(), preds.end(), r.source_module) == preds.end()) {
                preds.push_back(r.source_module);
            }
        }
    }

    for (EdgeId e = 0; e < n_edge; ++e) {
        const auto& r = g.resolved_[e];
        if (r.destination_kind != EndpointKind::module) continue;
        const auto& mod = spec.modules[r.destination_module];
        for (const auto& rule : mod.selectivity) {
            if (rule.input != spec.edges[e].tuple_type) continue;
            for (EdgeId f = 0; f < n_edge; ++f) {
                const auto& out = spec.edges[f];
                if (out.source == mod.name && out.tuple_type == rule.output && out.kind == EdgeKind::event) {
                    g.emissions_by_input_[e].push_back({f, rule.model.probability});
                }
            }
        }
    }

    std::vector<std::uint32_t> order;
    topo_sort(n_edge, rate_successors(spec, names), order);
    g.rate_order_.assign(order.begin(), order.end());
    g.spec_ = std::move(spec);
    return g;
}

std::optional<ModuleId> ApplicationGraph::find_module(std::string_view name) const {
    auto it = module_by_name_.find(std::string(name));
    if (it == module_by_name_.end()) return std::nullopt;
    return it->second;
}

std::optional<EdgeId> ApplicationGraph::sensor_edge(std::string_view sensor_type) const {
    auto it = sensor_edge_.find(std::string(sensor_type));
    if (it == sensor_edge_.end()) return std::nullopt;
    return it->second;
}

bool ApplicationGraph::is_actuator_type(std::string_view name) const {
    return std::find(actuator_types_.begin(), actuator_types_.end(), name) != actuator_types_.end();
}

std::span<const ResolvedEmission> ApplicationGraph::emissions(ModuleId module, EdgeId input_edge) const {
    if (resolved_.at(input_edge).destination_module != module) return {};
    return emissions_by_input_[input_edge];
}

RateMap propagate_rates(const ApplicationGraph& app, const std::vector<const Sensor*>& sensors) {
    RateMap rates;
    const auto edges = app.edges();
    rates.edge_rate.assign(edges.size(), 0.0);
    rates.module_demand.assign(app.modules().size(), 0.0);

    for (const Sensor* s : sensors) {
        auto e = app.sensor_edge(s->tuple_type);
        if (!e) {
            rates.warnings.push_back(
                fmt::format("sensor '{}' emits '{}' which no module consumes", s->name, s->tuple_type));
            continue;
        }
        rates.edge_rate[*e] += 1.0 / s->distribution.value_ms;
    }
    for (EdgeId e = 0; e < edges.size(); ++e) {
        if (edges[e].kind == EdgeKind::periodic) rates.edge_rate[e] = 1.0 / edges[e].period_ms;
    }
    // rate_order is a topological order of the feeding relation, so each
    // edge's rate is final before it is pushed downstream.
    for (EdgeId e : app.rate_order()) {
        const auto& r = app.resolved(e);
        if (r.destination_kind != EndpointKind::module) continue;
        for (const auto& em : app.emissions(r.destination_module, e)) {
            rates.edge_rate[em.edge] += rates.edge_rate[e] * em.probability;
        }
    }
    for (EdgeId e = 0; e < edges.size(); ++e) {
        const auto& r = app.resolved(e);
        if (r.destination_kind == EndpointKind::module) {
            rates.module_demand[r.destination_module] += rates.edge_rate[e] * edges[e].cpu_mi;
        }
    }
    return rates;
}

RateMap propagate_rates(const ApplicationGraph& app, std::span<const Sensor> sensors) {
    std::vector<const Sensor*> ptrs;
    ptrs.reserve(sensors.size());
    for (const auto& s : sensors) ptrs.push_back(&s);
    return propagate_rates(app, ptrs);
}

std::vector<TupleDescriptor> apply_selectivity(const ApplicationGraph& app, ModuleId module, EdgeId input_edge,
                                               std::uint64_t lineage, Rng& rng) {
    std::vector<TupleDescriptor> out;
    for (const auto& em : app.emissions(module, input_edge)) {
        if (!rng.bernoulli(em.probability)) continue;
        const auto& e = app.edge(em.edge);
        out.push_back(TupleDescriptor{em.edge, e.tuple_type, e.cpu_mi, e.nw_bytes, lineage});
    }
    return out;
}

namespace {

using detail::Json;
using detail::ObjectReader;
using detail::OrderedJson;

std::vector<std::string> read_string_list(const Json& arr, const std::string& context) {
    std::vector<std::string> out;
    for (const auto& v : arr) {
        if (!v.is_string()) throw ParseError(fmt::format("{}: expected a list of strings", context));
        out.push_back(v.get<std::string>());
    }
    return out;
}

}  // namespace

ApplicationDocument parse_application_json(std::string_view text) {
    const Json doc = detail::parse_document(text, "application");
    ObjectReader top(doc, "application");
    top.allow_only({"schema_version", "name", "sensor_types", "actuator_types", "modules", "edges", "loops", "pins"});
    const double version = top.number("schema_version");
    if (version != kApplicationSchemaVersion) {
        throw ParseError(fmt::format("application: unsupported schema_version {} (expected {})", version,
                                     kApplicationSchemaVersion));
    }
    ApplicationDocument out;
    auto& spec = out.spec;
    spec.name = top.string("name");
    spec.sensor_types = read_string_list(top.array("sensor_types"), "application sensor_types");
    spec.actuator_types = read_string_list(top.array("actuator_types"), "application actuator_types");

    const Json& mods = top.array("modules");
    for (std::size_t i = 0; i < mods.size(); ++i) {
        ObjectReader r(mods[i], fmt::format("modules[{}]", i));
        r.allow_only({"name", "ram_mb", "selectivity"});
        AppModule m;
        m.name = r.string("name");
        m.ram_mb = r.number_or("ram_mb", 10);
        if (r.has("selectivity")) {
            const Json& sel = r.array("selectivity");
            for (std::size_t k = 0; k < sel.size(); ++k) {
                ObjectReader s(sel[k], fmt::format("modules[{}] '{}' selectivity[{}]", i, m.name, k));
                s.allow_only({"input", "output", "probability"});
                m.selectivity.push_back({s.string("input"), s.string("output"), {s.number_or("probability", 1.0)}});
            }
        }
        spec.modules.push_back(std::move(m));
    }

    const Json& edges = top.array("edges");
    for (std::size_t i = 0; i < edges.size(); ++i) {
        ObjectReader r(edges[i], fmt::format("edges[{}]", i));
        r.allow_only({"source", "destination", "tuple_type", "cpu_mi", "nw_bytes", "kind", "period_ms", "direction"});
        AppEdge e;
        e.source = r.string("source");
        e.destination = r.string("destination");
        e.tuple_type = r.string("tuple_type");
        e.cpu_mi = r.number("cpu_mi");
        e.nw_bytes = r.number("nw_bytes");
        const auto kind = r.string_or("kind", "event");
        if (kind == "event") {
            e.kind = EdgeKind::event;
        } else if (kind == "periodic") {
            e.kind = EdgeKind::periodic;
            e.period_ms = r.number("period_ms");
        } else {
            throw ParseError(fmt::format("edges[{}]: kind must be 'event' or 'periodic', got '{}'", i, kind));
        }
        if (e.kind == EdgeKind::event && r.has("period_ms")) {
            throw ParseError(fmt::format("edges[{}]: period_ms is only valid on periodic edges", i));
        }
        const auto dir = r.string_or("direction", "up");
        if (dir == "up") {
            e.direction = Direction::up;
        } else if (dir == "down") {
            e.direction = Direction::down;
        } else {
            throw ParseError(fmt::format("edges[{}]: direction must be 'up' or 'down', got '{}'", i, dir));
        }
        spec.edges.push_back(std::move(e));
    }

    if (top.has("loops")) {
        const Json& loops = top.array("loops");
        for (std::size_t i = 0; i < loops.size(); ++i) {
            ObjectReader r(loops[i], fmt::format("loops[{}]", i));
            r.allow_only({"name", "elements"});
            spec.loops.push_back({r.string("name"), read_string_list(r.array("elements"), r.context())});
        }
    }
    if (top.has("pins")) {
        const Json& pins = top.array("pins");
        for (std::size_t i = 0; i < pins.size(); ++i) {
            ObjectReader r(pins[i], fmt::format("pins[{}]", i));
            r.allow_only({"module", "target"});
            out.pins.push_back({r.string("module"), r.string("target")});
        }
    }
    return out;
}

std::string serialize_application_json(const ApplicationDocument& doc) {
    const auto& spec = doc.spec;
    OrderedJson j;
    j["schema_version"] = kApplicationSchemaVersion;
    j["name"] = spec.name;
    j["sensor_types"] = spec.sensor_types;
    j["actuator_types"] = spec.actuator_types;
    j["modules"] = OrderedJson::array();
    for (const auto& m : spec.modules) {
        OrderedJson mj;
        mj["name"] = m.name;
        mj["ram_mb"] = m.ram_mb;
        mj["selectivity"] = OrderedJson::array();
        for (const auto& r : m.selectivity) {
            OrderedJson rj;
            rj["input"] = r.input;
            rj["output"] = r.output;
            rj["probability"] = r.model.probability;
            mj["selectivity"].push_back(std::move(rj));
        }
        j["modules"].push_back(std::move(mj));
    }
    j["edges"] = OrderedJson::array();
    for (const auto& e : spec.edges) {
        OrderedJson ej;
        ej["source"] = e.source;
        ej["destination"] = e.destination;
        ej["tuple_type"] = e.tuple_type;
        ej["cpu_mi"] = e.cpu_mi;
        ej["nw_bytes"] = e.nw_bytes;
        ej["kind"] = std::string(to_string(e.kind));
        if (e.kind == EdgeKind::periodic) ej["period_ms"] = e.period_ms;
        ej["direction"] = std::string(to_string(e.direction));
        j["edges"].push_back(std::move(ej));
    }
    j["loops"] = OrderedJson::array();
    for (const auto& l : spec.loops) j["loops"].push_back({{"name", l.name}, {"elements", l.elements}});
    j["pins"] = OrderedJson::array();
    for (const auto& p : doc.pins) j["pins"].push_back({{"module", p.module}, {"target", p.target}});
    return j.dump(2) + "\n";
}

}  // namespace fogsim
