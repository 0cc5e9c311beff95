#include "fogsim/metrics.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <fstream>

#include "fogsim/errors.hpp"
#include "json_util.hpp"

namespace fogsim {

using detail::Json;
using detail::OrderedJson;

std::optional<double> LoopTracker::Stats::average_ms() const {
    if (completed == 0) return std::nullopt;
    return static_cast<double>(total_us) / static_cast<double>(completed) / 1000.0;
}

LoopTracker::LoopTracker(std::vector<std::string> loop_names) {
    for (auto& n : loop_names) {
        Stats s;
        s.name = std::move(n);
        stats_.push_back(std::move(s));
    }
    open_.resize(stats_.size());
    closed_.resize(stats_.size());
}

namespace {
inline std::size_t mix(std::uint64_t k) {
    k ^= k >> 33;
    k *= 0xff51afd7ed558ccdULL;
    k ^= k >> 33;
    return static_cast<std::size_t>(k);
}
}  // namespace

void LoopTracker::StartTable::grow() {
    std::vector<std::uint64_t> keys = std::move(keys_);
    std::vector<std::int64_t> values = std::move(values_);
    const std::size_t cap = keys.empty() ? 64 : keys.size() * 2;
    keys_.assign(cap, 0);
    values_.assign(cap, 0);
    size_ = 0;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (keys[i] != 0) insert(keys[i] - 1, values[i]);
    }
}

bool LoopTracker::StartTable::insert(std::uint64_t lineage, std::int64_t start) {
    if ((size_ + 1) * 2 > keys_.size()) grow();
    const std::uint64_t key = lineage + 1;
    const std::size_t mask = keys_.size() - 1;
    for (std::size_t i = mix(key) & mask;; i = (i + 1) & mask) {
        if (keys_[i] == key) return false;
        if (keys_[i] == 0) {
            keys_[i] = key;
            values_[i] = start;
            ++size_;
            return true;
        }
    }
}

bool LoopTracker::StartTable::take(std::uint64_t lineage, std::int64_t& start) {
    if (size_ == 0) return false;
    const std::uint64_t key = lineage + 1;
    const std::size_t mask = keys_.size() - 1;
    std::size_t i = mix(key) & mask;
    while (keys_[i] != key) {
        if (keys_[i] == 0) return false;
        i = (i + 1) & mask;
    }
    start = values_[i];
    --size_;
    // Backward-shift deletion keeps probe chains intact without tombstones.
    std::size_t hole = i;
    for (std::size_t j = (i + 1) & mask; keys_[j] != 0; j = (j + 1) & mask) {
        const std::size_t home = mix(keys_[j]) & mask;
        if (((j - home) & mask) >= ((j - hole) & mask)) {
            keys_[hole] = keys_[j];
            values_[hole] = values_[j];
            hole = j;
        }
    }
    keys_[hole] = 0;
    return true;
}

void LoopTracker::on_origin(std::size_t loop, std::uint64_t lineage, SimTime t) {
    auto& closed = closed_.at(loop);
    if (lineage < closed.size() && closed[lineage]) return;
    open_[loop].insert(lineage, t.us());
}

void LoopTracker::on_end(std::size_t loop, std::uint64_t lineage, SimTime t) {
    auto& s = stats_.at(loop);
    auto& closed = closed_[loop];
    if (lineage < closed.size() && closed[lineage]) {
        ++s.duplicate_ends;
        return;
    }
    std::int64_t start = 0;
    if (!open_[loop].take(lineage, start)) {
        ++s.orphan_ends;
        return;
    }
    const std::int64_t delay = t.us() - start;
    if (lineage >= closed.size()) closed.resize(std::max<std::size_t>(lineage + 1, closed.size() * 2), false);
    closed[lineage] = true;
    if (s.completed == 0) {
        s.min_us = s.max_us = delay;
    } else {
        s.min_us = std::min(s.min_us, delay);
        s.max_us = std::max(s.max_us, delay);
    }
    ++s.completed;
    s.total_us += delay;
}

EnergyAccount::EnergyAccount(std::vector<Device> devices) {
    state_.reserve(devices.size());
    for (const auto& d : devices) state_.push_back(State{d, SimTime::zero(), 0.0, 0, 0.0});
}

void EnergyAccount::update(std::size_t device, SimTime now, double utilization) {
    auto& s = state_.at(device);
    if (now < s.last) throw ArgumentError("energy update before the last update");
    if (utilization < 0 || utilization > 1) throw ArgumentError("utilization must lie in [0, 1]");
    const std::int64_t dt = (now - s.last).count_us();
    s.elapsed_us += dt;
    s.loaded_us += s.u * static_cast<double>(dt);
    s.last = now;
    s.u = utilization;
}

void EnergyAccount::flush(SimTime now) {
    for (std::size_t d = 0; d < state_.size(); ++d) update(d, now, state_[d].u);
}

double EnergyAccount::joules(std::size_t device) const {
    const auto& s = state_.at(device);
    const double t = static_cast<double>(s.elapsed_us) / 1e6;
    const double loaded = std::min(s.loaded_us / 1e6, t);
    const double e = s.power.idle_w * t + (s.power.busy_w - s.power.idle_w) * loaded;
    // Rounding guard: the exact value never exceeds busy x t.
    return std::min(e, s.power.busy_w * t);
}

std::size_t NetworkUsageAccount::add_link(std::string name) {
    links_.push_back(Link{std::move(name), 0});
    return links_.size() - 1;
}

void NetworkUsageAccount::record(std::size_t link, double bytes, double latency_ms) {
    links_.at(link).bytes += bytes;
    total_ += bytes * latency_ms;
}

double MetricsReport::total_energy() const {
    double sum = 0;
    for (const auto& d : devices) sum += d.joules;
    return sum;
}

std::optional<double> MetricsReport::primary_loop_delay_ms() const {
    if (loops.empty()) return std::nullopt;
    return loops.front().average_delay_ms;
}

std::uint64_t peak_rss_kb() {
    std::ifstream status("/proc/self/status");
    std::string line;
    while (std::getline(status, line)) {
        if (line.rfind("VmHWM:", 0) == 0) {
            try {
                return std::stoull(line.substr(6));
            } catch (const std::exception&) {
                return 0;
            }
        }
    }
    return 0;
}

namespace {

OrderedJson opt(const std::optional<double>& v) { return v ? OrderedJson(*v) : OrderedJson(nullptr); }

std::optional<double> opt_from(const Json& j, const char* key) {
    const auto& v = j.at(key);
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
}

}  // namespace

std::string report_to_json(const MetricsReport& r) {
    OrderedJson doc;
    doc["labels"] = OrderedJson::object();
    for (const auto& [k, v] : r.labels) doc["labels"][k] = v;
    doc["duration_ms"] = r.duration_ms;
    doc["events"] = r.events;
    doc["loops"] = OrderedJson::array();
    for (const auto& l : r.loops) {
        OrderedJson j;
        j["name"] = l.name;
        j["completed"] = l.completed;
        j["average_delay_ms"] = opt(l.average_delay_ms);
        j["min_delay_ms"] = opt(l.min_delay_ms);
        j["max_delay_ms"] = opt(l.max_delay_ms);
        j["duplicate_ends"] = l.duplicate_ends;
        j["orphan_ends"] = l.orphan_ends;
        doc["loops"].push_back(std::move(j));
    }
    OrderedJson net;
    net["usage"] = r.network_usage;
    net["usage_per_s"] = r.network_usage_per_s;
    net["links"] = OrderedJson::array();
    for (const auto& [name, bytes] : r.link_bytes) net["links"].push_back(OrderedJson{{"link", name}, {"bytes", bytes}});
    doc["network"] = std::move(net);
    OrderedJson energy;
    energy["devices"] = OrderedJson::array();
    for (const auto& d : r.devices) {
        OrderedJson j;
        j["device"] = d.device;
        j["class"] = d.device_class;
        j["joules"] = d.joules;
        j["idle_w"] = d.idle_w;
        j["busy_w"] = d.busy_w;
        energy["devices"].push_back(std::move(j));
    }
    energy["classes"] = OrderedJson::object();
    for (const auto& [k, v] : r.class_energy) energy["classes"][k] = v;
    energy["total_j"] = r.total_energy();
    doc["energy"] = std::move(energy);
    doc["tuples"] = OrderedJson{{"emitted", r.tuples.emitted},
                                {"executed", r.tuples.executed},
                                {"delivered", r.tuples.delivered},
                                {"undeliverable", r.tuples.undeliverable},
                                {"in_flight", r.tuples.in_flight}};
    doc["placement"] = OrderedJson::array();
    for (const auto& [m, d] : r.placement) doc["placement"].push_back(OrderedJson{{"module", m}, {"device", d}});
    return doc.dump(2) + "\n";
}

MetricsReport report_from_json(std::string_view text) {
    const Json doc = detail::parse_document(text, "report");
    MetricsReport r;
    try {
        for (const auto& [k, v] : doc.at("labels").items()) r.labels[k] = v.get<std::string>();
        r.duration_ms = doc.at("duration_ms").get<double>();
        r.events = doc.at("events").get<std::uint64_t>();
        for (const auto& j : doc.at("loops")) {
            LoopReport l;
            l.name = j.at("name").get<std::string>();
            l.completed = j.at("completed").get<std::uint64_t>();
            l.average_delay_ms = opt_from(j, "average_delay_ms");
            l.min_delay_ms = opt_from(j, "min_delay_ms");
            l.max_delay_ms = opt_from(j, "max_delay_ms");
            l.duplicate_ends = j.at("duplicate_ends").get<std::uint64_t>();
            l.orphan_ends = j.at("orphan_ends").get<std::uint64_t>();
            r.loops.push_back(std::move(l));
        }
        const auto& net = doc.at("network");
        r.network_usage = net.at("usage").get<double>();
        r.network_usage_per_s = net.at("usage_per_s").get<double>();
        for (const auto& j : net.at("links")) {
            r.link_bytes.emplace_back(j.at("link").get<std::string>(), j.at("bytes").get<double>());
        }
        const auto& energy = doc.at("energy");
        for (const auto& j : energy.at("devices")) {
            r.devices.push_back(DeviceEnergy{j.at("device").get<std::string>(), j.at("class").get<std::string>(),
                                             j.at("joules").get<double>(), j.at("idle_w").get<double>(),
                                             j.at("busy_w").get<double>()});
        }
        for (const auto& [k, v] : energy.at("classes").items()) r.class_energy[k] = v.get<double>();
        const auto& t = doc.at("tuples");
        r.tuples.emitted = t.at("emitted").get<std::uint64_t>();
        r.tuples.executed = t.at("executed").get<std::uint64_t>();
        r.tuples.delivered = t.at("delivered").get<std::uint64_t>();
        r.tuples.undeliverable = t.at("undeliverable").get<std::uint64_t>();
        r.tuples.in_flight = t.at("in_flight").get<std::uint64_t>();
        for (const auto& j : doc.at("placement")) {
            r.placement.emplace_back(j.at("module").get<std::string>(), j.at("device").get<std::string>());
        }
    } catch (const Json::exception& e) {
        throw ParseError(fmt::format("report: {}", e.what()));
    }
    return r;
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string report_to_csv(const MetricsReport& r) {
    std::string out = "metric,key,value\r\n";
    auto row = [&](std::string_view metric, std::string_view key, const std::string& value) {
        out += fmt::format("{},{},{}\r\n", csv_field(metric), csv_field(key), csv_field(value));
    };
    for (const auto& [k, v] : r.labels) row("label", k, v);
    row("duration_ms", "", fmt::format("{}", r.duration_ms));
    row("events", "", fmt::format("{}", r.events));
    for (const auto& l : r.loops) {
        row("loop_completed", l.name, fmt::format("{}", l.completed));
        row("loop_average_delay_ms", l.name, l.average_delay_ms ? fmt::format("{}", *l.average_delay_ms) : "");
        row("loop_min_delay_ms", l.name, l.min_delay_ms ? fmt::format("{}", *l.min_delay_ms) : "");
        row("loop_max_delay_ms", l.name, l.max_delay_ms ? fmt::format("{}", *l.max_delay_ms) : "");
    }
    row("network_usage", "", fmt::format("{}", r.network_usage));
    row("network_usage_per_s", "", fmt::format("{}", r.network_usage_per_s));
    for (const auto& [name, bytes] : r.link_bytes) row("link_bytes", name, fmt::format("{}", bytes));
    for (const auto& d : r.devices) row("device_energy_j", d.device, fmt::format("{}", d.joules));
    for (const auto& [k, v] : r.class_energy) row("class_energy_j", k, fmt::format("{}", v));
    row("total_energy_j", "", fmt::format("{}", r.total_energy()));
    row("tuples_emitted", "", fmt::format("{}", r.tuples.emitted));
    row("tuples_executed", "", fmt::format("{}", r.tuples.executed));
    row("tuples_delivered", "", fmt::format("{}", r.tuples.delivered));
    row("tuples_undeliverable", "", fmt::format("{}", r.tuples.undeliverable));
    row("tuples_in_flight", "", fmt::format("{}", r.tuples.in_flight));
    for (const auto& [m, d] : r.placement) row("placement", m, d);
    return out;
}

std::string timing_to_json(const RunTiming& t) {
    OrderedJson doc;
    doc["wall_ms"] = t.wall_ms;
    doc["peak_rss_kb"] = t.peak_rss_kb;
    return doc.dump(2) + "\n";
}

}  // namespace fogsim
