#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fogsim/time.hpp"

namespace fogsim {

/// End-to-end delay bookkeeping for the application's loops.
class LoopTracker {
public:
    struct Stats {
        std::string name;
        std::uint64_t completed = 0;
        std::int64_t total_us = 0;
        std::int64_t min_us = 0;
        std::int64_t max_us = 0;
        std::uint64_t duplicate_ends = 0;
        std::uint64_t orphan_ends = 0;  // end seen without an origin

        std::optional<double> average_ms() const;
    };

    explicit LoopTracker(std::vector<std::string> loop_names = {});

    std::size_t loop_count() const { return stats_.size(); }

    /// First origin for a lineage wins; later ones are ignored.
    void on_origin(std::size_t loop, std::uint64_t lineage, SimTime t);
    void on_end(std::size_t loop, std::uint64_t lineage, SimTime t);

    const Stats& stats(std::size_t loop) const { return stats_.at(loop); }
    std::size_t open(std::size_t loop) const { return open_.at(loop).size(); }

private:
    // Open-addressing map lineage -> start time (linear probing, backward-shift erase).
    class StartTable {
    public:
        bool insert(std::uint64_t lineage, std::int64_t start);  // false if present
        bool take(std::uint64_t lineage, std::int64_t& start);    // removes on success
        std::size_t size() const { return size_; }

    private:
        void grow();
        std::vector<std::uint64_t> keys_;  // lineage + 1; 0 = empty
        std::vector<std::int64_t> values_;
        std::size_t size_ = 0;
    };

    std::vector<Stats> stats_;
    std::vector<StartTable> open_;
    std::vector<std::vector<bool>> closed_;  // indexed by lineage
};

/// Linear power model integrated over piecewise-constant utilization.
class EnergyAccount {
public:
    struct Device {
        double idle_w = 0;
        double busy_w = 0;
    };

    explicit EnergyAccount(std::vector<Device> devices = {});

    /// Charges the interval since the last update at the previous
    /// utilization, then switches to `utilization`.
    void update(std::size_t device, SimTime now, double utilization);
    /// Charges every device up to `now` without changing utilization.
    void flush(SimTime now);

    double joules(std::size_t device) const;
    double utilization(std::size_t device) const { return state_.at(device).u; }
    std::size_t device_count() const { return state_.size(); }

private:
    struct State {
        Device power;
        SimTime last;
        double u = 0;
        std::int64_t elapsed_us = 0;
        double loaded_us = 0;  // integral of u dt
    };
    std::vector<State> state_;
};

/// Network usage: sum of bytes x link latency (byte.ms) plus bytes per link.
class NetworkUsageAccount {
public:
    std::size_t add_link(std::string name);
    void record(std::size_t link, double bytes, double latency_ms);

    double total() const { return total_; }
    std::size_t link_count() const { return links_.size(); }
    const std::string& link_name(std::size_t link) const { return links_.at(link).name; }
    double link_bytes(std::size_t link) const { return links_.at(link).bytes; }

private:
    struct Link {
        std::string name;
        double bytes = 0;
    };
    std::vector<Link> links_;
    double total_ = 0;
};

struct LoopReport {
    std::string name;
    std::uint64_t completed = 0;
    std::optional<double> average_delay_ms;
    std::optional<double> min_delay_ms;
    std::optional<double> max_delay_ms;
    std::uint64_t duplicate_ends = 0;
    std::uint64_t orphan_ends = 0;
    bool operator==(const LoopReport&) const = default;
};

struct DeviceEnergy {
    std::string device;
    std::string device_class;
    double joules = 0;
    double idle_w = 0;
    double busy_w = 0;
    bool operator==(const DeviceEnergy&) const = default;
};

struct TupleCounts {
    std::uint64_t emitted = 0;       // created by sensors, periodic edges and modules
    std::uint64_t executed = 0;      // module executions completed
    std::uint64_t delivered = 0;     // actuator deliveries
    std::uint64_t undeliverable = 0;
    std::uint64_t in_flight = 0;     // alive at the horizon
    bool operator==(const TupleCounts&) const = default;
};

/// Everything a run reports. Only simulated quantities; wall-clock figures
/// live in RunTiming so that reports are reproducible byte for byte.
struct MetricsReport {
    std::map<std::string, std::string> labels;  // scenario, placement, seed, ...
    double duration_ms = 0;
    std::vector<LoopReport> loops;
    double network_usage = 0;          // byte.ms
    double network_usage_per_s = 0;
    std::vector<std::pair<std::string, double>> link_bytes;
    std::vector<DeviceEnergy> devices;
    std::map<std::string, double> class_energy;
    TupleCounts tuples;
    std::vector<std::pair<std::string, std::string>> placement;  // (module, device), sorted
    std::uint64_t events = 0;

    double total_energy() const;
    /// Average delay of the first loop, if any completed.
    std::optional<double> primary_loop_delay_ms() const;
    bool operator==(const MetricsReport&) const = default;
};

struct RunTiming {
    double wall_ms = 0;
    std::uint64_t peak_rss_kb = 0;
};

/// Peak resident set size of this process, 0 where unavailable.
std::uint64_t peak_rss_kb();

std::string report_to_json(const MetricsReport& r);
MetricsReport report_from_json(std::string_view text);
/// Columns metric,key,value; one row per reported number.
std::string report_to_csv(const MetricsReport& r);
std::string timing_to_json(const RunTiming& t);

/// RFC 4180 field quoting.
std::string csv_field(std::string_view s);

}  // namespace fogsim
