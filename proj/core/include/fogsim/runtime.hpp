#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fogsim/application.hpp"
#include "fogsim/kernel.hpp"
#include "fogsim/metrics.hpp"
#include "fogsim/placement.hpp"
#include "fogsim/processor.hpp"
#include "fogsim/topology.hpp"

namespace fogsim {

struct RuntimeConfig {
    /// Interval in which a device executes its rated MIPS worth of MI.
    /// One millisecond matches the placement demand units (MI per ms).
    Duration capacity_time_base = Duration::millis(1);
    std::uint64_t seed = 0;
    /// Keep a log of every hop for offline checks.
    bool record_transfers = false;
};

/// One direction of one link: FIFO serialization followed by propagation.
class LinkQueue {
public:
    LinkQueue() = default;
    /// `bandwidth` in bytes per ms; 0 disables serialization.
    LinkQueue(double bandwidth, Duration latency) : bandwidth_(bandwidth), latency_(latency) {}

    /// Arrival time at the far end of `bytes` handed to the link at `now`.
    SimTime transmit(SimTime now, double bytes);

    SimTime busy_until() const { return busy_until_; }
    Duration latency() const { return latency_; }

private:
    double bandwidth_ = 0;
    Duration latency_;
    SimTime busy_until_;
};

struct TransferRecord {
    SimTime sent;
    std::uint32_t link = 0;  // index into the network account
    double bytes = 0;
    double latency_ms = 0;
};

/// A placed application running on a topology.
///
/// Sensors emit, tuples are routed along the tree, executed under processor
/// sharing and turned into downstream tuples until the horizon. The object
/// owns its kernel; one simulation per thread.
class Simulation {
public:
    /// Throws ValidationError if the placement does not fit the inputs.
    Simulation(PhysicalTopology topology, ApplicationGraph app, const PlacementMap& placement,
               RuntimeConfig config = {});
    ~Simulation();
    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    /// Runs to `horizon` (absolute). May be called repeatedly with later horizons.
    RunStats run_until(SimTime horizon);

    /// Flushes energy to the current clock and assembles the report.
    MetricsReport finalize();

    SimTime now() const;
    const LoopTracker& loops() const;
    const NetworkUsageAccount& network() const;
    const EnergyAccount& energy() const;
    const SharedProcessor& processor(DeviceId device) const;
    const std::vector<TransferRecord>& transfers() const;
    TupleCounts tuple_counts() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace fogsim
