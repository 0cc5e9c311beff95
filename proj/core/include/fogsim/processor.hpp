#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fogsim/time.hpp"

namespace fogsim {

/// Processor-sharing CPU: every active execution receives mips / n.
///
/// Service is tracked in virtual time, so an arrival or completion costs
/// O(log n) and no per-job state is touched when the share changes. Work is
/// kept in integers (1e-6 MI scaled by the time base), which makes
/// completion instants exact up to the 1 us clock quantum.
class SharedProcessor {
public:
    /// `time_base`: the interval in which the device executes `mips` MI.
    SharedProcessor(double mips, Duration time_base);

    struct Execution {
        std::uint64_t job = 0;
        double remaining_mi = 0;
        double allocated_mips = 0;
    };

    /// Starts a job of `cpu_mi` at `now`. `job` is an opaque caller handle.
    void submit(SimTime now, std::uint64_t job, double cpu_mi) { submit_units(now, job, work_units(cpu_mi)); }
    /// Same, with the length already converted by work_units().
    void submit_units(SimTime now, std::uint64_t job, std::int64_t units);

    /// Job length in the processor's integer unit (1e-6 MI).
    static std::int64_t work_units(double cpu_mi);

    /// Earliest instant at which some job finishes; empty when idle.
    std::optional<SimTime> next_completion() const;

    /// Advances to `now` and appends the jobs finished by then, in finishing
    /// order (ties in submission order).
    void collect_finished(SimTime now, std::vector<std::uint64_t>& out);

    std::size_t active() const { return heap_.size(); }
    double mips() const { return mips_; }
    /// Share of each active execution, 0 when idle.
    double allocated_mips() const { return heap_.empty() ? 0.0 : mips_ / static_cast<double>(heap_.size()); }
    /// Fraction of capacity in use: 1 with any active execution.
    double utilization() const { return heap_.empty() ? 0.0 : 1.0; }

    /// Snapshot of active executions at `now` (does not advance state).
    std::vector<Execution> executions(SimTime now) const;

private:
    __extension__ typedef __int128 Work;

    struct Job {
        Work finish;
        std::uint64_t seq;
        std::uint64_t handle;
    };

    void advance(SimTime now);
    Work service_over(std::int64_t dt_us) const;

    double mips_;
    std::int64_t time_base_us_;
    Work rate_;         // work units delivered per microsecond
    std::int64_t max_fast_dt_;  // largest dt whose service fits in 64 bits
    Work virtual_ = 0;  // service received by any continuously active job
    SimTime last_;
    std::uint64_t next_seq_ = 0;
    std::vector<Job> heap_;
};

}  // namespace fogsim
