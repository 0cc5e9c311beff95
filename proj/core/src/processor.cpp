#include "fogsim/processor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fogsim/errors.hpp"

namespace fogsim {

namespace {

// Heap order: earliest finish tag first, submission order on ties.
struct FinishesLater {
    template <class J>
    bool operator()(const J& a, const J& b) const {
        if (a.finish != b.finish) return a.finish > b.finish;
        return a.seq > b.seq;
    }
};

}  // namespace

SharedProcessor::SharedProcessor(double mips, Duration time_base)
    : mips_(mips), time_base_us_(time_base.count_us()) {
    if (!(mips > 0)) throw ArgumentError("processor capacity must be positive");
    if (time_base_us_ <= 0) throw ArgumentError("capacity time base must be positive");
    rate_ = static_cast<Work>(std::llround(mips * 1e6));
    max_fast_dt_ = std::numeric_limits<std::int64_t>::max() / static_cast<std::int64_t>(rate_);
}

std::int64_t SharedProcessor::work_units(double cpu_mi) {
    if (cpu_mi < 0) throw ArgumentError("negative cpu length");
    return std::llround(cpu_mi * 1e6);
}

SharedProcessor::Work SharedProcessor::service_over(std::int64_t dt_us) const {
    if (heap_.empty() || dt_us <= 0) return 0;
    const auto n = static_cast<std::int64_t>(heap_.size());
    if (dt_us <= max_fast_dt_) return static_cast<std::int64_t>(rate_) * dt_us / n;
    return rate_ * dt_us / n;
}

void SharedProcessor::advance(SimTime now) {
    if (now < last_) throw ArgumentError("processor clock cannot move backwards");
    virtual_ += service_over((now - last_).count_us());
    last_ = now;
}

void SharedProcessor::submit_units(SimTime now, std::uint64_t job, std::int64_t units) {
    if (units < 0) throw ArgumentError("negative cpu length");
    advance(now);
    const Work work = static_cast<Work>(units) * time_base_us_;
    heap_.push_back(Job{virtual_ + work, next_seq_++, job});
    std::push_heap(heap_.begin(), heap_.end(), FinishesLater{});
}

std::optional<SimTime> SharedProcessor::next_completion() const {
    if (heap_.empty()) return std::nullopt;
    const Work diff = heap_.front().finish - virtual_;
    if (diff <= 0) return last_;
    const auto n = static_cast<std::int64_t>(heap_.size());
    const auto rate = static_cast<std::int64_t>(rate_);
    if (diff < std::numeric_limits<std::int64_t>::max() / (2 * n)) {
        const std::int64_t left = static_cast<std::int64_t>(diff) * n;
        return last_ + Duration::micros(left / rate + (left % rate != 0));
    }
    const Work left = diff * n;
    const Work dt = (left + rate_ - 1) / rate_;
    return last_ + Duration::micros(static_cast<std::int64_t>(dt));
}

void SharedProcessor::collect_finished(SimTime now, std::vector<std::uint64_t>& out) {
    advance(now);
    while (!heap_.empty() && heap_.front().finish <= virtual_) {
        std::pop_heap(heap_.begin(), heap_.end(), FinishesLater{});
        out.push_back(heap_.back().handle);
        heap_.pop_back();
    }
}

std::vector<SharedProcessor::Execution> SharedProcessor::executions(SimTime now) const {
    const Work v = virtual_ + service_over((now - last_).count_us());
    const double scale = 1e6 * static_cast<double>(time_base_us_);
    std::vector<Execution> out;
    out.reserve(heap_.size());
    for (const auto& j : heap_) {
        const Work left = std::max<Work>(j.finish - v, 0);
        out.push_back({j.handle, static_cast<double>(left) / scale, allocated_mips()});
    }
    std::sort(out.begin(), out.end(), [](const Execution& a, const Execution& b) { return a.job < b.job; });
    return out;
}

}  // namespace fogsim
