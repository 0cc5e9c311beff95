#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>

namespace fogsim {

/// Length of simulated time in integer microseconds.
///
/// All latencies in the model are whole milliseconds, but serialization and
/// processing delays are fractional; a fixed 1 us quantum keeps queue
/// ordering exact and platform independent.
class Duration {
public:
    constexpr Duration() = default;

    static constexpr Duration micros(std::int64_t us) { return Duration(us); }
    static constexpr Duration millis(std::int64_t ms) { return Duration(ms * 1000); }
    static constexpr Duration seconds(std::int64_t s) { return Duration(s * 1'000'000); }
    /// Rounds to the nearest microsecond.
    static Duration from_millis(double ms) { return Duration(std::llround(ms * 1000.0)); }

    constexpr std::int64_t count_us() const { return us_; }
    constexpr double as_millis() const { return static_cast<double>(us_) / 1000.0; }
    constexpr double as_seconds() const { return static_cast<double>(us_) / 1e6; }

    constexpr auto operator<=>(const Duration&) const = default;
    constexpr Duration operator+(Duration o) const { return Duration(us_ + o.us_); }
    constexpr Duration operator-(Duration o) const { return Duration(us_ - o.us_); }
    constexpr Duration& operator+=(Duration o) { us_ += o.us_; return *this; }

private:
    constexpr explicit Duration(std::int64_t us) : us_(us) {}
    std::int64_t us_ = 0;
};

/// Absolute point on the simulation clock; zero is the start of a run.
class SimTime {
public:
    constexpr SimTime() = default;

    static constexpr SimTime zero() { return SimTime(); }
    static constexpr SimTime from_us(std::int64_t us) { return SimTime(us); }
    static constexpr SimTime from_ms(std::int64_t ms) { return SimTime(ms * 1000); }
    static constexpr SimTime max() { return SimTime(std::numeric_limits<std::int64_t>::max()); }

    constexpr std::int64_t us() const { return us_; }
    constexpr double ms() const { return static_cast<double>(us_) / 1000.0; }
    constexpr double seconds() const { return static_cast<double>(us_) / 1e6; }

    constexpr auto operator<=>(const SimTime&) const = default;
    constexpr SimTime operator+(Duration d) const { return SimTime(us_ + d.count_us()); }
    constexpr Duration operator-(SimTime o) const { return Duration::micros(us_ - o.us_); }

private:
    constexpr explicit SimTime(std::int64_t us) : us_(us) {}
    std::int64_t us_ = 0;
};

}  // namespace fogsim
