#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fogsim/rng.hpp"
#include "fogsim/time.hpp"

namespace fogsim {

using EntityId = std::uint32_t;
using EventId = std::uint64_t;

inline constexpr EntityId kNoEntity = 0xFFFF'FFFFu;

// Message kinds carried by events. Payloads hold only indices so events stay
// small; the entity that receives them owns the referenced state.

struct TupleArrival {
    std::uint32_t tuple = 0;   // slot in the owner's tuple pool
    std::uint32_t via = 0;     // link or attachment the tuple travelled over
};

struct TupleCompletion {
    std::uint64_t generation = 0;  // stale when it differs from the target's current one
};

struct SensorEmission {};

struct PeriodicTick {
    std::uint32_t edge = 0;
    std::uint32_t instance = 0;
};

struct ResourceUpdate {
    std::uint32_t tag = 0;
};

using Message = std::variant<TupleArrival, TupleCompletion, SensorEmission, PeriodicTick, ResourceUpdate>;

std::string_view message_kind(const Message& m);

struct Event {
    SimTime fire_at;
    EventId seq = 0;
    EntityId target = kNoEntity;
    Message payload;
};

/// Min-queue of events ordered by (fire_at, seq).
///
/// Events due within a window of 2^18 us after the last popped event sit in
/// a timing wheel with one FIFO bucket per microsecond; later ones wait in
/// a binary heap and move into the wheel as the window reaches them. Pushes
/// must not precede the last popped event.
class EventQueue {
public:
    EventQueue();

    void push(Event e);
    /// Removes and returns the earliest event. Precondition: !empty().
    Event pop();
    /// Fire time of the earliest event. Precondition: !empty().
    SimTime next_time() const;
    bool empty() const { return size() == 0; }
    std::size_t size() const { return wheel_count_ + overflow_.size(); }

private:
    static constexpr int kBits = 18;
    static constexpr std::int64_t kSlots = std::int64_t{1} << kBits;
    static constexpr std::uint32_t kNil = 0xFFFF'FFFFu;

    struct Node {
        Event event;
        std::uint32_t next = kNil;
    };

    std::int64_t next_wheel_time() const;
    void append(std::size_t slot, Event&& e);
    void migrate();

    std::vector<Node> nodes_;
    std::vector<std::uint32_t> free_nodes_;
    struct Bucket {
        std::uint32_t head = kNil;
        std::uint32_t tail = kNil;
    };
    std::vector<Bucket> buckets_;
    std::vector<std::uint64_t> occupied_;  // one bit per slot
    std::vector<std::uint64_t> summary_;   // one bit per occupied_ word
    std::size_t wheel_count_ = 0;
    std::int64_t base_ = 0;                // wheel holds [base_, base_ + kSlots)
    std::vector<Event> overflow_;          // heap
    mutable std::int64_t cached_next_ = -1;  // -1: unknown
};

class Kernel;

/// Anything that can be the target of an event.
class Entity {
public:
    virtual ~Entity() = default;
    virtual void handle(Kernel& kernel, const Event& event) = 0;
    virtual std::string_view entity_name() const = 0;
};

struct RunStats {
    std::uint64_t events_processed = 0;
    SimTime final_clock;
};

/// Sequential discrete-event engine.
///
/// Entities are registered by reference and must outlive the kernel's use of
/// them. A kernel is single-threaded; independent kernels share nothing.
class Kernel {
public:
    explicit Kernel(std::uint64_t seed = 0) : rng_(seed) {}

    Kernel(const Kernel&) = delete;
    Kernel& operator=(const Kernel&) = delete;

    EntityId register_entity(Entity& entity);
    std::size_t entity_count() const { return entities_.size(); }
    const Entity& entity(EntityId id) const;

    /// Enqueue `payload` for `target` at now() + delay.
    /// Throws ArgumentError for a negative delay, ConfigError for an unknown target.
    EventId schedule(Duration delay, EntityId target, Message payload);

    /// Dispatches every event with fire_at <= t_end in (fire_at, seq) order,
    /// then advances the clock to t_end. Handler failures abort the run with a
    /// DispatchError naming the event.
    RunStats run_until(SimTime t_end);

    SimTime now() const { return now_; }
    std::size_t pending() const { return queue_.size(); }
    std::uint64_t dispatched() const { return dispatched_; }
    Rng& rng() { return rng_; }

private:
    std::vector<Entity*> entities_;
    EventQueue queue_;
    SimTime now_;
    EventId next_seq_ = 0;
    std::uint64_t dispatched_ = 0;
    Rng rng_;
};

}  // namespace fogsim
