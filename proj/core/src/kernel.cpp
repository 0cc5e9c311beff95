#include "fogsim/kernel.hpp"

#include <algorithm>
#include <fmt/format.h>

#include "fogsim/errors.hpp"

namespace fogsim {

namespace {

// Heap comparator: "a fires after b".
struct Later {
    bool operator()(const Event& a, const Event& b) const {
        if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
        return a.seq > b.seq;
    }
};

}  // namespace

std::string_view message_kind(const Message& m) {
    struct Visitor {
        std::string_view operator()(const TupleArrival&) const { return "tuple-arrival"; }
        std::string_view operator()(const TupleCompletion&) const { return "tuple-completion"; }
        std::string_view operator()(const SensorEmission&) const { return "sensor-emission"; }
        std::string_view operator()(const PeriodicTick&) const { return "periodic-edge-tick"; }
        std::string_view operator()(const ResourceUpdate&) const { return "resource-update"; }
    };
    return std::visit(Visitor{}, m);
}

EventQueue::EventQueue()
    : buckets_(kSlots), occupied_(kSlots / 64, 0), summary_(kSlots / 64 / 64, 0) {}

void EventQueue::append(std::size_t slot, Event&& e) {
    std::uint32_t n;
    if (!free_nodes_.empty()) {
        n = free_nodes_.back();
        free_nodes_.pop_back();
        nodes_[n].event = std::move(e);
        nodes_[n].next = kNil;
    } else {
        n = static_cast<std::uint32_t>(nodes_.size());
        nodes_.push_back(Node{std::move(e), kNil});
    }
    if (buckets_[slot].tail == kNil) {
        buckets_[slot].head = n;
        occupied_[slot / 64] |= std::uint64_t{1} << (slot % 64);
        summary_[slot / 4096] |= std::uint64_t{1} << ((slot / 64) % 64);
    } else {
        nodes_[buckets_[slot].tail].next = n;
    }
    buckets_[slot].tail = n;
    ++wheel_count_;
}

void EventQueue::push(Event e) {
    const std::int64_t t = e.fire_at.us();
    if (t < base_) throw ArgumentError(fmt::format("event at {} us precedes the queue cursor {} us", t, base_));
    if (cached_next_ >= 0 && t < cached_next_) cached_next_ = t;
    if (t - base_ < kSlots) {
        append(static_cast<std::size_t>(t & (kSlots - 1)), std::move(e));
    } else {
        overflow_.push_back(std::move(e));
        std::push_heap(overflow_.begin(), overflow_.end(), Later{});
    }
}

// Moves overflow events that now fall inside the window. Any event already
// in their slot was pushed later, so appending keeps (fire_at, seq) order.
void EventQueue::migrate() {
    while (!overflow_.empty() && overflow_.front().fire_at.us() - base_ < kSlots) {
        std::pop_heap(overflow_.begin(), overflow_.end(), Later{});
        Event e = std::move(overflow_.back());
        overflow_.pop_back();
        append(static_cast<std::size_t>(e.fire_at.us() & (kSlots - 1)), std::move(e));
    }
}

std::int64_t EventQueue::next_wheel_time() const {
    const std::size_t start = static_cast<std::size_t>(base_ & (kSlots - 1));
    constexpr std::size_t kWords = kSlots / 64;
    // Scan from the cursor slot to the end of the ring, then wrap once.
    for (int pass = 0; pass < 2; ++pass) {
        const std::size_t from = pass == 0 ? start : 0;
        const std::size_t to = pass == 0 ? static_cast<std::size_t>(kSlots) : start;
        std::size_t w = from / 64;
        std::uint64_t bits = w < kWords ? occupied_[w] & (~std::uint64_t{0} << (from % 64)) : 0;
        while (w < kWords && w * 64 < to) {
            if (bits != 0) {
                const std::size_t slot = w * 64 + static_cast<std::size_t>(__builtin_ctzll(bits));
                if (slot >= to) break;
                return base_ + static_cast<std::int64_t>((slot - start) & (kSlots - 1));
            }
            // Jump to the next non-empty word using the summary bitmap.
            std::size_t next = w + 1;
            std::size_t sw = next / 64;
            std::uint64_t sbits = sw < summary_.size() ? summary_[sw] & (~std::uint64_t{0} << (next % 64)) : 0;
            while (sbits == 0 && ++sw < summary_.size()) sbits = summary_[sw];
            if (sbits == 0) break;
            w = sw * 64 + static_cast<std::size_t>(__builtin_ctzll(sbits));
            bits = occupied_[w];
        }
    }
    return -1;
}

SimTime EventQueue::next_time() const {
    if (cached_next_ >= 0) return SimTime::from_us(cached_next_);
    std::int64_t t = wheel_count_ > 0 ? next_wheel_time() : -1;
    if (!overflow_.empty()) {
        const std::int64_t o = overflow_.front().fire_at.us();
        if (t < 0 || o < t) t = o;
    }
    cached_next_ = t;
    return SimTime::from_us(t);
}

Event EventQueue::pop() {
    const std::int64_t t = next_time().us();
    if (t != base_) {
        base_ = t;
        migrate();
    }
    const std::size_t slot = static_cast<std::size_t>(t & (kSlots - 1));
    const std::uint32_t n = buckets_[slot].head;
    buckets_[slot].head = nodes_[n].next;
    if (buckets_[slot].head == kNil) {
        buckets_[slot].tail = kNil;
        occupied_[slot / 64] &= ~(std::uint64_t{1} << (slot % 64));
        if (occupied_[slot / 64] == 0) summary_[slot / 4096] &= ~(std::uint64_t{1} << ((slot / 64) % 64));
    }
    --wheel_count_;
    if (buckets_[slot].head == kNil) cached_next_ = -1;
    free_nodes_.push_back(n);
    return std::move(nodes_[n].event);
}

EntityId Kernel::register_entity(Entity& entity) {
    entities_.push_back(&entity);
    return static_cast<EntityId>(entities_.size() - 1);
}

const Entity& Kernel::entity(EntityId id) const {
    if (id >= entities_.size()) throw ConfigError(fmt::format("unknown entity id {}", id));
    return *entities_[id];
}

EventId Kernel::schedule(Duration delay, EntityId target, Message payload) {
    if (delay < Duration{}) {
        throw ArgumentError(fmt::format("negative delay {} us", delay.count_us()));
    }
    if (target >= entities_.size()) {
        throw ConfigError(fmt::format("event target {} is not a registered entity", target));
    }
    const EventId id = next_seq_++;
    queue_.push(Event{now_ + delay, id, target, std::move(payload)});
    return id;
}

RunStats Kernel::run_until(SimTime t_end) {
    if (t_end < now_) {
        throw ArgumentError(fmt::format("horizon {} us is before the clock ({} us)", t_end.us(), now_.us()));
    }
    RunStats stats;
    while (!queue_.empty() && queue_.next_time() <= t_end) {
        Event ev = queue_.pop();
        now_ = ev.fire_at;
        try {
            entities_[ev.target]->handle(*this, ev);
        } catch (const std::exception& ex) {
            throw DispatchError(fmt::format("event #{} ({}) for '{}' at t={} us failed: {}", ev.seq,
                                            message_kind(ev.payload), entities_[ev.target]->entity_name(),
                                            ev.fire_at.us(), ex.what()));
        }
        ++stats.events_processed;
    }
    dispatched_ += stats.events_processed;
    now_ = t_end;
    stats.final_clock = now_;
    return stats;
}

}  // namespace fogsim
