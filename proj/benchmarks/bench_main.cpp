#include <benchmark/benchmark.h>

#include <random>

#include "fogsim/kernel.hpp"
#include "fogsim/processor.hpp"
#include "fogsim/scenarios.hpp"

namespace {

using namespace fogsim;

// Hold-model: keep N events pending, pop one and push one with a random delay.
void BM_EventQueueHold(benchmark::State& state) {
    const auto pending = static_cast<std::size_t>(state.range(0));
    const std::int64_t max_delay_us = state.range(1);
    std::mt19937_64 gen(1);
    std::uniform_int_distribution<std::int64_t> delay(0, max_delay_us);
    EventQueue q;
    EventId seq = 0;
    for (std::size_t i = 0; i < pending; ++i) q.push(Event{SimTime::from_us(delay(gen)), seq++, 0, SensorEmission{}});
    for (auto _ : state) {
        const Event e = q.pop();
        q.push(Event{SimTime::from_us(e.fire_at.us() + delay(gen)), seq++, 0, SensorEmission{}});
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_EventQueueHold)->Args({1'000, 20'000})->Args({100'000, 20'000})->Args({10'000, 10'000'000});

void BM_SharedProcessor(benchmark::State& state) {
    const auto jobs = static_cast<std::uint64_t>(state.range(0));
    std::vector<std::uint64_t> done;
    for (auto _ : state) {
        SharedProcessor p(3000, Duration::millis(1));
        SimTime t = SimTime::zero();
        for (std::uint64_t j = 0; j < jobs; ++j) {
            p.submit(t, j, 2000);
            t = SimTime::from_us(t.us() + 300);
            done.clear();
            p.collect_finished(t, done);
        }
        benchmark::DoNotOptimize(done.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(jobs));
}
BENCHMARK(BM_SharedProcessor)->Arg(10'000);

// Ten simulated seconds of the EEG scenario; items are dispatched events.
void BM_EegScenario(benchmark::State& state) {
    ScenarioSpec spec;
    spec.config = static_cast<int>(state.range(0));
    spec.headset = Headset::B;
    spec.placement = state.range(1) ? "edgeward" : "cloud";
    spec.duration = Duration::seconds(10);
    std::int64_t events = 0;
    for (auto _ : state) events += static_cast<std::int64_t>(run_scenario(spec).report.events);
    state.SetItemsProcessed(events);
}
BENCHMARK(BM_EegScenario)->Args({1, 1})->Args({5, 1})->Args({5, 0})->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
