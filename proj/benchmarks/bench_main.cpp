#include <benchmark/benchmark.h>

#include "brickplan/config.hpp"
#include "brickplan/gate.hpp"
#include "brickplan/scheduler.hpp"
#include "brickplan/sequencer.hpp"
#include "brickplan/stability.hpp"

using namespace brickplan;

namespace {

const RunConfig& cfg() {
    static RunConfig c;
    return c;
}

// Built once per size, generation is slower than anything measured here.
const BrickStructure& design(int bricks) {
    static std::map<int, BrickStructure> cache;
    auto it = cache.find(bricks);
    if (it == cache.end())
        it = cache.emplace(bricks, generate_buildable_design(900 + bricks, bricks, cfg().world, cfg().mask_config(),
                                                             cfg().solver, cfg().generator))
                 .first;
    return it->second;
}

const AssemblySequence& sequence(int bricks) {
    static std::map<int, AssemblySequence> cache;
    auto it = cache.find(bricks);
    if (it == cache.end())
        it = cache.emplace(bricks, plan_sequence(design(bricks), cfg().mask_config(), cfg().solver)).first;
    return it->second;
}

void bm_stability(benchmark::State& st) {
    const auto& s = design(static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(stability(s, cfg().solver));
    st.counters["bricks"] = static_cast<double>(s.size());
}
BENCHMARK(bm_stability)->Arg(10)->Arg(24)->Arg(36)->Unit(benchmark::kMillisecond);

void bm_action_mask(benchmark::State& st) {
    const auto& s = design(static_cast<int>(st.range(0)));
    auto mask = cfg().mask_config();
    std::size_t i = 0;
    for (auto _ : st) {
        benchmark::DoNotOptimize(action_mask(s, i, mask, cfg().solver));
        i = (i + 1) % s.size();
    }
}
BENCHMARK(bm_action_mask)->Arg(10)->Arg(24)->Unit(benchmark::kMillisecond);

void bm_gate_random(benchmark::State& st) {
    std::uint64_t seed = 0;
    auto gc = cfg().gate_config();
    for (auto _ : st) {
        RandomProposer p(seed++, cfg().world, cfg().proposer);
        benchmark::DoNotOptimize(run_gate(p, gc));
    }
}
BENCHMARK(bm_gate_random)->Unit(benchmark::kMillisecond);

void bm_plan(benchmark::State& st) {
    const auto& s = design(static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(plan_sequence(s, cfg().mask_config(), cfg().solver));
}
BENCHMARK(bm_plan)->Arg(10)->Arg(14)->Unit(benchmark::kMillisecond)->Iterations(3);

void bm_schedule(benchmark::State& st) {
    int n = static_cast<int>(st.range(0));
    const auto& q = sequence(n);
    for (auto _ : st) benchmark::DoNotOptimize(schedule(q, design(n), cfg().layout(), cfg().scheduler));
}
BENCHMARK(bm_schedule)->Arg(10)->Arg(14)->Unit(benchmark::kMillisecond);

void bm_simulate(benchmark::State& st) {
    auto g = schedule(sequence(14), design(14), cfg().layout(), cfg().scheduler).tpg;
    auto ec = ExecConfig::with_failure_rate(0.1, 3);
    for (auto _ : st) {
        benchmark::DoNotOptimize(simulate(g, ec));
        ++ec.seed;
    }
}
BENCHMARK(bm_simulate)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
