// Serial reference versus OpenMP kernels.

#include <benchmark/benchmark.h>

#include "qdf/correlations.hpp"
#include "qdf/photostream.hpp"
#include "qdf/regression.hpp"
#include "qdf/time_grid.hpp"
#include "qdf/dynamics.hpp"

namespace {

using qdf::Execution;

Execution mode(const benchmark::State& state) {
    return state.range(0) ? Execution::Parallel : Execution::Serial;
}

void BM_RegressionMap(benchmark::State& state) {
    qdf::GaussianPulse pulse;
    pulse.length = 0.05;
    qdf::SensorConfig sensor;
    sensor.bandwidth = 1.0;
    const auto m = qdf::attach_sensor(qdf::build_two_level({}, pulse), "sigma", sensor);
    const auto grid = qdf::correlation_grid(m, qdf::default_horizon(m));
    for (auto _ : state) {
        auto r = qdf::two_time_g2_map(m, m.output("sensor"), grid.nodes, {}, mode(state));
        benchmark::DoNotOptimize(r.g2.values.data());
    }
}
BENCHMARK(BM_RegressionMap)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SweepPoints(benchmark::State& state) {
    qdf::SweepSetup setup;
    setup.builder = [](const qdf::GaussianPulse& p) { return qdf::build_two_level({}, p); };
    setup.observed = std::string("sigma");
    setup.options.check_convergence = false;
    for (auto _ : state) {
        auto r = qdf::sweep_filter_width(setup, {1.0, 5.0, 20.0}, {0.05}, mode(state));
        benchmark::DoNotOptimize(r.data());
    }
}
BENCHMARK(BM_SweepPoints)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_StreamShards(benchmark::State& state) {
    qdf::StreamConfig cfg;
    cfg.n_pulses = 2000000;
    cfg.noise_rate = 1e4;
    for (auto _ : state) {
        auto s = qdf::synthesize_stream(cfg, 7, mode(state));
        benchmark::DoNotOptimize(s.detector1.data());
    }
}
BENCHMARK(BM_StreamShards)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Coincidences(benchmark::State& state) {
    qdf::StreamConfig cfg;
    cfg.n_pulses = 2000000;
    cfg.p_single = 0.3;
    const auto s = qdf::synthesize_stream(cfg, 11);
    for (auto _ : state) {
        auto h = qdf::correlate(s.detector1, s.detector2, 5, 200000, mode(state));
        benchmark::DoNotOptimize(h.counts.data());
    }
}
BENCHMARK(BM_Coincidences)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
