#include <benchmark/benchmark.h>

#include "hems/experiment.hpp"
#include "hems/radio.hpp"
#include "hems/sensors.hpp"

using namespace hems;

namespace {

// One simulated day of the shipped fixture; a week is seven of these.
void BM_SimulatedDay(benchmark::State& state) {
    const auto cfg = experiment::default_fixture();
    for (auto _ : state) {
        center::NullSink sink;
        experiment::Simulation sim(cfg, {experiment::Mode::OnlineEmergent, cfg.seed, false}, sink);
        sim.run(kSecondsPerDay);
        benchmark::DoNotOptimize(sim.summary());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(kSecondsPerDay));
}
BENCHMARK(BM_SimulatedDay)->Unit(benchmark::kMillisecond);

void BM_FrameRoundTrip(benchmark::State& state) {
    sensors::ReadingPayload r{NodeKind::EnergyConsumption, ElectricalSample::measured(0.57, 127.0, 1.0, 1.25)};
    radio::Frame f{NodeId{1}, kCoordinatorId, 7, radio::FrameKind::Reading, sensors::encode_reading(r)};
    for (auto _ : state) {
        auto bytes = radio::encode_frame(f);
        benchmark::DoNotOptimize(radio::decode_frame(bytes));
        f.seq++;
    }
}
BENCHMARK(BM_FrameRoundTrip);

}  // namespace

BENCHMARK_MAIN();
