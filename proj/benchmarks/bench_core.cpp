#include <benchmark/benchmark.h>

#include <vector>

#include "cfsync/clustering.hpp"
#include "cfsync/crb.hpp"
#include "cfsync/mle.hpp"
#include "cfsync/network.hpp"
#include "cfsync/pilots.hpp"

using namespace cfsync;

namespace {

LinkChannel four_taps() {
    return LinkChannel({{0.0, 1.0, {1, 0}}, {1.2e-6, 0.8, {0, 1}}, {3.1e-6, 0.5, {1, 0}}, {5.4e-6, 0.3, {0, -1}}}, 1.0);
}

void BM_LinkCrb(benchmark::State& st) {
    const auto pilot = PilotSequence::random_bpsk(static_cast<int>(st.range(0)), 1);
    const auto ch = four_taps();
    const std::vector<InterfererStat> inter{{0.03, 0.3}, {0.02, 0.6}};
    LinkCrbInput in;
    in.pilot = &pilot;
    in.channel = &ch;
    in.to_chips = 1.37;
    in.cfo_norm = 0.01;
    in.interferers = inter;
    in.noise_sigma2 = 1e-3;
    in.eta = 3;
    in.num_samples = ObservationWindow::minimal(pilot.length(), 3 + 5.4).num_samples;
    for (auto _ : st) benchmark::DoNotOptimize(link_crb(in));
}
BENCHMARK(BM_LinkCrb)->Arg(64)->Arg(128)->Arg(256);

void BM_MlEstimate(benchmark::State& st) {
    const auto pilot = PilotSequence::random_bpsk(128, 2);
    const auto ch = four_taps();
    const auto w = ObservationWindow::minimal(128, 3 + 5.4);
    const Emitter e{SyncOffset::from_normalized(1.37, 0.01, 1e-6, 3.0, 3), ch};
    const std::vector<Emitter> none;
    const CVector y = synthesize_rx(e, none, pilot, w, 1e-2, 3);
    GridSpec g = GridSpec::from_prior(3, 0.05);
    g.refine_levels = 5;
    const auto delays = ch.delays_chips(1e-6);
    for (auto _ : st) benchmark::DoNotOptimize(ml_estimate(y, g, pilot, delays, w));
}
BENCHMARK(BM_MlEstimate)->Unit(benchmark::kMillisecond);

void BM_Kmeans(benchmark::State& st) {
    Scenario s;
    s.num_aps = static_cast<int>(st.range(0));
    const auto pts = locations(place_aps(s));
    for (auto _ : st) benchmark::DoNotOptimize(clusters_at(pts, 4, 7));
}
BENCHMARK(BM_Kmeans)->Arg(20)->Arg(40)->Arg(60);

void BM_SwapSearch(benchmark::State& st) {
    Scenario s;
    s.num_aps = static_cast<int>(st.range(0));
    const auto pts = locations(place_aps(s));
    const NetworkModel net(s, pts, 1);
    const ClusterPlan plan = clusters_at(pts, 3, 1);
    const SinrModel model(net, plan);
    const PilotAssignment init = initial_assignment(plan);
    SwapConfig cfg;
    for (auto _ : st) benchmark::DoNotOptimize(swap_matching_search(init, model, 2 * 3 + init.tau() + 2, cfg, 5));
}
BENCHMARK(BM_SwapSearch)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
