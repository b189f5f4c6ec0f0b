// Serial reference against the OpenMP path for the hot kernels. Arg 0 = serial, 1 = parallel.

#include <benchmark/benchmark.h>

#include <random>

#include "hierctl/carleman.hpp"
#include "hierctl/kernels.hpp"
#include "hierctl/probes.hpp"

using namespace hierctl;

namespace {

kernels::Exec exec_of(const benchmark::State& st) {
  return st.range(0) == 0 ? kernels::Exec::serial : kernels::Exec::parallel;
}

Discretization make_disc(std::size_t n, std::size_t m) {
  return Discretization(SpaceGrid::build(n), TimeGrid(1.0, m), Degeneracy(0.5));
}

SpaceTimeField noise(const Discretization& disc, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  SpaceTimeField f = disc.field();
  for (std::size_t k = 0; k < f.slots(); ++k)
    for (std::size_t j = 0; j < f.nodes(); ++j) f(k, j) = normal(rng);
  return f;
}

void BM_MeanValuePotential(benchmark::State& st) {
  const auto disc = make_disc(200, 400);
  const SpaceTimeField w = noise(disc, 1);
  const Nonlinearity f = Nonlinearity::saturating(1.0);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::mean_value_potential(f, w, exec_of(st)));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(w.values().size()));
}

void BM_WeightedQuadrature(benchmark::State& st) {
  const auto disc = make_disc(200, 400);
  const SpaceTimeField z = noise(disc, 2), phi = noise(disc, 3);
  const Vector& wts = disc.space.weights();
  for (auto _ : st)
    benchmark::DoNotOptimize(
        kernels::weighted_quadrature(z, phi, 0.1, wts, disc.time.dt(), exec_of(st)));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(z.values().size()));
}

void BM_FunctionalI(benchmark::State& st) {
  const auto disc = make_disc(100, 200);
  const SigmaProfile sigma = build_sigma(disc.space, {0.35, 0.40});
  CarlemanParams p = choose_parameters(disc.a, sigma);
  p.s = calibrate_s(p, disc.time, disc.space);
  const WeightBundle w = build_weights(p, disc, sigma);
  const SpaceTimeField z = noise(disc, 4);
  for (auto _ : st) benchmark::DoNotOptimize(functional_I(z, w, disc, exec_of(st)).total());
}

void BM_ProbeHardy(benchmark::State& st) {
  const auto g = SpaceGrid::build(400);
  const Degeneracy a(0.5);
  for (auto _ : st) benchmark::DoNotOptimize(probe_hardy(a, g, 200, 7, exec_of(st)).worst);
}

}  // namespace

BENCHMARK(BM_MeanValuePotential)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WeightedQuadrature)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FunctionalI)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ProbeHardy)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
