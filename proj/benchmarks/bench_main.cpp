#include <benchmark/benchmark.h>

#include "loglap/discretize.hpp"
#include "loglap/solve.hpp"
#include "loglap/spectral.hpp"
#include "loglap/verify.hpp"

using namespace loglap;

namespace {

DiscreteFunction zero(const GridPtr& g) { return DiscreteFunction(g, Eigen::VectorXd::Zero(g->n)); }

void BM_AssembleEL(benchmark::State& state) {
    auto g = build_grid(-1.0, 1.0, static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(assemble_EL(g).matrix.data());
}
BENCHMARK(BM_AssembleEL)->RangeMultiplier(2)->Range(64, 1024)->Unit(benchmark::kMillisecond);

void BM_AssembleEs(benchmark::State& state) {
    auto g = build_grid(-1.0, 1.0, static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(assemble_Es(g, 0.1).matrix.data());
}
BENCHMARK(BM_AssembleEs)->RangeMultiplier(2)->Range(64, 1024)->Unit(benchmark::kMillisecond);

void BM_SmallestEig(benchmark::State& state) {
    auto g = build_grid(-1.0, 1.0, static_cast<int>(state.range(0)));
    const auto EL = assemble_EL(g);
    const auto M = assemble_mass(g);
    for (auto _ : state) benchmark::DoNotOptimize(smallest_eig(EL, M).value);
}
BENCHMARK(BM_SmallestEig)->RangeMultiplier(2)->Range(64, 512)->Unit(benchmark::kMillisecond);

void BM_SolveSuperlinear(benchmark::State& state) {
    auto g = build_grid(-1.0, 1.0, static_cast<int>(state.range(0)));
    const auto p = make_log_problem(g, 1.0, zero(g));
    for (auto _ : state) benchmark::DoNotOptimize(solve_superlinear(p, std::nullopt).energy);
}
BENCHMARK(BM_SolveSuperlinear)->RangeMultiplier(2)->Range(64, 512)->Unit(benchmark::kMillisecond);

void BM_SolveSublinear(benchmark::State& state) {
    auto g = build_grid(-1.0, 1.0, static_cast<int>(state.range(0)));
    const auto p = make_log_problem(g, -1.0, zero(g));
    for (auto _ : state) benchmark::DoNotOptimize(solve_sublinear(p, std::nullopt).energy);
}
BENCHMARK(BM_SolveSublinear)->RangeMultiplier(2)->Range(64, 512)->Unit(benchmark::kMillisecond);

void BM_SolveFrac(benchmark::State& state) {
    auto g = build_grid(-1.0, 1.0, 256);
    const double s = 1.0 / static_cast<double>(state.range(0));
    const auto p = make_frac_problem(g, s, 2.0 + s, DiscreteFunction(g, Eigen::VectorXd::Ones(g->n)));
    for (auto _ : state) benchmark::DoNotOptimize(solve_frac(p, std::nullopt).energy);
}
BENCHMARK(BM_SolveFrac)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_SublinearAsymptotics(benchmark::State& state) {
    auto g = build_grid(-1.0, 1.0, 128);
    const auto fam = make_weight_family(-1.0, zero(g));
    for (auto _ : state)
        benchmark::DoNotOptimize(sublinear_asymptotics(fam, g, {0.1, 0.05, 0.025}).checks.size());
}
BENCHMARK(BM_SublinearAsymptotics)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
