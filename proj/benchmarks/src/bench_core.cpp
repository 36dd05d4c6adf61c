// Microbenchmarks for the numerical hot paths: adaptive quadrature,
// exponential tilting, conditional means, trajectory enumeration, and the
// Hill estimator.
#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>
#include <vector>

#include "heavytails/conditioning.hpp"
#include "heavytails/diagnostics.hpp"
#include "heavytails/families.hpp"
#include "heavytails/mdp.hpp"
#include "heavytails/quadrature.hpp"
#include "heavytails/rng.hpp"
#include "heavytails/tilting.hpp"

using namespace heavytails;

namespace {

void BM_QuadratureLine(benchmark::State& state) {
    const auto f = [](double x) { return std::exp(-0.5 * x * x); };
    for (auto _ : state) {
        benchmark::DoNotOptimize(quad::integrate_line(f, 0.0).value);
    }
}
BENCHMARK(BM_QuadratureLine);

void BM_LogQuadratureDeepTail(benchmark::State& state) {
    DistPtr x = make_distribution("pareto:1.5,1");
    const auto f_log = [&](double v) { return x->log_tail(v); };
    for (auto _ : state) {
        benchmark::DoNotOptimize(quad::log_integrate_semi_inf_upper(f_log, 1e6).log_value);
    }
}
BENCHMARK(BM_LogQuadratureDeepTail);

void BM_ExpTiltGaussian(benchmark::State& state) {
    DistPtr g = make_distribution("normal:0,1");
    for (auto _ : state) {
        benchmark::DoNotOptimize(exp_tilt(g, 0.5).kl);
    }
}
BENCHMARK(BM_ExpTiltGaussian);

void BM_TailUpweightMeanAndKl(benchmark::State& state) {
    DistPtr base = make_distribution("student_t:3");
    for (auto _ : state) {
        const auto p = build_tail_upweighted({base, 1.0, 1e4, 1.0});
        benchmark::DoNotOptimize(upweighted_mean(*p));
        benchmark::DoNotOptimize(upweighted_kl(*p));
    }
}
BENCHMARK(BM_TailUpweightMeanAndKl);

void BM_ConditionalMean(benchmark::State& state) {
    DistPtr v = make_distribution("normal:0,1");
    DistPtr x = make_distribution("pareto:1.5,1");
    const double t = std::pow(10.0, static_cast<double>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(conditional_mean({v, x, t}));
    }
}
BENCHMARK(BM_ConditionalMean)->Arg(2)->Arg(4)->Arg(6);

void BM_RegionDecomposition(benchmark::State& state) {
    DistPtr v = make_distribution("normal:0,1");
    DistPtr x = make_distribution("pareto:1.5,1");
    const RegionScheme scheme = choose_h(x, HScheme::sqrt_t);
    for (auto _ : state) {
        benchmark::DoNotOptimize(region_decomposition({v, x, 1e4}, scheme).conditional_mean);
    }
}
BENCHMARK(BM_RegionDecomposition);

void BM_EnumerateTokenChain(benchmark::State& state) {
    const Dmrmdp chain = token_chain(3, 5, [](std::size_t) {
        return std::make_shared<Discrete>(std::vector<Atom>{{1.0, 1.0}});
    });
    const Policy pi0 = uniform_policy(chain);
    for (auto _ : state) {
        benchmark::DoNotOptimize(enumerate_trajectories(chain, pi0).trajectories.size());
    }
}
BENCHMARK(BM_EnumerateTokenChain);

void BM_HillCurve(benchmark::State& state) {
    Rng rng(7);
    SampleSet s;
    s.values = make_distribution("pareto:2,1")->sample(rng, 100000);
    const std::vector<int> grid = default_k_grid(s.values.size());
    for (auto _ : state) {
        benchmark::DoNotOptimize(hill_estimator(s, grid).back().estimate);
    }
}
BENCHMARK(BM_HillCurve);

void BM_TailVerdict(benchmark::State& state) {
    Rng rng(7);
    SampleSet s;
    s.values = make_distribution("pareto:1.5,1")->sample(rng, 100000);
    for (auto _ : state) {
        benchmark::DoNotOptimize(tail_verdict(s).verdict);
    }
}
BENCHMARK(BM_TailVerdict);

}  // namespace

BENCHMARK_MAIN();
