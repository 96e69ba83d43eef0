#include <benchmark/benchmark.h>

#include "fbsde/applications/builtins.hpp"
#include "fbsde/conditions.hpp"
#include "fbsde/envelope.hpp"
#include "fbsde/global_solver.hpp"
#include "fbsde/local_solver.hpp"
#include "fbsde/quadrature.hpp"

namespace {

using namespace fbsde;

void BM_IntegrateEnvelope(benchmark::State& state) {
    const auto steps = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(integrate_envelope(1.0, 2, 1.0, steps));
}
BENCHMARK(BM_IntegrateEnvelope)->Arg(1000)->Arg(10000);

void BM_BackwardStep(benchmark::State& state) {
    const auto p = apps::make_example36();
    const auto env = integrate_envelope(p.K, p.n, p.T, 1000);
    const auto g = default_grid(p, env, static_cast<int>(state.range(0)), 400);
    const GaussHermite gh(g.quadrature_order, p.d);
    const auto next = sample_terminal(p, g);
    const std::vector<double> cap{env.at(0.5, 0)};
    const std::vector<double> v(next.size(), 0.0);
    StepInputs in;
    in.problem = &p;
    in.grid = &g;
    in.quadrature = &gh;
    in.t = 0.5;
    in.dt = 1.0 / 400;
    in.u_next = LayerView{&g, 1, next, cap};
    in.u_guess = next;
    in.v_guess = v;
    for (auto _ : state) benchmark::DoNotOptimize(backward_step(in));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BackwardStep)->Arg(101)->Arg(401)->Arg(1601);

void BM_PicardSlice(benchmark::State& state) {
    const auto p = apps::make_example36();
    const auto env = integrate_envelope(p.K, p.n, p.T, 1000);
    const auto g = default_grid(p, env, static_cast<int>(state.range(0)), 400);
    const auto terminal = sample_terminal(p, g);
    for (auto _ : state) {
        benchmark::DoNotOptimize(picard_solve_subinterval(p, terminal, 0.5, 1.0, 200, g, env));
    }
}
BENCHMARK(BM_PicardSlice)->Arg(101)->Arg(401)->Unit(benchmark::kMillisecond);

void BM_BuildField(benchmark::State& state) {
    const auto p = apps::build_builtin(state.range(0) == 0 ? "example36" : "lq_game");
    const auto env = integrate_envelope(p.K, p.n, p.T, 1000);
    const auto g = default_grid(p, env, 401, 400);
    BuildOptions o;
    o.check_conditions = false;
    for (auto _ : state) benchmark::DoNotOptimize(build_decoupling_field(p, g, env, o));
}
BENCHMARK(BM_BuildField)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Monotonicity(benchmark::State& state) {
    const auto p = apps::make_example36();
    const auto sampler = box_sampler(p, default_box(p), 7);
    const auto N = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            check_monotonicity(p, {Monotonicity::M1, Monotonicity::M2, Monotonicity::M3}, sampler, N));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Monotonicity)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_SimulateForward(benchmark::State& state) {
    const auto p = apps::make_lq_control();
    const auto env = integrate_envelope(p.K, p.n, p.T, 1000);
    const auto field = build_decoupling_field(p, default_grid(p, env, 401, 400), env).first;
    const auto paths = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(simulate_forward(p, field, paths, 1));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateForward)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
