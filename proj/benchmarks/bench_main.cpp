#include <benchmark/benchmark.h>

#include <random>

#include "declqg/lqg.hpp"
#include "declqg/random_gen.hpp"
#include "declqg/strategy_transform.hpp"

using namespace declqg;

namespace {

Mat random_mat(std::mt19937_64& rng, int rows, int cols) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = u(rng);
  }
  return m;
}

void bm_pinv(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const int n = static_cast<int>(state.range(0));
  const Mat a = random_mat(rng, n, n / 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pinv(a));
  }
}
BENCHMARK(bm_pinv)->Arg(16)->Arg(64)->Arg(128);

void bm_solve_team_pipeline(benchmark::State& state) {
  TeamGenConfig cfg;
  cfg.n = static_cast<int>(state.range(0));
  cfg.d_xi = 6;
  const TeamProblem p = generate_team_problem(cfg, 42);
  for (auto _ : state) {
    const PrecedenceStructure st = analyze_precedence(p);
    const CertificateMap certs = certify_substitutability(p, st);
    const ExpandedProblem ex = expand(p, st);
    const StaticObservations obs = to_static(ex);
    const StaticStrategy sol = solve_static(p, obs);
    const LinearTeamStrategy realized = realize_static_strategy(ex, obs, sol);
    const TransformResult r = transform_strategy(realized, ex, st, certs);
    benchmark::DoNotOptimize(expected_cost(p, r.final));
  }
}
BENCHMARK(bm_solve_team_pipeline)->Arg(3)->Arg(5)->Arg(6);

void bm_lqg_synthesize(benchmark::State& state) {
  LqgGenConfig cfg;
  cfg.n = 3;
  cfg.d_x = static_cast<int>(state.range(0));
  cfg.T = 10;
  const LqgProblem p = generate_lqg_problem(cfg, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(synthesize(p));
  }
}
BENCHMARK(bm_lqg_synthesize)->Arg(2)->Arg(4)->Arg(8);

void bm_exact_cost(benchmark::State& state) {
  LqgGenConfig cfg;
  cfg.n = 3;
  cfg.d_x = static_cast<int>(state.range(0));
  cfg.T = 10;
  const LqgProblem p = generate_lqg_problem(cfg, 7);
  const GainSchedule gs = synthesize(p);
  for (auto _ : state) {
    benchmark::DoNotOptimize(exact_cost(p, gs, SimMode::decentralized));
  }
}
BENCHMARK(bm_exact_cost)->Arg(2)->Arg(4)->Arg(8);

}  // namespace

BENCHMARK_MAIN();
