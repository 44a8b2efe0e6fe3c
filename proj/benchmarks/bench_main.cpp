#include <benchmark/benchmark.h>

#include <Eigen/Core>

#include "redistopt/kappa.hpp"
#include "redistopt/lowrank.hpp"
#include "redistopt/models.hpp"
#include "redistopt/prox.hpp"
#include "redistopt/prox_dual.hpp"
#include "redistopt/rng.hpp"
#include "redistopt/solvers.hpp"

namespace {

using namespace redistopt;

Eigen::VectorXd random_vector(std::uint64_t seed, Eigen::Index n) {
  SplitRng rng(seed);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

void bm_bar_group(benchmark::State& state) {
  const KappaSpec spec(KappaVariant::lsp, 1.0, 0.5);
  const Eigen::VectorXd z = random_vector(1, state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(bar_group(spec, z));
  }
}
BENCHMARK(bm_bar_group)->Arg(64)->Arg(1024);

void bm_prox_sparse_group(benchmark::State& state) {
  const Eigen::Index d = state.range(0);
  GroupStructure groups;
  groups.kind = GroupKind::disjoint;
  const Eigen::Index size = 10;
  for (Eigen::Index lo = 0; lo + size <= d; lo += size) {
    std::vector<int> idx(size);
    for (Eigen::Index k = 0; k < size; ++k) idx[k] = static_cast<int>(lo + k);
    groups.groups.push_back(std::move(idx));
    groups.weights.push_back(0.5);
  }
  const Eigen::VectorXd z = random_vector(2, d);
  for (auto _ : state) {
    benchmark::DoNotOptimize(prox_sparse_group(z, 0.3, groups));
  }
}
BENCHMARK(bm_prox_sparse_group)->Arg(100)->Arg(1000);

void bm_prox_tv_inexact(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const DenoiseInstance inst = synth_denoise(n, n, 0.1, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(prox_tv_inexact(inst.noisy.pixels,
                                             &inst.clean.pixels, 0.5, 1.0,
                                             1e-4, true));
  }
}
BENCHMARK(bm_prox_tv_inexact)->Arg(8)->Arg(16)->Arg(32);

void bm_rank1_svd(benchmark::State& state) {
  const CompletionInstance inst =
      synth_completion(200, 160, 5, 0.1, 0.0, 0.05, 5);
  GradOperator op;
  op.pattern = &inst.train;
  op.sparse_values.resize(static_cast<Eigen::Index>(inst.train.entries.size()));
  for (std::size_t e = 0; e < inst.train.entries.size(); ++e) {
    op.sparse_values[static_cast<Eigen::Index>(e)] = inst.train.entries[e].value;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(rank1_svd(op, 7));
  }
}
BENCHMARK(bm_rank1_svd);

void bm_nmapg_sparse_group(benchmark::State& state) {
  const KappaSpec spec(KappaVariant::lsp, 1.0, 0.5);
  const SparseGroupInstance inst =
      synth_sparse_group(100, 10, 0.75, 0.25, 200, 0.05, 11);
  GroupStructure groups = inst.groups;
  for (double& w : groups.weights) w = 2.0;
  CompositeProblem problem = build_sparse_group(inst.data, spec, 0.0, groups);
  SolverParams params;
  params.max_iterations = static_cast<int>(state.range(0));
  params.tolerance = 0.0;
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(100);
  for (auto _ : state) {
    benchmark::DoNotOptimize(nmapg(problem, x0, params));
  }
}
BENCHMARK(bm_nmapg_sparse_group)->Arg(50)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
