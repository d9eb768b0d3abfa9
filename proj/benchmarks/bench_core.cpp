#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "cage/basis.hpp"
#include "cage/criterion.hpp"
#include "cage/geometry.hpp"
#include "cage/inference.hpp"
#include "cage/regionalize.hpp"
#include "cage/synth.hpp"

using namespace cage;

namespace {

OcBasis make_basis(int side) {
  GbfFamily fam(GbfKind::Bisquare, grid_knots(unit_square(), side, side));
  auto gram = gram_matrix_quadrature(fam, unit_square(), 40);
  return OcBasis(std::move(fam), std::move(gram));
}

PosteriorDraws fake_draws(int r, int n_units, int m) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n01;
  PosteriorDraws d;
  d.mu = Eigen::VectorXd::Zero(m);
  d.eta = Eigen::MatrixXd::NullaryExpr(m, r, [&] { return n01(gen); });
  d.xi = Eigen::MatrixXd::Zero(m, n_units);
  d.sigma_xi2 = Eigen::VectorXd::Ones(m);
  for (int i = 0; i < m; ++i) {
    const Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(r, r, [&] { return n01(gen); });
    d.q.push_back(a * a.transpose() / r);
  }
  d.y_b = Eigen::MatrixXd::NullaryExpr(m, n_units, [&] { return n01(gen); });
  return d;
}

}  // namespace

static void BM_GramMonteCarlo(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const GbfFamily fam(GbfKind::Bisquare, grid_knots(unit_square(), side, side));
  const PointCloud pts = sample_rect(unit_square(), 20000, 1);
  for (auto _ : state) {
    auto gram = gram_matrix(fam, pts, 1.0);
    benchmark::DoNotOptimize(gram.w.data());
  }
  state.SetLabel("r=" + std::to_string(side * side));
}
BENCHMARK(BM_GramMonteCarlo)->Arg(3)->Arg(10)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_GibbsIteration(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const OcBasis oc = make_basis(side);
  const FineSupport fine = build_grid(10, 10, unit_square(), 16, 2);
  ModelSpec spec{&oc, &fine, {}, {}};
  const PointCloud pts = sample_rect(unit_square(), 200, 4);
  for (int i = 0; i < pts.cols(); ++i) spec.obs.push_back(Observation{Point(pts.col(i)), 0.1 * i, 0.2});
  for (int j = 0; j < fine.size(); ++j) spec.obs.push_back(Observation{std::vector<int>{j}, 0.0, 0.2});
  spec.priors.q_prior = default_inverse_wishart(oc.rank());
  const Design design = build_design(spec);
  const int iters = 50;
  for (auto _ : state) {
    auto draws = gibbs_run(design, spec.priors, GibbsOptions{iters, 0, 1, 9});
    benchmark::DoNotOptimize(draws.eta.data());
  }
  state.SetItemsProcessed(state.iterations() * iters);
  state.SetLabel("r=" + std::to_string(side * side));
}
BENCHMARK(BM_GibbsIteration)->Arg(3)->Arg(10)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_EvaluatorAverage(benchmark::State& state) {
  const OcBasis oc = make_basis(10);
  const FineSupport fine = build_grid(10, 10, unit_square(), 16, 2);
  const PosteriorDraws draws = fake_draws(oc.rank(), fine.size(), 200);
  const CriterionEvaluator eval(draws, oc, fine, CriterionKind::Dcage);
  const Eigen::MatrixXd feats = cluster_features(fine, draws.y_b.row(0).transpose(), FeatureScaling::Standardize);
  const Partition part = kmeans(feats, static_cast<int>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(eval.average(part));
}
BENCHMARK(BM_EvaluatorAverage)->Arg(4)->Arg(20)->Arg(80);

static void BM_KMeans(benchmark::State& state) {
  const FineSupport fine = build_grid(10, 10, unit_square(), 4, 2);
  std::mt19937_64 gen(1);
  std::normal_distribution<double> n01;
  const Eigen::VectorXd y = Eigen::VectorXd::NullaryExpr(fine.size(), [&] { return n01(gen); });
  const Eigen::MatrixXd feats = cluster_features(fine, y, FeatureScaling::Standardize);
  const int k = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto p = kmeans(feats, k, ++seed);
    benchmark::DoNotOptimize(p.assignment.data());
  }
}
BENCHMARK(BM_KMeans)->Arg(5)->Arg(30)->Arg(90);

static void BM_ShcDendrogram(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const FineSupport fine = build_grid(side, side, unit_square(), 4, 2);
  std::mt19937_64 gen(1);
  std::normal_distribution<double> n01;
  const Eigen::VectorXd y = Eigen::VectorXd::NullaryExpr(fine.size(), [&] { return n01(gen); });
  const Eigen::MatrixXd feats = cluster_features(fine, y, FeatureScaling::Standardize);
  for (auto _ : state) {
    ShcDendrogram tree(feats, fine.neighbours());
    benchmark::DoNotOptimize(tree.min_clusters());
  }
}
BENCHMARK(BM_ShcDendrogram)->Arg(10)->Arg(30);

BENCHMARK_MAIN();
