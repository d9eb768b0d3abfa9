#include <gtest/gtest.h>

#include <random>
#include <set>

#include "cage/criterion.hpp"
#include "cage/error.hpp"
#include "cage/regionalize.hpp"
#include "support/oracles.hpp"

using namespace cage;

namespace {

std::vector<std::vector<int>> path_graph(int n) {
  std::vector<std::vector<int>> g(static_cast<std::size_t>(n));
  for (int i = 0; i + 1 < n; ++i) {
    g[static_cast<std::size_t>(i)].push_back(i + 1);
    g[static_cast<std::size_t>(i + 1)].push_back(i);
  }
  return g;
}

PosteriorDraws fake_draws(int m, int n_units, int r, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n01;
  PosteriorDraws d;
  d.mu = Eigen::VectorXd::Zero(m);
  d.eta = Eigen::MatrixXd::NullaryExpr(m, r, [&] { return n01(gen); });
  d.xi = Eigen::MatrixXd::Zero(m, n_units);
  d.sigma_xi2 = Eigen::VectorXd::Ones(m);
  for (int i = 0; i < m; ++i) d.q.push_back(oracle::random_psd(r, gen));
  d.y_b = Eigen::MatrixXd::NullaryExpr(m, n_units, [&] { return n01(gen); });
  return d;
}

OcBasis basis9() {
  GbfFamily fam(GbfKind::Bisquare, grid_knots(unit_square(), 3, 3));
  auto gram = gram_matrix_quadrature(fam, unit_square(), 30);
  return OcBasis(std::move(fam), std::move(gram));
}

}  // namespace

TEST(Kmeans, AllSingletonsWhenKEqualsN) {
  const Eigen::MatrixXd f = Eigen::MatrixXd::Random(12, 3);
  const auto p = kmeans(f, 12, 4);
  EXPECT_EQ(p.k, 12);
  std::set<int> labels(p.assignment.begin(), p.assignment.end());
  EXPECT_EQ(labels.size(), 12U);
}

TEST(Kmeans, RecoversSeparatedBlobs) {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd f(80, 3);
  std::vector<int> truth(80);
  for (int i = 0; i < 80; ++i) {
    truth[static_cast<std::size_t>(i)] = i % 2;
    const double c = i % 2 == 0 ? -10.0 : 10.0;
    for (int j = 0; j < 3; ++j) f(i, j) = c + n01(gen);
  }
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = kmeans(f, 2, seed);
    // Equal up to label permutation.
    const bool same = p.assignment == truth;
    std::vector<int> flipped(truth);
    for (auto& v : flipped) v = 1 - v;
    EXPECT_TRUE(same || p.assignment == flipped);
  }
}

TEST(Kmeans, DeterministicAndValidated) {
  const Eigen::MatrixXd f = Eigen::MatrixXd::Random(50, 3);
  EXPECT_EQ(kmeans(f, 6, 9).assignment, kmeans(f, 6, 9).assignment);
  try {
    kmeans(f, 51, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Configuration);
  }
}

TEST(Shc, PathExample) {
  Eigen::MatrixXd f(4, 1);
  f << 0.0, 0.1, 10.0, 10.1;
  const auto p = shc(f, path_graph(4), 2);
  EXPECT_EQ(p.assignment, (std::vector<int>{0, 0, 1, 1}));
  const int cut = oracle::best_path_cut({0.0, 0.1, 10.0, 10.1});
  for (int i = 0; i < 4; ++i) EXPECT_EQ(p.assignment[static_cast<std::size_t>(i)], i < cut ? 0 : 1);
  EXPECT_EQ(shc(f, path_graph(4), 4).k, 4);
}

TEST(Shc, PathMatchesExhaustiveSearch) {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> v(7);
    for (auto& x : v) x = u(gen);
    // Make a clear break so the Ward path and the global optimum coincide.
    const int brk = 1 + static_cast<int>(gen() % 6);
    for (int i = brk; i < 7; ++i) v[static_cast<std::size_t>(i)] += 5.0;
    Eigen::MatrixXd f(7, 1);
    for (int i = 0; i < 7; ++i) f(i, 0) = v[static_cast<std::size_t>(i)];
    const auto p = shc(f, path_graph(7), 2);
    const int cut = oracle::best_path_cut(v);
    for (int i = 0; i < 7; ++i) {
      EXPECT_EQ(p.assignment[static_cast<std::size_t>(i)] == p.assignment[0], i < cut);
    }
  }
}

TEST(Shc, RegionsAlwaysContiguous) {
  const auto g = build_grid(9, 9, unit_square(), 1, 1);
  Eigen::VectorXd y(81);
  for (int j = 0; j < 81; ++j) y(j) = std::cos(1.7 * j);
  const auto f = cluster_features(g, y, FeatureScaling::Standardize);
  const ShcDendrogram dendro(f, g.neighbours());
  EXPECT_EQ(dendro.min_clusters(), 1);
  for (int k = 1; k <= 81; k += 8) {
    const auto p = dendro.cut(k);
    ASSERT_EQ(p.k, k);
    const auto members = p.members();
    for (const auto& m : members) EXPECT_TRUE(oracle::connected(m, g.neighbours()));
  }
}

TEST(Shc, InfeasibleContiguity) {
  std::vector<std::vector<int>> g = {{1}, {0}, {3}, {2}};
  const Eigen::MatrixXd f = Eigen::MatrixXd::Random(4, 2);
  try {
    shc(f, g, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InfeasibleContiguity);
  }
  EXPECT_EQ(shc(f, g, 2).k, 2);
}

TEST(ClusterFeatures, StandardizedColumns) {
  const auto g = build_grid(5, 4, unit_square(), 1, 1);
  const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(20, 3.0, 40.0);
  const auto f = cluster_features(g, y, FeatureScaling::Standardize);
  ASSERT_EQ(f.cols(), 3);
  for (int c = 0; c < 3; ++c) {
    EXPECT_NEAR(f.col(c).mean(), 0.0, 1e-12);
    EXPECT_NEAR(std::sqrt(f.col(c).array().square().mean()), 1.0, 1e-12);
  }
  const auto raw = cluster_features(g, y, FeatureScaling::Raw);
  EXPECT_DOUBLE_EQ(raw(19, 2), 40.0);
}

TEST(Candidates, Counts) {
  const auto g = build_grid(4, 4, unit_square(), 1, 1);
  SearchConfig cfg;
  cfg.g_lower = 5;
  cfg.g_upper = 5;
  const auto one = candidates(fake_draws(1, 16, 2, 1), g, cfg);
  ASSERT_EQ(one.size(), 1U);
  EXPECT_EQ(one[0].k, 5);
  EXPECT_EQ(one[0].partition.k, 5);
  cfg.g_lower = 2;
  cfg.g_upper = 9;
  EXPECT_EQ(candidates(fake_draws(3, 16, 2, 1), g, cfg).size(), 3U * 8U);
}

TEST(Candidates, LargeRangeCount) {
  const auto g = build_grid(14, 15, unit_square(), 1, 1);
  SearchConfig cfg;
  cfg.g_lower = 175;
  cfg.g_upper = 195;
  cfg.algorithm = Algorithm::Shc;
  const auto c = candidates(fake_draws(50, 210, 2, 4), g, cfg);
  EXPECT_EQ(c.size(), 1050U);
  for (const auto& cand : c) EXPECT_EQ(cand.partition.k, cand.k);
}

TEST(SearchConfig, Bounds) {
  SearchConfig cfg;
  cfg.g_lower = 1;
  EXPECT_THROW(cfg.validate(10), Error);
  cfg.g_lower = 2;
  cfg.g_upper = 10;
  EXPECT_THROW(cfg.validate(10), Error);
  cfg.g_upper = 9;
  EXPECT_NO_THROW(cfg.validate(10));
}

TEST(SelectOptimal, SingleCandidateAndIdentityWins) {
  const auto oc = basis9();
  const auto g = build_grid(4, 4, unit_square(), 9, 1);
  const auto draws = fake_draws(3, 16, 9, 2);
  std::vector<Candidate> one{{Partition::single(16), 1, 0}};
  const auto r1 = select_optimal(one, draws, oc, g, CriterionKind::Dcage);
  EXPECT_EQ(r1.optimal.k, 1);
  std::vector<Candidate> many{{Partition::single(16), 1, 0},
                              {Partition::from_labels({0, 0, 1, 1, 0, 0, 1, 1, 2, 2, 3, 3, 2, 2, 3, 3}), 4, 0},
                              {Partition::identity(16), 16, 1}};
  const auto r = select_optimal(many, draws, oc, g, CriterionKind::Dcage);
  EXPECT_EQ(r.optimal.k, 16);
  EXPECT_EQ(r.optimal.avg_criterion, 0.0);
  for (const auto& s : r.all) EXPECT_LE(r.optimal.avg_criterion, s.avg_criterion);
}

TEST(SelectOptimal, TiesPreferSmallerKThenM) {
  const auto oc = basis9();
  const auto g = build_grid(3, 3, unit_square(), 4, 1);
  const auto draws = fake_draws(2, 9, 9, 2);
  const auto p = Partition::from_labels({0, 0, 0, 1, 1, 1, 2, 2, 2});
  std::vector<Candidate> c{{p, 3, 2}, {p, 3, 1}, {Partition::identity(9), 9, 0}, {Partition::identity(9), 9, 3}};
  const auto r = select_optimal(c, draws, oc, g, CriterionKind::Dcage);
  EXPECT_EQ(r.optimal.k, 9);
  EXPECT_EQ(r.optimal.m, 0);
  std::vector<Candidate> c2{{p, 3, 2}, {p, 3, 1}};
  EXPECT_EQ(select_optimal(c2, draws, oc, g, CriterionKind::Dcage).optimal.m, 1);
}

TEST(Search, ArgminDeterminismAndScalingNeutrality) {
  const auto oc = basis9();
  const auto g = build_grid(6, 6, unit_square(), 9, 1);
  const auto draws = fake_draws(3, 36, 9, 8);
  SearchConfig cfg;
  cfg.g_lower = 2;
  cfg.g_upper = 12;
  cfg.seed = 5;
  const auto a = search(draws, oc, g, cfg);
  const auto b = search(draws, oc, g, cfg);
  EXPECT_EQ(a.optimal.partition.assignment, b.optimal.partition.assignment);
  ASSERT_EQ(a.all.size(), 33U);
  for (std::size_t i = 0; i < a.all.size(); ++i) {
    EXPECT_EQ(a.all[i].avg_criterion, b.all[i].avg_criterion);
    EXPECT_LE(a.optimal.avg_criterion, a.all[i].avg_criterion);
  }
  // A fixed partition's criterion does not depend on the feature scaling used to find it.
  const CriterionEvaluator ev(draws, oc, g, CriterionKind::Dcage);
  cfg.scaling = FeatureScaling::Raw;
  const auto raw = search(draws, oc, g, cfg);
  EXPECT_EQ(ev.average(raw.optimal.partition), raw.optimal.avg_criterion);
  EXPECT_EQ(ev.average(a.optimal.partition), a.optimal.avg_criterion);
}

TEST(Search, ShcCandidatesContiguous) {
  const auto oc = basis9();
  const auto g = build_grid(5, 5, unit_square(), 9, 1);
  const auto draws = fake_draws(2, 25, 9, 3);
  SearchConfig cfg;
  cfg.g_lower = 3;
  cfg.g_upper = 8;
  cfg.algorithm = Algorithm::Shc;
  for (const auto& c : candidates(draws, g, cfg)) {
    const auto ok = contiguity_check(g, c.partition);
    for (bool b : ok) EXPECT_TRUE(b);
  }
}

TEST(Prescan, WindowClippedAndContainsOptimum) {
  const auto oc = basis9();
  const auto g = build_grid(5, 5, unit_square(), 9, 1);
  int contained = 0;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const auto draws = fake_draws(4, 25, 9, s);
    SearchConfig wide;
    wide.g_lower = 2;
    wide.g_upper = 24;
    wide.seed = s;
    const auto [lo, hi] = simplified_prescan(draws, oc, g, wide, 3);
    EXPECT_GE(lo, 2);
    EXPECT_LE(hi, 24);
    EXPECT_LE(hi - lo, 6);
    const auto full = search(draws, oc, g, wide);
    if (full.optimal.k >= lo && full.optimal.k <= hi) ++contained;
  }
  EXPECT_GE(contained, 8);
  const auto draws = fake_draws(1, 25, 9, 1);
  SearchConfig wide;
  wide.g_lower = 2;
  wide.g_upper = 24;
  const auto [lo, hi] = simplified_prescan(draws, oc, g, wide, 100);
  EXPECT_EQ(lo, 2);
  EXPECT_EQ(hi, 24);
}

TEST(ReMspe, IdenticalSupportsGiveOne) {
  const Eigen::VectorXd truth = Eigen::Vector4d(1, 2, 3, 5);
  const Eigen::VectorXd est = Eigen::Vector4d(1.5, 2, 2.5, 4.5);
  const Eigen::VectorXd areas = Eigen::VectorXd::Constant(4, 0.25);
  const auto p = Partition::from_labels({0, 0, 1, 1});
  const auto r = re_mspe_re_cage(truth, est, areas, p, p);
  EXPECT_DOUBLE_EQ(r.re_mspe, 1.0);
  EXPECT_DOUBLE_EQ(r.re_cage, 1.0);
}

TEST(ReMspe, FourCellHandExample) {
  // support a = {0,1},{2,3}: MSPE 0.125 + 0.5, CAGE 1 + 4.
  // support b = {0,2},{1,3}: MSPE 0 + 0.125, CAGE 4 + 9.
  const Eigen::VectorXd truth = Eigen::Vector4d(1, 2, 3, 5);
  const Eigen::VectorXd est = Eigen::Vector4d(1.5, 2, 2.5, 4.5);
  const Eigen::VectorXd areas = Eigen::VectorXd::Constant(4, 0.25);
  const auto r = re_mspe_re_cage(truth, est, areas, Partition::from_labels({0, 0, 1, 1}),
                                 Partition::from_labels({0, 1, 0, 1}));
  EXPECT_NEAR(r.re_mspe, 0.625 / 0.125, 1e-12);
  EXPECT_NEAR(r.re_cage, 5.0 / 13.0, 1e-12);
}

TEST(ReMspe, ZeroDenominator) {
  const Eigen::VectorXd truth = Eigen::Vector4d(1, 2, 3, 5);
  const Eigen::VectorXd areas = Eigen::VectorXd::Constant(4, 0.25);
  try {
    re_mspe_re_cage(truth, truth, areas, Partition::single(4), Partition::single(4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateComparison);
  }
}
