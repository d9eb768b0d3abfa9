#include <gtest/gtest.h>

#include <random>

#include "cage/basis.hpp"
#include "cage/criterion.hpp"
#include "cage/error.hpp"
#include "support/oracles.hpp"

using namespace cage;

namespace {

OcBasis small_basis(int side = 2) {
  GbfFamily fam(GbfKind::Bisquare, grid_knots(unit_square(), side, side));
  auto gram = gram_matrix_quadrature(fam, unit_square(), 30);
  return OcBasis(std::move(fam), std::move(gram));
}

PosteriorDraws draws_with(const std::vector<Eigen::MatrixXd>& qs, int n_units, std::uint64_t seed = 1) {
  const int r = static_cast<int>(qs.front().rows());
  const int m = static_cast<int>(qs.size());
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n01;
  PosteriorDraws d;
  d.mu = Eigen::VectorXd::Zero(m);
  d.eta = Eigen::MatrixXd::NullaryExpr(m, r, [&] { return n01(gen); });
  d.xi = Eigen::MatrixXd::NullaryExpr(m, n_units, [&] { return 0.1 * n01(gen); });
  d.sigma_xi2 = Eigen::VectorXd::Ones(m);
  d.q = qs;
  d.y_b = Eigen::MatrixXd::NullaryExpr(m, n_units, [&] { return n01(gen); });
  return d;
}

std::vector<Eigen::MatrixXd> random_qs(int m, int r, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<Eigen::MatrixXd> out;
  for (int i = 0; i < m; ++i) out.push_back(oracle::random_psd(r, gen));
  return out;
}

// Direct per-draw computation straight from the definition.
double dcage_by_hand(const Eigen::MatrixXd& psi_b, const Eigen::VectorXd& areas,
                     const std::vector<int>& members, const std::vector<Eigen::MatrixXd>& qs) {
  double area = 0.0;
  Eigen::VectorXd centre = Eigen::VectorXd::Zero(psi_b.cols());
  for (int h : members) {
    area += areas(h);
    centre += areas(h) * psi_b.row(h).transpose();
  }
  centre /= area;
  double total = 0.0;
  for (const auto& q : qs) {
    for (int h : members) {
      const Eigen::VectorXd d = psi_b.row(h).transpose() - centre;
      total += areas(h) / area * d.dot(q * d);
    }
  }
  return total / static_cast<double>(qs.size());
}

}  // namespace

TEST(Dcage, MatchesHandComputation) {
  const auto oc = small_basis();
  const auto fine = build_grid(4, 4, unit_square(), 16, 3);
  const auto qs = random_qs(4, 4, 9);
  const auto draws = draws_with(qs, 16);
  std::vector<int> labels(16);
  for (int j = 0; j < 16; ++j) labels[static_cast<std::size_t>(j)] = (j % 4) / 2 + 2 * (j / 8);
  const auto p = Partition::from_labels(labels);
  const auto rep = dcage(draws, oc, fine, p);
  const Eigen::MatrixXd psi_b = oc.eval_units(fine);
  const auto members = p.members();
  for (int l = 0; l < p.k; ++l) {
    const double hand = dcage_by_hand(psi_b, fine.areas(), members[static_cast<std::size_t>(l)], qs);
    EXPECT_NEAR(rep.per_region[static_cast<std::size_t>(l)].second, hand, 1e-12 * std::max(1.0, hand));
  }
}

TEST(Dcage, SingletonsAndZeroQ) {
  const auto oc = small_basis();
  const auto fine = build_grid(3, 3, unit_square(), 9, 1);
  const auto draws = draws_with(random_qs(3, 4, 2), 9);
  const auto id = dcage(draws, oc, fine, Partition::identity(9));
  for (const auto& [l, v] : id.per_region) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(id.average, 0.0);
  const auto zero = draws_with(std::vector<Eigen::MatrixXd>(3, Eigen::MatrixXd::Zero(4, 4)), 9);
  const auto z = dcage(zero, oc, fine, Partition::single(9));
  EXPECT_EQ(z.average, 0.0);
}

TEST(Dcage, EigenFormMatchesQuadraticForm) {
  const auto oc = small_basis(3);
  const auto fine = build_grid(2, 2, unit_square(), 25, 4);
  const auto draws = draws_with(random_qs(3, 9, 5), 4);
  const auto p = Partition::from_labels({0, 0, 1, 1});
  const auto a = dcage(draws, oc, fine, p);
  const auto b = dcage_eigen(draws, oc, fine, p);
  for (std::size_t l = 0; l < 2; ++l) {
    EXPECT_LE(std::abs(a.per_region[l].second - b.per_region[l].second), 1e-10 * std::abs(a.per_region[l].second));
  }
}

TEST(Dcage, TwoCellHandValue) {
  const auto oc = small_basis();
  const auto fine = build_grid(2, 1, unit_square(), 16, 6);
  const auto draws = draws_with({Eigen::MatrixXd::Identity(4, 4)}, 2);
  const Eigen::MatrixXd psi_b = oc.eval_units(fine);
  const double hand = (psi_b.row(0) - psi_b.row(1)).squaredNorm() / 4.0;
  const auto rep = dcage(draws, oc, fine, Partition::single(2));
  EXPECT_NEAR(rep.average, hand, 1e-14);
  const auto mo = dcage_moment_oracle(draws, oc, fine, Partition::single(2), 20000, 3);
  EXPECT_LT(std::abs(mo.report.average - hand), 3.0 * mo.std_error[0]);
}

TEST(Dcage, MomentOracleConverges) {
  const auto oc = small_basis(3);
  const auto fine = build_grid(2, 2, unit_square(), 25, 4);
  const auto draws = draws_with(random_qs(3, 9, 5), 4);
  const auto p = Partition::from_labels({0, 1, 0, 1});
  const auto exact = dcage(draws, oc, fine, p);
  const auto mo = dcage_moment_oracle(draws, oc, fine, p, 10000, 77);
  for (std::size_t l = 0; l < 2; ++l) {
    EXPECT_LT(std::abs(mo.report.per_region[l].second - exact.per_region[l].second), 3.0 * mo.std_error[l]);
  }
  const auto single = dcage_moment_oracle(draws, oc, fine, Partition::identity(4), 50, 1);
  for (const auto& [l, v] : single.report.per_region) EXPECT_EQ(v, 0.0);
}

TEST(VarianceIdentity, ExactWithAreaWeightedMeans) {
  const auto oc = small_basis(3);
  const auto fine = build_grid(5, 4, Rect{0, 0, 2, 1}, 9, 4);
  const auto draws = draws_with(random_qs(5, 9, 8), 20);
  std::vector<int> labels(20);
  for (int j = 0; j < 20; ++j) labels[static_cast<std::size_t>(j)] = j % 3;
  EXPECT_LE(variance_identity_check(draws, oc, fine, Partition::from_labels(labels)), 1e-10);
  EXPECT_LE(variance_identity_check(draws, oc, fine, Partition::identity(20)), 1e-10);
}

TEST(VarianceIdentity, NegativeControlDetected) {
  const auto oc = small_basis(3);
  const auto fine = build_grid(2, 2, unit_square(), 25, 4);
  const auto draws = draws_with(random_qs(3, 9, 5), 4);
  const auto p = Partition::from_labels({0, 0, 1, 1});
  Eigen::MatrixXd region_psi = region_oc_means(oc.eval_units(fine), fine.areas(), p);
  region_psi.array() += 0.1;
  EXPECT_GT(variance_identity_check(draws, oc, fine, p, region_psi), 1e-6);
}

TEST(Dcage, TranslationInvariant) {
  const auto oc = small_basis();
  const auto fine = build_grid(4, 4, unit_square(), 9, 3);
  auto draws = draws_with(random_qs(4, 4, 2), 16);
  const auto p = Partition::from_labels({0, 0, 1, 1, 0, 0, 1, 1, 2, 2, 3, 3, 2, 2, 3, 3});
  const auto before = dcage(draws, oc, fine, p);
  draws.y_b.array() += 17.25;
  draws.mu.array() += 3.5;
  const auto after = dcage(draws, oc, fine, p);
  for (std::size_t l = 0; l < before.per_region.size(); ++l) {
    EXPECT_EQ(before.per_region[l].second, after.per_region[l].second);
  }
}

TEST(Dcage, DimensionMismatchRejected) {
  const auto oc = small_basis();
  const auto fine = build_grid(2, 2, unit_square(), 4, 1);
  const auto draws = draws_with(random_qs(2, 3, 1), 4);
  try {
    dcage(draws, oc, fine, Partition::single(4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
  }
}

TEST(CagePoint, ZeroForDegenerateClouds) {
  const auto oc = small_basis();
  const auto draws = draws_with(random_qs(2, 4, 3), 1);
  Region r;
  r.members = {0};
  r.area = 1.0;
  r.samples = PointCloud(2, 5);
  for (int k = 0; k < 5; ++k) r.samples.col(k) = Point(0.3, 0.4);
  EXPECT_NEAR(cage_point(draws, oc, r), 0.0, 1e-15);
  r.samples = r.samples.leftCols(1).eval();
  EXPECT_NEAR(cage_point(draws, oc, r), 0.0, 1e-15);
  Region empty;
  EXPECT_THROW(cage_point(draws, oc, empty), Error);
}

TEST(CagePoint, MatchesQuadratureOracle) {
  const auto oc = small_basis(3);
  const auto draws = draws_with(random_qs(2, 9, 7), 1);
  const Rect box{0.1, 0.2, 0.6, 0.5};
  Region r;
  r.members = {0};
  r.area = box.area();
  r.samples = sample_rect(box, 40000, 5);
  const double mc = cage_point(draws, oc, r);
  Eigen::VectorXd mean(9);
  for (int j = 0; j < 9; ++j) {
    mean(j) = oracle::simpson2([&](double x, double y) { return oc.eval_point(Point(x, y))(j); }, box.xmin,
                               box.xmax, box.ymin, box.ymax, 60) /
              box.area();
  }
  double exact = 0.0;
  for (const auto& q : draws.q) {
    exact += oracle::simpson2(
                 [&](double x, double y) {
                   const Eigen::VectorXd d = oc.eval_point(Point(x, y)) - mean;
                   return d.dot(q * d);
                 },
                 box.xmin, box.xmax, box.ymin, box.ymax, 60) /
             box.area();
  }
  exact /= static_cast<double>(draws.q.size());
  EXPECT_LT(std::abs(mc - exact), 0.02 * exact);
}

TEST(Evaluator, MatchesReferencePaths) {
  const auto oc = small_basis(3);
  const auto fine = build_grid(5, 5, unit_square(), 16, 2);
  const auto draws = draws_with(random_qs(6, 9, 4), 25);
  const CriterionEvaluator dc(draws, oc, fine, CriterionKind::Dcage);
  const CriterionEvaluator cg(draws, oc, fine, CriterionKind::Cage);
  std::mt19937_64 gen(3);
  for (int t = 0; t < 5; ++t) {
    const int k = 2 + t;
    std::vector<int> labels(25);
    for (int j = 0; j < 25; ++j) labels[static_cast<std::size_t>(j)] = j < k ? j : static_cast<int>(gen() % static_cast<unsigned>(k));
    const auto p = Partition::from_labels(labels);
    const auto ref_d = dcage(draws, oc, fine, p);
    const auto ref_c = cage::cage(draws, oc, fine, p);
    EXPECT_NEAR(dc.average(p), ref_d.average, 1e-10 * ref_d.average);
    EXPECT_NEAR(cg.average(p), ref_c.average, 1e-10 * ref_c.average);
    const auto per = dc.per_region(p);
    for (int l = 0; l < k; ++l) {
      EXPECT_NEAR(per[static_cast<std::size_t>(l)], ref_d.per_region[static_cast<std::size_t>(l)].second, 1e-10);
      EXPECT_GE(per[static_cast<std::size_t>(l)], -1e-12);
    }
  }
  EXPECT_EQ(dc.average(Partition::identity(25)), 0.0);
}

TEST(CriterionKind, Parse) {
  EXPECT_EQ(parse_criterion_kind("DCAGE"), CriterionKind::Dcage);
  EXPECT_EQ(parse_criterion_kind("cage"), CriterionKind::Cage);
  EXPECT_THROW(parse_criterion_kind("mse"), Error);
}
