#include <gtest/gtest.h>

#include <random>

#include "cage/basis.hpp"
#include "cage/error.hpp"
#include "cage/geometry.hpp"
#include "support/oracles.hpp"

using namespace cage;

namespace {

KnotSet knots_of(std::initializer_list<Point> pts, double w) {
  KnotSet k;
  k.knots.resize(2, static_cast<Eigen::Index>(pts.size()));
  Eigen::Index j = 0;
  for (const auto& p : pts) k.knots.col(j++) = p;
  k.bandwidth = w;
  return k;
}

OcBasis grid_basis(GbfKind kind, int side, int panels = 40) {
  GbfFamily fam(kind, grid_knots(unit_square(), side, side));
  auto gram = gram_matrix_quadrature(fam, unit_square(), panels);
  return OcBasis(std::move(fam), std::move(gram));
}

}  // namespace

TEST(Bisquare, HandValues) {
  EXPECT_DOUBLE_EQ(bisquare(0.0, 2.0), 1.0);
  EXPECT_DOUBLE_EQ(bisquare(2.0, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(bisquare(1.0, 2.0), 0.5625);
  EXPECT_DOUBLE_EQ(bisquare(3.0, 2.0), 0.0);
}

TEST(Wendland, HandValues) {
  EXPECT_DOUBLE_EQ(wendland(0.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(wendland(1.0, 1.0), 0.0);
  EXPECT_NEAR(wendland(0.5, 1.0), 0.015625 * 20.75 / 3.0, 1e-15);
  EXPECT_NEAR(wendland(0.5, 1.0), 0.108073, 1e-6);
}

TEST(GbfFamily, EvaluatorsAgreeWithScalarForms) {
  GbfFamily bi(GbfKind::Bisquare, knots_of({Point(0, 0), Point(1, 0)}, 1.0));
  const Eigen::VectorXd v = eval_bisquare(bi, Point(0.5, 0));
  EXPECT_DOUBLE_EQ(v(0), 0.5625);
  EXPECT_DOUBLE_EQ(v(1), 0.5625);
  GbfFamily we(GbfKind::Wendland, knots_of({Point(0, 0)}, 2.0));
  EXPECT_NEAR(eval_wendland(we, Point(1.0, 0))(0), 0.108073, 1e-6);
  EXPECT_THROW(eval_wendland(bi, Point(0, 0)), Error);
}

TEST(GbfFamily, CompactSupport) {
  GbfFamily fam(GbfKind::Bisquare, grid_knots(Rect{0, 0, 0.2, 0.2}, 2, 2));
  EXPECT_TRUE(fam.evaluate(Point(5, 5)).isZero(0.0));
}

TEST(PlaceKnots, AllCandidatesReturnedVerbatim) {
  PointCloud c(2, 4);
  c << 0.1, 0.9, 0.3, 0.6, 0.2, 0.4, 0.8, 0.7;
  const auto k = place_knots(c, 4, 3);
  EXPECT_TRUE((k.knots.array() == c.array()).all());
  EXPECT_THROW(place_knots(c, 5, 3), Error);
}

TEST(PlaceKnots, BandwidthRule) {
  const auto k = grid_knots(unit_square(), 3, 3);
  EXPECT_NEAR(k.bandwidth, 1.5 * 0.5, 1e-15);
  EXPECT_NEAR(bandwidth_from_knots(k.knots), 0.75, 1e-15);
}

TEST(PlaceKnots, BeatsRandomSubsets) {
  const PointCloud cand = sample_rect(unit_square(), 100, 21);
  auto min_dist = [](const PointCloud& p) {
    double best = INFINITY;
    for (Eigen::Index i = 0; i < p.cols(); ++i)
      for (Eigen::Index j = i + 1; j < p.cols(); ++j) best = std::min(best, (p.col(i) - p.col(j)).norm());
    return best;
  };
  const double chosen = min_dist(place_knots(cand, 10, 5).knots);
  std::mt19937_64 gen(99);
  std::vector<int> idx(100);
  std::iota(idx.begin(), idx.end(), 0);
  for (int t = 0; t < 50; ++t) {
    std::shuffle(idx.begin(), idx.end(), gen);
    PointCloud sub(2, 10);
    for (int j = 0; j < 10; ++j) sub.col(j) = cand.col(idx[static_cast<std::size_t>(j)]);
    EXPECT_GE(chosen, min_dist(sub));
  }
}

TEST(GramMatrix, ConstantFunctionGivesOne) {
  // A single bisquare knot with a huge bandwidth is constant to within 1e-12
  // on the unit square, so W = [|D|] = [1].
  GbfFamily fam(GbfKind::Bisquare, knots_of({Point(0.5, 0.5)}, 1e7));
  const auto pts = sample_rect(unit_square(), 1000, 1);
  const auto g = gram_matrix(fam, pts, 1.0);
  EXPECT_NEAR(g.w(0, 0), 1.0, 1e-12);
  EXPECT_EQ(g.n_w_used, 1000);
}

TEST(GramMatrix, PermutationInvariant) {
  GbfFamily fam(GbfKind::Wendland, grid_knots(unit_square(), 3, 3));
  PointCloud pts = sample_rect(unit_square(), 2000, 2);
  const auto a = gram_matrix(fam, pts, 1.0);
  PointCloud rev = pts.rowwise().reverse();
  const auto b = gram_matrix(fam, rev, 1.0);
  EXPECT_LT((a.w - b.w).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE(a.w.isApprox(a.w.transpose(), 0.0));
}

TEST(GramMatrix, MonteCarloMatchesQuadratureOracle) {
  // Knots on a horizontal line: psi depends on x only through |s - c| so a
  // 2-D Simpson oracle is used; relative error of MC with 1e6 points.
  GbfFamily fam(GbfKind::Bisquare, knots_of({Point(0.25, 0.5), Point(0.5, 0.5), Point(0.75, 0.5)}, 0.4));
  const auto pts = sample_rect(unit_square(), 1000000, 11);
  const auto mc = gram_matrix(fam, pts, 1.0);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const Point ci = fam.knots().knots.col(i);
      const Point cj = fam.knots().knots.col(j);
      const double exact = oracle::simpson2(
          [&](double x, double y) {
            const Point s(x, y);
            return bisquare((s - ci).norm(), 0.4) * bisquare((s - cj).norm(), 0.4);
          },
          0, 1, 0, 1, 400);
      if (exact > 1e-3) EXPECT_LT(std::abs(mc.w(i, j) - exact) / exact, 1e-2) << i << "," << j;
    }
  }
}

TEST(GramMatrix, QuadratureMatchesSimpsonOracle) {
  GbfFamily fam(GbfKind::Wendland, grid_knots(unit_square(), 2, 2));
  const auto q = gram_matrix_quadrature(fam, unit_square(), 50);
  const Point c0 = fam.knots().knots.col(0);
  const Point c3 = fam.knots().knots.col(3);
  const double w = fam.knots().bandwidth;
  const double exact = oracle::simpson2(
      [&](double x, double y) {
        const Point s(x, y);
        return wendland((s - c0).norm(), w) * wendland((s - c3).norm(), w);
      },
      0, 1, 0, 1, 600);
  EXPECT_NEAR(q.w(0, 3), exact, 1e-6 * std::max(1.0, exact));
}

TEST(GramMatrix, RankDeficientRejected) {
  // Two identical knots give identical functions.
  GbfFamily fam(GbfKind::Bisquare, knots_of({Point(0.5, 0.5), Point(0.5, 0.5)}, 0.5));
  try {
    gram_matrix(fam, sample_rect(unit_square(), 500, 3), 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateBasis);
  }
}

TEST(OcTransform, IdentityGram) {
  GramMatrix g{Eigen::MatrixXd::Identity(3, 3), 1, 1.0};
  const Eigen::MatrixXd t = oc_transform(g);
  EXPECT_LT((t.cwiseAbs() - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(OcTransform, DiagonalFourOne) {
  GramMatrix g{Eigen::Vector2d(4.0, 1.0).asDiagonal(), 1, 1.0};
  const Eigen::MatrixXd t = oc_transform(g);
  // Descending eigenvalues put 4 first; column 0 is (1/2, 0), column 1 is (0, 1).
  EXPECT_NEAR(t(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(t(1, 1), 1.0, 1e-15);
  EXPECT_NEAR(t(0, 1), 0.0, 1e-15);
  EXPECT_NEAR(t(1, 0), 0.0, 1e-15);
}

TEST(OcTransform, SignConvention) {
  std::mt19937_64 gen(5);
  const Eigen::MatrixXd m = oracle::random_psd(5, gen) + Eigen::MatrixXd::Identity(5, 5);
  const auto e = symmetric_eigen(m);
  for (int j = 0; j < 5; ++j) {
    Eigen::Index idx = 0;
    e.vectors.col(j).cwiseAbs().maxCoeff(&idx);
    EXPECT_GT(e.vectors(idx, j), 0.0);
    if (j > 0) EXPECT_GE(e.values(j - 1), e.values(j));
  }
  EXPECT_LT((e.vectors * e.values.asDiagonal() * e.vectors.transpose() - m).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(OcTransform, DegenerateRejected) {
  GramMatrix g{Eigen::Vector2d(1.0, 1e-14).asDiagonal(), 1, 1.0};
  try {
    oc_transform(g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateBasis);
  }
}

TEST(OcBasis, OrthonormalAtRank75) {
  PointCloud cand(2, 60 * 60);
  for (int i = 0; i < 60; ++i)
    for (int j = 0; j < 60; ++j) cand.col(i * 60 + j) = Point((i + 0.5) / 60, (j + 0.5) / 60);
  GbfFamily fam(GbfKind::Bisquare, place_knots(cand, 75, 4));
  auto gram = gram_matrix(fam, sample_rect(unit_square(), 20000, 8), 1.0);
  const OcBasis oc(std::move(fam), std::move(gram));
  EXPECT_LE(oc.orthonormality_residual(), 1e-6);
}

TEST(OcBasis, PointEvaluationIsMatrixProduct) {
  const OcBasis oc = grid_basis(GbfKind::Bisquare, 3);
  const auto pts = sample_rect(unit_square(), 20, 6);
  for (Eigen::Index k = 0; k < pts.cols(); ++k) {
    const Point s = pts.col(k);
    Eigen::VectorXd raw(9);
    for (int j = 0; j < 9; ++j) raw(j) = bisquare((s - oc.family().knots().knots.col(j)).norm(), oc.family().knots().bandwidth);
    const Eigen::VectorXd expect = oc.transform().transpose() * raw;
    EXPECT_LT((eval_oc_point(oc, s) - expect).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_TRUE(eval_oc_point(oc, Point(10, 10)).isZero(0.0));
}

TEST(OcBasis, IdentityTransformGivesRawValues) {
  GbfFamily fam(GbfKind::Bisquare, grid_knots(unit_square(), 2, 2));
  GramMatrix g{Eigen::MatrixXd::Identity(4, 4), 1, 1.0};
  const OcBasis oc(fam, g, Eigen::MatrixXd::Identity(4, 4));
  const Point s(0.3, 0.6);
  EXPECT_LT((oc.eval_point(s) - fam.evaluate(s)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(OcBasis, RegionEvaluation) {
  const OcBasis oc = grid_basis(GbfKind::Wendland, 3);
  Region single;
  single.members = {0};
  single.area = 1.0;
  single.samples = PointCloud(2, 1);
  single.samples.col(0) = Point(0.2, 0.7);
  EXPECT_LT((eval_oc_region(oc, single) - oc.eval_point(Point(0.2, 0.7))).cwiseAbs().maxCoeff(), 1e-15);
  Region empty;
  EXPECT_THROW(eval_oc_region(oc, empty), Error);
}

TEST(OcBasis, ConstantFunctionOverDomain) {
  GbfFamily fam(GbfKind::Bisquare, knots_of({Point(0.5, 0.5)}, 1e7));
  GramMatrix g{Eigen::MatrixXd::Identity(1, 1), 1, 1.0};
  const OcBasis oc(fam, g, Eigen::MatrixXd::Identity(1, 1));
  const auto grid = build_grid(1, 1, unit_square(), 100, 2);
  EXPECT_NEAR(oc.eval_units(grid)(0, 0), 1.0, 1e-12);
}

TEST(OcBasis, CellMeanMatchesQuadratureOracle) {
  const OcBasis oc = grid_basis(GbfKind::Bisquare, 3);
  const Rect cell{0.2, 0.3, 0.3, 0.4};
  const auto cloud = sample_rect(cell, 10000, 12);
  const Eigen::VectorXd mc = oc.eval_cloud_mean(cloud);
  Eigen::VectorXd exact(9);
  for (int j = 0; j < 9; ++j) {
    exact(j) = oracle::simpson2(
                   [&](double x, double y) { return oc.eval_point(Point(x, y))(j); }, cell.xmin,
                   cell.xmax, cell.ymin, cell.ymax, 40) /
               cell.area();
  }
  EXPECT_LE((mc - exact).cwiseAbs().maxCoeff(), 1e-2 * exact.norm());
}

TEST(OcBasis, AggregationLinearity) {
  const OcBasis oc = grid_basis(GbfKind::Bisquare, 3);
  const auto g = build_grid(4, 4, unit_square(), 25, 3);
  const Eigen::MatrixXd psi_b = oc.eval_units(g);
  std::vector<int> labels(16);
  for (int j = 0; j < 16; ++j) labels[static_cast<std::size_t>(j)] = j < 8 ? 0 : 1;
  const auto regions = merge_regions(g, Partition::from_labels(labels));
  for (int l = 0; l < 2; ++l) {
    Eigen::VectorXd weighted = Eigen::VectorXd::Zero(9);
    for (int h : regions[static_cast<std::size_t>(l)].members) weighted += g.unit(h).area * psi_b.row(h).transpose();
    weighted /= regions[static_cast<std::size_t>(l)].area;
    EXPECT_LT((oc.eval_region(regions[static_cast<std::size_t>(l)]) - weighted).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(EigenReplicate, IdentityAndDiagonal) {
  const auto id = eigen_replicate(Eigen::MatrixXd::Identity(3, 3));
  EXPECT_LT((id.lambda - Eigen::VectorXd::Ones(3)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((id.g.transpose() * id.g - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-14);
  const auto d = eigen_replicate(Eigen::Vector2d(1.0, 2.0).asDiagonal());
  EXPECT_DOUBLE_EQ(d.lambda(0), 2.0);
  EXPECT_DOUBLE_EQ(d.lambda(1), 1.0);
  EXPECT_DOUBLE_EQ(std::abs(d.g(1, 0)), 1.0);
}

TEST(EigenReplicate, ReconstructsRandomPsd) {
  std::mt19937_64 gen(17);
  for (int t = 0; t < 5; ++t) {
    const Eigen::MatrixXd q = oracle::random_psd(6, gen);
    const auto e = eigen_replicate(q);
    EXPECT_LT((e.g * e.lambda.asDiagonal() * e.g.transpose() - q).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((e.g.transpose() * e.g - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_GE(e.lambda.minCoeff(), 0.0);
  }
}

TEST(EigenReplicate, AsymmetryRejected) {
  Eigen::Matrix2d q;
  q << 1.0, 0.1, 0.0, 1.0;
  try {
    eigen_replicate(q);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
  }
}
