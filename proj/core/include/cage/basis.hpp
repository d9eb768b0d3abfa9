#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "cage/geometry.hpp"

namespace cage {

/// Knot locations c_j (columns) and a common bandwidth w.
struct KnotSet {
  PointCloud knots;
  double bandwidth = 1.0;

  int size() const { return static_cast<int>(knots.cols()); }
};

enum class GbfKind { Bisquare, Wendland };

const char* to_string(GbfKind kind) noexcept;
GbfKind parse_gbf_kind(const std::string& name);

/// Compactly supported generating basis functions on a knot set.
class GbfFamily {
 public:
  GbfFamily(GbfKind kind, KnotSet knots);

  GbfKind kind() const { return kind_; }
  const KnotSet& knots() const { return knots_; }
  int rank() const { return knots_.size(); }

  /// Raw GBF vector psi(s).
  Eigen::VectorXd evaluate(const Point& s) const;
  /// Rows are psi(s_k)^T for each column s_k of the cloud.
  Eigen::MatrixXd evaluate(const PointCloud& cloud) const;
  /// Mean of psi over the cloud.
  Eigen::VectorXd mean(const PointCloud& cloud) const;

 private:
  GbfKind kind_;
  KnotSet knots_;
};

/// psi_j(s) = {1 - (|s - c_j| / w)^2}^2 inside the support, 0 outside.
double bisquare(double distance, double bandwidth);
/// psi_j(s) = (1 - d)^6 (35 d^2 + 18 d + 3) / 3 with d = |s - c_j| / w, 0 for d > 1.
double wendland(double distance, double bandwidth);

Eigen::VectorXd eval_bisquare(const GbfFamily& family, const Point& s);
Eigen::VectorXd eval_wendland(const GbfFamily& family, const Point& s);

struct GramMatrix {
  Eigen::MatrixXd w;
  long n_w_used = 0;
  double domain_area = 0.0;
};

/// Relative eigenvalue floor below which a Gram matrix is declared rank deficient.
inline constexpr double kPdRelativeFloor = 1e-10;

/// Greedy max-min (farthest point) selection of r knots from candidates,
/// started from a seeded random candidate. Bandwidth is 1.5 times the smallest
/// pairwise knot distance. When r equals the candidate count the candidates
/// are returned in their original order.
KnotSet place_knots(const PointCloud& candidates, int r, std::uint64_t seed);

/// Regularly spaced nx x ny knots spanning rect (corners included), bandwidth
/// 1.5 times the smaller spacing.
KnotSet grid_knots(const Rect& rect, int nx, int ny);

/// Bandwidth rule shared by all knot constructors.
double bandwidth_from_knots(const PointCloud& knots);

/// W_im = (|D_s| / n_w) sum_k psi_i(s_k) psi_m(s_k), symmetrised and checked for
/// positive definiteness.
GramMatrix gram_matrix(const GbfFamily& family, const PointCloud& mc_points, double domain_area);

/// Tensor Gauss-Legendre quadrature of W over a rectangle, split into panels.
GramMatrix gram_matrix_quadrature(const GbfFamily& family, const Rect& domain, int panels,
                                  int order = 4);

/// Symmetric eigendecomposition with descending eigenvalues and each eigenvector
/// signed so that its largest-magnitude entry is positive.
struct SymmetricEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};
SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& m);

/// transform = P_W Lambda_W^{-1/2}; satisfies transform^T W transform = I.
Eigen::MatrixXd oc_transform(const GramMatrix& gram);

/// Orthonormalised evaluator psi*(s)^T = psi(s)^T P_W Lambda_W^{-1/2}.
class OcBasis {
 public:
  OcBasis(GbfFamily family, GramMatrix gram);
  OcBasis(GbfFamily family, GramMatrix gram, Eigen::MatrixXd transform);

  const GbfFamily& family() const { return family_; }
  const GramMatrix& gram() const { return gram_; }
  const Eigen::MatrixXd& transform() const { return transform_; }
  int rank() const { return family_.rank(); }

  /// max |(F^T W F - I)_ij|.
  double orthonormality_residual() const;

  Eigen::VectorXd eval_point(const Point& s) const;
  /// Rows are psi*(s_k)^T.
  Eigen::MatrixXd eval_points(const PointCloud& cloud) const;
  /// Mean of psi* over the region's sample cloud.
  Eigen::VectorXd eval_region(const Region& region) const;
  Eigen::VectorXd eval_cloud_mean(const PointCloud& cloud) const;
  /// n_B x r matrix stacking psi*(B_j)^T.
  Eigen::MatrixXd eval_units(const FineSupport& support) const;

 private:
  GbfFamily family_;
  GramMatrix gram_;
  Eigen::MatrixXd transform_;
};

Eigen::VectorXd eval_oc_point(const OcBasis& oc, const Point& s);
Eigen::VectorXd eval_oc_region(const OcBasis& oc, const Region& region);

/// Spectral factors of a posterior covariance draw: Q = G diag(lambda) G^T.
struct EigenReplicate {
  Eigen::MatrixXd g;
  Eigen::VectorXd lambda;
};

/// Descending, nonnegative eigenvalues; asymmetry above 1e-8 is rejected.
EigenReplicate eigen_replicate(const Eigen::MatrixXd& q);

/// Replicate eigenfunctions phi(s) = G^T psi*(s).
Eigen::VectorXd replicate_eigenfunctions(const EigenReplicate& rep, const OcBasis& oc,
                                         const Point& s);

}  // namespace cage
