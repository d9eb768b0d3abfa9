#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "cage/basis.hpp"
#include "cage/geometry.hpp"

namespace cage {

/// A datum Z(u) with known measurement variance. The support is either a point
/// or a set of fine units whose union is the observed areal unit.
struct Observation {
  std::variant<Point, std::vector<int>> support;
  double z = 0.0;
  double var_z = 1.0;
};

struct InverseWishartPrior {
  double df = 0.0;
  Eigen::MatrixXd scale;
};

/// Q = sigma^2 * T with T precomputed from the adjacency structure; only
/// sigma^2 (inverse gamma) is sampled.
struct MoranIPrior {
  double shape = 1.0;
  double rate = 1.0;
};

/// Declared for configuration completeness; sampling it is not supported.
struct GivensAnglePrior {};

/// Q held at a known value (used for conjugate checks).
struct FixedCovariance {
  Eigen::MatrixXd q;
};

using QPrior = std::variant<InverseWishartPrior, MoranIPrior, GivensAnglePrior, FixedCovariance>;

/// Default inverse-Wishart prior: df = r + 2, scale = I.
InverseWishartPrior default_inverse_wishart(int r);

struct Priors {
  QPrior q_prior;
  double sigma_mu2 = 1e6;
  double alpha_xi = 1.0;
  double beta_xi = 1.0;
  /// When false the fine-scale term xi is held at zero.
  bool fine_scale = true;
  /// When set, mu is held at this value instead of sampled.
  std::optional<double> fixed_mu;
};

/// Hierarchical model: Z(u) = mu + psi*(u)^T eta + delta(u; xi) + eps(u).
/// The basis and support are borrowed and must outlive the spec.
struct ModelSpec {
  const OcBasis* oc = nullptr;
  const FineSupport* fine = nullptr;
  std::vector<Observation> obs;
  Priors priors;
};

/// Design matrices for the observations.
struct Design {
  Eigen::MatrixXd psi_obs;              ///< n x r
  Eigen::SparseMatrix<double> h_obs;    ///< n x n_B incidence / area fractions
  Eigen::MatrixXd psi_b;                ///< n_B x r
  Eigen::VectorXd z;
  Eigen::VectorXd var_z;

  int n() const { return static_cast<int>(z.size()); }
  int rank() const { return static_cast<int>(psi_b.cols()); }
  int n_units() const { return static_cast<int>(psi_b.rows()); }
};

Design build_design(const ModelSpec& spec);

/// Best positive approximant: symmetrise, then clip eigenvalues below
/// kPdRelativeFloor * (largest absolute eigenvalue) up to that floor. A matrix already above
/// the floor is returned as its symmetric part.
Eigen::MatrixXd nearest_positive(const Eigen::MatrixXd& m);

/// Precomputed structure of the Moran's-I target covariance.
struct MiTarget {
  Eigen::MatrixXd structure;            ///< T, with Q = sigma^2 T
  Eigen::MatrixXd precision_structure;  ///< T^{-1}
};

/// T = R_B^T A+{Q_B^T (I - A) Q_B}^{-1} R_B where psi_b = Q_B R_B.
MiTarget mi_target(const Eigen::MatrixXd& psi_b, const Eigen::MatrixXd& adjacency);
MiTarget mi_target(const ModelSpec& spec);

struct GibbsOptions {
  int iters = 2000;
  int burn_in = 500;
  int thin = 1;
  std::uint64_t seed = 1;
};

/// Retained MCMC draws (row m of each matrix is draw m).
struct PosteriorDraws {
  Eigen::VectorXd mu;
  Eigen::MatrixXd eta;        ///< M x r
  Eigen::MatrixXd xi;         ///< M x n_B
  Eigen::VectorXd sigma_xi2;  ///< M
  std::vector<Eigen::MatrixXd> q;
  Eigen::MatrixXd y_b;        ///< M x n_B, Psi_B eta + xi

  int size() const { return static_cast<int>(mu.size()); }
  int rank() const { return static_cast<int>(eta.cols()); }
  int n_units() const { return static_cast<int>(y_b.cols()); }

  /// Draws restricted to the given indices, in order.
  PosteriorDraws subset(const std::vector<int>& indices) const;
  /// Elementwise posterior mean of Q.
  Eigen::MatrixXd mean_q() const;
};

PosteriorDraws gibbs_run(const Design& design, const Priors& priors, const GibbsOptions& options,
                         const MiTarget* mi = nullptr);
PosteriorDraws gibbs_run(const ModelSpec& spec, const GibbsOptions& options);

struct PosteriorSummary {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};

/// Mean and sample standard deviation of Y_B over draws (plus mu when asked).
PosteriorSummary posterior_summary(const PosteriorDraws& draws, bool include_mu = false);

/// Logit transform of a proportion with delta-method variance.
struct TransformedDatum {
  double z;
  double var_z;
};
TransformedDatum logit_delta(double proportion, double variance);

}  // namespace cage
