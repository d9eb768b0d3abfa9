#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cage/basis.hpp"
#include "cage/geometry.hpp"
#include "cage/inference.hpp"
#include "cage/regionalize.hpp"

namespace cage {

enum class KnotPlacement { Grid, SpaceFilling, Explicit };

const char* to_string(KnotPlacement p) noexcept;
KnotPlacement parse_knot_placement(const std::string& name);

/// How to construct the OC basis for a given rank.
struct BasisSpec {
  GbfKind kind = GbfKind::Bisquare;
  int r = 9;
  KnotPlacement placement = KnotPlacement::Grid;
  /// Knot domain for Grid placement, candidate area for SpaceFilling, and the
  /// integration domain for W.
  Rect domain = unit_square();
  /// Explicit knots (placement = Explicit).
  std::optional<KnotSet> knots;
  /// Candidates for SpaceFilling; defaults to a 60 x 60 lattice of cell centres.
  std::optional<PointCloud> candidates;
  /// Precomputed W; skips Monte Carlo estimation when set.
  std::optional<Eigen::MatrixXd> w;
  int n_w = 20000;
  std::uint64_t seed = 1;
};

/// Grid: sqrt(r) x sqrt(r) knots (r must be a perfect square).
KnotSet build_knots(const BasisSpec& spec);
OcBasis build_basis(const BasisSpec& spec);

enum class PriorKind { InverseWishart, MoranI, GivensAngle, Fixed };

const char* to_string(PriorKind k) noexcept;
PriorKind parse_prior_kind(const std::string& name);

/// Rank-independent prior settings, resolved to concrete Priors once r is known.
struct PriorSpec {
  PriorKind kind = PriorKind::InverseWishart;
  std::optional<double> iw_df;  ///< default r + 2
  double iw_scale = 1.0;        ///< scale matrix is iw_scale * I
  double mi_shape = 1.0;
  double mi_rate = 1.0;
  std::optional<Eigen::MatrixXd> q_fixed;
  double sigma_mu2 = 1e6;
  double alpha_xi = 1.0;
  double beta_xi = 1.0;
  bool fine_scale = true;
  std::optional<double> fixed_mu;

  Priors resolve(int r) const;
};

struct PipelineSpec {
  const FineSupport* fine = nullptr;
  std::vector<Observation> obs;
  BasisSpec basis;
  PriorSpec prior;
  GibbsOptions gibbs;
  SearchConfig search;
};

struct FitResult {
  OcBasis basis;
  PosteriorDraws draws;
};

FitResult fit(const PipelineSpec& spec);

struct PipelineResult {
  OcBasis basis;
  PosteriorDraws draws;
  SearchResult search;
};

PipelineResult run_pipeline(const PipelineSpec& spec);

/// Runs the full pipeline for each rank and reports (r, optimal region count).
std::vector<std::pair<int, int>> rank_scan(const PipelineSpec& spec, const std::vector<int>& r_values);

}  // namespace cage
