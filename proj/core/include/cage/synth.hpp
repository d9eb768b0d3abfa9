#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "cage/basis.hpp"
#include "cage/geometry.hpp"
#include "cage/inference.hpp"
#include "cage/pipeline.hpp"

namespace cage {

/// Multiscale synthetic setup: a regular point lattice D_s and a regular areal
/// grid D_A over the domain, with the latent field built from a known OC basis.
struct SynthSpec {
  Rect domain = unit_square();
  int point_nx = 20;
  int point_ny = 20;
  double point_min = 0.05;  ///< first lattice coordinate (both axes)
  double point_max = 1.0;   ///< last lattice coordinate (both axes)
  int areal_nx = 10;
  int areal_ny = 10;
  int r_true = 100;         ///< perfect square; knots on an equally spaced grid over D_s
  double total_var = 0.91;  ///< average pointwise variance of Y_s - mu over D_s
  double sigma_xi2 = 0.01;  ///< fine-scale variance (piecewise constant on D_A)
  double mu = 0.0;
  double noise_var = 0.1820;
  double point_coverage = 0.5;
  int samples_per_cell = 400;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SynthData {
  FineSupport fine;               ///< D_A, also used as D_B
  PointCloud points{};            ///< D_s
  Eigen::VectorXd lambda{};       ///< true eigenvalues Lambda_j
  Eigen::VectorXd alpha{};        ///< true K-L coefficients
  Eigen::VectorXd xi{};           ///< fine-scale effects per areal unit
  Eigen::VectorXd y_s{};          ///< truth on D_s
  Eigen::VectorXd y_a{};          ///< truth on D_A
  std::vector<int> observed{};    ///< indices into points (D_s^O), ascending
  Eigen::VectorXd z_s{};          ///< data at observed points, same order
  Eigen::VectorXd z_a{};          ///< data on every areal unit
  double noise_var = 0.0;

  /// Point observations followed by areal observations.
  std::vector<Observation> observations() const;
};

/// OC basis generating the truth.
OcBasis synth_truth_basis(const SynthSpec& spec);

SynthData simulate(const SynthSpec& spec);

struct RankRow {
  int r = 0;
  int replicate = 0;
  int n_op = 0;
};

/// Settings shared by every fit in the rank experiment.
struct ExperimentSettings {
  GbfKind kind = GbfKind::Bisquare;
  int n_w = 20000;
  PriorSpec prior;
  GibbsOptions gibbs;
  SearchConfig search;
};

/// Per replicate (seed derived from spec.seed), simulates once and runs the full
/// pipeline for each r with grid knots over the domain.
std::vector<RankRow> rank_experiment(const SynthSpec& spec, const std::vector<int>& r_fit_values,
                                     int replicates, const ExperimentSettings& settings);

/// Basis spec used for a fit of rank r in the synthetic experiments.
BasisSpec synth_fit_basis(const SynthSpec& spec, int r, const ExperimentSettings& settings,
                          std::uint64_t seed);

}  // namespace cage
