#include "cage/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cage/error.hpp"
#include "cage/random.hpp"

namespace cage {

void SynthSpec::validate() const {
  if (domain.degenerate()) fail(ErrorKind::Configuration, "synthetic domain is degenerate");
  if (point_nx < 2 || point_ny < 2) fail(ErrorKind::Configuration, "point lattice needs at least 2 x 2");
  if (!(point_max > point_min)) fail(ErrorKind::Configuration, "point_max must exceed point_min");
  if (!domain.contains(Point(point_min, point_min)) || !domain.contains(Point(point_max, point_max))) {
    fail(ErrorKind::Configuration, "point lattice must lie inside the domain");
  }
  if (areal_nx < 1 || areal_ny < 1) fail(ErrorKind::Configuration, "areal grid needs positive size");
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(r_true))));
  if (r_true < 1 || side * side != r_true) {
    fail(ErrorKind::Configuration, "r_true must be a positive perfect square");
  }
  if (!(sigma_xi2 >= 0.0)) fail(ErrorKind::Configuration, "sigma_xi2 must be >= 0");
  if (!(total_var > sigma_xi2)) fail(ErrorKind::Configuration, "total_var must exceed sigma_xi2");
  if (!(noise_var >= 0.0)) fail(ErrorKind::Configuration, "noise_var must be >= 0");
  if (!(point_coverage > 0.0 && point_coverage <= 1.0)) {
    fail(ErrorKind::Configuration, "point_coverage must lie in (0, 1]");
  }
  if (samples_per_cell < 1) fail(ErrorKind::Configuration, "samples_per_cell must be positive");
}

std::vector<Observation> SynthData::observations() const {
  std::vector<Observation> out;
  out.reserve(observed.size() + static_cast<std::size_t>(z_a.size()));
  for (std::size_t i = 0; i < observed.size(); ++i) {
    out.push_back({Point(points.col(observed[i])), z_s(static_cast<Eigen::Index>(i)), noise_var});
  }
  for (Eigen::Index j = 0; j < z_a.size(); ++j) {
    out.push_back({std::vector<int>{static_cast<int>(j)}, z_a(j), noise_var});
  }
  return out;
}

OcBasis synth_truth_basis(const SynthSpec& spec) {
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(spec.r_true))));
  const Rect knot_rect{spec.point_min, spec.point_min, spec.point_max, spec.point_max};
  GbfFamily family(GbfKind::Bisquare, grid_knots(knot_rect, side, side));
  GramMatrix gram = gram_matrix_quadrature(family, spec.domain, 50, 4);
  return OcBasis(std::move(family), std::move(gram));
}

SynthData simulate(const SynthSpec& spec) {
  spec.validate();
  SynthData d{build_grid(spec.areal_nx, spec.areal_ny, spec.domain, spec.samples_per_cell,
                         derive_seed(spec.seed, {1}))};
  d.noise_var = spec.noise_var;

  const int n_s = spec.point_nx * spec.point_ny;
  d.points.resize(2, n_s);
  for (int iy = 0; iy < spec.point_ny; ++iy) {
    for (int ix = 0; ix < spec.point_nx; ++ix) {
      d.points(0, iy * spec.point_nx + ix) =
          spec.point_min + ix * (spec.point_max - spec.point_min) / (spec.point_nx - 1);
      d.points(1, iy * spec.point_nx + ix) =
          spec.point_min + iy * (spec.point_max - spec.point_min) / (spec.point_ny - 1);
    }
  }

  const OcBasis truth = synth_truth_basis(spec);
  const Eigen::MatrixXd psi_s = truth.eval_points(d.points);
  const int r = truth.rank();
  Eigen::VectorXd shape(r);
  for (int j = 0; j < r; ++j) shape(j) = 1.0 / (j + 1.0);
  const double raw_var = (psi_s.cwiseAbs2() * shape).mean();
  if (!(raw_var > 0.0)) fail(ErrorKind::DegenerateBasis, "truth basis vanishes on the point lattice");
  d.lambda = shape * ((spec.total_var - spec.sigma_xi2) / raw_var);

  Rng field_rng(derive_seed(spec.seed, {2}));
  d.alpha = d.lambda.cwiseSqrt().cwiseProduct(standard_normal_vector(r, field_rng));
  d.xi = std::sqrt(spec.sigma_xi2) * standard_normal_vector(d.fine.size(), field_rng);

  d.y_s.resize(n_s);
  for (int i = 0; i < n_s; ++i) {
    const int cell = d.fine.locate(d.points.col(i));
    d.y_s(i) = spec.mu + psi_s.row(i).dot(d.alpha) + d.xi(cell);
  }
  const Eigen::MatrixXd psi_a = truth.eval_units(d.fine);
  d.y_a = (psi_a * d.alpha + d.xi).array() + spec.mu;

  Rng mask_rng(derive_seed(spec.seed, {3}));
  std::vector<int> order(static_cast<std::size_t>(n_s));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), mask_rng);
  const auto n_obs = std::max<long>(1, std::lround(spec.point_coverage * n_s));
  d.observed.assign(order.begin(), order.begin() + n_obs);
  std::sort(d.observed.begin(), d.observed.end());

  Rng noise_rng(derive_seed(spec.seed, {4}));
  const double sd = std::sqrt(spec.noise_var);
  d.z_s.resize(static_cast<Eigen::Index>(d.observed.size()));
  for (std::size_t i = 0; i < d.observed.size(); ++i) {
    d.z_s(static_cast<Eigen::Index>(i)) = d.y_s(d.observed[i]) + sd * standard_normal(noise_rng);
  }
  d.z_a.resize(d.fine.size());
  for (int j = 0; j < d.fine.size(); ++j) d.z_a(j) = d.y_a(j) + sd * standard_normal(noise_rng);
  return d;
}

BasisSpec synth_fit_basis(const SynthSpec& spec, int r, const ExperimentSettings& settings,
                          std::uint64_t seed) {
  BasisSpec b;
  b.kind = settings.kind;
  b.r = r;
  b.placement = KnotPlacement::Grid;
  b.domain = spec.domain;
  b.n_w = settings.n_w;
  b.seed = seed;
  return b;
}

std::vector<RankRow> rank_experiment(const SynthSpec& spec, const std::vector<int>& r_fit_values,
                                     int replicates, const ExperimentSettings& settings) {
  if (replicates < 1) fail(ErrorKind::Configuration, "replicates must be >= 1");
  if (r_fit_values.empty()) fail(ErrorKind::Configuration, "need at least one fitted rank");
  std::vector<RankRow> rows;
  for (int rep = 0; rep < replicates; ++rep) {
    SynthSpec s = spec;
    s.seed = derive_seed(spec.seed, {static_cast<std::uint64_t>(rep)});
    const SynthData data = simulate(s);
    for (int r : r_fit_values) {
      const auto cell_seed = derive_seed(s.seed, {static_cast<std::uint64_t>(r)});
      PipelineSpec p;
      p.fine = &data.fine;
      p.obs = data.observations();
      p.basis = synth_fit_basis(spec, r, settings, cell_seed);
      p.prior = settings.prior;
      p.gibbs = settings.gibbs;
      p.gibbs.seed = derive_seed(cell_seed, {1});
      p.search = settings.search;
      p.search.seed = derive_seed(cell_seed, {2});
      const PipelineResult res = run_pipeline(p);
      rows.push_back({r, rep, res.search.optimal.k});
    }
  }
  return rows;
}

}  // namespace cage
