#include "cage/pipeline.hpp"

#include <cmath>

#include "cage/error.hpp"
#include "cage/random.hpp"

namespace cage {

const char* to_string(KnotPlacement p) noexcept {
  switch (p) {
    case KnotPlacement::Grid: return "grid";
    case KnotPlacement::SpaceFilling: return "space_filling";
    case KnotPlacement::Explicit: return "explicit";
  }
  return "grid";
}

KnotPlacement parse_knot_placement(const std::string& name) {
  if (name == "grid") return KnotPlacement::Grid;
  if (name == "space_filling") return KnotPlacement::SpaceFilling;
  if (name == "explicit") return KnotPlacement::Explicit;
  fail(ErrorKind::Configuration,
       "unknown knot placement '" + name + "' (expected grid, space_filling or explicit)");
}

const char* to_string(PriorKind k) noexcept {
  switch (k) {
    case PriorKind::InverseWishart: return "inverse_wishart";
    case PriorKind::MoranI: return "moran_i";
    case PriorKind::GivensAngle: return "givens_angle";
    case PriorKind::Fixed: return "fixed";
  }
  return "inverse_wishart";
}

PriorKind parse_prior_kind(const std::string& name) {
  if (name == "inverse_wishart") return PriorKind::InverseWishart;
  if (name == "moran_i") return PriorKind::MoranI;
  if (name == "givens_angle") return PriorKind::GivensAngle;
  if (name == "fixed") return PriorKind::Fixed;
  fail(ErrorKind::Configuration, "unknown prior '" + name +
                                     "' (expected inverse_wishart, moran_i, givens_angle or fixed)");
}

KnotSet build_knots(const BasisSpec& spec) {
  switch (spec.placement) {
    case KnotPlacement::Grid: {
      const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(spec.r))));
      if (side * side != spec.r) {
        fail(ErrorKind::Configuration, "grid knot placement needs a perfect-square rank (r=" +
                                           std::to_string(spec.r) + "); use space_filling");
      }
      return grid_knots(spec.domain, side, side);
    }
    case KnotPlacement::SpaceFilling: {
      PointCloud cands;
      if (spec.candidates) {
        cands = *spec.candidates;
      } else {
        constexpr int kSide = 60;
        cands.resize(2, kSide * kSide);
        for (int iy = 0; iy < kSide; ++iy) {
          for (int ix = 0; ix < kSide; ++ix) {
            cands(0, iy * kSide + ix) = spec.domain.xmin + (ix + 0.5) * spec.domain.width() / kSide;
            cands(1, iy * kSide + ix) = spec.domain.ymin + (iy + 0.5) * spec.domain.height() / kSide;
          }
        }
      }
      return place_knots(cands, spec.r, derive_seed(spec.seed, {0x6b6e6f74ULL}));
    }
    case KnotPlacement::Explicit:
      if (!spec.knots) fail(ErrorKind::Configuration, "explicit knot placement needs knots");
      if (spec.knots->size() != spec.r) {
        fail(ErrorKind::Configuration, "explicit knot count does not match r");
      }
      return *spec.knots;
  }
  fail(ErrorKind::Configuration, "unknown knot placement");
}

OcBasis build_basis(const BasisSpec& spec) {
  if (spec.r < 1) fail(ErrorKind::Configuration, "rank must be positive");
  GbfFamily family(spec.kind, build_knots(spec));
  if (spec.w) {
    if (spec.w->rows() != spec.r || spec.w->cols() != spec.r) {
      fail(ErrorKind::Configuration, "supplied W is not r x r");
    }
    GramMatrix gram{*spec.w, 0, spec.domain.area()};
    return OcBasis(std::move(family), std::move(gram));
  }
  if (spec.n_w < 1) fail(ErrorKind::Configuration, "n_w must be positive");
  const PointCloud mc = sample_rect(spec.domain, spec.n_w, derive_seed(spec.seed, {0x6772616dULL}));
  GramMatrix gram = gram_matrix(family, mc, spec.domain.area());
  return OcBasis(std::move(family), std::move(gram));
}

Priors PriorSpec::resolve(int r) const {
  Priors p;
  p.sigma_mu2 = sigma_mu2;
  p.alpha_xi = alpha_xi;
  p.beta_xi = beta_xi;
  p.fine_scale = fine_scale;
  p.fixed_mu = fixed_mu;
  switch (kind) {
    case PriorKind::InverseWishart:
      if (!(iw_scale > 0.0)) fail(ErrorKind::Configuration, "iw_scale must be positive");
      p.q_prior = InverseWishartPrior{iw_df.value_or(r + 2.0),
                                      iw_scale * Eigen::MatrixXd::Identity(r, r)};
      break;
    case PriorKind::MoranI:
      p.q_prior = MoranIPrior{mi_shape, mi_rate};
      break;
    case PriorKind::GivensAngle:
      p.q_prior = GivensAnglePrior{};
      break;
    case PriorKind::Fixed:
      if (!q_fixed) fail(ErrorKind::Configuration, "fixed prior needs a Q matrix");
      if (q_fixed->rows() != r || q_fixed->cols() != r) {
        fail(ErrorKind::Configuration, "fixed Q is not r x r");
      }
      p.q_prior = FixedCovariance{*q_fixed};
      break;
  }
  return p;
}

FitResult fit(const PipelineSpec& spec) {
  if (spec.fine == nullptr) fail(ErrorKind::Configuration, "pipeline needs a fine support");
  OcBasis basis = build_basis(spec.basis);
  ModelSpec model{&basis, spec.fine, spec.obs, spec.prior.resolve(spec.basis.r)};
  PosteriorDraws draws = gibbs_run(model, spec.gibbs);
  return FitResult{std::move(basis), std::move(draws)};
}

PipelineResult run_pipeline(const PipelineSpec& spec) {
  if (spec.fine == nullptr) fail(ErrorKind::Configuration, "pipeline needs a fine support");
  spec.search.validate(spec.fine->size());
  FitResult f = fit(spec);
  SearchResult s = search(f.draws, f.basis, *spec.fine, spec.search);
  return PipelineResult{std::move(f.basis), std::move(f.draws), std::move(s)};
}

std::vector<std::pair<int, int>> rank_scan(const PipelineSpec& spec, const std::vector<int>& r_values) {
  if (r_values.empty()) fail(ErrorKind::Configuration, "rank scan needs at least one r");
  std::vector<std::pair<int, int>> out;
  for (int r : r_values) {
    PipelineSpec s = spec;
    s.basis.r = r;
    if (s.basis.placement == KnotPlacement::Explicit) {
      fail(ErrorKind::Configuration, "rank scan cannot vary r with explicit knots");
    }
    s.basis.w.reset();
    const PipelineResult res = run_pipeline(s);
    out.emplace_back(r, res.search.optimal.k);
  }
  return out;
}

}  // namespace cage
