#include "cage/inference.hpp"

#include <cmath>
#include <string>

#include <Eigen/SparseCholesky>

#include "cage/error.hpp"
#include "cage/random.hpp"

namespace cage {

InverseWishartPrior default_inverse_wishart(int r) {
  return InverseWishartPrior{static_cast<double>(r) + 2.0, Eigen::MatrixXd::Identity(r, r)};
}

Design build_design(const ModelSpec& spec) {
  if (spec.oc == nullptr || spec.fine == nullptr) {
    fail(ErrorKind::InvalidInput, "model spec needs a basis and a fine support");
  }
  const OcBasis& oc = *spec.oc;
  const FineSupport& fine = *spec.fine;
  const int n = static_cast<int>(spec.obs.size());
  const int r = oc.rank();

  Design d;
  d.psi_b = oc.eval_units(fine);
  d.psi_obs.resize(n, r);
  d.z.resize(n);
  d.var_z.resize(n);
  std::vector<Eigen::Triplet<double>> triplets;
  for (int i = 0; i < n; ++i) {
    const Observation& o = spec.obs[static_cast<std::size_t>(i)];
    if (!(o.var_z > 0.0) || !std::isfinite(o.var_z)) {
      fail(ErrorKind::InvalidInput, "observation " + std::to_string(i) + " has var_z <= 0");
    }
    if (!std::isfinite(o.z)) {
      fail(ErrorKind::InvalidInput, "observation " + std::to_string(i) + " is not finite");
    }
    d.z(i) = o.z;
    d.var_z(i) = o.var_z;
    if (const auto* p = std::get_if<Point>(&o.support)) {
      const int j = fine.locate(*p);
      d.psi_obs.row(i) = oc.eval_point(*p).transpose();
      triplets.emplace_back(i, j, 1.0);
    } else {
      const auto& members = std::get<std::vector<int>>(o.support);
      if (members.empty()) {
        fail(ErrorKind::SupportMismatch, "areal observation " + std::to_string(i) + " has no members");
      }
      double area = 0.0;
      for (int h : members) {
        if (h < 0 || h >= fine.size()) {
          fail(ErrorKind::SupportMismatch,
               "areal observation " + std::to_string(i) + " references unknown unit " + std::to_string(h));
        }
        area += fine.unit(h).area;
      }
      d.psi_obs.row(i).setZero();
      for (int h : members) {
        const double frac = fine.unit(h).area / area;
        d.psi_obs.row(i) += frac * d.psi_b.row(h);
        triplets.emplace_back(i, h, frac);
      }
    }
  }
  d.h_obs.resize(n, fine.size());
  d.h_obs.setFromTriplets(triplets.begin(), triplets.end());
  return d;
}

Eigen::MatrixXd nearest_positive(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) fail(ErrorKind::InvalidInput, "matrix must be square");
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  const auto eig = symmetric_eigen(sym);
  const double scale = eig.values.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) fail(ErrorKind::DegenerateBasis, "cannot approximate a zero matrix");
  const double floor = kPdRelativeFloor * scale;
  if (eig.values.minCoeff() >= floor) return sym;
  const Eigen::VectorXd clipped = eig.values.cwiseMax(floor);
  Eigen::MatrixXd out = eig.vectors * clipped.asDiagonal() * eig.vectors.transpose();
  return 0.5 * (out + out.transpose());
}

MiTarget mi_target(const Eigen::MatrixXd& psi_b, const Eigen::MatrixXd& adjacency) {
  const Eigen::Index n_b = psi_b.rows();
  const Eigen::Index r = psi_b.cols();
  if (adjacency.rows() != n_b || adjacency.cols() != n_b) {
    fail(ErrorKind::InvalidInput, "adjacency size does not match Psi_B");
  }
  if (n_b < r) fail(ErrorKind::DegenerateBasis, "Psi_B has fewer rows than columns");
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(psi_b);
  const Eigen::MatrixXd q_thin = qr.householderQ() * Eigen::MatrixXd::Identity(n_b, r);
  const Eigen::MatrixXd r_b = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  const double diag_max = r_b.diagonal().cwiseAbs().maxCoeff();
  if (!(diag_max > 0.0) || r_b.diagonal().cwiseAbs().minCoeff() <= 1e-10 * diag_max) {
    fail(ErrorKind::DegenerateBasis, "Psi_B is rank deficient");
  }
  const Eigen::MatrixXd inner =
      q_thin.transpose() * (Eigen::MatrixXd::Identity(n_b, n_b) - adjacency) * q_thin;
  const Eigen::MatrixXd a_plus = nearest_positive(inner);
  const auto eig = symmetric_eigen(a_plus);
  const Eigen::MatrixXd a_plus_inv =
      eig.vectors * eig.values.cwiseInverse().asDiagonal() * eig.vectors.transpose();

  MiTarget out;
  out.structure = r_b.transpose() * a_plus_inv * r_b;
  out.structure = 0.5 * (out.structure + out.structure.transpose());
  // T^{-1} = R_B^{-1} A+ R_B^{-T}, formed by triangular solves.
  const auto upper = r_b.triangularView<Eigen::Upper>();
  Eigen::MatrixXd left = upper.solve(a_plus);                          // R^{-1} A+
  Eigen::MatrixXd prec = upper.solve(left.transpose()).transpose();    // (R^{-1} (R^{-1} A+)^T)^T
  out.precision_structure = 0.5 * (prec + prec.transpose());
  return out;
}

MiTarget mi_target(const ModelSpec& spec) {
  if (spec.oc == nullptr || spec.fine == nullptr) {
    fail(ErrorKind::InvalidInput, "model spec needs a basis and a fine support");
  }
  return mi_target(spec.oc->eval_units(*spec.fine), spec.fine->adjacency_matrix());
}

PosteriorDraws PosteriorDraws::subset(const std::vector<int>& indices) const {
  PosteriorDraws out;
  const auto m = static_cast<Eigen::Index>(indices.size());
  out.mu.resize(m);
  out.eta.resize(m, eta.cols());
  out.xi.resize(m, xi.cols());
  out.sigma_xi2.resize(m);
  out.y_b.resize(m, y_b.cols());
  for (Eigen::Index i = 0; i < m; ++i) {
    const int src = indices[static_cast<std::size_t>(i)];
    if (src < 0 || src >= size()) fail(ErrorKind::InvalidInput, "draw index out of range");
    out.mu(i) = mu(src);
    out.eta.row(i) = eta.row(src);
    out.xi.row(i) = xi.row(src);
    out.sigma_xi2(i) = sigma_xi2(src);
    out.y_b.row(i) = y_b.row(src);
    out.q.push_back(q[static_cast<std::size_t>(src)]);
  }
  return out;
}

Eigen::MatrixXd PosteriorDraws::mean_q() const {
  if (q.empty()) fail(ErrorKind::InsufficientDraws, "no draws");
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(q.front().rows(), q.front().cols());
  for (const auto& qm : q) acc += qm;
  return acc / static_cast<double>(q.size());
}

namespace {

void check_finite(const Eigen::Ref<const Eigen::MatrixXd>& m, const char* what, int iter) {
  if (!m.allFinite()) {
    fail(ErrorKind::NumericalFailure,
         std::string("non-finite ") + what + " at iteration " + std::to_string(iter));
  }
}

void check_finite(double v, const char* what, int iter) {
  if (!std::isfinite(v)) {
    fail(ErrorKind::NumericalFailure,
         std::string("non-finite ") + what + " at iteration " + std::to_string(iter));
  }
}

/// Draws from N(P^{-1} b, P^{-1}) given a dense precision P.
Eigen::VectorXd draw_gaussian_canonical(const Eigen::MatrixXd& precision, const Eigen::VectorXd& b,
                                        Rng& rng, const char* what, int iter) {
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    fail(ErrorKind::NumericalFailure,
         std::string(what) + " precision not positive definite at iteration " + std::to_string(iter));
  }
  Eigen::VectorXd mean = llt.solve(b);
  Eigen::VectorXd noise = standard_normal_vector(b.size(), rng);
  return mean + llt.matrixU().solve(noise);
}

class GibbsSampler {
 public:
  GibbsSampler(const Design& d, const Priors& p, const GibbsOptions& o, const MiTarget* mi)
      : d_(d), p_(p), o_(o), mi_(mi), rng_(o.seed) {
    r_ = d.rank();
    n_b_ = d.n_units();
    dinv_ = d.var_z.cwiseInverse();
    ptdp_ = d.psi_obs.transpose() * dinv_.asDiagonal() * d.psi_obs;
    const Eigen::SparseMatrix<double> dh = dinv_.asDiagonal() * d.h_obs;
    htdh_ = Eigen::SparseMatrix<double>(d.h_obs.transpose() * dh);
    htdh_diagonal_ = true;
    for (int k = 0; k < htdh_.outerSize() && htdh_diagonal_; ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(htdh_, k); it; ++it) {
        if (it.row() != it.col() && it.value() != 0.0) {
          htdh_diagonal_ = false;
          break;
        }
      }
    }
    htdh_diag_ = Eigen::VectorXd(htdh_.diagonal());
    sum_dinv_ = dinv_.sum();
  }

  PosteriorDraws run() {
    validate();
    init_state();
    const int kept = (o_.iters - o_.burn_in) / o_.thin;
    PosteriorDraws out;
    out.mu.resize(kept);
    out.eta.resize(kept, r_);
    out.xi.resize(kept, n_b_);
    out.sigma_xi2.resize(kept);
    out.y_b.resize(kept, n_b_);
    out.q.reserve(static_cast<std::size_t>(kept));
    int m = 0;
    for (int it = 0; it < o_.iters; ++it) {
      step_eta(it);
      step_xi(it);
      step_mu(it);
      step_sigma_xi2(it);
      step_q(it);
      if (it >= o_.burn_in && (it - o_.burn_in + 1) % o_.thin == 0 && m < kept) {
        out.mu(m) = mu_;
        out.eta.row(m) = eta_.transpose();
        out.xi.row(m) = xi_.transpose();
        out.sigma_xi2(m) = s2xi_;
        out.q.push_back(current_q(it));
        out.y_b.row(m) = (d_.psi_b * eta_ + xi_).transpose();
        ++m;
      }
    }
    return out;
  }

 private:
  void validate() const {
    if (o_.iters <= o_.burn_in || o_.burn_in < 0) {
      fail(ErrorKind::Configuration, "need iters > burn_in >= 0");
    }
    if (o_.thin < 1) fail(ErrorKind::Configuration, "thin must be >= 1");
    if (!(p_.sigma_mu2 > 0.0)) fail(ErrorKind::Configuration, "sigma_mu2 must be positive");
    if (!(p_.alpha_xi > 0.0) || !(p_.beta_xi > 0.0)) {
      fail(ErrorKind::Configuration, "alpha_xi and beta_xi must be positive");
    }
    if (std::holds_alternative<GivensAnglePrior>(p_.q_prior)) {
      fail(ErrorKind::Unimplemented, "the Givens-angle prior on Q is not implemented");
    }
    if (const auto* iw = std::get_if<InverseWishartPrior>(&p_.q_prior)) {
      if (!(iw->df > r_ - 1)) fail(ErrorKind::Configuration, "inverse-Wishart df must exceed r - 1");
      if (iw->scale.rows() != r_ || iw->scale.cols() != r_) {
        fail(ErrorKind::Configuration, "inverse-Wishart scale must be r x r");
      }
    }
    if (const auto* mi = std::get_if<MoranIPrior>(&p_.q_prior)) {
      if (!(mi->shape > 0.0) || !(mi->rate > 0.0)) {
        fail(ErrorKind::Configuration, "Moran's I prior hyperparameters must be positive");
      }
      if (mi_ == nullptr) fail(ErrorKind::Configuration, "Moran's I prior needs a precomputed target");
      if (mi_->structure.rows() != r_) fail(ErrorKind::InvalidInput, "Moran's I target has wrong size");
    }
    if (const auto* fx = std::get_if<FixedCovariance>(&p_.q_prior)) {
      if (fx->q.rows() != r_ || fx->q.cols() != r_) {
        fail(ErrorKind::Configuration, "fixed Q must be r x r");
      }
    }
  }

  void init_state() {
    mu_ = p_.fixed_mu.value_or(0.0);
    eta_ = Eigen::VectorXd::Zero(r_);
    xi_ = Eigen::VectorXd::Zero(n_b_);
    s2xi_ = p_.beta_xi / (p_.alpha_xi + 1.0);
    if (const auto* iw = std::get_if<InverseWishartPrior>(&p_.q_prior)) {
      const double denom = iw->df - r_ - 1.0;
      const Eigen::MatrixXd q0 = denom > 0.0 ? Eigen::MatrixXd(iw->scale / denom) : iw->scale;
      q_prec_ = invert_spd(q0, "initial Q", 0);
    } else if (std::holds_alternative<MoranIPrior>(p_.q_prior)) {
      sigma2_ = 1.0;
      q_prec_ = mi_->precision_structure;
    } else if (const auto* fx = std::get_if<FixedCovariance>(&p_.q_prior)) {
      q_prec_ = invert_spd(fx->q, "fixed Q", 0);
    }
  }

  static Eigen::MatrixXd invert_spd(const Eigen::MatrixXd& m, const char* what, int iter) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) {
      fail(ErrorKind::NumericalFailure,
           std::string(what) + " not positive definite at iteration " + std::to_string(iter));
    }
    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
    return 0.5 * (inv + inv.transpose());
  }

  void step_eta(int it) {
    const Eigen::VectorXd resid = d_.z - Eigen::VectorXd::Constant(d_.n(), mu_) - d_.h_obs * xi_;
    const Eigen::VectorXd b = d_.psi_obs.transpose() * dinv_.cwiseProduct(resid);
    eta_ = draw_gaussian_canonical(q_prec_ + ptdp_, b, rng_, "eta", it);
    check_finite(eta_, "eta", it);
  }

  void step_xi(int it) {
    if (!p_.fine_scale) return;
    const Eigen::VectorXd resid = d_.z - Eigen::VectorXd::Constant(d_.n(), mu_) - d_.psi_obs * eta_;
    const Eigen::VectorXd b = d_.h_obs.transpose() * dinv_.cwiseProduct(resid);
    const double prior_prec = 1.0 / s2xi_;
    if (htdh_diagonal_) {
      for (int j = 0; j < n_b_; ++j) {
        const double prec = prior_prec + htdh_diag_(j);
        xi_(j) = b(j) / prec + standard_normal(rng_) / std::sqrt(prec);
      }
    } else {
      Eigen::SparseMatrix<double> prec = htdh_;
      for (int j = 0; j < n_b_; ++j) prec.coeffRef(j, j) += prior_prec;
      Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(prec);
      if (llt.info() != Eigen::Success) {
        fail(ErrorKind::NumericalFailure, "xi precision factorisation failed at iteration " +
                                              std::to_string(it));
      }
      const Eigen::VectorXd mean = llt.solve(b);
      // P A P^T = L L^T, so P^T L^{-T} e has covariance A^{-1}.
      Eigen::VectorXd e = standard_normal_vector(n_b_, rng_);
      Eigen::VectorXd y = llt.matrixU().solve(e);
      xi_ = mean + llt.permutationPinv() * y;
    }
    check_finite(xi_, "xi", it);
  }

  void step_mu(int it) {
    if (p_.fixed_mu) return;
    const Eigen::VectorXd resid = d_.z - d_.psi_obs * eta_ - d_.h_obs * xi_;
    const double prec = 1.0 / p_.sigma_mu2 + sum_dinv_;
    const double mean = dinv_.dot(resid) / prec;
    mu_ = mean + standard_normal(rng_) / std::sqrt(prec);
    check_finite(mu_, "mu", it);
  }

  void step_sigma_xi2(int it) {
    if (!p_.fine_scale) return;
    s2xi_ = inverse_gamma_variate(p_.alpha_xi + 0.5 * n_b_, p_.beta_xi + 0.5 * xi_.squaredNorm(), rng_);
    check_finite(s2xi_, "sigma_xi2", it);
  }

  void step_q(int it) {
    if (const auto* iw = std::get_if<InverseWishartPrior>(&p_.q_prior)) {
      const Eigen::MatrixXd post_scale = iw->scale + eta_ * eta_.transpose();
      q_prec_ = sample_wishart_precision(iw->df + 1.0, post_scale, rng_);
      check_finite(q_prec_, "Q", it);
    } else if (const auto* mi = std::get_if<MoranIPrior>(&p_.q_prior)) {
      const double quad = eta_.dot(mi_->precision_structure * eta_);
      sigma2_ = inverse_gamma_variate(mi->shape + 0.5 * r_, mi->rate + 0.5 * quad, rng_);
      check_finite(sigma2_, "sigma2", it);
      q_prec_ = mi_->precision_structure / sigma2_;
    }
  }

  Eigen::MatrixXd current_q(int it) const {
    if (const auto* fx = std::get_if<FixedCovariance>(&p_.q_prior)) return fx->q;
    if (std::holds_alternative<MoranIPrior>(p_.q_prior)) return sigma2_ * mi_->structure;
    return invert_spd(q_prec_, "Q draw", it);
  }

  const Design& d_;
  const Priors& p_;
  const GibbsOptions& o_;
  const MiTarget* mi_;
  Rng rng_;
  int r_ = 0;
  int n_b_ = 0;
  Eigen::VectorXd dinv_;
  Eigen::MatrixXd ptdp_;
  Eigen::SparseMatrix<double> htdh_;
  Eigen::VectorXd htdh_diag_;
  bool htdh_diagonal_ = true;
  double sum_dinv_ = 0.0;

  double mu_ = 0.0;
  Eigen::VectorXd eta_;
  Eigen::VectorXd xi_;
  double s2xi_ = 1.0;
  double sigma2_ = 1.0;
  Eigen::MatrixXd q_prec_;
};

}  // namespace

PosteriorDraws gibbs_run(const Design& design, const Priors& priors, const GibbsOptions& options,
                         const MiTarget* mi) {
  if (design.psi_obs.cols() != design.rank() || design.h_obs.cols() != design.n_units() ||
      design.psi_obs.rows() != design.n() || design.h_obs.rows() != design.n() ||
      design.var_z.size() != design.n()) {
    fail(ErrorKind::InvalidInput, "inconsistent design dimensions");
  }
  GibbsSampler sampler(design, priors, options, mi);
  return sampler.run();
}

PosteriorDraws gibbs_run(const ModelSpec& spec, const GibbsOptions& options) {
  if (std::holds_alternative<GivensAnglePrior>(spec.priors.q_prior)) {
    fail(ErrorKind::Unimplemented, "the Givens-angle prior on Q is not implemented");
  }
  const Design design = build_design(spec);
  if (std::holds_alternative<MoranIPrior>(spec.priors.q_prior)) {
    const MiTarget mi = mi_target(design.psi_b, spec.fine->adjacency_matrix());
    return gibbs_run(design, spec.priors, options, &mi);
  }
  return gibbs_run(design, spec.priors, options, nullptr);
}

PosteriorSummary posterior_summary(const PosteriorDraws& draws, bool include_mu) {
  const int m = draws.size();
  if (m < 2) fail(ErrorKind::InsufficientDraws, "posterior summary needs at least two draws");
  Eigen::MatrixXd y = draws.y_b;
  if (include_mu) y.colwise() += draws.mu;
  PosteriorSummary out;
  out.mean = y.colwise().mean().transpose();
  const Eigen::MatrixXd centered = y.rowwise() - out.mean.transpose();
  out.sd = (centered.colwise().squaredNorm() / static_cast<double>(m - 1)).cwiseSqrt().transpose();
  return out;
}

TransformedDatum logit_delta(double proportion, double variance) {
  if (!(proportion > 0.0 && proportion < 1.0)) {
    fail(ErrorKind::InvalidInput, "logit transform needs a proportion strictly inside (0, 1)");
  }
  if (!(variance > 0.0)) fail(ErrorKind::InvalidInput, "variance must be positive");
  const double deriv = 1.0 / (proportion * (1.0 - proportion));
  return TransformedDatum{std::log(proportion / (1.0 - proportion)), variance * deriv * deriv};
}

}  // namespace cage
