#include "cage/criterion.hpp"

#include <cmath>

#include "cage/error.hpp"
#include "cage/random.hpp"

namespace cage {

const char* to_string(CriterionKind kind) noexcept {
  return kind == CriterionKind::Cage ? "cage" : "dcage";
}

CriterionKind parse_criterion_kind(const std::string& name) {
  if (name == "cage" || name == "CAGE") return CriterionKind::Cage;
  if (name == "dcage" || name == "DCAGE") return CriterionKind::Dcage;
  fail(ErrorKind::Configuration, "unknown criterion '" + name + "' (expected cage or dcage)");
}

CageReport make_report(std::vector<double> values, CriterionKind kind) {
  CageReport out;
  out.kind = kind;
  double sum = 0.0;
  for (std::size_t l = 0; l < values.size(); ++l) {
    out.per_region.emplace_back(static_cast<int>(l), values[l]);
    sum += values[l];
  }
  out.average = values.empty() ? 0.0 : sum / static_cast<double>(values.size());
  return out;
}

namespace {

void check_draws(const PosteriorDraws& draws, const OcBasis& oc) {
  if (draws.size() < 1) fail(ErrorKind::InsufficientDraws, "no posterior draws");
  if (draws.q.size() != static_cast<std::size_t>(draws.size())) {
    fail(ErrorKind::InvalidInput, "number of Q draws does not match the draw count");
  }
  const int r = oc.rank();
  for (const auto& q : draws.q) {
    if (q.rows() != r || q.cols() != r) {
      fail(ErrorKind::InvalidInput, "Q draw is not r x r for the supplied basis");
    }
  }
}

/// Per region: member indices, area weights, and the deviation rows D_h.
struct RegionTerms {
  std::vector<Eigen::VectorXd> weights;
  std::vector<Eigen::MatrixXd> deviations;
};

RegionTerms region_terms(const Eigen::MatrixXd& psi_b, const Eigen::VectorXd& areas,
                         const Partition& partition, const Eigen::MatrixXd& region_psi) {
  RegionTerms t;
  const auto groups = partition.members();
  for (std::size_t l = 0; l < groups.size(); ++l) {
    const auto& members = groups[l];
    const auto n = static_cast<Eigen::Index>(members.size());
    double total = 0.0;
    for (int h : members) total += areas(h);
    Eigen::VectorXd w(n);
    Eigen::MatrixXd d(n, psi_b.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      const int h = members[static_cast<std::size_t>(i)];
      w(i) = areas(h) / total;
      d.row(i) = psi_b.row(h) - region_psi.row(static_cast<Eigen::Index>(l));
    }
    t.weights.push_back(std::move(w));
    t.deviations.push_back(std::move(d));
  }
  return t;
}

}  // namespace

Eigen::MatrixXd region_oc_means(const Eigen::MatrixXd& psi_b, const Eigen::VectorXd& areas,
                                const Partition& partition) {
  partition.validate(static_cast<int>(psi_b.rows()));
  if (areas.size() != psi_b.rows()) fail(ErrorKind::InvalidInput, "area vector size mismatch");
  const auto groups = partition.members();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(partition.k, psi_b.cols());
  for (int l = 0; l < partition.k; ++l) {
    const auto& members = groups[static_cast<std::size_t>(l)];
    if (members.size() == 1) {
      out.row(l) = psi_b.row(members.front());
      continue;
    }
    double total = 0.0;
    for (int h : members) total += areas(h);
    for (int h : members) out.row(l) += (areas(h) / total) * psi_b.row(h);
  }
  return out;
}

CageReport dcage(const PosteriorDraws& draws, const OcBasis& oc, const FineSupport& fine,
                 const Partition& partition) {
  check_draws(draws, oc);
  partition.validate(fine.size());
  const Eigen::MatrixXd psi_b = oc.eval_units(fine);
  const Eigen::VectorXd areas = fine.areas();
  const RegionTerms t = region_terms(psi_b, areas, partition, region_oc_means(psi_b, areas, partition));
  std::vector<double> values(static_cast<std::size_t>(partition.k), 0.0);
  const double inv_m = 1.0 / static_cast<double>(draws.size());
  for (std::size_t l = 0; l < values.size(); ++l) {
    const auto& d = t.deviations[l];
    double acc = 0.0;
    for (const auto& q : draws.q) {
      const Eigen::VectorXd quad = (d * q).cwiseProduct(d).rowwise().sum();
      acc += t.weights[l].dot(quad);
    }
    values[l] = acc * inv_m;
  }
  return make_report(std::move(values), CriterionKind::Dcage);
}

CageReport dcage_eigen(const PosteriorDraws& draws, const OcBasis& oc, const FineSupport& fine,
                       const Partition& partition) {
  check_draws(draws, oc);
  partition.validate(fine.size());
  const Eigen::MatrixXd psi_b = oc.eval_units(fine);
  const Eigen::VectorXd areas = fine.areas();
  const RegionTerms t = region_terms(psi_b, areas, partition, region_oc_means(psi_b, areas, partition));
  std::vector<EigenReplicate> reps;
  reps.reserve(draws.q.size());
  for (const auto& q : draws.q) reps.push_back(eigen_replicate(q));
  std::vector<double> values(static_cast<std::size_t>(partition.k), 0.0);
  const double inv_m = 1.0 / static_cast<double>(draws.size());
  for (std::size_t l = 0; l < values.size(); ++l) {
    double acc = 0.0;
    for (const auto& rep : reps) {
      // Rows of phi are replicate eigenfunction differences G^T D_h.
      const Eigen::MatrixXd phi = t.deviations[l] * rep.g;
      const Eigen::VectorXd quad = phi.cwiseAbs2() * rep.lambda;
      acc += t.weights[l].dot(quad);
    }
    values[l] = acc * inv_m;
  }
  return make_report(std::move(values), CriterionKind::Dcage);
}

double cage_point(const PosteriorDraws& draws, const OcBasis& oc, const Region& region) {
  check_draws(draws, oc);
  if (region.samples.cols() == 0) fail(ErrorKind::InvalidGeometry, "region has an empty sample cloud");
  const Eigen::MatrixXd psi = oc.eval_points(region.samples);
  const Eigen::RowVectorXd centre = psi.colwise().mean();
  const Eigen::MatrixXd d = psi.rowwise() - centre;
  const double inv_n = 1.0 / static_cast<double>(psi.rows());
  double acc = 0.0;
  for (const auto& q : draws.q) acc += (d * q).cwiseProduct(d).sum() * inv_n;
  return acc / static_cast<double>(draws.size());
}

CageReport cage(const PosteriorDraws& draws, const OcBasis& oc, const FineSupport& fine,
                const Partition& partition) {
  const auto regions = merge_regions(fine, partition);
  std::vector<double> values;
  values.reserve(regions.size());
  for (const auto& region : regions) values.push_back(cage_point(draws, oc, region));
  return make_report(std::move(values), CriterionKind::Cage);
}

MomentOracle dcage_moment_oracle(const PosteriorDraws& draws, const OcBasis& oc,
                                 const FineSupport& fine, const Partition& partition, int inner,
                                 std::uint64_t seed) {
  check_draws(draws, oc);
  partition.validate(fine.size());
  if (inner < 2) fail(ErrorKind::Configuration, "moment oracle needs at least two inner draws");
  const Eigen::MatrixXd psi_b = oc.eval_units(fine);
  const Eigen::VectorXd areas = fine.areas();
  const Eigen::MatrixXd psi_c = region_oc_means(psi_b, areas, partition);
  const RegionTerms t = region_terms(psi_b, areas, partition, psi_c);
  const auto k = static_cast<std::size_t>(partition.k);
  const int m_count = draws.size();
  std::vector<double> mean(k, 0.0);
  std::vector<double> var(k, 0.0);
  for (int m = 0; m < m_count; ++m) {
    const EigenReplicate rep = eigen_replicate(draws.q[static_cast<std::size_t>(m)]);
    const Eigen::MatrixXd root = rep.g * rep.lambda.cwiseSqrt().asDiagonal();
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(m)}));
    std::vector<double> sum(k, 0.0);
    std::vector<double> sum_sq(k, 0.0);
    for (int i = 0; i < inner; ++i) {
      const Eigen::VectorXd alpha = root * standard_normal_vector(root.cols(), rng);
      for (std::size_t l = 0; l < k; ++l) {
        // Y(B_h) - Y(C) for every member, through D_h = psi*(B_h) - psi*(C).
        const Eigen::VectorXd diff = t.deviations[l] * alpha;
        const double v = t.weights[l].dot(diff.cwiseAbs2());
        sum[l] += v;
        sum_sq[l] += v * v;
      }
    }
    for (std::size_t l = 0; l < k; ++l) {
      const double mu = sum[l] / inner;
      const double s2 = std::max(0.0, (sum_sq[l] - inner * mu * mu) / (inner - 1));
      mean[l] += mu / m_count;
      var[l] += s2 / inner / (static_cast<double>(m_count) * m_count);
    }
  }
  MomentOracle out;
  out.report = make_report(mean, CriterionKind::Dcage);
  for (double v : var) out.std_error.push_back(std::sqrt(v));
  return out;
}

double variance_identity_check(const PosteriorDraws& draws, const OcBasis& oc,
                               const FineSupport& fine, const Partition& partition,
                               const std::optional<Eigen::MatrixXd>& region_psi) {
  check_draws(draws, oc);
  partition.validate(fine.size());
  const Eigen::MatrixXd psi_b = oc.eval_units(fine);
  const Eigen::VectorXd areas = fine.areas();
  const Eigen::MatrixXd psi_c = region_psi ? *region_psi : region_oc_means(psi_b, areas, partition);
  if (psi_c.rows() != partition.k || psi_c.cols() != psi_b.cols()) {
    fail(ErrorKind::InvalidInput, "region psi* override has the wrong shape");
  }
  const auto groups = partition.members();
  const Eigen::MatrixXd true_c = region_oc_means(psi_b, areas, partition);
  const RegionTerms t = region_terms(psi_b, areas, partition, true_c);
  double worst = 0.0;
  for (int l = 0; l < partition.k; ++l) {
    const auto& members = groups[static_cast<std::size_t>(l)];
    Eigen::MatrixXd a(static_cast<Eigen::Index>(members.size()), psi_b.cols());
    for (std::size_t i = 0; i < members.size(); ++i) a.row(static_cast<Eigen::Index>(i)) = psi_b.row(members[i]);
    const Eigen::VectorXd c = psi_c.row(l).transpose();
    const auto& w = t.weights[static_cast<std::size_t>(l)];
    const auto& d = t.deviations[static_cast<std::size_t>(l)];
    for (const auto& q : draws.q) {
      const double quad_form = w.dot((d * q).cwiseProduct(d).rowwise().sum());
      const double var_form = w.dot((a * q).cwiseProduct(a).rowwise().sum()) - c.dot(q * c);
      worst = std::max(worst, std::abs(var_form - quad_form));
    }
  }
  return worst;
}

CriterionEvaluator::CriterionEvaluator(const PosteriorDraws& draws, const OcBasis& oc,
                                       const FineSupport& fine, CriterionKind kind)
    : kind_(kind), areas_(fine.areas()) {
  check_draws(draws, oc);
  const Eigen::MatrixXd q_bar = draws.mean_q();
  if (kind == CriterionKind::Dcage) {
    const Eigen::MatrixXd psi_b = oc.eval_units(fine);
    kernel_ = psi_b * q_bar * psi_b.transpose();
    return;
  }
  const int n_b = fine.size();
  Eigen::MatrixXd u(n_b, oc.rank());
  self_terms_.resize(n_b);
  counts_.resize(n_b);
  for (int j = 0; j < n_b; ++j) {
    const auto& samples = fine.unit(j).samples;
    if (samples.cols() == 0) fail(ErrorKind::InvalidGeometry, "unit has an empty sample cloud");
    const Eigen::MatrixXd psi = oc.eval_points(samples);
    u.row(j) = psi.colwise().sum();
    self_terms_(j) = (psi * q_bar).cwiseProduct(psi).sum();
    counts_(j) = static_cast<double>(samples.cols());
  }
  kernel_ = u * q_bar * u.transpose();
}

std::vector<double> CriterionEvaluator::per_region(const Partition& partition) const {
  partition.validate(n_units());
  const auto groups = partition.members();
  std::vector<double> values;
  values.reserve(groups.size());
  for (const auto& members : groups) {
    if (kind_ == CriterionKind::Dcage) {
      if (members.size() == 1) {
        values.push_back(0.0);
        continue;
      }
      double total = 0.0;
      for (int h : members) total += areas_(h);
      double self = 0.0;
      double cross = 0.0;
      for (int h : members) {
        const double ph = areas_(h) / total;
        self += ph * kernel_(h, h);
        for (int g : members) cross += ph * (areas_(g) / total) * kernel_(h, g);
      }
      values.push_back(std::max(0.0, self - cross));
    } else {
      double n = 0.0;
      double self = 0.0;
      double cross = 0.0;
      for (int h : members) {
        n += counts_(h);
        self += self_terms_(h);
        for (int g : members) cross += kernel_(h, g);
      }
      values.push_back(std::max(0.0, self / n - cross / (n * n)));
    }
  }
  return values;
}

double CriterionEvaluator::average(const Partition& partition) const {
  const auto values = per_region(partition);
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

CageReport CriterionEvaluator::report(const Partition& partition) const {
  return make_report(per_region(partition), kind_);
}

}  // namespace cage
