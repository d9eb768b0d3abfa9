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

namespace cage {

enum class CriterionKind { Cage, Dcage };

const char* to_string(CriterionKind kind) noexcept;
CriterionKind parse_criterion_kind(const std::string& name);

struct CageReport {
  std::vector<std::pair<int, double>> per_region;
  double average = 0.0;
  CriterionKind kind = CriterionKind::Dcage;
};

/// k x r matrix whose row l is psi*(C_l), the area-weighted mean of member rows.
Eigen::MatrixXd region_oc_means(const Eigen::MatrixXd& psi_b, const Eigen::VectorXd& areas,
                                const Partition& partition);

/// DCAGE(C) = (1/M) sum_m sum_{h in C} (|B_h| / |C|) D_h^T Q^[m] D_h with
/// D_h = psi*(B_h) - psi*(C). Evaluated draw by draw.
CageReport dcage(const PosteriorDraws& draws, const OcBasis& oc, const FineSupport& fine,
                 const Partition& partition);

/// Same quantity through each draw's spectral factors Q = G diag(lambda) G^T.
CageReport dcage_eigen(const PosteriorDraws& draws, const OcBasis& oc, const FineSupport& fine,
                       const Partition& partition);

/// Monte Carlo CAGE of a region over its sample cloud.
double cage_point(const PosteriorDraws& draws, const OcBasis& oc, const Region& region);

/// CAGE of every region of a partition (clouds are the concatenated member clouds).
CageReport cage(const PosteriorDraws& draws, const OcBasis& oc, const FineSupport& fine,
                const Partition& partition);

struct MomentOracle {
  CageReport report;
  std::vector<double> std_error;  ///< per region, same order as report.per_region
};

/// Moment form: for each Q^[m], draw alpha ~ N(0, Q^[m]) `inner` times and
/// average sum_h (|B_h| / |C|) {Y(B_h) - Y(C)}^2 with Y(u) = psi*(u)^T alpha.
MomentOracle dcage_moment_oracle(const PosteriorDraws& draws, const OcBasis& oc,
                                 const FineSupport& fine, const Partition& partition, int inner,
                                 std::uint64_t seed);

/// max over regions and draws of |variance form - quadratic form|, where the
/// variance form is sum_h (|B_h|/|C|) psi*(B_h)^T Q psi*(B_h) - psi*(C)^T Q psi*(C).
/// region_psi overrides psi*(C) (k x r) for negative controls.
double variance_identity_check(const PosteriorDraws& draws, const OcBasis& oc,
                               const FineSupport& fine, const Partition& partition,
                               const std::optional<Eigen::MatrixXd>& region_psi = std::nullopt);

/// Fast evaluator for repeated partitions over one set of draws. The criterion
/// is linear in Q, so the posterior mean of Q is folded into a unit-level
/// kernel once and every region costs O(|C|^2).
class CriterionEvaluator {
 public:
  CriterionEvaluator(const PosteriorDraws& draws, const OcBasis& oc, const FineSupport& fine,
                     CriterionKind kind);

  CriterionKind kind() const { return kind_; }
  int n_units() const { return static_cast<int>(areas_.size()); }

  std::vector<double> per_region(const Partition& partition) const;
  /// (1/k) sum over regions.
  double average(const Partition& partition) const;
  CageReport report(const Partition& partition) const;

 private:
  CriterionKind kind_;
  Eigen::VectorXd areas_;
  Eigen::MatrixXd kernel_;       ///< DCAGE: Psi_B Qbar Psi_B^T; CAGE: U Qbar U^T
  Eigen::VectorXd self_terms_;   ///< CAGE: per-unit sum of psi*^T Qbar psi* over samples
  Eigen::VectorXd counts_;       ///< CAGE: per-unit sample count
};

CageReport make_report(std::vector<double> values, CriterionKind kind);

}  // namespace cage
