#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cage/basis.hpp"
#include "cage/criterion.hpp"
#include "cage/geometry.hpp"
#include "cage/inference.hpp"

namespace cage {

enum class Algorithm { KMeans, Shc };
enum class FeatureScaling { Standardize, Raw };

const char* to_string(Algorithm a) noexcept;
const char* to_string(FeatureScaling s) noexcept;
Algorithm parse_algorithm(const std::string& name);
FeatureScaling parse_feature_scaling(const std::string& name);

struct SearchConfig {
  int g_lower = 2;
  int g_upper = 2;
  Algorithm algorithm = Algorithm::KMeans;
  FeatureScaling scaling = FeatureScaling::Standardize;
  CriterionKind criterion = CriterionKind::Dcage;
  std::uint64_t seed = 1;
  int kmeans_restarts = 1;

  /// 2 <= g_lower <= g_upper <= n_units - 1.
  void validate(int n_units) const;
};

struct Candidate {
  Partition partition;
  int k = 0;
  int m = 0;
  double avg_criterion = std::numeric_limits<double>::quiet_NaN();
};

struct CandidateSummary {
  int k = 0;
  int m = 0;
  double avg_criterion = 0.0;
};

struct SearchResult {
  Candidate optimal;
  std::vector<CandidateSummary> all;
};

/// Clustering features [centroid x, centroid y, y_b], scaled per column.
Eigen::MatrixXd cluster_features(const FineSupport& fine, const Eigen::VectorXd& y_b,
                                 FeatureScaling scaling);

/// Lloyd's algorithm from k-means++ seeding. With restarts > 1 the lowest
/// within-cluster sum of squares wins.
Partition kmeans(const Eigen::MatrixXd& features, int k, std::uint64_t seed, int restarts = 1,
                 int max_iter = 300);

/// Ward agglomeration restricted to adjacent clusters. Built once, cut at any k.
class ShcDendrogram {
 public:
  ShcDendrogram(const Eigen::MatrixXd& features, const std::vector<std::vector<int>>& neighbours);

  /// Number of connected components, i.e. the smallest reachable k.
  int min_clusters() const { return min_clusters_; }
  Partition cut(int k) const;

 private:
  int n_ = 0;
  int min_clusters_ = 0;
  std::vector<std::pair<int, int>> merges_;  ///< (absorbing root, absorbed root), in order
};

Partition shc(const Eigen::MatrixXd& features, const std::vector<std::vector<int>>& neighbours,
              int k);

/// Candidates for k = g_lower..g_upper and every draw m, ordered by (m, k).
/// avg_criterion is left unset.
std::vector<Candidate> candidates(const PosteriorDraws& draws, const FineSupport& fine,
                                  const SearchConfig& config);

/// Scores every candidate with the evaluator and returns the argmin (ties: smaller
/// k, then smaller m).
SearchResult select_optimal(std::vector<Candidate> cands, const CriterionEvaluator& evaluator);
SearchResult select_optimal(std::vector<Candidate> cands, const PosteriorDraws& draws,
                            const OcBasis& oc, const FineSupport& fine, CriterionKind criterion);

/// candidates followed by select_optimal.
SearchResult search(const PosteriorDraws& draws, const OcBasis& oc, const FineSupport& fine,
                    const SearchConfig& config);

/// Runs the search on draw 0 only over config_wide's range and returns a window
/// of the given half-width around the optimum, clipped to [2, n_units - 1].
std::pair<int, int> simplified_prescan(const PosteriorDraws& draws, const OcBasis& oc,
                                       const FineSupport& fine, const SearchConfig& config_wide,
                                       int half_width = 10);

struct ComparisonRatios {
  double re_mspe = 0.0;
  double re_cage = 0.0;
};

/// Ratios of area-scaled squared prediction error and aggregation error, with
/// support_a in the numerator. truth and estimates are unit-level values;
/// region values are area-weighted means of them.
ComparisonRatios re_mspe_re_cage(const Eigen::VectorXd& truth, const Eigen::VectorXd& estimates,
                                 const Eigen::VectorXd& areas, const Partition& support_a,
                                 const Partition& support_b);

}  // namespace cage
