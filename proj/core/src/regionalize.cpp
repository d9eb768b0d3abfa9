#include "cage/regionalize.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numeric>
#include <optional>
#include <queue>
#include <random>
#include <tuple>

#include "cage/error.hpp"
#include "cage/random.hpp"

namespace cage {

const char* to_string(Algorithm a) noexcept { return a == Algorithm::KMeans ? "kmeans" : "shc"; }

const char* to_string(FeatureScaling s) noexcept {
  return s == FeatureScaling::Standardize ? "standardize" : "raw";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "kmeans" || name == "k-means") return Algorithm::KMeans;
  if (name == "shc") return Algorithm::Shc;
  fail(ErrorKind::Configuration, "unknown algorithm '" + name + "' (expected kmeans or shc)");
}

FeatureScaling parse_feature_scaling(const std::string& name) {
  if (name == "standardize") return FeatureScaling::Standardize;
  if (name == "raw") return FeatureScaling::Raw;
  fail(ErrorKind::Configuration, "unknown scaling '" + name + "' (expected standardize or raw)");
}

void SearchConfig::validate(int n_units) const {
  if (g_lower < 2 || g_lower > g_upper || g_upper > n_units - 1) {
    fail(ErrorKind::Configuration, "need 2 <= g_lower <= g_upper <= n_B - 1 (got g_lower=" +
                                       std::to_string(g_lower) + ", g_upper=" +
                                       std::to_string(g_upper) + ", n_B=" + std::to_string(n_units) +
                                       ")");
  }
  if (kmeans_restarts < 1) fail(ErrorKind::Configuration, "kmeans_restarts must be >= 1");
}

Eigen::MatrixXd cluster_features(const FineSupport& fine, const Eigen::VectorXd& y_b,
                                 FeatureScaling scaling) {
  const int n = fine.size();
  if (y_b.size() != n) fail(ErrorKind::InvalidInput, "Y_B draw length does not match the support");
  Eigen::MatrixXd f(n, 3);
  for (int j = 0; j < n; ++j) {
    f(j, 0) = fine.unit(j).centroid.x();
    f(j, 1) = fine.unit(j).centroid.y();
    f(j, 2) = y_b(j);
  }
  if (scaling == FeatureScaling::Standardize) {
    for (Eigen::Index c = 0; c < f.cols(); ++c) {
      const double mean = f.col(c).mean();
      f.col(c).array() -= mean;
      const double sd = std::sqrt(f.col(c).squaredNorm() / static_cast<double>(n));
      if (sd > 0.0) f.col(c) /= sd;
    }
  }
  return f;
}

namespace {

/// Relabels by order of first appearance so equal clusterings compare equal.
Partition canonical(const std::vector<int>& labels) {
  std::vector<int> map;
  std::vector<int> out(labels.size());
  int next = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int l = labels[i];
    if (static_cast<std::size_t>(l) >= map.size()) map.resize(static_cast<std::size_t>(l) + 1, -1);
    if (map[static_cast<std::size_t>(l)] < 0) map[static_cast<std::size_t>(l)] = next++;
    out[i] = map[static_cast<std::size_t>(l)];
  }
  return Partition::from_labels(std::move(out));
}

struct KmeansRun {
  std::vector<int> labels;
  double cost = 0.0;
};

KmeansRun kmeans_once(const Eigen::MatrixXd& x, int k, std::uint64_t seed, int max_iter) {
  const auto n = static_cast<int>(x.rows());
  Rng rng(seed);
  Eigen::MatrixXd centers(k, x.cols());
  std::uniform_int_distribution<int> pick(0, n - 1);
  centers.row(0) = x.row(pick(rng));
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) d2[static_cast<std::size_t>(i)] = (x.row(i) - centers.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    int chosen = 0;
    if (total > 0.0) {
      std::discrete_distribution<int> dist(d2.begin(), d2.end());
      chosen = dist(rng);
    } else {
      chosen = pick(rng);
    }
    centers.row(c) = x.row(chosen);
    for (int i = 0; i < n; ++i) {
      d2[static_cast<std::size_t>(i)] =
          std::min(d2[static_cast<std::size_t>(i)], (x.row(i) - centers.row(c)).squaredNorm());
    }
  }

  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  auto assign = [&]() {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (x.row(i) - centers.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d = (x.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (labels[static_cast<std::size_t>(i)] != best) {
        labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    return changed;
  };
  auto counts_of = [&]() {
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++counts[static_cast<std::size_t>(l)];
    return counts;
  };
  // Moves the point farthest from its centre (in a cluster of size > 1) into
  // each empty cluster.
  auto reseed_empty = [&]() {
    auto counts = counts_of();
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      int far = -1;
      double far_d = -1.0;
      for (int i = 0; i < n; ++i) {
        const int l = labels[static_cast<std::size_t>(i)];
        if (counts[static_cast<std::size_t>(l)] < 2) continue;
        const double d = (x.row(i) - centers.row(l)).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      --counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(far)])];
      labels[static_cast<std::size_t>(far)] = c;
      counts[static_cast<std::size_t>(c)] = 1;
      centers.row(c) = x.row(far);
    }
  };
  auto update_centers = [&]() {
    centers.setZero();
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < n; ++i) {
      centers.row(labels[static_cast<std::size_t>(i)]) += x.row(i);
      ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c) centers.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
  };

  assign();
  for (int it = 0; it < max_iter; ++it) {
    reseed_empty();
    update_centers();
    if (!assign()) break;
  }
  reseed_empty();
  update_centers();

  KmeansRun run;
  for (int i = 0; i < n; ++i) run.cost += (x.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
  run.labels = std::move(labels);
  return run;
}

}  // namespace

Partition kmeans(const Eigen::MatrixXd& features, int k, std::uint64_t seed, int restarts,
                 int max_iter) {
  const auto n = static_cast<int>(features.rows());
  if (k < 1 || k > n) {
    fail(ErrorKind::Configuration,
         "k-means needs 1 <= k <= n_B (k=" + std::to_string(k) + ", n_B=" + std::to_string(n) + ")");
  }
  if (restarts < 1) fail(ErrorKind::Configuration, "restarts must be >= 1");
  if (k == n) return Partition::identity(n);
  KmeansRun best;
  for (int s = 0; s < restarts; ++s) {
    const std::uint64_t run_seed = restarts == 1 ? seed : derive_seed(seed, {static_cast<std::uint64_t>(s)});
    KmeansRun run = kmeans_once(features, k, run_seed, max_iter);
    if (s == 0 || run.cost < best.cost) best = std::move(run);
  }
  return canonical(best.labels);
}

ShcDendrogram::ShcDendrogram(const Eigen::MatrixXd& features,
                             const std::vector<std::vector<int>>& neighbours)
    : n_(static_cast<int>(features.rows())) {
  if (static_cast<int>(neighbours.size()) != n_) {
    fail(ErrorKind::InvalidInput, "neighbour list size does not match the feature rows");
  }
  const auto n = static_cast<std::size_t>(n_);
  std::vector<Eigen::VectorXd> centroid(n);
  std::vector<double> size(n, 1.0);
  std::vector<std::vector<int>> adj(n);
  std::vector<int> version(n, 0);
  std::vector<bool> alive(n, true);
  for (std::size_t i = 0; i < n; ++i) {
    centroid[i] = features.row(static_cast<Eigen::Index>(i)).transpose();
    for (int j : neighbours[i]) {
      if (j < 0 || j >= n_) fail(ErrorKind::InvalidInput, "neighbour id out of range");
      if (j != static_cast<int>(i)) adj[i].push_back(j);
    }
    std::sort(adj[i].begin(), adj[i].end());
    adj[i].erase(std::unique(adj[i].begin(), adj[i].end()), adj[i].end());
  }

  using Entry = std::tuple<double, int, int, int, int>;  // cost, a, b, version a, version b
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  auto ward = [&](int a, int b) {
    const auto ua = static_cast<std::size_t>(a);
    const auto ub = static_cast<std::size_t>(b);
    return size[ua] * size[ub] / (size[ua] + size[ub]) * (centroid[ua] - centroid[ub]).squaredNorm();
  };
  auto push = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    heap.emplace(ward(a, b), a, b, version[static_cast<std::size_t>(a)],
                 version[static_cast<std::size_t>(b)]);
  };
  for (int i = 0; i < n_; ++i) {
    for (int j : adj[static_cast<std::size_t>(i)]) {
      if (i < j) push(i, j);
    }
  }
  while (!heap.empty()) {
    const auto [cost, a, b, va, vb] = heap.top();
    heap.pop();
    const auto ua = static_cast<std::size_t>(a);
    const auto ub = static_cast<std::size_t>(b);
    if (!alive[ua] || !alive[ub] || version[ua] != va || version[ub] != vb) continue;
    // a < b: a absorbs b.
    centroid[ua] = (size[ua] * centroid[ua] + size[ub] * centroid[ub]) / (size[ua] + size[ub]);
    size[ua] += size[ub];
    alive[ub] = false;
    ++version[ua];
    std::vector<int> merged;
    std::set_union(adj[ua].begin(), adj[ua].end(), adj[ub].begin(), adj[ub].end(),
                   std::back_inserter(merged));
    merged.erase(std::remove_if(merged.begin(), merged.end(), [&](int v) { return v == a || v == b; }),
                 merged.end());
    adj[ua] = merged;
    adj[ub].clear();
    for (int v : merged) {
      auto& nv = adj[static_cast<std::size_t>(v)];
      nv.erase(std::remove(nv.begin(), nv.end(), b), nv.end());
      if (!std::binary_search(nv.begin(), nv.end(), a)) nv.insert(std::lower_bound(nv.begin(), nv.end(), a), a);
      push(a, v);
    }
    merges_.emplace_back(a, b);
  }
  min_clusters_ = n_ - static_cast<int>(merges_.size());
}

Partition ShcDendrogram::cut(int k) const {
  if (k < 1 || k > n_) {
    fail(ErrorKind::Configuration,
         "SHC needs 1 <= k <= n_B (k=" + std::to_string(k) + ", n_B=" + std::to_string(n_) + ")");
  }
  if (k < min_clusters_) {
    fail(ErrorKind::InfeasibleContiguity, "cannot form " + std::to_string(k) +
                                              " contiguous regions from " +
                                              std::to_string(min_clusters_) + " components");
  }
  std::vector<int> parent(static_cast<std::size_t>(n_));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[static_cast<std::size_t>(v)] != v) v = parent[static_cast<std::size_t>(v)];
    return v;
  };
  for (int i = 0; i < n_ - k; ++i) {
    const auto [a, b] = merges_[static_cast<std::size_t>(i)];
    parent[static_cast<std::size_t>(find(b))] = find(a);
  }
  std::vector<int> labels(static_cast<std::size_t>(n_));
  for (int v = 0; v < n_; ++v) labels[static_cast<std::size_t>(v)] = find(v);
  return canonical(labels);
}

Partition shc(const Eigen::MatrixXd& features, const std::vector<std::vector<int>>& neighbours,
              int k) {
  return ShcDendrogram(features, neighbours).cut(k);
}

std::vector<Candidate> candidates(const PosteriorDraws& draws, const FineSupport& fine,
                                  const SearchConfig& config) {
  config.validate(fine.size());
  if (draws.size() < 1) fail(ErrorKind::InsufficientDraws, "candidate generation needs at least one draw");
  if (draws.n_units() != fine.size()) fail(ErrorKind::InvalidInput, "draws do not match the support");
  std::vector<Candidate> out;
  out.reserve(static_cast<std::size_t>(draws.size()) *
              static_cast<std::size_t>(config.g_upper - config.g_lower + 1));
  for (int m = 0; m < draws.size(); ++m) {
    const Eigen::MatrixXd f = cluster_features(fine, draws.y_b.row(m).transpose(), config.scaling);
    std::optional<ShcDendrogram> tree;
    if (config.algorithm == Algorithm::Shc) tree.emplace(f, fine.neighbours());
    for (int k = config.g_lower; k <= config.g_upper; ++k) {
      Candidate c;
      c.k = k;
      c.m = m;
      if (tree) {
        c.partition = tree->cut(k);
      } else {
        const auto seed = derive_seed(config.seed, {static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(m)});
        c.partition = kmeans(f, k, seed, config.kmeans_restarts);
      }
      out.push_back(std::move(c));
    }
  }
  return out;
}

SearchResult select_optimal(std::vector<Candidate> cands, const CriterionEvaluator& evaluator) {
  if (cands.empty()) fail(ErrorKind::InvalidInput, "no candidates to select from");
  SearchResult result;
  result.all.reserve(cands.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    auto& c = cands[i];
    c.avg_criterion = evaluator.average(c.partition);
    result.all.push_back({c.k, c.m, c.avg_criterion});
    const auto& b = cands[best];
    if (i == 0) continue;
    if (std::tie(c.avg_criterion, c.k, c.m) < std::tie(b.avg_criterion, b.k, b.m)) best = i;
  }
  result.optimal = std::move(cands[best]);
  return result;
}

SearchResult select_optimal(std::vector<Candidate> cands, const PosteriorDraws& draws,
                            const OcBasis& oc, const FineSupport& fine, CriterionKind criterion) {
  const CriterionEvaluator evaluator(draws, oc, fine, criterion);
  return select_optimal(std::move(cands), evaluator);
}

SearchResult search(const PosteriorDraws& draws, const OcBasis& oc, const FineSupport& fine,
                    const SearchConfig& config) {
  return select_optimal(candidates(draws, fine, config), draws, oc, fine, config.criterion);
}

std::pair<int, int> simplified_prescan(const PosteriorDraws& draws, const OcBasis& oc,
                                       const FineSupport& fine, const SearchConfig& config_wide,
                                       int half_width) {
  if (draws.size() < 1) fail(ErrorKind::InsufficientDraws, "prescan needs at least one draw");
  if (half_width < 0) fail(ErrorKind::Configuration, "half_width must be >= 0");
  const PosteriorDraws first = draws.subset({0});
  const SearchResult r = search(first, oc, fine, config_wide);
  const int lo = std::max(2, r.optimal.k - half_width);
  const int hi = std::min(fine.size() - 1, r.optimal.k + half_width);
  return {lo, hi};
}

namespace {

struct SupportErrors {
  double mspe = 0.0;
  double cage = 0.0;
};

SupportErrors support_errors(const Eigen::VectorXd& truth, const Eigen::VectorXd& est,
                             const Eigen::VectorXd& areas, const Partition& p) {
  SupportErrors e;
  for (const auto& members : p.members()) {
    double area = 0.0;
    for (int h : members) area += areas(h);
    double y = 0.0;
    double y_hat = 0.0;
    for (int h : members) {
      y += areas(h) / area * truth(h);
      y_hat += areas(h) / area * est(h);
    }
    e.mspe += (y - y_hat) * (y - y_hat) / area;
    for (int h : members) e.cage += (truth(h) - y) * (truth(h) - y) / area;
  }
  return e;
}

}  // namespace

ComparisonRatios re_mspe_re_cage(const Eigen::VectorXd& truth, const Eigen::VectorXd& estimates,
                                 const Eigen::VectorXd& areas, const Partition& support_a,
                                 const Partition& support_b) {
  const auto n = static_cast<int>(truth.size());
  if (estimates.size() != n || areas.size() != n) {
    fail(ErrorKind::InvalidInput, "truth, estimates and areas must have equal length");
  }
  support_a.validate(n);
  support_b.validate(n);
  const SupportErrors a = support_errors(truth, estimates, areas, support_a);
  const SupportErrors b = support_errors(truth, estimates, areas, support_b);
  if (!(b.mspe > 0.0)) fail(ErrorKind::DegenerateComparison, "prediction error of support_b is zero");
  if (!(b.cage > 0.0)) fail(ErrorKind::DegenerateComparison, "aggregation error of support_b is zero");
  return {a.mspe / b.mspe, a.cage / b.cage};
}

}  // namespace cage
