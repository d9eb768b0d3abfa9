#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's numerical routines.

#include <cmath>
#include <functional>
#include <queue>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// Composite Simpson rule on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n % 2 != 0) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// Tensor composite Simpson rule over [ax, bx] x [ay, by].
inline double simpson2(const std::function<double(double, double)>& f, double ax, double bx,
                       double ay, double by, int n) {
  return simpson([&](double x) { return simpson([&](double y) { return f(x, y); }, ay, by, n); },
                 ax, bx, n);
}

/// Closed-form Gaussian posterior mean (Psi^T D^-1 Psi + Q^-1)^-1 Psi^T D^-1 z.
inline Eigen::VectorXd gls_posterior_mean(const Eigen::MatrixXd& psi, const Eigen::VectorXd& var_z,
                                          const Eigen::MatrixXd& q, const Eigen::VectorXd& z) {
  const Eigen::MatrixXd dinv = var_z.cwiseInverse().asDiagonal();
  const Eigen::MatrixXd prec = psi.transpose() * dinv * psi + q.inverse();
  return prec.ldlt().solve(psi.transpose() * dinv * z);
}

inline Eigen::MatrixXd gls_posterior_cov(const Eigen::MatrixXd& psi, const Eigen::VectorXd& var_z,
                                         const Eigen::MatrixXd& q) {
  const Eigen::MatrixXd dinv = var_z.cwiseInverse().asDiagonal();
  return (psi.transpose() * dinv * psi + q.inverse()).inverse();
}

/// True iff the listed vertices form one connected component of the graph.
inline bool connected(const std::vector<int>& members, const std::vector<std::vector<int>>& nbrs) {
  if (members.empty()) return false;
  std::vector<char> in(nbrs.size(), 0), seen(nbrs.size(), 0);
  for (int m : members) in[static_cast<std::size_t>(m)] = 1;
  std::queue<int> q;
  q.push(members.front());
  seen[static_cast<std::size_t>(members.front())] = 1;
  std::size_t reached = 1;
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    for (int u : nbrs[static_cast<std::size_t>(v)]) {
      const auto uu = static_cast<std::size_t>(u);
      if (in[uu] && !seen[uu]) {
        seen[uu] = 1;
        ++reached;
        q.push(u);
      }
    }
  }
  return reached == members.size();
}

/// Best contiguous 2-partition of a path (cut after position c) under the
/// within-cluster sum of squares, by exhaustive search. Returns the cut.
inline int best_path_cut(const std::vector<double>& values) {
  const int n = static_cast<int>(values.size());
  auto sse = [&](int a, int b) {
    double mean = 0.0;
    for (int i = a; i < b; ++i) mean += values[static_cast<std::size_t>(i)];
    mean /= (b - a);
    double s = 0.0;
    for (int i = a; i < b; ++i) s += std::pow(values[static_cast<std::size_t>(i)] - mean, 2);
    return s;
  };
  int best = 1;
  double best_cost = INFINITY;
  for (int c = 1; c < n; ++c) {
    const double cost = sse(0, c) + sse(c, n);
    if (cost < best_cost) {
      best_cost = cost;
      best = c;
    }
  }
  return best;
}

/// Column means and sample standard deviations by the two-pass algorithm.
inline void two_pass(const Eigen::MatrixXd& rows, Eigen::VectorXd& mean, Eigen::VectorXd& sd) {
  const auto m = rows.rows();
  mean = Eigen::VectorXd::Zero(rows.cols());
  for (Eigen::Index i = 0; i < m; ++i) mean += rows.row(i).transpose();
  mean /= static_cast<double>(m);
  sd = Eigen::VectorXd::Zero(rows.cols());
  for (Eigen::Index i = 0; i < m; ++i) sd += (rows.row(i).transpose() - mean).cwiseAbs2();
  sd = (sd / static_cast<double>(m - 1)).cwiseSqrt();
}

/// Random symmetric positive semidefinite matrix A A^T / r.
template <class Gen>
Eigen::MatrixXd random_psd(int r, Gen& gen) {
  std::normal_distribution<double> n01;
  Eigen::MatrixXd a(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) a(i, j) = n01(gen);
  return a * a.transpose() / r;
}

}  // namespace oracle
