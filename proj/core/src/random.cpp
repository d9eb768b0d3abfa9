#include "cage/random.hpp"

#include <cmath>

#include "cage/error.hpp"

namespace cage {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> stream) {
  std::uint64_t h = splitmix64(base);
  for (auto s : stream) h = splitmix64(h ^ splitmix64(s + 0x632be59bd9b4e019ULL));
  return h;
}

double standard_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

Eigen::VectorXd standard_normal_vector(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = dist(rng);
  return out;
}

double gamma_variate(double shape, double rate, Rng& rng) {
  if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate)) {
    fail(ErrorKind::NumericalFailure, "gamma variate with shape " + std::to_string(shape) +
                                          ", rate " + std::to_string(rate));
  }
  std::gamma_distribution<double> dist(shape, 1.0 / rate);
  return dist(rng);
}

double inverse_gamma_variate(double shape, double scale, Rng& rng) {
  return 1.0 / gamma_variate(shape, scale, rng);
}

Eigen::MatrixXd sample_wishart_precision(double df, const Eigen::MatrixXd& iw_scale, Rng& rng) {
  const Eigen::Index r = iw_scale.rows();
  if (iw_scale.cols() != r) fail(ErrorKind::InvalidInput, "wishart scale must be square");
  if (!(df > static_cast<double>(r) - 1.0)) {
    fail(ErrorKind::Configuration, "wishart degrees of freedom must exceed r - 1");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(iw_scale);
  if (llt.info() != Eigen::Success) {
    fail(ErrorKind::NumericalFailure, "inverse-wishart scale is not positive definite");
  }
  // Bartlett factor A: A_ii^2 ~ chi^2(df - i), A_ij ~ N(0,1) below the diagonal.
  Eigen::MatrixXd bartlett = Eigen::MatrixXd::Zero(r, r);
  for (Eigen::Index i = 0; i < r; ++i) {
    bartlett(i, i) = std::sqrt(2.0 * gamma_variate(0.5 * (df - static_cast<double>(i)), 1.0, rng));
    for (Eigen::Index j = 0; j < i; ++j) bartlett(i, j) = standard_normal(rng);
  }
  // With S = L L^T, the factor L^{-T} squares to S^{-1}; X = L^{-T} A gives K = X X^T.
  Eigen::MatrixXd x = llt.matrixU().solve(bartlett);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(r, r);
  k.selfadjointView<Eigen::Lower>().rankUpdate(x);
  return k.selfadjointView<Eigen::Lower>();
}

Eigen::MatrixXd sample_inverse_wishart(double df, const Eigen::MatrixXd& iw_scale, Rng& rng) {
  Eigen::MatrixXd k = sample_wishart_precision(df, iw_scale, rng);
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) {
    fail(ErrorKind::NumericalFailure, "wishart draw is not positive definite");
  }
  Eigen::MatrixXd q = llt.solve(Eigen::MatrixXd::Identity(k.rows(), k.cols()));
  return 0.5 * (q + q.transpose());
}

}  // namespace cage
