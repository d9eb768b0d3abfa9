#include "cage/basis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cage/error.hpp"
#include "cage/random.hpp"

namespace cage {

const char* to_string(GbfKind kind) noexcept {
  return kind == GbfKind::Bisquare ? "bisquare" : "wendland";
}

GbfKind parse_gbf_kind(const std::string& name) {
  if (name == "bisquare") return GbfKind::Bisquare;
  if (name == "wendland") return GbfKind::Wendland;
  fail(ErrorKind::Configuration, "unknown basis kind '" + name + "'");
}

double bisquare(double distance, double bandwidth) {
  if (distance > bandwidth) return 0.0;
  const double u = distance / bandwidth;
  const double t = 1.0 - u * u;
  return t * t;
}

double wendland(double distance, double bandwidth) {
  const double d = distance / bandwidth;
  if (d > 1.0) return 0.0;
  const double a = 1.0 - d;
  const double a2 = a * a;
  const double a6 = a2 * a2 * a2;
  return a6 * (35.0 * d * d + 18.0 * d + 3.0) / 3.0;
}

GbfFamily::GbfFamily(GbfKind kind, KnotSet knots) : kind_(kind), knots_(std::move(knots)) {
  if (knots_.size() < 1) fail(ErrorKind::Configuration, "basis needs at least one knot");
  if (!(knots_.bandwidth > 0.0) || !std::isfinite(knots_.bandwidth)) {
    fail(ErrorKind::Configuration, "basis bandwidth must be positive");
  }
}

Eigen::VectorXd GbfFamily::evaluate(const Point& s) const {
  const int r = rank();
  Eigen::VectorXd out(r);
  const double w = knots_.bandwidth;
  for (int j = 0; j < r; ++j) {
    const double d = (s - knots_.knots.col(j)).norm();
    out(j) = kind_ == GbfKind::Bisquare ? bisquare(d, w) : wendland(d, w);
  }
  return out;
}

Eigen::MatrixXd GbfFamily::evaluate(const PointCloud& cloud) const {
  const int r = rank();
  const Eigen::Index n = cloud.cols();
  Eigen::MatrixXd out(n, r);
  const double w = knots_.bandwidth;
  const double w2 = w * w;
  for (int j = 0; j < r; ++j) {
    const double cx = knots_.knots(0, j);
    const double cy = knots_.knots(1, j);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double dx = cloud(0, k) - cx;
      const double dy = cloud(1, k) - cy;
      const double d2 = dx * dx + dy * dy;
      if (d2 > w2) {
        out(k, j) = 0.0;
      } else {
        const double d = std::sqrt(d2);
        out(k, j) = kind_ == GbfKind::Bisquare ? bisquare(d, w) : wendland(d, w);
      }
    }
  }
  return out;
}

Eigen::VectorXd GbfFamily::mean(const PointCloud& cloud) const {
  if (cloud.cols() == 0) fail(ErrorKind::InvalidGeometry, "empty sample cloud");
  return evaluate(cloud).colwise().mean().transpose();
}

Eigen::VectorXd eval_bisquare(const GbfFamily& family, const Point& s) {
  if (family.kind() != GbfKind::Bisquare) fail(ErrorKind::InvalidInput, "family is not bisquare");
  return family.evaluate(s);
}

Eigen::VectorXd eval_wendland(const GbfFamily& family, const Point& s) {
  if (family.kind() != GbfKind::Wendland) fail(ErrorKind::InvalidInput, "family is not wendland");
  return family.evaluate(s);
}

double bandwidth_from_knots(const PointCloud& knots) {
  const Eigen::Index r = knots.cols();
  if (r < 2) return 1.0;
  double min_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = i + 1; j < r; ++j) {
      min_d = std::min(min_d, (knots.col(i) - knots.col(j)).norm());
    }
  }
  if (!(min_d > 0.0)) fail(ErrorKind::Configuration, "knots must be pairwise distinct");
  return 1.5 * min_d;
}

KnotSet place_knots(const PointCloud& candidates, int r, std::uint64_t seed) {
  const int n = static_cast<int>(candidates.cols());
  if (r < 1) fail(ErrorKind::Configuration, "rank must be positive");
  if (r > n) {
    fail(ErrorKind::Configuration, "requested " + std::to_string(r) + " knots from only " +
                                       std::to_string(n) + " candidates");
  }
  KnotSet out;
  if (r == n) {
    out.knots = candidates;
  } else {
    Rng rng(seed);
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::vector<int> chosen{pick(rng)};
    Eigen::VectorXd nearest(n);
    for (int i = 0; i < n; ++i) {
      nearest(i) = (candidates.col(i) - candidates.col(chosen[0])).squaredNorm();
    }
    while (static_cast<int>(chosen.size()) < r) {
      Eigen::Index best = 0;
      nearest.maxCoeff(&best);
      chosen.push_back(static_cast<int>(best));
      for (int i = 0; i < n; ++i) {
        nearest(i) = std::min(nearest(i), (candidates.col(i) - candidates.col(best)).squaredNorm());
      }
    }
    out.knots.resize(2, r);
    for (int j = 0; j < r; ++j) out.knots.col(j) = candidates.col(chosen[static_cast<std::size_t>(j)]);
  }
  out.bandwidth = bandwidth_from_knots(out.knots);
  return out;
}

KnotSet grid_knots(const Rect& rect, int nx, int ny) {
  if (nx < 1 || ny < 1) fail(ErrorKind::Configuration, "knot grid dimensions must be positive");
  if (rect.degenerate()) fail(ErrorKind::InvalidGeometry, "degenerate knot rectangle");
  KnotSet out;
  out.knots.resize(2, nx * ny);
  const double dx = nx > 1 ? rect.width() / (nx - 1) : 0.0;
  const double dy = ny > 1 ? rect.height() / (ny - 1) : 0.0;
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      out.knots(0, iy * nx + ix) = nx > 1 ? rect.xmin + ix * dx : rect.center().x();
      out.knots(1, iy * nx + ix) = ny > 1 ? rect.ymin + iy * dy : rect.center().y();
    }
  }
  if (nx * ny == 1) {
    out.bandwidth = 1.5 * std::max(rect.width(), rect.height());
  } else {
    out.bandwidth = bandwidth_from_knots(out.knots);
  }
  return out;
}

namespace {

void check_positive_definite(const Eigen::MatrixXd& w) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    fail(ErrorKind::NumericalFailure, "eigen solver failed on Gram matrix");
  }
  const double max_ev = es.eigenvalues().maxCoeff();
  const double min_ev = es.eigenvalues().minCoeff();
  if (!(max_ev > 0.0) || !(min_ev > kPdRelativeFloor * max_ev)) {
    fail(ErrorKind::DegenerateBasis,
         "Gram matrix is not positive definite (min eigenvalue " + std::to_string(min_ev) +
             ", max " + std::to_string(max_ev) +
             "); reduce the rank or increase the number of integration points");
  }
}

}  // namespace

GramMatrix gram_matrix(const GbfFamily& family, const PointCloud& mc_points, double domain_area) {
  if (mc_points.cols() == 0) fail(ErrorKind::InvalidInput, "no Monte Carlo points for W");
  if (!(domain_area > 0.0)) fail(ErrorKind::InvalidGeometry, "domain area must be positive");
  const Eigen::MatrixXd psi = family.evaluate(mc_points);
  const int r = family.rank();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(r, r);
  w.selfadjointView<Eigen::Lower>().rankUpdate(psi.transpose());
  w = w.selfadjointView<Eigen::Lower>();
  w *= domain_area / static_cast<double>(mc_points.cols());
  check_positive_definite(w);
  return GramMatrix{std::move(w), static_cast<long>(mc_points.cols()), domain_area};
}

GramMatrix gram_matrix_quadrature(const GbfFamily& family, const Rect& domain, int panels,
                                  int order) {
  if (domain.degenerate()) fail(ErrorKind::InvalidGeometry, "degenerate quadrature domain");
  if (panels < 1) fail(ErrorKind::Configuration, "quadrature needs at least one panel");
  // Gauss-Legendre nodes/weights on [-1, 1].
  std::vector<double> nodes;
  std::vector<double> weights;
  switch (order) {
    case 2:
      nodes = {-0.5773502691896258, 0.5773502691896258};
      weights = {1.0, 1.0};
      break;
    case 4:
      nodes = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
      weights = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};
      break;
    default:
      fail(ErrorKind::Configuration, "quadrature order must be 2 or 4");
  }
  const int per_axis = panels * order;
  std::vector<double> xs(static_cast<std::size_t>(per_axis));
  std::vector<double> xw(static_cast<std::size_t>(per_axis));
  std::vector<double> ys(static_cast<std::size_t>(per_axis));
  std::vector<double> yw(static_cast<std::size_t>(per_axis));
  const double hx = domain.width() / panels;
  const double hy = domain.height() / panels;
  for (int p = 0; p < panels; ++p) {
    for (int q = 0; q < order; ++q) {
      const auto idx = static_cast<std::size_t>(p * order + q);
      const auto qi = static_cast<std::size_t>(q);
      xs[idx] = domain.xmin + hx * (p + 0.5 * (nodes[qi] + 1.0));
      xw[idx] = 0.5 * hx * weights[qi];
      ys[idx] = domain.ymin + hy * (p + 0.5 * (nodes[qi] + 1.0));
      yw[idx] = 0.5 * hy * weights[qi];
    }
  }
  const int r = family.rank();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(r, r);
  PointCloud row(2, per_axis);
  for (int iy = 0; iy < per_axis; ++iy) {
    for (int ix = 0; ix < per_axis; ++ix) {
      row(0, ix) = xs[static_cast<std::size_t>(ix)];
      row(1, ix) = ys[static_cast<std::size_t>(iy)];
    }
    Eigen::MatrixXd psi = family.evaluate(row);
    for (int ix = 0; ix < per_axis; ++ix) {
      psi.row(ix) *= std::sqrt(xw[static_cast<std::size_t>(ix)] * yw[static_cast<std::size_t>(iy)]);
    }
    w.selfadjointView<Eigen::Lower>().rankUpdate(psi.transpose());
  }
  w = w.selfadjointView<Eigen::Lower>();
  check_positive_definite(w);
  return GramMatrix{std::move(w), static_cast<long>(per_axis) * per_axis, domain.area()};
}

SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) fail(ErrorKind::NumericalFailure, "eigendecomposition failed");
  const Eigen::Index r = m.rows();
  SymmetricEigen out;
  out.values.resize(r);
  out.vectors.resize(r, r);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(r));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return es.eigenvalues()(a) > es.eigenvalues()(b);
  });
  for (Eigen::Index j = 0; j < r; ++j) {
    const Eigen::Index src = order[static_cast<std::size_t>(j)];
    out.values(j) = es.eigenvalues()(src);
    Eigen::VectorXd v = es.eigenvectors().col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    out.vectors.col(j) = v;
  }
  return out;
}

Eigen::MatrixXd oc_transform(const GramMatrix& gram) {
  const auto eig = symmetric_eigen(gram.w);
  const double max_ev = eig.values(0);
  const double min_ev = eig.values(eig.values.size() - 1);
  if (!(max_ev > 0.0) || !(min_ev > kPdRelativeFloor * max_ev)) {
    fail(ErrorKind::DegenerateBasis, "Gram matrix eigenvalue " + std::to_string(min_ev) +
                                         " below the positive-definiteness floor");
  }
  return eig.vectors * eig.values.cwiseSqrt().cwiseInverse().asDiagonal();
}

OcBasis::OcBasis(GbfFamily family, GramMatrix gram)
    : family_(std::move(family)), gram_(std::move(gram)) {
  if (gram_.w.rows() != family_.rank() || gram_.w.cols() != family_.rank()) {
    fail(ErrorKind::InvalidInput, "Gram matrix dimension does not match basis rank");
  }
  transform_ = oc_transform(gram_);
}

OcBasis::OcBasis(GbfFamily family, GramMatrix gram, Eigen::MatrixXd transform)
    : family_(std::move(family)), gram_(std::move(gram)), transform_(std::move(transform)) {
  if (transform_.rows() != family_.rank() || transform_.cols() != family_.rank()) {
    fail(ErrorKind::InvalidInput, "transform dimension does not match basis rank");
  }
}

double OcBasis::orthonormality_residual() const {
  const Eigen::MatrixXd m = transform_.transpose() * gram_.w * transform_;
  return (m - Eigen::MatrixXd::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff();
}

Eigen::VectorXd OcBasis::eval_point(const Point& s) const {
  return transform_.transpose() * family_.evaluate(s);
}

Eigen::MatrixXd OcBasis::eval_points(const PointCloud& cloud) const {
  return family_.evaluate(cloud) * transform_;
}

Eigen::VectorXd OcBasis::eval_cloud_mean(const PointCloud& cloud) const {
  if (cloud.cols() == 0) fail(ErrorKind::InvalidGeometry, "empty sample cloud");
  return transform_.transpose() * family_.mean(cloud);
}

Eigen::VectorXd OcBasis::eval_region(const Region& region) const {
  return eval_cloud_mean(region.samples);
}

Eigen::MatrixXd OcBasis::eval_units(const FineSupport& support) const {
  Eigen::MatrixXd out(support.size(), rank());
  for (int j = 0; j < support.size(); ++j) {
    out.row(j) = eval_cloud_mean(support.unit(j).samples).transpose();
  }
  return out;
}

Eigen::VectorXd eval_oc_point(const OcBasis& oc, const Point& s) { return oc.eval_point(s); }

Eigen::VectorXd eval_oc_region(const OcBasis& oc, const Region& region) {
  return oc.eval_region(region);
}

EigenReplicate eigen_replicate(const Eigen::MatrixXd& q) {
  if (q.rows() != q.cols()) fail(ErrorKind::InvalidInput, "Q must be square");
  const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
  if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    fail(ErrorKind::InvalidInput, "Q is not symmetric");
  }
  const Eigen::MatrixXd sym = 0.5 * (q + q.transpose());
  auto eig = symmetric_eigen(sym);
  const double max_ev = std::max(0.0, eig.values(0));
  for (Eigen::Index j = 0; j < eig.values.size(); ++j) {
    if (eig.values(j) < 0.0) {
      if (eig.values(j) < -1e-10 * std::max(max_ev, 1e-300)) {
        fail(ErrorKind::InvalidInput, "Q is not positive semidefinite");
      }
      eig.values(j) = 0.0;
    }
  }
  return EigenReplicate{std::move(eig.vectors), std::move(eig.values)};
}

Eigen::VectorXd replicate_eigenfunctions(const EigenReplicate& rep, const OcBasis& oc,
                                         const Point& s) {
  return rep.g.transpose() * oc.eval_point(s);
}

}  // namespace cage
