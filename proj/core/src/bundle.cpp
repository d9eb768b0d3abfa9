#include "cage/bundle.hpp"

#include <filesystem>

#include "cage/csv.hpp"
#include "cage/error.hpp"

namespace cage {

namespace {

std::string join(const std::string& dir, const std::string& rel) {
  return (std::filesystem::path(dir) / rel).string();
}

std::string trim_newline(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) s.pop_back();
  return s;
}

}  // namespace

void write_bundle(const std::string& dir, const PosteriorDraws& draws, const OcBasis& basis) {
  const int m = draws.size();
  const int r = draws.rank();
  Eigen::MatrixXd q(m, static_cast<Eigen::Index>(r) * r);
  for (int i = 0; i < m; ++i) {
    const Eigen::MatrixXd& qi = draws.q[static_cast<std::size_t>(i)];
    for (int a = 0; a < r; ++a) {
      for (int b = 0; b < r; ++b) q(i, static_cast<Eigen::Index>(a) * r + b) = qi(a, b);
    }
  }
  write_file_atomic(join(dir, "draws/mu.csv"), matrix_to_csv(draws.mu));
  write_file_atomic(join(dir, "draws/eta.csv"), matrix_to_csv(draws.eta));
  write_file_atomic(join(dir, "draws/xi.csv"), matrix_to_csv(draws.xi));
  write_file_atomic(join(dir, "draws/sigma_xi2.csv"), matrix_to_csv(draws.sigma_xi2));
  write_file_atomic(join(dir, "draws/q.csv"), matrix_to_csv(q));
  write_file_atomic(join(dir, "draws/y_b.csv"), matrix_to_csv(draws.y_b));
  write_knots(join(dir, "basis/knots.csv"), basis.family().knots());
  write_file_atomic(join(dir, "basis/bandwidth.txt"),
                    format_double(basis.family().knots().bandwidth) + "\n");
  write_file_atomic(join(dir, "basis/kind.txt"), std::string(to_string(basis.family().kind())) + "\n");
  write_file_atomic(join(dir, "basis/domain_area.txt"), format_double(basis.gram().domain_area) + "\n");
  write_file_atomic(join(dir, "basis/w.csv"), matrix_to_csv(basis.gram().w));
  write_file_atomic(join(dir, "basis/transform.csv"), matrix_to_csv(basis.transform()));
}

Bundle read_bundle(const std::string& dir) {
  if (!std::filesystem::exists(join(dir, "draws/mu.csv"))) {
    fail(ErrorKind::InvalidInput, "no draws bundle under '" + dir + "'");
  }
  KnotSet knots = read_knots(join(dir, "basis/knots.csv"));
  knots.bandwidth = std::stod(read_file(join(dir, "basis/bandwidth.txt")));
  const GbfKind kind = parse_gbf_kind(trim_newline(read_file(join(dir, "basis/kind.txt"))));
  GramMatrix gram{read_matrix(join(dir, "basis/w.csv")), 0,
                  std::stod(read_file(join(dir, "basis/domain_area.txt")))};
  Eigen::MatrixXd transform = read_matrix(join(dir, "basis/transform.csv"));
  OcBasis basis(GbfFamily(kind, std::move(knots)), std::move(gram), std::move(transform));

  PosteriorDraws d;
  d.mu = read_matrix(join(dir, "draws/mu.csv")).col(0);
  d.eta = read_matrix(join(dir, "draws/eta.csv"));
  d.xi = read_matrix(join(dir, "draws/xi.csv"));
  d.sigma_xi2 = read_matrix(join(dir, "draws/sigma_xi2.csv")).col(0);
  d.y_b = read_matrix(join(dir, "draws/y_b.csv"));
  const Eigen::MatrixXd q = read_matrix(join(dir, "draws/q.csv"));
  const int m = d.size();
  const int r = basis.rank();
  if (d.eta.rows() != m || d.xi.rows() != m || d.sigma_xi2.size() != m || d.y_b.rows() != m ||
      q.rows() != m) {
    fail(ErrorKind::InvalidInput, "draw files in '" + dir + "' disagree on the draw count");
  }
  if (d.eta.cols() != r || q.cols() != static_cast<Eigen::Index>(r) * r) {
    fail(ErrorKind::InvalidInput, "draw files in '" + dir + "' disagree with the basis rank");
  }
  for (int i = 0; i < m; ++i) {
    Eigen::MatrixXd qi(r, r);
    for (int a = 0; a < r; ++a) {
      for (int b = 0; b < r; ++b) qi(a, b) = q(i, static_cast<Eigen::Index>(a) * r + b);
    }
    d.q.push_back(std::move(qi));
  }
  return Bundle{std::move(basis), std::move(d)};
}

}  // namespace cage
