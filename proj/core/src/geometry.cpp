#include "cage/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include "cage/error.hpp"
#include "cage/random.hpp"

namespace cage {

bool Rect::degenerate() const {
  return !(std::isfinite(xmin) && std::isfinite(xmax) && std::isfinite(ymin) &&
           std::isfinite(ymax)) ||
         !(xmax > xmin) || !(ymax > ymin);
}

double Polygon::area() const {
  const std::size_t n = vertices.size();
  if (n < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = vertices[i];
    const Point& b = vertices[(i + 1) % n];
    twice += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * std::abs(twice);
}

Rect Polygon::bounds() const {
  Rect r{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
         -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& v : vertices) {
    r.xmin = std::min(r.xmin, v.x());
    r.ymin = std::min(r.ymin, v.y());
    r.xmax = std::max(r.xmax, v.x());
    r.ymax = std::max(r.ymax, v.y());
  }
  return r;
}

bool Polygon::contains(const Point& p) const {
  bool inside = false;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& a = vertices[i];
    const Point& b = vertices[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

FineSupport::FineSupport(std::vector<ArealUnit> units, std::vector<std::vector<int>> neighbours,
                         Rect bbox, std::optional<std::vector<Rect>> cells)
    : units_(std::move(units)),
      neighbours_(std::move(neighbours)),
      bbox_(bbox),
      cells_(std::move(cells)) {
  const int n = size();
  if (n == 0) fail(ErrorKind::InvalidGeometry, "fine support has no units");
  if (static_cast<int>(neighbours_.size()) != n) {
    fail(ErrorKind::InvalidGeometry, "neighbour list size does not match unit count");
  }
  for (int i = 0; i < n; ++i) {
    const auto& u = units_[static_cast<std::size_t>(i)];
    if (u.id != i) fail(ErrorKind::InvalidGeometry, "unit ids must be 0..n-1 in order");
    if (!(u.area > 0.0) || !std::isfinite(u.area)) {
      fail(ErrorKind::InvalidGeometry, "unit " + std::to_string(i) + " has non-positive area");
    }
    if (u.samples.cols() == 0) {
      fail(ErrorKind::InvalidGeometry, "unit " + std::to_string(i) + " has no sample points");
    }
    for (int j : neighbours_[static_cast<std::size_t>(i)]) {
      if (j < 0 || j >= n || j == i) {
        fail(ErrorKind::InvalidGeometry, "bad neighbour index for unit " + std::to_string(i));
      }
      const auto& back = neighbours_[static_cast<std::size_t>(j)];
      if (std::find(back.begin(), back.end(), i) == back.end()) {
        fail(ErrorKind::InvalidGeometry, "adjacency is not symmetric");
      }
    }
  }
  if (cells_ && static_cast<int>(cells_->size()) != n) {
    fail(ErrorKind::InvalidGeometry, "cell geometry size does not match unit count");
  }
}

Eigen::MatrixXd FineSupport::adjacency_matrix() const {
  const int n = size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j : neighbours_[static_cast<std::size_t>(i)]) a(i, j) = 1.0;
  }
  return a;
}

Eigen::VectorXd FineSupport::areas() const {
  Eigen::VectorXd a(size());
  for (int i = 0; i < size(); ++i) a(i) = units_[static_cast<std::size_t>(i)].area;
  return a;
}

double FineSupport::total_area() const {
  double total = 0.0;
  for (const auto& u : units_) total += u.area;
  return total;
}

int FineSupport::locate(const Point& p) const {
  constexpr double kTol = 1e-12;
  if (p.x() < bbox_.xmin - kTol || p.x() > bbox_.xmax + kTol || p.y() < bbox_.ymin - kTol ||
      p.y() > bbox_.ymax + kTol) {
    fail(ErrorKind::SupportMismatch, "point (" + std::to_string(p.x()) + ", " +
                                         std::to_string(p.y()) + ") lies outside the support");
  }
  if (cells_) {
    // Half-open cells so that shared edges resolve to exactly one unit; the
    // closing edge of the bounding box belongs to the last cell touching it.
    for (int i = 0; i < size(); ++i) {
      const Rect& c = (*cells_)[static_cast<std::size_t>(i)];
      const bool in_x = p.x() >= c.xmin && (p.x() < c.xmax || (c.xmax >= bbox_.xmax && p.x() <= c.xmax + kTol));
      const bool in_y = p.y() >= c.ymin && (p.y() < c.ymax || (c.ymax >= bbox_.ymax && p.y() <= c.ymax + kTol));
      if (in_x && in_y) return i;
    }
    fail(ErrorKind::SupportMismatch, "point (" + std::to_string(p.x()) + ", " +
                                         std::to_string(p.y()) + ") is not inside any unit");
  }
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < size(); ++i) {
    const double d = (units_[static_cast<std::size_t>(i)].centroid - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

Partition Partition::from_labels(std::vector<int> labels) {
  Partition p;
  int max_label = -1;
  for (int l : labels) {
    if (l < 0) fail(ErrorKind::InvalidInput, "negative region label");
    max_label = std::max(max_label, l);
  }
  p.assignment = std::move(labels);
  p.k = max_label + 1;
  p.validate(p.size());
  return p;
}

Partition Partition::identity(int n) {
  Partition p;
  p.assignment.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) p.assignment[static_cast<std::size_t>(i)] = i;
  p.k = n;
  return p;
}

Partition Partition::single(int n) {
  Partition p;
  p.assignment.assign(static_cast<std::size_t>(n), 0);
  p.k = 1;
  return p;
}

std::vector<std::vector<int>> Partition::members() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(k));
  for (int i = 0; i < size(); ++i) {
    out[static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)])].push_back(i);
  }
  return out;
}

void Partition::validate(int n_units) const {
  if (size() != n_units) {
    fail(ErrorKind::InvalidInput, "partition covers " + std::to_string(size()) +
                                      " units, support has " + std::to_string(n_units));
  }
  if (k < 1 || k > n_units) fail(ErrorKind::InvalidInput, "partition k out of range");
  std::vector<char> seen(static_cast<std::size_t>(k), 0);
  for (int l : assignment) {
    if (l < 0 || l >= k) fail(ErrorKind::InvalidInput, "region label out of range");
    seen[static_cast<std::size_t>(l)] = 1;
  }
  for (int l = 0; l < k; ++l) {
    if (!seen[static_cast<std::size_t>(l)]) {
      fail(ErrorKind::InvalidInput, "region label " + std::to_string(l) + " is unused");
    }
  }
}

Rect unit_square() { return Rect{0.0, 0.0, 1.0, 1.0}; }

PointCloud sample_rect(const Rect& rect, int n, std::uint64_t seed) {
  if (rect.degenerate()) fail(ErrorKind::InvalidGeometry, "degenerate rectangle");
  if (n < 1) fail(ErrorKind::Configuration, "sample count must be positive");
  Rng rng(seed);
  std::uniform_real_distribution<double> ux(rect.xmin, rect.xmax);
  std::uniform_real_distribution<double> uy(rect.ymin, rect.ymax);
  PointCloud pts(2, n);
  for (int i = 0; i < n; ++i) {
    pts(0, i) = ux(rng);
    pts(1, i) = uy(rng);
  }
  return pts;
}

namespace {

PointCloud stratified_or_uniform(const Rect& rect, int n, Rng& rng) {
  PointCloud pts(2, n);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  if (side * side == n) {
    const double dx = rect.width() / side;
    const double dy = rect.height() / side;
    int c = 0;
    for (int iy = 0; iy < side; ++iy) {
      for (int ix = 0; ix < side; ++ix, ++c) {
        pts(0, c) = rect.xmin + (ix + u01(rng)) * dx;
        pts(1, c) = rect.ymin + (iy + u01(rng)) * dy;
      }
    }
  } else {
    for (int i = 0; i < n; ++i) {
      pts(0, i) = rect.xmin + u01(rng) * rect.width();
      pts(1, i) = rect.ymin + u01(rng) * rect.height();
    }
  }
  return pts;
}

}  // namespace

FineSupport build_grid(int nx, int ny, const Rect& bbox, int samples_per_cell,
                       std::uint64_t seed) {
  if (nx < 1 || ny < 1) fail(ErrorKind::Configuration, "grid dimensions must be positive");
  if (samples_per_cell < 1) fail(ErrorKind::Configuration, "samples_per_cell must be positive");
  if (bbox.degenerate()) fail(ErrorKind::InvalidGeometry, "degenerate bounding box");

  const int n = nx * ny;
  const double dx = bbox.width() / nx;
  const double dy = bbox.height() / ny;
  std::vector<ArealUnit> units;
  std::vector<Rect> cells;
  std::vector<std::vector<int>> neighbours(static_cast<std::size_t>(n));
  units.reserve(static_cast<std::size_t>(n));
  cells.reserve(static_cast<std::size_t>(n));
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const int id = iy * nx + ix;
      Rect cell{bbox.xmin + ix * dx, bbox.ymin + iy * dy,
                ix == nx - 1 ? bbox.xmax : bbox.xmin + (ix + 1) * dx,
                iy == ny - 1 ? bbox.ymax : bbox.ymin + (iy + 1) * dy};
      Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(id)}));
      ArealUnit u;
      u.id = id;
      u.centroid = cell.center();
      u.area = cell.area();
      u.samples = stratified_or_uniform(cell, samples_per_cell, rng);
      units.push_back(std::move(u));
      cells.push_back(cell);
      auto& nb = neighbours[static_cast<std::size_t>(id)];
      if (iy > 0) nb.push_back(id - nx);
      if (ix > 0) nb.push_back(id - 1);
      if (ix < nx - 1) nb.push_back(id + 1);
      if (iy < ny - 1) nb.push_back(id + nx);
    }
  }
  return FineSupport(std::move(units), std::move(neighbours), bbox, std::move(cells));
}

PointCloud sample_polygon(const Polygon& polygon, int n, std::uint64_t seed) {
  if (n < 1) fail(ErrorKind::Configuration, "sample count must be positive");
  const double area = polygon.area();
  if (!(area > 0.0)) fail(ErrorKind::InvalidGeometry, "polygon has zero area");
  const Rect box = polygon.bounds();
  Rng rng(seed);
  std::uniform_real_distribution<double> ux(box.xmin, box.xmax);
  std::uniform_real_distribution<double> uy(box.ymin, box.ymax);
  PointCloud pts(2, n);
  int filled = 0;
  while (filled < n) {
    Point p(ux(rng), uy(rng));
    if (polygon.contains(p)) pts.col(filled++) = p;
  }
  return pts;
}

PointCloud sample_cells(const FineSupport& support, std::span<const int> members, int n,
                        std::uint64_t seed) {
  if (n < 1) fail(ErrorKind::Configuration, "sample count must be positive");
  if (members.empty()) fail(ErrorKind::InvalidGeometry, "empty cell set");
  std::vector<double> weights;
  weights.reserve(members.size());
  double total = 0.0;
  for (int m : members) {
    if (m < 0 || m >= support.size()) fail(ErrorKind::InvalidInput, "cell id out of range");
    weights.push_back(support.unit(m).area);
    total += support.unit(m).area;
  }
  if (!(total > 0.0)) fail(ErrorKind::InvalidGeometry, "cell set has zero area");
  Rng rng(seed);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  PointCloud pts(2, n);
  for (int i = 0; i < n; ++i) {
    const int cell = members[pick(rng)];
    if (support.cells()) {
      const Rect& r = (*support.cells())[static_cast<std::size_t>(cell)];
      pts(0, i) = r.xmin + u01(rng) * r.width();
      pts(1, i) = r.ymin + u01(rng) * r.height();
    } else {
      const auto& cloud = support.unit(cell).samples;
      std::uniform_int_distribution<Eigen::Index> idx(0, cloud.cols() - 1);
      pts.col(i) = cloud.col(idx(rng));
    }
  }
  return pts;
}

std::vector<Region> merge_regions(const FineSupport& support, const Partition& partition) {
  partition.validate(support.size());
  auto groups = partition.members();
  std::vector<Region> regions;
  regions.reserve(groups.size());
  for (auto& members : groups) {
    Region r;
    Eigen::Index total_samples = 0;
    for (int h : members) {
      r.area += support.unit(h).area;
      total_samples += support.unit(h).samples.cols();
    }
    r.samples.resize(2, total_samples);
    Eigen::Index offset = 0;
    for (int h : members) {
      const auto& u = support.unit(h);
      r.centroid += (u.area / r.area) * u.centroid;
      r.samples.middleCols(offset, u.samples.cols()) = u.samples;
      offset += u.samples.cols();
    }
    r.members = std::move(members);
    regions.push_back(std::move(r));
  }
  return regions;
}

Partition split_by_labels(const std::vector<Region>& regions, int n_units) {
  std::vector<int> labels(static_cast<std::size_t>(n_units), -1);
  for (std::size_t l = 0; l < regions.size(); ++l) {
    for (int h : regions[l].members) {
      if (h < 0 || h >= n_units) fail(ErrorKind::InvalidInput, "member id out of range");
      if (labels[static_cast<std::size_t>(h)] != -1) {
        fail(ErrorKind::InvalidInput, "unit assigned to two regions");
      }
      labels[static_cast<std::size_t>(h)] = static_cast<int>(l);
    }
  }
  for (int l : labels) {
    if (l < 0) fail(ErrorKind::InvalidInput, "unit not covered by any region");
  }
  return Partition::from_labels(std::move(labels));
}

std::vector<bool> contiguity_check(const FineSupport& support, const Partition& partition) {
  partition.validate(support.size());
  const auto groups = partition.members();
  std::vector<bool> out(groups.size(), true);
  std::vector<char> visited(static_cast<std::size_t>(support.size()), 0);
  for (std::size_t l = 0; l < groups.size(); ++l) {
    const auto& members = groups[l];
    std::deque<int> queue{members.front()};
    visited[static_cast<std::size_t>(members.front())] = 1;
    std::size_t reached = 1;
    while (!queue.empty()) {
      const int cur = queue.front();
      queue.pop_front();
      for (int nb : support.neighbours()[static_cast<std::size_t>(cur)]) {
        if (!visited[static_cast<std::size_t>(nb)] &&
            partition.assignment[static_cast<std::size_t>(nb)] == static_cast<int>(l)) {
          visited[static_cast<std::size_t>(nb)] = 1;
          ++reached;
          queue.push_back(nb);
        }
      }
    }
    out[l] = reached == members.size();
  }
  return out;
}

std::vector<std::vector<int>> neighbours_from_edges(
    int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::vector<int>> nb(static_cast<std::size_t>(n));
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) {
      fail(ErrorKind::InvalidInput, "adjacency edge references unknown unit");
    }
    if (a == b) continue;
    auto& na = nb[static_cast<std::size_t>(a)];
    auto& nbb = nb[static_cast<std::size_t>(b)];
    if (std::find(na.begin(), na.end(), b) == na.end()) na.push_back(b);
    if (std::find(nbb.begin(), nbb.end(), a) == nbb.end()) nbb.push_back(a);
  }
  for (auto& v : nb) std::sort(v.begin(), v.end());
  return nb;
}

}  // namespace cage
