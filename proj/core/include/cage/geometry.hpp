#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace cage {

/// A location in the planar domain.
using Point = Eigen::Vector2d;

/// Points stored column-wise (2 x n).
using PointCloud = Eigen::Matrix2Xd;

struct Rect {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 1.0;
  double ymax = 1.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
  Point center() const { return {0.5 * (xmin + xmax), 0.5 * (ymin + ymax)}; }
  bool contains(const Point& p) const {
    return p.x() >= xmin && p.x() <= xmax && p.y() >= ymin && p.y() <= ymax;
  }
  bool degenerate() const;
};

/// Simple (non self-intersecting) polygon, vertices in order, implicitly closed.
struct Polygon {
  std::vector<Point> vertices;

  double area() const;
  Rect bounds() const;
  bool contains(const Point& p) const;
};

/// One fine-resolution areal unit B_j.
struct ArealUnit {
  int id = 0;
  Point centroid = Point::Zero();
  double area = 0.0;
  PointCloud samples;
};

/// The fine support D_B: disjoint units plus a symmetric neighbour structure.
class FineSupport {
 public:
  FineSupport(std::vector<ArealUnit> units, std::vector<std::vector<int>> neighbours, Rect bbox,
              std::optional<std::vector<Rect>> cells = std::nullopt);

  int size() const { return static_cast<int>(units_.size()); }
  const std::vector<ArealUnit>& units() const { return units_; }
  const ArealUnit& unit(int i) const { return units_[static_cast<std::size_t>(i)]; }
  const std::vector<std::vector<int>>& neighbours() const { return neighbours_; }
  const Rect& bbox() const { return bbox_; }
  /// Rectangular cell geometry when the support was built from a grid.
  const std::optional<std::vector<Rect>>& cells() const { return cells_; }

  Eigen::MatrixXd adjacency_matrix() const;
  Eigen::VectorXd areas() const;
  double total_area() const;

  /// Index of the unit containing p. Uses cell rectangles when known and the
  /// nearest centroid otherwise; throws SupportMismatch outside the bounding box.
  int locate(const Point& p) const;

 private:
  std::vector<ArealUnit> units_;
  std::vector<std::vector<int>> neighbours_;
  Rect bbox_;
  std::optional<std::vector<Rect>> cells_;
};

/// Assignment of every fine unit to one of k region labels.
struct Partition {
  std::vector<int> assignment;
  int k = 0;

  /// Validates labels (all of 0..k-1 used) and returns the partition.
  static Partition from_labels(std::vector<int> labels);
  static Partition identity(int n);
  static Partition single(int n);

  int size() const { return static_cast<int>(assignment.size()); }
  std::vector<std::vector<int>> members() const;
  void validate(int n_units) const;
};

/// An aggregated region C = union of member units.
struct Region {
  std::vector<int> members;
  double area = 0.0;
  Point centroid = Point::Zero();
  PointCloud samples;
};

Rect unit_square();

/// nx x ny rook-adjacent grid over bbox with samples_per_cell uniform interior
/// points per cell (stratified when samples_per_cell is a perfect square).
FineSupport build_grid(int nx, int ny, const Rect& bbox, int samples_per_cell,
                       std::uint64_t seed);

/// n i.i.d. uniform points in a rectangle.
PointCloud sample_rect(const Rect& rect, int n, std::uint64_t seed);

/// n i.i.d. uniform points in a polygon (rejection from its bounding box).
PointCloud sample_polygon(const Polygon& polygon, int n, std::uint64_t seed);

/// n i.i.d. uniform points in the union of fine units, drawn area-proportionally
/// from each member's existing sample cloud (resampled with replacement) or, when
/// cell rectangles are known, uniformly inside the chosen cell.
PointCloud sample_cells(const FineSupport& support, std::span<const int> members, int n,
                        std::uint64_t seed);

std::vector<Region> merge_regions(const FineSupport& support, const Partition& partition);

/// Labels of a region list, i.e. the inverse of merge_regions.
Partition split_by_labels(const std::vector<Region>& regions, int n_units);

/// Per region: true iff its members form one connected component.
std::vector<bool> contiguity_check(const FineSupport& support, const Partition& partition);

/// Neighbour lists from an undirected edge list; validates ids and drops self loops.
std::vector<std::vector<int>> neighbours_from_edges(int n,
                                                    const std::vector<std::pair<int, int>>& edges);

}  // namespace cage
