#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cage/basis.hpp"
#include "cage/geometry.hpp"
#include "cage/inference.hpp"

namespace cage {

/// Comma-separated table with a header row. Blank lines are skipped.
struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;  ///< 1-based source line per row

  /// Column index by name; InvalidInput when missing.
  int column(const std::string& name) const;
  /// Parses cell (row, col) as a finite double / integer with a row-level error.
  double number(std::size_t row, int col) const;
  long integer(std::size_t row, int col) const;
  std::string where(std::size_t row) const;
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text, const std::string& source);

/// Exact decimal form that round-trips doubles.
std::string format_double(double v);

/// Polygon support CSV `unit_id,vertex,x,y` (vertices in order per unit). When
/// no adjacency is supplied, units sharing an edge are neighbours. Units that
/// are all axis-aligned rectangles also record their cell geometry.
FineSupport read_polygon_support(const std::string& path, int samples_per_cell, std::uint64_t seed,
                                 const std::string& adjacency_path = "");

/// Areal-support CSV `id,centroid_x,centroid_y,area` with sample clouds from a
/// point CSV `id,x,y` (rows keyed by unit id) and adjacency from an edge CSV.
FineSupport read_areal_support(const std::string& units_path, const std::string& samples_path,
                               const std::string& adjacency_path);

/// Edge list CSV `id_a,id_b`.
std::vector<std::pair<int, int>> read_adjacency(const std::string& path);

/// Knot CSV `id,x,y`; bandwidth from the shared rule.
KnotSet read_knots(const std::string& path);
void write_knots(const std::string& path, const KnotSet& knots);

/// Dense headerless numeric matrix.
Eigen::MatrixXd read_matrix(const std::string& path);
std::string matrix_to_csv(const Eigen::MatrixXd& m);

/// Point CSV `id,x,y`.
std::map<long, Point> read_points(const std::string& path);

/// Observation CSV `support_type,support_ref,z,var_z`. support_type is `point`
/// (ref is an id in `points`, or inline "x;y") or `areal` (ref "id" or
/// "id;id;..."). With logit_delta the z column holds proportions and var_z
/// their variances.
std::vector<Observation> read_observations(const std::string& path, bool logit_delta = false,
                                           const std::map<long, Point>& points = {});
std::string observations_to_csv(const std::vector<Observation>& obs);

/// Membership CSV `unit_id,region_id`.
Partition read_partition(const std::string& path, int n_units);
std::string partition_to_csv(const Partition& p);

/// Writes via a temporary file and rename.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace cage
