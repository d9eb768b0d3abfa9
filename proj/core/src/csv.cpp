#include "cage/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cage/error.hpp"
#include "cage/random.hpp"

namespace cage {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (s.empty() || res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
    fail(ErrorKind::InvalidInput, where + ": '" + s + "' is not a finite number");
  }
  return v;
}

long parse_long(const std::string& s, const std::string& where) {
  long v = 0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (s.empty() || res.ec != std::errc() || res.ptr != end) {
    fail(ErrorKind::InvalidInput, where + ": '" + s + "' is not an integer");
  }
  return v;
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) fail(ErrorKind::InvalidInput, source + ": missing column '" + name + "'");
  return static_cast<int>(it - header.begin());
}

std::string CsvTable::where(std::size_t row) const {
  return source + ":" + std::to_string(line_numbers[row]);
}

double CsvTable::number(std::size_t row, int col) const {
  return parse_double(rows[row][static_cast<std::size_t>(col)], where(row));
}

long CsvTable::integer(std::size_t row, int col) const {
  return parse_long(rows[row][static_cast<std::size_t>(col)], where(row));
}

CsvTable parse_csv(const std::string& text, const std::string& source) {
  CsvTable t;
  t.source = source;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split(line, ',');
    if (!have_header) {
      t.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != t.header.size()) {
      fail(ErrorKind::InvalidInput, source + ":" + std::to_string(line_no) + ": expected " +
                                        std::to_string(t.header.size()) + " fields, found " +
                                        std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(line_no);
  }
  if (!have_header) fail(ErrorKind::InvalidInput, source + ": empty file");
  return t;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::InvalidInput, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_file(path), path); }

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::InvalidInput, "cannot write '" + tmp.string() + "'");
    out << contents;
    out.flush();
    if (!out) fail(ErrorKind::InvalidInput, "write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

std::vector<std::pair<int, int>> read_adjacency(const std::string& path) {
  const CsvTable t = read_csv(path);
  const int a = t.column("id_a");
  const int b = t.column("id_b");
  std::vector<std::pair<int, int>> edges;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    edges.emplace_back(static_cast<int>(t.integer(i, a)), static_cast<int>(t.integer(i, b)));
  }
  return edges;
}

FineSupport read_polygon_support(const std::string& path, int samples_per_cell, std::uint64_t seed,
                                 const std::string& adjacency_path) {
  if (samples_per_cell < 1) fail(ErrorKind::Configuration, "samples_per_cell must be positive");
  const CsvTable t = read_csv(path);
  const int c_id = t.column("unit_id");
  const int c_vertex = t.column("vertex");
  const int c_x = t.column("x");
  const int c_y = t.column("y");
  std::map<long, std::map<long, Point>> raw;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const long id = t.integer(i, c_id);
    const long v = t.integer(i, c_vertex);
    auto& poly = raw[id];
    if (poly.count(v) != 0) fail(ErrorKind::InvalidInput, t.where(i) + ": duplicate vertex index");
    poly[v] = Point(t.number(i, c_x), t.number(i, c_y));
  }
  const int n = static_cast<int>(raw.size());
  if (n == 0) fail(ErrorKind::InvalidInput, path + ": no units");
  std::vector<Polygon> polys;
  int expected = 0;
  for (const auto& [id, verts] : raw) {
    if (id != expected) {
      fail(ErrorKind::InvalidInput, path + ": unit ids must be 0.." + std::to_string(n - 1));
    }
    ++expected;
    Polygon p;
    for (const auto& [v, pt] : verts) p.vertices.push_back(pt);
    if (p.vertices.size() < 3) {
      fail(ErrorKind::InvalidGeometry, path + ": unit " + std::to_string(id) + " has fewer than 3 vertices");
    }
    polys.push_back(std::move(p));
  }

  Rect bbox = polys.front().bounds();
  bool all_rect = true;
  std::vector<Rect> cells;
  std::vector<ArealUnit> units;
  for (int j = 0; j < n; ++j) {
    const Polygon& p = polys[static_cast<std::size_t>(j)];
    const Rect b = p.bounds();
    bbox.xmin = std::min(bbox.xmin, b.xmin);
    bbox.ymin = std::min(bbox.ymin, b.ymin);
    bbox.xmax = std::max(bbox.xmax, b.xmax);
    bbox.ymax = std::max(bbox.ymax, b.ymax);
    const double area = p.area();
    if (!(area > 0.0)) fail(ErrorKind::InvalidGeometry, path + ": unit " + std::to_string(j) + " has zero area");
    if (p.vertices.size() != 4 || std::abs(area - b.area()) > 1e-12 * std::max(1.0, b.area())) all_rect = false;
    cells.push_back(b);
    // Area centroid by the shoelace moments.
    double cx = 0.0;
    double cy = 0.0;
    double signed_area = 0.0;
    for (std::size_t i = 0; i < p.vertices.size(); ++i) {
      const Point& a = p.vertices[i];
      const Point& c = p.vertices[(i + 1) % p.vertices.size()];
      const double cr = a.x() * c.y() - c.x() * a.y();
      signed_area += cr;
      cx += (a.x() + c.x()) * cr;
      cy += (a.y() + c.y()) * cr;
    }
    ArealUnit u;
    u.id = j;
    u.area = area;
    u.centroid = Point(cx / (3.0 * signed_area), cy / (3.0 * signed_area));
    u.samples = sample_polygon(p, samples_per_cell, derive_seed(seed, {static_cast<std::uint64_t>(j)}));
    units.push_back(std::move(u));
  }

  std::vector<std::pair<int, int>> edges;
  if (!adjacency_path.empty()) {
    edges = read_adjacency(adjacency_path);
  } else {
    std::map<std::pair<std::pair<double, double>, std::pair<double, double>>, std::vector<int>> by_edge;
    for (int j = 0; j < n; ++j) {
      const auto& v = polys[static_cast<std::size_t>(j)].vertices;
      for (std::size_t i = 0; i < v.size(); ++i) {
        std::pair<double, double> a{v[i].x(), v[i].y()};
        std::pair<double, double> b{v[(i + 1) % v.size()].x(), v[(i + 1) % v.size()].y()};
        if (b < a) std::swap(a, b);
        by_edge[{a, b}].push_back(j);
      }
    }
    std::set<std::pair<int, int>> seen;
    for (const auto& [edge, owners] : by_edge) {
      for (std::size_t x = 0; x < owners.size(); ++x) {
        for (std::size_t y = x + 1; y < owners.size(); ++y) {
          const int a = std::min(owners[x], owners[y]);
          const int b = std::max(owners[x], owners[y]);
          if (a != b && seen.insert({a, b}).second) edges.emplace_back(a, b);
        }
      }
    }
  }
  auto neighbours = neighbours_from_edges(n, edges);
  if (all_rect) return FineSupport(std::move(units), std::move(neighbours), bbox, std::move(cells));
  return FineSupport(std::move(units), std::move(neighbours), bbox);
}

FineSupport read_areal_support(const std::string& units_path, const std::string& samples_path,
                               const std::string& adjacency_path) {
  if (adjacency_path.empty()) fail(ErrorKind::Configuration, "areal support CSV needs an adjacency CSV");
  if (samples_path.empty()) fail(ErrorKind::Configuration, "areal support CSV needs a sample-point CSV");
  const CsvTable t = read_csv(units_path);
  const int c_id = t.column("id");
  const int c_x = t.column("centroid_x");
  const int c_y = t.column("centroid_y");
  const int c_area = t.column("area");
  const int n = static_cast<int>(t.rows.size());
  if (n == 0) fail(ErrorKind::InvalidInput, units_path + ": no units");
  std::vector<ArealUnit> units(static_cast<std::size_t>(n));
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const long id = t.integer(i, c_id);
    if (id < 0 || id >= n || seen[static_cast<std::size_t>(id)]) {
      fail(ErrorKind::InvalidInput, t.where(i) + ": ids must be 0.." + std::to_string(n - 1) + " without repeats");
    }
    seen[static_cast<std::size_t>(id)] = true;
    auto& u = units[static_cast<std::size_t>(id)];
    u.id = static_cast<int>(id);
    u.centroid = Point(t.number(i, c_x), t.number(i, c_y));
    u.area = t.number(i, c_area);
    if (!(u.area > 0.0)) fail(ErrorKind::InvalidGeometry, t.where(i) + ": area must be positive");
  }
  const CsvTable s = read_csv(samples_path);
  const int s_id = s.column("id");
  const int s_x = s.column("x");
  const int s_y = s.column("y");
  std::vector<std::vector<Point>> clouds(static_cast<std::size_t>(n));
  Rect bbox{units[0].centroid.x(), units[0].centroid.y(), units[0].centroid.x(), units[0].centroid.y()};
  auto grow = [&](const Point& p) {
    bbox.xmin = std::min(bbox.xmin, p.x());
    bbox.ymin = std::min(bbox.ymin, p.y());
    bbox.xmax = std::max(bbox.xmax, p.x());
    bbox.ymax = std::max(bbox.ymax, p.y());
  };
  for (const auto& u : units) grow(u.centroid);
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    const long id = s.integer(i, s_id);
    if (id < 0 || id >= n) fail(ErrorKind::SupportMismatch, s.where(i) + ": unknown unit " + std::to_string(id));
    const Point p(s.number(i, s_x), s.number(i, s_y));
    grow(p);
    clouds[static_cast<std::size_t>(id)].push_back(p);
  }
  for (int j = 0; j < n; ++j) {
    const auto& c = clouds[static_cast<std::size_t>(j)];
    auto& u = units[static_cast<std::size_t>(j)];
    u.samples.resize(2, static_cast<Eigen::Index>(c.size()));
    for (std::size_t i = 0; i < c.size(); ++i) u.samples.col(static_cast<Eigen::Index>(i)) = c[i];
  }
  auto neighbours = neighbours_from_edges(n, read_adjacency(adjacency_path));
  return FineSupport(std::move(units), std::move(neighbours), bbox);
}

std::map<long, Point> read_points(const std::string& path) {
  const CsvTable t = read_csv(path);
  const int c_id = t.column("id");
  const int c_x = t.column("x");
  const int c_y = t.column("y");
  std::map<long, Point> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const long id = t.integer(i, c_id);
    if (!out.emplace(id, Point(t.number(i, c_x), t.number(i, c_y))).second) {
      fail(ErrorKind::InvalidInput, t.where(i) + ": duplicate point id");
    }
  }
  return out;
}

KnotSet read_knots(const std::string& path) {
  const CsvTable t = read_csv(path);
  const int c_x = t.column("x");
  const int c_y = t.column("y");
  if (t.rows.empty()) fail(ErrorKind::InvalidInput, path + ": no knots");
  KnotSet k;
  k.knots.resize(2, static_cast<Eigen::Index>(t.rows.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    k.knots(0, static_cast<Eigen::Index>(i)) = t.number(i, c_x);
    k.knots(1, static_cast<Eigen::Index>(i)) = t.number(i, c_y);
  }
  if (k.knots.cols() == 1) fail(ErrorKind::InvalidInput, path + ": need at least two knots");
  k.bandwidth = bandwidth_from_knots(k.knots);
  return k;
}

void write_knots(const std::string& path, const KnotSet& knots) {
  std::string out = "id,x,y\n";
  for (int j = 0; j < knots.size(); ++j) {
    out += std::to_string(j) + "," + format_double(knots.knots(0, j)) + "," +
           format_double(knots.knots(1, j)) + "\n";
  }
  write_file_atomic(path, out);
}

Eigen::MatrixXd read_matrix(const std::string& path) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    for (const auto& cell : split(line, ',')) {
      row.push_back(parse_double(cell, path + ":" + std::to_string(line_no)));
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      fail(ErrorKind::InvalidInput, path + ":" + std::to_string(line_no) + ": ragged matrix row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorKind::InvalidInput, path + ": empty matrix");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

std::string matrix_to_csv(const Eigen::MatrixXd& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

std::vector<Observation> read_observations(const std::string& path, bool logit,
                                           const std::map<long, Point>& points) {
  const CsvTable t = read_csv(path);
  const int c_type = t.column("support_type");
  const int c_ref = t.column("support_ref");
  const int c_z = t.column("z");
  const int c_var = t.column("var_z");
  std::vector<Observation> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const std::string& type = t.rows[i][static_cast<std::size_t>(c_type)];
    const auto parts = split(t.rows[i][static_cast<std::size_t>(c_ref)], ';');
    Observation o;
    if (type == "point") {
      if (parts.size() == 2) {
        o.support = Point(parse_double(parts[0], t.where(i)), parse_double(parts[1], t.where(i)));
      } else if (parts.size() == 1) {
        const long id = parse_long(parts[0], t.where(i));
        const auto it = points.find(id);
        if (it == points.end()) {
          fail(ErrorKind::InvalidInput, t.where(i) + ": point id " + std::to_string(id) + " is not in the point CSV");
        }
        o.support = it->second;
      } else {
        fail(ErrorKind::InvalidInput, t.where(i) + ": point ref must be an id or 'x;y'");
      }
    } else if (type == "areal") {
      std::vector<int> members;
      for (const auto& p : parts) members.push_back(static_cast<int>(parse_long(p, t.where(i))));
      if (members.empty()) fail(ErrorKind::InvalidInput, t.where(i) + ": empty areal ref");
      o.support = std::move(members);
    } else {
      fail(ErrorKind::InvalidInput, t.where(i) + ": support_type must be 'point' or 'areal'");
    }
    o.z = t.number(i, c_z);
    o.var_z = t.number(i, c_var);
    if (!(o.var_z > 0.0)) fail(ErrorKind::InvalidInput, t.where(i) + ": var_z must be positive");
    if (logit) {
      try {
        const TransformedDatum d = logit_delta(o.z, o.var_z);
        o.z = d.z;
        o.var_z = d.var_z;
      } catch (const Error& e) {
        fail(ErrorKind::InvalidInput, t.where(i) + ": " + e.what());
      }
    }
    out.push_back(std::move(o));
  }
  if (out.empty()) fail(ErrorKind::InvalidInput, path + ": no observations");
  return out;
}

std::string observations_to_csv(const std::vector<Observation>& obs) {
  std::string out = "support_type,support_ref,z,var_z\n";
  for (const auto& o : obs) {
    if (const auto* p = std::get_if<Point>(&o.support)) {
      out += "point," + format_double(p->x()) + ";" + format_double(p->y());
    } else {
      out += "areal,";
      const auto& m = std::get<std::vector<int>>(o.support);
      for (std::size_t i = 0; i < m.size(); ++i) {
        if (i > 0) out += ';';
        out += std::to_string(m[i]);
      }
    }
    out += "," + format_double(o.z) + "," + format_double(o.var_z) + "\n";
  }
  return out;
}

Partition read_partition(const std::string& path, int n_units) {
  const CsvTable t = read_csv(path);
  const int c_unit = t.column("unit_id");
  const int c_region = t.column("region_id");
  std::vector<int> labels(static_cast<std::size_t>(n_units), -1);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const long u = t.integer(i, c_unit);
    const long r = t.integer(i, c_region);
    if (u < 0 || u >= n_units) {
      fail(ErrorKind::SupportMismatch, t.where(i) + ": unit " + std::to_string(u) + " is not in the support");
    }
    if (r < 0) fail(ErrorKind::InvalidInput, t.where(i) + ": negative region id");
    if (labels[static_cast<std::size_t>(u)] != -1) fail(ErrorKind::InvalidInput, t.where(i) + ": unit listed twice");
    labels[static_cast<std::size_t>(u)] = static_cast<int>(r);
  }
  for (int u = 0; u < n_units; ++u) {
    if (labels[static_cast<std::size_t>(u)] < 0) {
      fail(ErrorKind::SupportMismatch, path + ": unit " + std::to_string(u) + " has no region");
    }
  }
  // Region ids need not be dense; map them in ascending order.
  std::set<int> ids(labels.begin(), labels.end());
  std::map<int, int> dense;
  for (int id : ids) dense.emplace(id, static_cast<int>(dense.size()));
  for (auto& l : labels) l = dense.at(l);
  return Partition::from_labels(std::move(labels));
}

std::string partition_to_csv(const Partition& p) {
  std::string out = "unit_id,region_id\n";
  for (int u = 0; u < p.size(); ++u) {
    out += std::to_string(u) + "," + std::to_string(p.assignment[static_cast<std::size_t>(u)]) + "\n";
  }
  return out;
}

}  // namespace cage
