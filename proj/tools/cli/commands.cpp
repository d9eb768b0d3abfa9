#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <json.hpp>

#include "cage/bundle.hpp"
#include "cage/criterion.hpp"
#include "cage/csv.hpp"
#include "cage/error.hpp"
#include "cage/random.hpp"
#include "cage/regionalize.hpp"

namespace cage::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t stream_seed(const Config& c, Stream s) {
  return derive_seed(static_cast<std::uint64_t>(c.integer("seed", 1)), {static_cast<std::uint64_t>(s)});
}

namespace {

const std::vector<std::string> kFitKeys = {
    "support_csv", "samples_csv",   "polygon_csv", "points_csv", "adjacency_csv",
    "grid_nx",     "grid_ny",       "bbox",        "samples_per_cell",
    "obs_csv",     "delta_logit",   "basis",       "r",         "knots_csv",   "knot_placement",
    "n_w",         "w_csv",         "prior",       "iw_df",     "iw_scale",    "mi_shape",
    "mi_rate",     "q_fixed_csv",   "sigma_mu2",   "alpha_xi",  "beta_xi",     "fine_scale",
    "mu_fixed",    "iters",         "burn_in",     "thin",      "seed"};

const std::vector<std::string> kFitFileKeys = {"support_csv", "samples_csv", "polygon_csv",
                                               "adjacency_csv", "obs_csv", "points_csv",
                                               "knots_csv", "w_csv", "q_fixed_csv"};

const std::vector<std::string> kFileKeys = {"support_csv", "samples_csv", "polygon_csv",
                                            "adjacency_csv", "obs_csv", "points_csv",
                                            "knots_csv", "w_csv", "q_fixed_csv", "partition_csv"};

Rect parse_bbox(const Config& c) {
  if (!c.has("bbox")) return unit_square();
  const auto v = c.reals("bbox");
  if (v.size() != 4) fail(ErrorKind::Configuration, "bbox must be 'xmin,ymin,xmax,ymax'");
  Rect r{v[0], v[1], v[2], v[3]};
  if (r.degenerate()) fail(ErrorKind::Configuration, "bbox is degenerate");
  return r;
}

std::string required_path(const Config& c, const std::string& key) {
  c.required(key);
  return c.path(key);
}

std::string output_dir(const Config& c) { return required_path(c, "output_dir"); }

std::string draws_dir(const Config& c) {
  const std::string d = c.path("draws_dir");
  return d.empty() ? output_dir(c) : d;
}

std::string out_path(const Config& c, const std::string& name) {
  return (fs::path(output_dir(c)) / name).string();
}

std::string file_hash(const std::string& path) { return hex64(fnv1a(read_file(path))); }

void write_manifest(const Config& c, const std::string& command,
                    const std::vector<std::string>& outputs) {
  ordered_json m;
  m["command"] = command;
  m["version"] = "0.1.0";
  m["seed"] = c.integer("seed", 1);
  std::vector<std::string> all_keys;
  for (const auto& [k, v] : c.values()) all_keys.push_back(k);
  m["config_hash"] = hex64(fnv1a(c.canonical(all_keys)));
  m["fit_hash"] = fit_hash(c);
  ordered_json config = ordered_json::object();
  for (const auto& [k, v] : c.values()) config[k] = v;
  m["config"] = config;
  ordered_json inputs = ordered_json::object();
  for (const auto& key : kFileKeys) {
    const std::string p = c.path(key);
    if (!p.empty()) inputs[key] = {{"path", c.str(key, "")}, {"fnv1a", file_hash(p)}};
  }
  m["inputs"] = inputs;
  ordered_json outs = ordered_json::object();
  for (const auto& name : outputs) outs[name] = file_hash(out_path(c, name));
  m["outputs"] = outs;
  write_file_atomic(out_path(c, command + ".manifest.json"), m.dump(2) + "\n");
}

void check_fresh_draws(const Config& c) {
  const std::string manifest = (fs::path(draws_dir(c)) / "fit.manifest.json").string();
  if (!fs::exists(manifest)) {
    fail(ErrorKind::InvalidInput, "no fit manifest in '" + draws_dir(c) + "'; run `cage fit` first");
  }
  const auto m = ordered_json::parse(read_file(manifest));
  const std::string recorded = m.value("fit_hash", "");
  if (recorded != fit_hash(c)) {
    fail(ErrorKind::InvalidInput, "draws in '" + draws_dir(c) +
                                      "' are stale: fit inputs changed since they were produced (manifest " +
                                      recorded + ", config " + fit_hash(c) + ")");
  }
}

}  // namespace

std::string fit_hash(const Config& c) {
  std::string material = c.canonical(kFitKeys);
  for (const auto& key : kFitFileKeys) {
    const std::string p = c.path(key);
    if (!p.empty()) material += key + "#" + file_hash(p) + "\n";
  }
  return hex64(fnv1a(material));
}

FineSupport load_support(const Config& c) {
  const long spc = c.integer("samples_per_cell", 400);
  if (spc < 1) fail(ErrorKind::Configuration, "samples_per_cell must be positive");
  const auto seed = stream_seed(c, Stream::Support);
  const int sources = static_cast<int>(c.has("support_csv")) + static_cast<int>(c.has("polygon_csv")) +
                      static_cast<int>(c.has("grid_nx") || c.has("grid_ny"));
  if (sources != 1) {
    fail(ErrorKind::Configuration, "give exactly one of support_csv, polygon_csv or grid_nx/grid_ny");
  }
  if (c.has("support_csv")) {
    return read_areal_support(c.path("support_csv"), required_path(c, "samples_csv"),
                              required_path(c, "adjacency_csv"));
  }
  if (c.has("polygon_csv")) {
    return read_polygon_support(c.path("polygon_csv"), static_cast<int>(spc), seed, c.path("adjacency_csv"));
  }
  const long nx = c.integer("grid_nx", 0);
  const long ny = c.integer("grid_ny", 0);
  if (nx < 1 || ny < 1) fail(ErrorKind::Configuration, "grid_nx and grid_ny must be positive");
  return build_grid(static_cast<int>(nx), static_cast<int>(ny), parse_bbox(c), static_cast<int>(spc), seed);
}

std::vector<Observation> load_observations(const Config& c) {
  std::map<long, Point> points;
  if (c.has("points_csv")) points = read_points(c.path("points_csv"));
  return read_observations(required_path(c, "obs_csv"), c.boolean("delta_logit", false), points);
}

BasisSpec basis_spec(const Config& c) {
  BasisSpec b;
  b.kind = parse_gbf_kind(c.str("basis", "bisquare"));
  b.domain = parse_bbox(c);
  b.n_w = static_cast<int>(c.integer("n_w", 20000));
  b.seed = stream_seed(c, Stream::Basis);
  if (c.has("knots_csv")) {
    b.placement = KnotPlacement::Explicit;
    b.knots = read_knots(c.path("knots_csv"));
    b.r = static_cast<int>(c.integer("r", b.knots->size()));
  } else {
    b.placement = parse_knot_placement(c.str("knot_placement", "grid"));
    b.r = static_cast<int>(c.integer("r", 9));
  }
  if (c.has("w_csv")) b.w = read_matrix(c.path("w_csv"));
  return b;
}

PriorSpec prior_spec(const Config& c) {
  PriorSpec p;
  p.kind = parse_prior_kind(c.str("prior", "inverse_wishart"));
  p.iw_df = c.maybe_real("iw_df");
  p.iw_scale = c.real("iw_scale", 1.0);
  p.mi_shape = c.real("mi_shape", 1.0);
  p.mi_rate = c.real("mi_rate", 1.0);
  if (c.has("q_fixed_csv")) p.q_fixed = read_matrix(c.path("q_fixed_csv"));
  p.sigma_mu2 = c.real("sigma_mu2", 1e6);
  p.alpha_xi = c.real("alpha_xi", 1.0);
  p.beta_xi = c.real("beta_xi", 1.0);
  p.fine_scale = c.boolean("fine_scale", true);
  p.fixed_mu = c.maybe_real("mu_fixed");
  return p;
}

GibbsOptions gibbs_options(const Config& c) {
  GibbsOptions g;
  g.iters = static_cast<int>(c.integer("iters", 2000));
  g.burn_in = static_cast<int>(c.integer("burn_in", 500));
  g.thin = static_cast<int>(c.integer("thin", 1));
  g.seed = stream_seed(c, Stream::Gibbs);
  return g;
}

SearchConfig search_config(const Config& c, int n_units) {
  SearchConfig s;
  s.g_lower = static_cast<int>(c.integer("g_lower", 2));
  s.g_upper = static_cast<int>(c.integer("g_upper", n_units - 1));
  s.algorithm = parse_algorithm(c.str("algorithm", "kmeans"));
  s.criterion = parse_criterion_kind(c.str("criterion", "dcage"));
  s.scaling = parse_feature_scaling(c.str("scaling", "standardize"));
  s.kmeans_restarts = static_cast<int>(c.integer("kmeans_restarts", 1));
  s.seed = stream_seed(c, Stream::Search);
  s.validate(n_units);
  return s;
}

SynthSpec synth_spec(const Config& c) {
  SynthSpec s;
  s.domain = parse_bbox(c);
  s.point_nx = s.point_ny = static_cast<int>(c.integer("synth_point_n", 20));
  s.areal_nx = s.areal_ny = static_cast<int>(c.integer("synth_areal_n", 10));
  s.point_min = c.real("synth_point_min", 0.05);
  s.point_max = c.real("synth_point_max", 1.0);
  s.r_true = static_cast<int>(c.integer("synth_r_true", 100));
  s.total_var = c.real("synth_total_var", 0.91);
  s.sigma_xi2 = c.real("synth_sigma_xi2", 0.01);
  s.noise_var = c.real("synth_noise_var", 0.1820);
  s.point_coverage = c.real("synth_coverage", 0.5);
  s.mu = c.real("synth_mu", 0.0);
  s.samples_per_cell = static_cast<int>(c.integer("samples_per_cell", 400));
  s.seed = static_cast<std::uint64_t>(c.integer("seed", 1));
  s.validate();
  return s;
}

std::string regions_geojson(const FineSupport& fine, const Partition& partition) {
  if (!fine.cells()) fail(ErrorKind::InvalidGeometry, "GeoJSON needs rectangular cell geometry");
  const auto& cells = *fine.cells();
  ordered_json fc;
  fc["type"] = "FeatureCollection";
  fc["features"] = ordered_json::array();
  const auto groups = partition.members();
  for (std::size_t l = 0; l < groups.size(); ++l) {
    ordered_json polys = ordered_json::array();
    for (int h : groups[l]) {
      const Rect& r = cells[static_cast<std::size_t>(h)];
      polys.push_back(ordered_json::array({ordered_json::array({{r.xmin, r.ymin},
                                                                {r.xmax, r.ymin},
                                                                {r.xmax, r.ymax},
                                                                {r.xmin, r.ymax},
                                                                {r.xmin, r.ymin}})}));
    }
    ordered_json feature;
    feature["type"] = "Feature";
    feature["properties"] = {{"region_id", l}, {"n_units", groups[l].size()}};
    feature["geometry"] = {{"type", "MultiPolygon"}, {"coordinates", polys}};
    fc["features"].push_back(feature);
  }
  return fc.dump() + "\n";
}

int cmd_fit(const Config& c) {
  const FineSupport fine = load_support(c);
  PipelineSpec spec;
  spec.fine = &fine;
  spec.obs = load_observations(c);
  spec.basis = basis_spec(c);
  spec.prior = prior_spec(c);
  spec.gibbs = gibbs_options(c);
  const FitResult f = fit(spec);
  write_bundle(output_dir(c), f.draws, f.basis);
  const PosteriorSummary s = posterior_summary(f.draws, true);
  std::string csv = "unit_id,mean,sd\n";
  for (Eigen::Index j = 0; j < s.mean.size(); ++j) {
    csv += std::to_string(j) + "," + format_double(s.mean(j)) + "," + format_double(s.sd(j)) + "\n";
  }
  write_file_atomic(out_path(c, "posterior_summary.csv"), csv);
  write_manifest(c, "fit",
                 {"posterior_summary.csv", "draws/mu.csv", "draws/eta.csv", "draws/xi.csv",
                  "draws/sigma_xi2.csv", "draws/q.csv", "draws/y_b.csv", "basis/w.csv",
                  "basis/transform.csv"});
  std::cout << "fit: " << f.draws.size() << " draws, r = " << f.basis.rank()
            << ", orthonormality residual " << f.basis.orthonormality_residual() << "\n";
  return 0;
}

int cmd_regionalize(const Config& c) {
  check_fresh_draws(c);
  const FineSupport fine = load_support(c);
  const Bundle b = read_bundle(draws_dir(c));
  if (b.draws.n_units() != fine.size()) {
    fail(ErrorKind::SupportMismatch, "draws cover a different number of units than the support");
  }
  SearchConfig sc = search_config(c, fine.size());
  if (c.boolean("prescan", false)) {
    SearchConfig wide = sc;
    wide.g_lower = 2;
    wide.g_upper = fine.size() - 1;
    const auto [lo, hi] = simplified_prescan(b.draws, b.basis, fine, wide,
                                             static_cast<int>(c.integer("prescan_half_width", 10)));
    sc.g_lower = lo;
    sc.g_upper = hi;
  }
  const SearchResult res = search(b.draws, b.basis, fine, sc);

  ordered_json j;
  j["n_op"] = res.optimal.k;
  j["draw"] = res.optimal.m;
  j["avg_criterion"] = res.optimal.avg_criterion;
  j["criterion"] = to_string(sc.criterion);
  j["algorithm"] = to_string(sc.algorithm);
  j["scaling"] = to_string(sc.scaling);
  j["g_lower"] = sc.g_lower;
  j["g_upper"] = sc.g_upper;
  j["labels"] = res.optimal.partition.assignment;
  ordered_json all = ordered_json::array();
  for (const auto& s : res.all) all.push_back({{"k", s.k}, {"m", s.m}, {"avg_criterion", s.avg_criterion}});
  j["candidates"] = all;
  write_file_atomic(out_path(c, "search_result.json"), j.dump(2) + "\n");
  write_file_atomic(out_path(c, "membership.csv"), partition_to_csv(res.optimal.partition));
  std::vector<std::string> outputs = {"search_result.json", "membership.csv"};
  if (fine.cells()) {
    write_file_atomic(out_path(c, "regions.geojson"), regions_geojson(fine, res.optimal.partition));
    outputs.push_back("regions.geojson");
  }
  write_manifest(c, "regionalize", outputs);
  std::cout << "regionalize: n_op = " << res.optimal.k << " (draw " << res.optimal.m
            << "), average " << to_string(sc.criterion) << " " << res.optimal.avg_criterion << "\n";
  return 0;
}

int cmd_cage_map(const Config& c) {
  check_fresh_draws(c);
  const FineSupport fine = load_support(c);
  const Bundle b = read_bundle(draws_dir(c));
  if (b.draws.n_units() != fine.size()) {
    fail(ErrorKind::SupportMismatch, "draws cover a different number of units than the support");
  }
  const Partition p = read_partition(required_path(c, "partition_csv"), fine.size());
  const CriterionKind kind = parse_criterion_kind(c.str("criterion", "dcage"));
  const CageReport rep = kind == CriterionKind::Dcage ? dcage(b.draws, b.basis, fine, p)
                                                      : cage(b.draws, b.basis, fine, p);
  std::string csv = "region_id,value,sqrt_value\n";
  for (const auto& [id, v] : rep.per_region) {
    csv += std::to_string(id) + "," + format_double(v) + "," + format_double(std::sqrt(std::max(0.0, v))) + "\n";
  }
  write_file_atomic(out_path(c, "cage_map.csv"), csv);
  write_manifest(c, "cage-map", {"cage_map.csv"});
  std::cout << "cage-map: " << rep.per_region.size() << " regions, average " << to_string(kind) << " "
            << rep.average << "\n";
  return 0;
}

int cmd_simulate(const Config& c) {
  const SynthSpec spec = synth_spec(c);
  const SynthData d = simulate(spec);
  const auto& cells = *d.fine.cells();
  std::string polygons = "unit_id,vertex,x,y\n";
  for (std::size_t j = 0; j < cells.size(); ++j) {
    const Rect& r = cells[j];
    const double xs[4] = {r.xmin, r.xmax, r.xmax, r.xmin};
    const double ys[4] = {r.ymin, r.ymin, r.ymax, r.ymax};
    for (int v = 0; v < 4; ++v) {
      polygons += std::to_string(j) + "," + std::to_string(v) + "," + format_double(xs[v]) + "," +
                  format_double(ys[v]) + "\n";
    }
  }
  std::string points = "id,x,y\n";
  for (Eigen::Index i = 0; i < d.points.cols(); ++i) {
    points += std::to_string(i) + "," + format_double(d.points(0, i)) + "," + format_double(d.points(1, i)) + "\n";
  }
  std::string obs = "support_type,support_ref,z,var_z\n";
  for (std::size_t i = 0; i < d.observed.size(); ++i) {
    obs += "point," + std::to_string(d.observed[i]) + "," + format_double(d.z_s(static_cast<Eigen::Index>(i))) +
           "," + format_double(d.noise_var) + "\n";
  }
  for (Eigen::Index j = 0; j < d.z_a.size(); ++j) {
    obs += "areal," + std::to_string(j) + "," + format_double(d.z_a(j)) + "," + format_double(d.noise_var) + "\n";
  }
  std::string truth_a = "unit_id,y_a\n";
  for (Eigen::Index j = 0; j < d.y_a.size(); ++j) {
    truth_a += std::to_string(j) + "," + format_double(d.y_a(j)) + "\n";
  }
  std::vector<bool> observed(static_cast<std::size_t>(d.points.cols()), false);
  for (int i : d.observed) observed[static_cast<std::size_t>(i)] = true;
  std::string truth_s = "id,y_s,observed\n";
  for (Eigen::Index i = 0; i < d.points.cols(); ++i) {
    truth_s += std::to_string(i) + "," + format_double(d.y_s(i)) + "," +
               (observed[static_cast<std::size_t>(i)] ? "1" : "0") + "\n";
  }
  write_file_atomic(out_path(c, "polygons.csv"), polygons);
  write_file_atomic(out_path(c, "points.csv"), points);
  write_file_atomic(out_path(c, "observations.csv"), obs);
  write_file_atomic(out_path(c, "truth_areal.csv"), truth_a);
  write_file_atomic(out_path(c, "truth_points.csv"), truth_s);
  write_file_atomic(out_path(c, "lambda.csv"), matrix_to_csv(d.lambda));
  write_manifest(c, "simulate", {"polygons.csv", "points.csv", "observations.csv", "truth_areal.csv",
                                 "truth_points.csv", "lambda.csv"});
  std::cout << "simulate: " << d.observed.size() << " point and " << d.z_a.size()
            << " areal observations\n";
  return 0;
}

int cmd_rank_scan(const Config& c) {
  const FineSupport fine = load_support(c);
  PipelineSpec spec;
  spec.fine = &fine;
  spec.obs = load_observations(c);
  spec.basis = basis_spec(c);
  spec.prior = prior_spec(c);
  spec.gibbs = gibbs_options(c);
  spec.search = search_config(c, fine.size());
  std::vector<int> ranks;
  for (double v : c.reals("rank_values")) {
    if (v != std::floor(v) || v < 1) fail(ErrorKind::Configuration, "rank_values must be positive integers");
    ranks.push_back(static_cast<int>(v));
  }
  if (ranks.empty()) fail(ErrorKind::Configuration, "missing required key 'rank_values'");
  const auto table = rank_scan(spec, ranks);
  std::string csv = "r,n_op\n";
  for (const auto& [r, n] : table) csv += std::to_string(r) + "," + std::to_string(n) + "\n";
  write_file_atomic(out_path(c, "rank_scan.csv"), csv);
  write_manifest(c, "rank-scan", {"rank_scan.csv"});
  for (const auto& [r, n] : table) std::cout << "rank-scan: r = " << r << " -> n_op = " << n << "\n";
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"Regionalization by spatial aggregation error (CAGE / DCAGE)", "cage"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  auto add = [&](const std::string& name, const std::string& help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", config_path, "key = value configuration file")->required();
    sub->add_option("--set", overrides, "override a config entry (key=value), repeatable");
    return sub;
  };
  auto* fit_cmd = add("fit", "run the Gibbs sampler and persist posterior draws");
  auto* reg_cmd = add("regionalize", "two-stage search for the optimal regionalization");
  auto* map_cmd = add("cage-map", "per-region criterion values for a fixed partition");
  auto* sim_cmd = add("simulate", "generate synthetic multiscale data");
  auto* scan_cmd = add("rank-scan", "optimal region count for several basis ranks");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    Config c = Config::load(config_path);
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) fail(ErrorKind::Configuration, "--set expects key=value");
      c.set(o.substr(0, eq), o.substr(eq + 1));
    }
    if (fit_cmd->parsed()) return cmd_fit(c);
    if (reg_cmd->parsed()) return cmd_regionalize(c);
    if (map_cmd->parsed()) return cmd_cage_map(c);
    if (sim_cmd->parsed()) return cmd_simulate(c);
    if (scan_cmd->parsed()) return cmd_rank_scan(c);
  } catch (const Error& e) {
    std::cerr << "cage: " << e.what() << "\n";
    return is_numerical(e.kind()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "cage: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace cage::cli
