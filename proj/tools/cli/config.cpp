#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "cage/csv.hpp"
#include "cage/error.hpp"

namespace cage::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_real(const std::string& v, const std::string& key) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (v.empty() || res.ec != std::errc() || res.ptr != end || !std::isfinite(out)) {
    fail(ErrorKind::Configuration, "config key '" + key + "': '" + v + "' is not a number");
  }
  return out;
}

}  // namespace

const std::vector<std::string>& Config::known_keys() {
  static const std::vector<std::string> keys = {
      // support
      "support_csv", "samples_csv", "polygon_csv", "adjacency_csv", "grid_nx", "grid_ny", "bbox", "samples_per_cell",
      // data
      "obs_csv", "points_csv", "delta_logit",
      // basis
      "basis", "r", "knots_csv", "knot_placement", "n_w", "w_csv",
      // prior
      "prior", "iw_df", "iw_scale", "mi_shape", "mi_rate", "q_fixed_csv", "sigma_mu2", "alpha_xi",
      "beta_xi", "fine_scale", "mu_fixed",
      // sampler
      "iters", "burn_in", "thin", "seed",
      // search
      "g_lower", "g_upper", "algorithm", "criterion", "scaling", "kmeans_restarts", "prescan",
      "prescan_half_width",
      // outputs
      "output_dir", "draws_dir", "partition_csv",
      // rank scan
      "rank_values",
      // simulation
      "synth_point_n", "synth_areal_n", "synth_point_min", "synth_point_max", "synth_r_true",
      "synth_total_var", "synth_sigma_xi2", "synth_noise_var", "synth_coverage", "synth_mu"};
  return keys;
}

Config Config::parse(const std::string& text, const std::string& source) {
  Config c;
  c.source_ = source;
  const std::filesystem::path p(source);
  c.base_dir_ = p.has_parent_path() ? p.parent_path().string() : ".";
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  const auto& known = known_keys();
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(line_no);
    if (eq == std::string::npos) fail(ErrorKind::Configuration, where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      fail(ErrorKind::Configuration, where + ": unknown key '" + key + "'");
    }
    if (c.values_.count(key) != 0) fail(ErrorKind::Configuration, where + ": duplicate key '" + key + "'");
    c.values_[key] = value;
  }
  return c;
}

Config Config::load(const std::string& path) { return parse(read_file(path), path); }

void Config::set(const std::string& key, const std::string& value) {
  const auto& known = known_keys();
  if (std::find(known.begin(), known.end(), key) == known.end()) {
    fail(ErrorKind::Configuration, "unknown key '" + key + "'");
  }
  values_[key] = value;
}

std::string Config::str(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::string Config::required(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) {
    fail(ErrorKind::Configuration, source_ + ": missing required key '" + key + "'");
  }
  return it->second;
}

double Config::real(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : to_real(it->second, key);
}

std::optional<double> Config::maybe_real(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return to_real(it->second, key);
}

long Config::integer(const std::string& key, long fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  long out = 0;
  const std::string& v = it->second;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (v.empty() || res.ec != std::errc() || res.ptr != end) {
    fail(ErrorKind::Configuration, "config key '" + key + "': '" + v + "' is not an integer");
  }
  return out;
}

bool Config::boolean(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
  if (it->second == "false" || it->second == "0" || it->second == "no") return false;
  fail(ErrorKind::Configuration, "config key '" + key + "': expected true or false");
}

std::vector<double> Config::reals(const std::string& key) const {
  std::vector<double> out;
  const auto it = values_.find(key);
  if (it == values_.end()) return out;
  std::istringstream in(it->second);
  std::string part;
  while (std::getline(in, part, ',')) out.push_back(to_real(trim(part), key));
  return out;
}

std::string Config::path(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) return "";
  const std::filesystem::path p(it->second);
  if (p.is_absolute()) return p.string();
  return (std::filesystem::path(base_dir_) / p).lexically_normal().string();
}

std::string Config::canonical(const std::vector<std::string>& keys) const {
  std::vector<std::string> sorted = keys;
  std::sort(sorted.begin(), sorted.end());
  std::string out;
  for (const auto& k : sorted) {
    const auto it = values_.find(k);
    if (it != values_.end()) out += k + "=" + it->second + "\n";
  }
  return out;
}

}  // namespace cage::cli
