#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cage/geometry.hpp"
#include "cage/inference.hpp"
#include "cage/pipeline.hpp"
#include "cage/synth.hpp"
#include "config.hpp"

namespace cage::cli {

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data);
std::string hex64(std::uint64_t v);

/// Seed streams derived from the config `seed`.
enum class Stream : std::uint64_t { Support = 1, Basis = 2, Gibbs = 3, Search = 4 };
std::uint64_t stream_seed(const Config& c, Stream s);

/// D_B from support_csv (+ adjacency_csv) or from grid_nx / grid_ny / bbox.
FineSupport load_support(const Config& c);
std::vector<Observation> load_observations(const Config& c);
BasisSpec basis_spec(const Config& c);
PriorSpec prior_spec(const Config& c);
GibbsOptions gibbs_options(const Config& c);
/// g_upper defaults to n_units - 1.
SearchConfig search_config(const Config& c, int n_units);
SynthSpec synth_spec(const Config& c);

/// Hash of every input that determines the posterior draws.
std::string fit_hash(const Config& c);

/// GeoJSON FeatureCollection of regions as multipolygons of member cells.
std::string regions_geojson(const FineSupport& fine, const Partition& partition);

int cmd_fit(const Config& c);
int cmd_regionalize(const Config& c);
int cmd_cage_map(const Config& c);
int cmd_simulate(const Config& c);
int cmd_rank_scan(const Config& c);

/// Parses arguments, dispatches, and maps errors to exit codes
/// (0 success, 1 validation error, 2 numerical failure).
int run(int argc, char** argv);

}  // namespace cage::cli
