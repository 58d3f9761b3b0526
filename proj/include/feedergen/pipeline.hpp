#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "feedergen/census.hpp"
#include "feedergen/distflow.hpp"
#include "feedergen/dss_export.hpp"
#include "feedergen/errors.hpp"
#include "feedergen/loads.hpp"
#include "feedergen/partition.hpp"
#include "feedergen/phasing.hpp"
#include "feedergen/road.hpp"
#include "feedergen/rng.hpp"

namespace feedergen {

struct PipelineConfig {
  std::filesystem::path road_graph;
  std::filesystem::path substations;
  std::filesystem::path census_blocks;
  std::filesystem::path cable_catalog;
  std::filesystem::path out_dir;
  double v_th = 0.95;
  int l_max = 5;
  int max_prune_iters = 50;
  double three_phase_fraction = 0.25;
  LoadConfig load;
};

namespace detail {

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot open " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + p.string());
  f << bytes;
}

}  // namespace detail

// Flat key = value config; '#' starts a comment.
inline PipelineConfig parse_pipeline_config(const std::string& text,
                                            const std::filesystem::path& base_dir = {}) {
  std::map<std::string, std::string> kv;
  std::istringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  auto get = [&](const std::string& key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    return it->second;
  };
  auto need = [&](const std::string& key) {
    auto v = get(key);
    if (!v) throw ConfigError("config: missing required key \"" + key + "\"");
    return *v;
  };
  auto as_path = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  };
  auto as_double = [&](const std::string& key, const std::string& v) {
    return detail::parse_double_or_throw(v, "config " + key);
  };

  PipelineConfig cfg;
  cfg.road_graph = as_path(need("road_graph"));
  cfg.substations = as_path(need("substations"));
  cfg.census_blocks = as_path(need("census_blocks"));
  cfg.cable_catalog = as_path(need("cable_catalog"));
  cfg.out_dir = as_path(need("out_dir"));
  if (auto v = get("v_th")) cfg.v_th = as_double("v_th", *v);
  if (auto v = get("l_max")) cfg.l_max = static_cast<int>(as_double("l_max", *v));
  if (auto v = get("max_prune_iters"))
    cfg.max_prune_iters = static_cast<int>(as_double("max_prune_iters", *v));
  if (auto v = get("three_phase_fraction"))
    cfg.three_phase_fraction = as_double("three_phase_fraction", *v);
  if (auto v = get("zero_load_fraction"))
    cfg.load.zero_load_fraction = as_double("zero_load_fraction", *v);
  if (auto v = get("rng_seed")) cfg.load.rng_seed = std::stoull(*v);
  if (auto v = get("use_population")) cfg.load.use_population = (*v == "true" || *v == "1");
  if (auto v = get("epsilon_dist")) {
    std::istringstream es(*v);
    std::string kind;
    es >> kind;
    if (kind == "uniform") {
      cfg.load.eps_kind = LoadConfig::EpsKind::Uniform;
      if (!(es >> cfg.load.uniform_lo >> cfg.load.uniform_hi)) {
        throw ConfigError("config epsilon_dist: uniform needs two parameters (lo hi)");
      }
    } else if (kind == "t_location_scale") {
      cfg.load.eps_kind = LoadConfig::EpsKind::TLocationScale;
      if (!(es >> cfg.load.t_mu >> cfg.load.t_sigma >> cfg.load.t_nu)) {
        throw ConfigError("config epsilon_dist: t_location_scale needs three parameters (mu sigma nu)");
      }
    } else {
      throw ConfigError("config epsilon_dist: unknown kind \"" + kind + "\"");
    }
  }
  cfg.load.validate();
  if (!(cfg.v_th > 0.0 && cfg.v_th < 1.0)) throw ConfigError("config: v_th must be in (0,1)");
  if (cfg.l_max < 1) throw ConfigError("config: l_max must be >= 1");
  if (cfg.three_phase_fraction < 0.0 || cfg.three_phase_fraction > 1.0) {
    throw ConfigError("config: three_phase_fraction must be in [0,1]");
  }
  return cfg;
}

struct FeederStatus {
  std::string substation_id;
  bool ok = false;
  std::string error;
  FeederSummary summary;
};

struct PipelineReport {
  std::vector<FeederStatus> feeders;
  int dropped_substations = 0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;

  bool all_ok() const {
    for (const auto& f : feeders) {
      if (!f.ok) return false;
    }
    return true;
  }
};

inline RoadFormat road_format_for(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  if (ext == ".graphml" || ext == ".xml") return RoadFormat::GraphmlXml;
  return RoadFormat::NodeLinkJson;
}

// Step A-E wiring: partition -> weights -> loads -> distflow (with pruning)
// -> phasing -> export, one feeder per substation. A failing feeder is
// recorded and does not abort the others.
inline PipelineReport run_pipeline(const PipelineConfig& cfg,
                                   const std::string& only_substation = "") {
  PipelineReport report;
  report.seed = cfg.load.rng_seed;

  const std::string config_fingerprint =
      cfg.road_graph.string() + "|" + cfg.substations.string() + "|" +
      cfg.census_blocks.string() + "|" + cfg.cable_catalog.string() + "|" +
      std::to_string(cfg.v_th) + "|" + std::to_string(cfg.l_max) + "|" +
      std::to_string(cfg.three_phase_fraction) + "|" +
      std::to_string(cfg.load.zero_load_fraction) + "|" + std::to_string(cfg.load.rng_seed);
  report.config_hash = fnv1a64(config_fingerprint);

  auto graph = parse_road_graph(detail::read_file(cfg.road_graph), road_format_for(cfg.road_graph));
  auto subs_parse = parse_substations(detail::read_file(cfg.substations));
  report.dropped_substations = subs_parse.dropped_nonpositive;
  auto blocks = parse_blocks(detail::read_file(cfg.census_blocks));
  auto catalog = parse_cable_catalog(detail::read_file(cfg.cable_catalog));

  std::filesystem::create_directories(cfg.out_dir);

  std::vector<Substation> subs = subs_parse.substations;
  if (!only_substation.empty()) {
    std::erase_if(subs, [&](const Substation& s) { return s.id != only_substation; });
    if (subs.empty()) throw ConfigError("substation filter \"" + only_substation + "\" matched nothing");
  }
  std::sort(subs.begin(), subs.end(),
            [](const Substation& a, const Substation& b) { return a.id < b.id; });

  std::ofstream manifest(cfg.out_dir / "manifest.jsonl", std::ios::binary);
  if (!manifest) throw ConfigError("cannot write manifest in " + cfg.out_dir.string());
  manifest << nlohmann::json{{"record", "run"},
                             {"seed", report.seed},
                             {"config_hash", report.config_hash},
                             {"substations", subs.size()},
                             {"dropped_nonpositive", report.dropped_substations}}
                  .dump()
           << "\n";
  if (subs.empty()) return report;

  auto labeling = voronoi_label(graph, subs);
  auto split = connect_isolated(split_subgraphs(graph, labeling), graph);

  for (const auto& sub : subs) {
    FeederStatus status;
    status.substation_id = sub.id;
    try {
      const Subgraph& sg = split.subgraphs.at(sub.id);
      std::map<std::string, GeoPoint> sub_nodes;
      for (const auto& n : sg.nodes) sub_nodes[n] = graph.nodes.at(n);
      std::string root = pick_root(sub_nodes, sub);
      FeederTree tree = mst_reduce(sub_nodes, sg.edges, root);
      WeightTable weights = node_weights(sub_nodes, blocks);

      LoadConfig load_cfg = cfg.load;
      load_cfg.rng_seed = cfg.load.rng_seed ^ fnv1a64(sub.id);
      PruneResult pr = prune_and_iterate(std::move(tree), weights, sub.p_mw, sub.q_mvar,
                                         load_cfg, catalog, cfg.l_max, sub.base_kv, cfg.v_th,
                                         cfg.max_prune_iters);
      PhasePlan plan = plan_phases(pr.tree, pr.solution.edges, cfg.three_phase_fraction);

      detail::write_file(cfg.out_dir / (sub.id + ".dss"),
                         write_dss(pr.tree, pr.solution, plan, sub.id));
      detail::write_file(cfg.out_dir / (sub.id + ".geojson"),
                         write_geojson(pr.tree, pr.solution, plan));
      FeederSummary summary = summarize(pr.tree, pr.solution, plan, sub.id);
      summary.prune_iterations = pr.prune_iterations;
      summary.met_threshold = pr.met_threshold;
      detail::write_file(cfg.out_dir / (sub.id + ".summary.json"),
                         summary_json(summary).dump(2) + "\n");
      status.ok = true;
      status.summary = summary;
      manifest << nlohmann::json{{"record", "feeder"},
                                 {"substation", sub.id},
                                 {"status", "ok"},
                                 {"seed", load_cfg.rng_seed},
                                 {"nodes", summary.node_count},
                                 {"edges", summary.edge_count},
                                 {"min_v_pu", summary.min_v_pu},
                                 {"prune_iterations", summary.prune_iterations},
                                 {"met_threshold", summary.met_threshold}}
                      .dump()
               << "\n";
    } catch (const std::exception& e) {
      status.ok = false;
      status.error = e.what();
      manifest << nlohmann::json{{"record", "feeder"},
                                 {"substation", sub.id},
                                 {"status", "error"},
                                 {"error", status.error}}
                      .dump()
               << "\n";
    }
    report.feeders.push_back(std::move(status));
  }
  return report;
}

}  // namespace feedergen
