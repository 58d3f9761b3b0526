#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "feedergen/distflow.hpp"
#include "feedergen/errors.hpp"
#include "feedergen/partition.hpp"
#include "feedergen/phasing.hpp"

namespace feedergen {

namespace detail {

inline std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline const char* phase_suffix(Phase p) {
  switch (p) {
    case Phase::A:
      return ".1";
    case Phase::B:
      return ".2";
    case Phase::C:
      return ".3";
    case Phase::ABC:
      return "";
  }
  return "";
}

}  // namespace detail

// OpenDSS text model: circuit, linecodes, lines, loads, solve directives.
// All floats carry exactly six decimals and lines end with LF so the output
// is byte-stable.
inline std::string write_dss(const FeederTree& tree, const DistFlowSolution& solution,
                             const PhasePlan& plan, const std::string& circuit_name) {
  for (const auto& e : tree.edges) {
    if (!solution.edges.count(e.child) || !plan.edge_phase.count(e.child)) {
      throw IncompleteModelError("write_dss: edge to " + e.child + " lacks a cable or phase");
    }
  }
  std::string out;
  out += "New Circuit." + circuit_name + " basekv=" + detail::fmt6(solution.base_kv) +
         " pu=1.000000 bus1=" + tree.root + "\n";

  // one linecode per distinct (cable, parallels), R1/X1 already divided down
  std::map<std::pair<std::string, int>, const EdgeSolution*> codes;
  for (const auto& [child, sol] : solution.edges) {
    codes.emplace(std::make_pair(sol.choice.cable.name, sol.choice.parallels), &sol);
  }
  for (const auto& [key, sol] : codes) {
    out += "New Linecode." + key.first + "_" + std::to_string(key.second) +
           " nphases=3 R1=" + detail::fmt6(sol->choice.cable.r_ohm_per_km / key.second) +
           " X1=" + detail::fmt6(sol->choice.cable.x_ohm_per_km / key.second) + " units=km\n";
  }

  for (const auto& e : tree.edges) {
    const EdgeSolution& sol = solution.edges.at(e.child);
    Phase ph = plan.edge_phase.at(e.child);
    const char* suf = detail::phase_suffix(ph);
    out += "New Line." + e.child + " bus1=" + e.parent + suf + " bus2=" + e.child + suf +
           " length=" + detail::fmt6(e.length_m / 1000.0) + " linecode=" +
           sol.choice.cable.name + "_" + std::to_string(sol.choice.parallels) +
           " phases=" + (ph == Phase::ABC ? "3" : "1") + "\n";
  }

  for (const auto& [id, node] : tree.nodes) {
    if (node.p_mw == 0.0 && node.q_mvar == 0.0) continue;
    Phase ph = plan.node_phase.at(id);
    const char* suf = detail::phase_suffix(ph);
    // single-phase loads are wye-connected at line-to-neutral voltage
    double kv = ph == Phase::ABC ? solution.base_kv : solution.base_kv / std::sqrt(3.0);
    out += "New Load." + id + " bus1=" + id + suf + " kV=" + detail::fmt6(kv) +
           " kW=" + detail::fmt6(node.p_mw * 1000.0) + " kvar=" +
           detail::fmt6(node.q_mvar * 1000.0) + " model=1 phases=" +
           (ph == Phase::ABC ? "3" : "1") + "\n";
  }

  out += "Set voltagebases=[" + detail::fmt6(solution.base_kv) + "]\n";
  out += "calcvoltagebases\n";
  out += "solve\n";
  return out;
}

inline std::string phase_name(Phase p) {
  switch (p) {
    case Phase::A:
      return "A";
    case Phase::B:
      return "B";
    case Phase::C:
      return "C";
    case Phase::ABC:
      return "ABC";
  }
  return "ABC";
}

inline std::string write_geojson(const FeederTree& tree, const DistFlowSolution& solution,
                                 const PhasePlan& plan) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& e : tree.edges) {
    const EdgeSolution& sol = solution.edges.at(e.child);
    const GeoPoint& a = tree.nodes.at(e.parent).point;
    const GeoPoint& b = tree.nodes.at(e.child).point;
    features.push_back({{"type", "Feature"},
                        {"geometry",
                         {{"type", "LineString"},
                          {"coordinates", {{a.lon, a.lat}, {b.lon, b.lat}}}}},
                        {"properties",
                         {{"phase", phase_name(plan.edge_phase.at(e.child))},
                          {"cable", sol.choice.cable.name},
                          {"parallels", sol.choice.parallels},
                          {"p_mw_flow", sol.flow.p_mw},
                          {"s_mva", sol.flow.s_mva}}}});
  }
  for (const auto& [id, node] : tree.nodes) {
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "Point"}, {"coordinates", {node.point.lon, node.point.lat}}}},
                        {"properties",
                         {{"node_id", id},
                          {"p_mw", node.p_mw},
                          {"q_mvar", node.q_mvar},
                          {"v_pu", node.v_pu},
                          {"is_root", id == tree.root}}}});
  }
  nlohmann::json fc{{"type", "FeatureCollection"}, {"features", features}};
  return fc.dump(2);
}

struct FeederSummary {
  std::string circuit_name;
  std::size_t node_count = 0;
  std::size_t edge_count = 0;
  double total_p_mw = 0.0;
  double total_q_mvar = 0.0;
  double min_v_pu = 0.0;
  std::array<double, 3> phase_totals{0.0, 0.0, 0.0};
  double phase_objective = 0.0;
  std::map<std::string, int> cable_usage;  // linecode name -> line count
  int prune_iterations = 0;
  bool met_threshold = false;
};

inline FeederSummary summarize(const FeederTree& tree, const DistFlowSolution& solution,
                               const PhasePlan& plan, const std::string& circuit_name) {
  FeederSummary s;
  s.circuit_name = circuit_name;
  s.node_count = tree.nodes.size();
  s.edge_count = tree.edges.size();
  for (const auto& [id, node] : tree.nodes) {
    s.total_p_mw += node.p_mw;
    s.total_q_mvar += node.q_mvar;
  }
  s.min_v_pu = solution.min_v;
  s.phase_totals = plan.phase_totals;
  s.phase_objective = plan.objective;
  for (const auto& [child, sol] : solution.edges) {
    ++s.cable_usage[sol.choice.cable.name + "_" + std::to_string(sol.choice.parallels)];
  }
  return s;
}

inline nlohmann::json summary_json(const FeederSummary& s) {
  return {{"circuit", s.circuit_name},
          {"nodes", s.node_count},
          {"edges", s.edge_count},
          {"total_p_mw", s.total_p_mw},
          {"total_q_mvar", s.total_q_mvar},
          {"min_v_pu", s.min_v_pu},
          {"phase_totals_mw", {s.phase_totals[0], s.phase_totals[1], s.phase_totals[2]}},
          {"phase_objective_mw", s.phase_objective},
          {"cable_usage", s.cable_usage},
          {"prune_iterations", s.prune_iterations},
          {"met_threshold", s.met_threshold}};
}

}  // namespace feedergen
