#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "feedergen/errors.hpp"
#include "feedergen/loads.hpp"
#include "feedergen/partition.hpp"

namespace feedergen {

struct CableSpec {
  std::string name;
  double r_ohm_per_km = 0.0;
  double x_ohm_per_km = 0.0;
  double s_capacity_mva = 0.0;
};

struct CableChoice {
  CableSpec cable;
  int parallels = 1;
};

struct EdgeFlow {
  double p_mw = 0.0;
  double q_mvar = 0.0;
  double s_mva = 0.0;
};

struct EdgeSolution {
  EdgeFlow flow;
  CableChoice choice;
  double r_pu = 0.0;
  double x_pu = 0.0;
};

// S_base is fixed at 1 MVA so MW/MVAr values double as per-unit flows.
inline constexpr double kSBaseMva = 1.0;

struct DistFlowSolution {
  std::map<std::string, EdgeSolution> edges;  // keyed by child node id
  std::map<std::string, double> v_pu;
  double base_kv = 0.0;
  double v0 = 1.0;
  double v_th = 0.0;
  double min_v = 0.0;
};

inline std::vector<CableSpec> parse_cable_catalog(std::string_view bytes) {
  std::istringstream ss{std::string(bytes)};
  std::string line;
  if (!std::getline(ss, line)) throw SchemaError("cable catalog: empty file");
  auto header = detail::split_csv_line(line);
  const std::vector<std::string> expected{"name", "r_ohm_per_km", "x_ohm_per_km",
                                          "s_capacity_mva"};
  if (header != expected) {
    throw SchemaError("cable catalog: header must be exactly name,r_ohm_per_km,x_ohm_per_km,s_capacity_mva");
  }
  std::vector<CableSpec> catalog;
  std::size_t lineno = 1;
  while (std::getline(ss, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != expected.size()) {
      throw SchemaError("cable catalog line " + std::to_string(lineno) + ": expected 4 fields");
    }
    const std::string ctx = "cable catalog line " + std::to_string(lineno);
    CableSpec c;
    c.name = fields[0];
    c.r_ohm_per_km = detail::parse_double_or_throw(fields[1], ctx + " r");
    c.x_ohm_per_km = detail::parse_double_or_throw(fields[2], ctx + " x");
    c.s_capacity_mva = detail::parse_double_or_throw(fields[3], ctx + " capacity");
    if (!(c.r_ohm_per_km > 0.0) || !(c.x_ohm_per_km > 0.0) || !(c.s_capacity_mva > 0.0) ||
        !std::isfinite(c.r_ohm_per_km) || !std::isfinite(c.x_ohm_per_km) ||
        !std::isfinite(c.s_capacity_mva)) {
      throw SchemaError(ctx + ": cable parameters must be positive and finite");
    }
    catalog.push_back(std::move(c));
  }
  if (catalog.empty()) throw SchemaError("cable catalog: no cables");
  return catalog;
}

// One reverse-topological pass; every edge carries its child subtree's load.
inline std::map<std::string, EdgeFlow> accumulate_flows(const FeederTree& tree,
                                                        const LoadAssignment& loads) {
  if (tree.edges.size() + 1 != tree.nodes.size()) {
    throw NotRadialError("accumulate_flows: edge count != node count - 1");
  }
  auto children = tree.children();
  std::map<std::string, EdgeFlow> flows;
  // Post-order over the rooted tree.
  struct Frame {
    std::string node;
    std::size_t next = 0;
  };
  std::vector<Frame> stack{{tree.root}};
  std::set<std::string> visited{tree.root};
  std::map<std::string, std::pair<double, double>> subtree;  // node -> (P, Q) incl. own load
  while (!stack.empty()) {
    Frame& f = stack.back();
    auto it = children.find(f.node);
    if (it != children.end() && f.next < it->second.size()) {
      const std::string& c = it->second[f.next++];
      if (!visited.insert(c).second) {
        throw NotRadialError("accumulate_flows: node " + c + " reached twice");
      }
      stack.push_back({c});
      continue;
    }
    auto load = loads.loads.at(f.node);
    double p = load.first, q = load.second;
    if (it != children.end()) {
      for (const auto& c : it->second) {
        p += subtree[c].first;
        q += subtree[c].second;
      }
    }
    subtree[f.node] = {p, q};
    if (f.node != tree.root) {
      flows[f.node] = {p, q, std::hypot(p, q)};
    }
    stack.pop_back();
  }
  if (visited.size() != tree.nodes.size()) {
    throw NotRadialError("accumulate_flows: tree not fully reachable from root");
  }
  return flows;
}

// Algorithm: capacity matrix C_s = c l^T over the ascending-capacity catalog,
// scanned column-major (parallels outer, cables inner); first entry strictly
// above the line MVA wins.
inline CableChoice choose_cable_for(double s_mva, const std::vector<CableSpec>& sorted_catalog,
                                    int l_max, const std::string& edge_name) {
  for (int parallels = 1; parallels <= l_max; ++parallels) {
    for (const auto& cable : sorted_catalog) {
      if (cable.s_capacity_mva * parallels > s_mva) {
        return {cable, parallels};
      }
    }
  }
  throw CapacityExceededError("edge " + edge_name + ": flow " + std::to_string(s_mva) +
                              " MVA exceeds every cable at l_max parallels");
}

inline std::vector<CableSpec> sort_catalog(std::vector<CableSpec> catalog) {
  std::sort(catalog.begin(), catalog.end(), [](const CableSpec& a, const CableSpec& b) {
    return std::tie(a.s_capacity_mva, a.name) < std::tie(b.s_capacity_mva, b.name);
  });
  return catalog;
}

inline std::map<std::string, EdgeSolution> choose_cables(
    const FeederTree& tree, const std::map<std::string, EdgeFlow>& flows,
    const std::vector<CableSpec>& catalog, int l_max, double base_kv) {
  if (catalog.empty()) throw SchemaError("choose_cables: empty catalog");
  if (l_max < 1) throw ConfigError("choose_cables: l_max must be >= 1");
  auto sorted = sort_catalog(catalog);
  const double z_base = base_kv * base_kv / kSBaseMva;
  std::map<std::string, EdgeSolution> out;
  for (const auto& e : tree.edges) {
    const EdgeFlow& f = flows.at(e.child);
    EdgeSolution sol;
    sol.flow = f;
    sol.choice = choose_cable_for(f.s_mva, sorted, l_max, e.parent + "-" + e.child);
    const double length_km = e.length_m / 1000.0;
    sol.r_pu = sol.choice.cable.r_ohm_per_km * length_km / sol.choice.parallels / z_base;
    sol.x_pu = sol.choice.cable.x_ohm_per_km * length_km / sol.choice.parallels / z_base;
    out[e.child] = sol;
  }
  return out;
}

// Root-to-leaf sweep of v_j^2 = v_i^2 - 2(r P + x Q), square roots at output.
inline std::map<std::string, double> solve_voltages(
    const FeederTree& tree, const std::map<std::string, EdgeSolution>& edges, double v0 = 1.0) {
  auto children = tree.children();
  std::map<std::string, double> v2;
  v2[tree.root] = v0 * v0;
  std::vector<std::string> todo{tree.root};
  while (!todo.empty()) {
    std::string i = todo.back();
    todo.pop_back();
    auto it = children.find(i);
    if (it == children.end()) continue;
    for (const auto& j : it->second) {
      const EdgeSolution& e = edges.at(j);
      double drop = 2.0 * (e.r_pu * e.flow.p_mw + e.x_pu * e.flow.q_mvar);
      double vj2 = v2[i] - drop;
      if (vj2 <= 0.0) {
        throw VoltageCollapseError("edge " + i + "-" + j + ": squared voltage fell to " +
                                   std::to_string(vj2));
      }
      v2[j] = vj2;
      todo.push_back(j);
    }
  }
  std::map<std::string, double> v;
  for (const auto& [id, s] : v2) v[id] = std::sqrt(s);
  return v;
}

struct PruneResult {
  FeederTree tree;
  LoadAssignment loads;
  DistFlowSolution solution;
  int prune_iterations = 0;
  bool met_threshold = false;
};

namespace detail {

inline FeederTree drop_leaves(const FeederTree& tree) {
  // Degree-1 nodes of the tree are its leaves; the root stays even when it
  // has a single child.
  std::set<std::string> leaves;
  auto children = tree.children();
  for (const auto& [id, n] : tree.nodes) {
    if (id != tree.root && !children.count(id)) leaves.insert(id);
  }
  FeederTree out;
  out.root = tree.root;
  for (const auto& [id, n] : tree.nodes) {
    if (!leaves.count(id)) out.nodes[id] = n;
  }
  for (const auto& e : tree.edges) {
    if (leaves.count(e.child)) continue;
    out.edges.push_back(e);
    out.parent[e.child] = e.parent;
  }
  return out;
}

}  // namespace detail

// The assign-size-solve loop: rerun load assignment (same seed), cable
// selection, and the voltage sweep; while min v < v_th strip the leaves and
// try again on the smaller tree.
inline PruneResult prune_and_iterate(FeederTree tree, const WeightTable& weights,
                                     double p_total_mw, double q_total_mvar,
                                     const LoadConfig& cfg, const std::vector<CableSpec>& catalog,
                                     int l_max, double base_kv, double v_th, int max_iters) {
  if (!(v_th > 0.0 && v_th < 1.0)) throw ConfigError("prune_and_iterate: v_th must be in (0,1)");
  if (max_iters < 1) throw ConfigError("prune_and_iterate: max_iters must be >= 1");
  PruneResult result;
  for (int iter = 0;; ++iter) {
    Rng rng(cfg.rng_seed);
    auto loads = assign_loads(tree, weights, p_total_mw, q_total_mvar, cfg, rng);
    auto flows = accumulate_flows(tree, loads);
    auto edges = choose_cables(tree, flows, catalog, l_max, base_kv);
    // A collapsed sweep (v^2 <= 0 somewhere) counts as a failed threshold:
    // the tree is simply too deep for its load and pruning continues.
    std::map<std::string, double> v;
    double min_v = 0.0;
    bool collapsed = false;
    try {
      v = solve_voltages(tree, edges, 1.0);
      min_v = 1.0;
      for (const auto& [id, vi] : v) min_v = std::min(min_v, vi);
    } catch (const VoltageCollapseError&) {
      collapsed = true;
    }

    result.tree = tree;
    result.loads = loads;
    result.solution.edges = std::move(edges);
    result.solution.v_pu = std::move(v);
    result.solution.base_kv = base_kv;
    result.solution.v_th = v_th;
    result.solution.min_v = min_v;
    result.prune_iterations = iter;
    for (auto& [id, node] : result.tree.nodes) {
      auto pq = loads.loads.at(id);
      node.p_mw = pq.first;
      node.q_mvar = pq.second;
      node.v_pu = collapsed ? 0.0 : result.solution.v_pu.at(id);
      node.weight = cfg.use_population ? weights.weights.at(id) : 1.0;
    }

    if (min_v >= v_th) {
      result.met_threshold = true;
      return result;
    }
    if (iter + 1 >= max_iters) {
      return result;  // out of iterations; caller sees met_threshold == false
    }
    FeederTree smaller = detail::drop_leaves(tree);
    if (smaller.nodes.size() <= 1) {
      throw ExhaustedError("prune_and_iterate: tree reduced to the root without meeting v_th");
    }
    tree = std::move(smaller);
  }
}

}  // namespace feedergen
