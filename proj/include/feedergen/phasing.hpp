#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "feedergen/distflow.hpp"
#include "feedergen/errors.hpp"
#include "feedergen/loads.hpp"
#include "feedergen/partition.hpp"

namespace feedergen {

enum class Phase : char { ABC = '3', A = 'A', B = 'B', C = 'C' };

struct Lateral {
  int id = 0;
  std::set<std::string> nodes;        // excludes backbone attachment nodes
  std::vector<std::string> edges;     // child ids of member edges
  double p_mw = 0.0;
};

struct BalanceSolution {
  std::vector<int> phase_of_lateral;  // 0=A, 1=B, 2=C, indexed by lateral id
  std::array<double, 3> phase_totals{0.0, 0.0, 0.0};
  double objective = 0.0;
};

struct PhasePlan {
  std::set<std::string> backbone;            // child ids of three-phase edges
  std::map<std::string, Phase> edge_phase;   // child id -> phase
  std::map<std::string, Phase> node_phase;   // node id -> phase (root is ABC)
  std::vector<Lateral> laterals;
  std::array<double, 3> phase_totals{0.0, 0.0, 0.0};
  double objective = 0.0;
};

// Greedy top-K by MVA flow, constrained to stay connected to the root so the
// three-phase trunk is a single subtree.
inline std::set<std::string> select_backbone(const FeederTree& tree,
                                             const std::map<std::string, EdgeSolution>& edges,
                                             double three_phase_fraction) {
  if (three_phase_fraction < 0.0 || three_phase_fraction > 1.0) {
    throw ConfigError("select_backbone: fraction must be in [0, 1]");
  }
  const std::size_t k = static_cast<std::size_t>(
      std::llround(three_phase_fraction * static_cast<double>(tree.edges.size())));
  std::set<std::string> backbone;
  if (k == 0) return backbone;
  auto children = tree.children();
  std::set<std::string> connected{tree.root};
  // candidates: edges whose parent endpoint is already three-phase
  std::set<std::string> candidates;
  auto add_candidates = [&](const std::string& node) {
    auto it = children.find(node);
    if (it == children.end()) return;
    for (const auto& c : it->second) candidates.insert(c);
  };
  add_candidates(tree.root);
  while (backbone.size() < k && !candidates.empty()) {
    std::string best;
    double best_s = -1.0;
    for (const auto& c : candidates) {  // ascending id; ties keep the first
      double s = edges.at(c).flow.s_mva;
      if (s > best_s) {
        best = c;
        best_s = s;
      }
    }
    candidates.erase(best);
    backbone.insert(best);
    connected.insert(best);
    add_candidates(best);
  }
  return backbone;
}

// Connected components of the non-backbone edges; nodes shared with the
// backbone (attachment points) stay with the backbone.
inline std::vector<Lateral> extract_laterals(const FeederTree& tree,
                                             const std::set<std::string>& backbone) {
  std::set<std::string> backbone_nodes{tree.root};
  for (const auto& id : backbone) backbone_nodes.insert(id);

  // Union-find over non-backbone edge child ids keyed by subtree attachment:
  // walking parents, a non-backbone edge joins the component of its parent
  // edge when that edge is also single-phase.
  std::map<std::string, std::string> comp_rep;  // child id -> representative
  std::function<std::string(const std::string&)> find = [&](const std::string& x) {
    auto it = comp_rep.find(x);
    if (it == comp_rep.end() || it->second == x) return x;
    std::string r = find(it->second);
    comp_rep[x] = r;
    return r;
  };
  for (const auto& e : tree.edges) {
    if (backbone.count(e.child)) continue;
    comp_rep.emplace(e.child, e.child);
    if (!backbone_nodes.count(e.parent) && tree.parent.count(e.parent)) {
      // parent node hangs off a single-phase edge; merge components
      comp_rep[find(e.child)] = find(e.parent);
    }
  }
  std::map<std::string, Lateral> by_rep;
  for (const auto& e : tree.edges) {
    if (backbone.count(e.child)) continue;
    Lateral& lat = by_rep[find(e.child)];
    lat.edges.push_back(e.child);
    lat.nodes.insert(e.child);  // child node is never a backbone node here
  }
  std::vector<Lateral> laterals;
  for (auto& [rep, lat] : by_rep) laterals.push_back(std::move(lat));
  // enumerate in ascending minimum-node-id order
  std::sort(laterals.begin(), laterals.end(),
            [](const Lateral& a, const Lateral& b) { return *a.nodes.begin() < *b.nodes.begin(); });
  for (std::size_t i = 0; i < laterals.size(); ++i) laterals[i].id = static_cast<int>(i);
  return laterals;
}

inline void sum_lateral_loads(std::vector<Lateral>& laterals, const FeederTree& tree) {
  for (auto& lat : laterals) {
    lat.p_mw = 0.0;
    for (const auto& n : lat.nodes) lat.p_mw += tree.nodes.at(n).p_mw;
  }
}

namespace detail {

// Objective of a 3-way split is twice the max-min spread.
inline double spread_objective(const std::array<double, 3>& totals) {
  double mx = std::max({totals[0], totals[1], totals[2]});
  double mn = std::min({totals[0], totals[1], totals[2]});
  return 2.0 * (mx - mn);
}

// Lower bound on the final objective from a partial assignment: the max can
// never shrink, and remaining load can lift the min at most to the mean.
inline double balance_bound(const std::array<double, 3>& totals, double remaining, double total) {
  double mx = std::max({totals[0], totals[1], totals[2]});
  double mn = std::min({totals[0], totals[1], totals[2]});
  double final_max = std::max(mx, total / 3.0);
  double final_min = std::min(mn + remaining, total / 3.0);
  return 2.0 * std::max(0.0, final_max - final_min);
}

struct BalanceSearch {
  const std::vector<double>* loads = nullptr;  // in search order
  std::vector<double> suffix;                  // remaining load after index i
  double total = 0.0;
  double best_value = 0.0;
  std::vector<int> best_assign;
  bool value_only = true;
  double target = 0.0;  // phase 2: accept first solution at this value
  bool found = false;
  // Node-visit budget keeps wide instances bounded; small programs (the ones
  // checked exhaustively) finish far below it, so they stay exact.
  long long budget = 4000000;
  bool aborted = false;

  void dfs(std::size_t i, std::array<double, 3>& totals, std::vector<int>& assign) {
    if (found || aborted) return;
    if (--budget < 0) {
      aborted = true;
      return;
    }
    if (i == loads->size()) {
      double v = spread_objective(totals);
      if (value_only) {
        if (v < best_value) {
          best_value = v;
          best_assign = assign;
        }
      } else if (v <= target + 1e-9) {
        best_assign = assign;
        found = true;
      }
      return;
    }
    double bound = balance_bound(totals, suffix[i], total);
    if (value_only) {
      if (bound >= best_value) return;
    } else {
      if (bound > target + 1e-9) return;
    }
    int limit = 3;
    if (value_only) {
      // label symmetry: the first lateral pins phase A, the second at most B
      if (i == 0) limit = 1;
      else if (i == 1) limit = 2;
    }
    for (int ph = 0; ph < limit; ++ph) {
      totals[ph] += (*loads)[i];
      assign.push_back(ph);
      dfs(i + 1, totals, assign);
      assign.pop_back();
      totals[ph] -= (*loads)[i];
      if (found || aborted) return;
    }
  }
};

}  // namespace detail

// Exact optimum of the three-way real-power balancing program by depth-first
// branch and bound. Phase one finds the optimal objective over laterals
// sorted by descending load (greedy longest-processing-time incumbent);
// phase two re-walks in lateral order and keeps the lexicographically
// smallest assignment attaining it (A < B < C).
inline BalanceSolution balance_phases(const std::vector<Lateral>& laterals) {
  if (laterals.empty()) throw ConfigError("balance_phases: no laterals");
  std::vector<double> in_order;
  for (const auto& lat : laterals) in_order.push_back(lat.p_mw);
  const std::size_t n = in_order.size();
  double total = 0.0;
  for (double p : in_order) total += p;

  // phase 1: optimal value on the descending-load ordering
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return in_order[a] != in_order[b] ? in_order[a] > in_order[b] : a < b;
  });
  std::vector<double> sorted_loads;
  for (auto i : order) sorted_loads.push_back(in_order[i]);

  // longest-processing-time incumbent, recorded as an assignment
  std::array<double, 3> greedy_totals{0.0, 0.0, 0.0};
  std::vector<int> greedy_assign;
  for (double p : sorted_loads) {
    int tgt = 0;
    for (int ph = 1; ph < 3; ++ph) {
      if (greedy_totals[ph] < greedy_totals[tgt]) tgt = ph;
    }
    greedy_totals[tgt] += p;
    greedy_assign.push_back(tgt);
  }

  detail::BalanceSearch search1;
  search1.loads = &sorted_loads;
  search1.total = total;
  search1.suffix.assign(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) search1.suffix[i] = search1.suffix[i + 1] + sorted_loads[i];
  search1.best_value = detail::spread_objective(greedy_totals) + 1e-12;
  search1.best_assign = greedy_assign;
  search1.value_only = true;
  {
    std::array<double, 3> totals{0.0, 0.0, 0.0};
    std::vector<int> assign;
    search1.dfs(0, totals, assign);
  }
  std::array<double, 3> best_totals{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) best_totals[search1.best_assign[i]] += sorted_loads[i];
  double optimum = detail::spread_objective(best_totals);

  // undo the descending-load permutation for the fallback assignment
  std::vector<int> fallback(n);
  for (std::size_t i = 0; i < n; ++i) fallback[order[i]] = search1.best_assign[i];

  std::vector<int> chosen;
  if (search1.aborted) {
    chosen = fallback;  // value not proven optimal; keep the best one found
  } else {
    // phase 2: lexicographically smallest optimal assignment in lateral order
    detail::BalanceSearch search2;
    search2.loads = &in_order;
    search2.total = total;
    search2.suffix.assign(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;) search2.suffix[i] = search2.suffix[i + 1] + in_order[i];
    search2.value_only = false;
    search2.target = optimum;
    {
      std::array<double, 3> totals{0.0, 0.0, 0.0};
      std::vector<int> assign;
      search2.dfs(0, totals, assign);
    }
    chosen = search2.found ? search2.best_assign : fallback;
  }

  BalanceSolution sol;
  sol.phase_of_lateral = chosen;
  for (std::size_t i = 0; i < n; ++i) sol.phase_totals[sol.phase_of_lateral[i]] += in_order[i];
  sol.objective = detail::spread_objective(sol.phase_totals);
  return sol;
}

inline PhasePlan apply_phases(const FeederTree& tree, const std::set<std::string>& backbone,
                              const std::vector<Lateral>& laterals, const BalanceSolution& sol) {
  static constexpr std::array<Phase, 3> kPhases{Phase::A, Phase::B, Phase::C};
  PhasePlan plan;
  plan.backbone = backbone;
  plan.laterals = laterals;
  plan.node_phase[tree.root] = Phase::ABC;
  for (const auto& id : backbone) {
    plan.edge_phase[id] = Phase::ABC;
    plan.node_phase[id] = Phase::ABC;
  }
  for (const auto& lat : laterals) {
    Phase ph = kPhases[sol.phase_of_lateral[lat.id]];
    for (const auto& e : lat.edges) plan.edge_phase[e] = ph;
    for (const auto& n : lat.nodes) plan.node_phase[n] = ph;
  }
  // recompute the per-phase totals from the labels and check the solver
  std::array<double, 3> totals{0.0, 0.0, 0.0};
  for (const auto& lat : laterals) {
    for (const auto& n : lat.nodes) {
      totals[sol.phase_of_lateral[lat.id]] += tree.nodes.at(n).p_mw;
    }
  }
  for (int ph = 0; ph < 3; ++ph) {
    if (std::abs(totals[ph] - sol.phase_totals[ph]) > 1e-9 * std::max(1.0, std::abs(totals[ph]))) {
      throw FeederError("apply_phases: per-phase totals disagree with the balancing solution");
    }
  }
  plan.phase_totals = totals;
  plan.objective = sol.objective;
  return plan;
}

inline PhasePlan plan_phases(const FeederTree& tree, const std::map<std::string, EdgeSolution>& edges,
                             double three_phase_fraction) {
  auto backbone = select_backbone(tree, edges, three_phase_fraction);
  auto laterals = extract_laterals(tree, backbone);
  for (auto& lat : laterals) {
    lat.p_mw = 0.0;
    for (const auto& n : lat.nodes) lat.p_mw += tree.nodes.at(n).p_mw;
  }
  if (laterals.empty()) {
    PhasePlan plan;
    plan.backbone = backbone;
    plan.node_phase[tree.root] = Phase::ABC;
    for (const auto& id : backbone) {
      plan.edge_phase[id] = Phase::ABC;
      plan.node_phase[id] = Phase::ABC;
    }
    return plan;
  }
  auto sol = balance_phases(laterals);
  return apply_phases(tree, backbone, laterals, sol);
}

}  // namespace feedergen
