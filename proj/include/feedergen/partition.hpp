#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "feedergen/errors.hpp"
#include "feedergen/geo.hpp"
#include "feedergen/road.hpp"

namespace feedergen {

struct VoronoiLabeling {
  std::vector<std::string> sites;                  // substation ids, sorted
  std::map<std::string, std::string> assignment;   // node -> substation id
  std::set<std::string> cross_edges;               // edge ids spanning two cells
};

struct Subgraph {
  std::set<std::string> nodes;
  std::vector<RoadGraph::Edge> edges;
};

struct SubgraphSet {
  std::map<std::string, Subgraph> subgraphs;  // substation id -> subgraph
  std::set<std::string> isolated;
};

struct FeederTree {
  struct Node {
    GeoPoint point;
    double weight = 1.0;
    double p_mw = 0.0;
    double q_mvar = 0.0;
    double v_pu = 0.0;
  };
  struct Edge {
    std::string parent;
    std::string child;
    double length_m = 0.0;
  };

  std::string root;
  std::map<std::string, Node> nodes;
  std::vector<Edge> edges;  // sorted by child id
  std::map<std::string, std::string> parent;

  std::map<std::string, std::vector<std::string>> children() const {
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& e : edges) out[e.parent].push_back(e.child);
    return out;
  }
};

inline VoronoiLabeling voronoi_label(const RoadGraph& g, const std::vector<Substation>& subs) {
  if (subs.empty()) throw EmptyGraphError("voronoi: no substations");
  if (g.nodes.empty()) throw EmptyGraphError("voronoi: empty graph");
  VoronoiLabeling lab;
  std::vector<const Substation*> sorted;
  for (const auto& s : subs) sorted.push_back(&s);
  std::sort(sorted.begin(), sorted.end(),
            [](const Substation* a, const Substation* b) { return a->id < b->id; });
  for (const auto* s : sorted) lab.sites.push_back(s->id);
  for (const auto& [id, p] : g.nodes) {
    std::string best;
    double best_d = 0.0;
    for (const auto* s : sorted) {
      double d = haversine_m(p, s->location);
      if (best.empty() || d < best_d) {  // ties keep the lexicographically first id
        best = s->id;
        best_d = d;
      }
    }
    lab.assignment[id] = best;
  }
  for (const auto& e : g.edges) {
    if (lab.assignment.at(e.from) != lab.assignment.at(e.to)) {
      lab.cross_edges.insert(e.id);
    }
  }
  return lab;
}

namespace detail {

// Iterative Tarjan SCC over string node ids. Returns component index per node.
inline std::map<std::string, int> tarjan_scc(
    const std::set<std::string>& nodes,
    const std::map<std::string, std::vector<std::string>>& adj) {
  std::map<std::string, int> index, lowlink, comp;
  std::vector<std::string> stack;
  std::set<std::string> on_stack;
  int next_index = 0;
  int next_comp = 0;

  struct Frame {
    std::string node;
    std::size_t child = 0;
  };
  for (const auto& start : nodes) {
    if (index.count(start)) continue;
    std::vector<Frame> frames{{start}};
    while (!frames.empty()) {
      Frame& f = frames.back();
      const std::string& v = f.node;
      if (f.child == 0) {
        index[v] = lowlink[v] = next_index++;
        stack.push_back(v);
        on_stack.insert(v);
      }
      bool descended = false;
      auto it = adj.find(v);
      if (it != adj.end()) {
        while (f.child < it->second.size()) {
          const std::string& w = it->second[f.child++];
          if (!index.count(w)) {
            frames.push_back({w});
            descended = true;
            break;
          }
          if (on_stack.count(w)) {
            lowlink[v] = std::min(lowlink[v], index[w]);
          }
        }
      }
      if (descended) continue;
      if (lowlink[v] == index[v]) {
        int c = next_comp++;
        while (true) {
          std::string w = stack.back();
          stack.pop_back();
          on_stack.erase(w);
          comp[w] = c;
          if (w == v) break;
        }
      }
      std::string finished = v;
      frames.pop_back();
      if (!frames.empty()) {
        lowlink[frames.back().node] =
            std::min(lowlink[frames.back().node], lowlink[finished]);
      }
    }
  }
  return comp;
}

inline std::map<std::string, int> undirected_components(
    const std::set<std::string>& nodes,
    const std::map<std::string, std::vector<std::string>>& adj) {
  std::map<std::string, int> comp;
  int next = 0;
  for (const auto& start : nodes) {
    if (comp.count(start)) continue;
    std::vector<std::string> todo{start};
    comp[start] = next;
    while (!todo.empty()) {
      std::string v = todo.back();
      todo.pop_back();
      auto it = adj.find(v);
      if (it == adj.end()) continue;
      for (const auto& w : it->second) {
        if (!comp.count(w)) {
          comp[w] = next;
          todo.push_back(w);
        }
      }
    }
    ++next;
  }
  return comp;
}

}  // namespace detail

// Induce one subgraph per Voronoi cell (cross edges removed), keep the
// largest strongly/weakly connected component depending on directedness,
// and report the rest as isolated.
inline SubgraphSet split_subgraphs(const RoadGraph& g, const VoronoiLabeling& lab) {
  SubgraphSet out;
  for (const auto& site : lab.sites) out.subgraphs[site];  // EmptyCellError checked below

  std::map<std::string, std::set<std::string>> cell_nodes;
  for (const auto& [node, site] : lab.assignment) cell_nodes[site].insert(node);
  for (const auto& site : lab.sites) {
    if (!cell_nodes.count(site) || cell_nodes[site].empty()) {
      throw EmptyCellError("voronoi cell for substation " + site + " has no nodes");
    }
  }

  for (const auto& site : lab.sites) {
    const auto& members = cell_nodes[site];
    std::vector<const RoadGraph::Edge*> induced;
    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& e : g.edges) {
      if (!members.count(e.from) || !members.count(e.to)) continue;
      induced.push_back(&e);
      if (g.directed) {
        adj[e.from].push_back(e.to);
      } else {
        adj[e.from].push_back(e.to);
        adj[e.to].push_back(e.from);
      }
    }
    auto comp = g.directed ? detail::tarjan_scc(members, adj)
                           : detail::undirected_components(members, adj);
    // Pick the largest component; ties by smallest contained node id.
    std::map<int, std::set<std::string>> by_comp;
    for (const auto& [node, c] : comp) by_comp[c].insert(node);
    const std::set<std::string>* best = nullptr;
    for (const auto& [c, nodes] : by_comp) {
      if (!best || nodes.size() > best->size() ||
          (nodes.size() == best->size() && *nodes.begin() < *best->begin())) {
        best = &nodes;
      }
    }
    Subgraph& sg = out.subgraphs[site];
    sg.nodes = *best;
    for (const auto* e : induced) {
      if (sg.nodes.count(e->from) && sg.nodes.count(e->to)) sg.edges.push_back(*e);
    }
    for (const auto& n : members) {
      if (!sg.nodes.count(n)) out.isolated.insert(n);
    }
  }
  return out;
}

// Attach isolated nodes to subgraphs: repeated passes of the adjacency rule
// (membership frozen per pass), then a nearest-node fallback for anything
// still stranded, so the isolated set always empties.
inline SubgraphSet connect_isolated(SubgraphSet s, const RoadGraph& g) {
  // Undirected adjacency with minimum edge length per neighbor pair.
  std::map<std::string, std::map<std::string, double>> adj;
  for (const auto& e : g.edges) {
    if (e.from == e.to) continue;
    auto upd = [&](const std::string& a, const std::string& b) {
      auto [it, inserted] = adj[a].emplace(b, e.length_m);
      if (!inserted && e.length_m < it->second) it->second = e.length_m;
    };
    upd(e.from, e.to);
    upd(e.to, e.from);
  }

  auto membership = [&]() {
    std::map<std::string, std::string> m;
    for (const auto& [site, sg] : s.subgraphs) {
      for (const auto& n : sg.nodes) m[n] = site;
    }
    return m;
  };

  std::size_t syn = 0;
  while (!s.isolated.empty()) {
    auto member = membership();
    bool progress = false;
    std::vector<std::string> pending(s.isolated.begin(), s.isolated.end());
    for (const auto& i : pending) {
      auto ai = adj.find(i);
      if (ai == adj.end()) continue;
      for (const auto& [a, len] : ai->second) {  // ascending neighbor id
        auto m = member.find(a);
        if (m == member.end()) continue;
        Subgraph& sg = s.subgraphs[m->second];
        sg.nodes.insert(i);
        sg.edges.push_back({"iso" + std::to_string(syn++), a, i, len});
        s.isolated.erase(i);
        progress = true;
        break;
      }
    }
    if (progress) continue;
    // Fixpoint reached with stragglers: attach each to its nearest subgraph
    // node by great-circle distance.
    for (const auto& i : std::vector<std::string>(s.isolated.begin(), s.isolated.end())) {
      const GeoPoint& pi = g.nodes.at(i);
      std::string best_site, best_node;
      double best_d = 0.0;
      for (const auto& [site, sg] : s.subgraphs) {
        for (const auto& n : sg.nodes) {
          double d = haversine_m(pi, g.nodes.at(n));
          if (best_node.empty() || d < best_d || (d == best_d && n < best_node)) {
            best_site = site;
            best_node = n;
            best_d = d;
          }
        }
      }
      Subgraph& sg = s.subgraphs[best_site];
      sg.nodes.insert(i);
      sg.edges.push_back({"syn" + std::to_string(syn++), best_node, i, best_d});
      s.isolated.erase(i);
    }
  }
  return s;
}

namespace detail {

class UnionFind {
 public:
  int add(const std::string& id) {
    auto [it, inserted] = index_.emplace(id, static_cast<int>(parent_.size()));
    if (inserted) {
      parent_.push_back(it->second);
      rank_.push_back(0);
    }
    return it->second;
  }
  int find(int i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
  }

 private:
  std::map<std::string, int> index_;
  std::vector<int> parent_;
  std::vector<int> rank_;
};

}  // namespace detail

// Kruskal MST over the subgraph, re-rooted at `root`. Self-loops dropped,
// parallel edges collapsed to the minimum length, ties broken by
// (length, from, to) after endpoint normalization.
inline FeederTree mst_reduce(const std::map<std::string, GeoPoint>& nodes,
                             const std::vector<RoadGraph::Edge>& edges,
                             const std::string& root) {
  if (!nodes.count(root)) throw DisconnectedError("mst: root " + root + " not in node set");

  std::map<std::pair<std::string, std::string>, double> collapsed;
  for (const auto& e : edges) {
    if (e.from == e.to) continue;
    auto key = e.from < e.to ? std::make_pair(e.from, e.to) : std::make_pair(e.to, e.from);
    auto [it, inserted] = collapsed.emplace(key, e.length_m);
    if (!inserted && e.length_m < it->second) it->second = e.length_m;
  }
  struct Cand {
    double length;
    std::string from, to;
  };
  std::vector<Cand> cands;
  for (const auto& [key, len] : collapsed) cands.push_back({len, key.first, key.second});
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    return std::tie(a.length, a.from, a.to) < std::tie(b.length, b.from, b.to);
  });

  detail::UnionFind uf;
  for (const auto& [id, p] : nodes) uf.add(id);
  std::map<std::string, std::vector<std::pair<std::string, double>>> tree_adj;
  std::size_t taken = 0;
  for (const auto& c : cands) {
    if (uf.unite(uf.add(c.from), uf.add(c.to))) {
      tree_adj[c.from].push_back({c.to, c.length});
      tree_adj[c.to].push_back({c.from, c.length});
      ++taken;
    }
  }
  if (taken + 1 != nodes.size()) {
    throw DisconnectedError("mst: subgraph is not connected (" + std::to_string(nodes.size()) +
                            " nodes, " + std::to_string(taken) + " tree edges)");
  }

  FeederTree tree;
  tree.root = root;
  for (const auto& [id, p] : nodes) tree.nodes[id] = {p};
  std::vector<std::string> todo{root};
  std::set<std::string> seen{root};
  while (!todo.empty()) {
    std::string v = todo.back();
    todo.pop_back();
    for (const auto& [w, len] : tree_adj[v]) {
      if (seen.insert(w).second) {
        tree.parent[w] = v;
        tree.edges.push_back({v, w, len});
        todo.push_back(w);
      }
    }
  }
  std::sort(tree.edges.begin(), tree.edges.end(),
            [](const FeederTree::Edge& a, const FeederTree::Edge& b) { return a.child < b.child; });
  return tree;
}

inline std::string pick_root(const std::map<std::string, GeoPoint>& sub_nodes,
                             const Substation& sub) {
  if (sub_nodes.empty()) throw EmptyCellError("pick_root: empty node set for " + sub.id);
  std::string best;
  double best_d = 0.0;
  for (const auto& [id, p] : sub_nodes) {  // ascending id; ties keep the first
    double d = haversine_m(p, sub.location);
    if (best.empty() || d < best_d) {
      best = id;
      best_d = d;
    }
  }
  return best;
}

}  // namespace feedergen
