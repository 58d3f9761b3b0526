#pragma once

#include <map>
#include <string>
#include <vector>

#include "feedergen/census.hpp"
#include "feedergen/partition.hpp"

namespace feedergen::testutil {

// Build a FeederTree from (parent, child, length_m) triples; node points
// default to the origin unless given.
inline FeederTree make_tree(const std::string& root,
                            const std::vector<std::tuple<std::string, std::string, double>>& edges,
                            const std::map<std::string, GeoPoint>& points = {}) {
  FeederTree t;
  t.root = root;
  t.nodes[root] = {};
  for (const auto& [p, c, len] : edges) {
    t.nodes[p];
    t.nodes[c] = {};
    t.edges.push_back({p, c, len});
    t.parent[c] = p;
  }
  for (const auto& [id, pt] : points) {
    if (t.nodes.count(id)) t.nodes[id].point = pt;
  }
  std::sort(t.edges.begin(), t.edges.end(),
            [](const FeederTree::Edge& a, const FeederTree::Edge& b) { return a.child < b.child; });
  return t;
}

inline WeightTable unit_weights(const FeederTree& t) {
  WeightTable w;
  w.population_ignored = true;
  for (const auto& [id, n] : t.nodes) w.weights[id] = 1.0;
  return w;
}

}  // namespace feedergen::testutil
