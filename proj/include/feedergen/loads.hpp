#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "feedergen/census.hpp"
#include "feedergen/errors.hpp"
#include "feedergen/partition.hpp"
#include "feedergen/rng.hpp"

namespace feedergen {

struct LoadConfig {
  enum class EpsKind { Uniform, TLocationScale };
  EpsKind eps_kind = EpsKind::Uniform;
  double uniform_lo = 0.0;
  double uniform_hi = 0.0;
  double t_mu = 0.0;
  double t_sigma = 0.1;
  double t_nu = 3.0;
  double zero_load_fraction = 0.0;  // [0, 1)
  std::uint64_t rng_seed = 0;
  bool use_population = true;

  void validate() const {
    if (eps_kind == EpsKind::Uniform && uniform_lo > uniform_hi) {
      throw ConfigError("load config: uniform epsilon requires lo <= hi");
    }
    if (eps_kind == EpsKind::TLocationScale && (!(t_sigma > 0.0) || !(t_nu > 0.0))) {
      throw ConfigError("load config: t-location-scale requires sigma > 0 and nu > 0");
    }
    if (zero_load_fraction < 0.0 || zero_load_fraction >= 1.0) {
      throw ConfigError("load config: zero_load_fraction must be in [0, 1)");
    }
  }

  double draw_epsilon(Rng& rng) const {
    if (eps_kind == EpsKind::Uniform) return rng.uniform(uniform_lo, uniform_hi);
    return t_mu + t_sigma * rng.student_t(t_nu);
  }
};

struct LoadAssignment {
  std::map<std::string, std::pair<double, double>> loads;  // node -> (p_mw, q_mvar)
  double total_p = 0.0;
  double total_q = 0.0;
};

// Root plus floor(fraction * (|nodes|-1)) non-root nodes, drawn uniformly
// without replacement in ascending-id order (partial Fisher-Yates).
inline std::set<std::string> select_zero_load(const FeederTree& tree, const LoadConfig& cfg,
                                              Rng& rng) {
  std::set<std::string> zero{tree.root};
  std::vector<std::string> others;
  for (const auto& [id, n] : tree.nodes) {
    if (id != tree.root) others.push_back(id);
  }
  std::size_t k = static_cast<std::size_t>(
      std::floor(cfg.zero_load_fraction * static_cast<double>(others.size())));
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(others.size() - i));
    std::swap(others[i], others[j]);
    zero.insert(others[i]);
  }
  return zero;
}

// P(n) = P_N (1/n + eps) p_w with one eps draw shared by P and Q; negative
// factors clamp to zero.
inline LoadAssignment raw_allocation(const FeederTree& tree, const WeightTable& weights,
                                     const std::set<std::string>& zero_set,
                                     double p_total_mw, double q_total_mvar,
                                     const LoadConfig& cfg, Rng& rng) {
  std::size_t n_load = 0;
  for (const auto& [id, node] : tree.nodes) {
    if (!zero_set.count(id)) ++n_load;
  }
  if (n_load == 0) throw NoLoadNodesError("raw_allocation: every node is zero-load");

  LoadAssignment out;
  const double inv_n = 1.0 / static_cast<double>(n_load);
  for (const auto& [id, node] : tree.nodes) {
    if (zero_set.count(id)) {
      out.loads[id] = {0.0, 0.0};
      continue;
    }
    double w = cfg.use_population ? weights.weights.at(id) : 1.0;
    double factor = std::max(0.0, inv_n + cfg.draw_epsilon(rng));
    double p = p_total_mw * factor * w;
    double q = q_total_mvar * factor * w;
    out.loads[id] = {p, q};
    out.total_p += p;
    out.total_q += q;
  }
  return out;
}

inline LoadAssignment rescale(LoadAssignment raw, double p_total_mw, double q_total_mvar) {
  if (!(raw.total_p > 0.0)) {
    throw DegenerateAllocationError("rescale: raw real-power allocation sums to zero");
  }
  const double ps = p_total_mw / raw.total_p;
  const double qs = raw.total_q != 0.0 ? q_total_mvar / raw.total_q : 0.0;
  LoadAssignment out;
  for (const auto& [id, pq] : raw.loads) {
    out.loads[id] = {pq.first * ps, pq.second * qs};
    out.total_p += pq.first * ps;
    out.total_q += pq.second * qs;
  }
  return out;
}

inline LoadAssignment assign_loads(const FeederTree& tree, const WeightTable& weights,
                                   double p_total_mw, double q_total_mvar,
                                   const LoadConfig& cfg, Rng& rng) {
  auto zero = select_zero_load(tree, cfg, rng);
  auto raw = raw_allocation(tree, weights, zero, p_total_mw, q_total_mvar, cfg, rng);
  return rescale(std::move(raw), p_total_mw, q_total_mvar);
}

}  // namespace feedergen
