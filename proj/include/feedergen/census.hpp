#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "feedergen/errors.hpp"
#include "feedergen/geo.hpp"

namespace feedergen {

struct CensusBlock {
  std::string block_id;
  // rings[0] is the outer ring, the rest are holes; rings are closed
  // (first point == last point).
  std::vector<std::vector<GeoPoint>> rings;
  long long population = 0;

  struct BBox {
    double min_lat, max_lat, min_lon, max_lon;
  };
  BBox bbox;
};

struct WeightTable {
  std::map<std::string, double> weights;  // node id -> p_w
  long long total_population = 0;
  bool population_ignored = false;  // all-ones fallback engaged
};

namespace detail {

inline CensusBlock::BBox ring_bbox(const std::vector<std::vector<GeoPoint>>& rings) {
  CensusBlock::BBox b{90.0, -90.0, 180.0, -180.0};
  for (const auto& ring : rings) {
    for (const auto& p : ring) {
      b.min_lat = std::min(b.min_lat, p.lat);
      b.max_lat = std::max(b.max_lat, p.lat);
      b.min_lon = std::min(b.min_lon, p.lon);
      b.max_lon = std::max(b.max_lon, p.lon);
    }
  }
  return b;
}

inline std::vector<GeoPoint> parse_ring(const nlohmann::json& jring, const std::string& ctx) {
  std::vector<GeoPoint> ring;
  for (const auto& coord : jring) {
    if (!coord.is_array() || coord.size() < 2) {
      throw GeometryError(ctx + ": ring coordinate is not a [lon, lat] pair");
    }
    GeoPoint p{coord[1].get<double>(), coord[0].get<double>()};
    validate_geo(p, ctx.c_str());
    ring.push_back(p);
  }
  if (ring.size() < 4 || !(ring.front() == ring.back())) {
    throw GeometryError(ctx + ": ring must be closed with at least 4 points");
  }
  return ring;
}

// Planar shoelace area in degree^2; magnitude only (plate carree).
inline double ring_area(const std::vector<GeoPoint>& ring) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    acc += ring[i].lon * ring[i + 1].lat - ring[i + 1].lon * ring[i].lat;
  }
  return std::abs(acc) / 2.0;
}

inline double polygon_area(const std::vector<std::vector<GeoPoint>>& rings) {
  double a = ring_area(rings[0]);
  for (std::size_t i = 1; i < rings.size(); ++i) a -= ring_area(rings[i]);
  return a;
}

inline bool on_ring_boundary(const GeoPoint& p, const std::vector<GeoPoint>& ring) {
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const GeoPoint& a = ring[i];
    const GeoPoint& b = ring[i + 1];
    double cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
    if (cross != 0.0) continue;
    if (p.lon >= std::min(a.lon, b.lon) && p.lon <= std::max(a.lon, b.lon) &&
        p.lat >= std::min(a.lat, b.lat) && p.lat <= std::max(a.lat, b.lat)) {
      return true;
    }
  }
  return false;
}

inline bool even_odd_inside(const GeoPoint& p, const std::vector<GeoPoint>& ring) {
  bool inside = false;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const GeoPoint& a = ring[i];
    const GeoPoint& b = ring[i + 1];
    if ((a.lat > p.lat) != (b.lat > p.lat)) {
      double x = a.lon + (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat);
      if (p.lon < x) inside = !inside;
    }
  }
  return inside;
}

inline GeoPoint outer_centroid(const CensusBlock& b) {
  const auto& ring = b.rings[0];
  double a2 = 0.0, cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    double w = ring[i].lon * ring[i + 1].lat - ring[i + 1].lon * ring[i].lat;
    a2 += w;
    cx += (ring[i].lon + ring[i + 1].lon) * w;
    cy += (ring[i].lat + ring[i + 1].lat) * w;
  }
  if (a2 == 0.0) return ring[0];  // degenerate ring: fall back to a vertex
  return {cy / (3.0 * a2), cx / (3.0 * a2)};
}

}  // namespace detail

// Parse a GeoJSON FeatureCollection of Polygon/MultiPolygon features carrying
// an integer `population` property. MultiPolygon parts become separate blocks;
// the largest-area part keeps the population, the rest get zero.
inline std::vector<CensusBlock> parse_blocks(std::string_view geojson_bytes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(geojson_bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("census GeoJSON: ") + e.what());
  }
  if (j.value("type", "") != "FeatureCollection" || !j.contains("features")) {
    throw SchemaError("census GeoJSON: expected a FeatureCollection with features");
  }
  std::vector<CensusBlock> blocks;
  std::size_t fidx = 0;
  for (const auto& feature : j["features"]) {
    const std::string ctx = "feature " + std::to_string(fidx);
    const auto& props = feature.value("properties", nlohmann::json::object());
    if (!props.contains("population")) {
      throw SchemaError("census GeoJSON " + ctx + ": missing population property");
    }
    long long pop = props["population"].get<long long>();
    if (pop < 0) throw SchemaError("census GeoJSON " + ctx + ": negative population");
    std::string base_id =
        props.contains("block_id") ? props["block_id"].get<std::string>() : std::to_string(fidx);
    const auto& geom = feature.at("geometry");
    const std::string gtype = geom.value("type", "");
    if (gtype == "Polygon") {
      CensusBlock b;
      b.block_id = base_id;
      for (const auto& jring : geom.at("coordinates")) {
        b.rings.push_back(detail::parse_ring(jring, ctx));
      }
      if (b.rings.empty()) throw GeometryError("census GeoJSON " + ctx + ": polygon with no rings");
      b.population = pop;
      b.bbox = detail::ring_bbox(b.rings);
      blocks.push_back(std::move(b));
    } else if (gtype == "MultiPolygon") {
      std::vector<CensusBlock> parts;
      for (const auto& jpoly : geom.at("coordinates")) {
        CensusBlock b;
        b.block_id = base_id + "/" + std::to_string(parts.size());
        for (const auto& jring : jpoly) {
          b.rings.push_back(detail::parse_ring(jring, ctx));
        }
        if (b.rings.empty()) throw GeometryError("census GeoJSON " + ctx + ": empty multipolygon part");
        b.bbox = detail::ring_bbox(b.rings);
        parts.push_back(std::move(b));
      }
      if (parts.empty()) throw GeometryError("census GeoJSON " + ctx + ": multipolygon with no parts");
      std::size_t largest = 0;
      for (std::size_t i = 1; i < parts.size(); ++i) {
        if (detail::polygon_area(parts[i].rings) > detail::polygon_area(parts[largest].rings)) {
          largest = i;
        }
      }
      parts[largest].population = pop;
      for (auto& b : parts) blocks.push_back(std::move(b));
    } else {
      throw SchemaError("census GeoJSON " + ctx + ": unsupported geometry type \"" + gtype + "\"");
    }
    ++fidx;
  }
  return blocks;
}

inline bool block_contains(const CensusBlock& b, const GeoPoint& p) {
  if (p.lat < b.bbox.min_lat || p.lat > b.bbox.max_lat || p.lon < b.bbox.min_lon ||
      p.lon > b.bbox.max_lon) {
    return false;
  }
  for (const auto& ring : b.rings) {
    if (detail::on_ring_boundary(p, ring)) return true;  // boundary counts as inside
  }
  int crossings = 0;
  for (const auto& ring : b.rings) {
    if (detail::even_odd_inside(p, ring)) ++crossings;
  }
  return crossings % 2 == 1;
}

// Even-odd point-in-polygon lookup; ties go to the smallest block_id.
inline std::optional<std::string> locate_node(const GeoPoint& p,
                                              const std::vector<CensusBlock>& blocks) {
  std::optional<std::string> best;
  for (const auto& b : blocks) {
    if (!block_contains(b, p)) continue;
    if (!best || b.block_id < *best) best = b.block_id;
  }
  return best;
}

// Population weight per node: m(block of n) / total population over all
// blocks. Nodes outside every polygon borrow the nearest block by centroid
// distance; an empty or zero-population block set degrades to all-ones.
inline WeightTable node_weights(const std::map<std::string, GeoPoint>& tree_nodes,
                                const std::vector<CensusBlock>& blocks) {
  WeightTable table;
  for (const auto& b : blocks) table.total_population += b.population;
  if (blocks.empty() || table.total_population == 0) {
    table.population_ignored = true;
    for (const auto& [id, p] : tree_nodes) table.weights[id] = 1.0;
    return table;
  }
  std::map<std::string, const CensusBlock*> by_id;
  std::vector<std::pair<GeoPoint, const CensusBlock*>> centroids;
  for (const auto& b : blocks) {
    by_id[b.block_id] = &b;
    centroids.push_back({detail::outer_centroid(b), &b});
  }
  for (const auto& [id, p] : tree_nodes) {
    const CensusBlock* home = nullptr;
    if (auto bid = locate_node(p, blocks)) {
      home = by_id.at(*bid);
    } else {
      double best_d = 0.0;
      for (const auto& [c, b] : centroids) {
        double d = haversine_m(p, c);
        if (!home || d < best_d || (d == best_d && b->block_id < home->block_id)) {
          home = b;
          best_d = d;
        }
      }
    }
    table.weights[id] =
        static_cast<double>(home->population) / static_cast<double>(table.total_population);
  }
  return table;
}

}  // namespace feedergen
