#pragma once

#include <cctype>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "feedergen/errors.hpp"
#include "feedergen/geo.hpp"

namespace feedergen {

struct RoadGraph {
  struct Edge {
    std::string id;
    std::string from;
    std::string to;
    double length_m = 0.0;
  };

  bool directed = false;
  std::map<std::string, GeoPoint> nodes;
  std::vector<Edge> edges;
};

enum class RoadFormat { NodeLinkJson, GraphmlXml };

struct Substation {
  std::string id;
  GeoPoint location;
  double p_mw = 0.0;
  double q_mvar = 0.0;
  double base_kv = 0.0;
};

struct SubstationParse {
  std::vector<Substation> substations;
  int dropped_nonpositive = 0;
};

namespace detail {

inline void finalize_edge(RoadGraph& g, RoadGraph::Edge e, bool has_length) {
  auto from_it = g.nodes.find(e.from);
  auto to_it = g.nodes.find(e.to);
  if (from_it == g.nodes.end() || to_it == g.nodes.end()) {
    throw SchemaError("edge " + e.id + " references unknown node \"" +
                      (from_it == g.nodes.end() ? e.from : e.to) + "\"");
  }
  if (!has_length) {
    e.length_m = haversine_m(from_it->second, to_it->second);
  }
  if (e.from != e.to && !(e.length_m > 0.0)) {
    throw SchemaError("edge " + e.id + " has non-positive length");
  }
  g.edges.push_back(std::move(e));
}

inline RoadGraph parse_node_link_json(std::string_view bytes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("road graph JSON: ") + e.what());
  }
  RoadGraph g;
  try {
    g.directed = j.value("directed", false);
    for (const auto& n : j.at("nodes")) {
      std::string id = n.at("id").get<std::string>();
      GeoPoint p{n.at("lat").get<double>(), n.at("lon").get<double>()};
      validate_geo(p, ("node " + id).c_str());
      g.nodes[id] = p;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("road graph nodes: ") + e.what());
  }
  if (g.nodes.empty()) {
    throw EmptyGraphError("road graph has no nodes");
  }
  std::size_t idx = 0;
  for (const auto& ej : j.value("edges", nlohmann::json::array())) {
    RoadGraph::Edge e;
    e.id = "e" + std::to_string(idx++);
    bool has_length = false;
    try {
      e.from = ej.at("from").get<std::string>();
      e.to = ej.at("to").get<std::string>();
      if (ej.contains("length_m") && !ej["length_m"].is_null()) {
        e.length_m = ej["length_m"].get<double>();
        has_length = true;
      }
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError("road graph edge " + e.id + ": " + ex.what());
    }
    finalize_edge(g, std::move(e), has_length);
  }
  return g;
}

// Minimal XML scanner covering the GraphML subset used for road networks:
// <key id attr.name for>, <node id>, <edge source target>, <data key>text</data>.
struct XmlTag {
  std::string name;
  std::map<std::string, std::string> attrs;
  bool closing = false;      // </name>
  bool self_closing = false; // <name/>
};

class XmlScanner {
 public:
  explicit XmlScanner(std::string_view text) : text_(text) {}

  // Returns the next tag, setting `text_before` to the character data that
  // preceded it.
  std::optional<XmlTag> next(std::string* text_before) {
    std::size_t lt = text_.find('<', pos_);
    if (lt == std::string_view::npos) return std::nullopt;
    if (text_before) *text_before = std::string(text_.substr(pos_, lt - pos_));
    if (text_.compare(lt, 4, "<!--") == 0) {
      std::size_t end = text_.find("-->", lt);
      if (end == std::string_view::npos) throw ParseError("graphml: unterminated comment");
      pos_ = end + 3;
      return next(nullptr);
    }
    if (text_.compare(lt, 2, "<?") == 0 || text_.compare(lt, 2, "<!") == 0) {
      std::size_t end = text_.find('>', lt);
      if (end == std::string_view::npos) throw ParseError("graphml: unterminated declaration");
      pos_ = end + 1;
      return next(nullptr);
    }
    std::size_t gt = text_.find('>', lt);
    if (gt == std::string_view::npos) {
      throw ParseError("graphml: unterminated tag near offset " + std::to_string(lt));
    }
    std::string_view body = text_.substr(lt + 1, gt - lt - 1);
    pos_ = gt + 1;
    XmlTag tag;
    if (!body.empty() && body.front() == '/') {
      tag.closing = true;
      body.remove_prefix(1);
    }
    if (!body.empty() && body.back() == '/') {
      tag.self_closing = true;
      body.remove_suffix(1);
    }
    std::size_t i = 0;
    while (i < body.size() && !std::isspace(static_cast<unsigned char>(body[i]))) ++i;
    tag.name = std::string(body.substr(0, i));
    while (i < body.size()) {
      while (i < body.size() && std::isspace(static_cast<unsigned char>(body[i]))) ++i;
      if (i >= body.size()) break;
      std::size_t eq = body.find('=', i);
      if (eq == std::string_view::npos) {
        throw ParseError("graphml: malformed attribute in <" + tag.name + ">");
      }
      std::string key(body.substr(i, eq - i));
      std::size_t q1 = body.find('"', eq);
      if (q1 == std::string_view::npos) {
        throw ParseError("graphml: attribute " + key + " missing quote");
      }
      std::size_t q2 = body.find('"', q1 + 1);
      if (q2 == std::string_view::npos) {
        throw ParseError("graphml: attribute " + key + " unterminated");
      }
      tag.attrs[key] = std::string(body.substr(q1 + 1, q2 - q1 - 1));
      i = q2 + 1;
    }
    return tag;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

inline double parse_double_or_throw(const std::string& s, const std::string& ctx) {
  try {
    std::size_t consumed = 0;
    double v = std::stod(s, &consumed);
    while (consumed < s.size() && std::isspace(static_cast<unsigned char>(s[consumed]))) ++consumed;
    if (consumed != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParseError(ctx + ": non-numeric value \"" + s + "\"");
  }
}

inline RoadGraph parse_graphml(std::string_view bytes) {
  XmlScanner scan(bytes);
  RoadGraph g;
  std::map<std::string, std::string> key_names;  // key id -> attr.name
  std::string cur_node;                          // id of the open <node>
  bool in_node = false;
  bool in_edge = false;
  RoadGraph::Edge cur_edge;
  bool cur_edge_has_length = false;
  std::optional<double> cur_lat, cur_lon;
  std::string cur_data_attr;
  std::size_t edge_idx = 0;
  std::string text;

  auto close_node = [&] {
    if (!cur_lat || !cur_lon) {
      throw SchemaError("graphml node " + cur_node + " missing lat/lon data");
    }
    GeoPoint p{*cur_lat, *cur_lon};
    validate_geo(p, ("node " + cur_node).c_str());
    g.nodes[cur_node] = p;
    in_node = false;
  };
  auto close_edge = [&] {
    finalize_edge(g, cur_edge, cur_edge_has_length);
    in_edge = false;
  };

  while (auto tag = scan.next(&text)) {
    if (!cur_data_attr.empty() && tag->closing && tag->name == "data") {
      if (in_node && cur_data_attr == "lat") {
        cur_lat = parse_double_or_throw(text, "node " + cur_node + " lat");
      } else if (in_node && cur_data_attr == "lon") {
        cur_lon = parse_double_or_throw(text, "node " + cur_node + " lon");
      } else if (in_edge && cur_data_attr == "length_m") {
        cur_edge.length_m = parse_double_or_throw(text, "edge " + cur_edge.id + " length_m");
        cur_edge_has_length = true;
      }
      cur_data_attr.clear();
      continue;
    }
    if (tag->name == "key" && !tag->closing) {
      auto id = tag->attrs.find("id");
      auto nm = tag->attrs.find("attr.name");
      if (id != tag->attrs.end()) {
        key_names[id->second] = nm != tag->attrs.end() ? nm->second : id->second;
      }
    } else if (tag->name == "graph" && !tag->closing) {
      auto ed = tag->attrs.find("edgedefault");
      g.directed = ed != tag->attrs.end() && ed->second == "directed";
    } else if (tag->name == "node") {
      if (!tag->closing) {
        auto id = tag->attrs.find("id");
        if (id == tag->attrs.end()) throw SchemaError("graphml: <node> without id");
        cur_node = id->second;
        cur_lat.reset();
        cur_lon.reset();
        in_node = true;
        if (tag->self_closing) {
          throw SchemaError("graphml node " + cur_node + " missing lat/lon data");
        }
      } else if (in_node) {
        close_node();
      }
    } else if (tag->name == "edge") {
      if (!tag->closing) {
        auto src = tag->attrs.find("source");
        auto dst = tag->attrs.find("target");
        if (src == tag->attrs.end() || dst == tag->attrs.end()) {
          throw SchemaError("graphml: <edge> without source/target");
        }
        cur_edge = RoadGraph::Edge{"e" + std::to_string(edge_idx++), src->second, dst->second, 0.0};
        cur_edge_has_length = false;
        in_edge = true;
        if (tag->self_closing) close_edge();
      } else if (in_edge) {
        close_edge();
      }
    } else if (tag->name == "data" && !tag->closing) {
      auto key = tag->attrs.find("key");
      if (key != tag->attrs.end()) {
        auto mapped = key_names.find(key->second);
        cur_data_attr = mapped != key_names.end() ? mapped->second : key->second;
      }
    }
  }
  if (g.nodes.empty()) {
    throw EmptyGraphError("road graph has no nodes");
  }
  return g;
}

}  // namespace detail

inline RoadGraph parse_road_graph(std::string_view bytes, RoadFormat format) {
  switch (format) {
    case RoadFormat::NodeLinkJson:
      return detail::parse_node_link_json(bytes);
    case RoadFormat::GraphmlXml:
      return detail::parse_graphml(bytes);
  }
  throw ParseError("unknown road graph format");
}

inline std::string serialize_node_link(const RoadGraph& g) {
  nlohmann::json j;
  j["directed"] = g.directed;
  j["nodes"] = nlohmann::json::array();
  for (const auto& [id, p] : g.nodes) {
    j["nodes"].push_back({{"id", id}, {"lat", p.lat}, {"lon", p.lon}});
  }
  j["edges"] = nlohmann::json::array();
  for (const auto& e : g.edges) {
    j["edges"].push_back({{"from", e.from}, {"to", e.to}, {"length_m", e.length_m}});
  }
  return j.dump(2);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim
    std::size_t b = field.find_first_not_of(" \t\r");
    std::size_t e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline Substation validate_substation(Substation s) {
  validate_geo(s.location, ("substation " + s.id).c_str());
  if (!(s.base_kv > 0.0)) {
    throw SchemaError("substation " + s.id + ": base_kv must be > 0");
  }
  return s;
}

}  // namespace detail

// Accepts the canonical CSV (header id,lat,lon,p_mw,q_mvar,base_kv) or a JSON
// array of objects with the same keys. Rows with p_mw <= 0 are dropped and
// counted; only positive-net-real-power substations seed feeders.
inline SubstationParse parse_substations(std::string_view bytes) {
  SubstationParse result;
  std::size_t first = bytes.find_first_not_of(" \t\r\n");
  auto keep_or_drop = [&](Substation s) {
    if (s.p_mw <= 0.0) {
      ++result.dropped_nonpositive;
      return;
    }
    result.substations.push_back(detail::validate_substation(std::move(s)));
  };
  if (first != std::string_view::npos && (bytes[first] == '[' || bytes[first] == '{')) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("substations JSON: ") + e.what());
    }
    if (!j.is_array()) throw SchemaError("substations JSON must be an array");
    for (const auto& row : j) {
      Substation s;
      try {
        s.id = row.at("id").get<std::string>();
        s.location = {row.at("lat").get<double>(), row.at("lon").get<double>()};
        s.p_mw = row.at("p_mw").get<double>();
        s.q_mvar = row.at("q_mvar").get<double>();
        s.base_kv = row.at("base_kv").get<double>();
      } catch (const nlohmann::json::out_of_range& e) {
        throw SchemaError(std::string("substations JSON: ") + e.what());
      } catch (const nlohmann::json::type_error& e) {
        throw ParseError(std::string("substations JSON: ") + e.what());
      }
      keep_or_drop(std::move(s));
    }
    return result;
  }

  std::istringstream ss{std::string(bytes)};
  std::string line;
  if (!std::getline(ss, line)) throw SchemaError("substations CSV: empty file");
  auto header = detail::split_csv_line(line);
  const std::vector<std::string> expected{"id", "lat", "lon", "p_mw", "q_mvar", "base_kv"};
  if (header != expected) {
    throw SchemaError("substations CSV: header must be exactly id,lat,lon,p_mw,q_mvar,base_kv");
  }
  std::size_t lineno = 1;
  while (std::getline(ss, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != expected.size()) {
      throw SchemaError("substations CSV line " + std::to_string(lineno) + ": expected 6 fields, got " +
                        std::to_string(fields.size()));
    }
    const std::string ctx = "substations CSV line " + std::to_string(lineno);
    Substation s;
    s.id = fields[0];
    s.location = {detail::parse_double_or_throw(fields[1], ctx + " lat"),
                  detail::parse_double_or_throw(fields[2], ctx + " lon")};
    s.p_mw = detail::parse_double_or_throw(fields[3], ctx + " p_mw");
    s.q_mvar = detail::parse_double_or_throw(fields[4], ctx + " q_mvar");
    s.base_kv = detail::parse_double_or_throw(fields[5], ctx + " base_kv");
    keep_or_drop(std::move(s));
  }
  return result;
}

}  // namespace feedergen
