#include <doctest.h>

#include <cmath>

#include "feedergen/geo.hpp"
#include "feedergen/rng.hpp"
#include "feedergen/road.hpp"

using namespace feedergen;

TEST_CASE("haversine identity and quarter meridian") {
  GeoPoint a{12.5, -80.25};
  CHECK(haversine_m(a, a) == 0.0);
  // a quarter of a great circle is pi/2 * R
  double quarter = haversine_m({0.0, 0.0}, {0.0, 90.0});
  CHECK(std::abs(quarter - 0.5 * M_PI * kEarthRadiusM) < 1e-3);
}

TEST_CASE("haversine symmetry and triangle inequality on random points") {
  Rng rng(42);
  for (int i = 0; i < 200; ++i) {
    GeoPoint a{rng.uniform(-89.0, 89.0), rng.uniform(-180.0, 180.0)};
    GeoPoint b{rng.uniform(-89.0, 89.0), rng.uniform(-180.0, 180.0)};
    GeoPoint c{rng.uniform(-89.0, 89.0), rng.uniform(-180.0, 180.0)};
    CHECK(haversine_m(a, b) == doctest::Approx(haversine_m(b, a)).epsilon(1e-12));
    double ab = haversine_m(a, b), bc = haversine_m(b, c), ac = haversine_m(a, c);
    CHECK(ac <= (ab + bc) * (1.0 + 1e-6));
  }
}

TEST_CASE("node-link json parse: explicit length passthrough") {
  const char* doc = R"({"directed": false,
    "nodes": [{"id":"a","lat":0.0,"lon":0.0},{"id":"b","lat":0.0,"lon":0.001}],
    "edges": [{"from":"a","to":"b","length_m":100.0}]})";
  auto g = parse_road_graph(doc, RoadFormat::NodeLinkJson);
  CHECK(g.nodes.size() == 2);
  REQUIRE(g.edges.size() == 1);
  CHECK(g.edges[0].length_m == 100.0);
}

TEST_CASE("node-link json parse: missing length falls back to haversine") {
  const char* doc = R"({"directed": false,
    "nodes": [{"id":"a","lat":0.0,"lon":0.0},{"id":"b","lat":0.0,"lon":0.001}],
    "edges": [{"from":"a","to":"b"}]})";
  auto g = parse_road_graph(doc, RoadFormat::NodeLinkJson);
  REQUIRE(g.edges.size() == 1);
  CHECK(g.edges[0].length_m == doctest::Approx(111.195).epsilon(1e-4));
}

TEST_CASE("node-link json parse errors") {
  CHECK_THROWS_AS(parse_road_graph("{not json", RoadFormat::NodeLinkJson), ParseError);
  CHECK_THROWS_AS(parse_road_graph(R"({"nodes":[],"edges":[]})", RoadFormat::NodeLinkJson),
                  EmptyGraphError);
  const char* bad_edge = R"({"nodes":[{"id":"a","lat":0,"lon":0}],
                             "edges":[{"from":"a","to":"zzz"}]})";
  CHECK_THROWS_AS(parse_road_graph(bad_edge, RoadFormat::NodeLinkJson), SchemaError);
  const char* bad_coord = R"({"nodes":[{"id":"a","lat":95.0,"lon":0}],"edges":[]})";
  CHECK_THROWS_AS(parse_road_graph(bad_coord, RoadFormat::NodeLinkJson), ParseError);
}

TEST_CASE("round trip preserves counts and total length exactly") {
  const char* doc = R"({"directed": true,
    "nodes": [{"id":"a","lat":33.34,"lon":-111.67},{"id":"b","lat":33.35,"lon":-111.66},
              {"id":"c","lat":33.36,"lon":-111.65}],
    "edges": [{"from":"a","to":"b"},{"from":"b","to":"c","length_m":1234.5},
              {"from":"c","to":"a","length_m":77.25}]})";
  auto g1 = parse_road_graph(doc, RoadFormat::NodeLinkJson);
  auto g2 = parse_road_graph(serialize_node_link(g1), RoadFormat::NodeLinkJson);
  CHECK(g2.nodes.size() == g1.nodes.size());
  CHECK(g2.edges.size() == g1.edges.size());
  double t1 = 0, t2 = 0;
  for (const auto& e : g1.edges) t1 += e.length_m;
  for (const auto& e : g2.edges) t2 += e.length_m;
  CHECK(t1 == t2);
  CHECK(g2.directed == g1.directed);
}

TEST_CASE("graphml parse") {
  const char* doc = R"(<?xml version="1.0"?>
<graphml>
  <key id="d0" attr.name="lat" for="node"/>
  <key id="d1" attr.name="lon" for="node"/>
  <key id="d2" attr.name="length_m" for="edge"/>
  <graph edgedefault="directed">
    <node id="a"><data key="d0">33.0</data><data key="d1">-111.0</data></node>
    <node id="b"><data key="d0">33.01</data><data key="d1">-111.0</data></node>
    <edge source="a" target="b"><data key="d2">500.5</data></edge>
    <edge source="b" target="a"/>
  </graph>
</graphml>)";
  auto g = parse_road_graph(doc, RoadFormat::GraphmlXml);
  CHECK(g.directed);
  CHECK(g.nodes.size() == 2);
  REQUIRE(g.edges.size() == 2);
  CHECK(g.edges[0].length_m == 500.5);
  // second edge has no length: haversine over 0.01 deg latitude
  CHECK(g.edges[1].length_m == doctest::Approx(1111.949).epsilon(1e-4));
  CHECK_THROWS_AS(parse_road_graph("<graphml><graph></graph></graphml>", RoadFormat::GraphmlXml),
                  EmptyGraphError);
}

TEST_CASE("substation csv parse keeps positive rows, drops the rest") {
  const char* csv =
      "id,lat,lon,p_mw,q_mvar,base_kv\n"
      "s1,33.3420,-111.6739,40.47,11.14,12.47\n"
      "s2,33.3376,-111.5900,55.07,8.51,12.47\n"
      "s3,33.30,-111.60,-5,1.0,12.47\n";
  auto r = parse_substations(csv);
  REQUIRE(r.substations.size() == 2);
  CHECK(r.dropped_nonpositive == 1);
  CHECK(r.substations[0].id == "s1");
  CHECK(r.substations[0].p_mw == 40.47);
  CHECK(r.substations[0].q_mvar == 11.14);
  CHECK(r.substations[1].p_mw == 55.07);
  CHECK(r.substations[1].q_mvar == 8.51);
}

TEST_CASE("substation csv schema errors") {
  CHECK_THROWS_AS(parse_substations("id,lat,lon,p_mw,q_mvar\na,0,0,1,0\n"), SchemaError);
  CHECK_THROWS_AS(
      parse_substations("id,lat,lon,p_mw,q_mvar,base_kv\na,0,0,abc,0,12.47\n"), ParseError);
}

TEST_CASE("substation json parse") {
  const char* doc = R"([{"id":"s1","lat":33.0,"lon":-111.0,"p_mw":10.0,"q_mvar":2.0,"base_kv":12.47},
                       {"id":"s2","lat":33.1,"lon":-111.1,"p_mw":0.0,"q_mvar":0.0,"base_kv":12.47}])";
  auto r = parse_substations(doc);
  REQUIRE(r.substations.size() == 1);
  CHECK(r.dropped_nonpositive == 1);
  CHECK(r.substations[0].id == "s1");
}
