#include <doctest.h>

#include <sstream>

#include "feedergen/census.hpp"
#include "feedergen/rng.hpp"

using namespace feedergen;

namespace {

std::string square_feature(double x0, double y0, double x1, double y1, long long pop,
                           const std::string& id = "") {
  std::ostringstream ss;
  ss << R"({"type":"Feature","properties":{"population":)" << pop;
  if (!id.empty()) ss << R"(,"block_id":")" << id << '"';
  ss << R"(},"geometry":{"type":"Polygon","coordinates":[[)"
     << "[" << x0 << "," << y0 << "],[" << x1 << "," << y0 << "],[" << x1 << "," << y1 << "],["
     << x0 << "," << y1 << "],[" << x0 << "," << y0 << "]"
     << "]]}}";
  return ss.str();
}

std::string collection(const std::vector<std::string>& features) {
  std::string out = R"({"type":"FeatureCollection","features":[)";
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (i) out += ",";
    out += features[i];
  }
  return out + "]}";
}

}  // namespace

TEST_CASE("parse_blocks: unit square") {
  auto blocks = parse_blocks(collection({square_feature(0, 0, 1, 1, 100)}));
  REQUIRE(blocks.size() == 1);
  CHECK(blocks[0].population == 100);
  CHECK(blocks[0].block_id == "0");
  CHECK(blocks[0].rings.size() == 1);
}

TEST_CASE("parse_blocks: 662 features give 662 blocks") {
  std::vector<std::string> features;
  for (int i = 0; i < 662; ++i) {
    double x = (i % 30) * 0.01;
    double y = (i / 30) * 0.01;
    features.push_back(square_feature(x, y, x + 0.01, y + 0.01, i % 50));
  }
  auto blocks = parse_blocks(collection(features));
  CHECK(blocks.size() == 662);
}

TEST_CASE("parse_blocks: missing population names the feature") {
  std::string bad = R"({"type":"Feature","properties":{},"geometry":{"type":"Polygon",
      "coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}})";
  try {
    parse_blocks(collection({square_feature(0, 0, 1, 1, 5), bad}));
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("feature 1") != std::string::npos);
  }
}

TEST_CASE("parse_blocks: unclosed ring is a geometry error") {
  std::string bad = R"({"type":"Feature","properties":{"population":1},
      "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1]]]}})";
  CHECK_THROWS_AS(parse_blocks(collection({bad})), GeometryError);
}

TEST_CASE("parse_blocks: multipolygon population goes to the largest part") {
  std::string mp = R"({"type":"Feature","properties":{"population":80,"block_id":"m"},
      "geometry":{"type":"MultiPolygon","coordinates":[
        [[[0,0],[1,0],[1,1],[0,1],[0,0]]],
        [[[5,5],[9,5],[9,9],[5,9],[5,5]]]
      ]}})";
  auto blocks = parse_blocks(collection({mp}));
  REQUIRE(blocks.size() == 2);
  CHECK(blocks[0].block_id == "m/0");
  CHECK(blocks[0].population == 0);
  CHECK(blocks[1].block_id == "m/1");
  CHECK(blocks[1].population == 80);
}

TEST_CASE("locate_node: inside, outside, boundary tie-break") {
  auto blocks = parse_blocks(collection({square_feature(0, 0, 1, 1, 10, "b1"),
                                         square_feature(1, 0, 2, 1, 20, "b2")}));
  CHECK(locate_node({0.5, 0.5}, blocks) == std::optional<std::string>("b1"));
  CHECK(locate_node({5.0, 5.0}, blocks) == std::nullopt);
  // point on the shared edge lon=1 belongs to the smaller id
  CHECK(locate_node({0.5, 1.0}, blocks) == std::optional<std::string>("b1"));
}

TEST_CASE("locate_node: hole subtracts, hole boundary still counts as inside") {
  std::string donut = R"({"type":"Feature","properties":{"population":7,"block_id":"d"},
      "geometry":{"type":"Polygon","coordinates":[
        [[0,0],[10,0],[10,10],[0,10],[0,0]],
        [[4,4],[6,4],[6,6],[4,6],[4,4]]
      ]}})";
  auto blocks = parse_blocks(collection({donut}));
  CHECK(locate_node({2.0, 2.0}, blocks).has_value());
  CHECK(!locate_node({5.0, 5.0}, blocks).has_value());
  CHECK(locate_node({4.0, 4.0}, blocks).has_value());
}

TEST_CASE("locate_node agrees with a winding-number oracle on a convex fixture") {
  auto blocks = parse_blocks(collection({square_feature(-2, -1, 3, 4, 1, "b")}));
  // winding number for the same square, computed independently
  auto winding_inside = [](const GeoPoint& p) {
    const double x0 = -2, y0 = -1, x1 = 3, y1 = 4;
    return p.lon >= x0 && p.lon <= x1 && p.lat >= y0 && p.lat <= y1;
  };
  Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    GeoPoint p{rng.uniform(-4.0, 6.0), rng.uniform(-4.0, 6.0)};
    CHECK(locate_node(p, blocks).has_value() == winding_inside(p));
  }
}

TEST_CASE("node_weights: single node inherits its block's population share") {
  auto blocks = parse_blocks(collection({square_feature(0, 0, 1, 1, 100, "b1"),
                                         square_feature(1, 0, 2, 1, 24915, "b2")}));
  std::map<std::string, GeoPoint> nodes{{"n", {0.5, 0.5}}};
  auto w = node_weights(nodes, blocks);
  CHECK(w.total_population == 25015);
  CHECK(w.weights.at("n") == doctest::Approx(100.0 / 25015.0).epsilon(1e-12));
}

TEST_CASE("node_weights: two blocks 30/70") {
  auto blocks = parse_blocks(collection({square_feature(0, 0, 1, 1, 30, "b1"),
                                         square_feature(1, 0, 2, 1, 70, "b2")}));
  std::map<std::string, GeoPoint> nodes{{"n1", {0.5, 0.5}}, {"n2", {0.5, 1.5}}};
  auto w = node_weights(nodes, blocks);
  CHECK(w.weights.at("n1") == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(w.weights.at("n2") == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("node_weights: zero population everywhere falls back to ones") {
  auto blocks = parse_blocks(collection({square_feature(0, 0, 1, 1, 0, "b1")}));
  std::map<std::string, GeoPoint> nodes{{"n", {0.5, 0.5}}};
  auto w = node_weights(nodes, blocks);
  CHECK(w.population_ignored);
  CHECK(w.weights.at("n") == 1.0);
}

TEST_CASE("node_weights: empty block list falls back to ones") {
  std::map<std::string, GeoPoint> nodes{{"n", {0.5, 0.5}}};
  auto w = node_weights(nodes, {});
  CHECK(w.population_ignored);
  CHECK(w.weights.at("n") == 1.0);
}

TEST_CASE("node_weights: node outside every block borrows the nearest") {
  auto blocks = parse_blocks(collection({square_feature(0, 0, 1, 1, 10, "b1"),
                                         square_feature(10, 10, 11, 11, 90, "b2")}));
  std::map<std::string, GeoPoint> nodes{{"n", {2.0, 2.0}}};  // outside both, nearer b1
  auto w = node_weights(nodes, blocks);
  CHECK(w.weights.at("n") == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("node_weights: invariant under uniform population scaling") {
  for (int scale : {1, 3, 17}) {
    auto blocks = parse_blocks(collection({square_feature(0, 0, 1, 1, 30LL * scale, "b1"),
                                           square_feature(1, 0, 2, 1, 70LL * scale, "b2")}));
    std::map<std::string, GeoPoint> nodes{{"n", {0.5, 0.5}}};
    auto w = node_weights(nodes, blocks);
    CHECK(w.weights.at("n") == doctest::Approx(0.3).epsilon(1e-12));
  }
}
