#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "support.hpp"
#include "voxtherm/error.hpp"
#include "voxtherm/io.hpp"
#include "voxtherm/scene.hpp"

using namespace voxtherm;

namespace {

nlohmann::json minimal_doc() {
  return nlohmann::json::parse(R"({
    "room": {"d": 8.0, "h": 8.0, "w": 8.0},
    "grid": {"D": 32, "H": 16, "W": 32},
    "components": [
      {"id": "s1", "kind": "cabinet_split", "pos": [1.0, 0.0, 1.0], "theta": 0, "dims": [0.6, 2.0, 1.2]},
      {"id": "c1", "kind": "crac_supply", "pos": [5.0, 0.0, 5.0], "theta": 0, "dims": [1.0, 0.5, 0.5]},
      {"id": "r1", "kind": "crac_return", "pos": [5.0, 2.0, 5.0], "theta": 0, "dims": [1.0, 0.5, 0.5], "crac": "c1"},
      {"id": "g1", "kind": "slotted_grille", "pos": [2.0, 0.0, 3.0], "theta": 0, "dims": [0.5, 0.5, 0.5], "crac": "c1"}
    ]})");
}

}  // namespace

TEST_SUITE("scene") {

TEST_CASE("minimal document parses into four components") {
  const Scene s = scene_from_json(minimal_doc());
  CHECK(s.components.size() == 4);
  CHECK(s.grid.depth == 32);
  CHECK(s.grid.height == 16);
  CHECK(s.grid.width == 32);
  CHECK(s.simulation_eligible());
  CHECK(s.split_ids() == std::vector<std::string>{"s1"});
  CHECK(s.crac_ids() == std::vector<std::string>{"c1"});
}

TEST_CASE("orientation off the right angles is rejected naming the component") {
  auto doc = minimal_doc();
  doc["components"][0]["theta"] = 370;
  try {
    scene_from_json(doc);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("s1") != std::string::npos);
  }
  doc["components"][0]["theta"] = 45;
  CHECK_THROWS_AS(scene_from_json(doc), ValidationError);
}

TEST_CASE("component outside the room is rejected") {
  auto doc = minimal_doc();
  doc["components"][0]["pos"][0] = 9.0;
  try {
    scene_from_json(doc);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("outside room") != std::string::npos);
  }
}

TEST_CASE("schema problems") {
  auto doc = minimal_doc();
  doc.erase("grid");
  CHECK_THROWS_AS(scene_from_json(doc), SchemaError);
  doc = minimal_doc();
  doc["components"][0]["kind"] = "rack";
  CHECK_THROWS_AS(scene_from_json(doc), SchemaError);
  doc = minimal_doc();
  doc["components"][1]["id"] = "s1";
  CHECK_THROWS_AS(scene_from_json(doc), ValidationError);
  doc = minimal_doc();
  doc["components"][3].erase("crac");
  CHECK_THROWS_AS(scene_from_json(doc), ValidationError);
  doc = minimal_doc();
  doc["grid"]["H"] = 12;
  CHECK_THROWS_AS(scene_from_json(doc), ValidationError);
  CHECK_THROWS_AS(parse_scene("{not json"), SchemaError);
}

TEST_CASE("serialize and parse round trip") {
  const Scene s = scene_from_json(minimal_doc());
  CHECK(parse_scene(serialize_scene(s)) == s);
  const Scene ref = parse_scene(io::read_file(vt_test::source_dir() / "data" / "reference_scene.json"));
  CHECK(parse_scene(serialize_scene(ref)) == ref);
  CHECK(ref.split_ids().size() == 6);
  CHECK(ref.crac_ids().size() == 1);
  CHECK(ref.of_kind(ComponentKind::SlottedGrille).size() == 2);
}

TEST_CASE("scenario round trip and validation") {
  const Scene s = scene_from_json(minimal_doc());
  Scenario sc;
  sc.workload["s1"] = 0.6;
  sc.peak_power["s1"] = 2.4;
  sc.setpoint["c1"] = 21.0;
  sc.fan["c1"] = 80.0;
  CHECK_NOTHROW(validate_scenario(s, sc));
  CHECK(parse_scenario(scenario_to_json(sc).dump()) == sc);
  CHECK(sc.split_power("s1") == doctest::Approx(1.44));

  Scenario bad = sc;
  bad.workload["s1"] = 0.5;
  CHECK_THROWS_AS(validate_scenario(s, bad), ValidationError);
  bad = sc;
  bad.fan.clear();
  CHECK_THROWS_AS(validate_scenario(s, bad), MissingEntry);
  bad = sc;
  bad.fan["c1"] = 120;
  CHECK_THROWS_AS(validate_scenario(s, bad), ValidationError);
}

TEST_CASE("three scenarios over one split cover every workload level once") {
  const Scene s = scene_from_json(minimal_doc());
  for (std::uint64_t seed : {0u, 1u, 17u, 12345u}) {
    const auto list = sample_scenarios(s, 3, seed);
    std::vector<double> levels;
    for (const auto& sc : list) levels.push_back(sc.workload.at("s1"));
    std::sort(levels.begin(), levels.end());
    CHECK(levels == std::vector<double>{0.25, 0.60, 0.90});
  }
}

TEST_CASE("single scenario stays inside its ranges") {
  const Scene s = scene_from_json(minimal_doc());
  const auto list = sample_scenarios(s, 1, 9);
  REQUIRE(list.size() == 1);
  const auto& sc = list[0];
  CHECK(sc.setpoint.at("c1") >= 18.0);
  CHECK(sc.setpoint.at("c1") <= 27.0);
  CHECK(sc.fan.at("c1") >= 50.0);
  CHECK(sc.fan.at("c1") <= 100.0);
  CHECK_NOTHROW(validate_scenario(s, sc));
}

TEST_CASE("sampling is a pure function of its arguments") {
  const Scene s = parse_scene(io::read_file(vt_test::source_dir() / "data" / "reference_scene.json"));
  CHECK(sample_scenarios(s, 25, 4) == sample_scenarios(s, 25, 4));
  CHECK_FALSE(sample_scenarios(s, 25, 4) == sample_scenarios(s, 25, 5));
}

TEST_CASE("every sampled axis has one value per stratum") {
  const Scene s = parse_scene(io::read_file(vt_test::source_dir() / "data" / "reference_scene.json"));
  const std::size_t n = 37;
  const SamplingRanges r;
  const auto list = sample_scenarios(s, n, 2024, r);
  auto check_axis = [n](std::vector<double> v, double lo, double hi) {
    std::sort(v.begin(), v.end());
    for (std::size_t k = 0; k < n; ++k) {
      const double u = (v[k] - lo) / (hi - lo);
      CHECK(u >= static_cast<double>(k) / n - 1e-12);
      CHECK(u < static_cast<double>(k + 1) / n + 1e-12);
    }
  };
  std::vector<double> sp, fan;
  for (const auto& sc : list) {
    sp.push_back(sc.setpoint.at("crac"));
    fan.push_back(sc.fan.at("crac"));
  }
  check_axis(sp, r.setpoint_lo, r.setpoint_hi);
  check_axis(fan, r.fan_lo, r.fan_hi);

  Rng rng(3);
  check_axis(latin_hypercube_column(n, rng), 0.0, 1.0);

  // Workload strata: each third covers n/3 strata plus at most two partial ones.
  for (const auto& id : s.split_ids()) {
    std::map<double, int> counts;
    for (const auto& sc : list) ++counts[sc.workload.at(id)];
    for (const auto& [level, c] : counts) {
      CHECK(std::abs(c - static_cast<double>(n) / 3.0) < 2.0);
    }
  }
}

}  // TEST_SUITE
