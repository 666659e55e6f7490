#include "voxtherm/scene.hpp"

#include <cmath>
#include <set>

#include "voxtherm/error.hpp"

namespace voxtherm {
namespace {

using nlohmann::json;

constexpr double kBoundsTolerance = 1e-9;

const json& require(const json& doc, const char* key, const std::string& where) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw SchemaError(where + ": missing field '" + key + "'");
  }
  return doc.at(key);
}

double number(const json& doc, const char* key, const std::string& where) {
  const json& v = require(doc, key, where);
  if (!v.is_number()) throw SchemaError(where + ": field '" + key + "' must be a number");
  return v.get<double>();
}

std::size_t count(const json& doc, const char* key, const std::string& where) {
  const json& v = require(doc, key, where);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw SchemaError(where + ": field '" + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::array<double, 3> triple(const json& doc, const char* key, const std::string& where) {
  const json& v = require(doc, key, where);
  if (!v.is_array() || v.size() != 3) {
    throw SchemaError(where + ": field '" + key + "' must be an array of 3 numbers");
  }
  std::array<double, 3> out{};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!v[i].is_number()) throw SchemaError(where + ": field '" + key + "' must hold numbers");
    out[i] = v[i].get<double>();
  }
  return out;
}

std::map<std::string, double> number_map(const json& doc, const char* key) {
  std::map<std::string, double> out;
  const json& v = require(doc, key, "scenario");
  if (!v.is_object()) throw SchemaError(std::string("scenario: '") + key + "' must be an object");
  for (const auto& [id, value] : v.items()) {
    if (!value.is_number()) {
      throw SchemaError(std::string("scenario: ") + key + "." + id + " must be a number");
    }
    out[id] = value.get<double>();
  }
  return out;
}

bool is_right_angle(double theta) {
  const double q = theta / 90.0;
  return std::abs(q - std::round(q)) < 1e-9;
}

void validate_component(const Component& c, const GridSpec& grid) {
  const std::string who = "component '" + c.id + "'";
  if (c.id.empty()) throw ValidationError("component with empty id");
  for (double d : c.dims) {
    if (!(d > 0) || !std::isfinite(d)) throw ValidationError(who + ": dimensions must be positive");
  }
  if (!(c.theta >= 0 && c.theta < 360)) {
    throw ValidationError(who + ": orientation " + std::to_string(c.theta) +
                          " outside [0, 360)");
  }
  if (!is_right_angle(c.theta)) {
    throw ValidationError(who + ": orientation " + std::to_string(c.theta) +
                          " is not a multiple of 90 degrees");
  }
  const double lo[3] = {c.pos[0], c.pos[1], c.pos[2]};
  const double hi[3] = {c.pos[0] + c.footprint_x(), c.pos[1] + c.dims[1],
                        c.pos[2] + c.footprint_z()};
  const double room[3] = {grid.room_width, grid.room_height, grid.room_depth};
  for (int a = 0; a < 3; ++a) {
    if (!std::isfinite(lo[a]) || lo[a] < -kBoundsTolerance || hi[a] > room[a] + kBoundsTolerance) {
      throw ValidationError(who + ": outside room");
    }
  }
}

}  // namespace

void GridSpec::validate() const {
  for (std::size_t n : {depth, height, width}) {
    if (n < 8 || n % 8 != 0) {
      throw ValidationError("grid: voxel counts must be >= 8 and divisible by 8, got " +
                            std::to_string(depth) + "x" + std::to_string(height) + "x" +
                            std::to_string(width));
    }
  }
  for (double e : {room_depth, room_height, room_width}) {
    if (!(e > 0) || !std::isfinite(e)) throw ValidationError("grid: room extents must be positive");
  }
}

const char* to_string(ComponentKind kind) {
  switch (kind) {
    case ComponentKind::CabinetSplit: return "cabinet_split";
    case ComponentKind::CracSupply: return "crac_supply";
    case ComponentKind::CracReturn: return "crac_return";
    case ComponentKind::SlottedGrille: return "slotted_grille";
  }
  return "?";
}

ComponentKind parse_component_kind(const std::string& s) {
  if (s == "cabinet_split") return ComponentKind::CabinetSplit;
  if (s == "crac_supply") return ComponentKind::CracSupply;
  if (s == "crac_return") return ComponentKind::CracReturn;
  if (s == "slotted_grille") return ComponentKind::SlottedGrille;
  throw SchemaError("unknown component kind '" + s + "'");
}

double Component::footprint_x() const {
  return static_cast<int>(std::lround(theta / 90.0)) % 2 == 0 ? dims[0] : dims[2];
}

double Component::footprint_z() const {
  return static_cast<int>(std::lround(theta / 90.0)) % 2 == 0 ? dims[2] : dims[0];
}

const Component* Scene::find(const std::string& id) const {
  for (const auto& c : components) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

std::vector<const Component*> Scene::of_kind(ComponentKind kind) const {
  std::vector<const Component*> out;
  for (const auto& c : components) {
    if (c.kind == kind) out.push_back(&c);
  }
  return out;
}

std::vector<std::string> Scene::split_ids() const {
  std::vector<std::string> out;
  for (const auto* c : of_kind(ComponentKind::CabinetSplit)) out.push_back(c->id);
  return out;
}

std::vector<std::string> Scene::crac_ids() const {
  std::vector<std::string> out;
  for (const auto* c : of_kind(ComponentKind::CracSupply)) out.push_back(c->id);
  return out;
}

bool Scene::simulation_eligible() const {
  return !of_kind(ComponentKind::CabinetSplit).empty() &&
         !of_kind(ComponentKind::CracSupply).empty() &&
         !of_kind(ComponentKind::CracReturn).empty() &&
         !of_kind(ComponentKind::SlottedGrille).empty();
}

double Scenario::split_power(const std::string& split_id) const {
  const auto w = workload.find(split_id);
  if (w == workload.end()) throw MissingEntry("scenario has no workload for '" + split_id + "'");
  const auto p = peak_power.find(split_id);
  if (p == peak_power.end()) throw MissingEntry("scenario has no peak_power for '" + split_id + "'");
  return w->second * p->second;
}

Scene scene_from_json(const json& doc) {
  if (!doc.is_object()) throw SchemaError("scene: document must be an object");
  Scene scene;
  const json& room = require(doc, "room", "scene");
  const json& grid = require(doc, "grid", "scene");
  scene.grid.room_depth = number(room, "d", "scene.room");
  scene.grid.room_height = number(room, "h", "scene.room");
  scene.grid.room_width = number(room, "w", "scene.room");
  scene.grid.depth = count(grid, "D", "scene.grid");
  scene.grid.height = count(grid, "H", "scene.grid");
  scene.grid.width = count(grid, "W", "scene.grid");
  scene.grid.validate();

  const json& comps = require(doc, "components", "scene");
  if (!comps.is_array()) throw SchemaError("scene: 'components' must be an array");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const std::string where = "scene.components[" + std::to_string(i) + "]";
    const json& cj = comps[i];
    Component c;
    const json& id = require(cj, "id", where);
    if (!id.is_string()) throw SchemaError(where + ": 'id' must be a string");
    c.id = id.get<std::string>();
    const json& kind = require(cj, "kind", where);
    if (!kind.is_string()) throw SchemaError(where + ": 'kind' must be a string");
    c.kind = parse_component_kind(kind.get<std::string>());
    c.pos = triple(cj, "pos", where);
    c.theta = number(cj, "theta", where);
    c.dims = triple(cj, "dims", where);
    if (cj.contains("crac")) {
      if (!cj["crac"].is_string()) throw SchemaError(where + ": 'crac' must be a string");
      c.crac = cj["crac"].get<std::string>();
    }
    if (!ids.insert(c.id).second) throw ValidationError("duplicate component id '" + c.id + "'");
    validate_component(c, scene.grid);
    scene.components.push_back(std::move(c));
  }

  for (const auto& c : scene.components) {
    if (c.kind != ComponentKind::SlottedGrille && c.kind != ComponentKind::CracReturn) continue;
    if (c.crac.empty()) {
      throw ValidationError("component '" + c.id + "': grilles and returns must name their CRAC");
    }
    const Component* supply = scene.find(c.crac);
    if (supply == nullptr || supply->kind != ComponentKind::CracSupply) {
      throw ValidationError("component '" + c.id + "': CRAC '" + c.crac +
                            "' is not a crac_supply in this scene");
    }
  }
  return scene;
}

Scene parse_scene(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("scene: ") + e.what());
  }
  return scene_from_json(doc);
}

json scene_to_json(const Scene& scene) {
  json doc;
  doc["room"] = {{"d", scene.grid.room_depth}, {"h", scene.grid.room_height},
                 {"w", scene.grid.room_width}};
  doc["grid"] = {{"D", scene.grid.depth}, {"H", scene.grid.height}, {"W", scene.grid.width}};
  json comps = json::array();
  for (const auto& c : scene.components) {
    json cj = {{"id", c.id},
               {"kind", to_string(c.kind)},
               {"pos", c.pos},
               {"theta", c.theta},
               {"dims", c.dims}};
    if (!c.crac.empty()) cj["crac"] = c.crac;
    comps.push_back(std::move(cj));
  }
  doc["components"] = std::move(comps);
  return doc;
}

std::string serialize_scene(const Scene& scene) { return scene_to_json(scene).dump(2) + "\n"; }

Scenario scenario_from_json(const json& doc) {
  if (!doc.is_object()) throw SchemaError("scenario: document must be an object");
  Scenario s;
  s.workload = number_map(doc, "workload");
  s.setpoint = number_map(doc, "setpoint");
  s.fan = number_map(doc, "fan");
  s.peak_power = number_map(doc, "peak_power");
  return s;
}

Scenario parse_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("scenario: ") + e.what());
  }
  return scenario_from_json(doc);
}

json scenario_to_json(const Scenario& s) {
  return {{"workload", s.workload},
          {"setpoint", s.setpoint},
          {"fan", s.fan},
          {"peak_power", s.peak_power}};
}

void validate_scenario(const Scene& scene, const Scenario& scenario,
                       const std::vector<double>& workload_levels) {
  for (const auto& id : scene.split_ids()) {
    const auto w = scenario.workload.find(id);
    if (w == scenario.workload.end()) throw MissingEntry("scenario has no workload for '" + id + "'");
    bool known = false;
    for (double level : workload_levels) known = known || std::abs(level - w->second) < 1e-12;
    if (!known) {
      throw ValidationError("split '" + id + "': workload " + std::to_string(w->second) +
                            " is not a configured level");
    }
    const auto p = scenario.peak_power.find(id);
    if (p == scenario.peak_power.end()) throw MissingEntry("scenario has no peak_power for '" + id + "'");
    if (!(p->second >= 0)) throw ValidationError("split '" + id + "': negative peak power");
  }
  for (const auto& id : scene.crac_ids()) {
    if (!scenario.setpoint.contains(id)) throw MissingEntry("scenario has no setpoint for '" + id + "'");
    const auto f = scenario.fan.find(id);
    if (f == scenario.fan.end()) throw MissingEntry("scenario has no fan speed for '" + id + "'");
    if (!(f->second >= 0 && f->second <= 100)) {
      throw ValidationError("CRAC '" + id + "': fan speed outside [0, 100]");
    }
  }
}

SamplingRanges sampling_ranges_from_json(const json& doc) {
  SamplingRanges r;
  if (doc.contains("setpoint")) {
    r.setpoint_lo = doc["setpoint"].at(0).get<double>();
    r.setpoint_hi = doc["setpoint"].at(1).get<double>();
  }
  if (doc.contains("fan")) {
    r.fan_lo = doc["fan"].at(0).get<double>();
    r.fan_hi = doc["fan"].at(1).get<double>();
  }
  if (doc.contains("peak_power_kw")) r.peak_power_kw = doc["peak_power_kw"].get<double>();
  if (doc.contains("workload_levels")) {
    r.workload_levels = doc["workload_levels"].get<std::vector<double>>();
  }
  return r;
}

json sampling_ranges_to_json(const SamplingRanges& r) {
  return {{"setpoint", {r.setpoint_lo, r.setpoint_hi}},
          {"fan", {r.fan_lo, r.fan_hi}},
          {"peak_power_kw", r.peak_power_kw},
          {"workload_levels", r.workload_levels}};
}

std::vector<double> latin_hypercube_column(std::size_t n, Rng& rng) {
  const auto strata = rng.permutation(n);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = (static_cast<double>(strata[i]) + rng.uniform()) / static_cast<double>(n);
  }
  return out;
}

std::vector<Scenario> sample_scenarios(const Scene& scene, std::size_t n, std::uint64_t seed,
                                       const SamplingRanges& ranges) {
  if (n == 0) throw InvalidRange("sample_scenarios: n must be at least 1");
  if (!(ranges.setpoint_lo < ranges.setpoint_hi)) {
    throw InvalidRange("setpoint interval [" + std::to_string(ranges.setpoint_lo) + ", " +
                       std::to_string(ranges.setpoint_hi) + "] is empty or inverted");
  }
  if (!(ranges.fan_lo < ranges.fan_hi)) {
    throw InvalidRange("fan interval [" + std::to_string(ranges.fan_lo) + ", " +
                       std::to_string(ranges.fan_hi) + "] is empty or inverted");
  }
  if (ranges.fan_lo < 0 || ranges.fan_hi > 100) throw InvalidRange("fan interval outside [0, 100]");
  if (ranges.workload_levels.empty()) throw InvalidRange("no workload levels configured");

  Rng rng(seed);
  std::vector<Scenario> out(n);
  const double levels = static_cast<double>(ranges.workload_levels.size());
  for (const auto& id : scene.split_ids()) {
    const auto column = latin_hypercube_column(n, rng);
    for (std::size_t i = 0; i < n; ++i) {
      const auto bucket = std::min(static_cast<std::size_t>(column[i] * levels),
                                   ranges.workload_levels.size() - 1);
      out[i].workload[id] = ranges.workload_levels[bucket];
      out[i].peak_power[id] = ranges.peak_power_kw;
    }
  }
  for (const auto& id : scene.crac_ids()) {
    const auto setpoints = latin_hypercube_column(n, rng);
    const auto fans = latin_hypercube_column(n, rng);
    for (std::size_t i = 0; i < n; ++i) {
      out[i].setpoint[id] = ranges.setpoint_lo + setpoints[i] * (ranges.setpoint_hi - ranges.setpoint_lo);
      out[i].fan[id] = ranges.fan_lo + fans[i] * (ranges.fan_hi - ranges.fan_lo);
    }
  }
  return out;
}

}  // namespace voxtherm
