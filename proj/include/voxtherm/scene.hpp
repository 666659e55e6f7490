#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "voxtherm/random.hpp"

namespace voxtherm {

/// Voxel grid over the room. Axis convention: depth (D) runs along scene z,
/// height (H) along y, width (W) along x.
struct GridSpec {
  std::size_t depth = 0;   // D
  std::size_t height = 0;  // H
  std::size_t width = 0;   // W
  double room_depth = 0;   // meters
  double room_height = 0;
  double room_width = 0;

  double edge_d() const { return room_depth / static_cast<double>(depth); }
  double edge_h() const { return room_height / static_cast<double>(height); }
  double edge_w() const { return room_width / static_cast<double>(width); }
  double voxel_volume() const { return edge_d() * edge_h() * edge_w(); }
  std::size_t cells() const { return depth * height * width; }

  /// Throws ValidationError unless every voxel count is a positive multiple
  /// of 8 and every extent is positive.
  void validate() const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

enum class ComponentKind { CabinetSplit, CracSupply, CracReturn, SlottedGrille };

const char* to_string(ComponentKind kind);
ComponentKind parse_component_kind(const std::string& s);

struct Component {
  std::string id;
  ComponentKind kind = ComponentKind::CabinetSplit;
  /// Minimum corner of the rotated, axis-aligned footprint, meters.
  std::array<double, 3> pos{};  // x, y, z
  double theta = 0;             // degrees, multiple of 90
  std::array<double, 3> dims{};  // w (along x), h (along y), d (along z)
  /// Feeding CRAC (its supply id) for grilles and returns.
  std::string crac;

  double volume() const { return dims[0] * dims[1] * dims[2]; }
  /// Extents along x and z after right-angle rotation.
  double footprint_x() const;
  double footprint_z() const;

  friend bool operator==(const Component&, const Component&) = default;
};

struct Scene {
  GridSpec grid;
  std::vector<Component> components;

  const Component* find(const std::string& id) const;
  std::vector<const Component*> of_kind(ComponentKind kind) const;
  /// Ids of every CabinetSplit, in scene order.
  std::vector<std::string> split_ids() const;
  /// Ids of every CracSupply, in scene order. A CRAC is identified by its supply.
  std::vector<std::string> crac_ids() const;
  /// True when at least one of each component kind is present.
  bool simulation_eligible() const;

  friend bool operator==(const Scene&, const Scene&) = default;
};

/// Workload levels a split can take. Configurable; defaults to low, medium
/// and high demand.
inline const std::vector<double>& default_workload_levels() {
  static const std::vector<double> levels{0.25, 0.60, 0.90};
  return levels;
}

struct Scenario {
  std::map<std::string, double> workload;    // split id -> utilization fraction
  std::map<std::string, double> setpoint;    // CRAC id -> degrees C
  std::map<std::string, double> fan;         // CRAC id -> percent
  std::map<std::string, double> peak_power;  // split id -> kW

  /// utilization x peak power, kW. Throws MissingEntry.
  double split_power(const std::string& split_id) const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct SamplingRanges {
  double setpoint_lo = 18.0;
  double setpoint_hi = 27.0;
  double fan_lo = 50.0;
  double fan_hi = 100.0;
  double peak_power_kw = 2.4;
  std::vector<double> workload_levels = default_workload_levels();
};

Scene parse_scene(const std::string& text);
Scene scene_from_json(const nlohmann::json& doc);
nlohmann::json scene_to_json(const Scene& scene);
std::string serialize_scene(const Scene& scene);

Scenario parse_scenario(const std::string& text);
Scenario scenario_from_json(const nlohmann::json& doc);
nlohmann::json scenario_to_json(const Scenario& scenario);

/// Throws MissingEntry when a split or CRAC of the scene has no value, and
/// ValidationError when a value is out of its domain.
void validate_scenario(const Scene& scene, const Scenario& scenario,
                       const std::vector<double>& workload_levels = default_workload_levels());

SamplingRanges sampling_ranges_from_json(const nlohmann::json& doc);
nlohmann::json sampling_ranges_to_json(const SamplingRanges& ranges);

/// Latin hypercube design over every split workload and every CRAC set
/// point and fan speed. Deterministic in `seed`.
std::vector<Scenario> sample_scenarios(const Scene& scene, std::size_t n, std::uint64_t seed,
                                       const SamplingRanges& ranges = {});

/// One LHS column: n values in [0,1), exactly one per stratum [k/n,(k+1)/n).
std::vector<double> latin_hypercube_column(std::size_t n, Rng& rng);

}  // namespace voxtherm
