#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "voxtherm/oracle.hpp"
#include "voxtherm/scene.hpp"
#include "voxtherm/targets.hpp"
#include "voxtherm/trainer.hpp"

namespace voxtherm {

struct SimulationConfig {
  OracleConfig oracle;
  double sample_fraction = 0.25;
  /// The same seed is used for every scenario: one fixed sampling mesh per scene.
  std::uint64_t sample_seed = 0;
  SamplingOptions sampling;
  double sigma = 0.5;
  int radius = -1;  // ceil(4 sigma)
};

SimulationConfig simulation_config_from_json(const nlohmann::json& doc);
nlohmann::json simulation_config_to_json(const SimulationConfig& cfg);

/// Dense oracle field (D x H x W, deg C) on the scene grid.
Tensor<double> simulate_dense(const Scene& scene, const Scenario& scenario, const OracleConfig& cfg);

/// Oracle solve followed by sparse sampling.
SparseSamples simulate(const Scene& scene, const Scenario& scenario, const SimulationConfig& cfg);

/// Nearest densification, Gaussian smoothing and clamping.
Heatmap build_target(const SparseSamples& samples, const GridSpec& grid, double sigma = 0.5, int radius = -1);

/// Voxelized inputs paired with finalized targets; scenarios[i] pairs with samples[i].
Dataset build_dataset(const Scene& scene, const std::vector<Scenario>& scenarios,
                      const std::vector<SparseSamples>& samples, double sigma = 0.5, int radius = -1,
                      std::size_t threads = 0);

/// Scenario generation, simulation and dataset assembly in one call.
Dataset generate_dataset(const Scene& scene, std::size_t n, std::uint64_t seed, const SamplingRanges& ranges,
                         const SimulationConfig& cfg, std::size_t threads = 0);

}  // namespace voxtherm
