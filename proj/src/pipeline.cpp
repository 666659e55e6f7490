#include "voxtherm/pipeline.hpp"

#include "voxtherm/error.hpp"
#include "voxtherm/parallel.hpp"
#include "voxtherm/voxelizer.hpp"

namespace voxtherm {

SimulationConfig simulation_config_from_json(const nlohmann::json& doc) {
  SimulationConfig c;
  try {
    if (doc.contains("oracle")) c.oracle = oracle_config_from_json(doc["oracle"]);
    c.sample_fraction = doc.value("sample_fraction", c.sample_fraction);
    c.sample_seed = doc.value("sample_seed", c.sample_seed);
    c.sampling.component_weight = doc.value("component_weight", c.sampling.component_weight);
    c.sampling.jitter = doc.value("jitter", c.sampling.jitter);
    c.sigma = doc.value("sigma", c.sigma);
    c.radius = doc.value("radius", c.radius);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("simulation config: ") + e.what());
  }
  if (!(c.sample_fraction > 0 && c.sample_fraction <= 1)) throw InvalidRange("sample_fraction must lie in (0, 1]");
  if (!(c.sigma > 0)) throw InvalidRange("sigma must be > 0");
  return c;
}

nlohmann::json simulation_config_to_json(const SimulationConfig& c) {
  return {{"oracle", oracle_config_to_json(c.oracle)},
          {"sample_fraction", c.sample_fraction},
          {"sample_seed", c.sample_seed},
          {"component_weight", c.sampling.component_weight},
          {"jitter", c.sampling.jitter},
          {"sigma", c.sigma},
          {"radius", c.radius < 0 ? default_smoothing_radius(c.sigma) : c.radius}};
}

Tensor<double> simulate_dense(const Scene& scene, const Scenario& scenario, const OracleConfig& cfg) {
  const VelocityField vel = solve_airflow(scene, scenario, scene.grid, cfg);
  return solve_temperature(scene, scenario, vel, cfg);
}

SparseSamples simulate(const Scene& scene, const Scenario& scenario, const SimulationConfig& cfg) {
  return sample_sparse(scene, simulate_dense(scene, scenario, cfg.oracle), scene.grid, cfg.sample_fraction,
                       cfg.sample_seed, cfg.sampling);
}

Heatmap build_target(const SparseSamples& samples, const GridSpec& grid, double sigma, int radius) {
  return finalize(gaussian_smooth(densify_nearest(samples, grid), sigma, radius));
}

Dataset build_dataset(const Scene& scene, const std::vector<Scenario>& scenarios,
                      const std::vector<SparseSamples>& samples, double sigma, int radius, std::size_t threads) {
  if (scenarios.size() != samples.size()) {
    throw ValidationError("build_dataset: " + std::to_string(scenarios.size()) + " scenarios vs " +
                          std::to_string(samples.size()) + " sample sets");
  }
  Dataset ds;
  ds.grid = scene.grid;
  ds.samples.resize(scenarios.size());
  const int r = radius < 0 ? default_smoothing_radius(sigma) : radius;
  ds.target_meta = heatmap_sidecar(sigma, r);
  parallel_for(scenarios.size(), threads ? threads : default_thread_count(), [&](std::size_t i) {
    auto& s = ds.samples[i];
    s.input = voxelize(scene, scenarios[i]).data;
    s.target = build_target(samples[i], scene.grid, sigma, r).data;
    s.scenario = scenario_to_json(scenarios[i]);
  });
  return ds;
}

Dataset generate_dataset(const Scene& scene, std::size_t n, std::uint64_t seed, const SamplingRanges& ranges,
                         const SimulationConfig& cfg, std::size_t threads) {
  const std::size_t nt = threads ? threads : default_thread_count();
  const auto scenarios = sample_scenarios(scene, n, seed, ranges);
  std::vector<SparseSamples> samples(n);
  parallel_for(n, nt, [&](std::size_t i) { samples[i] = simulate(scene, scenarios[i], cfg); });
  return build_dataset(scene, scenarios, samples, cfg.sigma, cfg.radius, nt);
}

}  // namespace voxtherm
