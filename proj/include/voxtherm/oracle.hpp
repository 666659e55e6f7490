#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "voxtherm/scene.hpp"
#include "voxtherm/tensor.hpp"

namespace voxtherm {

/// Physical and numerical constants of the synthetic thermal solver.
struct OracleConfig {
  double kappa = 0.05;             // effective turbulent diffusivity, m^2/s
  double rho_c = 1.2;              // volumetric heat capacity, kJ/(m^3 K)
  double wall_temperature = 24.0;  // deg C, Dirichlet on every room wall
  double vent_flow = 1.0;          // m^3/s through each supply or grille at 100 % fan

  double airflow_tolerance = 1e-6;  // L-inf residual relative to max |source|
  std::size_t airflow_max_sweeps = 10000;
  double temperature_tolerance = 1e-5;  // L-inf residual in K
  std::size_t temperature_max_sweeps = 20000;
};

OracleConfig oracle_config_from_json(const nlohmann::json& doc);
nlohmann::json oracle_config_to_json(const OracleConfig& cfg);

/// Cell-centered velocity components, each D x H x W, m/s.
struct VelocityField {
  GridSpec grid;
  Tensor<double> u_d, u_h, u_w;
  double final_residual = 0;
  std::size_t sweeps = 0;
};

struct SolveStats {
  double final_residual = 0;
  std::size_t sweeps = 0;
};

/// Potential flow: Laplacian(phi) = s with sources at supply and grille cells
/// (scaled by fan speed) and balancing sinks at return cells, zero-flux walls;
/// u = grad(phi) by central differences, wall-normal component zero on the
/// wall layer. Red-black Gauss-Seidel. Throws NonConvergence.
VelocityField solve_airflow(const Scene& scene, const Scenario& scenario, const GridSpec& solver_grid,
                            const OracleConfig& cfg = {});

/// Discrete source term s (1/s) used by solve_airflow, D x H x W.
Tensor<double> airflow_sources(const Scene& scene, const Scenario& scenario,
                               const GridSpec& solver_grid, const OracleConfig& cfg = {});

/// Steady advection-diffusion 0 = kappa Lap(T) - u.grad(T) + q/(rho c), first-order
/// upwind advection, T fixed at supply/grille cells (CRAC set point) and at the
/// room walls. Returns D x H x W in deg C. Throws NonConvergence.
Tensor<double> solve_temperature(const Scene& scene, const Scenario& scenario,
                                 const VelocityField& vel, const OracleConfig& cfg = {},
                                 SolveStats* stats = nullptr);

struct SparseSample {
  std::array<double, 3> pos{};  // x, y, z meters
  double temperature = 0;
  friend bool operator==(const SparseSample&, const SparseSample&) = default;
};

struct SparseSamples {
  std::vector<SparseSample> samples;

  /// M x 4 tensor of (x, y, z, T).
  Tensor<double> to_tensor() const;
  static SparseSamples from_tensor(const Tensor<double>& t);
};

struct SamplingOptions {
  double component_weight = 3.0;  // relative draw weight of cells inside components
  double jitter = 1.0;            // fraction of a cell edge; 0 puts samples at centers
};

/// Draws ceil(fraction * cells) distinct cells, weighted toward component
/// extents, and reads the field there. Deterministic in `seed`.
SparseSamples sample_sparse(const Scene& scene, const Tensor<double>& field, const GridSpec& grid,
                            double fraction, std::uint64_t seed, const SamplingOptions& opts = {});

}  // namespace voxtherm
