#include "voxtherm/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "voxtherm/error.hpp"
#include "voxtherm/random.hpp"
#include "voxtherm/voxelizer.hpp"

namespace voxtherm {
namespace {

// Residuals are measured every few sweeps; a measurement costs about one sweep.
constexpr std::size_t kCheckInterval = 8;

Scene on_grid(const Scene& scene, const GridSpec& grid) {
  Scene s = scene;
  s.grid = grid;
  return s;
}

double fan_of(const Scenario& scenario, const std::string& crac) {
  const auto it = scenario.fan.find(crac);
  if (it == scenario.fan.end()) throw MissingEntry("scenario has no fan speed for '" + crac + "'");
  return it->second;
}

double setpoint_of(const Scenario& scenario, const std::string& crac) {
  const auto it = scenario.setpoint.find(crac);
  if (it == scenario.setpoint.end()) throw MissingEntry("scenario has no setpoint for '" + crac + "'");
  return it->second;
}

template <class F>
void for_extent(const VoxelExtent& e, const GridSpec& g, F&& f) {
  for (std::size_t d = e.d0; d < e.d1; ++d)
    for (std::size_t h = e.h0; h < e.h1; ++h)
      for (std::size_t w = e.w0; w < e.w1; ++w) f((d * g.height + h) * g.width + w);
}

/// Seven-point operator with per-cell coefficients: a_P T_P = sum a_nb T_nb + b.
/// Neighbor coefficients of 0 mark walls for the Poisson problem; for the heat
/// problem walls are folded into b.
struct Stencil {
  std::size_t D, H, W;
  std::vector<double> dm, dp, hm, hp, wm, wp, diag, rhs;
  std::vector<unsigned char> fixed;

  explicit Stencil(const GridSpec& g)
      : D(g.depth), H(g.height), W(g.width),
        dm(g.cells()), dp(g.cells()), hm(g.cells()), hp(g.cells()), wm(g.cells()), wp(g.cells()),
        diag(g.cells()), rhs(g.cells()), fixed(g.cells(), 0) {}

  double neighbor_sum(const std::vector<double>& x, std::size_t d, std::size_t h, std::size_t w,
                      std::size_t i) const {
    const std::size_t sd = H * W;
    double s = 0;
    if (d > 0) s += dm[i] * x[i - sd];
    if (d + 1 < D) s += dp[i] * x[i + sd];
    if (h > 0) s += hm[i] * x[i - W];
    if (h + 1 < H) s += hp[i] * x[i + W];
    if (w > 0) s += wm[i] * x[i - 1];
    if (w + 1 < W) s += wp[i] * x[i + 1];
    return s;
  }

  void sweep(std::vector<double>& x) const {
    for (std::size_t color = 0; color < 2; ++color) {
      for (std::size_t d = 0; d < D; ++d) {
        for (std::size_t h = 0; h < H; ++h) {
          const std::size_t w0 = (d + h + color) % 2;
          const std::size_t row = (d * H + h) * W;
          for (std::size_t w = w0; w < W; w += 2) {
            const std::size_t i = row + w;
            if (fixed[i]) continue;
            x[i] = (neighbor_sum(x, d, h, w, i) + rhs[i]) / diag[i];
          }
        }
      }
    }
  }

  /// max_i |sum a_nb x_nb + b - a_P x_P| / scale_i
  template <class Scale>
  double residual(const std::vector<double>& x, Scale&& scale) const {
    double r = 0;
    for (std::size_t d = 0; d < D; ++d)
      for (std::size_t h = 0; h < H; ++h)
        for (std::size_t w = 0; w < W; ++w) {
          const std::size_t i = (d * H + h) * W + w;
          if (fixed[i]) continue;
          const double res = neighbor_sum(x, d, h, w, i) + rhs[i] - diag[i] * x[i];
          r = std::max(r, std::abs(res) / scale(i));
        }
    return r;
  }
};

template <class Scale>
SolveStats iterate(const Stencil& st, std::vector<double>& x, double tolerance,
                   std::size_t max_sweeps, const char* what, Scale&& scale) {
  SolveStats stats;
  double r = st.residual(x, scale);
  while (r >= tolerance && stats.sweeps < max_sweeps) {
    const std::size_t batch = std::min(kCheckInterval, max_sweeps - stats.sweeps);
    for (std::size_t k = 0; k < batch; ++k) st.sweep(x);
    stats.sweeps += batch;
    r = st.residual(x, scale);
    if (!std::isfinite(r)) break;
  }
  stats.final_residual = r;
  if (!(r < tolerance)) {
    throw NonConvergence(std::string(what) + ": residual " + std::to_string(r) + " after " +
                         std::to_string(stats.sweeps) + " sweeps (tolerance " +
                         std::to_string(tolerance) + ")");
  }
  return stats;
}

}  // namespace

OracleConfig oracle_config_from_json(const nlohmann::json& doc) {
  OracleConfig c;
  c.kappa = doc.value("kappa", c.kappa);
  c.rho_c = doc.value("rho_c", c.rho_c);
  c.wall_temperature = doc.value("wall_temperature", c.wall_temperature);
  c.vent_flow = doc.value("vent_flow", c.vent_flow);
  c.airflow_tolerance = doc.value("airflow_tolerance", c.airflow_tolerance);
  c.airflow_max_sweeps = doc.value("airflow_max_sweeps", c.airflow_max_sweeps);
  c.temperature_tolerance = doc.value("temperature_tolerance", c.temperature_tolerance);
  c.temperature_max_sweeps = doc.value("temperature_max_sweeps", c.temperature_max_sweeps);
  return c;
}

nlohmann::json oracle_config_to_json(const OracleConfig& c) {
  return {{"kappa", c.kappa},
          {"rho_c", c.rho_c},
          {"wall_temperature", c.wall_temperature},
          {"vent_flow", c.vent_flow},
          {"airflow_tolerance", c.airflow_tolerance},
          {"airflow_max_sweeps", c.airflow_max_sweeps},
          {"temperature_tolerance", c.temperature_tolerance},
          {"temperature_max_sweeps", c.temperature_max_sweeps}};
}

Tensor<double> airflow_sources(const Scene& scene_in, const Scenario& scenario,
                               const GridSpec& g, const OracleConfig& cfg) {
  const Scene scene = on_grid(scene_in, g);
  Tensor<double> s({g.depth, g.height, g.width});
  const double cell_volume = g.voxel_volume();

  double inflow = 0;
  for (const auto& c : scene.components) {
    if (c.kind != ComponentKind::CracSupply && c.kind != ComponentKind::SlottedGrille) continue;
    const std::string& crac = c.kind == ComponentKind::CracSupply ? c.id : c.crac;
    const double q = cfg.vent_flow * fan_of(scenario, crac) / 100.0;
    if (q == 0) continue;
    const VoxelExtent e = quantize_extent(c, g);
    const double per_cell = q / (static_cast<double>(e.voxel_count()) * cell_volume);
    for_extent(e, g, [&](std::size_t i) { s[i] += per_cell; });
    inflow += q;
  }
  if (inflow == 0) return s;

  std::vector<VoxelExtent> returns;
  std::size_t return_cells = 0;
  for (const auto* c : scene.of_kind(ComponentKind::CracReturn)) {
    returns.push_back(quantize_extent(*c, g));
    return_cells += returns.back().voxel_count();
  }
  if (returns.empty()) throw ValidationError("airflow: scene has sources but no CRAC return");
  const double sink = inflow / (static_cast<double>(return_cells) * cell_volume);
  for (const auto& e : returns) for_extent(e, g, [&](std::size_t i) { s[i] -= sink; });
  return s;
}

VelocityField solve_airflow(const Scene& scene, const Scenario& scenario, const GridSpec& g,
                            const OracleConfig& cfg) {
  g.validate();
  if (!on_grid(scene, g).simulation_eligible()) {
    throw ValidationError("airflow: scene needs a split, a supply, a return and a grille");
  }
  VelocityField vel{g, Tensor<double>({g.depth, g.height, g.width}),
                    Tensor<double>({g.depth, g.height, g.width}),
                    Tensor<double>({g.depth, g.height, g.width}), 0, 0};
  const Tensor<double> s = airflow_sources(scene, scenario, g, cfg);
  double smax = 0;
  for (double v : s.data()) smax = std::max(smax, std::abs(v));
  if (smax == 0) return vel;

  const double cd = 1.0 / (g.edge_d() * g.edge_d());
  const double ch = 1.0 / (g.edge_h() * g.edge_h());
  const double cw = 1.0 / (g.edge_w() * g.edge_w());
  Stencil st(g);
  for (std::size_t d = 0; d < g.depth; ++d)
    for (std::size_t h = 0; h < g.height; ++h)
      for (std::size_t w = 0; w < g.width; ++w) {
        const std::size_t i = (d * g.height + h) * g.width + w;
        st.dm[i] = d > 0 ? cd : 0;
        st.dp[i] = d + 1 < g.depth ? cd : 0;
        st.hm[i] = h > 0 ? ch : 0;
        st.hp[i] = h + 1 < g.height ? ch : 0;
        st.wm[i] = w > 0 ? cw : 0;
        st.wp[i] = w + 1 < g.width ? cw : 0;
        st.diag[i] = st.dm[i] + st.dp[i] + st.hm[i] + st.hp[i] + st.wm[i] + st.wp[i];
        st.rhs[i] = -s[i];
      }

  std::vector<double> phi(g.cells(), 0.0);
  const SolveStats stats = iterate(st, phi, cfg.airflow_tolerance, cfg.airflow_max_sweeps,
                                   "airflow", [&](std::size_t) { return smax; });
  vel.final_residual = stats.final_residual;
  vel.sweeps = stats.sweeps;

  // phi is defined up to a constant; the velocity is not affected.
  const std::size_t H = g.height, W = g.width, sd = H * W;
  for (std::size_t d = 0; d < g.depth; ++d)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w) {
        const std::size_t i = (d * H + h) * W + w;
        if (d > 0 && d + 1 < g.depth) vel.u_d[i] = (phi[i + sd] - phi[i - sd]) / (2 * g.edge_d());
        if (h > 0 && h + 1 < H) vel.u_h[i] = (phi[i + W] - phi[i - W]) / (2 * g.edge_h());
        if (w > 0 && w + 1 < W) vel.u_w[i] = (phi[i + 1] - phi[i - 1]) / (2 * g.edge_w());
      }
  return vel;
}

Tensor<double> solve_temperature(const Scene& scene_in, const Scenario& scenario,
                                 const VelocityField& vel, const OracleConfig& cfg,
                                 SolveStats* stats_out) {
  const GridSpec& g = vel.grid;
  const Scene scene = on_grid(scene_in, g);
  const VoxelInput heat = voxelize(scene, scenario);
  const double* power = heat.data.raw() + kPowerChannel * g.cells();

  const double edges[3] = {g.edge_d(), g.edge_h(), g.edge_w()};
  const double kd = cfg.kappa / (edges[0] * edges[0]);
  const double kh = cfg.kappa / (edges[1] * edges[1]);
  const double kw = cfg.kappa / (edges[2] * edges[2]);
  const double tw = cfg.wall_temperature;

  Stencil st(g);
  const std::size_t H = g.height, W = g.width;
  for (std::size_t d = 0; d < g.depth; ++d)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w) {
        const std::size_t i = (d * H + h) * W + w;
        const double ud = vel.u_d[i], uh = vel.u_h[i], uw = vel.u_w[i];
        // Upwind: inflow side carries |u|/edge.
        const double c_dm = kd + std::max(ud, 0.0) / edges[0];
        const double c_dp = kd + std::max(-ud, 0.0) / edges[0];
        const double c_hm = kh + std::max(uh, 0.0) / edges[1];
        const double c_hp = kh + std::max(-uh, 0.0) / edges[1];
        const double c_wm = kw + std::max(uw, 0.0) / edges[2];
        const double c_wp = kw + std::max(-uw, 0.0) / edges[2];
        st.diag[i] = c_dm + c_dp + c_hm + c_hp + c_wm + c_wp;
        double b = power[i] / cfg.rho_c;
        auto link = [&](bool inside, double c, double& slot) {
          if (inside) {
            slot = c;
          } else {
            slot = 0;
            b += c * tw;
          }
        };
        link(d > 0, c_dm, st.dm[i]);
        link(d + 1 < g.depth, c_dp, st.dp[i]);
        link(h > 0, c_hm, st.hm[i]);
        link(h + 1 < H, c_hp, st.hp[i]);
        link(w > 0, c_wm, st.wm[i]);
        link(w + 1 < W, c_wp, st.wp[i]);
        st.rhs[i] = b;
      }

  std::vector<double> t(g.cells(), tw);
  for (const auto& c : scene.components) {
    if (c.kind != ComponentKind::CracSupply && c.kind != ComponentKind::SlottedGrille) continue;
    const double sp = setpoint_of(scenario, c.kind == ComponentKind::CracSupply ? c.id : c.crac);
    for_extent(quantize_extent(c, g), g, [&](std::size_t i) {
      st.fixed[i] = 1;
      t[i] = sp;
    });
  }

  const SolveStats stats =
      iterate(st, t, cfg.temperature_tolerance, cfg.temperature_max_sweeps, "temperature",
              [&](std::size_t i) { return st.diag[i]; });
  if (stats_out) *stats_out = stats;
  return Tensor<double>({g.depth, g.height, g.width}, std::move(t));
}

Tensor<double> SparseSamples::to_tensor() const {
  Tensor<double> t({samples.size(), 4});
  for (std::size_t i = 0; i < samples.size(); ++i) {
    t[i * 4 + 0] = samples[i].pos[0];
    t[i * 4 + 1] = samples[i].pos[1];
    t[i * 4 + 2] = samples[i].pos[2];
    t[i * 4 + 3] = samples[i].temperature;
  }
  return t;
}

SparseSamples SparseSamples::from_tensor(const Tensor<double>& t) {
  if (t.rank() != 2 || t.dim(1) != 4) {
    throw ShapeMismatch("sparse samples must be M x 4, got " + shape_string(t.shape()));
  }
  SparseSamples s;
  s.samples.resize(t.dim(0));
  for (std::size_t i = 0; i < s.samples.size(); ++i) {
    s.samples[i].pos = {t[i * 4], t[i * 4 + 1], t[i * 4 + 2]};
    s.samples[i].temperature = t[i * 4 + 3];
  }
  return s;
}

SparseSamples sample_sparse(const Scene& scene_in, const Tensor<double>& field, const GridSpec& g,
                            double fraction, std::uint64_t seed, const SamplingOptions& opts) {
  require_same_shape(field.shape(), {g.depth, g.height, g.width}, "sample_sparse field");
  if (!(fraction > 0 && fraction <= 1)) throw InvalidRange("sample fraction must lie in (0, 1]");
  const Scene scene = on_grid(scene_in, g);
  const std::size_t cells = g.cells();
  const auto k = std::min<std::size_t>(
      cells, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(cells) - 1e-9)));

  std::vector<double> weight(cells, 1.0);
  for (const auto& c : scene.components) {
    for_extent(quantize_extent(c, g), g, [&](std::size_t i) { weight[i] = opts.component_weight; });
  }

  // Weighted sampling without replacement (Efraimidis-Spirakis keys).
  Rng rng(seed);
  std::vector<double> key(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    const double u = 1.0 - rng.uniform();  // (0, 1]
    key[i] = std::log(u) / weight[i];
  }
  std::vector<std::size_t> order(cells);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return key[a] != key[b] ? key[a] > key[b] : a < b;
                    });
  order.resize(k);
  std::sort(order.begin(), order.end());

  SparseSamples out;
  out.samples.reserve(k);
  const std::size_t H = g.height, W = g.width;
  for (std::size_t i : order) {
    const std::size_t d = i / (H * W), h = (i / W) % H, w = i % W;
    SparseSample s;
    const double jx = opts.jitter * (rng.uniform() - 0.5);
    const double jy = opts.jitter * (rng.uniform() - 0.5);
    const double jz = opts.jitter * (rng.uniform() - 0.5);
    s.pos = {(static_cast<double>(w) + 0.5 + jx) * g.edge_w(),
             (static_cast<double>(h) + 0.5 + jy) * g.edge_h(),
             (static_cast<double>(d) + 0.5 + jz) * g.edge_d()};
    s.temperature = field[i];
    out.samples.push_back(s);
  }
  return out;
}

}  // namespace voxtherm
