#include "voxtherm/voxelizer.hpp"

#include <algorithm>
#include <cmath>

#include "voxtherm/error.hpp"

namespace voxtherm {
namespace {

// Absorbs representation noise such as 0.3 / 0.1 = 2.9999999999999996.
constexpr double kSnap = 1e-9;

double lookup(const std::map<std::string, double>& values, const std::string& id,
              const char* what) {
  const auto it = values.find(id);
  if (it == values.end()) {
    throw MissingEntry(std::string("scenario has no ") + what + " for '" + id + "'");
  }
  return it->second;
}

void splat(Tensor<double>& data, std::size_t channel, const VoxelExtent& e, const GridSpec& g,
           double value) {
  double* base = data.raw() + channel * g.cells();
  for (std::size_t d = e.d0; d < e.d1; ++d) {
    for (std::size_t h = e.h0; h < e.h1; ++h) {
      double* row = base + (d * g.height + h) * g.width;
      for (std::size_t w = e.w0; w < e.w1; ++w) row[w] += value;
    }
  }
}

}  // namespace

std::pair<std::size_t, std::size_t> quantize_axis(double start, double end, double edge,
                                                  std::size_t cells) {
  const double lo = std::floor(start / edge + kSnap);
  const double hi = std::ceil(end / edge - kSnap);
  auto i0 = static_cast<std::size_t>(std::clamp(lo, 0.0, static_cast<double>(cells - 1)));
  auto i1 = static_cast<std::size_t>(std::clamp(hi, 0.0, static_cast<double>(cells)));
  i1 = std::max(i1, i0 + 1);
  return {i0, i1};
}

VoxelExtent quantize_extent(const Component& c, const GridSpec& g) {
  VoxelExtent e;
  std::tie(e.d0, e.d1) = quantize_axis(c.pos[2], c.pos[2] + c.footprint_z(), g.edge_d(), g.depth);
  std::tie(e.h0, e.h1) = quantize_axis(c.pos[1], c.pos[1] + c.dims[1], g.edge_h(), g.height);
  std::tie(e.w0, e.w1) = quantize_axis(c.pos[0], c.pos[0] + c.footprint_x(), g.edge_w(), g.width);
  return e;
}

VoxelInput voxelize(const Scene& scene, const Scenario& scenario) {
  const GridSpec& g = scene.grid;
  VoxelInput out{Tensor<double>({kInputChannels, g.depth, g.height, g.width}), g};

  // Fixed component order keeps accumulation into shared voxels reproducible.
  for (const auto& c : scene.components) {
    const VoxelExtent e = quantize_extent(c, g);
    const double volume = c.volume();
    switch (c.kind) {
      case ComponentKind::CabinetSplit:
        splat(out.data, kPowerChannel, e, g, scenario.split_power(c.id) / volume);
        break;
      case ComponentKind::CracSupply:
        splat(out.data, kNegSetpointChannel, e, g,
              -lookup(scenario.setpoint, c.id, "setpoint") / volume);
        splat(out.data, kFanChannel, e, g, lookup(scenario.fan, c.id, "fan speed") / volume);
        break;
      case ComponentKind::CracReturn:
        splat(out.data, kFanChannel, e, g, lookup(scenario.fan, c.crac, "fan speed") / volume);
        break;
      case ComponentKind::SlottedGrille:
        splat(out.data, kNegSetpointChannel, e, g,
              -lookup(scenario.setpoint, c.crac, "setpoint") / volume);
        splat(out.data, kFanChannel, e, g, lookup(scenario.fan, c.crac, "fan speed") / volume);
        break;
    }
  }
  return out;
}

}  // namespace voxtherm
