#pragma once

#include <array>
#include <cstddef>
#include <string>

#include "voxtherm/scene.hpp"
#include "voxtherm/tensor.hpp"

namespace voxtherm {

/// Input channels, in tensor order.
enum Channel : std::size_t { kPowerChannel = 0, kNegSetpointChannel = 1, kFanChannel = 2 };
inline constexpr std::size_t kInputChannels = 3;

/// Names recorded in dataset and checkpoint headers.
inline const std::array<std::string, kInputChannels>& channel_order() {
  static const std::array<std::string, kInputChannels> names{"power", "neg_setpoint", "fan_speed"};
  return names;
}

/// Half-open voxel index box [d0,d1) x [h0,h1) x [w0,w1).
struct VoxelExtent {
  std::size_t d0 = 0, d1 = 0;
  std::size_t h0 = 0, h1 = 0;
  std::size_t w0 = 0, w1 = 0;

  std::size_t voxel_count() const { return (d1 - d0) * (h1 - h0) * (w1 - w0); }
  bool contains(std::size_t d, std::size_t h, std::size_t w) const {
    return d >= d0 && d < d1 && h >= h0 && h < h1 && w >= w0 && w < w1;
  }
  friend bool operator==(const VoxelExtent&, const VoxelExtent&) = default;
};

/// Index range for one axis: [floor(start/edge), max(that + 1, ceil(end/edge))),
/// clipped to [0, cells). Never empty.
std::pair<std::size_t, std::size_t> quantize_axis(double start, double end, double edge,
                                                  std::size_t cells);

VoxelExtent quantize_extent(const Component& component, const GridSpec& grid);

/// C x D x H x W tensor with C = 3 in `channel_order()`.
struct VoxelInput {
  Tensor<double> data;
  GridSpec grid;
};

/// Volume-normalized encoding: each component writes metric / (w*h*d) into
/// every voxel of its extent; overlapping extents add.
///   power        cabinet splits, utilization x peak power (kW)
///   neg_setpoint supplies and grilles, minus the CRAC set point (deg C)
///   fan_speed    supplies, returns and grilles, CRAC fan speed (%)
/// Throws MissingEntry when the scenario lacks a needed value.
VoxelInput voxelize(const Scene& scene, const Scenario& scenario);

}  // namespace voxtherm
