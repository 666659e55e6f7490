#pragma once

#include <cmath>
#include <vector>

#include <json.hpp>

#include "voxtherm/oracle.hpp"
#include "voxtherm/scene.hpp"
#include "voxtherm/tensor.hpp"

namespace voxtherm {

inline constexpr double kClampMinC = 20.0;
inline constexpr double kClampMaxC = 70.0;

/// 1 x D x H x W temperature field.
struct Heatmap {
  Tensor<double> data;
  GridSpec grid;
  bool normalized = false;  // false: deg C
};

/// Every voxel takes the temperature of the sample nearest its center
/// (Euclidean, meters; ties to the lowest sample index). Throws EmptySamples.
Heatmap densify_nearest(const SparseSamples& samples, const GridSpec& grid);

/// Normalized 1-D Gaussian taps at offsets -radius..radius.
std::vector<double> gaussian_kernel(double sigma, int radius);

inline int default_smoothing_radius(double sigma) { return static_cast<int>(std::ceil(4.0 * sigma)); }

/// Separable 3-D Gaussian blur with edge replication. radius < 0 selects
/// ceil(4 sigma).
Heatmap gaussian_smooth(const Heatmap& hm, double sigma = 0.5, int radius = -1);

/// Element-wise clamp to [20, 70] deg C.
Heatmap finalize(const Heatmap& hm);

/// Fraction of voxels changed by finalize.
double clamped_fraction(const Heatmap& hm);

/// Sidecar metadata written next to every stored target heatmap.
nlohmann::json heatmap_sidecar(double sigma, int radius);

}  // namespace voxtherm
