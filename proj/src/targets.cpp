#include "voxtherm/targets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "voxtherm/error.hpp"

namespace voxtherm {
namespace {

/// One separable pass along `axis` of a D x H x W volume with edge replication.
void blur_axis(const std::vector<double>& in, std::vector<double>& out, const Shape& dims,
               std::size_t axis, const std::vector<double>& taps, int radius) {
  const std::size_t D = dims[0], H = dims[1], W = dims[2];
  const std::size_t n = dims[axis];
  const std::size_t stride = axis == 0 ? H * W : (axis == 1 ? W : 1);
  for (std::size_t d = 0; d < D; ++d)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w) {
        const std::size_t i = (d * H + h) * W + w;
        const std::size_t pos = axis == 0 ? d : (axis == 1 ? h : w);
        const std::size_t line = i - pos * stride;
        double acc = 0;
        for (int k = -radius; k <= radius; ++k) {
          const auto j = std::clamp<long long>(static_cast<long long>(pos) + k, 0,
                                               static_cast<long long>(n) - 1);
          acc += taps[static_cast<std::size_t>(k + radius)] * in[line + static_cast<std::size_t>(j) * stride];
        }
        out[i] = acc;
      }
}

}  // namespace

Heatmap densify_nearest(const SparseSamples& samples, const GridSpec& g) {
  if (samples.samples.empty()) throw EmptySamples("densify_nearest: no samples");
  Heatmap hm{Tensor<double>({1, g.depth, g.height, g.width}), g, false};
  const auto& pts = samples.samples;
  const std::size_t H = g.height, W = g.width;
  for (std::size_t d = 0; d < g.depth; ++d) {
    const double z = (static_cast<double>(d) + 0.5) * g.edge_d();
    for (std::size_t h = 0; h < H; ++h) {
      const double y = (static_cast<double>(h) + 0.5) * g.edge_h();
      for (std::size_t w = 0; w < W; ++w) {
        const double x = (static_cast<double>(w) + 0.5) * g.edge_w();
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t s = 0; s < pts.size(); ++s) {
          const double dx = pts[s].pos[0] - x, dy = pts[s].pos[1] - y, dz = pts[s].pos[2] - z;
          const double dist = dx * dx + dy * dy + dz * dz;
          if (dist < best) {
            best = dist;
            arg = s;
          }
        }
        hm.data[(d * H + h) * W + w] = pts[arg].temperature;
      }
    }
  }
  return hm;
}

std::vector<double> gaussian_kernel(double sigma, int radius) {
  if (!(sigma > 0)) throw InvalidRange("gaussian sigma must be positive");
  if (radius < 0) throw InvalidRange("gaussian radius must be non-negative");
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0;
  for (int k = -radius; k <= radius; ++k) {
    const double v = std::exp(-0.5 * (k * k) / (sigma * sigma));
    taps[static_cast<std::size_t>(k + radius)] = v;
    sum += v;
  }
  for (double& v : taps) v /= sum;
  return taps;
}

Heatmap gaussian_smooth(const Heatmap& hm, double sigma, int radius) {
  if (radius < 0) radius = default_smoothing_radius(sigma);
  const auto taps = gaussian_kernel(sigma, radius);
  const Shape& s = hm.data.shape();
  if (s.size() != 4 || s[0] != 1) throw ShapeMismatch("heatmap must be 1xDxHxW, got " + shape_string(s));
  const Shape dims{s[1], s[2], s[3]};
  std::vector<double> a = hm.data.storage();
  std::vector<double> b(a.size());
  blur_axis(a, b, dims, 0, taps, radius);
  blur_axis(b, a, dims, 1, taps, radius);
  blur_axis(a, b, dims, 2, taps, radius);
  return Heatmap{Tensor<double>(s, std::move(b)), hm.grid, hm.normalized};
}

Heatmap finalize(const Heatmap& hm) {
  Heatmap out = hm;
  for (double& v : out.data.data()) v = std::clamp(v, kClampMinC, kClampMaxC);
  return out;
}

double clamped_fraction(const Heatmap& hm) {
  std::size_t n = 0;
  for (double v : hm.data.data()) n += (v < kClampMinC || v > kClampMaxC) ? 1 : 0;
  return hm.data.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(hm.data.size());
}

nlohmann::json heatmap_sidecar(double sigma, int radius) {
  return {{"units", "degC"}, {"clamp", {kClampMinC, kClampMaxC}}, {"sigma", sigma}, {"radius", radius}};
}

}  // namespace voxtherm
