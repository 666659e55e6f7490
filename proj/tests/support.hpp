#pragma once

// Independent reference implementations used as test oracles. Everything
// here is written the slow, obvious way on purpose.

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <functional>
#include <numeric>
#include <numbers>
#include <string>
#include <vector>

#include "voxtherm/autodiff.hpp"
#include "voxtherm/metrics.hpp"
#include "voxtherm/models.hpp"
#include "voxtherm/oracle.hpp"
#include "voxtherm/random.hpp"
#include "voxtherm/scene.hpp"
#include "voxtherm/tensor.hpp"

namespace vt_test {

using voxtherm::Rng;
using voxtherm::Shape;
using voxtherm::Tensor;

template <class T = double>
inline Tensor<T> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

inline double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// ---- DFT --------------------------------------------------------------------

using cplx = std::complex<double>;

/// Full complex 3-D DFT of a real D x H x W block, O(N^2).
inline std::vector<cplx> dft3(const double* x, std::size_t D, std::size_t H, std::size_t W, bool inverse = false,
                              const cplx* cx = nullptr) {
  const double sign = inverse ? 1.0 : -1.0;
  const std::size_t N = D * H * W;
  std::vector<cplx> out(N);
  for (std::size_t kd = 0; kd < D; ++kd)
    for (std::size_t kh = 0; kh < H; ++kh)
      for (std::size_t kw = 0; kw < W; ++kw) {
        cplx acc = 0;
        for (std::size_t d = 0; d < D; ++d)
          for (std::size_t h = 0; h < H; ++h)
            for (std::size_t w = 0; w < W; ++w) {
              const double ph = sign * 2.0 * std::numbers::pi *
                                (static_cast<double>(kd * d) / D + static_cast<double>(kh * h) / H +
                                 static_cast<double>(kw * w) / W);
              const std::size_t i = (d * H + h) * W + w;
              acc += (cx ? cx[i] : cplx(x[i], 0)) * cplx(std::cos(ph), std::sin(ph));
            }
        out[(kd * H + kh) * W + kw] = acc;
      }
  return out;
}

inline std::size_t signed_abs(std::size_t k, std::size_t n) { return std::min(k, n - k); }

/// Keeps bins with |f_d| < md, |f_h| < mh, |f_w| < mw and transforms back.
inline std::vector<double> dft_lowpass(const double* x, std::size_t D, std::size_t H, std::size_t W, std::size_t md,
                                       std::size_t mh, std::size_t mw) {
  auto X = dft3(x, D, H, W);
  for (std::size_t kd = 0; kd < D; ++kd)
    for (std::size_t kh = 0; kh < H; ++kh)
      for (std::size_t kw = 0; kw < W; ++kw) {
        if (signed_abs(kd, D) >= md || signed_abs(kh, H) >= mh || signed_abs(kw, W) >= mw) {
          X[(kd * H + kh) * W + kw] = 0;
        }
      }
  const auto y = dft3(nullptr, D, H, W, true, X.data());
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i].real() / static_cast<double>(D * H * W);
  return out;
}

// ---- finite differences -------------------------------------------------------

using LossFn = std::function<voxtherm::ad::Var<double>(voxtherm::ad::Tape<double>&,
                                                        const std::vector<voxtherm::ad::Var<double>>&)>;

inline double eval_loss(const LossFn& f, const std::vector<Tensor<double>>& inputs) {
  voxtherm::ad::Tape<double> tape;
  std::vector<voxtherm::ad::Var<double>> vars;
  for (const auto& t : inputs) vars.push_back(tape.constant(t));
  return f(tape, vars).value()[0];
}

/// Largest norm-wise relative error max|a - n| / max(max|a|, max|n|) over
/// the inputs, comparing tape gradients with central differences.
inline double gradient_error(const LossFn& f, std::vector<Tensor<double>> inputs, double h = 1e-5) {
  voxtherm::ad::Tape<double> tape;
  std::vector<voxtherm::ad::Var<double>> vars;
  for (const auto& t : inputs) vars.push_back(tape.variable(t));
  tape.backward(f(tape, vars));
  double worst = 0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor<double> analytic = tape.grad(vars[k]);
    double diff = 0, scale = 1e-12;
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double saved = inputs[k][i];
      inputs[k][i] = saved + h;
      const double up = eval_loss(f, inputs);
      inputs[k][i] = saved - h;
      const double down = eval_loss(f, inputs);
      inputs[k][i] = saved;
      const double numeric = (up - down) / (2 * h);
      diff = std::max(diff, std::abs(numeric - analytic[i]));
      scale = std::max({scale, std::abs(numeric), std::abs(analytic[i])});
    }
    worst = std::max(worst, diff / scale);
  }
  return worst;
}

/// Central differences over every element of the tensors in `targets`,
/// which `loss_value` and `analytic` both read in place. `analytic` returns one
/// gradient per target.
inline double perturbation_error(const std::function<double()>& loss_value,
                                 const std::function<std::vector<Tensor<double>>()>& analytic,
                                 const std::vector<Tensor<double>*>& targets, double h = 1e-5) {
  const auto grads = analytic();
  double worst = 0;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    Tensor<double>& t = *targets[k];
    double diff = 0, scale = 1e-12;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double saved = t[i];
      t[i] = saved + h;
      const double up = loss_value();
      t[i] = saved - h;
      const double down = loss_value();
      t[i] = saved;
      const double numeric = (up - down) / (2 * h);
      diff = std::max(diff, std::abs(numeric - grads[k][i]));
      scale = std::max({scale, std::abs(numeric), std::abs(grads[k][i])});
    }
    worst = std::max(worst, diff / scale);
  }
  return worst;
}

/// Randomizes every parameter of `model`, then checks the gradient of
/// smooth_l1(model(x), y) with respect to every parameter and the input.
inline double model_gradient_error(voxtherm::Model<double>& model, Tensor<double> x, const Tensor<double>& y,
                                   std::uint64_t seed, double h = 1e-5) {
  using namespace voxtherm::ad;
  Rng rng(seed);
  auto& params = model.parameters().values;
  for (auto& p : params) p = random_tensor(p.shape(), rng, -0.5, 0.5);
  auto value = [&] {
    Tape<double> tape;
    return smooth_l1(model.forward(tape, tape.constant(x)), tape.constant(y)).value()[0];
  };
  auto analytic = [&] {
    Tape<double> tape;
    const auto in = tape.variable(x);
    tape.backward(smooth_l1(model.forward(tape, in), tape.constant(y)));
    auto g = tape.parameter_gradients();
    g.push_back(tape.grad(in));
    return g;
  };
  std::vector<Tensor<double>*> targets;
  for (auto& p : params) targets.push_back(&p);
  targets.push_back(&x);
  return perturbation_error(value, analytic, targets, h);
}

// ---- targets ----------------------------------------------------------------

inline std::vector<double> gauss1d(double sigma, int radius) {
  std::vector<double> k;
  double s = 0;
  for (int i = -radius; i <= radius; ++i) {
    k.push_back(std::exp(-0.5 * i * i / (sigma * sigma)));
    s += k.back();
  }
  for (double& v : k) v /= s;
  return k;
}

/// Direct (non-separable) 3-D convolution with edge replication.
inline std::vector<double> direct_blur(const std::vector<double>& x, std::size_t D, std::size_t H, std::size_t W,
                                       double sigma, int r) {
  const auto k = gauss1d(sigma, r);
  auto clampi = [](long i, std::size_t n) { return static_cast<std::size_t>(std::clamp<long>(i, 0, long(n) - 1)); };
  std::vector<double> out(x.size());
  for (std::size_t d = 0; d < D; ++d)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w) {
        double acc = 0;
        for (int a = -r; a <= r; ++a)
          for (int b = -r; b <= r; ++b)
            for (int c = -r; c <= r; ++c) {
              const double wt = k[a + r] * k[b + r] * k[c + r];
              acc += wt * x[(clampi(long(d) + a, D) * H + clampi(long(h) + b, H)) * W + clampi(long(w) + c, W)];
            }
        out[(d * H + h) * W + w] = acc;
      }
  return out;
}

// ---- models -----------------------------------------------------------------

inline voxtherm::FnoConfig tiny_fno() {
  voxtherm::FnoConfig c;
  c.width = 4;
  c.layers = 2;
  c.modes = {2, 2, 2};
  c.projection_hidden = 8;
  return c;
}

inline voxtherm::UnetConfig tiny_unet(std::size_t levels = 2) {
  voxtherm::UnetConfig c;
  c.levels = levels;
  c.base_channels = 4;
  return c;
}

// ---- metric oracles -----------------------------------------------------------

inline double naive_mse(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / a.size();
}

inline double naive_mae(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / a.size();
}

inline double naive_top_t(const Tensor<double>& y, const Tensor<double>& yhat, std::size_t t) {
  std::vector<std::size_t> idx(y.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return y[a] > y[b]; });
  double s = 0;
  for (std::size_t k = 0; k < t; ++k) s += std::abs(y[idx[k]] - yhat[idx[k]]);
  return s / t;
}

/// Per-voxel window statistics from explicit 3-D weighted sums, two-pass variance.
inline double naive_ssim(const Tensor<double>& a, const Tensor<double>& b, std::size_t D, std::size_t H, std::size_t W) {
  const voxtherm::SsimParams p;
  const auto k = gauss1d(p.sigma, p.radius);
  const int r = p.radius;
  auto cl = [](long i, std::size_t n) { return std::size_t(std::clamp<long>(i, 0, long(n) - 1)); };
  double total = 0;
  for (std::size_t d = 0; d < D; ++d)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w) {
        auto window = [&](auto&& f) {
          for (int x = -r; x <= r; ++x)
            for (int y = -r; y <= r; ++y)
              for (int z = -r; z <= r; ++z) {
                const std::size_t i = (cl(long(d) + x, D) * H + cl(long(h) + y, H)) * W + cl(long(w) + z, W);
                f(k[x + r] * k[y + r] * k[z + r], i);
              }
        };
        double ma = 0, mb = 0;
        window([&](double wt, std::size_t i) {
          ma += wt * a[i];
          mb += wt * b[i];
        });
        double va = 0, vb = 0, cab = 0;
        window([&](double wt, std::size_t i) {
          va += wt * (a[i] - ma) * (a[i] - ma);
          vb += wt * (b[i] - mb) * (b[i] - mb);
          cab += wt * (a[i] - ma) * (b[i] - mb);
        });
        total += ((2 * ma * mb + p.c1) * (2 * cab + p.c2)) / ((ma * ma + mb * mb + p.c1) * (va + vb + p.c2));
      }
  return total / double(D * H * W);
}

/// Nearest sample by exhaustive search; the first of equidistant samples wins.
inline std::vector<double> brute_nearest(const voxtherm::SparseSamples& s, const voxtherm::GridSpec& g) {
  std::vector<double> out(g.cells());
  for (std::size_t d = 0; d < g.depth; ++d)
    for (std::size_t h = 0; h < g.height; ++h)
      for (std::size_t w = 0; w < g.width; ++w) {
        const double x = (w + 0.5) * g.edge_w(), y = (h + 0.5) * g.edge_h(), z = (d + 0.5) * g.edge_d();
        double best = INFINITY;
        double value = 0;
        for (const auto& p : s.samples) {
          const double dist = (p.pos[0] - x) * (p.pos[0] - x) + (p.pos[1] - y) * (p.pos[1] - y) +
                              (p.pos[2] - z) * (p.pos[2] - z);
          if (dist < best) {
            best = dist;
            value = p.temperature;
          }
        }
        out[(d * g.height + h) * g.width + w] = value;
      }
  return out;
}

// ---- scenes -----------------------------------------------------------------

inline std::filesystem::path source_dir() { return VOXTHERM_SOURCE_DIR; }

inline voxtherm::Component component(const std::string& id, voxtherm::ComponentKind kind, std::array<double, 3> pos,
                                     std::array<double, 3> dims, double theta = 0, const std::string& crac = "") {
  voxtherm::Component c;
  c.id = id;
  c.kind = kind;
  c.pos = pos;
  c.dims = dims;
  c.theta = theta;
  c.crac = crac;
  return c;
}

/// 16 x 8 x 16 cells over a 4 x 2 x 4 m room with one of each component.
inline voxtherm::Scene small_scene() {
  using K = voxtherm::ComponentKind;
  voxtherm::Scene s;
  s.grid = {16, 8, 16, 4.0, 2.0, 4.0};
  s.components = {component("s1", K::CabinetSplit, {1.0, 0.0, 1.5}, {0.5, 1.0, 1.0}),
                  component("crac", K::CracSupply, {3.0, 0.0, 3.0}, {0.75, 0.25, 0.5}),
                  component("ret", K::CracReturn, {3.0, 1.25, 3.0}, {0.75, 0.25, 0.5}, 0, "crac"),
                  component("g1", K::SlottedGrille, {1.75, 0.0, 1.5}, {0.5, 0.25, 0.5}, 0, "crac")};
  return s;
}

inline voxtherm::Scenario small_scenario(double util = 0.9, double setpoint = 20.0, double fan = 100.0,
                                         double peak = 2.4) {
  voxtherm::Scenario sc;
  sc.workload["s1"] = util;
  sc.peak_power["s1"] = peak;
  sc.setpoint["crac"] = setpoint;
  sc.fan["crac"] = fan;
  return sc;
}

}  // namespace vt_test
