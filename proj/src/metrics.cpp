#include "voxtherm/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "voxtherm/error.hpp"
#include "voxtherm/parallel.hpp"
#include "voxtherm/targets.hpp"

namespace voxtherm {
namespace {

struct Dims3 {
  std::size_t d, h, w;
};

Dims3 spatial_dims(const Shape& s) {
  if (s.size() < 3) throw ShapeMismatch("ssim3d: need at least 3 axes, got " + shape_string(s));
  for (std::size_t i = 0; i + 3 < s.size(); ++i) {
    if (s[i] != 1) throw ShapeMismatch("ssim3d: leading axes must be 1, got " + shape_string(s));
  }
  const std::size_t r = s.size();
  return {s[r - 3], s[r - 2], s[r - 1]};
}

std::size_t clampi(long i, std::size_t n) {
  if (i < 0) return 0;
  if (i >= static_cast<long>(n)) return n - 1;
  return static_cast<std::size_t>(i);
}

// One replicate-padded 1-D pass along `axis` (0 = d, 1 = h, 2 = w).
std::vector<double> blur_axis(const std::vector<double>& in, Dims3 n, int axis, const std::vector<double>& k) {
  const int r = static_cast<int>(k.size() / 2);
  std::vector<double> out(in.size());
  const std::size_t len = axis == 0 ? n.d : axis == 1 ? n.h : n.w;
  const std::size_t stride = axis == 0 ? n.h * n.w : axis == 1 ? n.w : 1;
  for (std::size_t d = 0; d < n.d; ++d)
    for (std::size_t h = 0; h < n.h; ++h)
      for (std::size_t w = 0; w < n.w; ++w) {
        const std::size_t pos = axis == 0 ? d : axis == 1 ? h : w;
        const std::size_t base = (d * n.h + h) * n.w + w - pos * stride;
        double acc = 0;
        for (int o = -r; o <= r; ++o) {
          acc += k[static_cast<std::size_t>(o + r)] * in[base + clampi(static_cast<long>(pos) + o, len) * stride];
        }
        out[(d * n.h + h) * n.w + w] = acc;
      }
  return out;
}

std::vector<double> blur3(std::vector<double> v, Dims3 n, const std::vector<double>& k) {
  for (int a = 0; a < 3; ++a) v = blur_axis(v, n, a, k);
  return v;
}

Tensor<double> to_normalized(const Tensor<double>& celsius) {
  Tensor<double> out(celsius.shape());
  for (std::size_t i = 0; i < celsius.size(); ++i) out[i] = normalize_temperature(celsius[i]);
  return out;
}

}  // namespace

nlohmann::json ssim_params_to_json(const SsimParams& p) {
  return {{"sigma", p.sigma}, {"window", 2 * p.radius + 1}, {"c1", p.c1}, {"c2", p.c2}, {"L", 1.0},
          {"boundary", "replicate"}};
}

double mse(const Tensor<double>& y, const Tensor<double>& yhat) {
  require_same_shape(y.shape(), yhat.shape(), "mse");
  double acc = 0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += (y[i] - yhat[i]) * (y[i] - yhat[i]);
  return acc / static_cast<double>(y.size());
}

double mean_ae(const Tensor<double>& y, const Tensor<double>& yhat) {
  require_same_shape(y.shape(), yhat.shape(), "mean_ae");
  double acc = 0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += std::abs(y[i] - yhat[i]);
  return acc / static_cast<double>(y.size());
}

std::size_t default_top_t(std::size_t cells) { return (cells + 9) / 10; }

double top_t_ae(const Tensor<double>& y, const Tensor<double>& yhat, std::size_t t) {
  require_same_shape(y.shape(), yhat.shape(), "top_t_ae");
  if (t == 0 || t > y.size()) {
    throw InvalidRange("top_t_ae: t = " + std::to_string(t) + " outside [1, " + std::to_string(y.size()) + "]");
  }
  std::vector<std::size_t> idx(y.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto hotter = [&](std::size_t a, std::size_t b) { return y[a] > y[b] || (y[a] == y[b] && a < b); };
  if (t < idx.size()) std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(t), idx.end(), hotter);
  std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(t));
  double acc = 0;
  for (std::size_t k = 0; k < t; ++k) acc += std::abs(y[idx[k]] - yhat[idx[k]]);
  return acc / static_cast<double>(t);
}

double ssim3d(const Tensor<double>& y, const Tensor<double>& yhat, const SsimParams& p) {
  require_same_shape(y.shape(), yhat.shape(), "ssim3d");
  const Dims3 n = spatial_dims(y.shape());
  const auto k = gaussian_kernel(p.sigma, p.radius);
  const std::vector<double>& a = y.storage();
  const std::vector<double>& b = yhat.storage();
  std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto mu_a = blur3(a, n, k), mu_b = blur3(b, n, k);
  const auto e_aa = blur3(aa, n, k), e_bb = blur3(bb, n, k), e_ab = blur3(ab, n, k);
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double va = e_aa[i] - mu_a[i] * mu_a[i];
    const double vb = e_bb[i] - mu_b[i] * mu_b[i];
    const double cov = e_ab[i] - mu_a[i] * mu_b[i];
    const double num = (2 * mu_a[i] * mu_b[i] + p.c1) * (2 * cov + p.c2);
    const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + p.c1) * (va + vb + p.c2);
    acc += num / den;
  }
  return acc / static_cast<double>(a.size());
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& s : r.per_sample) {
    per.push_back({{"mse", s.mse}, {"mean_ae", s.mean_ae}, {"top_t_ae", s.top_t_ae}, {"ssim3d", s.ssim3d}});
  }
  nlohmann::json doc = {{"mse", r.mse},
                        {"mean_ae", r.mean_ae},
                        {"top_t_ae", r.top_t_ae},
                        {"t", r.t},
                        {"ssim3d", r.ssim3d},
                        {"units", {{"mse", "normalized^2"}, {"mean_ae", "degC"}, {"top_t_ae", "degC"}}},
                        {"ssim", ssim_params_to_json(SsimParams{})},
                        {"per_sample", per}};
  if (r.inference_seconds > 0) doc["inference_seconds"] = r.inference_seconds;
  return doc;
}

EvalReport evaluate_predictions(const std::vector<Tensor<double>>& truth, const std::vector<Tensor<double>>& pred,
                                std::size_t t, std::size_t threads) {
  if (truth.size() != pred.size()) {
    throw ShapeMismatch("evaluate: " + std::to_string(truth.size()) + " targets vs " +
                        std::to_string(pred.size()) + " predictions");
  }
  if (truth.empty()) throw EmptyDataset("evaluate: no samples");
  EvalReport r;
  r.t = t ? t : default_top_t(truth[0].size());
  r.per_sample.resize(truth.size());
  parallel_for(truth.size(), threads ? threads : default_thread_count(), [&](std::size_t i) {
    require_same_shape(truth[i].shape(), pred[i].shape(), "evaluate");
    Tensor<double> p_c(pred[i].shape());
    for (std::size_t j = 0; j < p_c.size(); ++j) p_c[j] = std::clamp(pred[i][j], kClampMinC, kClampMaxC);
    const Tensor<double> y_n = to_normalized(truth[i]);
    const Tensor<double> p_n = to_normalized(p_c);
    auto& s = r.per_sample[i];
    s.mse = mse(y_n, p_n);
    s.mean_ae = mean_ae(truth[i], p_c);
    s.top_t_ae = top_t_ae(truth[i], p_c, r.t);
    s.ssim3d = ssim3d(y_n, p_n);
  });
  for (const auto& s : r.per_sample) {
    r.mse += s.mse;
    r.mean_ae += s.mean_ae;
    r.top_t_ae += s.top_t_ae;
    r.ssim3d += s.ssim3d;
  }
  const double n = static_cast<double>(truth.size());
  r.mse /= n;
  r.mean_ae /= n;
  r.top_t_ae /= n;
  r.ssim3d /= n;
  return r;
}

EvalReport evaluate_model(const Model<float>& model, const NormStats& stats, const Dataset& ds,
                          const std::vector<std::size_t>& indices, std::size_t threads, bool time) {
  if (indices.empty()) throw EmptyDataset("evaluate: no samples selected");
  const std::size_t nt = threads ? threads : default_thread_count();
  std::vector<Tensor<double>> truth(indices.size()), pred(indices.size());
  parallel_for(indices.size(), nt, [&](std::size_t k) {
    const auto& s = ds.samples.at(indices[k]);
    truth[k] = s.target;
    pred[k] = predict_celsius(model, stats, s.input);
  });
  EvalReport r = evaluate_predictions(truth, pred, 0, nt);
  if (time) r.inference_seconds = time_inference(model, stats.normalize_input<float>(ds.samples[indices[0]].input));
  return r;
}

double time_inference(const Model<float>& model, const Tensor<float>& normalized_input, std::size_t runs) {
  using clock = std::chrono::steady_clock;
  (void)model.predict(normalized_input);
  std::vector<double> secs;
  for (std::size_t i = 0; i < std::max<std::size_t>(runs, 1); ++i) {
    const auto t0 = clock::now();
    const auto out = model.predict(normalized_input);
    secs.push_back(std::chrono::duration<double>(clock::now() - t0).count());
  }
  std::sort(secs.begin(), secs.end());
  return secs[secs.size() / 2];
}

}  // namespace voxtherm
