#pragma once

#include <cstddef>
#include <vector>

#include <json.hpp>

#include "voxtherm/models.hpp"
#include "voxtherm/tensor.hpp"
#include "voxtherm/trainer.hpp"

namespace voxtherm {

/// SSIM constants: Gaussian window sigma 1.5 truncated to 7 taps per axis,
/// C1 = (0.01 L)^2, C2 = (0.03 L)^2 with L = 1.
struct SsimParams {
  double sigma = 1.5;
  int radius = 3;
  double c1 = 1e-4;
  double c2 = 9e-4;
};

nlohmann::json ssim_params_to_json(const SsimParams& p);

/// Single-heatmap metrics. Shapes must match (ShapeMismatch otherwise).
double mse(const Tensor<double>& y, const Tensor<double>& yhat);
double mean_ae(const Tensor<double>& y, const Tensor<double>& yhat);

/// ceil(cells / 10).
std::size_t default_top_t(std::size_t cells);

/// Mean |y - yhat| over the t largest entries of y (ties to the lowest linear
/// index). Throws InvalidRange unless 1 <= t <= y.size().
double top_t_ae(const Tensor<double>& y, const Tensor<double>& yhat, std::size_t t);

/// Mean local SSIM over every voxel of the last three axes, replicate
/// boundary. Leading axes of size 1 are ignored.
double ssim3d(const Tensor<double>& y, const Tensor<double>& yhat, const SsimParams& p = {});

struct SampleMetrics {
  double mse = 0, mean_ae = 0, top_t_ae = 0, ssim3d = 0;
};

struct EvalReport {
  double mse = 0;       // normalized units^2
  double mean_ae = 0;   // deg C
  double top_t_ae = 0;  // deg C
  std::size_t t = 0;
  double ssim3d = 0;
  double inference_seconds = 0;  // 0: not measured
  std::vector<SampleMetrics> per_sample;
};

nlohmann::json to_json(const EvalReport& r);

/// Both lists in deg C. Predictions are clamped to [20, 70] first; mse and
/// ssim3d are computed on (T - 20) / 50, AE metrics in deg C. t = 0 selects
/// the default.
EvalReport evaluate_predictions(const std::vector<Tensor<double>>& truth,
                                const std::vector<Tensor<double>>& pred, std::size_t t = 0,
                                std::size_t threads = 0);

/// Predicts every selected sample and evaluates. With `time` set, also
/// measures single-sample inference; otherwise the report stays a pure
/// function of its inputs.
EvalReport evaluate_model(const Model<float>& model, const NormStats& stats, const Dataset& ds,
                          const std::vector<std::size_t>& indices, std::size_t threads = 0,
                          bool time = false);

/// Median of `runs` timed forward passes after one warmup, seconds.
double time_inference(const Model<float>& model, const Tensor<float>& normalized_input, std::size_t runs = 5);

}  // namespace voxtherm
