#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "voxtherm/models.hpp"
#include "voxtherm/optim.hpp"
#include "voxtherm/random.hpp"
#include "voxtherm/scene.hpp"
#include "voxtherm/tensor.hpp"
#include "voxtherm/voxelizer.hpp"

namespace voxtherm {

inline constexpr double kTempOffsetC = 20.0;
inline constexpr double kTempScaleK = 50.0;

inline double normalize_temperature(double celsius) { return (celsius - kTempOffsetC) / kTempScaleK; }
inline double celsius_from_normalized(double t) { return t * kTempScaleK + kTempOffsetC; }

struct DatasetSample {
  Tensor<double> input;   // 3 x D x H x W, raw channel values
  Tensor<double> target;  // 1 x D x H x W, deg C
  nlohmann::json scenario;
};

struct Dataset {
  GridSpec grid;
  std::vector<DatasetSample> samples;
  nlohmann::json target_meta = nlohmann::json::object();  // heatmap sidecar

  std::size_t size() const { return samples.size(); }
};

/// Writes index.json, inputs/NNNNN.vxt and targets/NNNNN.vxt (f64).
void save_dataset(const std::filesystem::path& dir, const Dataset& ds);
/// Throws SchemaError on a malformed index, ValidationError on a channel-order
/// or grid mismatch.
Dataset load_dataset(const std::filesystem::path& dir);

struct NormStats {
  std::array<double, kInputChannels> mean{};
  std::array<double, kInputChannels> std{1, 1, 1};
  std::array<bool, kInputChannels> flagged{};  // std was zero and replaced by 1

  /// z-scored copy of a 3 x D x H x W input.
  template <class T>
  Tensor<T> normalize_input(const Tensor<double>& input) const;
};

/// Two-pass per-channel mean and population std over every voxel of the
/// selected samples. Throws EmptyDataset.
NormStats compute_norm_stats(const Dataset& ds, const std::vector<std::size_t>& indices);
NormStats compute_norm_stats(const std::vector<Tensor<double>>& inputs);

nlohmann::json norm_stats_to_json(const NormStats& s);
NormStats norm_stats_from_json(const nlohmann::json& doc);

/// Element of the floor-plane dihedral group acting on (depth, width):
/// optional transpose of the two axes, then optional reversal of each.
/// With swap set this is a 90 or 270 degree rotation (up to a flip).
struct FloorTransform {
  bool swap = false;
  bool flip_d = false;
  bool flip_w = false;

  friend bool operator==(const FloorTransform&, const FloorTransform&) = default;
};

/// The 8 group elements, or the 4 swap-free ones when only flips are allowed.
std::vector<FloorTransform> floor_group(bool allow_swap);
/// `second` applied after `first`.
FloorTransform compose(const FloorTransform& first, const FloorTransform& second);

/// Applies `t` to every channel of a C x D x H x W tensor. Throws
/// RotationShapeError when t.swap is set and D != W.
template <class T>
Tensor<T> apply_transform(const Tensor<T>& x, const FloorTransform& t);

/// Uniform draw from floor_group(D == W).
FloorTransform draw_transform(std::size_t depth, std::size_t width, Rng& rng);

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch_size = 8;
  std::size_t epochs = 100;
  double weight_decay = 1e-8;
  double clip_norm = 1.0;
  double val_fraction = 0.10;
  double plateau_factor = 0.5;
  std::size_t plateau_patience = 10;
  double plateau_min_lr = 1e-6;
  double plateau_threshold = 1e-5;
  std::uint64_t seed = 0;
  double beta = 1.0;
  bool augment = true;
  std::size_t threads = 0;  // 0: default_thread_count()

  void validate() const;
};

TrainConfig train_config_from_json(const nlohmann::json& doc);
nlohmann::json train_config_to_json(const TrainConfig& tc);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0;
  double val_loss = 0;
  double lr = 0;          // rate used during this epoch
  double max_clipped_norm = 0;  // largest global gradient norm after clipping
};

struct Split {
  std::vector<std::size_t> train, val;
};

/// Seeded shuffle of [0, n); the last floor(n * val_fraction) positions are
/// the validation split. With no validation samples the training split
/// doubles as validation.
Split split_dataset(std::size_t n, double val_fraction, std::uint64_t seed);

struct TrainResult {
  std::vector<EpochRecord> history;
  std::vector<Tensor<float>> best_params;
  std::size_t best_epoch = 0;
  double best_val = 0;
  NormStats stats;
  Split split;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Seeded shuffle, augmentation, smooth L1, backward, clipping and Adam per
/// batch; validation loss and plateau scheduling per epoch. On return the
/// model holds the best-validation parameters. Throws Diverged when a loss
/// turns non-finite; records up to that point were already passed to
/// `on_epoch`.
TrainResult train(const Dataset& ds, Model<float>& model, const TrainConfig& tc,
                  const EpochCallback& on_epoch = {});

/// Mean smooth L1 in normalized units over the selected samples, without
/// augmentation.
double evaluate_loss(const Dataset& ds, const std::vector<std::size_t>& indices,
                     const Model<float>& model, const NormStats& stats, double beta = 1.0,
                     std::size_t threads = 0);

/// Raw prediction in normalized units, 1 x D x H x W.
Tensor<double> predict_normalized(const Model<float>& model, const NormStats& stats,
                                  const Tensor<double>& input);
/// Unclamped prediction in deg C, 1 x D x H x W.
Tensor<double> predict_celsius(const Model<float>& model, const NormStats& stats,
                               const Tensor<double>& input);

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

// ---- checkpoints ------------------------------------------------------------

struct Checkpoint {
  std::unique_ptr<Model<float>> model;
  NormStats stats;
  GridSpec grid;
  std::uint64_t seed = 0;
  std::size_t epoch = 0;
};

/// Directory with manifest.json and params/<name>.vxt (f32).
void save_checkpoint(const std::filesystem::path& dir, const Model<float>& model, const NormStats& stats,
                     const GridSpec& grid, std::uint64_t seed, std::size_t epoch);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

nlohmann::json grid_to_json(const GridSpec& g);
GridSpec grid_from_json(const nlohmann::json& doc);

}  // namespace voxtherm
