#include "voxtherm/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "voxtherm/error.hpp"
#include "voxtherm/io.hpp"
#include "voxtherm/parallel.hpp"
#include "voxtherm/vxt.hpp"

namespace voxtherm {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string sample_file(const char* dir, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s/%05zu.vxt", dir, i);
  return buf;
}

json channel_order_json() {
  json arr = json::array();
  for (const auto& c : channel_order()) arr.push_back(c);
  return arr;
}

void require_channel_order(const json& doc, const std::string& where) {
  if (!doc.contains("channel_order") || doc["channel_order"] != channel_order_json()) {
    throw ValidationError(where + ": channel_order must be " + channel_order_json().dump());
  }
}

Shape input_shape(const GridSpec& g) { return {kInputChannels, g.depth, g.height, g.width}; }
Shape target_shape(const GridSpec& g) { return {1, g.depth, g.height, g.width}; }

template <class T>
Tensor<T> normalize_target(const Tensor<double>& celsius) {
  Tensor<T> out(celsius.shape());
  for (std::size_t i = 0; i < celsius.size(); ++i) {
    out[i] = static_cast<T>(normalize_temperature(celsius[i]));
  }
  return out;
}

double mean_loss(const std::vector<Tensor<float>>& inputs, const std::vector<Tensor<float>>& targets,
                 const std::vector<std::size_t>& indices, const Model<float>& model, double beta,
                 std::size_t threads) {
  std::vector<double> losses(indices.size());
  parallel_for(indices.size(), threads, [&](std::size_t k) {
    const auto i = indices[k];
    const Tensor<float> pred = model.predict(inputs[i]);
    losses[k] = ad::smooth_l1_value<float>(pred.data(), targets[i].data(), static_cast<float>(beta));
  });
  double acc = 0;
  for (double l : losses) acc += l;
  return acc / static_cast<double>(losses.size());
}

}  // namespace

// ---- dataset ----------------------------------------------------------------

json grid_to_json(const GridSpec& g) {
  return {{"D", g.depth}, {"H", g.height}, {"W", g.width},
          {"room", {{"d", g.room_depth}, {"h", g.room_height}, {"w", g.room_width}}}};
}

GridSpec grid_from_json(const json& doc) {
  GridSpec g;
  try {
    g.depth = doc.at("D").get<std::size_t>();
    g.height = doc.at("H").get<std::size_t>();
    g.width = doc.at("W").get<std::size_t>();
    g.room_depth = doc.at("room").at("d").get<double>();
    g.room_height = doc.at("room").at("h").get<double>();
    g.room_width = doc.at("room").at("w").get<double>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("grid: ") + e.what());
  }
  g.validate();
  return g;
}

void save_dataset(const fs::path& dir, const Dataset& ds) {
  json samples = json::array();
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto& s = ds.samples[i];
    require_same_shape(s.input.shape(), input_shape(ds.grid), "dataset input");
    require_same_shape(s.target.shape(), target_shape(ds.grid), "dataset target");
    const std::string in = sample_file("inputs", i), tg = sample_file("targets", i);
    vxt::write(dir / in, s.input);
    vxt::write(dir / tg, s.target);
    samples.push_back({{"input", in}, {"target", tg}, {"scenario", s.scenario}});
  }
  io::write_json(dir / "targets" / "sidecar.json", ds.target_meta);
  io::write_json(dir / "index.json", {{"grid", grid_to_json(ds.grid)},
                                      {"channel_order", channel_order_json()},
                                      {"targets", ds.target_meta},
                                      {"samples", samples}});
}

Dataset load_dataset(const fs::path& dir) {
  const json index = io::read_json(dir / "index.json");
  Dataset ds;
  try {
    ds.grid = grid_from_json(index.at("grid"));
    require_channel_order(index, "dataset");
    if (index.contains("targets")) ds.target_meta = index["targets"];
    for (const auto& s : index.at("samples")) {
      DatasetSample sample;
      sample.input = vxt::read(dir / s.at("input").get<std::string>());
      sample.target = vxt::read(dir / s.at("target").get<std::string>());
      sample.scenario = s.value("scenario", json::object());
      require_same_shape(sample.input.shape(), input_shape(ds.grid), "dataset input");
      require_same_shape(sample.target.shape(), target_shape(ds.grid), "dataset target");
      ds.samples.push_back(std::move(sample));
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("dataset index: ") + e.what());
  }
  return ds;
}

// ---- normalization ----------------------------------------------------------

template <class T>
Tensor<T> NormStats::normalize_input(const Tensor<double>& input) const {
  if (input.rank() != 4 || input.dim(0) != kInputChannels) {
    throw ShapeMismatch("normalize_input: expected 3 x D x H x W, got " + shape_string(input.shape()));
  }
  Tensor<T> out(input.shape());
  const std::size_t n = input.size() / kInputChannels;
  for (std::size_t c = 0; c < kInputChannels; ++c) {
    for (std::size_t i = c * n; i < (c + 1) * n; ++i) {
      out[i] = static_cast<T>((input[i] - mean[c]) / std[c]);
    }
  }
  return out;
}

template Tensor<float> NormStats::normalize_input<float>(const Tensor<double>&) const;
template Tensor<double> NormStats::normalize_input<double>(const Tensor<double>&) const;

NormStats compute_norm_stats(const std::vector<Tensor<double>>& inputs) {
  if (inputs.empty()) throw EmptyDataset("normalization statistics need at least one sample");
  NormStats s;
  for (std::size_t c = 0; c < kInputChannels; ++c) {
    double sum = 0;
    std::size_t count = 0;
    for (const auto& x : inputs) {
      const std::size_t n = x.size() / kInputChannels;
      for (std::size_t i = c * n; i < (c + 1) * n; ++i) sum += x[i];
      count += n;
    }
    const double mean = sum / static_cast<double>(count);
    double sq = 0;
    for (const auto& x : inputs) {
      const std::size_t n = x.size() / kInputChannels;
      for (std::size_t i = c * n; i < (c + 1) * n; ++i) sq += (x[i] - mean) * (x[i] - mean);
    }
    const double sd = std::sqrt(sq / static_cast<double>(count));
    s.mean[c] = mean;
    s.flagged[c] = !(sd > 0);
    s.std[c] = s.flagged[c] ? 1.0 : sd;
  }
  return s;
}

NormStats compute_norm_stats(const Dataset& ds, const std::vector<std::size_t>& indices) {
  std::vector<Tensor<double>> inputs;
  inputs.reserve(indices.size());
  for (auto i : indices) inputs.push_back(ds.samples.at(i).input);
  return compute_norm_stats(inputs);
}

json norm_stats_to_json(const NormStats& s) {
  return {{"mean", s.mean}, {"std", s.std}, {"flagged", s.flagged}};
}

NormStats norm_stats_from_json(const json& doc) {
  NormStats s;
  try {
    s.mean = doc.at("mean").get<std::array<double, kInputChannels>>();
    s.std = doc.at("std").get<std::array<double, kInputChannels>>();
    s.flagged = doc.at("flagged").get<std::array<bool, kInputChannels>>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("zscore stats: ") + e.what());
  }
  for (double v : s.std) {
    if (!(v > 0)) throw ValidationError("zscore stats: std must be positive");
  }
  return s;
}

// ---- augmentation -----------------------------------------------------------

std::vector<FloorTransform> floor_group(bool allow_swap) {
  std::vector<FloorTransform> g;
  for (int s = 0; s < (allow_swap ? 2 : 1); ++s)
    for (int fd = 0; fd < 2; ++fd)
      for (int fw = 0; fw < 2; ++fw) g.push_back({s == 1, fd == 1, fw == 1});
  return g;
}

FloorTransform compose(const FloorTransform& first, const FloorTransform& second) {
  // Reversals conjugated through a transpose trade axes.
  const bool fd = second.swap ? first.flip_w : first.flip_d;
  const bool fw = second.swap ? first.flip_d : first.flip_w;
  return {first.swap != second.swap, fd != second.flip_d, fw != second.flip_w};
}

template <class T>
Tensor<T> apply_transform(const Tensor<T>& x, const FloorTransform& t) {
  if (x.rank() != 4) throw ShapeMismatch("apply_transform: expected C x D x H x W, got " + shape_string(x.shape()));
  const std::size_t C = x.dim(0), D = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (t.swap && D != W) {
    throw RotationShapeError("90/270 degree rotation needs D == W, got D=" + std::to_string(D) +
                             " W=" + std::to_string(W));
  }
  Tensor<T> out(x.shape());
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t d = 0; d < D; ++d) {
      const std::size_t a = t.flip_d ? D - 1 - d : d;
      for (std::size_t h = 0; h < H; ++h) {
        T* orow = out.raw() + ((c * D + d) * H + h) * W;
        for (std::size_t w = 0; w < W; ++w) {
          const std::size_t b = t.flip_w ? W - 1 - w : w;
          const std::size_t sd = t.swap ? b : a, sw = t.swap ? a : b;
          orow[w] = x[((c * D + sd) * H + h) * W + sw];
        }
      }
    }
  }
  return out;
}

template Tensor<float> apply_transform<float>(const Tensor<float>&, const FloorTransform&);
template Tensor<double> apply_transform<double>(const Tensor<double>&, const FloorTransform&);

FloorTransform draw_transform(std::size_t depth, std::size_t width, Rng& rng) {
  const auto group = floor_group(depth == width);
  return group[rng.below(group.size())];
}

// ---- configuration ----------------------------------------------------------

void TrainConfig::validate() const {
  if (!(val_fraction > 0 && val_fraction < 1)) throw InvalidRange("val_fraction must lie in (0, 1)");
  if (batch_size == 0) throw InvalidRange("batch_size must be >= 1");
  if (!(lr >= 0)) throw InvalidRange("lr must be >= 0");
  if (!(beta > 0)) throw InvalidRange("beta must be > 0");
  if (!(clip_norm > 0)) throw InvalidRange("clip_norm must be > 0");
  if (!(plateau_factor > 0 && plateau_factor <= 1)) throw InvalidRange("plateau factor must lie in (0, 1]");
}

TrainConfig train_config_from_json(const json& doc) {
  TrainConfig tc;
  try {
    tc.lr = doc.value("lr", tc.lr);
    tc.batch_size = doc.value("batch_size", tc.batch_size);
    tc.epochs = doc.value("epochs", tc.epochs);
    tc.weight_decay = doc.value("weight_decay", tc.weight_decay);
    tc.clip_norm = doc.value("clip_norm", tc.clip_norm);
    tc.val_fraction = doc.value("val_fraction", tc.val_fraction);
    if (doc.contains("plateau")) {
      const json& p = doc["plateau"];
      tc.plateau_factor = p.value("factor", tc.plateau_factor);
      tc.plateau_patience = p.value("patience", tc.plateau_patience);
      tc.plateau_min_lr = p.value("min_lr", tc.plateau_min_lr);
      tc.plateau_threshold = p.value("threshold", tc.plateau_threshold);
    }
    tc.seed = doc.value("seed", tc.seed);
    tc.beta = doc.value("beta", tc.beta);
    tc.augment = doc.value("augment", tc.augment);
    tc.threads = doc.value("threads", tc.threads);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("train config: ") + e.what());
  }
  tc.validate();
  return tc;
}

json train_config_to_json(const TrainConfig& tc) {
  return {{"lr", tc.lr},
          {"batch_size", tc.batch_size},
          {"epochs", tc.epochs},
          {"weight_decay", tc.weight_decay},
          {"clip_norm", tc.clip_norm},
          {"val_fraction", tc.val_fraction},
          {"plateau",
           {{"factor", tc.plateau_factor},
            {"patience", tc.plateau_patience},
            {"min_lr", tc.plateau_min_lr},
            {"threshold", tc.plateau_threshold}}},
          {"seed", tc.seed},
          {"beta", tc.beta},
          {"augment", tc.augment}};
}

// ---- training ---------------------------------------------------------------

Split split_dataset(std::size_t n, double val_fraction, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0));
  auto order = rng.permutation(n);
  const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * val_fraction));
  Split s;
  s.train.assign(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
  s.val.assign(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
  if (s.val.empty()) s.val = s.train;
  return s;
}

TrainResult train(const Dataset& ds, Model<float>& model, const TrainConfig& tc,
                  const EpochCallback& on_epoch) {
  tc.validate();
  if (ds.samples.empty()) throw EmptyDataset("training needs at least one sample");
  const std::size_t threads = tc.threads ? tc.threads : default_thread_count();

  TrainResult result;
  result.split = split_dataset(ds.size(), tc.val_fraction, tc.seed);
  result.stats = compute_norm_stats(ds, result.split.train);

  std::vector<Tensor<float>> inputs(ds.size()), targets(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    require_same_shape(ds.samples[i].input.shape(), input_shape(ds.grid), "train input");
    require_same_shape(ds.samples[i].target.shape(), target_shape(ds.grid), "train target");
    inputs[i] = result.stats.normalize_input<float>(ds.samples[i].input);
    targets[i] = normalize_target<float>(ds.samples[i].target);
  }

  auto& params = model.parameters().values;
  AdamConfig adam{tc.lr, 0.9, 0.999, 1e-8, tc.weight_decay};
  AdamState<float> state;
  PlateauScheduler sched(tc.lr, tc.plateau_factor, tc.plateau_patience, tc.plateau_min_lr,
                         tc.plateau_threshold);
  Rng order_rng(derive_seed(tc.seed, 1));
  const float beta = static_cast<float>(tc.beta);

  result.best_params = params;
  result.best_val = std::numeric_limits<double>::infinity();
  double lr = tc.lr;

  for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
    auto order = result.split.train;
    order_rng.shuffle(order);
    double loss_sum = 0, max_norm = 0;

    for (std::size_t b = 0; b < order.size(); b += tc.batch_size) {
      const std::size_t nb = std::min(tc.batch_size, order.size() - b);
      std::vector<double> losses(nb);
      std::vector<std::vector<Tensor<float>>> grads(nb);
      parallel_for(nb, threads, [&](std::size_t k) {
        const std::size_t idx = order[b + k];
        FloorTransform t;
        if (tc.augment) {
          Rng aug(derive_seed(tc.seed, (epoch << 32) + b + k + 2));
          t = draw_transform(ds.grid.depth, ds.grid.width, aug);
        }
        ad::Tape<float> tape;
        const auto x = tape.constant(apply_transform(inputs[idx], t));
        const auto y = tape.constant(apply_transform(targets[idx], t));
        const auto loss = ad::smooth_l1(model.forward(tape, x), y, beta);
        tape.backward(loss);
        losses[k] = loss.value()[0];
        grads[k] = tape.parameter_gradients();
      });

      for (std::size_t k = 1; k < nb; ++k) {
        for (std::size_t p = 0; p < grads[0].size(); ++p) {
          float* dst = grads[0][p].raw();
          const float* src = grads[k][p].raw();
          for (std::size_t i = 0; i < grads[0][p].size(); ++i) dst[i] += src[i];
        }
      }
      const float inv = 1.0f / static_cast<float>(nb);
      for (auto& g : grads[0])
        for (float& v : g.data()) v *= inv;

      double batch_loss = 0;
      for (double l : losses) batch_loss += l;
      if (!std::isfinite(batch_loss)) {
        throw Diverged("training loss became non-finite in epoch " + std::to_string(epoch));
      }
      loss_sum += batch_loss;

      clip_grad_norm(grads[0], tc.clip_norm);
      max_norm = std::max(max_norm, global_grad_norm(grads[0]));
      adam.lr = lr;
      adam_step(params, grads[0], state, adam);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.val_loss = mean_loss(inputs, targets, result.split.val, model, tc.beta, threads);
    rec.lr = lr;
    rec.max_clipped_norm = max_norm;
    if (!std::isfinite(rec.val_loss)) {
      throw Diverged("validation loss became non-finite in epoch " + std::to_string(epoch));
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.val_loss < result.best_val) {
      result.best_val = rec.val_loss;
      result.best_epoch = epoch;
      result.best_params = params;
    }
    lr = sched.step(rec.val_loss);
  }
  if (result.best_epoch > 0) params = result.best_params;
  return result;
}

double evaluate_loss(const Dataset& ds, const std::vector<std::size_t>& indices, const Model<float>& model,
                     const NormStats& stats, double beta, std::size_t threads) {
  if (indices.empty()) throw EmptyDataset("evaluate_loss: no samples selected");
  std::vector<Tensor<float>> inputs(ds.size()), targets(ds.size());
  for (auto i : indices) {
    inputs.at(i) = stats.normalize_input<float>(ds.samples[i].input);
    targets[i] = normalize_target<float>(ds.samples[i].target);
  }
  return mean_loss(inputs, targets, indices, model, beta, threads ? threads : default_thread_count());
}

Tensor<double> predict_normalized(const Model<float>& model, const NormStats& stats,
                                  const Tensor<double>& input) {
  return model.predict(stats.normalize_input<float>(input)).cast<double>();
}

Tensor<double> predict_celsius(const Model<float>& model, const NormStats& stats, const Tensor<double>& input) {
  Tensor<double> out = predict_normalized(model, stats, input);
  for (double& v : out.data()) v = celsius_from_normalized(v);
  return out;
}

void write_history_csv(const fs::path& path, const std::vector<EpochRecord>& history) {
  std::string text = "epoch,train_loss,val_loss,lr\n";
  char buf[160];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g\n", r.epoch, r.train_loss, r.val_loss, r.lr);
    text += buf;
  }
  io::write_file(path, text);
}

// ---- checkpoints ------------------------------------------------------------

void save_checkpoint(const fs::path& dir, const Model<float>& model, const NormStats& stats,
                     const GridSpec& grid, std::uint64_t seed, std::size_t epoch) {
  const auto& ps = model.parameters();
  json params = json::array();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const std::string file = "params/" + ps.names[i] + ".vxt";
    vxt::write(dir / file, ps.values[i]);
    params.push_back({{"name", ps.names[i]}, {"file", file}, {"shape", ps.values[i].shape()}});
  }
  io::write_json(dir / "manifest.json",
                 {{"model_kind", model.kind()},
                  {"config", model.config()},
                  {"channel_order", channel_order_json()},
                  {"zscore", norm_stats_to_json(stats)},
                  {"temp_norm", {{"offset", kTempOffsetC}, {"scale", kTempScaleK}}},
                  {"grid", grid_to_json(grid)},
                  {"seed", seed},
                  {"epoch", epoch},
                  {"params", params}});
}

Checkpoint load_checkpoint(const fs::path& dir) {
  const json m = io::read_json(dir / "manifest.json");
  Checkpoint ck;
  try {
    require_channel_order(m, "checkpoint");
    if (m.at("temp_norm").at("offset").get<double>() != kTempOffsetC ||
        m.at("temp_norm").at("scale").get<double>() != kTempScaleK) {
      throw ValidationError("checkpoint: unsupported temperature normalization");
    }
    ck.model = make_model<float>(m.at("model_kind").get<std::string>(), m.at("config"), 0);
    ck.stats = norm_stats_from_json(m.at("zscore"));
    ck.grid = grid_from_json(m.at("grid"));
    ck.seed = m.at("seed").get<std::uint64_t>();
    ck.epoch = m.at("epoch").get<std::size_t>();
    auto& ps = ck.model->parameters();
    const json& params = m.at("params");
    if (params.size() != ps.size()) {
      throw ValidationError("checkpoint: " + std::to_string(params.size()) + " parameter blobs, model has " +
                            std::to_string(ps.size()));
    }
    for (std::size_t i = 0; i < ps.size(); ++i) {
      if (params[i].at("name").get<std::string>() != ps.names[i]) {
        throw ValidationError("checkpoint: parameter " + std::to_string(i) + " is '" +
                              params[i].at("name").get<std::string>() + "', expected '" + ps.names[i] + "'");
      }
      Tensor<float> v = vxt::read_f32(dir / params[i].at("file").get<std::string>());
      require_same_shape(v.shape(), ps.values[i].shape(), ("checkpoint " + ps.names[i]).c_str());
      ps.values[i] = std::move(v);
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("checkpoint manifest: ") + e.what());
  }
  return ck;
}

}  // namespace voxtherm
