#include "voxtherm/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "voxtherm/error.hpp"
#include "voxtherm/ga.hpp"
#include "voxtherm/io.hpp"
#include "voxtherm/metrics.hpp"
#include "voxtherm/parallel.hpp"
#include "voxtherm/pipeline.hpp"
#include "voxtherm/trainer.hpp"
#include "voxtherm/vxt.hpp"

namespace voxtherm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path clean_path(const std::string& s) {
  fs::path p = fs::path(s).lexically_normal();
  if (p.filename().empty() && p.has_parent_path()) p = p.parent_path();
  return p;
}

/// Output written under a sibling staging path and moved into place on
/// commit; removed if the command fails first.
class StagedOutput {
 public:
  explicit StagedOutput(fs::path target)
      : target_(std::move(target)),
        staging_(target_.parent_path() / ("." + target_.filename().string() + ".partial")) {
    fs::remove_all(staging_);
  }
  StagedOutput(const StagedOutput&) = delete;
  StagedOutput& operator=(const StagedOutput&) = delete;
  ~StagedOutput() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(staging_, ec);
    }
  }

  const fs::path& path() const { return staging_; }
  const fs::path& target() const { return target_; }

  void commit() {
    if (!target_.parent_path().empty()) fs::create_directories(target_.parent_path());
    fs::remove_all(target_);
    fs::rename(staging_, target_);
    committed_ = true;
  }

 private:
  fs::path target_, staging_;
  bool committed_ = false;
};

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  json seeds = json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<std::string> config_texts;
  json extra = json::object();
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  std::size_t threads = 1;

  json to_json() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& a : argv) h = fnv1a(a + '\0', h);
    for (const auto& c : config_texts) h = fnv1a(c, h);
    json doc = {{"command", command},
                {"argv", argv},
                {"config_digest", "fnv1a64:" + hex64(h)},
                {"seeds", seeds},
                {"inputs", inputs},
                {"outputs", outputs},
                {"tool_version", kToolVersion},
                {"threads", threads},
                {"wall_clock_seconds",
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
    for (auto it = extra.begin(); it != extra.end(); ++it) doc[it.key()] = it.value();
    return doc;
  }
};

std::string read_config_text(const std::string& path, Manifest& m) {
  std::string text = io::read_file(path);
  m.inputs.push_back(path);
  m.config_texts.push_back(text);
  return text;
}

json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(what + ": " + e.what());
  }
}

Scene load_scene(const std::string& path, Manifest& m) {
  return parse_scene(read_config_text(path, m));
}

std::vector<fs::path> scenario_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json" && e.path().filename() != "run_manifest.json") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw EmptyDataset("no scenario files in " + dir.string());
  return files;
}

std::string numbered(const char* stem, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%05zu%s", stem, i, ext);
  return buf;
}

std::size_t resolve_threads(std::size_t t) { return t ? t : default_thread_count(); }

Heatmap to_heatmap(const Tensor<double>& t) {
  Heatmap hm;
  if (t.rank() == 3) {
    hm.data = t.reshaped({1, t.dim(0), t.dim(1), t.dim(2)});
  } else if (t.rank() == 4 && t.dim(0) == 1) {
    hm.data = t;
  } else {
    throw ShapeMismatch("heatmap must be 1 x D x H x W or D x H x W, got " + shape_string(t.shape()));
  }
  return hm;
}

std::vector<std::size_t> parse_indices(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) {
      throw UsageError("--indices must be a comma-separated list of non-negative integers, got '" + s + "'");
    }
    out.push_back(std::stoul(item));
  }
  if (out.empty()) throw UsageError("--indices is empty");
  return out;
}

/// round-half-up((T - 20) / 50 * 65535) after clamping to [20, 70].
std::uint16_t pgm_level(double celsius) {
  const double c = std::clamp(celsius, kClampMinC, kClampMaxC);
  return static_cast<std::uint16_t>(std::floor((c - kClampMinC) / (kClampMaxC - kClampMinC) * 65535.0 + 0.5));
}

std::string pgm16(const std::vector<double>& values, std::size_t rows, std::size_t cols) {
  std::string out = "P5\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n65535\n";
  for (double v : values) {
    const std::uint16_t p = pgm_level(v);
    out.push_back(static_cast<char>(p >> 8));
    out.push_back(static_cast<char>(p & 0xff));
  }
  return out;
}

std::string csv_grid(const std::vector<double>& values, std::size_t rows, std::size_t cols) {
  std::string out;
  char buf[32];
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      std::snprintf(buf, sizeof buf, "%.6f", values[r * cols + c]);
      if (c) out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

// ---- commands ---------------------------------------------------------------

struct Opts {
  std::string scene, scenarios, samples, dataset, model = "fno", config, ckpt, scenario, heatmap, ga, ranges,
      manifest, out, axis = "h", indices;
  std::size_t n = 0, threads = 0, baseline_k = 50, epochs = 0;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> baseline_seed;
  double sigma = 0.5;
  int radius = -1;
  bool time = false;
};

void finish_dir(StagedOutput& o, Manifest& m) {
  m.outputs.push_back(o.target().string());
  io::write_json(o.path() / "run_manifest.json", m.to_json());
  o.commit();
}

void finish_file(StagedOutput& o, Manifest& m) {
  m.outputs.push_back(o.target().string());
  o.commit();
  io::write_json(o.target().string() + ".run.json", m.to_json());
}

void cmd_gen_scenarios(const Opts& o, Manifest& m, std::ostream& out) {
  const Scene scene = load_scene(o.scene, m);
  SamplingRanges ranges;
  if (!o.ranges.empty()) ranges = sampling_ranges_from_json(parse_json_text(read_config_text(o.ranges, m), "ranges"));
  m.seeds["lhs"] = o.seed;
  const auto scs = sample_scenarios(scene, o.n, o.seed, ranges);
  StagedOutput dir(clean_path(o.out));
  for (std::size_t i = 0; i < scs.size(); ++i) {
    io::write_json(dir.path() / numbered("scenario", i, ".json"), scenario_to_json(scs[i]));
  }
  m.extra["ranges"] = sampling_ranges_to_json(ranges);
  finish_dir(dir, m);
  out << "wrote " << scs.size() << " scenarios to " << dir.target().string() << "\n";
}

void cmd_simulate(const Opts& o, Manifest& m, std::ostream& out) {
  const Scene scene = load_scene(o.scene, m);
  SimulationConfig cfg;
  if (!o.config.empty()) cfg = simulation_config_from_json(parse_json_text(read_config_text(o.config, m), "config"));
  if (!scene.simulation_eligible()) {
    throw ValidationError("scene needs at least one split, CRAC supply, CRAC return and grille to simulate");
  }
  const auto files = scenario_files(o.scenarios);
  m.inputs.push_back(o.scenarios);
  std::vector<Scenario> scs;
  for (const auto& f : files) {
    scs.push_back(parse_scenario(io::read_file(f)));
    validate_scenario(scene, scs.back());
  }
  std::vector<SparseSamples> samples(scs.size());
  parallel_for(scs.size(), m.threads, [&](std::size_t i) { samples[i] = simulate(scene, scs[i], cfg); });
  StagedOutput dir(clean_path(o.out));
  for (std::size_t i = 0; i < files.size(); ++i) {
    vxt::write(dir.path() / (files[i].stem().string() + ".vxt"), samples[i].samples.empty()
                                                                     ? Tensor<double>({0, 4})
                                                                     : samples[i].to_tensor());
  }
  m.seeds["sample"] = cfg.sample_seed;
  m.extra["simulation"] = simulation_config_to_json(cfg);
  finish_dir(dir, m);
  out << "simulated " << scs.size() << " scenarios into " << dir.target().string() << "\n";
}

void cmd_build_dataset(const Opts& o, Manifest& m, std::ostream& out) {
  const Scene scene = load_scene(o.scene, m);
  const auto files = scenario_files(o.scenarios);
  m.inputs.push_back(o.scenarios);
  m.inputs.push_back(o.samples);
  std::vector<Scenario> scs;
  std::vector<SparseSamples> samples;
  for (const auto& f : files) {
    scs.push_back(parse_scenario(io::read_file(f)));
    validate_scenario(scene, scs.back());
    const fs::path sp = fs::path(o.samples) / (f.stem().string() + ".vxt");
    if (!fs::exists(sp)) throw MissingEntry("no samples for scenario '" + f.stem().string() + "' in " + o.samples);
    samples.push_back(SparseSamples::from_tensor(vxt::read(sp)));
  }
  const Dataset ds = build_dataset(scene, scs, samples, o.sigma, o.radius, m.threads);
  StagedOutput dir(clean_path(o.out));
  save_dataset(dir.path(), ds);
  m.extra["targets"] = ds.target_meta;
  finish_dir(dir, m);
  out << "built dataset of " << ds.size() << " samples in " << dir.target().string() << "\n";
}

void cmd_train(const Opts& o, Manifest& m, std::ostream& out) {
  json cfg = json::object();
  if (!o.config.empty()) cfg = parse_json_text(read_config_text(o.config, m), "config");
  if (!cfg.is_object()) throw SchemaError("train config must be an object");
  TrainConfig tc = train_config_from_json(cfg.value("train", json::object()));
  if (o.epochs) tc.epochs = o.epochs;
  tc.threads = m.threads;
  const Dataset ds = load_dataset(o.dataset);
  m.inputs.push_back(o.dataset);
  auto model = make_model<float>(o.model, cfg.value("model", json::object()), derive_seed(tc.seed, 7));
  m.seeds["train"] = tc.seed;

  StagedOutput dir(clean_path(o.out));
  std::vector<EpochRecord> history;
  TrainResult r = train(ds, *model, tc, [&](const EpochRecord& e) {
    history.push_back(e);
    char buf[160];
    std::snprintf(buf, sizeof buf, "epoch %zu train_loss %.6e val_loss %.6e lr %.3e\n", e.epoch, e.train_loss,
                  e.val_loss, e.lr);
    out << buf << std::flush;
  });
  save_checkpoint(dir.path(), *model, r.stats, ds.grid, tc.seed, r.best_epoch);
  write_history_csv(dir.path() / "history.csv", r.history);
  io::write_json(dir.path() / "split.json", {{"train", r.split.train}, {"val", r.split.val}});
  m.extra["train_config"] = train_config_to_json(tc);
  m.extra["model_config"] = model->config();
  m.extra["best_epoch"] = r.best_epoch;
  finish_dir(dir, m);
  out << "best epoch " << r.best_epoch << " val_loss " << r.best_val << "\n";
}

void cmd_eval(const Opts& o, Manifest& m, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(o.ckpt);
  const Dataset ds = load_dataset(o.dataset);
  m.inputs = {o.ckpt, o.dataset};
  std::vector<std::size_t> idx(ds.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const EvalReport r = evaluate_model(*ck.model, ck.stats, ds, idx, m.threads, o.time);
  json doc = to_json(r);
  doc["model_kind"] = ck.model->kind();
  doc["samples"] = ds.size();
  StagedOutput file(clean_path(o.out));
  io::write_json(file.path(), doc);
  finish_file(file, m);
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-6s mse %.6f  mean_ae %.4f  top_t_ae %.4f  ssim3d %.4f", ck.model->kind().c_str(),
                r.mse, r.mean_ae, r.top_t_ae, r.ssim3d);
  out << buf;
  if (o.time) {
    std::snprintf(buf, sizeof buf, "  inference_s %.4f", r.inference_seconds);
    out << buf;
  }
  out << "\n";
}

void cmd_predict(const Opts& o, Manifest& m, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(o.ckpt);
  m.inputs.push_back(o.ckpt);
  const Scene scene = load_scene(o.scene, m);
  const Scenario sc = parse_scenario(read_config_text(o.scenario, m));
  validate_scenario(scene, sc);
  const Tensor<double> hm = predict_celsius(*ck.model, ck.stats, voxelize(scene, sc).data);
  StagedOutput file(clean_path(o.out));
  vxt::write(file.path(), hm);
  m.extra["units"] = "degC";
  m.extra["clamped"] = false;
  finish_file(file, m);
  double mx = hm[0];
  for (double v : hm.data()) mx = std::max(mx, v);
  out << "predicted " << shape_string(hm.shape()) << " max " << mx << " degC\n";
}

void cmd_slices(const Opts& o, Manifest& m, std::ostream& out) {
  const Heatmap hm = to_heatmap(vxt::read(o.heatmap));
  m.inputs.push_back(o.heatmap);
  const std::size_t D = hm.data.dim(1), H = hm.data.dim(2), W = hm.data.dim(3);
  if (o.axis != "d" && o.axis != "h" && o.axis != "w") throw UsageError("--axis must be d, h or w");
  const char ax = o.axis[0];
  const std::size_t extent = ax == 'd' ? D : ax == 'h' ? H : W;
  const std::size_t rows = ax == 'd' ? H : D;
  const std::size_t cols = ax == 'w' ? H : W;
  const auto indices = parse_indices(o.indices);
  for (auto i : indices) {
    if (i >= extent) {
      throw InvalidRange("slice index " + std::to_string(i) + " outside axis " + o.axis + " of length " +
                         std::to_string(extent));
    }
  }
  StagedOutput dir(clean_path(o.out));
  for (auto i : indices) {
    std::vector<double> v(rows * cols);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        std::size_t d = 0, h = 0, w = 0;
        if (ax == 'd') d = i, h = r, w = c;
        if (ax == 'h') d = r, h = i, w = c;
        if (ax == 'w') d = r, h = c, w = i;
        v[r * cols + c] = hm.data[(d * H + h) * W + w];
      }
    char stem[32];
    std::snprintf(stem, sizeof stem, "slice_%c_%03zu", ax, i);
    io::write_file(dir.path() / (std::string(stem) + ".pgm"), pgm16(v, rows, cols));
    io::write_file(dir.path() / (std::string(stem) + ".csv"), csv_grid(v, rows, cols));
  }
  m.extra["pgm"] = {{"maxval", 65535},
                    {"range_degC", {kClampMinC, kClampMaxC}},
                    {"rounding", "round-half-up"},
                    {"byte_order", "big-endian"}};
  finish_dir(dir, m);
  out << "wrote " << indices.size() << " slices to " << dir.target().string() << "\n";
}

void cmd_optimize(const Opts& o, Manifest& m, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(o.ckpt);
  m.inputs.push_back(o.ckpt);
  const Scene scene = load_scene(o.scene, m);
  const Scenario base = parse_scenario(read_config_text(o.scenario, m));
  validate_scenario(scene, base);
  GaConfig gc;
  if (!o.ga.empty()) gc = ga_config_from_json(parse_json_text(read_config_text(o.ga, m), "ga config"));
  const std::uint64_t bseed = o.baseline_seed ? *o.baseline_seed : derive_seed(gc.seed, 1);
  m.seeds["ga"] = gc.seed;
  m.seeds["baseline"] = bseed;

  const Assignment baseline = workload_assignment(scene, base);
  FitnessCache fitness(surrogate_fitness(scene, base, *ck.model, ck.stats));
  const GaResult r = evolve(baseline, fitness, gc, m.threads);
  const BaselineResult b = baseline_random(baseline, fitness, o.baseline_k, bseed, m.threads);
  const double reduction = reduction_percent(b.mean, r.best_fitness);
  const Tensor<double> best_hm = predict_assignment(scene, base, r.best, *ck.model, ck.stats);

  StagedOutput dir(clean_path(o.out));
  std::string csv = "generation,best,mean\n";
  char buf[128];
  for (const auto& g : r.history) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g\n", g.generation, g.best, g.mean);
    csv += buf;
  }
  io::write_file(dir.path() / "history.csv", csv);
  json assign = json::object();
  const auto ids = scene.split_ids();
  for (std::size_t i = 0; i < ids.size(); ++i) assign[ids[i]] = r.best[i];
  io::write_json(dir.path() / "best_assignment.json",
                 {{"workload", assign},
                  {"fitness", r.best_fitness},
                  {"baseline", {{"k", o.baseline_k}, {"mean", b.mean}, {"min", b.min}, {"seed", bseed}}},
                  {"reduction_percent", reduction},
                  {"evaluations", r.evaluations},
                  {"ga", ga_config_to_json(gc)}});
  vxt::write(dir.path() / "best_heatmap.vxt", best_hm);
  finish_dir(dir, m);
  std::snprintf(buf, sizeof buf, "best fitness %.6f  baseline mean %.6f  reduction %.3f%%\n", r.best_fitness, b.mean,
                reduction);
  out << buf;
}

int exit_code_for(ErrorClass c) {
  switch (c) {
    case ErrorClass::Usage: return kExitUsage;
    case ErrorClass::Validation: return kExitValidation;
    case ErrorClass::Numeric: return kExitNumeric;
    case ErrorClass::Io: return kExitIo;
  }
  return kExitIo;
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Voxel thermal surrogate pipeline", "voxtherm"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  Opts o;

  auto threads = [&](CLI::App* s) {
    s->add_option("--threads", o.threads, "worker cap (0: VOXTHERM_THREADS or 1)");
  };

  auto* gen = app.add_subcommand("gen-scenarios", "Latin hypercube scenarios for a scene");
  gen->add_option("--scene", o.scene)->required();
  gen->add_option("--n", o.n)->required();
  gen->add_option("--seed", o.seed)->required();
  gen->add_option("--ranges", o.ranges, "sampling ranges JSON");
  gen->add_option("--out", o.out)->required();

  auto* sim = app.add_subcommand("simulate", "Oracle solve and sparse sampling per scenario");
  sim->add_option("--scene", o.scene)->required();
  sim->add_option("--scenarios", o.scenarios)->required();
  sim->add_option("--config", o.config, "simulation config JSON");
  sim->add_option("--out", o.out)->required();
  threads(sim);

  auto* build = app.add_subcommand("build-dataset", "Voxelized inputs paired with dense targets");
  build->add_option("--scene", o.scene)->required();
  build->add_option("--scenarios", o.scenarios)->required();
  build->add_option("--samples", o.samples)->required();
  build->add_option("--sigma", o.sigma);
  build->add_option("--radius", o.radius);
  build->add_option("--out", o.out)->required();
  threads(build);

  auto* tr = app.add_subcommand("train", "Train a surrogate");
  tr->add_option("--dataset", o.dataset)->required();
  tr->add_option("--model", o.model)->check(CLI::IsMember({"fno", "unet", "bias"}));
  tr->add_option("--config", o.config, "JSON with optional 'model' and 'train' objects");
  tr->add_option("--epochs", o.epochs, "override train.epochs");
  tr->add_option("--out", o.out)->required();
  threads(tr);

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  ev->add_option("--ckpt", o.ckpt)->required();
  ev->add_option("--dataset", o.dataset)->required();
  ev->add_flag("--time", o.time, "also measure single-sample inference time");
  ev->add_option("--out", o.out)->required();
  threads(ev);

  auto* pr = app.add_subcommand("predict", "Predict a heatmap in degC");
  pr->add_option("--ckpt", o.ckpt)->required();
  pr->add_option("--scene", o.scene)->required();
  pr->add_option("--scenario", o.scenario)->required();
  pr->add_option("--out", o.out)->required();

  auto* sl = app.add_subcommand("slices", "Export 2-D slices as 16-bit PGM and CSV");
  sl->add_option("--heatmap", o.heatmap)->required();
  sl->add_option("--axis", o.axis);
  sl->add_option("--indices", o.indices)->required();
  sl->add_option("--out", o.out)->required();

  auto* op = app.add_subcommand("optimize", "Genetic workload redistribution");
  op->add_option("--ckpt", o.ckpt)->required();
  op->add_option("--scene", o.scene)->required();
  op->add_option("--scenario", o.scenario)->required();
  op->add_option("--ga", o.ga, "GA config JSON");
  op->add_option("--baseline-k", o.baseline_k);
  op->add_option("--baseline-seed", o.baseline_seed);
  op->add_option("--out", o.out)->required();
  threads(op);

  auto* rp = app.add_subcommand("replay", "Re-run the command recorded in a run manifest");
  rp->add_option("--manifest", o.manifest)->required();
  rp->add_option("--out", o.out, "redirect the recorded --out");

  std::vector<std::string> argv_store{"voxtherm"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (dynamic_cast<const CLI::CallForVersion*>(&e) ? std::string(kToolVersion) + "\n" : app.help());
      return kExitOk;
    }
    err << "error UsageError: " << one_line(e.what()) << "\n";
    return kExitUsage;
  }

  try {
    if (rp->parsed()) {
      const json man = io::read_json(o.manifest);
      std::vector<std::string> replay_args;
      try {
        replay_args = man.at("argv").get<std::vector<std::string>>();
      } catch (const json::exception& e) {
        throw SchemaError(std::string("manifest: ") + e.what());
      }
      if (!o.out.empty()) {
        bool replaced = false;
        for (std::size_t i = 0; i + 1 < replay_args.size(); ++i) {
          if (replay_args[i] == "--out") {
            replay_args[i + 1] = o.out;
            replaced = true;
          }
        }
        if (!replaced) throw UsageError("recorded command has no --out to redirect");
      }
      if (!replay_args.empty() && replay_args[0] == "replay") throw UsageError("refusing to replay a replay");
      return run_cli(replay_args, out, err);
    }

    Manifest m;
    m.command = app.get_subcommands().front()->get_name();
    m.argv = args;
    m.threads = resolve_threads(o.threads);
    if (gen->parsed()) cmd_gen_scenarios(o, m, out);
    if (sim->parsed()) cmd_simulate(o, m, out);
    if (build->parsed()) cmd_build_dataset(o, m, out);
    if (tr->parsed()) cmd_train(o, m, out);
    if (ev->parsed()) cmd_eval(o, m, out);
    if (pr->parsed()) cmd_predict(o, m, out);
    if (sl->parsed()) cmd_slices(o, m, out);
    if (op->parsed()) cmd_optimize(o, m, out);
    return kExitOk;
  } catch (const Error& e) {
    err << "error " << e.category() << ": " << one_line(e.what()) << "\n";
    return exit_code_for(e.error_class());
  } catch (const fs::filesystem_error& e) {
    err << "error IoError: " << one_line(e.what()) << "\n";
    return kExitIo;
  } catch (const json::exception& e) {
    err << "error SchemaError: " << one_line(e.what()) << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error InternalError: " << one_line(e.what()) << "\n";
    return kExitIo;
  }
}

int run_cli(const std::vector<std::string>& args) { return run_cli(args, std::cout, std::cerr); }

}  // namespace voxtherm
