#include <doctest.h>

#include <filesystem>
#include <map>
#include <sstream>

#include "support.hpp"
#include "voxtherm/cli.hpp"
#include "voxtherm/io.hpp"
#include "voxtherm/trainer.hpp"
#include "voxtherm/vxt.hpp"

using namespace voxtherm;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

/// Every regular file under `root` except run manifests, keyed by relative path.
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  if (fs::is_regular_file(root)) {
    files[""] = io::read_file(root);
    return files;
  }
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().filename() == "run_manifest.json") continue;
    files[fs::relative(e.path(), root).string()] = io::read_file(e.path());
  }
  return files;
}

/// Three-split scene on a 16 x 8 x 16 grid.
const char* kScene = R"({
  "room": {"d": 4.0, "h": 2.0, "w": 4.0},
  "grid": {"D": 16, "H": 8, "W": 16},
  "components": [
    {"id": "a", "kind": "cabinet_split", "pos": [1.0, 0.0, 0.5], "theta": 0, "dims": [0.5, 1.0, 0.75]},
    {"id": "b", "kind": "cabinet_split", "pos": [1.0, 0.0, 1.5], "theta": 0, "dims": [0.5, 1.0, 0.75]},
    {"id": "c", "kind": "cabinet_split", "pos": [1.0, 0.0, 2.5], "theta": 0, "dims": [0.5, 1.0, 0.75]},
    {"id": "crac", "kind": "crac_supply", "pos": [3.0, 0.0, 3.25], "theta": 0, "dims": [0.75, 0.25, 0.5]},
    {"id": "ret", "kind": "crac_return", "pos": [3.0, 1.25, 3.25], "theta": 0, "dims": [0.75, 0.25, 0.5], "crac": "crac"},
    {"id": "g", "kind": "slotted_grille", "pos": [1.75, 0.0, 1.5], "theta": 0, "dims": [0.5, 0.25, 0.5], "crac": "crac"}
  ]})";

class Workspace {
 public:
  Workspace() : root_(fs::temp_directory_path() / "voxtherm_cli_test") {
    fs::remove_all(root_);
    fs::create_directories(root_);
    io::write_file(root_ / "scene.json", kScene);
    io::write_json(root_ / "train.json", {{"model", {{"width", 4}, {"layers", 1}, {"modes", {2, 2, 2}},
                                                     {"projection_hidden", 4}}},
                                          {"train", {{"batch_size", 2}, {"seed", 5}, {"val_fraction", 0.25}}}});
    io::write_json(root_ / "ga.json", {{"population", 6}, {"generations", 4}, {"seed", 2}});
  }
  ~Workspace() { fs::remove_all(root_); }
  std::string operator()(const std::string& rel) const { return (root_ / rel).string(); }
  const fs::path& root() const { return root_; }

 private:
  fs::path root_;
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors") {
  CHECK(cli({}).code == kExitUsage);
  const Run r = cli({"frobnicate"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.rfind("error UsageError: ", 0) == 0);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  CHECK(cli({"gen-scenarios", "--n", "3"}).code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("io and validation errors leave no partial output") {
  Workspace ws;
  Run r = cli({"gen-scenarios", "--scene", ws("missing.json"), "--n", "2", "--seed", "1", "--out", ws("sc")});
  CHECK(r.code == kExitIo);
  CHECK(r.err.rfind("error IoError: ", 0) == 0);
  CHECK_FALSE(fs::exists(ws("sc")));

  io::write_file(ws.root() / "bad.json", R"({"room": {"d": 4, "h": 2, "w": 4}, "grid": {"D": 12, "H": 8, "W": 16}, "components": []})");
  r = cli({"gen-scenarios", "--scene", ws("bad.json"), "--n", "2", "--seed", "1", "--out", ws("sc")});
  CHECK(r.code == kExitValidation);
  CHECK(r.err.rfind("error ", 0) == 0);

  r = cli({"simulate", "--scene", ws("scene.json"), "--scenarios", ws("nowhere"), "--out", ws("sim")});
  CHECK(r.code == kExitIo);
  for (const auto& e : fs::directory_iterator(ws.root())) {
    CHECK(e.path().filename().string().find(".partial") == std::string::npos);
  }
}

TEST_CASE("constant 45 degC heatmap slices to mid gray") {
  Workspace ws;
  vxt::write(ws("hm.vxt"), Tensor<double>({1, 16, 8, 16}, 45.0));
  const Run r = cli({"slices", "--heatmap", ws("hm.vxt"), "--axis", "h", "--indices", "0,3,7", "--out", ws("sl")});
  REQUIRE(r.code == kExitOk);
  const std::string pgm = io::read_file(ws("sl/slice_h_003.pgm"));
  const std::string header = "P5\n16 16\n65535\n";
  REQUIRE(pgm.size() == header.size() + 16 * 16 * 2);
  CHECK(pgm.substr(0, header.size()) == header);
  for (std::size_t i = header.size(); i < pgm.size(); i += 2) {
    const unsigned v = (static_cast<unsigned char>(pgm[i]) << 8) | static_cast<unsigned char>(pgm[i + 1]);
    CHECK(v == 32768);
  }
  const std::string csv = io::read_file(ws("sl/slice_h_000.csv"));
  CHECK(csv.rfind("45.000000,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 16);
  CHECK(fs::exists(ws("sl/run_manifest.json")));
  const auto man = io::read_json(ws("sl/run_manifest.json"));
  CHECK(man["pgm"]["rounding"] == "round-half-up");
  CHECK(cli({"slices", "--heatmap", ws("hm.vxt"), "--axis", "h", "--indices", "8", "--out", ws("sl2")}).code ==
        kExitValidation);
  CHECK(cli({"slices", "--heatmap", ws("hm.vxt"), "--axis", "q", "--indices", "1", "--out", ws("sl2")}).code ==
        kExitUsage);
}

TEST_CASE("pipeline end to end with replay") {
  Workspace ws;
  auto ok = [](const Run& r) {
    INFO(r.err);
    REQUIRE(r.code == kExitOk);
  };
  ok(cli({"gen-scenarios", "--scene", ws("scene.json"), "--n", "6", "--seed", "3", "--out", ws("sc")}));
  ok(cli({"simulate", "--scene", ws("scene.json"), "--scenarios", ws("sc"), "--out", ws("sim"), "--threads", "2"}));
  ok(cli({"build-dataset", "--scene", ws("scene.json"), "--scenarios", ws("sc"), "--samples", ws("sim"), "--out",
          ws("ds")}));
  const auto inputs_before = snapshot(ws("ds"));
  ok(cli({"train", "--dataset", ws("ds"), "--model", "fno", "--config", ws("train.json"), "--epochs", "2", "--out",
          ws("ck")}));
  CHECK(snapshot(ws("ds")) == inputs_before);
  CHECK(fs::exists(ws("ck/manifest.json")));
  CHECK(io::read_file(ws("ck/history.csv")).rfind("epoch,train_loss,val_loss,lr\n", 0) == 0);

  ok(cli({"eval", "--ckpt", ws("ck"), "--dataset", ws("ds"), "--out", ws("r1.json")}));
  ok(cli({"eval", "--ckpt", ws("ck"), "--dataset", ws("ds"), "--out", ws("r2.json")}));
  CHECK(io::read_file(ws("r1.json")) == io::read_file(ws("r2.json")));
  CHECK(fs::exists(ws("r1.json.run.json")));

  const std::string scenario = ws("sc/scenario_00001.json");
  ok(cli({"predict", "--ckpt", ws("ck"), "--scene", ws("scene.json"), "--scenario", scenario, "--out", ws("p.vxt")}));
  CHECK(vxt::read(ws("p.vxt")).shape() == Shape{1, 16, 8, 16});
  ok(cli({"slices", "--heatmap", ws("p.vxt"), "--axis", "d", "--indices", "2", "--out", ws("psl")}));

  ok(cli({"optimize", "--ckpt", ws("ck"), "--scene", ws("scene.json"), "--scenario", scenario, "--ga", ws("ga.json"),
          "--baseline-k", "5", "--out", ws("opt")}));
  const std::string hist = io::read_file(ws("opt/history.csv"));
  CHECK(hist.rfind("generation,best,mean\n", 0) == 0);
  CHECK(std::count(hist.begin(), hist.end(), '\n') == 5);
  const auto best = io::read_json(ws("opt/best_assignment.json"));
  CHECK(best["workload"].size() == 3);
  // Fitness is the normalized maximum of the exported heatmap.
  const auto hm = vxt::read(ws("opt/best_heatmap.vxt"));
  double mx = hm[0];
  for (double v : hm.data()) mx = std::max(mx, v);
  CHECK(best["fitness"].get<double>() == (mx - 20.0) / 50.0);

  // Replays reproduce every artifact byte for byte.
  struct Case {
    std::string out, manifest;
  };
  for (const Case& c : std::vector<Case>{{"sc", "sc/run_manifest.json"},
                                         {"sim", "sim/run_manifest.json"},
                                         {"ds", "ds/run_manifest.json"},
                                         {"ck", "ck/run_manifest.json"},
                                         {"r1.json", "r1.json.run.json"},
                                         {"p.vxt", "p.vxt.run.json"},
                                         {"psl", "psl/run_manifest.json"},
                                         {"opt", "opt/run_manifest.json"}}) {
    const std::string again = ws("replay_" + c.out);
    ok(cli({"replay", "--manifest", ws(c.manifest), "--out", again}));
    INFO(c.out);
    CHECK(snapshot(again) == snapshot(ws(c.out)));
    const auto man = io::read_json(ws(c.manifest));
    CHECK(man.contains("config_digest"));
    CHECK(man["tool_version"] == kToolVersion);
    CHECK(man.contains("wall_clock_seconds"));
  }
}

TEST_CASE("training divergence exits with the numeric code") {
  Workspace ws;
  // A dataset whose target holds a NaN.
  const auto scene = parse_scene(kScene);
  Dataset ds;
  ds.grid = scene.grid;
  for (int i = 0; i < 3; ++i) {
    DatasetSample s;
    s.input = Tensor<double>({3, 16, 8, 16}, 1.0 + i);
    s.target = Tensor<double>({1, 16, 8, 16}, 30.0);
    s.scenario = nlohmann::json::object();
    ds.samples.push_back(s);
  }
  ds.samples[1].target[3] = std::nan("");
  save_dataset(ws.root() / "nan_ds", ds);
  const Run r = cli({"train", "--dataset", ws("nan_ds"), "--model", "bias", "--epochs", "2", "--out", ws("ck")});
  CHECK(r.code == kExitNumeric);
  CHECK(r.err.rfind("error Diverged: ", 0) == 0);
  CHECK_FALSE(fs::exists(ws("ck")));
  CHECK_FALSE(fs::exists(ws(".ck.partial")));
}

}  // TEST_SUITE
