#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "grasp/io.hpp"
#include "harness.hpp"

namespace fs = std::filesystem;
using grasp::harness::run_cli;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "grasp_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir.parent_path());
  return dir;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = grasp::read_file(e.path());
  return files;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

/// Per-class recall from report.csv.
std::map<std::string, double> recalls(const fs::path& report) {
  std::map<std::string, double> out;
  for (const auto& l : lines_of(grasp::read_file(report))) {
    if (l.rfind("class,", 0) != 0) continue;
    std::vector<std::string> cells;
    std::stringstream ss(l);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    out[cells[1]] = std::stod(cells[3]);
  }
  return out;
}

/// Runs `args` twice into a fresh `out` and returns whether both runs wrote identical files.
bool reproducible(std::vector<std::string> args, const fs::path& out) {
  args.insert(args.end(), {"--out", out.string()});
  fs::remove_all(out);
  REQUIRE(run(args).code == 0);
  const auto first = snapshot(out);
  fs::remove_all(out);
  REQUIRE(run(args).code == 0);
  return first == snapshot(out);
}

/// Small dataset shared by the tests below.
const fs::path& small_data() {
  static const fs::path dir = [] {
    const fs::path d = scratch("small");
    const Run r = run({"generate", "--train", "6", "--val", "4", "--test", "4", "--seed", "3", "--out", d.string()});
    REQUIRE(r.code == 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("generate writes one file per trial and a manifest") {
  const fs::path a = scratch("gen_a");
  CHECK(reproducible({"generate", "--train", "20", "--val", "10", "--test", "10", "--seed", "1"}, a));
  std::size_t trials = 0;
  for (const auto& e : fs::directory_iterator(a / "trials")) trials += e.path().extension() == ".trial" ? 1 : 0;
  CHECK(trials == 40);
  const auto manifest = nlohmann::json::parse(grasp::read_file(a / "manifest.json"));
  CHECK(manifest["trials"].size() == 40);
  CHECK(manifest["format"] == "grasp-dataset");
  std::size_t success = 0;
  for (const auto& t : manifest["trials"]) success += t["scenario"] == "SuccessfulPick" ? 1 : 0;
  CHECK(success == 20);
  CHECK(fs::exists(a / "config.json"));
}

TEST_CASE("generate rejects bad counts") {
  const Run r = run({"generate", "--train", "0", "--out", scratch("zero").string()});
  CHECK(r.code != 0);
  CHECK(r.err.find("--train") != std::string::npos);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
}

TEST_CASE("usage and configuration errors") {
  Run r = run({"train", "--out", scratch("nodata").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("--data") != std::string::npos);
  r = run({"frobnicate"});
  CHECK(r.code == 2);
  r = run({"train", "--data", small_data().string(), "--out", scratch("badparam").string(), "--param", "colour=red"});
  CHECK(r.code == 1);
  CHECK(r.err.find("colour") != std::string::npos);
  r = run({"train", "--data", small_data().string(), "--out", scratch("badtype").string(), "--param",
           "rf_n_estimators=many"});
  CHECK(r.code == 1);
  r = run({"train", "--data", scratch("nowhere").string(), "--out", scratch("x").string()});
  CHECK(r.code == 1);
  r = run({"train", "--data", small_data().string(), "--out", scratch("badsensor").string(), "--sensors", "sonar"});
  CHECK(r.code == 1);
  r = run({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("generate") != std::string::npos);
}

TEST_CASE("train, eval and determinism") {
  const fs::path m1 = scratch("rf_it");
  CHECK(reproducible({"train", "--data", small_data().string(), "--model", "rf", "--sensors", "imu,tension",
                      "--param", "rf_n_estimators=20"},
                     m1));
  const auto meta = nlohmann::json::parse(grasp::read_file(m1 / "model.json"));
  CHECK(meta["input_width"] == 18 * 13 + 1);
  CHECK(meta["family"] == "rf");
  const auto config = nlohmann::json::parse(grasp::read_file(m1 / "config.json"));
  CHECK(config["sensors"] == "imu,tension");
  CHECK(config["rf_n_estimators"] == 20);

  const fs::path e1 = scratch("eval1");
  CHECK(reproducible({"eval", "--data", small_data().string(), "--model-dir", m1.string()}, e1));
  const auto report = lines_of(grasp::read_file(e1 / "report.csv"));
  CHECK(report.size() == 12);
  CHECK(report[0] == "section,name,precision,recall,f1,support,count");
  CHECK(fs::exists(e1 / "confusion.csv"));
  CHECK(fs::exists(e1 / "config.json"));
  std::size_t streams = 0;
  for (const auto& f : fs::directory_iterator(e1 / "streams")) {
    ++streams;
    const auto rows = lines_of(grasp::read_file(f.path()));
    CHECK(rows[0] == "frame,label,prediction");
    CHECK(rows[1].rfind("24,", 0) == 0);
  }
  CHECK(streams == 4);

  const Run bad = run({"eval", "--data", small_data().string(), "--model-dir", m1.string(), "--out",
                       scratch("eval_bad").string(), "--sensors", "imu,ir"});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("'ir'") != std::string::npos);
  const Run cam = run({"eval", "--data", small_data().string(), "--model-dir", m1.string(), "--out",
                       scratch("eval_cam").string(), "--camera", "com"});
  CHECK(cam.code == 1);
  CHECK(cam.err.find("'camera'") != std::string::npos);
}

TEST_CASE("recall on the training split is at least the validation recall") {
  const fs::path m = scratch("rf_all");
  REQUIRE(run({"train", "--data", small_data().string(), "--out", m.string(), "--param", "rf_n_estimators=30"}).code ==
          0);
  const fs::path tr = scratch("eval_train");
  const fs::path va = scratch("eval_val");
  REQUIRE(run({"eval", "--data", small_data().string(), "--model-dir", m.string(), "--out", tr.string(), "--split",
               "train"})
              .code == 0);
  REQUIRE(run({"eval", "--data", small_data().string(), "--model-dir", m.string(), "--out", va.string(), "--split",
               "validation"})
              .code == 0);
  const auto a = recalls(tr / "report.csv");
  const auto b = recalls(va / "report.csv");
  REQUIRE(a.size() == 4);
  for (const auto& [name, r] : a) CHECK(r >= b.at(name));
}

TEST_CASE("lstm training width") {
  const fs::path m = scratch("lstm");
  const Run r = run({"train", "--data", small_data().string(), "--out", m.string(), "--model", "lstm", "--sensors",
                     "imu,tension,tactile", "--camera", "com", "--param", "lstm_epochs=1", "--param",
                     "lstm_hidden_size=4", "--param", "train_stride=25"});
  REQUIRE(r.code == 0);
  const auto meta = nlohmann::json::parse(grasp::read_file(m / "model.json"));
  CHECK(meta["input_width"] == 22);
  CHECK(meta["seq_len"] == 15);
  CHECK(lines_of(grasp::read_file(m / "train_log.csv")).size() == 2);
  const fs::path e = scratch("lstm_eval");
  REQUIRE(run({"eval", "--data", small_data().string(), "--model-dir", m.string(), "--out", e.string()}).code == 0);
  const auto summary = nlohmann::json::parse(grasp::read_file(e / "summary.json"));
  CHECK(summary["filter"] == true);
}

TEST_CASE("ablation tables") {
  const fs::path s1 = scratch("singles");
  const std::vector<std::string> base{"ablate", "--data", small_data().string(), "--param", "rf_n_estimators=5",
                                      "--param", "train_stride=10"};
  auto args = base;
  args.insert(args.end(), {"--set", "singles"});
  CHECK(reproducible(args, s1));
  const auto singles = lines_of(grasp::read_file(s1 / "ablation.csv"));
  CHECK(singles.size() == 1 + 8);
  CHECK(singles[0].rfind("subset,sensors,camera,f1_NoSlip", 0) == 0);
  CHECK(singles[1].rfind("IMU,imu,,", 0) == 0);

  const fs::path c = scratch("combos");
  args = base;
  args.insert(args.end(), {"--set", "combos", "--out", c.string()});
  REQUIRE(run(args).code == 0);
  const auto combos = lines_of(grasp::read_file(c / "ablation.csv"));
  CHECK(combos.size() == 1 + 12);
  CHECK(combos[1].rfind("IMU/IR,imu,ir,", 0) == 0);
  CHECK(fs::exists(c / "config.json"));

  args = base;
  args.insert(args.end(), {"--set", "pairs", "--out", scratch("pairs").string()});
  CHECK(run(args).code == 1);
}

TEST_CASE("taxonomy inspection") {
  const auto manifest = nlohmann::json::parse(grasp::read_file(small_data() / "manifest.json"));
  const fs::path trial_file = small_data() / manifest["trials"][0]["file"].get<std::string>();
  const grasp::Trial t = grasp::load_trial(trial_file);
  REQUIRE(t.scenario == grasp::Scenario::SuccessfulPick);
  const fs::path dir = scratch("taxonomy");
  fs::create_directories(dir);

  auto write_stream = [&](const std::string& name, const std::vector<grasp::GraspState>& pred, std::size_t first) {
    std::ostringstream o;
    o << "frame,prediction\n";
    for (std::size_t i = 0; i < pred.size(); ++i) o << first + i << ',' << grasp::to_string(pred[i]) << '\n';
    grasp::write_file(dir / name, o.str());
    return (dir / name).string();
  };
  auto counters = [](const std::string& text) {
    std::map<std::string, int> out;
    std::istringstream in(text);
    std::string k;
    int v;
    while (in >> k >> v) out[k] = v;
    return out;
  };

  Run r = run({"taxonomy", "--trial", trial_file.string(), "--stream", write_stream("perfect.csv", t.labels, 0)});
  REQUIRE(r.code == 0);
  auto c = counters(r.out);
  CHECK(c.size() == 7);
  for (const auto& [k, v] : c) CHECK(v == 0);

  auto pulse = t.labels;
  const std::size_t T = t.events.terminal_event;
  std::fill(pulse.begin() + static_cast<long>(T * 4 / 10), pulse.begin() + static_cast<long>(T * 4 / 10 + 15),
            grasp::GraspState::SuccessfulPick);
  r = run({"taxonomy", "--trial", trial_file.string(), "--stream", write_stream("pulse.csv", pulse, 0)});
  REQUIRE(r.code == 0);
  c = counters(r.out);
  CHECK(c["false_successful_pick"] == 1);
  int total = 0;
  for (const auto& [k, v] : c) total += v;
  CHECK(total == 1);

  std::vector<grasp::GraspState> short_stream(t.labels.begin(), t.labels.end() - 3);
  r = run({"taxonomy", "--trial", trial_file.string(), "--stream", write_stream("short.csv", short_stream, 0)});
  CHECK(r.code == 1);
  std::vector<grasp::GraspState> long_stream = t.labels;
  long_stream.push_back(long_stream.back());
  r = run({"taxonomy", "--trial", trial_file.string(), "--stream", write_stream("long.csv", long_stream, 0)});
  CHECK(r.code == 1);
}
