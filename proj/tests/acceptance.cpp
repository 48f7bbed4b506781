// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "grasp/eval.hpp"
#include "grasp/features.hpp"
#include "grasp/forest.hpp"
#include "grasp/io.hpp"
#include "grasp/lstm.hpp"
#include "grasp/pipeline.hpp"
#include "grasp/synth.hpp"
#include "harness.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace grasp;
using enum GraspState;

namespace {

// Pinned tolerances and sizes.
constexpr double kFftTol = 1e-9;
constexpr double kForwardTol = 1e-12;
constexpr double kGradRelTol = 1e-4;
constexpr double kGradPassFraction = 0.99;
constexpr double kFdEpsilon = 1e-5;
constexpr std::size_t kSplitCases = 500;
constexpr std::size_t kTaxonomyCases = 1000;
constexpr std::size_t kGradModels = 20;
constexpr double kRfMinF1 = 0.85;
constexpr double kLstmMaxGap = 0.10;
constexpr double kFgMinF1 = 0.90;
constexpr double kClosedFormBudgetS = 1.0;
constexpr double kOracleBudgetS = 120.0;
constexpr double kRfBudgetS = 300.0;
constexpr double kLstmBudgetS = 900.0;

constexpr std::uint64_t kDatasetSeed = 7;
constexpr std::uint64_t kModelSeed = 1;
constexpr std::size_t kTrain = 60, kVal = 20, kTest = 20;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (ok) return;
    pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
  void note(const std::string& s) {
    if (!detail.empty()) detail += "; ";
    detail += s;
  }
};

std::size_t failures = 0;

void report(int id, const std::string& name, const Outcome& o) {
  std::printf("criterion %d %s: %s%s%s\n", id, o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.empty() ? "" : " -- ",
              o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) { return format_report(v); }

std::string f1_list(const EvalReport& r) {
  std::string s = "F1";
  for (GraspState c : kAllStates) s += " " + std::string(to_string(c)) + "=" + fmt(r.metrics[index_of(c)].f1);
  return s;
}

std::string counters(const TaxonomyCounters& t) {
  std::string s;
  const auto v = t.values();
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::string(TaxonomyCounters::kNames[i]) + "=" + std::to_string(v[i]);
  return s;
}

TrainOptions options_for(ModelFamily family, const SensorMask& mask) {
  harness::RunConfig config;
  config.set("model", to_string(family));
  config.set("seed", std::to_string(kModelSeed));
  TrainOptions o = harness::train_options(config);
  o.mask = mask;
  return o;
}

// ---------------------------------------------------------------------------

Outcome closed_form() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  o.require(gini({10, 0, 0, 0}) == 0.0, "gini [10,0,0,0]");
  o.require(gini({5, 5, 0, 0}) == 0.5, "gini [5,5,0,0]");
  o.require(gini({1, 1, 1, 1}) == 0.75, "gini [1,1,1,1]");

  const double pi = std::acos(-1.0);
  std::vector<double> x(kFftWindow);
  for (std::size_t n = 0; n < kFftWindow; ++n) x[n] = std::cos(2 * pi * 5 * static_cast<double>(n) / 25);
  const auto mags = fft_magnitudes(x);
  o.require(std::abs(mags[5] - 12.5) < kFftTol, "|X_5| = " + fmt(mags[5]));
  for (std::size_t k = 0; k < kFftBins; ++k)
    if (k != 5) o.require(mags[k] < kFftTol, "leakage in bin " + std::to_string(k));
  std::fill(x.begin(), x.end(), 1.0);
  o.require(std::abs(fft_magnitudes(x)[0] - 25.0) < kFftTol, "DC bin");

  const std::vector<double> train{2, 4, 6};
  const auto p = fit_normalization(train, 1);
  o.require(p.apply(0, 2) == 0.0 && p.apply(0, 4) == 0.5 && p.apply(0, 6) == 1.0, "min-max {2,4,6}");
  o.require(p.apply(0, 8) == 1.0, "clamp above range");
  const std::vector<double> flat{3, 3, 3};
  o.require(fit_normalization(flat, 1).apply(0, 3) == 0.0, "constant feature");

  ConfusionMatrix half;
  half.add(Slip, Slip);
  half.add(NoSlip, Slip);
  half.add(NoSlip, NoSlip);
  const auto m = prf1(half);
  o.require(m[1].precision == 0.5 && m[1].recall == 1.0, "precision/recall");
  o.require(std::abs(m[1].f1 - 2.0 / 3.0) < 1e-15, "F1 = 2/3");
  o.require(m[3].precision == 0.0 && m[3].recall == 0.0 && m[3].f1 == 0.0, "undefined class reports 0");
  ConfusionMatrix diag;
  for (GraspState s : kAllStates) diag.add(s, s);
  for (const auto& c : prf1(diag)) o.require(c.f1 == 1.0, "diagonal F1");

  const double t = seconds_since(t0);
  o.require(t < kClosedFormBudgetS, "runtime " + fmt(t) + " s");
  o.note("runtime " + fmt(t) + " s");
  return o;
}

double& parameter(LstmTensors& m, std::size_t index) {
  double* out = nullptr;
  std::size_t i = 0;
  m.for_each([&](double& v) {
    if (i++ == index) out = &v;
  });
  return *out;
}

Outcome oracle_equivalence() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);

  std::size_t split_cases = 0, split_mismatch = 0;
  while (split_cases < kSplitCases) {
    SampleSet s;
    s.width = 1 + rng() % 3;
    const std::size_t n = 2 + rng() % 29;
    const int levels = 2 + static_cast<int>(rng() % 9);
    const std::size_t classes = 2 + rng() % 3;
    std::vector<double> row(s.width);
    for (std::size_t i = 0; i < n; ++i) {
      for (double& v : row) v = static_cast<double>(rng() % static_cast<unsigned>(levels)) * 0.5;
      s.push_back(row, kAllStates[rng() % classes]);
    }
    std::vector<std::size_t> feats(s.width);
    for (std::size_t f = 0; f < s.width; ++f) feats[f] = f;
    const auto got = best_split(s, feats);
    const auto want = oracle::best_split(s, feats);
    if (got.has_value() != want.has_value()) {
      ++split_mismatch;
    } else if (got) {
      if (got->feature != want->feature || got->threshold != want->threshold ||
          std::abs(got->impurity - want->impurity) > 1e-12)
        ++split_mismatch;
    }
    if (got || want) ++split_cases;
  }
  o.require(split_mismatch == 0, std::to_string(split_mismatch) + " best_split mismatches");

  std::size_t tax_mismatch = 0;
  for (std::size_t c = 0; c < kTaxonomyCases; ++c) {
    const std::size_t n = 2 + rng() % 299;
    const Scenario sc = rng() % 2 ? Scenario::FailedGrasp : Scenario::SuccessfulPick;
    const std::size_t terminal = 1 + rng() % (n - 1);
    const std::size_t onset = rng() % 3 ? rng() % terminal : terminal;
    std::vector<GraspState> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = i >= terminal ? outcome_of(sc) : i >= onset ? Slip : NoSlip;
    const std::size_t first = rng() % 3 ? rng() % n : 0;
    std::vector<GraspState> pred;
    for (std::size_t f = first; f < n; ++f) {
      const auto mode = rng() % 10;
      pred.push_back(mode < 6 ? labels[f] : mode < 8 && !pred.empty() ? pred.back() : kAllStates[rng() % 4]);
    }
    const ClassificationStream s{first, pred};
    if (failure_taxonomy(labels, sc, terminal, s) != oracle::taxonomy(labels, sc, terminal, s, kDefaultSlack))
      ++tax_mismatch;
  }
  o.require(tax_mismatch == 0, std::to_string(tax_mismatch) + " taxonomy mismatches");

  double worst_forward = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 1 + rng() % 4, h = 1 + rng() % 5, len = 1 + rng() % 6;
    const auto m = LstmModel::random(n, h, rng());
    std::normal_distribution<double> g(0, 1);
    std::vector<double> seq(n * len);
    for (double& v : seq) v = g(rng);
    const auto got = lstm_forward(m, seq).probabilities;
    const auto want = oracle::lstm_forward(m, seq);
    for (std::size_t k = 0; k < kNumStates; ++k) worst_forward = std::max(worst_forward, std::abs(got[k] - want[k]));
  }
  o.require(worst_forward < kForwardTol, "forward error " + fmt(worst_forward));

  std::size_t checked = 0, passed = 0;
  for (std::size_t model = 0; model < kGradModels; ++model) {
    LstmModel m = LstmModel::random(3, 4, 500 + model);
    m.for_each([](double& v) { v *= 3.0; });
    std::normal_distribution<double> g(0, 1);
    std::vector<double> seq(3 * 5);
    for (double& v : seq) v = g(rng);
    const GraspState label = kAllStates[rng() % 4];
    LstmGradients grad = lstm_backward(m, lstm_forward(m, seq).cache, label);
    const auto loss = [&](const LstmModel& mm) { return -std::log(lstm_forward(mm, seq).probabilities[index_of(label)]); };
    for (std::size_t p = 0; p < m.parameter_count(); ++p) {
      LstmModel plus = m, minus = m;
      parameter(plus, p) += kFdEpsilon;
      parameter(minus, p) -= kFdEpsilon;
      const double numeric = (loss(plus) - loss(minus)) / (2 * kFdEpsilon);
      const double analytic = parameter(grad, p);
      const double scale = std::max(std::abs(numeric), std::abs(analytic));
      ++checked;
      if (scale < 1e-8 || std::abs(numeric - analytic) / scale < kGradRelTol) ++passed;
    }
  }
  const double frac = static_cast<double>(passed) / static_cast<double>(checked);
  o.require(frac >= kGradPassFraction, "gradient pass fraction " + fmt(frac));

  const double t = seconds_since(t0);
  o.require(t < kOracleBudgetS, "runtime " + fmt(t) + " s");
  o.note(std::to_string(split_cases) + " splits, " + std::to_string(kTaxonomyCases) + " taxonomy pairs, forward err " +
         fmt(worst_forward) + ", " + std::to_string(passed) + "/" + std::to_string(checked) + " gradients, " + fmt(t) +
         " s");
  return o;
}

Outcome determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "grasp_acceptance_determinism";
  fs::remove_all(root);
  const auto snapshot = [](const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_file(e.path());
    return files;
  };
  const auto twice = [&](const std::string& verb, std::vector<std::string> args, const fs::path& out) {
    args.insert(args.end(), {"--out", out.string()});
    std::ostringstream sink, err;
    fs::remove_all(out);
    const int a = harness::run_cli(args, sink, err);
    const auto first = a == 0 ? snapshot(out) : decltype(snapshot(out)){};
    fs::remove_all(out);
    const int b = harness::run_cli(args, sink, err);
    const bool same = a == 0 && b == 0 && first == snapshot(out);
    o.require(same, verb + " not reproducible" + (err.str().empty() ? "" : ": " + err.str()));
  };
  const fs::path data = root / "data";
  twice("generate", {"generate", "--train", "6", "--val", "4", "--test", "4", "--seed", "11"}, data);
  twice("train rf", {"train", "--data", data.string(), "--param", "rf_n_estimators=20"}, root / "rf");
  twice("train lstm",
        {"train", "--data", data.string(), "--model", "lstm", "--param", "lstm_epochs=2", "--param",
         "lstm_hidden_size=8", "--camera", "pca"},
        root / "lstm");
  twice("eval rf", {"eval", "--data", data.string(), "--model-dir", (root / "rf").string()}, root / "eval_rf");
  twice("eval lstm", {"eval", "--data", data.string(), "--model-dir", (root / "lstm").string()}, root / "eval_lstm");
  twice("ablate",
        {"ablate", "--data", data.string(), "--set", "all", "--param", "rf_n_estimators=5", "--param",
         "train_stride=10"},
        root / "ablate");
  fs::remove_all(root);
  return o;
}

Outcome state_and_filter(const Dataset& ds) {
  Outcome o;
  const auto table = TransitionTable::standard();
  std::size_t trials = 0;
  for (const auto* split : {&ds.train, &ds.validation, &ds.test})
    for (const Trial& t : *split) {
      ++trials;
      o.require(!validate_label_sequence(table, t.labels).has_value(), "illegal labels in " + t.id);
    }
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Scenario sc = seed % 2 ? Scenario::FailedGrasp : Scenario::SuccessfulPick;
    const Trial t = generate_trial(sc, sample_scenario_params(sc, 1000 + seed));
    ++trials;
    o.require(!validate_label_sequence(table, t.labels).has_value(), "illegal labels in " + t.id);
  }

  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 500; ++rep) {
    std::vector<GraspState> p(rng() % 200);
    for (auto& s : p) s = kAllStates[rng() % 4];
    o.require(majority_filter({0, p}).size() == p.size(), "length changed");
  }
  for (GraspState s : kAllStates)
    for (std::size_t n : {1u, 15u, 31u, 100u}) {
      const ClassificationStream u{0, std::vector<GraspState>(n, s)};
      o.require(majority_filter(u) == u && majority_filter(majority_filter(u)) == u, "uniform stream changed");
    }
  for (GraspState base : kAllStates)
    for (GraspState odd : kAllStates) {
      if (odd == base) continue;
      for (std::size_t block = 0; block < 3; ++block)
        for (std::size_t pos = 0; pos < kFilterWindow; ++pos) {
          std::vector<GraspState> p(3 * kFilterWindow, base);
          p[block * kFilterWindow + pos] = odd;
          o.require(majority_filter({0, p}).predictions == std::vector<GraspState>(p.size(), base), "outlier kept");
        }
    }
  o.note(std::to_string(trials) + " label sequences checked");
  return o;
}

const AblationRow& row_named(const std::vector<AblationRow>& rows, const std::string& name) {
  for (const auto& r : rows)
    if (r.name == name) return r;
  throw std::runtime_error("no ablation row " + name);
}

}  // namespace

int main() {
  report(1, "closed-form unit suite", closed_form());
  report(2, "oracle equivalence", oracle_equivalence());

  const Dataset ds = generate_dataset(DatasetCounts::from_totals(kTrain, kVal, kTest), kDatasetSeed);
  const std::span<const Trial> train(ds.train);
  const std::span<const Trial> test(ds.test);

  auto t0 = std::chrono::steady_clock::now();
  const TrainedModel rf = train_model(train, options_for(ModelFamily::Rf, SensorMask::all()));
  const EvalReport rf_report = evaluate(rf, test, EvalOptions::defaults_for(ModelFamily::Rf));
  const double rf_time = seconds_since(t0);
  {
    Outcome o;
    for (GraspState c : kAllStates)
      o.require(rf_report.metrics[index_of(c)].f1 >= kRfMinF1, std::string(to_string(c)) + " F1 below " + fmt(kRfMinF1));
    o.require(rf_time < kRfBudgetS, "runtime " + fmt(rf_time) + " s");
    o.note(f1_list(rf_report) + ", " + fmt(rf_time) + " s");
    report(3, "forest learnability", o);
  }

  t0 = std::chrono::steady_clock::now();
  const TrainedModel lstm = train_model(train, options_for(ModelFamily::Lstm, SensorMask::all()));
  const EvalReport lstm_report = evaluate(lstm, test, EvalOptions::defaults_for(ModelFamily::Lstm));
  const double lstm_time = seconds_since(t0);
  {
    Outcome o;
    for (GraspState c : kAllStates) {
      const double gap = std::abs(lstm_report.metrics[index_of(c)].f1 - rf_report.metrics[index_of(c)].f1);
      o.require(gap <= kLstmMaxGap, std::string(to_string(c)) + " gap " + fmt(gap));
    }
    o.require(lstm_time < kLstmBudgetS, "runtime " + fmt(lstm_time) + " s");
    o.note(f1_list(lstm_report) + ", " + fmt(lstm_time) + " s");
    report(4, "recurrent parity", o);
  }

  {
    Outcome o;
    for (const auto* r : {&rf_report, &lstm_report}) {
      const char* who = r == &rf_report ? "forest" : "recurrent";
      o.require(r->taxonomy.missed_failed_grasp == 0, std::string(who) + " missed failed grasps");
      o.require(r->taxonomy.false_failed_grasp == 0, std::string(who) + " false failed grasps");
    }
    o.note("forest " + counters(rf_report.taxonomy));
    o.note("recurrent " + counters(lstm_report.taxonomy));
    report(5, "no missed or false failed grasps", o);
  }

  const TrainOptions base = options_for(ModelFamily::Rf, SensorMask::all());
  const EvalOptions rf_eval = EvalOptions::defaults_for(ModelFamily::Rf);
  {
    const std::vector<SensorMask> pair{parse_sensor_mask("imu,ir"), parse_sensor_mask("imu,tension")};
    const auto rows = ablation_run(train, test, base, pair, rf_eval);
    const std::size_t ir = rows[0].report.taxonomy.unsustained_successful_pick;
    const std::size_t tension = rows[1].report.taxonomy.unsustained_successful_pick;
    Outcome o;
    o.require(tension < ir, "tension does not reduce unsustained picks");
    o.note("IMU/IR " + std::to_string(ir) + ", IMU/Tension " + std::to_string(tension));
    report(6, "tension sustains successful picks", o);
  }

  {
    const auto singles = single_sensor_masks();
    const auto rows = ablation_run(train, test, base, singles, rf_eval);
    Outcome o;
    const double tension_sp = row_named(rows, "Tension").report.metrics[index_of(SuccessfulPick)].f1;
    const double imu_sp = row_named(rows, "IMU").report.metrics[index_of(SuccessfulPick)].f1;
    o.require(tension_sp > imu_sp, "Tension SuccessfulPick F1 not above IMU");
    std::string fg = "FailedGrasp F1";
    for (const auto& r : rows) {
      const double f = r.report.metrics[index_of(FailedGrasp)].f1;
      o.require(f >= kFgMinF1, r.name + " FailedGrasp F1 " + fmt(f));
      fg += " " + r.name + "=" + fmt(f);
    }
    o.note("SuccessfulPick F1 Tension=" + fmt(tension_sp) + " IMU=" + fmt(imu_sp));
    o.note(fg);
    report(7, "single-sensor ablation direction", o);
  }

  report(8, "byte-identical reruns", determinism());
  report(9, "state machine and filter properties", state_and_filter(ds));

  std::printf("%zu of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
