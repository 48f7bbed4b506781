#include "harness.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "grasp/io.hpp"
#include "grasp/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace grasp::harness {

namespace {

constexpr std::uint64_t u(std::uint64_t v) { return v; }

json make_defaults() {
  json d = json::object();
  d["data"] = "";
  d["out"] = "";
  d["model_dir"] = "";
  d["stream"] = "";
  d["trial"] = "";
  d["seed"] = u(1);
  d["model"] = "rf";
  d["sensors"] = "";
  d["camera"] = "";
  d["scalars"] = "final";
  d["filter"] = "auto";
  d["filter_mode"] = "tumbling";
  d["filter_window"] = u(kFilterWindow);
  d["slack"] = u(kDefaultSlack);
  d["set"] = "all";
  d["split"] = "test";
  d["train"] = u(60);
  d["val"] = u(20);
  d["test"] = u(20);
  d["train_stride"] = u(5);
  d["pca_max_frames"] = u(1000);
  d["rf_n_estimators"] = u(100);
  d["rf_max_features"] = u(0);
  d["rf_min_samples_split"] = u(2);
  d["rf_max_depth"] = u(0);
  d["lstm_seq_len"] = u(15);
  d["lstm_learning_rate"] = 0.0005;
  d["lstm_epochs"] = u(30);
  d["lstm_hidden_size"] = u(64);
  d["lstm_batch_size"] = u(32);
  d["lstm_grad_clip_norm"] = 5.0;
  return d;
}

/// Missing or malformed command-line input; reported with exit status 2.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

[[noreturn]] void bad_key(std::string_view key) {
  throw std::invalid_argument("unknown configuration key '" + std::string(key) + "'");
}

const json& default_of(std::string_view key) {
  const json& d = RunConfig::defaults();
  const auto it = d.find(std::string(key));
  if (it == d.end()) bad_key(key);
  return *it;
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "validation" || name == "val") return Split::Validation;
  if (name == "test") return Split::Test;
  throw std::invalid_argument("unknown split '" + std::string(name) + "' (expected train, validation or test)");
}

fs::path required_path(const RunConfig& config, std::string_view key, std::string_view flag) {
  const std::string v = config.str(key);
  if (v.empty()) throw UsageError("missing required option " + std::string(flag));
  return v;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw std::runtime_error("cannot create output directory '" + dir.string() + "'");
}

template <typename Writer>
void write_text(const fs::path& path, Writer&& writer) {
  std::ostringstream out;
  writer(out);
  write_file(path, out.str());
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

/// Mask requested on the command line: the sensor list (or `fallback`), and `camera`
/// enables the camera with the given reducer.
SensorMask requested_mask(const RunConfig& config, const SensorMask& fallback) {
  const std::string sensors = config.str("sensors");
  const std::string camera = config.str("camera");
  const CameraMethod method = camera.empty() ? fallback.camera_method : parse_camera_method(camera);
  SensorMask mask = sensors.empty() ? fallback : parse_sensor_mask(sensors, method);
  if (!camera.empty()) {
    mask.camera = true;
    mask.camera_method = method;
  }
  mask.validate();
  return mask;
}

// ---------------------------------------------------------------------------
// Model directories

struct SavedModel {
  TrainedModel model;
  std::size_t train_trials = 0;
};

json model_metadata(const TrainedModel& m, std::size_t train_trials) {
  json j;
  j["format"] = "grasp-model";
  j["version"] = 1;
  j["family"] = std::string(to_string(m.family));
  j["sensors"] = sensor_list(m.features.mask);
  j["camera"] = std::string(to_string(m.features.mask.camera_method));
  j["scalars"] = std::string(to_string(m.features.scalars));
  j["input_width"] = m.input_width();
  j["seq_len"] = m.seq_len;
  j["train_trials"] = train_trials;
  return j;
}

void save_model(const fs::path& dir, const TrainedModel& m, std::size_t train_trials) {
  if (m.family == ModelFamily::Rf)
    write_text(dir / "model.txt", [&](std::ostream& o) { write_forest(o, std::get<RfModel>(m.model)); });
  else
    write_text(dir / "model.txt", [&](std::ostream& o) { write_lstm(o, std::get<LstmModel>(m.model), m.seq_len); });
  write_text(dir / "normalization.txt", [&](std::ostream& o) { write_normalization(o, m.normalization); });
  if (m.features.pca) write_text(dir / "pca.txt", [&](std::ostream& o) { write_pca(o, *m.features.pca); });
  write_json(dir / "model.json", model_metadata(m, train_trials));
}

SavedModel load_model(const fs::path& dir) {
  const json meta = read_json(dir / "model.json");
  if (meta.value("format", "") != "grasp-model" || meta.value("version", 0) != 1)
    throw std::runtime_error("'" + (dir / "model.json").string() + "' is not a version 1 model description");
  SavedModel saved;
  TrainedModel& m = saved.model;
  m.family = parse_model_family(meta.at("family").get<std::string>());
  m.features.mask = parse_sensor_mask(meta.at("sensors").get<std::string>(),
                                      parse_camera_method(meta.at("camera").get<std::string>()));
  m.features.scalars = parse_scalar_mode(meta.at("scalars").get<std::string>());
  if (m.features.mask.camera && m.features.mask.camera_method == CameraMethod::Pca) {
    std::istringstream in(read_file(dir / "pca.txt"));
    m.features.pca = std::make_shared<const PcaModel>(read_pca(in));
  }
  m.features.validate();
  {
    std::istringstream in(read_file(dir / "normalization.txt"));
    m.normalization = read_normalization(in);
  }
  std::istringstream in(read_file(dir / "model.txt"));
  std::size_t expected = 0;
  if (m.family == ModelFamily::Rf) {
    m.model = read_forest(in);
    expected = rf_feature_count(m.features);
  } else {
    LoadedLstm l = read_lstm(in);
    m.model = std::move(l.model);
    m.seq_len = l.seq_len;
    expected = frame_feature_count(m.features);
  }
  if (m.input_width() != expected || m.normalization.size() != expected)
    throw std::runtime_error("model in '" + dir.string() + "' expects " + std::to_string(m.input_width()) +
                             " features but its sensor mask yields " + std::to_string(expected));
  saved.train_trials = meta.value("train_trials", std::size_t{0});
  return saved;
}

// ---------------------------------------------------------------------------
// Reports

std::string report_csv(const EvalReport& r) {
  std::ostringstream o;
  o << "section,name,precision,recall,f1,support,count\n";
  for (GraspState s : kAllStates) {
    const ClassMetrics& m = r.metrics[index_of(s)];
    o << "class," << to_string(s) << ',' << format_report(m.precision) << ',' << format_report(m.recall) << ','
      << format_report(m.f1) << ',' << m.support << ",\n";
  }
  const auto values = r.taxonomy.values();
  for (std::size_t i = 0; i < TaxonomyCounters::kCount; ++i)
    o << "taxonomy," << TaxonomyCounters::kNames[i] << ",,,,," << values[i] << '\n';
  return o.str();
}

std::string confusion_csv(const ConfusionMatrix& c) {
  std::ostringstream o;
  o << "actual";
  for (GraspState s : kAllStates) o << ',' << to_string(s);
  o << '\n';
  for (GraspState a : kAllStates) {
    o << to_string(a);
    for (GraspState p : kAllStates) o << ',' << c.counts[index_of(a)][index_of(p)];
    o << '\n';
  }
  return o.str();
}

std::string stream_csv(const Trial& trial, const ClassificationStream& stream) {
  std::ostringstream o;
  o << "frame,label,prediction\n";
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const std::size_t f = stream.first_frame + i;
    o << f << ',' << to_string(trial.labels[f]) << ',' << to_string(stream.predictions[i]) << '\n';
  }
  return o.str();
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::size_t parse_index(std::string_view s, const std::string& where) {
  std::size_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw std::runtime_error(where + ": bad frame index '" + std::string(s) + "'");
  return v;
}

ClassificationStream read_stream_csv(const fs::path& path, const Trial& trial) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("'" + path.string() + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv(line);
  const bool with_label = header.size() == 3 && header[0] == "frame" && header[1] == "label" &&
                          header[2] == "prediction";
  if (!with_label && !(header.size() == 2 && header[0] == "frame" && header[1] == "prediction"))
    throw std::runtime_error("'" + path.string() + "' must start with 'frame,label,prediction' or 'frame,prediction'");

  ClassificationStream stream;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path.string() + " line " + std::to_string(line_no);
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) throw std::runtime_error(where + ": expected " + std::to_string(header.size()) + " columns");
    const std::size_t frame = parse_index(cells[0], where);
    if (stream.empty())
      stream.first_frame = frame;
    else if (frame != stream.end_frame())
      throw std::runtime_error(where + ": frames must be consecutive");
    if (frame >= trial.size())
      throw std::runtime_error(where + ": frame " + std::to_string(frame) + " is beyond the trial's " +
                               std::to_string(trial.size()) + " frames");
    if (with_label && parse_state(cells[1]) != trial.labels[frame])
      throw std::runtime_error(where + ": label does not match the trial");
    stream.predictions.push_back(parse_state(cells.back()));
  }
  if (stream.empty()) throw std::runtime_error("'" + path.string() + "' holds no predictions");
  return stream;
}

}  // namespace

// ---------------------------------------------------------------------------
// RunConfig

RunConfig::RunConfig() : values_(defaults()) {}

const json& RunConfig::defaults() {
  static const json d = make_defaults();
  return d;
}

void RunConfig::set(std::string_view key, std::string_view text) {
  const json& d = default_of(key);
  const std::string k(key);
  const auto fail = [&] {
    throw std::invalid_argument("invalid value '" + std::string(text) + "' for '" + k + "'");
  };
  if (d.is_string()) {
    values_[k] = std::string(text);
  } else if (d.is_number_unsigned()) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size()) fail();
    values_[k] = v;
  } else {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size()) fail();
    values_[k] = v;
  }
}

void RunConfig::merge(const json& overrides) {
  if (!overrides.is_object()) throw std::invalid_argument("configuration must be a JSON object");
  for (const auto& [key, value] : overrides.items()) {
    const json& d = default_of(key);
    const bool ok = d.is_string()            ? value.is_string()
                    : d.is_number_unsigned() ? value.is_number_unsigned()
                                             : value.is_number();
    if (!ok) throw std::invalid_argument("configuration key '" + key + "' has the wrong type");
    values_[key] = d.is_number_float() ? json(value.get<double>()) : value;
  }
}

void RunConfig::merge_file(const fs::path& path) { merge(read_json(path)); }

std::string RunConfig::str(std::string_view key) const {
  default_of(key);
  return values_.at(std::string(key)).get<std::string>();
}

std::int64_t RunConfig::integer(std::string_view key) const {
  default_of(key);
  return values_.at(std::string(key)).get<std::int64_t>();
}

std::uint64_t RunConfig::unsigned_integer(std::string_view key) const {
  default_of(key);
  return values_.at(std::string(key)).get<std::uint64_t>();
}

double RunConfig::number(std::string_view key) const {
  default_of(key);
  return values_.at(std::string(key)).get<double>();
}

std::string RunConfig::dump() const { return values_.dump(2) + "\n"; }

TrainOptions train_options(const RunConfig& config) {
  TrainOptions o;
  o.family = parse_model_family(config.str("model"));
  o.mask = requested_mask(config, SensorMask::all());
  o.scalars = parse_scalar_mode(config.str("scalars"));
  o.train_stride = config.unsigned_integer("train_stride");
  o.pca_max_frames = config.unsigned_integer("pca_max_frames");
  const std::uint64_t seed = config.unsigned_integer("seed");
  o.rf.seed = seed;
  o.rf.n_estimators = config.unsigned_integer("rf_n_estimators");
  o.rf.max_features = config.unsigned_integer("rf_max_features");
  o.rf.min_samples_split = config.unsigned_integer("rf_min_samples_split");
  o.rf.max_depth = config.unsigned_integer("rf_max_depth");
  o.lstm.seed = seed;
  o.lstm.seq_len = config.unsigned_integer("lstm_seq_len");
  o.lstm.learning_rate = config.number("lstm_learning_rate");
  o.lstm.epochs = config.unsigned_integer("lstm_epochs");
  o.lstm.hidden_size = config.unsigned_integer("lstm_hidden_size");
  o.lstm.batch_size = config.unsigned_integer("lstm_batch_size");
  o.lstm.grad_clip_norm = config.number("lstm_grad_clip_norm");
  o.validate();
  return o;
}

EvalOptions eval_options(const RunConfig& config, ModelFamily family) {
  EvalOptions o = EvalOptions::defaults_for(family);
  const std::string filter = config.str("filter");
  if (filter == "on")
    o.filter = true;
  else if (filter == "off")
    o.filter = false;
  else if (filter != "auto")
    throw std::invalid_argument("--filter expects on, off or auto, got '" + filter + "'");
  o.filter_mode = parse_filter_mode(config.str("filter_mode"));
  o.filter_window = config.unsigned_integer("filter_window");
  if (o.filter_window == 0 || o.filter_window % 2 == 0)
    throw std::invalid_argument("filter_window must be odd");
  o.slack = config.unsigned_integer("slack");
  return o;
}

std::vector<Trial> load_split(const fs::path& data_dir, Split split) {
  const fs::path manifest = data_dir / "manifest.json";
  if (!fs::exists(manifest)) throw std::runtime_error("no dataset at '" + data_dir.string() + "' (manifest.json missing)");
  const json m = read_json(manifest);
  if (m.value("format", "") != "grasp-dataset" || m.value("version", 0) != 1)
    throw std::runtime_error("'" + manifest.string() + "' is not a version 1 dataset manifest");
  std::vector<Trial> trials;
  for (const json& entry : m.at("trials")) {
    if (parse_split(entry.at("split").get<std::string>()) != split) continue;
    Trial t = load_trial(data_dir / entry.at("file").get<std::string>());
    if (t.id != entry.at("id").get<std::string>())
      throw std::runtime_error("trial file '" + entry.at("file").get<std::string>() + "' holds id '" + t.id + "'");
    trials.push_back(std::move(t));
  }
  if (trials.empty())
    throw std::runtime_error("dataset '" + data_dir.string() + "' has no " + std::string(to_string(split)) + " trials");
  return trials;
}

// ---------------------------------------------------------------------------
// Commands

void cmd_generate(const RunConfig& config) {
  const fs::path out = required_path(config, "out", "--out");
  const std::uint64_t seed = config.unsigned_integer("seed");
  const std::size_t n_train = config.unsigned_integer("train");
  const std::size_t n_val = config.unsigned_integer("val");
  const std::size_t n_test = config.unsigned_integer("test");
  for (const auto& [name, n] : {std::pair{"--train", n_train}, {"--val", n_val}, {"--test", n_test}})
    if (n < 2) throw std::invalid_argument(std::string(name) + " must be at least 2 (one trial per outcome), got " +
                                           std::to_string(n));
  const DatasetCounts counts = DatasetCounts::from_totals(n_train, n_val, n_test);
  const Dataset ds = generate_dataset(counts, seed);

  ensure_dir(out / "trials");
  json manifest;
  manifest["format"] = "grasp-dataset";
  manifest["version"] = 1;
  manifest["seed"] = seed;
  manifest["sensor_rate_hz"] = kSensorRateHz;
  manifest["camera_rate_hz"] = kCameraRateHz;
  json entries = json::array();
  const auto emit = [&](Split split, const std::vector<Trial>& trials) {
    for (std::size_t i = 0; i < trials.size(); ++i) {
      const Trial& t = trials[i];
      const std::string file = "trials/" + t.id + ".trial";
      save_trial(out / file, t);
      entries.push_back({{"id", t.id},
                         {"split", std::string(to_string(split))},
                         {"scenario", std::string(to_string(t.scenario))},
                         {"seed", trial_seed(seed, split, i)},
                         {"frames", t.size()},
                         {"file", file}});
    }
  };
  emit(Split::Train, ds.train);
  emit(Split::Validation, ds.validation);
  emit(Split::Test, ds.test);
  manifest["trials"] = std::move(entries);
  write_json(out / "manifest.json", manifest);
  write_file(out / "config.json", config.dump());
}

void cmd_train(const RunConfig& config) {
  const fs::path data = required_path(config, "data", "--data");
  const fs::path out = required_path(config, "out", "--out");
  const TrainOptions options = train_options(config);
  const std::vector<Trial> trials = load_split(data, Split::Train);
  const TrainedModel model = train_model(trials, options);

  ensure_dir(out);
  save_model(out, model, trials.size());
  write_text(out / "train_log.csv", [&](std::ostream& o) {
    if (model.family == ModelFamily::Lstm) {
      o << "epoch,loss\n";
      for (std::size_t e = 0; e < model.epoch_loss.size(); ++e) o << e + 1 << ',' << format_report(model.epoch_loss[e]) << '\n';
    } else {
      o << "tree,nodes,depth\n";
      const RfModel& rf = std::get<RfModel>(model.model);
      for (std::size_t t = 0; t < rf.trees.size(); ++t)
        o << t << ',' << rf.trees[t].nodes().size() << ',' << rf.trees[t].depth() << '\n';
    }
  });
  write_file(out / "config.json", config.dump());
}

void cmd_eval(const RunConfig& config) {
  const fs::path model_dir = required_path(config, "model_dir", "--model-dir");
  const fs::path data = required_path(config, "data", "--data");
  const fs::path out = required_path(config, "out", "--out");
  const SavedModel saved = load_model(model_dir);
  const TrainedModel& model = saved.model;
  check_mask_compatible(model.features.mask, requested_mask(config, model.features.mask));
  const EvalOptions options = eval_options(config, model.family);
  const std::vector<Trial> trials = load_split(data, parse_split(config.str("split")));
  const EvalReport report = evaluate(model, trials, options);

  ensure_dir(out / "streams");
  write_file(out / "report.csv", report_csv(report));
  write_file(out / "confusion.csv", confusion_csv(report.confusion));
  for (std::size_t i = 0; i < trials.size(); ++i)
    write_file(out / "streams" / (trials[i].id + ".csv"), stream_csv(trials[i], report.trials[i].stream));
  json summary;
  summary["report_schema"] = 1;
  summary["windows"] = report.windows();
  summary["trials"] = trials.size();
  summary["successful_pick_trials"] = report.n_success;
  summary["failed_grasp_trials"] = report.n_fail;
  summary["filter"] = options.filter;
  write_json(out / "summary.json", summary);
  write_file(out / "config.json", config.dump());
}

void cmd_ablate(const RunConfig& config) {
  const fs::path data = required_path(config, "data", "--data");
  const fs::path out = required_path(config, "out", "--out");
  const std::string set = config.str("set");
  std::vector<SensorMask> masks;
  if (set == "singles" || set == "all") masks = single_sensor_masks();
  if (set == "combos" || set == "all") {
    const auto combos = combination_masks();
    masks.insert(masks.end(), combos.begin(), combos.end());
  }
  if (masks.empty()) throw std::invalid_argument("--set expects singles, combos or all, got '" + set + "'");

  TrainOptions base = train_options(config);
  const EvalOptions eval = eval_options(config, base.family);
  const std::vector<Trial> train = load_split(data, Split::Train);
  const std::vector<Trial> test = load_split(data, parse_split(config.str("split")));
  const std::vector<AblationRow> rows = ablation_run(train, test, base, masks, eval);

  ensure_dir(out);
  std::ostringstream o;
  o << "subset,sensors,camera";
  for (GraspState s : kAllStates) o << ",f1_" << to_string(s);
  for (std::string_view name : TaxonomyCounters::kNames) o << ',' << name;
  o << ",windows\n";
  for (const AblationRow& row : rows) {
    o << row.name << ',' << sensor_list(row.mask) << ',' << (row.mask.camera ? to_string(row.mask.camera_method) : "");
    for (const ClassMetrics& m : row.report.metrics) o << ',' << format_report(m.f1);
    for (std::size_t v : row.report.taxonomy.values()) o << ',' << v;
    o << ',' << row.report.windows() << '\n';
  }
  write_file(out / "ablation.csv", o.str());
  write_file(out / "config.json", config.dump());
}

void cmd_taxonomy(const RunConfig& config, std::ostream& out) {
  const Trial trial = load_trial(required_path(config, "trial", "--trial"));
  const ClassificationStream stream = read_stream_csv(required_path(config, "stream", "--stream"), trial);
  if (stream.end_frame() != trial.size())
    throw std::runtime_error("stream ends at frame " + std::to_string(stream.end_frame() - 1) + " but trial '" +
                             trial.id + "' has " + std::to_string(trial.size()) + " frames");
  const TaxonomyCounters c = failure_taxonomy(trial, stream, config.unsigned_integer("slack"));
  const auto values = c.values();
  for (std::size_t i = 0; i < TaxonomyCounters::kCount; ++i) out << TaxonomyCounters::kNames[i] << ' ' << values[i] << '\n';
}

// ---------------------------------------------------------------------------
// Command line

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Grasp-state classification toolkit", "grasp"};
  app.require_subcommand(1);

  std::map<std::string, std::string> flags;
  std::string config_file;
  std::vector<std::string> params;

  struct Flag {
    const char* name;
    const char* key;
    const char* help;
  };
  const Flag common[] = {{"--seed", "seed", "Base random seed"},
                         {"--config", "", "JSON file of configuration overrides"}};
  const auto add = [&](CLI::App* sub, std::initializer_list<Flag> list) {
    for (const Flag& f : list) sub->add_option(f.name, flags[f.key], f.help);
    for (const Flag& f : common) {
      if (std::string_view(f.key).empty())
        sub->add_option(f.name, config_file, f.help)->check(CLI::ExistingFile);
      else
        sub->add_option(f.name, flags[f.key], f.help);
    }
    sub->add_option("--param", params, "key=value configuration override (repeatable)");
  };

  const Flag data{"--data", "data", "Dataset directory"};
  const Flag outdir{"--out", "out", "Output directory"};
  const Flag model{"--model", "model", "Model family: rf or lstm"};
  const Flag sensors{"--sensors", "sensors", "Comma list of imu, ir, tension, tactile, camera"};
  const Flag camera{"--camera", "camera", "Camera reducer: com, pixel, regions or pca (enables the camera)"};
  const Flag filter{"--filter", "filter", "Majority post-filter: on, off or auto"};
  const Flag slack{"--slack", "slack", "Taxonomy matching slack in samples"};
  const Flag split{"--split", "split", "Split to evaluate: train, validation or test"};

  CLI::App* gen = app.add_subcommand("generate", "Generate a synthetic labeled dataset");
  add(gen, {outdir, {"--train", "train", "Training trials"}, {"--val", "val", "Validation trials"},
            {"--test", "test", "Test trials"}});
  CLI::App* train = app.add_subcommand("train", "Train a classifier on the training split");
  add(train, {data, outdir, model, sensors, camera});
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a trained model");
  add(eval, {data, outdir, {"--model-dir", "model_dir", "Directory written by train"}, sensors, camera, filter,
             slack, split});
  CLI::App* ablate = app.add_subcommand("ablate", "Train and evaluate one model per sensor subset");
  add(ablate, {data, outdir, model, filter, slack, split, {"--set", "set", "singles, combos or all"}});
  CLI::App* taxonomy = app.add_subcommand("taxonomy", "Failure taxonomy of one prediction stream");
  add(taxonomy, {{"--stream", "stream", "Prediction stream CSV"}, {"--trial", "trial", "Trial file"}, slack});

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "grasp: usage error: " << e.what() << '\n';
    return 2;
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    RunConfig config;
    if (!config_file.empty()) config.merge_file(config_file);
    for (const std::string& p : params) {
      const auto eq = p.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--param expects key=value, got '" + p + "'");
      config.set(p.substr(0, eq), p.substr(eq + 1));
    }
    for (const auto& [key, value] : flags) {
      const std::string name = "--" + (key == "model_dir" ? std::string("model-dir") : key);
      const CLI::Option* opt = active->get_option_no_throw(name);
      if (opt != nullptr && opt->count() > 0) config.set(key, value);
    }

    const std::string verb = active->get_name();
    if (verb == "generate") cmd_generate(config);
    if (verb == "train") cmd_train(config);
    if (verb == "eval") cmd_eval(config);
    if (verb == "ablate") cmd_ablate(config);
    if (verb == "taxonomy") cmd_taxonomy(config, out);
  } catch (const UsageError& e) {
    err << "grasp: usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "grasp: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace grasp::harness
