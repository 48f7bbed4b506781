#include "grasp/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace grasp {

std::string format_exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_report(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

namespace {

/// Line-oriented tokenizer that reports errors with the line number.
class Reader {
 public:
  Reader(std::istream& in, std::string_view what) : in_(in), what_(what) {}

  /// Tokens of the next non-empty line.
  std::vector<std::string_view> next() {
    while (std::getline(in_, line_)) {
      ++line_no_;
      tokens_.clear();
      std::size_t i = 0;
      while (i < line_.size()) {
        while (i < line_.size() && (line_[i] == ' ' || line_[i] == '\t' || line_[i] == '\r')) ++i;
        const std::size_t start = i;
        while (i < line_.size() && line_[i] != ' ' && line_[i] != '\t' && line_[i] != '\r') ++i;
        if (i > start) tokens_.emplace_back(line_.data() + start, i - start);
      }
      if (!tokens_.empty()) return tokens_;
    }
    fail("unexpected end of input");
  }

  /// Next line, which must be `key` followed by exactly `values` tokens.
  std::vector<std::string_view> keyed(std::string_view key, std::size_t values) {
    auto t = next();
    if (t.front() != key) fail("expected '" + std::string(key) + "', found '" + std::string(t.front()) + "'");
    if (t.size() != values + 1) fail("'" + std::string(key) + "' expects " + std::to_string(values) + " values");
    t.erase(t.begin());
    return t;
  }

  void header(std::string_view magic, int version) {
    const auto t = keyed(magic, 1);
    if (to_int(t[0]) != version) fail("unsupported format version " + std::string(t[0]));
  }

  double to_double(std::string_view s) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) fail("bad number '" + std::string(s) + "'");
    return v;
  }

  long long to_int(std::string_view s) {
    long long v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) fail("bad integer '" + std::string(s) + "'");
    return v;
  }

  std::size_t to_size(std::string_view s) {
    const long long v = to_int(s);
    if (v < 0) fail("negative count '" + std::string(s) + "'");
    return static_cast<std::size_t>(v);
  }

  std::vector<double> doubles(std::size_t count) {
    std::vector<double> out;
    out.reserve(count);
    while (out.size() < count) {
      for (auto tok : next()) {
        if (out.size() == count) fail("too many values");
        out.push_back(to_double(tok));
      }
    }
    return out;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw std::runtime_error(std::string(what_) + " line " + std::to_string(line_no_) + ": " + msg);
  }

 private:
  std::istream& in_;
  std::string_view what_;
  std::string line_;
  std::vector<std::string_view> tokens_;
  std::size_t line_no_ = 0;
};

void write_row(std::ostream& out, const double* data, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) out << (i ? " " : "") << format_exact(data[i]);
  out << '\n';
}

void write_matrix(std::ostream& out, std::string_view name, const Eigen::MatrixXd& m) {
  out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? " " : "") << format_exact(m(r, c));
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix(Reader& r, std::string_view name, Eigen::Index rows, Eigen::Index cols) {
  const auto t = r.keyed(name, 2);
  if (static_cast<Eigen::Index>(r.to_size(t[0])) != rows || static_cast<Eigen::Index>(r.to_size(t[1])) != cols)
    r.fail("'" + std::string(name) + "' has the wrong shape");
  const auto values = r.doubles(static_cast<std::size_t>(rows * cols));
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = values[static_cast<std::size_t>(i * cols + j)];
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Trials

void write_trial(std::ostream& out, const Trial& trial) {
  out << "grasp-trial 1\n";
  out << "id " << trial.id << '\n';
  out << "scenario " << to_string(trial.scenario) << '\n';
  out << "sensor_rate_hz " << format_exact(kSensorRateHz) << '\n';
  out << "camera_rate_hz " << format_exact(kCameraRateHz) << '\n';
  out << "accel_lsb " << format_exact(kAccelLsb) << '\n';
  out << "gyro_lsb " << format_exact(kGyroLsb) << '\n';
  out << "slip_onset ";
  if (trial.events.slip_onset)
    out << *trial.events.slip_onset << '\n';
  else
    out << "none\n";
  out << "terminal_event " << trial.events.terminal_event << '\n';
  out << "frames " << trial.frames.size() << '\n';
  for (std::size_t i = 0; i < trial.frames.size(); ++i) {
    const SensorFrame& f = trial.frames[i];
    out << format_exact(f.t);
    for (std::size_t c = 0; c < kImuChannels; ++c) out << ' ' << std::llround(f.imu[c] / imu_lsb(c));
    out << ' ' << f.ir << ' ' << f.tension << ' ' << f.tactile << ' ' << f.camera_index << ' '
        << to_string(trial.labels[i]) << '\n';
  }
  const int width = trial.camera.empty() ? Mask::kDefaultWidth : trial.camera.front().mask.width();
  const int height = trial.camera.empty() ? Mask::kDefaultHeight : trial.camera.front().mask.height();
  out << "camera " << trial.camera.size() << ' ' << width << ' ' << height << '\n';
  for (const CameraFrame& c : trial.camera) {
    out << "image " << format_exact(c.t) << '\n';
    for (int y = 0; y < height; ++y) {
      // Alternating run lengths, starting with unset cells.
      bool value = false;
      int run = 0;
      bool first = true;
      for (int x = 0; x < width; ++x) {
        if (c.mask.at(x, y) == value) {
          ++run;
          continue;
        }
        out << (first ? "" : " ") << run;
        first = false;
        value = !value;
        run = 1;
      }
      out << (first ? "" : " ") << run << '\n';
    }
  }
  if (trial.slip_velocity) {
    out << "slip_velocity " << trial.slip_velocity->size() << '\n';
    for (double v : *trial.slip_velocity) out << format_exact(v) << '\n';
  } else {
    out << "slip_velocity none\n";
  }
  out << "end\n";
}

Trial read_trial(std::istream& in) {
  Reader r(in, "trial");
  r.header("grasp-trial", 1);
  Trial trial;
  trial.id = std::string(r.keyed("id", 1)[0]);
  trial.scenario = parse_scenario(r.keyed("scenario", 1)[0]);
  if (r.to_double(r.keyed("sensor_rate_hz", 1)[0]) != kSensorRateHz) r.fail("unsupported sensor rate");
  if (r.to_double(r.keyed("camera_rate_hz", 1)[0]) != kCameraRateHz) r.fail("unsupported camera rate");
  if (r.to_double(r.keyed("accel_lsb", 1)[0]) != kAccelLsb) r.fail("unsupported accelerometer scale");
  if (r.to_double(r.keyed("gyro_lsb", 1)[0]) != kGyroLsb) r.fail("unsupported gyroscope scale");
  const auto onset = r.keyed("slip_onset", 1)[0];
  if (onset != "none") trial.events.slip_onset = r.to_size(onset);
  trial.events.terminal_event = r.to_size(r.keyed("terminal_event", 1)[0]);

  const std::size_t n = r.to_size(r.keyed("frames", 1)[0]);
  trial.frames.resize(n);
  trial.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = r.next();
    if (t.size() != 1 + kImuChannels + 5) r.fail("frame row needs " + std::to_string(kImuChannels + 6) + " fields");
    SensorFrame& f = trial.frames[i];
    f.t = r.to_double(t[0]);
    for (std::size_t c = 0; c < kImuChannels; ++c)
      f.imu[c] = static_cast<double>(r.to_int(t[1 + c])) * imu_lsb(c);
    f.ir = static_cast<int>(r.to_int(t[19]));
    f.tension = static_cast<int>(r.to_int(t[20]));
    f.tactile = static_cast<int>(r.to_int(t[21]));
    f.camera_index = r.to_size(t[22]);
    try {
      trial.labels[i] = parse_state(t[23]);
    } catch (const std::invalid_argument& e) {
      r.fail(e.what());
    }
  }

  const auto cam = r.keyed("camera", 3);
  const std::size_t images = r.to_size(cam[0]);
  const auto width = static_cast<int>(r.to_size(cam[1]));
  const auto height = static_cast<int>(r.to_size(cam[2]));
  if (width < 1 || height < 1) r.fail("bad mask size");
  trial.camera.reserve(images);
  for (std::size_t k = 0; k < images; ++k) {
    CameraFrame c{r.to_double(r.keyed("image", 1)[0]), Mask(width, height)};
    for (int y = 0; y < height; ++y) {
      int x = 0;
      bool value = false;
      for (auto tok : r.next()) {
        const auto run = static_cast<int>(r.to_size(tok));
        if (x + run > width) r.fail("mask row longer than width");
        for (int i = 0; i < run; ++i) c.mask.set(x + i, y, value);
        x += run;
        value = !value;
      }
      if (x != width) r.fail("mask row shorter than width");
    }
    trial.camera.push_back(std::move(c));
  }

  auto kin = r.next();
  if (kin.size() != 2 || kin[0] != "slip_velocity") r.fail("expected 'slip_velocity'");
  if (kin[1] != "none") trial.slip_velocity = r.doubles(r.to_size(kin[1]));
  if (r.next().front() != "end") r.fail("expected 'end'");

  try {
    check_trial(trial);
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error("trial '" + trial.id + "': " + e.what());
  }
  return trial;
}

// ---------------------------------------------------------------------------
// Forest

void write_forest(std::ostream& out, const RfModel& model) {
  const RfHyperparams& hp = model.hyperparams;
  out << "grasp-forest 1\n";
  out << "n_features " << model.n_features << '\n';
  out << "classes";
  for (bool c : model.classes) out << ' ' << (c ? 1 : 0);
  out << '\n';
  out << "n_estimators " << hp.n_estimators << '\n';
  out << "max_features " << hp.max_features << '\n';
  out << "min_samples_split " << hp.min_samples_split << '\n';
  out << "max_depth " << hp.max_depth << '\n';
  out << "seed " << hp.seed << '\n';
  out << "trees " << model.trees.size() << '\n';
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    const auto& nodes = model.trees[t].nodes();
    out << "tree " << t << ' ' << nodes.size() << '\n';
    for (const TreeNode& n : nodes) {
      out << n.feature << ' ' << format_exact(n.threshold) << ' ' << n.left << ' ' << n.right;
      for (std::size_t c : n.counts) out << ' ' << c;
      out << '\n';
    }
  }
}

RfModel read_forest(std::istream& in) {
  Reader r(in, "forest");
  r.header("grasp-forest", 1);
  RfModel model;
  model.n_features = r.to_size(r.keyed("n_features", 1)[0]);
  const auto classes = r.keyed("classes", kNumStates);
  for (std::size_t k = 0; k < kNumStates; ++k) model.classes[k] = r.to_int(classes[k]) != 0;
  RfHyperparams& hp = model.hyperparams;
  hp.n_estimators = r.to_size(r.keyed("n_estimators", 1)[0]);
  hp.max_features = r.to_size(r.keyed("max_features", 1)[0]);
  hp.min_samples_split = r.to_size(r.keyed("min_samples_split", 1)[0]);
  hp.max_depth = r.to_size(r.keyed("max_depth", 1)[0]);
  hp.seed = std::stoull(std::string(r.keyed("seed", 1)[0]));
  const std::size_t n_trees = r.to_size(r.keyed("trees", 1)[0]);
  if (n_trees != hp.n_estimators) r.fail("tree count does not match n_estimators");
  for (std::size_t t = 0; t < n_trees; ++t) {
    const auto head = r.keyed("tree", 2);
    if (r.to_size(head[0]) != t) r.fail("trees out of order");
    std::vector<TreeNode> nodes(r.to_size(head[1]));
    for (TreeNode& n : nodes) {
      const auto f = r.next();
      if (f.size() != 4 + kNumStates) r.fail("node row needs 8 fields");
      n.feature = static_cast<std::int32_t>(r.to_int(f[0]));
      n.threshold = r.to_double(f[1]);
      n.left = static_cast<std::int32_t>(r.to_int(f[2]));
      n.right = static_cast<std::int32_t>(r.to_int(f[3]));
      for (std::size_t k = 0; k < kNumStates; ++k) n.counts[k] = r.to_size(f[4 + k]);
    }
    DecisionTree tree(std::move(nodes));
    try {
      tree.validate(model.n_features);
    } catch (const std::invalid_argument& e) {
      r.fail(e.what());
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

// ---------------------------------------------------------------------------
// LSTM

void write_lstm(std::ostream& out, const LstmModel& model, std::size_t seq_len) {
  out << "grasp-lstm 1\n";
  out << "input_size " << model.input_size() << '\n';
  out << "hidden_size " << model.hidden_size() << '\n';
  out << "classes " << kNumStates << '\n';
  out << "seq_len " << seq_len << '\n';
  out << "gate_order input forget cell output\n";
  write_matrix(out, "w_input", model.w_input);
  write_matrix(out, "w_hidden", model.w_hidden);
  write_matrix(out, "bias", model.bias);
  write_matrix(out, "w_out", model.w_out);
  write_matrix(out, "b_out", model.b_out);
}

LoadedLstm read_lstm(std::istream& in) {
  Reader r(in, "lstm");
  r.header("grasp-lstm", 1);
  const std::size_t n = r.to_size(r.keyed("input_size", 1)[0]);
  const std::size_t h = r.to_size(r.keyed("hidden_size", 1)[0]);
  if (r.to_size(r.keyed("classes", 1)[0]) != kNumStates) r.fail("unsupported class count");
  LoadedLstm out;
  out.seq_len = r.to_size(r.keyed("seq_len", 1)[0]);
  const auto order = r.keyed("gate_order", 4);
  if (order[0] != "input" || order[1] != "forget" || order[2] != "cell" || order[3] != "output")
    r.fail("unsupported gate order");
  if (n < 1 || h < 1 || out.seq_len < 1) r.fail("sizes must be positive");
  const auto ni = static_cast<Eigen::Index>(n);
  const auto hi = static_cast<Eigen::Index>(h);
  const auto k = static_cast<Eigen::Index>(kNumStates);
  out.model.w_input = read_matrix(r, "w_input", 4 * hi, ni);
  out.model.w_hidden = read_matrix(r, "w_hidden", 4 * hi, hi);
  out.model.bias = read_matrix(r, "bias", 4 * hi, 1);
  out.model.w_out = read_matrix(r, "w_out", k, hi);
  out.model.b_out = read_matrix(r, "b_out", k, 1);
  try {
    out.model.validate();
  } catch (const std::invalid_argument& e) {
    r.fail(e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Normalization and PCA

void write_normalization(std::ostream& out, const NormalizationParams& params) {
  out << "grasp-normalization 1\n";
  out << "features " << params.size() << '\n';
  for (std::size_t i = 0; i < params.size(); ++i)
    out << format_exact(params.min[i]) << ' ' << format_exact(params.max[i]) << '\n';
}

NormalizationParams read_normalization(std::istream& in) {
  Reader r(in, "normalization");
  r.header("grasp-normalization", 1);
  const std::size_t n = r.to_size(r.keyed("features", 1)[0]);
  NormalizationParams p;
  p.min.resize(n);
  p.max.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = r.next();
    if (t.size() != 2) r.fail("expected 'min max'");
    p.min[i] = r.to_double(t[0]);
    p.max[i] = r.to_double(t[1]);
    if (p.min[i] > p.max[i]) r.fail("min exceeds max");
  }
  return p;
}

void write_pca(std::ostream& out, const PcaModel& model) {
  out << "grasp-pca 1\n";
  out << "size " << model.width << ' ' << model.height << '\n';
  out << "components " << kPcaComponents << '\n';
  out << "mean\n";
  write_row(out, model.mean.data(), model.mean.size());
  for (std::size_t k = 0; k < kPcaComponents; ++k) {
    out << "component " << k << ' ' << format_exact(model.eigenvalues[k]) << '\n';
    write_row(out, model.components[k].data(), model.components[k].size());
  }
}

PcaModel read_pca(std::istream& in) {
  Reader r(in, "pca");
  r.header("grasp-pca", 1);
  PcaModel m;
  const auto size = r.keyed("size", 2);
  m.width = static_cast<int>(r.to_size(size[0]));
  m.height = static_cast<int>(r.to_size(size[1]));
  if (m.width < 1 || m.height < 1) r.fail("bad mask size");
  if (r.to_size(r.keyed("components", 1)[0]) != kPcaComponents) r.fail("unsupported component count");
  const auto dim = static_cast<std::size_t>(m.width) * static_cast<std::size_t>(m.height);
  r.keyed("mean", 0);
  m.mean = r.doubles(dim);
  for (std::size_t k = 0; k < kPcaComponents; ++k) {
    const auto t = r.keyed("component", 2);
    if (r.to_size(t[0]) != k) r.fail("components out of order");
    m.eigenvalues[k] = r.to_double(t[1]);
    m.components[k] = r.doubles(dim);
  }
  m.fitted = true;
  return m;
}

// ---------------------------------------------------------------------------
// Files

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << contents;
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

Trial load_trial(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  try {
    return read_trial(in);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void save_trial(const std::filesystem::path& path, const Trial& trial) {
  std::ostringstream out;
  write_trial(out, trial);
  write_file(path, out.str());
}

}  // namespace grasp
