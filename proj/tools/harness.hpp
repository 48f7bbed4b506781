#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "grasp/pipeline.hpp"
#include "grasp/synth.hpp"
#include "grasp/types.hpp"

namespace grasp::harness {

/// Flat key-value run configuration. Every key has a typed default; setting an
/// unknown key, or a value of the wrong type, throws std::invalid_argument.
class RunConfig {
 public:
  RunConfig();

  static const nlohmann::json& defaults();

  /// Parses `text` according to the default's type.
  void set(std::string_view key, std::string_view text);
  /// Merges a JSON object of overrides (values must match the default types).
  void merge(const nlohmann::json& overrides);
  void merge_file(const std::filesystem::path& path);

  const nlohmann::json& values() const noexcept { return values_; }
  std::string str(std::string_view key) const;
  std::int64_t integer(std::string_view key) const;
  std::uint64_t unsigned_integer(std::string_view key) const;
  double number(std::string_view key) const;

  /// Pretty-printed, key-sorted JSON with a trailing newline.
  std::string dump() const;

 private:
  nlohmann::json values_;
};

/// Training options resolved from the configuration (mask, family, hyperparameters).
TrainOptions train_options(const RunConfig& config);
EvalOptions eval_options(const RunConfig& config, ModelFamily family);

/// Reads manifest.json and loads every trial of `split`.
std::vector<Trial> load_split(const std::filesystem::path& data_dir, Split split);

void cmd_generate(const RunConfig& config);
void cmd_train(const RunConfig& config);
void cmd_eval(const RunConfig& config);
void cmd_ablate(const RunConfig& config);
/// Writes the seven counters, one "name value" line each.
void cmd_taxonomy(const RunConfig& config, std::ostream& out);

/// Full command line (without the program name). Returns the process exit status;
/// errors are reported as a single line on `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace grasp::harness
