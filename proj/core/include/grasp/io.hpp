#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "grasp/features.hpp"
#include "grasp/forest.hpp"
#include "grasp/lstm.hpp"
#include "grasp/pca.hpp"
#include "grasp/types.hpp"

namespace grasp {

/// Round-trip exact decimal form of a double ("%.17g").
std::string format_exact(double v);
/// Report form with 9 significant digits ("%.9g").
std::string format_report(double v);

/// Text trial format: header, frame table, run-length-encoded camera masks,
/// optional slip kinematics. IMU values are written as integer converter counts.
void write_trial(std::ostream& out, const Trial& trial);
/// Throws std::runtime_error with a line number on malformed input.
Trial read_trial(std::istream& in);

void write_forest(std::ostream& out, const RfModel& model);
RfModel read_forest(std::istream& in);

void write_lstm(std::ostream& out, const LstmModel& model, std::size_t seq_len);
struct LoadedLstm {
  LstmModel model;
  std::size_t seq_len = 0;
};
LoadedLstm read_lstm(std::istream& in);

void write_normalization(std::ostream& out, const NormalizationParams& params);
NormalizationParams read_normalization(std::istream& in);

void write_pca(std::ostream& out, const PcaModel& model);
PcaModel read_pca(std::istream& in);

/// Whole-file helpers; they throw std::runtime_error naming the path on I/O failure.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

Trial load_trial(const std::filesystem::path& path);
void save_trial(const std::filesystem::path& path, const Trial& trial);

}  // namespace grasp
