#pragma once

#include <string>
#include <vector>

#include "nlab/config.hpp"

namespace nlab {

struct Artifact {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::size_t bytes = 0;
};

struct StageRecord {
  std::string name;
  std::string status;  // ok, failed, skipped, frozen
  std::string error_kind;
  std::string error;
  std::string summary;  // JSON object text
  std::vector<std::string> artifacts;
  double seconds = 0.0;
};

struct RunManifest {
  RunConfig config;
  std::vector<StageRecord> stages;
  std::vector<Artifact> artifacts;
  std::string verdict;  // "1D", "NOT-1D" or empty when the verdict stage did not run
  bool failed = false;    // some stage failed for operational reasons
  bool negative = false;  // ran fine, a checked property failed
  std::string json;       // the manifest as written

  /// 0 success, 2 verdict-negative, 1 operational error.
  int exit_code() const { return failed ? 1 : (negative ? 2 : 0); }
};

/// Runs the configured stages in order, each reading the files of the
/// previous ones, then writes manifest.json. A failing stage marks the rest
/// skipped. Throws ConfigError for an invalid config and IoError when the
/// output directory is not writable; both happen before anything is written.
RunManifest run_pipeline(const RunConfig& cfg);

/// Serializes the manifest to JSON and writes `<out>/manifest.json`.
void emit_report(RunManifest& man);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

/// Stable short name of the error class ("stability-violation", ...).
std::string error_kind(const std::exception& e);

/// Creates the directory if needed and checks that a file can be created
/// in it. Throws IoError.
void ensure_writable_dir(const std::string& dir);

/// Writes a CSV with the given header; values use format_double.
void write_csv(const std::string& path, const std::string& header, const std::vector<std::vector<double>>& rows);

}  // namespace nlab
