#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nlab/kernel.hpp"

namespace nlab {

/// Pipeline stages in execution order.
inline const std::vector<std::string>& pipeline_stages() {
  static const std::vector<std::string> s{"solve-1d", "extend", "solve-2d", "stability", "sigma", "verdict", "probes"};
  return s;
}

struct RunConfig {
  std::string kernel = "indicator";
  std::string f = "allen-cahn";
  double h = 0.1;
  double S = 9.0;
  double h1d = 0.0;  // 0: same as h
  double S1d = 0.0;  // 0: wide enough for the extension
  Vec2 direction{0.0, 1.0};
  std::vector<std::string> stages = pipeline_stages();
  std::string out = "nlab-out";
  std::uint64_t seed = 0;

  // frozen input replacing the solve stages: a field file or constant:<v>
  std::string frozen_u;
  double perturb = 0.0;  // amplitude of a wide bump added before solve-2d

  double tol_1d = 1e-10;
  double tol_2d = 1e-9;
  std::vector<double> radii{4.0, 6.0, 8.0};
  double phi_tol = 1e-4;
  int stability_trials = 20;

  std::vector<double> closure_radii{2.0, 3.0, 4.0};
  double deviation_tol = 1e-4;
  double energy_tol = 1e-8;

  int harnack_grid = 5;
  double harnack_extent = 0.0;  // 0: S / 2
  double loglemma_d = 1.0;
  std::vector<double> loglemma_radii{2.0, 4.0, 8.0};

  bool timing = false;  // wall-clock per stage in the manifest

  /// Resolved 1D grid parameters.
  double profile_h() const { return h1d > 0.0 ? h1d : h; }
  double profile_S() const;
};

/// Flat `key = value` lines; `#` starts a comment. Unknown keys, repeated
/// keys and bad values raise ConfigError naming the line. Relative paths
/// (kernel tables, frozen_u) resolve against the config file's directory.
RunConfig parse_config(const std::string& text, const std::string& base_dir = {});
RunConfig load_config(const std::string& path);

/// Applies one `key=value` assignment (used for command-line overrides).
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value, int line = 0,
                      const std::string& base_dir = {});

/// Cross-field checks: grid invariants, radii against S, stage order and
/// stage inputs. Throws ConfigError with line 0.
void validate_config(const RunConfig& cfg);

/// The config as `key=value` lines in a fixed order (round-trips through
/// parse_config). The manifest leaves `out` out so that runs into
/// different directories compare equal.
std::string config_echo(const RunConfig& cfg, bool with_out = true);

}  // namespace nlab
