#include "nlab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "nlab/errors.hpp"
#include "nlab/field_io.hpp"
#include "nlab/semilinear.hpp"

namespace nlab {

namespace {

std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : v) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

double to_double(const std::string& v, int line, const std::string& key) {
  double x = 0.0;
  const char* b = v.data();
  const char* e = b + v.size();
  auto [p, ec] = std::from_chars(b, e, x);
  if (ec != std::errc() || p != e || !std::isfinite(x)) throw ConfigError(line, key + ": not a number: '" + v + "'");
  return x;
}

long long to_int(const std::string& v, int line, const std::string& key) {
  long long x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(line, key + ": not an integer: '" + v + "'");
  return x;
}

std::vector<double> to_list(const std::string& v, int line, const std::string& key) {
  std::vector<double> out;
  for (const std::string& s : split_list(v)) out.push_back(to_double(s, line, key));
  return out;
}

bool to_bool(const std::string& v, int line, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(line, key + ": expected true or false, got '" + v + "'");
}

std::string resolve(const std::string& path, const std::string& base) {
  if (path.empty() || base.empty() || std::filesystem::path(path).is_absolute()) return path;
  return (std::filesystem::path(base) / path).lexically_normal().string();
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + format_double(v[k]);
  return s;
}

}  // namespace

double RunConfig::profile_S() const {
  if (S1d > 0.0) return S1d;
  const double hp = profile_h();
  const double need = (S + 1.0 + h) * (std::abs(direction.x1) + std::abs(direction.x2)) + 2.0 * hp;
  return std::max(20.0, std::ceil(need + 2.0));
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value, int line,
                      const std::string& base_dir) {
  const std::string& v = value;
  if (key == "kernel") {
    // validate now so the error carries the line
    std::string spec = v;
    if (spec.rfind("table:", 0) == 0) {
      std::string rest = spec.substr(6);
      std::string scale;
      if (auto star = rest.rfind('*'); star != std::string::npos) {
        scale = rest.substr(star);
        rest = rest.substr(0, star);
      }
      spec = "table:" + resolve(rest, base_dir) + scale;
    }
    try {
      parse_kernel_spec(spec);
    } catch (const Error& e) {
      throw ConfigError(line, std::string("kernel: ") + e.what());
    }
    cfg.kernel = spec;
  } else if (key == "f") {
    try {
      parse_nonlinearity(v);
    } catch (const Error& e) {
      throw ConfigError(line, std::string("f: ") + e.what());
    }
    cfg.f = v;
  } else if (key == "h") {
    cfg.h = to_double(v, line, key);
  } else if (key == "S") {
    cfg.S = to_double(v, line, key);
  } else if (key == "h1d") {
    cfg.h1d = to_double(v, line, key);
  } else if (key == "S1d") {
    cfg.S1d = to_double(v, line, key);
  } else if (key == "direction") {
    const std::vector<double> a = to_list(v, line, key);
    if (a.size() != 2) throw ConfigError(line, "direction: expected a1,a2");
    const double n = std::hypot(a[0], a[1]);
    if (!(n > 0.0)) throw ConfigError(line, "direction: zero vector");
    cfg.direction = {a[0] / n, a[1] / n};
  } else if (key == "stages") {
    cfg.stages.clear();
    if (v == "all") {
      cfg.stages = pipeline_stages();
    } else if (v != "none" && !v.empty()) {
      for (const std::string& s : split_list(v)) {
        if (std::find(pipeline_stages().begin(), pipeline_stages().end(), s) == pipeline_stages().end())
          throw ConfigError(line, "stages: unknown stage '" + s + "'");
        cfg.stages.push_back(s);
      }
    }
  } else if (key == "out") {
    cfg.out = resolve(v, base_dir);
  } else if (key == "seed") {
    if (!v.empty() && v[0] == '-') throw ConfigError(line, "seed: must be nonnegative");
    std::uint64_t x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(line, "seed: not an integer: '" + v + "'");
    cfg.seed = x;
  } else if (key == "frozen_u") {
    if (v.rfind("constant:", 0) == 0) {
      to_double(v.substr(9), line, key);
      cfg.frozen_u = v;
    } else {
      cfg.frozen_u = resolve(v, base_dir);
    }
  } else if (key == "perturb") {
    cfg.perturb = to_double(v, line, key);
  } else if (key == "tol_1d") {
    cfg.tol_1d = to_double(v, line, key);
  } else if (key == "tol_2d") {
    cfg.tol_2d = to_double(v, line, key);
  } else if (key == "radii") {
    cfg.radii = to_list(v, line, key);
  } else if (key == "phi_tol") {
    cfg.phi_tol = to_double(v, line, key);
  } else if (key == "stability_trials") {
    cfg.stability_trials = static_cast<int>(to_int(v, line, key));
  } else if (key == "closure_radii") {
    cfg.closure_radii = to_list(v, line, key);
  } else if (key == "deviation_tol") {
    cfg.deviation_tol = to_double(v, line, key);
  } else if (key == "energy_tol") {
    cfg.energy_tol = to_double(v, line, key);
  } else if (key == "harnack_grid") {
    cfg.harnack_grid = static_cast<int>(to_int(v, line, key));
  } else if (key == "harnack_extent") {
    cfg.harnack_extent = to_double(v, line, key);
  } else if (key == "loglemma_d") {
    cfg.loglemma_d = to_double(v, line, key);
  } else if (key == "loglemma_radii") {
    cfg.loglemma_radii = to_list(v, line, key);
  } else if (key == "timing") {
    cfg.timing = to_bool(v, line, key);
  } else {
    throw ConfigError(line, "unknown key '" + key + "'");
  }
}

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::set<std::string> seen;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    const std::string s = trim(raw);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "expected key=value, got '" + s + "'");
    const std::string key = trim(std::string_view(s).substr(0, eq));
    const std::string value = trim(std::string_view(s).substr(eq + 1));
    if (key.empty()) throw ConfigError(line, "missing key");
    if (!seen.insert(key).second) throw ConfigError(line, "key '" + key + "' set twice");
    set_config_value(cfg, key, value, line, base_dir);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::filesystem::path(path).parent_path().string());
}

void validate_config(const RunConfig& c) {
  auto fail = [](const std::string& m) { throw ConfigError(0, m); };
  if (!(c.h > 0.0 && c.h <= 0.25)) fail("h must lie in (0, 0.25]");
  if (!(c.S >= 2.0)) fail("S must be at least 2");
  if (c.h1d < 0.0 || c.h1d > 0.25) fail("h1d must lie in (0, 0.25]");
  if (c.S1d != 0.0 && c.S1d < 2.0) fail("S1d must be at least 2");
  if (!(c.tol_1d > 0.0) || !(c.tol_2d > 0.0) || !(c.phi_tol > 0.0)) fail("tolerances must be positive");
  if (c.radii.empty()) fail("radii is empty");
  for (std::size_t k = 0; k < c.radii.size(); ++k) {
    if (!(c.radii[k] > 0.0) || c.radii[k] > c.S - 1.0 + 1e-12) fail("radii must lie in (0, S - 1]");
    if (k && !(c.radii[k] > c.radii[k - 1])) fail("radii must increase");
  }
  for (double R : c.closure_radii)
    if (!(R > 0.0) || 2.0 * R > c.S - 1.0 + 1e-12) fail("closure_radii need 0 < 2R <= S - 1");
  for (double r : c.loglemma_radii)
    if (!(r > 0.0) || r > c.S - 1.0 + 1e-12) fail("loglemma_radii must lie in (0, S - 1]");
  if (!(c.loglemma_d > 0.0)) fail("loglemma_d must be positive");
  if (c.harnack_grid < 1) fail("harnack_grid must be at least 1");
  if (c.harnack_extent < 0.0 || c.harnack_extent + 1.0 > c.S) fail("harnack_extent must keep B_1 inside the square");
  if (c.stability_trials < 0) fail("stability_trials must be nonnegative");

  const auto& all = pipeline_stages();
  std::size_t last = 0;
  std::set<std::string> have;
  if (!c.frozen_u.empty()) have = {"solve-1d", "extend", "solve-2d"};
  for (std::size_t k = 0; k < c.stages.size(); ++k) {
    const std::string& s = c.stages[k];
    const std::size_t pos = static_cast<std::size_t>(std::find(all.begin(), all.end(), s) - all.begin());
    if (k && pos <= last) fail("stages must be listed once each, in pipeline order");
    last = pos;
    if (!c.frozen_u.empty() && pos < 3) fail("frozen_u replaces stage '" + s + "'");
    for (std::size_t p = 0; p < pos; ++p) {
      // probes and sigma only need u and phi; verdict needs sigma's phi choice
      const std::string& need = all[p];
      if (s == "probes" && (need == "sigma" || need == "verdict")) continue;
      if (!have.count(need)) fail("stage '" + s + "' needs stage '" + need + "'");
    }
    have.insert(s);
  }
}

std::string config_echo(const RunConfig& c, bool with_out) {
  std::ostringstream o;
  std::string stages;
  for (std::size_t k = 0; k < c.stages.size(); ++k) stages += (k ? "," : "") + c.stages[k];
  o << "kernel=" << c.kernel << "\n"
    << "f=" << c.f << "\n"
    << "h=" << format_double(c.h) << "\n"
    << "S=" << format_double(c.S) << "\n"
    << "h1d=" << format_double(c.h1d) << "\n"
    << "S1d=" << format_double(c.S1d) << "\n"
    << "direction=" << format_double(c.direction.x1) << "," << format_double(c.direction.x2) << "\n"
    << "stages=" << (stages.empty() ? "none" : stages) << "\n";
  if (with_out) o << "out=" << c.out << "\n";
  o << "seed=" << c.seed << "\n";
  if (!c.frozen_u.empty()) o << "frozen_u=" << c.frozen_u << "\n";
  o << "perturb=" << format_double(c.perturb) << "\n"
    << "tol_1d=" << format_double(c.tol_1d) << "\n"
    << "tol_2d=" << format_double(c.tol_2d) << "\n"
    << "radii=" << join(c.radii) << "\n"
    << "phi_tol=" << format_double(c.phi_tol) << "\n"
    << "stability_trials=" << c.stability_trials << "\n"
    << "closure_radii=" << join(c.closure_radii) << "\n"
    << "deviation_tol=" << format_double(c.deviation_tol) << "\n"
    << "energy_tol=" << format_double(c.energy_tol) << "\n"
    << "harnack_grid=" << c.harnack_grid << "\n"
    << "harnack_extent=" << format_double(c.harnack_extent) << "\n"
    << "loglemma_d=" << format_double(c.loglemma_d) << "\n"
    << "loglemma_radii=" << join(c.loglemma_radii) << "\n"
    << "timing=" << (c.timing ? "true" : "false") << "\n";
  return o.str();
}

}  // namespace nlab
