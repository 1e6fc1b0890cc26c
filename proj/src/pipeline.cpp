#include "nlab/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "nlab/diagnostics.hpp"
#include "nlab/errors.hpp"
#include "nlab/field_io.hpp"
#include "nlab/liouville.hpp"
#include "nlab/semilinear.hpp"
#include "nlab/stability.hpp"

namespace nlab {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256: digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out += hex[md[k] >> 4];
    out += hex[md[k] & 15];
  }
  return out;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return "config-error";
  if (dynamic_cast<const StabilityViolation*>(&e)) return "stability-violation";
  if (dynamic_cast<const PositivityFailure*>(&e)) return "positivity-failure";
  if (dynamic_cast<const NonConvergence*>(&e)) return "non-convergence";
  if (dynamic_cast<const LinearSolverBreakdown*>(&e)) return "linear-solver-breakdown";
  if (dynamic_cast<const FarfieldMissing*>(&e)) return "farfield-missing";
  if (dynamic_cast<const IoError*>(&e)) return "io-error";
  if (dynamic_cast<const InvalidArgument*>(&e)) return "invalid-argument";
  return "error";
}

void ensure_writable_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir);
  const fs::path probe = fs::path(dir) / ".nlab-write-probe";
  {
    std::ofstream o(probe);
    if (!o) throw IoError("output directory " + dir + " is not writable");
  }
  fs::remove(probe, ec);
}

void write_csv(const std::string& path, const std::string& header, const std::vector<std::vector<double>>& rows) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw IoError("cannot write " + path);
  o << header << "\n";
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.size(); ++k) o << (k ? "," : "") << format_double(r[k]);
    o << "\n";
  }
  if (!o) throw IoError("write failed: " + path);
}

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json num_list(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

// State shared by the stages; everything a stage hands on also goes to disk
// and the next stage reads it back.
struct Run {
  const RunConfig& cfg;
  fs::path out;
  Kernel kernel;
  Nonlinearity nl;
  Grid grid;
  std::unique_ptr<StencilOperator> L;
  std::string phi_sigma_file;  // phi used for sigma and the verdict
  int sigma_axis = 2;
  RunManifest* man;
  StageRecord* rec = nullptr;

  const StencilOperator& stencil() {
    if (!L) L = std::make_unique<StencilOperator>(build_stencil(kernel, grid));
    return *L;
  }
  std::string path(const std::string& name) const { return (out / name).string(); }
  void wrote(const std::string& name) { rec->artifacts.push_back(name); }
  Field read(const std::string& name) const {
    Field f = read_field(path(name));
    if (!(f.grid() == grid)) throw InvalidArgument(name + ": grid differs from the configured h, S");
    return f;
  }
};

json stage_solve_1d(Run& r) {
  const RunConfig& c = r.cfg;
  const Vec2 a = c.direction;
  const bool axis_aligned = (a.x1 == 0.0 || a.x2 == 0.0);
  Stencil1D L1;
  std::string how;
  if (axis_aligned && c.profile_h() == c.h) {
    // line sums of the 2D stencil: the extension is then an exact discrete solution
    L1 = marginal_stencil(r.stencil(), a.x1 == 0.0 ? 2 : 1);
    how = "stencil-line-sums";
  } else {
    L1 = build_stencil_1d(r.kernel.marginal(), c.profile_h());
    how = "marginal-kernel";
  }
  LayerOptions opts;
  opts.tol = c.tol_1d;
  const LayerResult res = solve_layer_1d(L1, r.nl, Grid1D::make(c.profile_h(), c.profile_S()), opts);
  write_profile(r.path("layer.nlprofile"), res.profile);
  r.wrote("layer.nlprofile");
  if (!res.strictly_increasing) r.man->negative = true;
  return json{{"residual_inf", num(res.residual_inf)},
              {"iters", res.newton_iters},
              {"strictly_increasing", res.strictly_increasing},
              {"h", num(c.profile_h())},
              {"S", num(c.profile_S())},
              {"stencil", how}};
}

json stage_extend(Run& r) {
  auto w = std::make_shared<const Profile>(read_profile(r.path("layer.nlprofile")));
  Field u = extend_to_2d(w, r.cfg.direction, r.grid, "layer.nlprofile");
  const double res = residual_inf_2d(r.stencil(), r.nl, u);
  if (r.cfg.perturb != 0.0) {
    const Field bump = wide_bump(r.grid, std::min(2.0, r.grid.S - 1.0));
    for (std::size_t k = 0; k < r.grid.size(); ++k) u.set_value(k, u.value(k) + r.cfg.perturb * bump.value(k));
  }
  write_field(r.path("u_init.field"), u);
  r.wrote("u_init.field");
  return json{{"extension_residual_inf", num(res)}, {"perturb", num(r.cfg.perturb)}};
}

json stage_solve_2d(Run& r) {
  const Field init = r.read("u_init.field");
  SolveOptions opts;
  opts.tol = r.cfg.tol_2d;
  const SolveResult res = solve_2d(r.stencil(), r.nl, init, opts);
  write_field(r.path("u.field"), res.u);
  r.wrote("u.field");
  return json{{"residual_inf", num(res.residual_inf)},
              {"iters", res.newton_iters},
              {"monotone_axis", res.monotone_axis ? json(*res.monotone_axis) : json(nullptr)}};
}

json stage_frozen(Run& r) {
  const std::string& src = r.cfg.frozen_u;
  Field u;
  if (src.rfind("constant:", 0) == 0) {
    u = Field::constant(r.grid, std::stod(src.substr(9)));
  } else {
    u = read_field(src);
    if (!(u.grid() == r.grid)) throw InvalidArgument("frozen_u: grid differs from the configured h, S");
    if (u.farfield().kind() == Farfield::Kind::OneDim)
      throw InvalidArgument("frozen_u: fields with a one-dimensional farfield are not supported as frozen input");
  }
  write_field(r.path("u.field"), u);
  r.wrote("u.field");
  return json{{"source", src}};
}

json stage_stability(Run& r) {
  const RunConfig& c = r.cfg;
  const Field u = r.read("u.field");
  const StencilOperator& L = r.stencil();
  const Field V = potential_field(r.nl, u);
  const std::vector<EigenResult> sweep = lambda_sweep(L, V, c.radii);
  std::vector<std::vector<double>> rows;
  json js = json::array();
  for (const EigenResult& e : sweep) {
    rows.push_back({e.R, e.lambda});
    js.push_back({{"R", num(e.R)}, {"lambda", num(e.lambda)}});
  }
  write_csv(r.path("lambda.csv"), "R,lambda", rows);
  r.wrote("lambda.csv");

  PhiOptions po;
  po.convergence_tol = c.phi_tol;
  json out{{"sweep", js}};
  // stability violations surface here, after the sweep is on disk
  const PositiveLinearization phi = construct_phi(L, V, c.radii, po);
  write_field(r.path("phi.field"), phi.phi);
  r.wrote("phi.field");
  double phi_min = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < r.grid.size(); ++k) phi_min = std::min(phi_min, phi.phi.value(k));
  out["phi_file"] = "phi.field";
  out["residual_inf"] = num(phi.residual_inf);
  out["window"] = num(phi.window);
  out["converged"] = phi.converged;
  out["positivity"] = phi_min > 0.0;
  if (c.stability_trials > 0) {
    const QuadraticForm q(L, V, c.radii.back());
    const StabilityMargin m = stability_inequality_check(q, phi, c.stability_trials, c.seed);
    out["margin"] = {{"R", num(c.radii.back())}, {"worst_normalized", num(m.worst_normalized)}, {"trials", m.trials}};
    if (m.worst < 0.0) r.man->negative = true;
  }
  return out;
}

json stage_sigma(Run& r) {
  const RunConfig& c = r.cfg;
  const Field u = r.read("u.field");
  const std::optional<int> mono = monotone_axis(u);
  Field phi;
  if (mono) {
    // a monotone solution's derivative is a positive solution of the
    // linearized equation with sigma identically one
    r.sigma_axis = *mono;
    phi = centered_derivative(u, *mono);
    write_field(r.path("phi_sigma.field"), phi);
    r.wrote("phi_sigma.field");
    r.phi_sigma_file = "phi_sigma.field";
  } else {
    r.sigma_axis = std::abs(c.direction.x2) >= std::abs(c.direction.x1) ? 2 : 1;
    phi = r.read("phi.field");
    r.phi_sigma_file = "phi.field";
  }
  const StencilOperator& L = r.stencil();
  const SigmaField s = build_sigma(u, phi, r.sigma_axis);
  write_field(r.path("sigma.field"), s.sigma);
  r.wrote("sigma.field");

  const double Rmax = *std::max_element(c.closure_radii.begin(), c.closure_radii.end());
  const Field eta = cutoff_ramp(Rmax, r.grid);
  const Step1Result st = step1_residual(L, s, eta);
  const AustResult au = aust_identity_check(L, s, eta);
  const std::vector<ClosureRow> rows = cauchy_schwarz_closure(L, s, c.closure_radii);
  std::vector<std::vector<double>> csv;
  bool holds = true;
  double kmin = std::numeric_limits<double>::infinity(), kmax = 0.0;
  for (const ClosureRow& row : rows) {
    csv.push_back({row.R, row.I, row.rhs, row.crossterm, row.keybound, row.holds ? 1.0 : 0.0});
    holds = holds && row.holds;
    kmin = std::min(kmin, row.keybound);
    kmax = std::max(kmax, row.keybound);
  }
  write_csv(r.path("closure.csv"), "R,I,rhs,crossterm,keybound,holds", csv);
  r.wrote("closure.csv");
  if (!holds) r.man->negative = true;
  return json{{"axis", r.sigma_axis},
              {"phi", r.phi_sigma_file},
              {"step1", num(st.value)},
              {"step1_scale", num(st.scale)},
              {"aust_lhs", num(au.lhs)},
              {"aust_rhs", num(au.rhs)},
              {"aust_identity_gap", num(au.identity_gap)},
              {"closure_holds", holds},
              {"keybound_ratio", num(kmin > 0.0 ? kmax / kmin : std::numeric_limits<double>::infinity())}};
}

json stage_verdict(Run& r) {
  const Field u = r.read("u.field");
  const Field phi = r.read(r.phi_sigma_file);
  VerdictOptions vo;
  vo.deviation_tol = r.cfg.deviation_tol;
  vo.energy_tol = r.cfg.energy_tol;
  const SymmetryVerdict v = symmetry_verdict(r.stencil(), u, phi, vo);
  r.man->verdict = v.is_1d ? "1D" : "NOT-1D";
  if (!v.is_1d) r.man->negative = true;
  return json{{"verdict", r.man->verdict},
              {"c1", num(v.c1)},
              {"c2", num(v.c2)},
              {"direction", v.direction_determined ? json{num(v.direction.x1), num(v.direction.x2)}
                                                   : json("undetermined-constant")},
              {"oned_deviation", num(v.oned_deviation)},
              {"energy1", num(v.energy1)},
              {"energy2", num(v.energy2)},
              {"excluded_fraction", num(v.excluded_fraction)}};
}

json stage_probes(Run& r) {
  const RunConfig& c = r.cfg;
  const Field u = r.read("u.field");
  const Field phi = r.read("phi.field");
  json out;

  const double extent = c.harnack_extent > 0.0 ? c.harnack_extent : 0.5 * c.S;
  const HarnackReport hr = harnack_probe(phi, center_lattice(c.harnack_grid, extent));
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < hr.centers.size(); ++k) rows.push_back({hr.centers[k].x1, hr.centers[k].x2, hr.ratios[k]});
  write_csv(r.path("harnack.csv"), "x1,x2,ratio", rows);
  r.wrote("harnack.csv");
  out["harnack"] = {{"maxratio", num(hr.maxratio)}, {"blowup", hr.blowup}};

  const HolderReport ho = holder_probe(u);
  rows.clear();
  for (std::size_t k = 0; k < ho.alphas.size(); ++k) rows.push_back({ho.alphas[k], ho.seminorms[k], ho.medians[k]});
  write_csv(r.path("holder.csv"), "alpha,seminorm,median", rows);
  r.wrote("holder.csv");
  out["holder"] = {{"best_alpha", num(ho.best_alpha)}, {"seminorm", num(ho.best_seminorm)}};

  if (r.kernel.family() == KernelFamily::TruncatedFractional) {
    // the lemma is stated for nonnegative functions: shift by the minimum
    Field v = u;
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < r.grid.size(); ++k) lo = std::min(lo, u.value(k));
    for (std::size_t k = 0; k < r.grid.size(); ++k) v.set_value(k, std::max(0.0, u.value(k) - lo));
    const LogLemmaReport lr = loglemma_probe(r.stencil(), v, c.loglemma_d, c.loglemma_radii, r.kernel.s());
    rows.clear();
    for (std::size_t k = 0; k < lr.radii.size(); ++k) rows.push_back({lr.radii[k], lr.integrals[k], lr.constants[k]});
    write_csv(r.path("loglemma.csv"), "r,integral,constant", rows);
    r.wrote("loglemma.csv");
    out["loglemma"] = {{"d", num(lr.d)}, {"s", num(lr.s)}, {"shift", num(-lo)}, {"slope", num(lr.slope)},
                       {"constants", num_list(lr.constants)}};
  } else {
    out["loglemma"] = {{"applicable", false}, {"reason", "kernel is not truncated-fractional"}};
  }
  return out;
}

}  // namespace

RunManifest run_pipeline(const RunConfig& cfg) {
  validate_config(cfg);
  ensure_writable_dir(cfg.out);

  RunManifest man;
  man.config = cfg;
  Run run{cfg, fs::path(cfg.out), parse_kernel_spec(cfg.kernel), parse_nonlinearity(cfg.f), Grid::make(cfg.h, cfg.S),
          nullptr, {}, 2, &man};

  const std::vector<std::pair<std::string, std::function<json(Run&)>>> table{
      {"solve-1d", stage_solve_1d}, {"extend", stage_extend},   {"solve-2d", stage_solve_2d},
      {"stability", stage_stability}, {"sigma", stage_sigma}, {"verdict", stage_verdict},
      {"probes", stage_probes}};

  bool halted = false;
  if (!cfg.frozen_u.empty() && !cfg.stages.empty()) {
    // the frozen input stands in for the solve stages
    man.stages.push_back({"input", "frozen", {}, {}, {}, {}, 0.0});
    run.rec = &man.stages.back();
    try {
      man.stages.back().summary = stage_frozen(run).dump();
    } catch (const std::exception& e) {
      man.stages.back().status = "failed";
      man.stages.back().error_kind = error_kind(e);
      man.stages.back().error = e.what();
      man.failed = true;
      halted = true;
    }
  }
  for (const std::string& name : cfg.stages) {
    man.stages.push_back({name, {}, {}, {}, {}, {}, 0.0});
    StageRecord& rec = man.stages.back();
    if (halted) {
      rec.status = "skipped";
      continue;
    }
    run.rec = &rec;
    const auto fn = std::find_if(table.begin(), table.end(), [&](const auto& p) { return p.first == name; });
    const auto t0 = std::chrono::steady_clock::now();
    try {
      rec.summary = fn->second(run).dump();
      rec.status = "ok";
    } catch (const std::exception& e) {
      rec.status = "failed";
      rec.error_kind = error_kind(e);
      rec.error = e.what();
      halted = true;
      // a stability violation is a property of the input, not a fault
      if (dynamic_cast<const StabilityViolation*>(&e))
        man.negative = true;
      else
        man.failed = true;
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  emit_report(man);
  return man;
}

void emit_report(RunManifest& man) {
  const RunConfig& c = man.config;
  ensure_writable_dir(c.out);
  const fs::path out(c.out);

  json cfg = json::object();
  std::istringstream echo(config_echo(c, false));
  for (std::string line; std::getline(echo, line);) {
    const auto eq = line.find('=');
    cfg[line.substr(0, eq)] = line.substr(eq + 1);
  }

  man.artifacts.clear();
  json stages = json::array();
  for (const StageRecord& s : man.stages) {
    json j{{"name", s.name}, {"status", s.status}};
    if (!s.error_kind.empty()) j["error_kind"] = s.error_kind;
    if (!s.error.empty()) j["error"] = s.error;
    if (!s.summary.empty()) j["summary"] = json::parse(s.summary);
    json files = json::array();
    for (const std::string& a : s.artifacts) {
      const std::string p = (out / a).string();
      const Artifact art{a, sha256_file(p), static_cast<std::size_t>(fs::file_size(p))};
      man.artifacts.push_back(art);
      files.push_back({{"path", art.path}, {"sha256", art.sha256}, {"bytes", art.bytes}});
    }
    j["artifacts"] = files;
    if (c.timing) j["seconds"] = num(s.seconds);
    stages.push_back(j);
  }

  json m{{"format", "nlab-manifest v1"},
         {"config", cfg},
         {"stages", stages},
         {"verdict", man.verdict.empty() ? json(nullptr) : json(man.verdict)},
         {"status", man.failed ? "failed" : (man.negative ? "negative" : "ok")},
         {"exit_code", man.exit_code()}};
  man.json = m.dump(2) + "\n";
  std::ofstream o(out / "manifest.json", std::ios::binary);
  if (!o) throw IoError("cannot write " + (out / "manifest.json").string());
  o << man.json;
  if (!o) throw IoError("write failed: manifest.json");
}

}  // namespace nlab
