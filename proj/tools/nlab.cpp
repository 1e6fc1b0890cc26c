// nlab command line: single operations on field files, and the full pipeline.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#include "nlab/config.hpp"
#include "nlab/diagnostics.hpp"
#include "nlab/errors.hpp"
#include "nlab/field_io.hpp"
#include "nlab/liouville.hpp"
#include "nlab/parallel.hpp"
#include "nlab/pipeline.hpp"
#include "nlab/semilinear.hpp"
#include "nlab/stability.hpp"

using namespace nlab;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<double> parse_list(const std::string& s) {
  RunConfig tmp;
  set_config_value(tmp, "radii", s);
  return tmp.radii;
}

// Writes <out>/<name>.json with digests of the listed files and echoes it.
void report(const std::string& out, const std::string& name, json j, const std::vector<std::string>& files) {
  json arts = json::array();
  for (const std::string& f : files) {
    const std::string p = (fs::path(out) / f).string();
    arts.push_back({{"path", f}, {"sha256", sha256_file(p)}});
  }
  j["artifacts"] = arts;
  const std::string text = j.dump(2) + "\n";
  std::ofstream o(fs::path(out) / (name + ".json"), std::ios::binary);
  if (!o) throw IoError("cannot write " + name + ".json");
  o << text;
  std::cout << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nlab: nonlocal semilinear equations, stability and one-dimensional symmetry"};
  app.require_subcommand(1);
  // the grid spacing owns --h, so help is long-form only
  app.set_help_flag("--help", "print help and exit");
  std::string config_path, out_override;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 0;
  app.add_option("--config", config_path, "flat key=value config file")->check(CLI::ExistingFile);
  app.add_option("--out", out_override, "output directory");
  app.add_option_function<std::uint64_t>(
      "--seed", [&](std::uint64_t s) { seed = s, seed_given = true; }, "seed for randomized checks");
  app.add_option("--threads", threads, "worker threads (0: hardware)")->check(CLI::NonNegativeNumber);

  // kernel / nonlinearity / grid overrides shared by the solvers
  std::string kernel, f;
  double h = 0.0, S = 0.0;

  auto* p_pipe = app.add_subcommand("pipeline", "run the configured stages and write manifest.json");
  bool timing = false;
  std::vector<std::string> sets;
  p_pipe->add_flag("--timing", timing, "record wall-clock seconds per stage");
  p_pipe->add_option("--set", sets, "override a config key (key=value), repeatable");

  auto* p_s1 = app.add_subcommand("solve-1d", "layer profile w with L w = f(w), w(-inf) = -1, w(+inf) = 1");
  std::string stencil_kind = "line-sums";
  p_s1->add_option("--kernel", kernel, "indicator, fractional:s[*c] or table:path");
  p_s1->add_option("--f", f, "nonlinearity (allen-cahn)");
  p_s1->add_option("--h", h, "grid spacing");
  p_s1->add_option("--S", S, "half-width of the 1D grid");
  p_s1->add_option("--stencil", stencil_kind, "line-sums (of the 2D stencil) or marginal")
      ->check(CLI::IsMember({"line-sums", "marginal"}));

  auto* p_s2 = app.add_subcommand("solve-2d", "Newton solve of L u = f(u) on the square");
  std::string init, profile;
  std::string direction = "0,1";
  p_s2->add_option("--init", init, "initial field file");
  p_s2->add_option("--profile", profile, "extend this layer profile instead of --init");
  p_s2->add_option("--direction", direction, "a1,a2 for --profile");
  p_s2->add_option("--kernel", kernel, "kernel spec");
  p_s2->add_option("--f", f, "nonlinearity");
  p_s2->add_option("--h", h, "grid spacing for --profile");
  p_s2->add_option("--S", S, "half-width for --profile");

  auto* p_st = app.add_subcommand("stability", "principal eigenvalues on balls and the positive linearized solution");
  std::string ufile, radii_s = "4,6,8";
  bool construct = false;
  p_st->add_option("--u", ufile, "field file")->required()->check(CLI::ExistingFile);
  p_st->add_option("--R-list", radii_s, "increasing radii, each <= S - 1");
  p_st->add_flag("--construct-phi", construct, "also build the positive solution of the linearized equation");
  p_st->add_option("--kernel", kernel, "kernel spec");
  p_st->add_option("--f", f, "nonlinearity");

  auto* p_sg = app.add_subcommand("sigma", "sigma = d_i u / phi, the Liouville identities and the verdict");
  std::string phifile, closure_s = "2,3,4";
  int axis = 0;
  p_sg->add_option("--u", ufile, "field file")->required()->check(CLI::ExistingFile);
  p_sg->add_option("--phi", phifile, "default: derivative of u along its monotone axis")->check(CLI::ExistingFile);
  p_sg->add_option("--axis", axis, "1 or 2 (default: monotone axis)")->check(CLI::Range(0, 2));
  p_sg->add_option("--R-list,--closure-radii", closure_s, "cutoff radii R (2R <= S - 1)");
  p_sg->add_option("--kernel", kernel, "kernel spec");

  auto* p_hn = app.add_subcommand("harnack", "sup/inf of phi over unit balls");
  std::string grid_s = "5x5";
  double extent = 0.0;
  p_hn->add_option("--phi", phifile, "positive field file")->required()->check(CLI::ExistingFile);
  p_hn->add_option("--grid", grid_s, "kxk centres");
  p_hn->add_option("--extent", extent, "centres span [-extent, extent]^2 (default S/2)");

  auto* p_ll = app.add_subcommand("loglemma", "log-ratio energy of d + u on balls");
  double d = 1.0, s = 0.5;
  std::string lradii_s = "2,4,8";
  p_ll->add_option("--u", ufile, "nonnegative field file")->required()->check(CLI::ExistingFile);
  p_ll->add_option("--d", d, "shift d > 0");
  p_ll->add_option("--s", s, "fractional order of the kernel used for the energy");
  p_ll->add_option("--radii", lradii_s, "ball radii, each <= S - 1");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    set_thread_count(threads);
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (!out_override.empty()) cfg.out = out_override;
    if (seed_given) cfg.seed = seed;
    if (!kernel.empty()) set_config_value(cfg, "kernel", kernel);
    if (!f.empty()) set_config_value(cfg, "f", f);
    if (h > 0.0) cfg.h = h;
    if (S > 0.0) cfg.S = S;

    if (*p_pipe) {
      for (const std::string& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError(0, "--set expects key=value, got '" + kv + "'");
        set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
      }
      if (timing) cfg.timing = true;
      const RunManifest man = run_pipeline(cfg);
      std::cout << man.json;
      for (const StageRecord& r : man.stages)
        if (r.status == "failed") std::cerr << "stage " << r.name << " failed: " << r.error << "\n";
      return man.exit_code();
    }

    ensure_writable_dir(cfg.out);
    const std::string out = cfg.out;
    auto at = [&](const std::string& n) { return (fs::path(out) / n).string(); };
    const Kernel K = parse_kernel_spec(cfg.kernel);
    const Nonlinearity nl = parse_nonlinearity(cfg.f);

    if (*p_s1) {
      const Grid1D g1 = Grid1D::make(cfg.h, cfg.S);
      const Stencil1D L1 = stencil_kind == "marginal" ? build_stencil_1d(K.marginal(), cfg.h)
                                                      : marginal_stencil(build_stencil(K, cfg.h), 2);
      LayerOptions lo;
      lo.tol = cfg.tol_1d;
      const LayerResult r = solve_layer_1d(L1, nl, g1, lo);
      write_profile(at("layer.nlprofile"), r.profile);
      report(out, "solve-1d",
             {{"residual_inf", num(r.residual_inf)},
              {"iters", r.newton_iters},
              {"monotone_axis", r.strictly_increasing ? json(1) : json(nullptr)}},
             {"layer.nlprofile"});
      return r.strictly_increasing ? 0 : 2;
    }

    if (*p_s2) {
      Field u0;
      if (!profile.empty()) {
        RunConfig tmp;
        set_config_value(tmp, "direction", direction);
        auto w = std::make_shared<const Profile>(read_profile(profile));
        const std::string local = "layer.nlprofile";
        write_profile(at(local), *w);
        u0 = extend_to_2d(w, tmp.direction, Grid::make(cfg.h, cfg.S), local);
      } else if (!init.empty()) {
        u0 = read_field(init);
      } else {
        throw InvalidArgument("solve-2d needs --init or --profile");
      }
      const StencilOperator L = build_stencil(K, u0.grid());
      SolveOptions so;
      so.tol = cfg.tol_2d;
      const SolveResult r = solve_2d(L, nl, u0, so);
      if (r.u.farfield().kind() == Farfield::Kind::OneDim && !profile.empty()) {
        write_field(at("u.field"), r.u);
      } else if (r.u.farfield().kind() == Farfield::Kind::OneDim) {
        // keep the profile next to the output field
        Field v = r.u;
        Farfield ff = v.farfield();
        write_profile(at("layer.nlprofile"), *ff.profile());
        ff.set_source("layer.nlprofile");
        v.set_farfield(ff);
        write_field(at("u.field"), v);
      } else {
        write_field(at("u.field"), r.u);
      }
      std::vector<std::string> files{"u.field"};
      if (r.u.farfield().kind() == Farfield::Kind::OneDim) files.insert(files.begin(), "layer.nlprofile");
      report(out, "solve-2d",
             {{"residual_inf", num(r.residual_inf)},
              {"iters", r.newton_iters},
              {"monotone_axis", r.monotone_axis ? json(*r.monotone_axis) : json(nullptr)}},
             files);
      return 0;
    }

    if (*p_st) {
      const Field u = read_field(ufile);
      const StencilOperator L = build_stencil(K, u.grid());
      const Field V = potential_field(nl, u);
      const std::vector<double> radii = parse_list(radii_s);
      const auto sweep = lambda_sweep(L, V, radii);
      std::vector<std::vector<double>> rows;
      json js = json::array();
      for (const auto& e : sweep) {
        rows.push_back({e.R, e.lambda});
        js.push_back({{"R", num(e.R)}, {"lambda", num(e.lambda)}});
      }
      write_csv(at("lambda.csv"), "R,lambda", rows);
      json j{{"sweep", js}};
      std::vector<std::string> files{"lambda.csv"};
      int code = 0;
      if (construct) {
        try {
          const PositiveLinearization phi = construct_phi(L, V, radii);
          write_field(at("phi.field"), phi.phi);
          files.push_back("phi.field");
          j["phi_file"] = "phi.field";
          j["residual_inf"] = num(phi.residual_inf);
          j["positivity"] = true;
        } catch (const StabilityViolation& e) {
          j["positivity"] = false;
          j["error"] = e.what();
          code = 2;
        }
      }
      report(out, "stability", j, files);
      return code;
    }

    if (*p_sg) {
      const Field u = read_field(ufile);
      const StencilOperator L = build_stencil(K, u.grid());
      int ax = axis;
      Field phi;
      if (!phifile.empty()) {
        phi = read_field(phifile);
        if (ax == 0) ax = monotone_axis(u).value_or(2);
      } else {
        const auto mono = monotone_axis(u);
        if (!mono) throw InvalidArgument("sigma: u is not monotone along an axis; pass --phi");
        if (ax == 0) ax = *mono;
        phi = centered_derivative(u, *mono);
      }
      const SigmaField sg = build_sigma(u, phi, ax);
      write_field(at("sigma.field"), sg.sigma);
      const std::vector<double> cr = parse_list(closure_s);
      const double Rmax = *std::max_element(cr.begin(), cr.end());
      const Field eta = cutoff_ramp(Rmax, u.grid());
      const Step1Result st = step1_residual(L, sg, eta);
      const AustResult au = aust_identity_check(L, sg, eta);
      const auto rows = cauchy_schwarz_closure(L, sg, cr);
      std::vector<std::vector<double>> csv;
      bool holds = true;
      for (const auto& r : rows) {
        csv.push_back({r.R, r.I, r.rhs, r.crossterm, r.keybound, r.holds ? 1.0 : 0.0});
        holds = holds && r.holds;
      }
      write_csv(at("closure.csv"), "R,I,rhs,crossterm,keybound,holds", csv);
      const SymmetryVerdict v = symmetry_verdict(L, u, phi);
      report(out, "sigma",
             {{"axis", ax},
              {"step1", num(st.value)},
              {"aust_lhs", num(au.lhs)},
              {"aust_rhs", num(au.rhs)},
              {"closure_holds", holds},
              {"verdict", v.is_1d ? "1D" : "NOT-1D"},
              {"direction", v.direction_determined ? json{num(v.direction.x1), num(v.direction.x2)}
                                                   : json("undetermined-constant")},
              {"oned_deviation", num(v.oned_deviation)},
              {"energy1", num(v.energy1)},
              {"energy2", num(v.energy2)}},
             {"sigma.field", "closure.csv"});
      return v.is_1d && holds ? 0 : 2;
    }

    if (*p_hn) {
      const Field phi = read_field(phifile);
      const auto x = grid_s.find('x');
      const int k = std::stoi(grid_s.substr(0, x));
      if (x == std::string::npos || std::stoi(grid_s.substr(x + 1)) != k)
        throw InvalidArgument("--grid expects kxk");
      const HarnackReport r = harnack_probe(phi, center_lattice(k, extent > 0.0 ? extent : 0.5 * phi.grid().S));
      std::vector<std::vector<double>> rows;
      for (std::size_t c = 0; c < r.centers.size(); ++c) rows.push_back({r.centers[c].x1, r.centers[c].x2, r.ratios[c]});
      write_csv(at("harnack.csv"), "x1,x2,ratio", rows);
      report(out, "harnack", {{"maxratio", num(r.maxratio)}, {"blowup", r.blowup}}, {"harnack.csv"});
      return r.blowup ? 2 : 0;
    }

    if (*p_ll) {
      const Field u = read_field(ufile);
      const Kernel Kf = K.family() == KernelFamily::TruncatedFractional && K.s() == s
                            ? K
                            : Kernel::fractional(s);
      const StencilOperator L = build_stencil(Kf, u.grid());
      const LogLemmaReport r = loglemma_probe(L, u, d, parse_list(lradii_s), s);
      std::vector<std::vector<double>> rows;
      for (std::size_t k = 0; k < r.radii.size(); ++k) rows.push_back({r.radii[k], r.integrals[k], r.constants[k]});
      write_csv(at("loglemma.csv"), "r,integral,constant", rows);
      json cs = json::array();
      for (double c : r.constants) cs.push_back(num(c));
      report(out, "loglemma", {{"d", num(d)}, {"s", num(s)}, {"slope", num(r.slope)}, {"constants", cs}},
             {"loglemma.csv"});
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "nlab: " << error_kind(e) << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
