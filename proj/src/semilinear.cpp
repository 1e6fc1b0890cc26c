#include "nlab/semilinear.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>

#include "nlab/errors.hpp"
#include "nlab/parallel.hpp"

namespace nlab {

Nonlinearity Nonlinearity::allen_cahn() {
  Nonlinearity nl;
  nl.name = "allen-cahn";
  nl.f = [](double t) { return t - t * t * t; };
  nl.fprime = [](double t) { return 1.0 - 3.0 * t * t; };
  // t (1 - t)(1 + t) with the factors formed from the parts, so that
  // f(1 + d) = -(1 + d) d (2 + d) keeps its relative accuracy and is exactly odd
  nl.f_split = [](double r, double d) { return (r + d) * (((1.0 - r) - d) * ((1.0 + r) + d)); };
  return nl;
}

Nonlinearity parse_nonlinearity(std::string_view spec) {
  if (spec == "allen-cahn" || spec == "ac") return Nonlinearity::allen_cahn();
  throw InvalidArgument("unknown nonlinearity '" + std::string(spec) + "'");
}

double derivative_audit(const Nonlinearity& nl, double lo, double hi, double eps, int samples) {
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double t = lo + (hi - lo) * k / (samples - 1);
    const double fd = (nl.f(t + eps) - nl.f(t - eps)) / (2.0 * eps);
    worst = std::max(worst, std::abs(fd - nl.fprime(t)));
  }
  return worst;
}

// ---------------------------------------------------------------- 1D

std::vector<double> residual_1d(const Stencil1D& L, const Nonlinearity& nl, const Profile& w) {
  std::vector<double> r = apply_1d(L, w);
  const int m = w.grid().m;
  for (int i = -m; i <= m; ++i) r[static_cast<std::size_t>(i + m)] -= nl.at(w.node(i));
  return r;
}

double residual_inf_1d(const Stencil1D& L, const Nonlinearity& nl, const Profile& w) {
  return norm_inf(residual_1d(L, nl, w));
}

bool strictly_increasing(const Profile& w) {
  for (int i = -w.grid().m; i < w.grid().m; ++i)
    if (!(difference(w.node(i + 1), w.node(i)) > 0.0)) return false;
  return true;
}

namespace {

Profile tanh_guess(const Grid1D& g, const LayerOptions& o) {
  const double half = 0.5 * (o.right - o.left);
  std::vector<double> dev(static_cast<std::size_t>(g.n()));
  for (int i = -g.m; i <= g.m; ++i) {
    const double x = (g.t(i) - o.shift) / o.delta;
    double d;
    // mid + half tanh(x) minus the step reference, without cancellation
    if (i > 0) d = -2.0 * half / (std::exp(2.0 * x) + 1.0);
    else if (i < 0) d = 2.0 * half / (std::exp(-2.0 * x) + 1.0);
    else d = half * std::tanh(x);
    dev[static_cast<std::size_t>(i + g.m)] = d;
  }
  return Profile(g, o.left, o.right, std::move(dev));
}

}  // namespace

LayerResult solve_layer_1d(const Stencil1D& L, const Nonlinearity& nl, const Grid1D& g, const LayerOptions& opts) {
  if (std::abs(L.h - g.h) > 1e-15) throw InvalidArgument("solve_layer_1d: stencil spacing differs from the grid");
  Profile w = opts.initial ? *opts.initial : tanh_guess(g, opts);
  if (!(w.grid() == g)) throw InvalidArgument("solve_layer_1d: initial profile lives on another grid");
  if (w.left() != opts.left || w.right() != opts.right)
    w = Profile(g, opts.left, opts.right, [&] {
      std::vector<double> d(static_cast<std::size_t>(g.n()));
      for (int i = -g.m; i <= g.m; ++i) d[static_cast<std::size_t>(i + g.m)] = w.value(i) - (i < 0 ? opts.left : i > 0 ? opts.right : 0.5 * (opts.left + opts.right));
      return d;
    }());

  const int n = g.n();
  const int m = g.m;
  const int reach = L.reach();
  double diag_L = 0.0;
  for (double wk : L.weights) diag_L += 2.0 * wk;

  LayerResult out{w, 0.0, 0, false, {}};
  std::vector<double> r = residual_1d(L, nl, w);
  double rn = norm_inf(r);
  // a constant profile at a zero of f has no translation mode to pin
  const bool bordered = opts.left != opts.right;

  while (rn > opts.tol) {
    if (out.newton_iters >= opts.max_iter) {
      out.history.push_back(rn);
      throw NonConvergence("solve_layer_1d: no convergence after " + std::to_string(opts.max_iter) +
                               " Newton steps (residual " + std::to_string(rn) + ")",
                           out.history);
    }
    out.history.push_back(rn);
    const int N = bordered ? n + 1 : n;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(n) * (2 * reach + 1) + 2 * n);
    for (int i = -m; i <= m; ++i) {
      const int row = i + m;
      trip.emplace_back(row, row, diag_L - nl.derivative(w.node(i)));
      for (int k = 1; k <= reach; ++k) {
        const double wk = L.weights[static_cast<std::size_t>(k - 1)];
        if (i + k <= m) trip.emplace_back(row, row + k, -wk);
        if (i - k >= -m) trip.emplace_back(row, row - k, -wk);
      }
    }
    Eigen::VectorXd rhs(N);
    for (int k = 0; k < n; ++k) rhs[k] = -r[static_cast<std::size_t>(k)];
    if (bordered) {
      // z = centred difference of the iterate
      std::vector<double> z(static_cast<std::size_t>(n));
      double zz = 0.0;
      for (int i = -m; i <= m; ++i) {
        z[static_cast<std::size_t>(i + m)] = 0.5 * difference(w.node(i + 1), w.node(i - 1));
        zz += z[static_cast<std::size_t>(i + m)] * z[static_cast<std::size_t>(i + m)];
      }
      const double scale = zz > 0.0 ? 1.0 / std::sqrt(zz) : 1.0;
      for (int k = 0; k < n; ++k) {
        trip.emplace_back(k, n, z[static_cast<std::size_t>(k)] * scale);
        trip.emplace_back(n, k, z[static_cast<std::size_t>(k)] * scale);
      }
      rhs[n] = 0.0;
    }
    Eigen::SparseMatrix<double> J(N, N);
    J.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(J);
    if (lu.info() != Eigen::Success) throw LinearSolverBreakdown("solve_layer_1d: sparse LU factorization failed");
    const Eigen::VectorXd step = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !step.allFinite())
      throw LinearSolverBreakdown("solve_layer_1d: sparse LU solve failed");

    double alpha = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= opts.max_halvings; ++halving, alpha *= 0.5) {
      Profile trial = w;
      auto d = trial.deviation();
      for (int k = 0; k < n; ++k) d[static_cast<std::size_t>(k)] += alpha * step[k];
      std::vector<double> rt = residual_1d(L, nl, trial);
      const double rtn = norm_inf(rt);
      if (rtn < rn) {
        w = std::move(trial);
        r = std::move(rt);
        rn = rtn;
        accepted = true;
        break;
      }
    }
    ++out.newton_iters;
    if (!accepted) {
      out.history.push_back(rn);
      throw NonConvergence("solve_layer_1d: line search stagnated at residual " + std::to_string(rn), out.history);
    }
  }
  out.history.push_back(rn);
  out.profile = std::move(w);
  out.residual_inf = rn;
  out.strictly_increasing = strictly_increasing(out.profile);
  return out;
}

// ---------------------------------------------------------------- 2D

Field extend_to_2d(std::shared_ptr<const Profile> w, Vec2 a, const Grid& g, std::string source) {
  if (!w) throw InvalidArgument("extend_to_2d: missing profile");
  const double len = std::hypot(a.x1, a.x2);
  if (!(len > 0.0)) throw InvalidArgument("extend_to_2d: direction must be nonzero");
  const Vec2 u{a.x1 / len, a.x2 / len};
  // |x . a| over the square plus the band of width 1, plus the interpolation stencil
  const double need = (g.m * g.h + 1.0 + g.h) * (std::abs(u.x1) + std::abs(u.x2)) + 2.0 * w->grid().h;
  const double have = w->grid().m * w->grid().h;
  if (have + 1e-12 < need)
    throw InvalidArgument("extend_to_2d: the profile covers |t| <= " + std::to_string(have) + " but " +
                          std::to_string(need) + " is needed");
  Field f(g, Farfield::onedim(u, std::move(w), std::move(source)));
  auto dev = f.deviations();
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const Split s = f.farfield().outside(g, g.i_of(idx), g.j_of(idx));
    dev[idx] = (s.ref - f.reference(idx)) + s.dev;
  }
  return f;
}

Field residual_2d(const StencilOperator& L, const Nonlinearity& nl, const Field& u) {
  Field r = apply(L, u);
  auto d = r.deviations();
  const Grid& g = u.grid();
  for (std::size_t idx = 0; idx < g.size(); ++idx) d[idx] -= nl.at({u.reference(idx), u.deviations()[idx]});
  return r;
}

double residual_inf_2d(const StencilOperator& L, const Nonlinearity& nl, const Field& u) {
  return norm_inf(residual_2d(L, nl, u).deviations());
}

bool strictly_monotone(const Field& u, int axis) {
  if (axis != 1 && axis != 2) throw InvalidArgument("axis must be 1 or 2");
  const Grid& g = u.grid();
  for (int j = -g.m; j <= g.m; ++j) {
    for (int i = -g.m; i <= g.m; ++i) {
      const int i2 = axis == 1 ? i + 1 : i, j2 = axis == 2 ? j + 1 : j;
      if (!g.contains(i2, j2)) continue;
      if (!(difference(u.split(i2, j2), u.split(i, j)) > 0.0)) return false;
    }
  }
  return true;
}

std::optional<int> monotone_axis(const Field& u) {
  if (strictly_monotone(u, 2)) return 2;
  if (strictly_monotone(u, 1)) return 1;
  return std::nullopt;
}

SolveResult solve_2d(const StencilOperator& L, const Nonlinearity& nl, const Field& init, const SolveOptions& opts) {
  const Grid& g = init.grid();
  if (std::abs(L.h - g.h) > 1e-15) throw InvalidArgument("solve_2d: stencil spacing differs from the grid");
  SolveResult out{init, 0.0, 0, std::nullopt, {}, {}};
  Field& u = out.u;
  Field r = residual_2d(L, nl, u);
  double rn = norm_inf(r.deviations());
  std::vector<std::size_t> all(g.size());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;

  while (rn > opts.tol) {
    if (out.newton_iters >= opts.max_iter) {
      out.history.push_back(rn);
      throw NonConvergence("solve_2d: no convergence after " + std::to_string(opts.max_iter) + " Newton steps",
                           out.history);
    }
    out.history.push_back(rn);
    std::vector<double> pot(g.size());
    for (std::size_t idx = 0; idx < g.size(); ++idx) pot[idx] = nl.derivative({u.reference(idx), u.deviations()[idx]});
    MaskedOperator J(L, g, all, std::move(pot));
    std::vector<double> rhs(g.size()), step(g.size(), 0.0);
    for (std::size_t idx = 0; idx < g.size(); ++idx) rhs[idx] = -r.deviations()[idx];
    CgResult cg;
    try {
      cg = conjugate_gradient(J.as_map(), rhs, step, opts.cg);
    } catch (const LinearSolverBreakdown& e) {
      throw LinearSolverBreakdown(std::string("solve_2d: Jacobian solve broke down: ") + e.what());
    }
    out.cg_iterations.push_back(cg.iterations);

    double alpha = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= opts.max_halvings; ++halving, alpha *= 0.5) {
      Field trial = u;
      auto d = trial.deviations();
      for (std::size_t idx = 0; idx < g.size(); ++idx) d[idx] += alpha * step[idx];
      Field rt = residual_2d(L, nl, trial);
      const double rtn = norm_inf(rt.deviations());
      if (rtn < rn) {
        u = std::move(trial);
        r = std::move(rt);
        rn = rtn;
        accepted = true;
        break;
      }
    }
    ++out.newton_iters;
    if (!accepted) {
      out.history.push_back(rn);
      throw NonConvergence("solve_2d: line search stagnated at residual " + std::to_string(rn), out.history);
    }
  }
  out.history.push_back(rn);
  out.residual_inf = rn;
  out.monotone_axis = monotone_axis(u);
  return out;
}

}  // namespace nlab
