#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nlab/lattice.hpp"

namespace nlab {

/// f, f' and an evaluation of f(ref + dev) that keeps relative accuracy when
/// ref is a zero of f and dev is tiny.
struct Nonlinearity {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double)> fprime;
  std::function<double(double, double)> f_split;  // f(ref + dev)

  double operator()(double t) const { return f(t); }
  double at(Split s) const { return f_split ? f_split(s.ref, s.dev) : f(s.value()); }
  double derivative(Split s) const { return fprime(s.value()); }

  /// f(u) = u - u^3.
  static Nonlinearity allen_cahn();
};

/// `allen-cahn` (alias `ac`).
Nonlinearity parse_nonlinearity(std::string_view spec);

/// max over t in [lo, hi] of |(f(t+eps) - f(t-eps)) / (2 eps) - f'(t)|.
double derivative_audit(const Nonlinearity& nl, double lo = -2.0, double hi = 2.0, double eps = 1e-5,
                        int samples = 4001);

// ---------------------------------------------------------------- 1D layers

struct LayerOptions {
  double left = -1.0;
  double right = 1.0;
  double delta = 1.0;  // initial guess mid + half * tanh((t - shift) / delta)
  double shift = 0.0;
  std::optional<Profile> initial;  // overrides the tanh guess
  double tol = 1e-10;
  int max_iter = 60;
  int max_halvings = 40;
};

struct LayerResult {
  Profile profile;
  double residual_inf = 0.0;
  int newton_iters = 0;
  bool strictly_increasing = false;
  std::vector<double> history;  // residual sup-norm before each step
};

/// max_i |(L w)_i - f(w_i)| over the nodes of the profile.
std::vector<double> residual_1d(const Stencil1D& L, const Nonlinearity& nl, const Profile& w);
double residual_inf_1d(const Stencil1D& L, const Nonlinearity& nl, const Profile& w);

/// Solves L w = f(w) on the line with w frozen to left/right outside the
/// grid. Newton steps are bordered by the orthogonality condition to the
/// discrete derivative of the iterate: on a long interval the Jacobian is
/// singular up to roundoff along the translation mode, and the constraint
/// pins the layer where the initial guess put it.
LayerResult solve_layer_1d(const Stencil1D& L, const Nonlinearity& nl, const Grid1D& g, const LayerOptions& opts = {});

bool strictly_increasing(const Profile& w);

// ---------------------------------------------------------------- 2D

/// u(x) = w(x . a) with the matching one-dimensional farfield rule. Throws
/// InvalidArgument when the profile's interval does not cover the square's
/// projection plus the interaction band.
Field extend_to_2d(std::shared_ptr<const Profile> w, Vec2 a, const Grid& g, std::string source = {});

struct SolveOptions {
  double tol = 1e-9;
  int max_iter = 30;
  int max_halvings = 40;
  CgOptions cg{1e-11, 0.0, 20000};
};

struct SolveResult {
  Field u;
  double residual_inf = 0.0;
  int newton_iters = 0;
  std::optional<int> monotone_axis;  // 1 or 2
  std::vector<double> history;
  std::vector<int> cg_iterations;
};

Field residual_2d(const StencilOperator& L, const Nonlinearity& nl, const Field& u);
double residual_inf_2d(const StencilOperator& L, const Nonlinearity& nl, const Field& u);

/// Damped Newton for L_h u = f(u) on the square with the farfield frozen.
/// Jacobian systems are solved by conjugate gradients.
SolveResult solve_2d(const StencilOperator& L, const Nonlinearity& nl, const Field& init, const SolveOptions& opts = {});

/// True when u(x + h e_axis) - u(x) > 0 for every pair of nodes in the square.
bool strictly_monotone(const Field& u, int axis);
std::optional<int> monotone_axis(const Field& u);

}  // namespace nlab
