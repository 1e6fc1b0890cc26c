#pragma once

#include <cstdint>
#include <vector>

#include "nlab/lattice.hpp"
#include "nlab/linalg.hpp"
#include "nlab/semilinear.hpp"

namespace nlab {

/// f'(u) at every node of the square.
Field potential_field(const Nonlinearity& nl, const Field& u);

/// Q_R(xi) = hk_energy(xi) - sum_{B_R} V xi^2 h^2 for xi vanishing outside
/// B_R = {|x| < R}.
class QuadraticForm {
 public:
  /// Requires R <= S - 1.
  QuadraticForm(const StencilOperator& L, Field potential, double R);

  double R() const { return R_; }
  const Grid& grid() const { return potential_.grid(); }
  const StencilOperator& stencil() const { return *L_; }
  const Field& potential() const { return potential_; }
  const std::vector<std::size_t>& nodes() const { return nodes_; }

  /// Throws InvalidArgument if xi is nonzero outside the ball.
  double operator()(const Field& xi) const;
  /// sum xi^2 h^2
  double l2_squared(const Field& xi) const;

  /// The symmetric operator L_h - diag(V) restricted to the ball.
  MaskedOperator restricted() const;

  Field embed(std::span<const double> ball_values) const;

 private:
  const StencilOperator* L_;
  Field potential_;
  double R_;
  std::vector<std::size_t> nodes_;
};

struct EigenResult {
  double R = 0.0;
  double lambda = 0.0;
  Field eigfn;  // nonnegative, sum eigfn^2 h^2 = 1, zero outside B_R
  double residual = 0.0;  // ||A v - lambda v|| of the Lanczos vector
  int matvecs = 0;
  std::vector<double> history;
};

/// Smallest value of Q_R(xi) / ||xi||^2. The minimizer is replaced by its
/// modulus (also a minimizer) and lambda is its Rayleigh quotient.
EigenResult principal_eigenvalue(const QuadraticForm& q, const LanczosOptions& opts = {});

std::vector<EigenResult> lambda_sweep(const StencilOperator& L, const Field& potential, const std::vector<double>& radii,
                                      const LanczosOptions& opts = {});

struct PhiStep {
  double R = 0.0;
  double lambda = 0.0;
  double phi_min = 0.0;          // over the ball, after normalization
  double residual_ball = 0.0;    // sup |L phi - V phi| over B_R
  double residual_window = 0.0;  // the same over the window B_{R_0 / 2}
  double change = -1.0;          // relative sup change on B_{R_prev / 2}; -1 for the first radius
  int cg_iterations = 0;
};

struct PositiveLinearization {
  Field phi;  // last radius; phi(0) = 1, constant outside B_R
  double residual_inf = 0.0;  // on the window B_{R_0 / 2}
  double window = 0.0;
  bool converged = false;  // successive radii within 1e-4 on B_{R_prev / 2}
  std::vector<PhiStep> steps;
};

struct PhiOptions {
  double lambda_floor = 1e-10;
  double convergence_tol = 1e-4;
  LanczosOptions lanczos{};
  CgOptions cg{1e-14, 0.0, 50000};
  int refinement_rounds = 12;      // correction solves against the true residual
  double refinement_tol = 1e-14;   // window residual relative to phi(0)
};

/// For each R (increasing): checks lambda_R > floor, solves
/// L phi = V phi in B_R with phi = 1 outside, normalizes phi(0) = 1 and
/// verifies phi > 0. Throws StabilityViolation or PositivityFailure.
PositiveLinearization construct_phi(const StencilOperator& L, const Field& potential, const std::vector<double>& radii,
                                    const PhiOptions& opts = {});

/// Theta(x, y) in its defining form.
double theta(double phi_x, double phi_y, double xi_x, double xi_y);

struct ThetaReport {
  double max_violation = 0.0;  // max of Theta - (xi(x) - xi(y))^2
  std::size_t samples = 0;
};

/// Over every stencil-coupled pair of nodes of the square.
ThetaReport theta_inequality_check(const StencilOperator& L, const Field& phi, const Field& xi);
/// phi uniform in [0.5, 2], xi uniform in [-1, 1].
ThetaReport theta_random_check(std::size_t pairs, std::uint64_t seed);

struct StabilityMargin {
  double worst = 0.0;             // min Q_R(xi)
  double worst_normalized = 0.0;  // min Q_R(xi) / ||xi||^2
  int trials = 0;
};

/// Q_R on random noise and random wide bumps supported in B_R. Throws if phi
/// is not positive.
StabilityMargin stability_inequality_check(const QuadraticForm& q, const PositiveLinearization& phi, int trials,
                                           std::uint64_t seed);
StabilityMargin stability_inequality_check(const QuadraticForm& q, int trials, std::uint64_t seed);

/// (1 - |x|^2 / R^2)^2 inside B_R.
Field wide_bump(const Grid& g, double R, Vec2 center = {0.0, 0.0});

}  // namespace nlab
