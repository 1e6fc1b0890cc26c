#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nlab/lattice.hpp"

namespace nlab {

/// sigma = d_i u / phi with d_i the centred difference.
struct SigmaField {
  Field sigma;
  Field phi;
  Field u;
  int axis = 2;
  std::string scheme = "centered";
};

/// Centred difference (u(x + h e_i) - u(x - h e_i)) / 2h at every node,
/// reading the farfield at the edge.
Field centered_derivative(const Field& u, int axis);

/// Throws PositivityFailure if phi <= 0 somewhere.
SigmaField build_sigma(const Field& u, const Field& phi, int axis);

/// eta(x) = clamp(2 - |x| / R, 0, 1). Requires 2R <= S - 1.
Field cutoff_ramp(double R, const Grid& g);

/// sum_x sum_z term(x, z) weight(z - x) h^2 over ordered pairs of nodes of
/// the square coupled by the stencil; weight(o) h^{-2} plays K(x - z), so this
/// is the double integral against K(x - z) dz dx.
double pair_sum(const StencilOperator& L, const Grid& g,
                const std::function<double(std::size_t, std::size_t)>& term);

struct Step1Result {
  double value = 0.0;   // |sum eta^2(x) sigma(x) (sigma(x) - sigma(z)) phi(x) phi(z) K|
  double signed_value = 0.0;
  double scale = 0.0;   // sum eta^2(x) |sigma(x)| |sigma(x) - sigma(z)| phi phi K
};
Step1Result step1_residual(const StencilOperator& L, const SigmaField& s, const Field& eta);

double keybound_quantity(const StencilOperator& L, const SigmaField& s, double R);

struct AustResult {
  double lhs = 0.0;  // I(R)
  double rhs = 0.0;  // -sum (sigma^2(x) - sigma^2(z)) (eta^2(x) - eta^2(z)) phi phi K
  double step1 = 0.0;  // signed step-1 sum; lhs - rhs = 4 step1 identically
  double identity_gap = 0.0;   // |lhs - rhs - 4 step1| / max(1, |lhs|, |rhs|)
  double pointwise_gap = 0.0;  // max over pairs of the symmetrization identity residual
};
AustResult aust_identity_check(const StencilOperator& L, const SigmaField& s, const Field& eta);

struct ClosureRow {
  double R = 0.0;
  double I = 0.0;          // lhs of the symmetrized identity
  double rhs = 0.0;
  double crossterm = 0.0;  // I restricted to pairs with eta(x) != eta(z)
  double keybound = 0.0;
  bool holds = false;      // rhs^2 <= 2 crossterm keybound (+ 1e-12 slack)
};
/// Cauchy-Schwarz closure per radius. The constant 2 comes from
/// (eta(x) + eta(z))^2 <= 2 (eta^2(x) + eta^2(z)).
std::vector<ClosureRow> cauchy_schwarz_closure(const StencilOperator& L, const SigmaField& s,
                                               const std::vector<double>& radii);

/// pair_sum of (sigma(x) - sigma(z))^2 phi(x) phi(z) over pairs inside the mask
/// (every node when it is empty).
double sigma_energy(const StencilOperator& L, const SigmaField& s, const std::vector<char>& mask = {});

/// I(phi, sigma)(x) = sum_o weight(o) (phi(x) - phi(x+o)) (sigma(x) - sigma(x+o)).
Field interaction_I(const StencilOperator& L, const Field& phi, const Field& sigma);

/// sup |L(sigma phi) - sigma L phi - phi L sigma + I(phi, sigma)| over the
/// square, relative to the largest term. Fields need farfield rules.
double product_rule_residual(const StencilOperator& L, const Field& sigma, const Field& phi);

struct SymmetryVerdict {
  double c1 = 0.0, c2 = 0.0;
  Vec2 direction{0.0, 0.0};
  bool direction_determined = false;  // false: u is constant on the window
  double oned_deviation = 0.0;
  double energy1 = 0.0, energy2 = 0.0;
  double excluded_fraction = 0.0;  // nodes with phi < 1e-8 max phi
  bool is_1d = false;
};

struct VerdictOptions {
  double phi_floor = 1e-8;
  double deviation_tol = 1e-4;
  double energy_tol = 1e-8;
};

SymmetryVerdict symmetry_verdict(const StencilOperator& L, const Field& u, const Field& phi,
                                 const VerdictOptions& opts = {});

}  // namespace nlab
