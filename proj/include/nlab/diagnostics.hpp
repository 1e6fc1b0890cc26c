#pragma once

#include <vector>

#include "nlab/lattice.hpp"

namespace nlab {

struct HarnackReport {
  std::vector<Vec2> centers;
  std::vector<double> ratios;  // sup / inf of phi over the nodes of B_1(center)
  double maxratio = 0.0;
  bool blowup = false;  // maxratio > 1e3
};

/// k x k centres spaced evenly on [-extent, extent]^2.
std::vector<Vec2> center_lattice(int k, double extent);

/// Throws PositivityFailure if phi <= 0, InvalidArgument if a unit ball
/// leaves the square.
HarnackReport harnack_probe(const Field& phi, const std::vector<Vec2>& centers);

struct HolderReport {
  std::vector<double> alphas;
  std::vector<double> seminorms;  // sup |w(x)-w(y)| / |x-y|^alpha per candidate
  std::vector<double> medians;    // median pair quotient per candidate
  double best_alpha = 0.0;
  double best_seminorm = 0.0;
  std::size_t pairs = 0;
};

/// Pairs of nodes in B_{1/2} with |x - y| in [2h, 0.5]. The best exponent is
/// the largest candidate whose seminorm stays below 10 times the median
/// quotient.
HolderReport holder_probe(const Field& w, const std::vector<double>& alphas = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0});

struct LogLemmaReport {
  double d = 0.0;
  double s = 0.0;
  std::vector<double> radii;
  std::vector<double> integrals;
  std::vector<double> constants;  // integral / r^{2-2s}
  double slope = 0.0;             // least squares of log integral against log r
  int fitted = 0;                 // radii with integral > 1e-14
};

/// sum over pairs in B_r x B_r of K |log((d + u(x)) / (d + u(y)))|^2.
/// Throws InvalidArgument if u < 0 somewhere, d <= 0 or r > S - 1.
LogLemmaReport loglemma_probe(const StencilOperator& L, const Field& u, double d, const std::vector<double>& radii,
                              double s);

}  // namespace nlab
