#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace nlab {

using Vector = std::vector<double>;

/// y = A x for a symmetric operator given matrix-free.
using LinearMap = std::function<void(std::span<const double> x, std::span<double> y)>;

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm_inf(std::span<const double> a);

struct CgOptions {
  double rel_tol = 1e-12;
  double abs_tol = 0.0;
  int max_iter = 20000;
};

struct CgResult {
  int iterations = 0;
  double residual_norm = 0.0;
  bool converged = false;
};

/// Conjugate gradients for symmetric positive definite A. x holds the initial
/// guess on entry. Throws LinearSolverBreakdown when a search direction has
/// nonpositive curvature (A is not positive definite on the Krylov space).
CgResult conjugate_gradient(const LinearMap& A, std::span<const double> b, std::span<double> x,
                            const CgOptions& opts = {});

struct LanczosOptions {
  int basis = 160;        // vectors kept per cycle
  int max_restarts = 60;  // explicit restarts from the current Ritz vector
  double residual_tol = 1e-10;
  int check_every = 8;
};

struct EigenPair {
  double value = 0.0;
  Vector vector;  // unit 2-norm
  double residual = 0.0;
  int matvecs = 0;
  std::vector<double> history;  // Ritz value at every convergence check
};

/// Smallest eigenpair of the symmetric operator A of dimension n by Lanczos
/// with full reorthogonalization and explicit restarts.
EigenPair lanczos_smallest(const LinearMap& A, std::size_t n, Vector start, const LanczosOptions& opts = {});

}  // namespace nlab
