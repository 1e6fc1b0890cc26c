#include "nlab/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "nlab/errors.hpp"
#include "nlab/parallel.hpp"

namespace nlab {

double dot(std::span<const double> a, std::span<const double> b) {
  return ordered_sum(a.size(), [&](std::size_t k) { return a[k] * b[k]; });
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm_inf(std::span<const double> a) {
  return ordered_max(a.size(), [&](std::size_t k) { return std::abs(a[k]); });
}

namespace {

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t k = 0; k < y.size(); ++k) y[k] += alpha * x[k];
}

}  // namespace

CgResult conjugate_gradient(const LinearMap& A, std::span<const double> b, std::span<double> x,
                            const CgOptions& opts) {
  const std::size_t n = b.size();
  Vector r(n), p(n), Ap(n);
  A(x, r);
  for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - r[k];
  const double bnorm = norm2(b);
  const double target = std::max(opts.abs_tol, opts.rel_tol * bnorm);
  CgResult res;
  double rr = dot(r, r);
  res.residual_norm = std::sqrt(rr);
  if (res.residual_norm <= target) {
    res.converged = true;
    return res;
  }
  p = r;
  for (int it = 1; it <= opts.max_iter; ++it) {
    A(p, Ap);
    const double pAp = dot(p, Ap);
    if (!(pAp > 0.0)) {
      throw LinearSolverBreakdown("conjugate gradient breakdown: nonpositive curvature p'Ap = " +
                                  std::to_string(pAp) + " at iteration " + std::to_string(it));
    }
    const double alpha = rr / pAp;
    axpy(alpha, p, x);
    axpy(-alpha, Ap, r);
    const double rr_new = dot(r, r);
    res.iterations = it;
    res.residual_norm = std::sqrt(rr_new);
    if (res.residual_norm <= target) {
      // recompute the true residual; the recursive one drifts on long runs
      A(x, Ap);
      for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - Ap[k];
      rr = dot(r, r);
      res.residual_norm = std::sqrt(rr);
      if (res.residual_norm <= target * 10.0) {
        res.converged = true;
        return res;
      }
      p = r;
      continue;
    }
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t k = 0; k < n; ++k) p[k] = r[k] + beta * p[k];
  }
  return res;
}

EigenPair lanczos_smallest(const LinearMap& A, std::size_t n, Vector start, const LanczosOptions& opts) {
  EigenPair out;
  if (n == 0) throw InvalidArgument("lanczos_smallest: empty operator");
  if (start.size() != n) throw InvalidArgument("lanczos_smallest: start vector has wrong size");
  const int m = static_cast<int>(std::min<std::size_t>(opts.basis, n));

  Vector v = std::move(start);
  double vn = norm2(v);
  if (!(vn > 0.0)) throw InvalidArgument("lanczos_smallest: zero start vector");
  for (double& e : v) e /= vn;

  std::vector<Vector> Q;
  Vector w(n);
  for (int cycle = 0; cycle <= opts.max_restarts; ++cycle) {
    Q.assign(1, v);
    std::vector<double> alpha, beta;
    bool exhausted = false;
    for (int j = 0; j < m; ++j) {
      A(Q[j], w);
      ++out.matvecs;
      const double a = dot(Q[j], w);
      alpha.push_back(a);
      // two passes of classical Gram-Schmidt against the whole basis
      for (int pass = 0; pass < 2; ++pass) {
        for (int i = 0; i <= j; ++i) {
          const double c = dot(Q[i], w);
          axpy(-c, Q[i], w);
        }
      }
      const double b = norm2(w);
      const bool last = (j + 1 == m);
      const int k = j + 1;
      if (b < 1e-14 * std::max(1.0, std::abs(a))) exhausted = true;

      if (exhausted || last || k % opts.check_every == 0) {
        Eigen::VectorXd diag(k), sub(std::max(k - 1, 0));
        for (int i = 0; i < k; ++i) diag[i] = alpha[i];
        for (int i = 0; i + 1 < k; ++i) sub[i] = beta[i];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
        es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
        const double theta = es.eigenvalues()[0];
        const Eigen::VectorXd s = es.eigenvectors().col(0);
        out.history.push_back(theta);
        const double estimate = exhausted ? 0.0 : std::abs(b * s[k - 1]);
        if (estimate <= opts.residual_tol || last || exhausted) {
          Vector x(n, 0.0);
          for (int i = 0; i < k; ++i) axpy(s[i], Q[i], x);
          const double xn = norm2(x);
          for (double& e : x) e /= xn;
          Vector Ax(n);
          A(x, Ax);
          ++out.matvecs;
          const double rq = dot(x, Ax);
          for (std::size_t t = 0; t < n; ++t) Ax[t] -= rq * x[t];
          const double true_res = norm2(Ax);
          if (true_res <= opts.residual_tol || exhausted) {
            out.value = rq;
            out.vector = std::move(x);
            out.residual = true_res;
            return out;
          }
          if (last || estimate <= opts.residual_tol) {
            v = std::move(x);
            break;
          }
        }
      }
      beta.push_back(b);
      Vector next(n);
      for (std::size_t t = 0; t < n; ++t) next[t] = w[t] / b;
      Q.push_back(std::move(next));
    }
  }
  throw NonConvergence("lanczos_smallest: residual above " + std::to_string(opts.residual_tol) + " after " +
                           std::to_string(opts.max_restarts) + " restarts",
                       out.history);
}

}  // namespace nlab
