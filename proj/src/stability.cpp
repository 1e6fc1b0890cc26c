#include "nlab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "nlab/errors.hpp"
#include "nlab/parallel.hpp"

namespace nlab {

Field potential_field(const Nonlinearity& nl, const Field& u) {
  Field v(u.grid());
  auto d = v.deviations();
  for (std::size_t idx = 0; idx < d.size(); ++idx) d[idx] = nl.derivative({u.reference(idx), u.deviations()[idx]});
  return v;
}

namespace {

void check_radius(const Grid& g, double R) {
  if (!(R > 0.0)) throw InvalidArgument("ball radius must be positive");
  if (R > g.S - 1.0 + 1e-12)
    throw InvalidArgument("ball radius R = " + std::to_string(R) + " exceeds S - 1 = " + std::to_string(g.S - 1.0));
}

Field with_zero_farfield(const Field& xi) {
  if (xi.farfield().kind() != Farfield::Kind::None) return xi;
  Field z = xi;
  z.set_farfield(Farfield::constant(0.0));
  return z;
}

}  // namespace

QuadraticForm::QuadraticForm(const StencilOperator& L, Field potential, double R)
    : L_(&L), potential_(std::move(potential)), R_(R) {
  check_radius(potential_.grid(), R);
  if (std::abs(L.h - potential_.grid().h) > 1e-15) throw InvalidArgument("QuadraticForm: stencil spacing differs from the grid");
  nodes_ = ball_nodes(potential_.grid(), R);
}

double QuadraticForm::operator()(const Field& xi) const {
  const Grid& g = grid();
  if (!(xi.grid() == g)) throw InvalidArgument("QuadraticForm: field lives on another grid");
  std::vector<char> inside(g.size(), 0);
  for (std::size_t idx : nodes_) inside[idx] = 1;
  double pot = 0.0;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const double v = xi.value(idx);
    if (!inside[idx]) {
      if (v != 0.0) throw InvalidArgument("QuadraticForm: test field does not vanish outside B_R");
      continue;
    }
    pot += potential_.value(idx) * v * v;
  }
  return hk_energy(*L_, with_zero_farfield(xi)) - pot * g.h * g.h;
}

double QuadraticForm::l2_squared(const Field& xi) const {
  double s = 0.0;
  for (std::size_t idx = 0; idx < xi.grid().size(); ++idx) s += xi.value(idx) * xi.value(idx);
  return s * xi.grid().h * xi.grid().h;
}

MaskedOperator QuadraticForm::restricted() const {
  std::vector<double> pot(nodes_.size());
  for (std::size_t k = 0; k < nodes_.size(); ++k) pot[k] = potential_.value(nodes_[k]);
  return MaskedOperator(*L_, grid(), nodes_, std::move(pot));
}

Field QuadraticForm::embed(std::span<const double> ball_values) const {
  Field f(grid(), Farfield::constant(0.0));
  auto d = f.deviations();
  for (std::size_t k = 0; k < nodes_.size(); ++k) d[nodes_[k]] = ball_values[k];
  return f;
}

EigenResult principal_eigenvalue(const QuadraticForm& q, const LanczosOptions& opts) {
  const MaskedOperator A = q.restricted();
  const std::size_t n = A.size();
  if (n == 0) throw InvalidArgument("principal_eigenvalue: the ball holds no nodes");
  EigenPair ep = lanczos_smallest(A.as_map(), n, Vector(n, 1.0), opts);
  // the modulus of a minimizer is a minimizer
  Vector v = ep.vector;
  for (double& e : v) e = std::abs(e);
  const double h = q.grid().h;
  const double scale = 1.0 / (norm2(v) * h);
  for (double& e : v) e *= scale;
  EigenResult out;
  out.R = q.R();
  out.eigfn = q.embed(v);
  out.lambda = q(out.eigfn) / q.l2_squared(out.eigfn);
  out.residual = ep.residual;
  out.matvecs = ep.matvecs;
  out.history = std::move(ep.history);
  return out;
}

std::vector<EigenResult> lambda_sweep(const StencilOperator& L, const Field& potential, const std::vector<double>& radii,
                                      const LanczosOptions& opts) {
  std::vector<EigenResult> out;
  for (double R : radii) out.push_back(principal_eigenvalue(QuadraticForm(L, potential, R), opts));
  return out;
}

// ---------------------------------------------------------------- phi

PositiveLinearization construct_phi(const StencilOperator& L, const Field& potential, const std::vector<double>& radii,
                                    const PhiOptions& opts) {
  if (radii.empty()) throw InvalidArgument("construct_phi: empty radius list");
  for (std::size_t k = 1; k < radii.size(); ++k)
    if (!(radii[k] > radii[k - 1])) throw InvalidArgument("construct_phi: radii must increase");
  const Grid& g = potential.grid();
  PositiveLinearization out{Field(g), 0.0, 0.5 * radii.front(), false, {}};
  const std::vector<std::size_t> window = ball_nodes(g, out.window);
  std::vector<double> prev;  // previous phi on the square
  double prev_R = 0.0;

  for (double R : radii) {
    QuadraticForm q(L, potential, R);
    const EigenResult eig = principal_eigenvalue(q, opts.lanczos);
    if (!(eig.lambda > opts.lambda_floor)) throw StabilityViolation(R, eig.lambda);

    const MaskedOperator A = q.restricted();
    const auto& nodes = q.nodes();
    std::vector<char> inside(g.size(), 0);
    for (std::size_t idx : nodes) inside[idx] = 1;
    // exterior data phi = 1 moves to the right-hand side
    std::vector<double> b(nodes.size(), 0.0);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const int i = g.i_of(nodes[k]), j = g.j_of(nodes[k]);
      double acc = 0.0;
      for (std::size_t t = 0; t < L.offsets.size(); ++t) {
        const int i2 = i + L.offsets[t].d1, j2 = j + L.offsets[t].d2;
        if (!g.contains(i2, j2) || !inside[g.index(i2, j2)]) acc += L.weights[t];
      }
      b[k] = acc;
    }
    std::vector<double> x(nodes.size(), 1.0);
    CgResult cg = conjugate_gradient(A.as_map(), b, x, opts.cg);
    int cg_total = cg.iterations;

    const std::size_t origin = g.index(0, 0);
    std::size_t korigin = 0;
    std::vector<char> in_window(nodes.size(), 0);
    {
      std::vector<char> w(g.size(), 0);
      for (std::size_t idx : window) w[idx] = 1;
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (nodes[k] == origin) korigin = k;
        in_window[k] = w[nodes[k]];
      }
    }
    // phi decays like exp(-kappa R) towards the centre, so one CG solve leaves
    // an error of order eps * max phi there. The true residual is accurate on
    // the local scale; refining against it recovers the small interior values.
    std::vector<double> r(nodes.size()), delta(nodes.size());
    double last = std::numeric_limits<double>::infinity();
    for (int round = 0; round < opts.refinement_rounds; ++round) {
      A.apply(x, r);
      double rw = 0.0;
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        r[k] = b[k] - r[k];
        if (in_window[k]) rw = std::max(rw, std::abs(r[k]));
      }
      rw /= std::abs(x[korigin]);
      if (rw <= opts.refinement_tol || !(rw < 0.5 * last)) break;
      last = rw;
      std::fill(delta.begin(), delta.end(), 0.0);
      cg = conjugate_gradient(A.as_map(), r, delta, opts.cg);
      cg_total += cg.iterations;
      for (std::size_t k = 0; k < nodes.size(); ++k) x[k] += delta[k];
    }
    const double phi0 = x[korigin];
    if (!(phi0 > 0.0)) throw PositivityFailure("construct_phi: phi_R(0) <= 0 at R = " + std::to_string(R));
    const double c = 1.0 / phi0;

    Field phi(g, Farfield::constant(c));
    phi.fill(c);
    auto d = phi.deviations();
    double phi_min = c;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      d[nodes[k]] = x[k] * c;
      phi_min = std::min(phi_min, d[nodes[k]]);
    }
    d[origin] = 1.0;
    if (!(phi_min > 0.0))
      throw PositivityFailure("construct_phi: phi_R has a nonpositive value " + std::to_string(phi_min) + " at R = " +
                              std::to_string(R));

    Field Lphi = apply(L, phi);
    PhiStep step;
    step.R = R;
    step.lambda = eig.lambda;
    step.phi_min = phi_min;
    step.cg_iterations = cg_total;
    for (std::size_t idx : nodes) {
      const double r = std::abs(Lphi.value(idx) - potential.value(idx) * phi.value(idx));
      step.residual_ball = std::max(step.residual_ball, r);
    }
    for (std::size_t idx : window) {
      const double r = std::abs(Lphi.value(idx) - potential.value(idx) * phi.value(idx));
      step.residual_window = std::max(step.residual_window, r);
    }
    std::vector<double> now = phi.values();
    if (!prev.empty()) {
      double diff = 0.0, scale = 0.0;
      for (std::size_t idx : ball_nodes(g, 0.5 * prev_R)) {
        diff = std::max(diff, std::abs(now[idx] - prev[idx]));
        scale = std::max(scale, std::abs(prev[idx]));
      }
      step.change = diff / scale;
    }
    out.steps.push_back(step);
    out.phi = std::move(phi);
    out.residual_inf = step.residual_window;
    prev = std::move(now);
    prev_R = R;
  }
  out.converged = out.steps.size() >= 2 && out.steps.back().change >= 0.0 &&
                  out.steps.back().change < opts.convergence_tol;
  return out;
}

// ---------------------------------------------------------------- inequalities

double theta(double phi_x, double phi_y, double xi_x, double xi_y) {
  const double dphi = phi_x - phi_y;
  const double pp = phi_x * phi_y;
  return dphi * (xi_x * xi_x - xi_y * xi_y) * (phi_x + phi_y) / (2.0 * pp) -
         dphi * dphi * (xi_x * xi_x + xi_y * xi_y) / (2.0 * pp);
}

ThetaReport theta_inequality_check(const StencilOperator& L, const Field& phi, const Field& xi) {
  if (!(phi.grid() == xi.grid())) throw InvalidArgument("theta_inequality_check: grids differ");
  const Grid& g = phi.grid();
  for (std::size_t idx = 0; idx < g.size(); ++idx)
    if (!(phi.value(idx) > 0.0)) throw PositivityFailure("theta_inequality_check: phi is not positive");
  ThetaReport rep;
  rep.max_violation = -std::numeric_limits<double>::infinity();
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const int i = g.i_of(idx), j = g.j_of(idx);
    for (const Offset& o : L.half_offsets) {
      const int i2 = i + o.d1, j2 = j + o.d2;
      if (!g.contains(i2, j2)) continue;
      const std::size_t k = g.index(i2, j2);
      const double dx = xi.value(idx) - xi.value(k);
      const double v = theta(phi.value(idx), phi.value(k), xi.value(idx), xi.value(k)) - dx * dx;
      rep.max_violation = std::max(rep.max_violation, v);
      ++rep.samples;
    }
  }
  return rep;
}

ThetaReport theta_random_check(std::size_t pairs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> P(0.5, 2.0), X(-1.0, 1.0);
  ThetaReport rep;
  rep.max_violation = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < pairs; ++k) {
    const double px = P(rng), py = P(rng), xx = X(rng), xy = X(rng);
    const double d = xx - xy;
    rep.max_violation = std::max(rep.max_violation, theta(px, py, xx, xy) - d * d);
  }
  rep.samples = pairs;
  return rep;
}

Field wide_bump(const Grid& g, double R, Vec2 center) {
  Field f(g, Farfield::constant(0.0));
  auto d = f.deviations();
  const double r2 = R * R;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const Vec2 x = g.point(idx);
    const double q = ((x.x1 - center.x1) * (x.x1 - center.x1) + (x.x2 - center.x2) * (x.x2 - center.x2)) / r2;
    d[idx] = q < 1.0 ? (1.0 - q) * (1.0 - q) : 0.0;
  }
  return f;
}

StabilityMargin stability_inequality_check(const QuadraticForm& q, int trials, std::uint64_t seed) {
  if (trials <= 0) throw InvalidArgument("stability_inequality_check: trials must be positive");
  const Grid& g = q.grid();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0), Frac(0.2, 1.0);
  StabilityMargin out;
  out.worst = std::numeric_limits<double>::infinity();
  out.worst_normalized = std::numeric_limits<double>::infinity();
  std::vector<char> inside(g.size(), 0);
  for (std::size_t idx : q.nodes()) inside[idx] = 1;
  for (int t = 0; t < trials; ++t) {
    Field xi(g, Farfield::constant(0.0));
    if (t % 2 == 0) {
      auto d = xi.deviations();
      for (std::size_t idx : q.nodes()) d[idx] = U(rng);
    } else {
      // a bump of random width and centre, contained in the ball
      const double w = Frac(rng) * q.R();
      const double room = q.R() - w;
      const Vec2 c{room * U(rng) / std::sqrt(2.0), room * U(rng) / std::sqrt(2.0)};
      xi = wide_bump(g, w, c);
      auto d = xi.deviations();
      for (std::size_t idx = 0; idx < g.size(); ++idx)
        if (!inside[idx]) d[idx] = 0.0;
    }
    const double n2 = q.l2_squared(xi);
    if (!(n2 > 0.0)) continue;  // the zero field carries no information
    const double v = q(xi);
    out.worst = std::min(out.worst, v);
    out.worst_normalized = std::min(out.worst_normalized, v / n2);
    ++out.trials;
  }
  return out;
}

StabilityMargin stability_inequality_check(const QuadraticForm& q, const PositiveLinearization& phi, int trials,
                                           std::uint64_t seed) {
  for (std::size_t idx = 0; idx < phi.phi.grid().size(); ++idx)
    if (!(phi.phi.value(idx) > 0.0)) throw PositivityFailure("stability_inequality_check: phi is not positive");
  return stability_inequality_check(q, trials, seed);
}

}  // namespace nlab
