#include "nlab/liouville.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "nlab/errors.hpp"
#include "nlab/parallel.hpp"

namespace nlab {

namespace {

// ordered pairs (x, x + o) inside the square, full offset set
template <class Term>
double pairs(const StencilOperator& L, const Grid& g, Term&& term) {
  const double h2 = g.h * g.h;
  const double s = ordered_sum(g.size(), [&](std::size_t x) {
    const int i = g.i_of(x), j = g.j_of(x);
    double acc = 0.0;
    for (std::size_t q = 0; q < L.offsets.size(); ++q) {
      const int i2 = i + L.offsets[q].d1, j2 = j + L.offsets[q].d2;
      if (!g.contains(i2, j2)) continue;
      acc += L.weights[q] * term(x, g.index(i2, j2));
    }
    return acc;
  });
  // weight(o) already integrates K over a cell (about K(x - z) h^2), so only
  // the outer sum needs its h^2
  return s * h2;
}

void check_same_grid(const Field& a, const Field& b, const char* what) {
  if (!(a.grid() == b.grid())) throw InvalidArgument(std::string(what) + ": fields live on different grids");
}

}  // namespace

double pair_sum(const StencilOperator& L, const Grid& g, const std::function<double(std::size_t, std::size_t)>& term) {
  return pairs(L, g, term);
}

Field centered_derivative(const Field& u, int axis) {
  if (axis != 1 && axis != 2) throw InvalidArgument("axis must be 1 or 2");
  const Grid& g = u.grid();
  Field d(g);
  auto out = d.deviations();
  const int di = axis == 1 ? 1 : 0, dj = axis == 2 ? 1 : 0;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const int i = g.i_of(idx), j = g.j_of(idx);
    out[idx] = difference(u.split(i + di, j + dj), u.split(i - di, j - dj)) / (2.0 * g.h);
  }
  return d;
}

SigmaField build_sigma(const Field& u, const Field& phi, int axis) {
  check_same_grid(u, phi, "build_sigma");
  const Grid& g = u.grid();
  for (std::size_t idx = 0; idx < g.size(); ++idx)
    if (!(phi.value(idx) > 0.0))
      throw PositivityFailure("build_sigma: phi <= 0 at node (" + std::to_string(g.i_of(idx)) + ", " +
                              std::to_string(g.j_of(idx)) + ")");
  SigmaField s{centered_derivative(u, axis), phi, u, axis, "centered"};
  auto d = s.sigma.deviations();
  for (std::size_t idx = 0; idx < g.size(); ++idx) d[idx] /= phi.value(idx);
  return s;
}

Field cutoff_ramp(double R, const Grid& g) {
  if (!(R > 0.0)) throw InvalidArgument("cutoff_ramp: R must be positive");
  if (2.0 * R > g.S - 1.0 + 1e-12)
    throw InvalidArgument("cutoff_ramp: 2R = " + std::to_string(2.0 * R) + " exceeds S - 1 = " + std::to_string(g.S - 1.0));
  Field eta(g, Farfield::constant(0.0));
  auto d = eta.deviations();
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const Vec2 x = g.point(idx);
    d[idx] = std::clamp(2.0 - std::hypot(x.x1, x.x2) / R, 0.0, 1.0);
  }
  return eta;
}

namespace {

struct Arrays {
  std::vector<double> s, p, e;
};

Arrays arrays(const SigmaField& sf, const Field* eta) {
  Arrays a{sf.sigma.values(), sf.phi.values(), {}};
  if (eta) {
    check_same_grid(sf.sigma, *eta, "liouville");
    a.e = eta->values();
  }
  return a;
}

}  // namespace

Step1Result step1_residual(const StencilOperator& L, const SigmaField& sf, const Field& eta) {
  const Arrays a = arrays(sf, &eta);
  const Grid& g = sf.sigma.grid();
  Step1Result r;
  r.signed_value = pairs(L, g, [&](std::size_t x, std::size_t z) {
    return a.e[x] * a.e[x] * a.s[x] * (a.s[x] - a.s[z]) * a.p[x] * a.p[z];
  });
  r.scale = pairs(L, g, [&](std::size_t x, std::size_t z) {
    return a.e[x] * a.e[x] * std::abs(a.s[x]) * std::abs(a.s[x] - a.s[z]) * a.p[x] * a.p[z];
  });
  r.value = std::abs(r.signed_value);
  return r;
}

double keybound_quantity(const StencilOperator& L, const SigmaField& sf, double R) {
  const Field eta = cutoff_ramp(R, sf.sigma.grid());
  const Arrays a = arrays(sf, &eta);
  return pairs(L, sf.sigma.grid(), [&](std::size_t x, std::size_t z) {
    const double sp = a.s[x] + a.s[z], de = a.e[x] - a.e[z];
    return sp * sp * de * de * a.p[x] * a.p[z];
  });
}

AustResult aust_identity_check(const StencilOperator& L, const SigmaField& sf, const Field& eta) {
  const Arrays a = arrays(sf, &eta);
  const Grid& g = sf.sigma.grid();
  AustResult r;
  r.lhs = pairs(L, g, [&](std::size_t x, std::size_t z) {
    const double ds = a.s[x] - a.s[z];
    return ds * ds * (a.e[x] * a.e[x] + a.e[z] * a.e[z]) * a.p[x] * a.p[z];
  });
  r.rhs = -pairs(L, g, [&](std::size_t x, std::size_t z) {
    return (a.s[x] * a.s[x] - a.s[z] * a.s[z]) * (a.e[x] * a.e[x] - a.e[z] * a.e[z]) * a.p[x] * a.p[z];
  });
  r.step1 = step1_residual(L, sf, eta).signed_value;
  r.identity_gap = std::abs(r.lhs - r.rhs - 4.0 * r.step1) / std::max({1.0, std::abs(r.lhs), std::abs(r.rhs)});
  // 2 (eta^2(x) sigma(x) - eta^2(z) sigma(z))
  //   = (eta^2(x) + eta^2(z)) (sigma(x) - sigma(z)) + (eta^2(x) - eta^2(z)) (sigma(x) + sigma(z))
  double worst = 0.0;
  for (std::size_t x = 0; x < g.size(); ++x) {
    const int i = g.i_of(x), j = g.j_of(x);
    for (const Offset& o : L.offsets) {
      if (!g.contains(i + o.d1, j + o.d2)) continue;
      const std::size_t z = g.index(i + o.d1, j + o.d2);
      const double ex = a.e[x] * a.e[x], ez = a.e[z] * a.e[z];
      const double left = 2.0 * (ex * a.s[x] - ez * a.s[z]);
      const double right = (ex + ez) * (a.s[x] - a.s[z]) + (ex - ez) * (a.s[x] + a.s[z]);
      const double scale = std::max({1.0, std::abs(left), std::abs(right)});
      worst = std::max(worst, std::abs(left - right) / scale);
    }
  }
  r.pointwise_gap = worst;
  return r;
}

std::vector<ClosureRow> cauchy_schwarz_closure(const StencilOperator& L, const SigmaField& sf,
                                               const std::vector<double>& radii) {
  std::vector<ClosureRow> out;
  const Grid& g = sf.sigma.grid();
  for (double R : radii) {
    const Field eta = cutoff_ramp(R, g);
    const AustResult au = aust_identity_check(L, sf, eta);
    const Arrays a = arrays(sf, &eta);
    ClosureRow row;
    row.R = R;
    row.I = au.lhs;
    row.rhs = au.rhs;
    row.crossterm = pairs(L, g, [&](std::size_t x, std::size_t z) {
      if (a.e[x] == a.e[z]) return 0.0;
      const double ds = a.s[x] - a.s[z];
      return ds * ds * (a.e[x] * a.e[x] + a.e[z] * a.e[z]) * a.p[x] * a.p[z];
    });
    row.keybound = keybound_quantity(L, sf, R);
    row.holds = row.rhs * row.rhs <= 2.0 * row.crossterm * row.keybound * (1.0 + 1e-12) + 1e-12;
    out.push_back(row);
  }
  return out;
}

double sigma_energy(const StencilOperator& L, const SigmaField& sf, const std::vector<char>& mask) {
  const Arrays a = arrays(sf, nullptr);
  return pairs(L, sf.sigma.grid(), [&](std::size_t x, std::size_t z) {
    if (!mask.empty() && !(mask[x] && mask[z])) return 0.0;
    const double ds = a.s[x] - a.s[z];
    return ds * ds * a.p[x] * a.p[z];
  });
}

Field interaction_I(const StencilOperator& L, const Field& phi, const Field& sigma) {
  check_same_grid(phi, sigma, "interaction_I");
  const Grid& g = phi.grid();
  Field out(g);
  auto d = out.deviations();
  parallel_chunks(g.size(), [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t x = b; x < e; ++x) {
      const int i = g.i_of(x), j = g.j_of(x);
      const Split px = phi.split(i, j), sx = sigma.split(i, j);
      double acc = 0.0;
      for (std::size_t q = 0; q < L.offsets.size(); ++q) {
        const int i2 = i + L.offsets[q].d1, j2 = j + L.offsets[q].d2;
        acc += L.weights[q] * difference(px, phi.split(i2, j2)) * difference(sx, sigma.split(i2, j2));
      }
      d[x] = acc;
    }
  });
  return out;
}

double product_rule_residual(const StencilOperator& L, const Field& sigma, const Field& phi) {
  check_same_grid(sigma, phi, "product_rule_residual");
  const Grid& g = sigma.grid();
  const double h = g.h;
  Field prod = Field::from_values(g, [&] {
    std::vector<double> v(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) v[k] = sigma.value(k) * phi.value(k);
    return v;
  }(), Farfield::analytic([&sigma, &phi, h](Vec2 x) {
    const int i = static_cast<int>(std::lround(x.x1 / h)), j = static_cast<int>(std::lround(x.x2 / h));
    return sigma.value(i, j) * phi.value(i, j);
  }));
  const Field Lp = apply(L, prod), Ls = apply(L, sigma), Lf = apply(L, phi);
  const Field I = interaction_I(L, phi, sigma);
  double worst = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double a = Lp.value(k), b = sigma.value(k) * Lf.value(k), c = phi.value(k) * Ls.value(k), d = I.value(k);
    worst = std::max(worst, std::abs(a - b - c + d));
    scale = std::max({scale, std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
  }
  return scale > 0.0 ? worst / scale : worst;
}

SymmetryVerdict symmetry_verdict(const StencilOperator& L, const Field& u, const Field& phi, const VerdictOptions& opts) {
  check_same_grid(u, phi, "symmetry_verdict");
  const Grid& g = u.grid();
  const SigmaField s1 = build_sigma(u, phi, 1);
  const SigmaField s2 = build_sigma(u, phi, 2);
  SymmetryVerdict v;

  double pmax = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) pmax = std::max(pmax, phi.value(k));
  std::vector<char> mask(g.size(), 0);
  std::size_t kept = 0;
  double wsum = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double p = phi.value(k);
    if (p < opts.phi_floor * pmax) continue;
    mask[k] = 1;
    ++kept;
    wsum += p;
    m1 += p * s1.sigma.value(k);
    m2 += p * s2.sigma.value(k);
  }
  v.excluded_fraction = 1.0 - static_cast<double>(kept) / static_cast<double>(g.size());
  v.c1 = m1 / wsum;
  v.c2 = m2 / wsum;
  const double cn = std::hypot(v.c1, v.c2);

  const std::vector<double> vals = u.values();
  if (cn > 1e-12) {
    v.direction_determined = true;
    v.direction = {v.c1 / cn, v.c2 / cn};
    // best 1D fit: mean of u over bins of width h/4 along the direction
    const double bw = 0.25 * g.h;
    std::map<long long, std::pair<double, std::size_t>> bins;
    std::vector<long long> key(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
      key[k] = static_cast<long long>(std::floor(dot(g.point(k), v.direction) / bw + 0.5));
      auto& b = bins[key[k]];
      b.first += vals[k];
      b.second += 1;
    }
    for (std::size_t k = 0; k < g.size(); ++k) {
      const auto& b = bins[key[k]];
      v.oned_deviation = std::max(v.oned_deviation, std::abs(vals[k] - b.first / static_cast<double>(b.second)));
    }
  } else {
    double mean = 0.0;
    for (double x : vals) mean += x;
    mean /= static_cast<double>(vals.size());
    for (double x : vals) v.oned_deviation = std::max(v.oned_deviation, std::abs(x - mean));
  }
  v.energy1 = sigma_energy(L, s1, mask);
  v.energy2 = sigma_energy(L, s2, mask);
  v.is_1d = v.oned_deviation <= opts.deviation_tol && v.energy1 <= opts.energy_tol && v.energy2 <= opts.energy_tol;
  return v;
}

}  // namespace nlab
