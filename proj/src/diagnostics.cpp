#include "nlab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nlab/errors.hpp"
#include "nlab/parallel.hpp"

namespace nlab {

std::vector<Vec2> center_lattice(int k, double extent) {
  if (k < 1) throw InvalidArgument("center_lattice: need at least one centre per axis");
  std::vector<Vec2> out;
  for (int b = 0; b < k; ++b)
    for (int a = 0; a < k; ++a) {
      const double x = k == 1 ? 0.0 : -extent + 2.0 * extent * a / (k - 1);
      const double y = k == 1 ? 0.0 : -extent + 2.0 * extent * b / (k - 1);
      out.push_back({x, y});
    }
  return out;
}

HarnackReport harnack_probe(const Field& phi, const std::vector<Vec2>& centers) {
  const Grid& g = phi.grid();
  for (std::size_t k = 0; k < g.size(); ++k)
    if (!(phi.value(k) > 0.0)) throw PositivityFailure("harnack_probe: phi is not positive");
  HarnackReport rep;
  rep.centers = centers;
  const double edge = g.m * g.h;
  for (const Vec2& c : centers) {
    if (std::abs(c.x1) + 1.0 > edge + 1e-12 || std::abs(c.x2) + 1.0 > edge + 1e-12)
      throw InvalidArgument("harnack_probe: B_1 around a centre leaves the square");
    double hi = 0.0, lo = std::numeric_limits<double>::infinity();
    const int i0 = static_cast<int>(std::floor((c.x1 - 1.0) / g.h)), i1 = static_cast<int>(std::ceil((c.x1 + 1.0) / g.h));
    const int j0 = static_cast<int>(std::floor((c.x2 - 1.0) / g.h)), j1 = static_cast<int>(std::ceil((c.x2 + 1.0) / g.h));
    for (int j = std::max(j0, -g.m); j <= std::min(j1, g.m); ++j)
      for (int i = std::max(i0, -g.m); i <= std::min(i1, g.m); ++i) {
        const Vec2 x = g.point(i, j);
        if (std::hypot(x.x1 - c.x1, x.x2 - c.x2) > 1.0) continue;
        const double v = phi.value(i, j);
        hi = std::max(hi, v);
        lo = std::min(lo, v);
      }
    rep.ratios.push_back(hi / lo);
    rep.maxratio = std::max(rep.maxratio, hi / lo);
  }
  rep.blowup = rep.maxratio > 1e3;
  return rep;
}

HolderReport holder_probe(const Field& w, const std::vector<double>& alphas) {
  const Grid& g = w.grid();
  std::vector<std::size_t> nodes = ball_nodes(g, 0.5);
  struct Pair {
    double dw, r;
  };
  std::vector<Pair> pairs;
  for (std::size_t a = 0; a < nodes.size(); ++a)
    for (std::size_t b = a + 1; b < nodes.size(); ++b) {
      const Vec2 x = g.point(nodes[a]), y = g.point(nodes[b]);
      const double r = std::hypot(x.x1 - y.x1, x.x2 - y.x2);
      if (r < 2.0 * g.h - 1e-12 || r > 0.5 + 1e-12) continue;
      pairs.push_back({std::abs(w.value(nodes[a]) - w.value(nodes[b])), r});
    }
  HolderReport rep;
  rep.alphas = alphas;
  rep.pairs = pairs.size();
  rep.best_alpha = 0.0;
  std::vector<double> q(pairs.size());
  for (double alpha : alphas) {
    double sup = 0.0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      q[k] = pairs[k].dw / std::pow(pairs[k].r, alpha);
      sup = std::max(sup, q[k]);
    }
    double med = 0.0;
    if (!q.empty()) {
      std::vector<double> tmp = q;
      std::nth_element(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(tmp.size() / 2), tmp.end());
      med = tmp[tmp.size() / 2];
    }
    rep.seminorms.push_back(sup);
    rep.medians.push_back(med);
    if (sup <= 10.0 * med && alpha >= rep.best_alpha) {
      rep.best_alpha = alpha;
      rep.best_seminorm = sup;
    }
  }
  return rep;
}

LogLemmaReport loglemma_probe(const StencilOperator& L, const Field& u, double d, const std::vector<double>& radii,
                              double s) {
  if (!(d > 0.0)) throw InvalidArgument("loglemma_probe: d must be positive");
  if (!(s > 0.0 && s < 1.0)) throw InvalidArgument("loglemma_probe: s must lie in (0,1)");
  const Grid& g = u.grid();
  const std::vector<double> vals = u.values();
  for (double v : vals)
    if (v < 0.0) throw InvalidArgument("loglemma_probe: u takes negative values");
  LogLemmaReport rep;
  rep.d = d;
  rep.s = s;
  rep.radii = radii;
  std::vector<double> logs(vals.size());
  for (std::size_t k = 0; k < vals.size(); ++k) logs[k] = std::log(d + vals[k]);
  for (double r : radii) {
    if (!(r > 0.0) || r > g.S - 1.0 + 1e-12) throw InvalidArgument("loglemma_probe: radius outside (0, S - 1]");
    std::vector<char> in(g.size(), 0);
    for (std::size_t k : ball_nodes(g, r)) in[k] = 1;
    const double sum = ordered_sum(g.size(), [&](std::size_t x) {
      if (!in[x]) return 0.0;
      const int i = g.i_of(x), j = g.j_of(x);
      double acc = 0.0;
      for (std::size_t q = 0; q < L.offsets.size(); ++q) {
        const int i2 = i + L.offsets[q].d1, j2 = j + L.offsets[q].d2;
        if (!g.contains(i2, j2)) continue;
        const std::size_t z = g.index(i2, j2);
        if (!in[z]) continue;
        const double l = logs[x] - logs[z];
        acc += L.weights[q] * l * l;
      }
      return acc;
    });
    const double I = sum * g.h * g.h;
    rep.integrals.push_back(I);
    rep.constants.push_back(I / std::pow(r, 2.0 - 2.0 * s));
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (!(rep.integrals[k] > 1e-14)) continue;
    const double x = std::log(radii[k]), y = std::log(rep.integrals[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++rep.fitted;
  }
  if (rep.fitted >= 2) {
    const double n = rep.fitted;
    rep.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return rep;
}

}  // namespace nlab
