#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "nlab/errors.hpp"
#include "nlab/liouville.hpp"
#include "nlab/semilinear.hpp"
#include "nlab/stability.hpp"
#include "oracles.hpp"

using namespace nlab;
using std::numbers::pi;

namespace {

struct Random {
  Grid g;
  StencilOperator L;
  SigmaField s;
};

// random sigma in [-1, 1] and phi in [0.5, 2] on the whole square
Random random_case(std::uint64_t seed, const Kernel& k = Kernel::indicator()) {
  const Grid g = Grid::make(0.25, 5.0);
  std::mt19937_64 rng(seed);
  const Field sigma = Field::from_values(g, oracle::random_block(g, g.m, rng), Farfield::constant(0.0));
  const Field phi = Field::from_values(g, oracle::random_block(g, g.m, rng, 0.5, 2.0), Farfield::constant(1.0));
  return {g, build_stencil(k, g), SigmaField{sigma, phi, Field::constant(g, 0.0), 2, "centered"}};
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

}  // namespace

TEST_SUITE("liouville") {
  TEST_CASE("centred derivative and sigma") {
    const Grid g = Grid::make(0.25, 3.0);
    auto lin = [](Vec2 x) { return 0.5 * x.x1 - 2.0 * x.x2; };
    const Field u = Field::from_function(g, lin, Farfield::analytic(lin));
    for (double v : centered_derivative(u, 1).values()) CHECK(v == doctest::Approx(0.5).epsilon(1e-13));
    for (double v : centered_derivative(u, 2).values()) CHECK(v == doctest::Approx(-2.0).epsilon(1e-13));
    CHECK_THROWS_AS(centered_derivative(u, 3), InvalidArgument);

    const Field phi = Field::constant(g, 2.0);
    const SigmaField s = build_sigma(u, phi, 2);
    for (double v : s.sigma.values()) CHECK(v == doctest::Approx(-1.0).epsilon(1e-13));
    Field bad = phi;
    bad.set_value(g.index(3, -1), 0.0);
    CHECK_THROWS_AS(build_sigma(u, bad, 2), PositivityFailure);
  }

  TEST_CASE("sigma of a layer is one when phi is its derivative") {
    const Grid g = Grid::make(0.1, 5.0);
    const StencilOperator L = build_stencil(Kernel::indicator(), g);
    const LayerResult lr = solve_layer_1d(marginal_stencil(L, 2), Nonlinearity::allen_cahn(), Grid1D::make(0.1, 20.0));
    const Field u = extend_to_2d(std::make_shared<const Profile>(lr.profile), {0.0, 1.0}, g);
    const SigmaField s = build_sigma(u, centered_derivative(u, 2), 2);
    for (double v : s.sigma.values()) CHECK(std::abs(v - 1.0) <= 1e-12);
  }

  TEST_CASE("cutoff ramp") {
    const Grid g = Grid::make(0.25, 5.0);
    const Field eta = cutoff_ramp(2.0, g);
    CHECK(eta.value(0, 0) == 1.0);
    CHECK(eta.value(8, 0) == 1.0);   // |x| = R
    CHECK(eta.value(12, 0) == 0.5);  // |x| = 1.5 R
    CHECK(eta.value(0, -16) == 0.0);
    CHECK(eta.value(20, 20) == 0.0);
    CHECK(eta.value(10, 0) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK_THROWS_AS(cutoff_ramp(2.25, g), InvalidArgument);
    CHECK_THROWS_AS(cutoff_ramp(0.0, g), InvalidArgument);
  }

  TEST_CASE("step one vanishes for constant sigma") {
    Random r = random_case(4);
    r.s.sigma = Field::constant(r.g, 0.7);
    const Step1Result s1 = step1_residual(r.L, r.s, cutoff_ramp(1.5, r.g));
    CHECK(s1.signed_value == 0.0);
    CHECK(s1.value == 0.0);
    CHECK(keybound_quantity(r.L, r.s, 1.5) > 0.0);
  }

  TEST_CASE("pair sums against all pairs") {
    for (const Kernel& k : {Kernel::indicator(), Kernel::fractional(0.5)}) {
      Random r = random_case(21, k);
      const Field eta = cutoff_ramp(2.0, r.g);
      const auto s = r.s.sigma.values(), p = r.s.phi.values(), e = eta.values();

      const double step1 = oracle::all_pairs(r.L, r.g, [&](std::size_t x, std::size_t z) {
        return e[x] * e[x] * s[x] * (s[x] - s[z]) * p[x] * p[z];
      });
      const double lhs = oracle::all_pairs(r.L, r.g, [&](std::size_t x, std::size_t z) {
        return (s[x] - s[z]) * (s[x] - s[z]) * (e[x] * e[x] + e[z] * e[z]) * p[x] * p[z];
      });
      const double rhs = -oracle::all_pairs(r.L, r.g, [&](std::size_t x, std::size_t z) {
        return (s[x] * s[x] - s[z] * s[z]) * (e[x] * e[x] - e[z] * e[z]) * p[x] * p[z];
      });
      const double key = oracle::all_pairs(r.L, r.g, [&](std::size_t x, std::size_t z) {
        return (s[x] + s[z]) * (s[x] + s[z]) * (e[x] - e[z]) * (e[x] - e[z]) * p[x] * p[z];
      });
      const double energy = oracle::all_pairs(r.L, r.g, [&](std::size_t x, std::size_t z) {
        return (s[x] - s[z]) * (s[x] - s[z]) * p[x] * p[z];
      });

      CHECK(rel(step1_residual(r.L, r.s, eta).signed_value, step1) <= 1e-12);
      const AustResult a = aust_identity_check(r.L, r.s, eta);
      CHECK(rel(a.lhs, lhs) <= 1e-12);
      CHECK(rel(a.rhs, rhs) <= 1e-12);
      CHECK(rel(a.step1, step1) <= 1e-12);
      CHECK(a.identity_gap <= 1e-12);
      CHECK(a.pointwise_gap <= 1e-14);
      // the symmetrization identity on the oracle values themselves
      CHECK(rel(lhs - rhs, 4.0 * step1) <= 1e-12);
      CHECK(rel(keybound_quantity(r.L, r.s, 2.0), key) <= 1e-12);
      CHECK(rel(sigma_energy(r.L, r.s), energy) <= 1e-12);
      CHECK(rel(pair_sum(r.L, r.g, [&](std::size_t x, std::size_t z) { return s[x] * p[z]; }),
                oracle::all_pairs(r.L, r.g, [&](std::size_t x, std::size_t z) { return s[x] * p[z]; })) <= 1e-12);
    }
  }

  TEST_CASE("masked sigma energy") {
    Random r = random_case(5);
    std::vector<char> mask(r.g.size(), 0);
    for (std::size_t k = 0; k < r.g.size(); ++k) mask[k] = r.g.j_of(k) > 0;
    const auto s = r.s.sigma.values(), p = r.s.phi.values();
    const double ref = oracle::all_pairs(r.L, r.g, [&](std::size_t x, std::size_t z) {
      return mask[x] && mask[z] ? (s[x] - s[z]) * (s[x] - s[z]) * p[x] * p[z] : 0.0;
    });
    CHECK(rel(sigma_energy(r.L, r.s, mask), ref) <= 1e-12);
  }

  TEST_CASE("closure holds on arbitrary data") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const Random r = random_case(seed);
      const auto rows = cauchy_schwarz_closure(r.L, r.s, {1.0, 1.5, 2.0});
      REQUIRE(rows.size() == 3);
      for (const ClosureRow& row : rows) {
        CHECK(row.holds);
        CHECK(row.crossterm <= row.I + 1e-12);
        CHECK(row.keybound >= 0.0);
        CHECK(row.rhs * row.rhs <= 2.0 * row.crossterm * row.keybound * (1.0 + 1e-12));
      }
    }
  }

  TEST_CASE("keybound for constant data approaches its continuum value") {
    // as R grows, 4 int |grad eta|^2 dx int (y . e)^2 K dy = 4 (3 pi) (M2 / 2); the
    // kinks of the ramp at R and 2R add a relative error of order 1 / R
    const Grid g = Grid::make(0.05, 9.0);
    const StencilOperator L = build_stencil(Kernel::indicator(), g);
    const SigmaField s{Field::constant(g, 1.0), Field::constant(g, 1.0), Field::constant(g, 0.0), 2, "centered"};
    const double cont = 4.0 * 3.0 * pi * (pi / 4.0);
    double prev = 1.0;
    for (double R : {1.0, 2.0, 4.0}) {
      const double err = std::abs(keybound_quantity(L, s, R) - cont) / cont;
      MESSAGE("R = " << R << " relative gap " << err);
      CHECK(err < prev);
      CHECK(err * R <= 0.3);
      prev = err;
    }
  }

  TEST_CASE("product rule") {
    const Grid g = Grid::make(0.125, 3.0);
    for (const Kernel& k : {Kernel::indicator(), Kernel::fractional(0.5)}) {
      const StencilOperator L = build_stencil(k, g);
      auto fs = [](Vec2 x) { return std::sin(x.x1 + 0.3 * x.x2); };
      auto fp = [](Vec2 x) { return 1.5 + std::cos(0.4 * x.x1) * std::exp(-0.1 * x.x2 * x.x2); };
      const Field sigma = Field::from_function(g, fs, Farfield::analytic(fs));
      const Field phi = Field::from_function(g, fp, Farfield::analytic(fp));
      CHECK(product_rule_residual(L, sigma, phi) <= 1e-12);

      const Field I = interaction_I(L, phi, sigma);
      double worst = 0.0;
      for (std::size_t x = 0; x < g.size(); ++x) {
        const int i = g.i_of(x), j = g.j_of(x);
        double acc = 0.0;
        for (std::size_t q = 0; q < L.offsets.size(); ++q) {
          const Vec2 a = g.point(i, j), b = g.point(i + L.offsets[q].d1, j + L.offsets[q].d2);
          acc += L.weights[q] * (fp(a) - fp(b)) * (fs(a) - fs(b));
        }
        worst = std::max(worst, std::abs(acc - I.value(x)));
      }
      CHECK(worst <= 1e-12);
    }
  }

  TEST_CASE("verdicts") {
    const Grid g = Grid::make(0.1, 5.0);
    const StencilOperator L = build_stencil(Kernel::indicator(), g);
    const LayerResult lr = solve_layer_1d(marginal_stencil(L, 1), Nonlinearity::allen_cahn(), Grid1D::make(0.1, 20.0));
    const Field u = extend_to_2d(std::make_shared<const Profile>(lr.profile), {1.0, 0.0}, g);
    const SymmetryVerdict v = symmetry_verdict(L, u, centered_derivative(u, 1));
    CHECK(v.is_1d);
    CHECK(v.direction_determined);
    CHECK(v.direction.x1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(v.direction.x2) <= 1e-12);
    CHECK(v.oned_deviation <= 1e-12);
    CHECK(v.excluded_fraction == 0.0);

    const SymmetryVerdict c = symmetry_verdict(L, Field::constant(g, 1.0), Field::constant(g, 1.0));
    CHECK_FALSE(c.direction_determined);
    CHECK(c.oned_deviation == 0.0);
    CHECK(c.is_1d);

    auto saddle = [&](Vec2 x) { return x.x1 * x.x2 / (g.S * g.S); };
    const Field sd = Field::from_function(g, saddle, Farfield::analytic(saddle));
    const SymmetryVerdict n = symmetry_verdict(L, sd, Field::constant(g, 1.0));
    CHECK_FALSE(n.is_1d);
    CHECK(n.oned_deviation > 0.1);
    CHECK(n.energy1 > 1e-8);
  }
}
