#include <doctest.h>

#include <cmath>
#include <random>

#include "nlab/diagnostics.hpp"
#include "nlab/errors.hpp"
#include "oracles.hpp"

using namespace nlab;

TEST_SUITE("diagnostics") {
  TEST_CASE("centre lattice") {
    const auto c = center_lattice(3, 2.0);
    REQUIRE(c.size() == 9);
    CHECK(c[0].x1 == -2.0);
    CHECK(c[0].x2 == -2.0);
    CHECK(c[4].x1 == 0.0);
    CHECK(c[8].x2 == 2.0);
    CHECK(center_lattice(1, 5.0)[0].x1 == 0.0);
    CHECK_THROWS_AS(center_lattice(0, 1.0), InvalidArgument);
  }

  TEST_CASE("harnack ratios") {
    const Grid g = Grid::make(0.1, 5.0);
    const auto centers = center_lattice(3, 2.0);
    const HarnackReport one = harnack_probe(Field::constant(g, 3.0), centers);
    for (double r : one.ratios) CHECK(r == 1.0);
    CHECK_FALSE(one.blowup);

    auto f = [](Vec2 x) { return 2.0 + std::sin(x.x1); };
    const Field phi = Field::from_function(g, f);
    const HarnackReport r = harnack_probe(phi, centers);
    CHECK(r.maxratio <= 3.0);
    CHECK(r.maxratio > 1.0);
    // a unit ball spans two units in x1, so sin changes by at most 2 sin(1)
    CHECK(r.maxratio <= (2.0 + std::sin(1.0)) / (2.0 - std::sin(1.0)) + 1e-12);

    Field scaled = phi;
    for (std::size_t k = 0; k < g.size(); ++k) scaled.set_value(k, 7.5 * phi.value(k));
    const HarnackReport s = harnack_probe(scaled, centers);
    for (std::size_t k = 0; k < r.ratios.size(); ++k) CHECK(s.ratios[k] == doctest::Approx(r.ratios[k]).epsilon(1e-14));

    CHECK_THROWS_AS(harnack_probe(phi, center_lattice(2, 4.5)), InvalidArgument);
    Field bad = phi;
    bad.set_value(0, -1.0);
    CHECK_THROWS_AS(harnack_probe(bad, centers), PositivityFailure);
  }

  TEST_CASE("holder exponent") {
    const Grid g = Grid::make(0.02, 2.0);
    auto lip = [](Vec2 x) { return std::abs(x.x1); };
    const HolderReport a = holder_probe(Field::from_function(g, lip));
    CHECK(a.pairs > 0);
    CHECK(a.best_alpha == doctest::Approx(1.0));
    CHECK(a.best_seminorm <= 1.0 + 1e-12);

    auto sq = [](Vec2 x) { return std::sqrt(std::abs(x.x1)); };
    const HolderReport b = holder_probe(Field::from_function(g, sq));
    // |sqrt a - sqrt b| <= sqrt |a - b|, and the pair (0, 2h) gives sqrt(2h) / 2h at alpha = 1
    CHECK(b.alphas[4] == 0.5);
    CHECK(b.seminorms[4] <= 1.0 + 1e-12);
    CHECK(b.seminorms[9] >= 1.0 / std::sqrt(2.0 * g.h) - 1e-9);
  }

  TEST_CASE("log lemma against all pairs") {
    const Grid g = Grid::make(0.25, 4.0);
    const StencilOperator L = build_stencil(Kernel::fractional(0.5), g);
    std::mt19937_64 rng(13);
    const auto v = oracle::random_block(g, g.m, rng, 0.0, 3.0);
    const Field u = Field::from_values(g, v);
    const double d = 0.4;
    const LogLemmaReport rep = loglemma_probe(L, u, d, {1.0, 2.0, 3.0}, 0.5);
    for (std::size_t k = 0; k < rep.radii.size(); ++k) {
      const double r = rep.radii[k];
      const double ref = oracle::all_pairs(L, g, [&](std::size_t x, std::size_t z) {
        const Vec2 a = g.point(x), b = g.point(z);
        if (std::hypot(a.x1, a.x2) >= r || std::hypot(b.x1, b.x2) >= r) return 0.0;
        const double l = std::log((d + v[x]) / (d + v[z]));
        return l * l;
      });
      CHECK(rep.integrals[k] == doctest::Approx(ref).epsilon(1e-12));
      CHECK(rep.constants[k] == doctest::Approx(ref / r).epsilon(1e-12));
    }
    CHECK(rep.fitted == 3);
  }

  TEST_CASE("log lemma: constants, scaling and bad input") {
    const Grid g = Grid::make(0.25, 4.0);
    const StencilOperator L = build_stencil(Kernel::fractional(0.5), g);
    const LogLemmaReport c = loglemma_probe(L, Field::constant(g, 2.0), 1.0, {1.0, 2.0}, 0.5);
    for (double x : c.integrals) CHECK(x == 0.0);
    CHECK(c.fitted == 0);
    CHECK(c.slope == 0.0);

    auto f = [](Vec2 x) { return 1.0 + std::tanh(x.x1 - 0.3 * x.x2); };
    const Field u = Field::from_function(g, f);
    Field u5 = u;
    for (std::size_t k = 0; k < g.size(); ++k) u5.set_value(k, 5.0 * u.value(k));
    const LogLemmaReport a = loglemma_probe(L, u, 0.2, {1.0, 2.0, 3.0}, 0.5);
    const LogLemmaReport b = loglemma_probe(L, u5, 1.0, {1.0, 2.0, 3.0}, 0.5);
    for (std::size_t k = 0; k < 3; ++k) CHECK(b.integrals[k] == doctest::Approx(a.integrals[k]).epsilon(1e-12));
    CHECK(b.slope == doctest::Approx(a.slope).epsilon(1e-10));
    // the input is not modified
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(u.value(k) == f(g.point(k)));

    Field neg = u;
    neg.set_value(3, -0.1);
    CHECK_THROWS_AS(loglemma_probe(L, neg, 1.0, {1.0}, 0.5), InvalidArgument);
    CHECK_THROWS_AS(loglemma_probe(L, u, 0.0, {1.0}, 0.5), InvalidArgument);
    CHECK_THROWS_AS(loglemma_probe(L, u, -1.0, {1.0}, 0.5), InvalidArgument);
    CHECK_THROWS_AS(loglemma_probe(L, u, 1.0, {3.5}, 0.5), InvalidArgument);
  }
}
