#include <gtest/gtest.h>

#include "cyclodiff/constants.hpp"

using namespace cyclodiff;

namespace {

struct Fixture {
  Tower t;
  Differentials d;
  ConstantsReport r;
  Fixture(unsigned p, int L, int samples) : t(TowerParams::for_prime(p, L)), d(t), r(estimate_constants(t, d, 7, samples)) {}
};

const Fixture& p3() {
  static Fixture f(3, 4, 20);
  return f;
}

const Fixture& p2() {
  static Fixture f(2, 3, 20);
  return f;
}

}  // namespace

TEST(Constants, DifferentDriftVanishesAtThree) {
  const auto& r = p3().r;
  EXPECT_EQ(r.a, Rational(0));
  EXPECT_EQ(r.b, Rational(0));
  for (int n = 0; n <= 4; ++n) {
    EXPECT_EQ(r.different_k0[n], Rational(n));
    EXPECT_EQ(r.different_qp[n], Rational(n + 1) - Rational(1, 2));
  }
}

TEST(Constants, NormWitnessIsRhoOne) {
  const auto& r = p3().r;
  EXPECT_EQ(r.c_norm, Rational(2, 3));
  EXPECT_EQ(r.c_norm_witness.n, 0);
  EXPECT_EQ(r.c_norm_witness.k, 1);
  EXPECT_EQ(r.c_norm_witness.witness, "rho^1");
  EXPECT_EQ(r.norm_cells.size(), 10u);
  for (const auto& c : r.norm_cells) EXPECT_GT(c.value, Rational(0));
  EXPECT_EQ(r.m_c, 0);
}

TEST(Constants, NormCellMatchesDirectComputation) {
  const auto& f = p3();
  const Tower& t = f.t;
  TowerElement rho1 = t.uniformizer(1);
  TowerElement gap = t.embed(t.uniformizer(0), 1) - rho1.pow(3);
  EXPECT_EQ(t.valuation(gap) - Rational(3) * t.valuation(rho1), Rational(2, 3));
  EXPECT_EQ(f.r.norm_cells.front().value, Rational(2, 3));
}

// R_n(rho_{n+k}^(p^k - 1)) = +-1 and R_n preserves integrality, so the sup is (p^k - 1) / e_{n+k}.
TEST(Constants, TraceCellsMatchClosedForm) {
  for (const Fixture* f : {&p3(), &p2()}) {
    const Tower& t = f->t;
    Rational sup(0);
    for (const auto& c : f->r.trace_cells) {
      Rational expect = Rational(static_cast<std::int64_t>(t.relative_degree(c.k)) - 1) * t.uniformizer_valuation(c.n + c.k);
      EXPECT_EQ(c.value, expect) << "p=" << t.p() << " n=" << c.n << " k=" << c.k;
      if (c.k == 0) {
        EXPECT_EQ(c.value, Rational(0));
      }
      if (expect > sup) sup = expect;
    }
    EXPECT_EQ(f->r.c2_sup, sup);
    EXPECT_EQ(f->r.c2_star, ceil_of(sup));
  }
  EXPECT_EQ(p3().r.c2_star, 1);
}

TEST(Constants, TraceBoundHoldsOnSamples) {
  const auto& f = p3();
  const Tower& t = f.t;
  Sampler rng(11);
  for (int s = 0; s < 60; ++s) {
    int m = 1 + static_cast<int>(rng.below(3));
    int n = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
    TowerElement x = t.random_integral(m, rng);
    TowerElement r = t.normalized_trace(x, n);
    if (r.is_zero()) continue;
    Rational c2;
    for (const auto& c : f.r.trace_cells)
      if (c.n == n && c.k == m - n) c2 = c.value;
    EXPECT_GE(t.valuation(r), t.valuation(x) - c2);
  }
}

TEST(Constants, GammaBoundHoldsOnPerpSamples) {
  const auto& f = p3();
  const Tower& t = f.t;
  EXPECT_EQ(f.r.c3_star, 1);
  Sampler rng(5);
  for (int s = 0; s < 60; ++s) {
    int m = 1 + static_cast<int>(rng.below(3));
    int n = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
    TowerElement x = t.perp_project(t.random_integral(m, rng), m);
    if (x.is_zero()) continue;
    TowerElement y = x - t.galois_apply(t.generator(m, n), x);
    EXPECT_GE(t.valuation(x), t.valuation(y) - Rational(f.r.c3_star));
  }
}

TEST(Constants, LatticeShifts) {
  const auto& r = p3().r;
  EXPECT_EQ(r.n0, 0);
  EXPECT_EQ(r.n1, 2);
  EXPECT_EQ(r.slack_C, 4);
  for (int n = 0; n <= 4; ++n) {
    const auto& K = p3().d.kernel_lattice(n);
    EXPECT_TRUE(K.contains_lattice(p3().d.scaled_integers(n, n + r.n0_levels[n])));
    if (n + r.n0_levels[n] > 0) {
      EXPECT_FALSE(K.contains_lattice(p3().d.scaled_integers(n, n + r.n0_levels[n] - 1)));
    }
  }
}

TEST(Constants, DeterministicReport) {
  Tower t(TowerParams::for_prime(3, 2));
  Differentials d(t);
  auto a = estimate_constants(t, d, 99, 10).to_json().dump();
  auto b = estimate_constants(t, d, 99, 10).to_json().dump();
  EXPECT_EQ(a, b);
}

TEST(Constants, ExtendingTowerKeepsCells) {
  Tower t3(TowerParams::for_prime(3, 3));
  Differentials d3(t3);
  auto r3 = estimate_constants(t3, d3, 7, 20);
  const auto& r4 = p3().r;
  for (std::size_t i = 0; i < r3.norm_cells.size(); ++i) EXPECT_EQ(r3.norm_cells[i].value, r4.norm_cells[i].value);
  for (std::size_t i = 0; i < r3.trace_cells.size(); ++i) EXPECT_EQ(r3.trace_cells[i].value, r4.trace_cells[i].value);
  for (std::size_t i = 0; i < r3.gamma_cells.size(); ++i)
    EXPECT_EQ(r3.gamma_cells[i].max_divisor, r4.gamma_cells[i].max_divisor);
  EXPECT_LE(r3.c2_sup, r4.c2_sup);
  EXPECT_LE(r3.c3_star, r4.c3_star);
  EXPECT_GE(r3.c_norm, r4.c_norm);
}

TEST(Constants, TwoAdicTower) {
  const auto& r = p2().r;
  EXPECT_EQ(r.a, Rational(0));
  EXPECT_EQ(r.b, Rational(0));
  for (int n = 0; n <= 3; ++n) EXPECT_EQ(r.different_qp[n], Rational(n + 1));
  EXPECT_GT(r.c_norm, Rational(0));
  Rational scaled = r.c_norm * Rational(1 << r.m_c);
  EXPECT_GE(scaled, Rational(1));
  if (r.m_c > 0) {
    EXPECT_LT(scaled / Rational(2), Rational(1));
  }
  EXPECT_EQ(r.n1, ceil_of(r.a - r.b + Rational(r.m_c + 2)));
  EXPECT_GE(r.c3_star, 0);
}

TEST(Constants, RejectsNegativeSamples) {
  Tower t(TowerParams::for_prime(3, 1));
  Differentials d(t);
  EXPECT_THROW(estimate_constants(t, d, 1, -1), UsageError);
}
