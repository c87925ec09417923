#include <gtest/gtest.h>

#include "cyclodiff/differentials.hpp"

using namespace cyclodiff;

namespace {

const Tower& tower3() {
  static const Tower t(TowerParams::for_prime(3, 3));
  return t;
}

const Differentials& diff3() {
  static const Differentials d(tower3());
  return d;
}

const Tower& tower2() {
  static const Tower t(TowerParams::for_prime(2, 3));
  return t;
}

const Differentials& diff2() {
  static const Differentials d(tower2());
  return d;
}

// Conductor-discriminant: val of the different of Q_p(zeta_{p^(n+s)}) over Q_p is (n+s) - 1/(p-1).
Rational different_over_qp_oracle(unsigned p, int s, int n) {
  return Rational(n + s) - Rational(1, static_cast<std::int64_t>(p) - 1);
}

// Least c with p^c Z_p^d inside L, by membership of the scaled unit vectors.
int saturation_exponent(const LatticeBasis& L) {
  for (int c = 0;; ++c) {
    bool ok = true;
    for (std::size_t i = 0; i < L.dimension() && ok; ++i) {
      Column v(L.dimension());
      v[i] = prime_power(L.prime(), c);
      ok = L.contains(v);
    }
    if (ok) return c;
  }
}

}  // namespace

TEST(Different, MinimalPolynomialIsShiftedCyclotomic) {
  const auto& t = tower3();
  // (1 + X)^(p^n) - zeta_0: binomial coefficients above, -rho_0 at the constant term.
  for (int n = 1; n <= 2; ++n) {
    const auto& g = diff3().minimal_polynomial(n);
    std::uint64_t q = t.relative_degree(n);
    ASSERT_EQ(g.size(), q + 1);
    for (std::uint64_t i = 1; i <= q; ++i)
      EXPECT_TRUE(equal_at_precision(g[i], t.constant(0, PadicScalar::from_integer(3, mpz_class(t.binomial(q, i)), t.prec()))));
    EXPECT_TRUE(equal_at_precision(g[0], -t.uniformizer(0)));
  }
}

TEST(Different, GeneratorAndValuation) {
  const auto& t = tower3();
  EXPECT_TRUE(equal_at_precision(diff3().different(1).generator, t.integer(1, 3) * t.zeta_power(1, 2)));
  for (int n = 0; n <= 3; ++n) {
    // g'(rho_n) = p^n (1 + rho_n)^(p^n - 1).
    auto closed = t.zeta_power(n, t.relative_degree(n) - 1).shifted(n);
    EXPECT_TRUE(equal_at_precision(diff3().different(n).generator, closed));
    EXPECT_EQ(diff3().different(n).val_different, Rational(n));
    EXPECT_EQ(diff3().different_over_qp(n).val_different, different_over_qp_oracle(3, 1, n));
    EXPECT_EQ(diff3().different_over_qp(n).val_different - diff3().different_over_qp(0).val_different,
              diff3().different(n).val_different);
  }
  EXPECT_EQ(diff3().different_over_qp(0).val_different, Rational(1, 2));
  for (int n = 0; n <= 3; ++n) {
    EXPECT_EQ(diff2().different(n).val_different, Rational(n));
    EXPECT_EQ(diff2().different_over_qp(n).val_different, different_over_qp_oracle(2, 2, n));
  }
}

TEST(DMap, Examples) {
  const auto& t = tower3();
  for (int n = 1; n <= 3; ++n) {
    auto w = diff3().d_map(t.uniformizer(n));
    EXPECT_TRUE(equal_at_precision(w.rep, t.one(n)));
    EXPECT_FALSE(w.is_zero(t));
  }
  Sampler rng(1);
  auto c = t.embed(t.random_integral(0, rng), 2);
  EXPECT_TRUE(diff3().d_map(c).is_zero(t));
  // d(rho_0) = 3 zeta_9^2 d(rho_1): the representative over Q_p, and the zero class over K_0.
  auto rho0 = t.embed(t.uniformizer(0), 1);
  auto three_zeta = t.integer(1, 3) * t.zeta_power(1, 2);
  EXPECT_TRUE(equal_at_precision(diff3().d_map_qp(rho0).rep, three_zeta));
  auto w = diff3().d_map(rho0);
  EXPECT_TRUE(w.equals(t, OmegaClass{1, Base::K0, three_zeta, Rational(1)}));
  EXPECT_TRUE(w.is_zero(t));
  EXPECT_THROW(diff3().d_map(t.one(1).shifted(-1)), DomainError);
}

TEST(DMap, LeibnizAndAdditivity) {
  const auto& t = tower3();
  Sampler rng(2);
  for (int i = 0; i < 1000; ++i) {
    int n = 1 + static_cast<int>(rng.below(2));
    auto x = t.random_integral(n, rng);
    auto y = t.random_integral(n, rng);
    auto lhs = diff3().d_map(x * y);
    auto rhs = diff3().d_map(y).scaled(x) + diff3().d_map(x).scaled(y);
    ASSERT_TRUE(lhs.equals(t, rhs));
    ASSERT_TRUE(diff3().d_map(x + y).equals(t, diff3().d_map(x) + diff3().d_map(y)));
  }
}

TEST(DMap, QpLeibniz) {
  const auto& t = tower2();
  Sampler rng(3);
  for (int i = 0; i < 200; ++i) {
    auto x = t.random_integral(2, rng);
    auto y = t.random_integral(2, rng);
    auto lhs = diff2().d_map_qp(x * y);
    auto rhs = diff2().d_map_qp(y).scaled(x) + diff2().d_map_qp(x).scaled(y);
    ASSERT_TRUE(lhs.equals(t, rhs));
  }
}

TEST(Annihilator, Examples) {
  const auto& t = tower3();
  const int n = 2;
  auto w = diff3().d_map(t.uniformizer(n));
  auto pw = w.scaled(t.integer(n, 3));
  auto r = diff3().annihilator_divides(w, pw);
  ASSERT_TRUE(r.divides);
  EXPECT_TRUE(equal_at_precision(*r.witness, t.integer(n, 3)));
  EXPECT_FALSE(diff3().annihilator_divides(pw, w).divides);
  Sampler rng(4);
  for (int i = 0; i < 50; ++i) {
    auto x = t.random_integral(n, rng);
    OmegaClass om{n, Base::K0, t.random_unit(n, rng) * t.uniformizer(n).pow(rng.below(30)), Rational(n)};
    auto res = diff3().annihilator_divides(om, om.scaled(x));
    ASSERT_TRUE(res.divides);
    ASSERT_TRUE(om.scaled(*res.witness).equals(t, om.scaled(x)));
  }
  OmegaClass bottom{n, Base::K0, t.zero(n), Rational(n)};
  EXPECT_THROW(diff3().annihilator_divides(w, bottom), InsufficientPrecision);
}

TEST(OmegaInclusion, Injective) {
  const auto& t = tower3();
  for (int n = 1; n <= 2; ++n) {
    std::vector<OmegaClass> samples;
    auto one = diff3().d_map(t.uniformizer(n));
    samples.push_back(one);
    // Just below the different: rho_n^(n e_n - 1).
    samples.push_back(one.scaled(t.uniformizer(n).pow(static_cast<std::uint64_t>(n) * t.degree(n) - 1)));
    samples.push_back(one.scaled(t.integer(n, 0)));
    samples.push_back(one.scaled(t.uniformizer(n).pow(static_cast<std::uint64_t>(n) * t.degree(n))));
    Sampler rng(5);
    for (int i = 0; i < 30; ++i) samples.push_back(diff3().d_map(t.random_integral(n, rng)));
    for (int m = n + 1; m <= 3; ++m) {
      auto rep = diff3().omega_inclusion_check(n, m, samples);
      EXPECT_TRUE(rep.injective());
      EXPECT_EQ(rep.checked, static_cast<int>(samples.size()));
      EXPECT_EQ(rep.transition_valuation, Rational(m - n));
    }
    EXPECT_FALSE(diff3().transport(samples[1], n + 1).is_zero(t));
    EXPECT_TRUE(diff3().transport(samples[2], n + 1).is_zero(t));
  }
}

TEST(BaseChange, Examples) {
  const auto& t = tower3();
  Sampler rng(6);
  auto x0 = t.random_unit(0, rng);
  auto bc = diff3().base_change_compare(x0);
  EXPECT_TRUE(bc.over_k0.is_zero(t));
  EXPECT_EQ(bc.r, 1);
  EXPECT_TRUE(bc.kernel_killed);
  EXPECT_TRUE(bc.quotient_compatible);
  OmegaClass killed{0, Base::Qp, bc.over_qp.rep.shifted(1), bc.over_qp.val_different};
  EXPECT_TRUE(killed.is_zero(t));
  auto br = diff3().base_change_compare(t.uniformizer(2));
  EXPECT_FALSE(br.over_k0.is_zero(t));
  EXPECT_FALSE(br.over_qp.is_zero(t));
  EXPECT_TRUE(br.quotient_compatible);
  for (int i = 0; i < 50; ++i) {
    auto x = t.random_integral(1 + static_cast<int>(rng.below(3)), rng);
    auto r = diff3().base_change_compare(x);
    ASSERT_TRUE(r.quotient_compatible);
    ASSERT_TRUE(r.kernel_killed);
  }
}

TEST(KernelLattice, SmallLevels) {
  const auto& t = tower3();
  const auto& d = diff3();
  EXPECT_EQ(d.kernel_lattice(0), d.scaled_integers(0, 0));
  EXPECT_EQ(d.theorem_b_lattice(0), d.scaled_integers(0, 0));
  // O_{K_0} + 3 rho_1 O_{K_0} + 3 rho_1^2 O_{K_0}, generated independently.
  std::vector<Column> gens;
  auto r1 = t.uniformizer(1);
  auto r0 = t.embed(t.uniformizer(0), 1);
  for (std::uint64_t i = 0; i < 3; ++i)
    for (std::uint64_t j = 0; j < 2; ++j) gens.push_back(d.coordinate_column((r0.pow(j) * r1.pow(i)).shifted(i == 0 ? 0 : 1)));
  auto expected = LatticeBasis::from_generators(3, 1, t.prec(), 6, gens);
  EXPECT_EQ(d.kernel_lattice(1), expected);
  EXPECT_EQ(d.theorem_b_lattice(1), expected);
  auto c = commensurability_check(d.kernel_lattice(1), d.theorem_b_lattice(1));
  EXPECT_EQ(c.c_plus, 0);
  EXPECT_EQ(c.c_minus, 0);
}

TEST(KernelLattice, MembershipMatchesDMap) {
  const auto& t = tower3();
  const auto& d = diff3();
  Sampler rng(7);
  int inside = 0;
  for (int n = 1; n <= 3; ++n) {
    const auto& L = d.kernel_lattice(n);
    for (int i = 0; i < 60; ++i) {
      auto x = t.random_integral(n, rng) * t.uniformizer(n).pow(rng.below(4 * t.degree(n)));
      if (i % 3 == 0) x = d.lattice_element(L, rng) + x.shifted(n + 1);
      bool in = L.contains(d.coordinate_column(x));
      inside += in;
      ASSERT_EQ(in, d.in_kernel(x));
    }
  }
  EXPECT_GT(inside, 20);
}

TEST(KernelLattice, CompatibleAcrossLevels) {
  const auto& t = tower3();
  const auto& d = diff3();
  Sampler rng(8);
  for (int n = 1; n <= 3; ++n)
    for (int i = 0; i < 40; ++i) {
      auto x = t.random_integral(n - 1, rng) * t.uniformizer(n - 1).pow(rng.below(3 * t.degree(n - 1)));
      if (i % 2 == 0) x = d.lattice_element(d.kernel_lattice(n - 1), rng);
      ASSERT_EQ(d.kernel_lattice(n).contains(d.coordinate_column(t.embed(x, n))),
                d.kernel_lattice(n - 1).contains(d.coordinate_column(x)));
    }
}

TEST(KernelLattice, TrivialInclusionShift) {
  const auto& d = diff3();
  for (int n = 0; n <= 3; ++n) {
    // Least c with p^c O_{K_n} inside the kernel, by membership; it never exceeds n here.
    int c = saturation_exponent(d.kernel_lattice(n));
    EXPECT_LE(c, n);
    EXPECT_TRUE(d.kernel_lattice(n).contains_lattice(d.scaled_integers(n, n)));
  }
}

TEST(KernelLattice, QpAndK0AgreeUpToScaling) {
  for (const Differentials* d : {&diff3(), &diff2()}) {
    int r = static_cast<int>(ceil_of(d->different_over_qp(0).val_different));
    for (int n = 0; n <= 2; ++n) {
      auto c = commensurability_check(d->kernel_lattice_qp(n), d->kernel_lattice(n));
      EXPECT_EQ(c.c_plus, 0);  // d over Q_p vanishing forces d over K_0 vanishing
      EXPECT_LE(c.c_minus, r);
    }
  }
}

TEST(KernelLattice, TheoremBCommensurable) {
  for (const Differentials* d : {&diff3(), &diff2()}) {
    for (int n = 1; n <= 3; ++n) {
      auto c = commensurability_check(d->theorem_b_lattice(n), d->kernel_lattice(n));
      EXPECT_EQ(c.c_plus, 0);
      EXPECT_LE(c.c_minus, 2);
    }
  }
}

TEST(FlatDecompose, Examples) {
  const auto& t = tower3();
  const auto& d = diff3();
  const int n1 = 2;
  auto x = t.uniformizer(3).shifted(3);
  auto dec = d.flat_decompose(x, n1);
  EXPECT_TRUE(dec.all_verified());
  EXPECT_EQ(dec.y.size(), 1u);
  Sampler rng(9);
  auto small = d.lattice_element(d.kernel_lattice(2), rng);
  auto trivial = d.flat_decompose(small, n1);
  EXPECT_TRUE(trivial.y.empty());
  EXPECT_EQ(trivial.tail, small);
  for (int i = 0; i < 10; ++i) {
    auto z = d.lattice_element(d.kernel_lattice(3), rng);
    auto r = d.flat_decompose(z, n1);
    ASSERT_TRUE(r.all_verified());
    ASSERT_EQ(r.tail.level(), n1);
  }
  EXPECT_THROW(d.flat_decompose(t.uniformizer(3), n1), DomainError);
}

TEST(Divisibility, Examples) {
  const auto& t = tower3();
  const auto& d = diff3();
  auto rep = d.divisibility_exponent(t.uniformizer(1), 3);
  EXPECT_GE(rep.i_max.at(1), 0);
  EXPECT_EQ(rep.i_max.size(), 3u);
  int prev = -1;
  for (auto [m, i] : rep.i_max) {
    EXPECT_GE(i, prev);
    prev = i;
  }
  EXPECT_LT(rep.stabilized_at, 3);
  Sampler rng(10);
  for (int k = 0; k < 10; ++k) {
    auto x = t.random_integral(1 + static_cast<int>(rng.below(2)), rng);
    if (d.in_kernel(x)) continue;
    if (d.in_kernel(x.shifted(1))) continue;
    auto a = d.divisibility_exponent(x, 3);
    auto b = d.divisibility_exponent(x.shifted(1), 3);
    for (auto [m, i] : a.i_max) EXPECT_GE(b.i_max.at(m), i + 1);
  }
  EXPECT_THROW(d.divisibility_exponent(t.one(1), 2), DomainError);
}

TEST(Divisibility, ScalingCanJumpByMoreThanOne) {
  // The kernel lattice is not p-saturated: 3 rho_3^9 lies in it while rho_3^9 does not.
  const auto& t = tower3();
  const auto& d = diff3();
  auto r = t.uniformizer(3);
  auto x = r.pow(9) + r.shifted(1);
  auto a = d.divisibility_exponent(x, 3);
  auto b = d.divisibility_exponent(x.shifted(1), 3);
  EXPECT_EQ(a.i_max.at(3), 0);
  EXPECT_EQ(b.i_max.at(3), 2);
}
