#include <gtest/gtest.h>

#include "cyclodiff/lattice.hpp"
#include "cyclodiff/sampler.hpp"

using namespace cyclodiff;

namespace {

std::vector<Column> random_generators(Sampler& rng, unsigned p, std::size_t d, std::size_t count, int spread) {
  std::vector<Column> gens;
  for (std::size_t j = 0; j < count; ++j) {
    Column c(d);
    for (auto& e : c) {
      e = rng.residue(p, 6);
      e *= prime_power(p, static_cast<int>(rng.below(static_cast<std::uint64_t>(spread))));
      if (rng.below(2)) e = -e;
    }
    gens.push_back(std::move(c));
  }
  // Keep the lattice full rank with a bounded exponent.
  for (std::size_t i = 0; i < d; ++i) {
    Column c(d);
    c[i] = prime_power(p, spread + 1);
    gens.push_back(std::move(c));
  }
  return gens;
}

// v_p(det) by exact rational elimination.
int det_valuation(unsigned p, std::vector<Column> cols) {
  std::size_t d = cols.size();
  std::vector<std::vector<mpq_class>> a(d, std::vector<mpq_class>(d));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) a[i][j] = cols[j][i];
  mpq_class det = 1;
  for (std::size_t c = 0; c < d; ++c) {
    std::size_t r = c;
    while (r < d && a[r][c] == 0) ++r;
    if (r == d) return -1;
    if (r != c) {
      std::swap(a[r], a[c]);
      det = -det;
    }
    det *= a[c][c];
    for (std::size_t i = c + 1; i < d; ++i) {
      mpq_class f = a[i][c] / a[c][c];
      for (std::size_t j = c; j < d; ++j) a[i][j] -= f * a[c][j];
    }
  }
  mpz_class num = det.get_num();
  return remove_prime(num, p);
}

int min_entry_valuation(unsigned p, const std::vector<Column>& cols, int cap) {
  int m = cap;
  for (const auto& c : cols)
    for (const auto& e : c) m = std::min(m, valuation_capped(e, p, cap));
  return m;
}

// Least c with p^c L1 inside L2, by membership search.
int containment_exponent(const LatticeBasis& l1, const LatticeBasis& l2) {
  for (int c = 0;; ++c) {
    bool ok = true;
    for (const auto& col : l1.columns()) {
      Column v = col;
      for (auto& e : v) e *= prime_power(l1.prime(), c);
      ok = ok && l2.contains(v);
    }
    if (ok) return c;
  }
}

}  // namespace

TEST(Smith, MatchesDeterminantAndContent) {
  Sampler rng(7);
  for (unsigned p : {2u, 3u, 5u}) {
    for (int trial = 0; trial < 40; ++trial) {
      std::size_t d = 2 + rng.below(5);
      auto gens = random_generators(rng, p, d, d, 3);
      gens.resize(d);
      int dv = det_valuation(p, gens);
      if (dv < 0) continue;
      auto ed = smith_valuations(p, 200, gens, d);
      int sum = 0;
      for (int v : ed) sum += v;
      EXPECT_EQ(sum, dv);
      EXPECT_EQ(ed.front(), min_entry_valuation(p, gens, 200));
    }
  }
}

TEST(Smith, LeftTransformDiagonalizes) {
  Sampler rng(8);
  const unsigned p = 3;
  const int N = 30;
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t d = 3 + rng.below(4);
    auto gens = random_generators(rng, p, d, d + 2, 3);
    auto L = LatticeBasis::from_generators(p, 0, N, d, gens);
    auto sf = smith_form(p, N, L.columns(), d, true);
    // P L has elementary divisors equal to those of L; each row of P L is divisible by p^e_t.
    for (std::size_t t = 0; t < d; ++t)
      for (const auto& col : L.columns()) {
        mpz_class s = 0;
        for (std::size_t i = 0; i < d; ++i) s += sf.left[t][i] * col[i];
        EXPECT_GE(valuation_capped(s, p, N), sf.divisors[t]);
      }
  }
}

TEST(Lattice, HermiteFormIsCanonical) {
  Sampler rng(9);
  for (unsigned p : {2u, 3u}) {
    for (int trial = 0; trial < 30; ++trial) {
      std::size_t d = 2 + rng.below(6);
      auto gens = random_generators(rng, p, d, d + 3, 4);
      auto L = LatticeBasis::from_generators(p, 0, 40, d, gens);
      // Reversed order, plus a redundant sum of two generators.
      std::vector<Column> other(gens.rbegin(), gens.rend());
      Column sum(d);
      for (std::size_t i = 0; i < d; ++i) sum[i] = gens[0][i] + 3 * gens[1][i];
      other.push_back(sum);
      EXPECT_EQ(LatticeBasis::from_generators(p, 0, 40, d, other), L);
      for (const auto& g : gens) EXPECT_TRUE(L.contains(g));
      for (std::size_t r = 0; r < d; ++r) {
        EXPECT_EQ(L.columns()[r][r], prime_power(p, L.pivots()[r]));
        for (std::size_t i = 0; i < r; ++i) EXPECT_EQ(L.columns()[r][i], 0);
      }
    }
  }
}

TEST(Lattice, DiagonalMembership) {
  auto L = LatticeBasis::diagonal(3, 0, 20, {0, 1, 2});
  EXPECT_TRUE(L.contains(Column{5, 3, 9}));
  EXPECT_FALSE(L.contains(Column{5, 1, 9}));
  EXPECT_FALSE(L.contains(Column{0, 3, 3}));
  EXPECT_EQ(L.index_exponent(), 3);
  EXPECT_EQ(L.exponent(), 2);
  EXPECT_THROW(LatticeBasis::diagonal(3, 0, 5, {0, 5}), InsufficientPrecision);
}

TEST(Lattice, CommensurabilityTrivialCases) {
  Sampler rng(10);
  auto L = LatticeBasis::from_generators(3, 0, 40, 4, random_generators(rng, 3, 4, 6, 3));
  auto same = commensurability_check(L, L);
  EXPECT_EQ(same.c_plus, 0);
  EXPECT_EQ(same.c_minus, 0);
  auto scaled = commensurability_check(L, L.scaled(1));
  EXPECT_EQ(scaled.c_plus, 1);
  EXPECT_EQ(scaled.c_minus, 0);
  EXPECT_THROW(commensurability_check(L, LatticeBasis::diagonal(3, 0, 40, {0, 0})), DomainError);
}

TEST(Lattice, CommensurabilityMatchesMembershipSearch) {
  Sampler rng(11);
  for (unsigned p : {2u, 3u, 5u}) {
    for (int trial = 0; trial < 30; ++trial) {
      std::size_t d = 2 + rng.below(6);
      auto a = LatticeBasis::from_generators(p, 0, 50, d, random_generators(rng, p, d, d + 1, 4));
      auto b = LatticeBasis::from_generators(p, 0, 50, d, random_generators(rng, p, d, d + 1, 4));
      auto c = commensurability_check(a, b);
      EXPECT_EQ(c.c_plus, containment_exponent(a, b));
      EXPECT_EQ(c.c_minus, containment_exponent(b, a));
      std::int64_t sum = 0;
      for (int v : c.relative_divisors) sum += v;
      EXPECT_EQ(sum, a.index_exponent() - b.index_exponent());
    }
  }
}

TEST(Lattice, SumAndInclusion) {
  auto a = LatticeBasis::diagonal(3, 0, 20, {2, 0, 1});
  auto b = LatticeBasis::diagonal(3, 0, 20, {1, 1, 3});
  auto s = a + b;
  EXPECT_EQ(s, LatticeBasis::diagonal(3, 0, 20, {1, 0, 1}));
  EXPECT_TRUE(s.contains_lattice(a));
  EXPECT_TRUE(s.contains_lattice(b));
  EXPECT_FALSE(a.contains_lattice(b));
  auto j = s.to_json();
  EXPECT_EQ(j["pivots"], nlohmann::json({1, 0, 1}));
  EXPECT_EQ(j["columns"][0][0], "3^1 * 1");
}
