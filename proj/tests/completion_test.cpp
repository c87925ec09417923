#include <gtest/gtest.h>

#include "cyclodiff/completion.hpp"

using namespace cyclodiff;

namespace {

const Tower& tower3() {
  static const Tower t(TowerParams::for_prime(3, 4));
  return t;
}

const Completion& comp3() {
  static const Completion c(tower3());
  return c;
}

// A perpendicular unit at level n >= 1: a unit of K_0 times zeta_n^j with p not dividing j.
TowerElement perpendicular_unit(const Tower& t, int n, Sampler& rng) {
  std::uint64_t j = 1 + rng.below(t.degree(n) - 1);
  if (j % t.p() == 0) ++j;
  return t.embed(t.random_unit(0, rng), n) * t.zeta_power(n, j);
}

}  // namespace

TEST(W2, Examples) {
  const auto& t = tower3();
  const auto& c = comp3();
  EXPECT_EQ(c.w2_valuation(t.one(2)), 0);
  EXPECT_EQ(c.w2_valuation(t.zeta(1)), -1);
  EXPECT_EQ(c.w2_valuation(t.zeta(3)), -3);
  EXPECT_THROW(c.w2_valuation(t.zero(1)), ValuationOfZero);
  Sampler rng(1);
  for (int i = 0; i < 30; ++i) {
    auto x = t.random_integral(static_cast<int>(rng.below(4)), rng);
    int k = static_cast<int>(rng.below(5));
    EXPECT_EQ(c.w2_valuation(x.shifted(k)), c.w2_valuation(x) + k);
  }
}

TEST(W2, RespectsPerpendicularBound) {
  const auto& t = tower3();
  const auto& c = comp3();
  Sampler rng(2);
  for (int i = 0; i < 40; ++i) {
    auto x = t.random_integral(3, rng) * t.uniformizer(3).pow(rng.below(20));
    auto w = c.w2_valuation(x);
    for (int n = 0; n <= 3; ++n) {
      auto r = t.perp_project(x, n);
      if (!r.is_zero()) {
        EXPECT_GE(t.valuation(r), Rational(w + n));
      }
    }
    auto y = t.random_integral(3, rng);
    EXPECT_GE(c.w2_valuation(x + y), std::min(c.w2_valuation(x), c.w2_valuation(y)));
  }
}

TEST(PerpSeries, Examples) {
  const auto& t = tower3();
  const auto& c = comp3();
  Sampler rng(3);
  auto a = t.random_unit(0, rng);
  auto s = c.perp_series_decompose(a);
  ASSERT_EQ(s.terms.size(), 1u);
  EXPECT_EQ(s.terms[0].n, 0);
  EXPECT_EQ(s.terms[0].x, a);
  auto z = c.perp_series_decompose(t.zeta(1));
  ASSERT_EQ(z.terms.size(), 1u);
  EXPECT_EQ(z.terms[0].n, 1);
  EXPECT_TRUE(equal_at_precision(z.terms[0].x, t.zeta(1)));
  EXPECT_TRUE(c.series_reconstruct(PerpSeries{}).is_zero());
  EXPECT_TRUE(c.perp_series_decompose(t.zero(3)).is_zero());
}

TEST(PerpSeries, RoundTripAndUniqueness) {
  const auto& t = tower3();
  const auto& c = comp3();
  Sampler rng(4);
  for (int i = 0; i < 100; ++i) {
    auto x = t.random_integral(3, rng);
    auto s = c.perp_series_decompose(x);
    ASSERT_TRUE(s.perpendicular(t));
    ASSERT_TRUE(equal_at_precision(c.series_reconstruct(s), x));
    // Perturb one term inside its perpendicular space and decompose again.
    auto& term = s.terms[rng.below(s.terms.size())];
    if (term.n > 0) term.x += perpendicular_unit(t, term.n, rng);
    else term.x += t.random_unit(0, rng);
    auto again = c.perp_series_decompose(c.series_reconstruct(s));
    ASSERT_EQ(again.terms.size(), s.terms.size());
    for (std::size_t k = 0; k < s.terms.size(); ++k) {
      ASSERT_EQ(again.terms[k].n, s.terms[k].n);
      ASSERT_TRUE(equal_at_precision(again.terms[k].x, s.terms[k].x));
    }
  }
}

TEST(PerpSeries, ScaledUnitsHaveNonnegativeW2) {
  const auto& t = tower3();
  const auto& c = comp3();
  Sampler rng(5);
  for (int i = 0; i < 20; ++i) {
    PerpSeries s;
    s.terms.push_back({0, t.random_unit(0, rng)});
    for (int n = 1; n <= 3; ++n) s.terms.push_back({n, perpendicular_unit(t, n, rng).shifted(n)});
    EXPECT_GE(c.w2_valuation(c.series_reconstruct(s)), 0);
    EXPECT_EQ(*s.decay_margin(t), Rational(0));
  }
}

TEST(PerpSeries, JsonRoundTrip) {
  const auto& t = tower3();
  const auto& c = comp3();
  Sampler rng(6);
  auto s = c.perp_series_decompose(t.random_integral(2, rng));
  auto j = s.to_json(t);
  auto back = PerpSeries::from_json(t, j);
  EXPECT_EQ(back.to_json(t).dump(), j.dump());
  nlohmann::json bad = {{"terms", {{{"n", 1}, {"coeffs", {"1", "0", "0", "0", "0", "0"}}}}}};
  EXPECT_THROW(PerpSeries::from_json(t, bad), DomainError);
}

TEST(MembershipR, Examples) {
  const auto& t = tower3();
  const auto& c = comp3();
  auto one = c.membership_R(t.one(0), 0);
  EXPECT_TRUE(one.accepted_strict);
  auto three_zeta = c.membership_R(t.integer(1, 3) * t.zeta(1), 0);
  EXPECT_TRUE(three_zeta.accepted_strict);
  EXPECT_TRUE(equal_at_precision(three_zeta.components[1].y, t.zeta(1)));
  EXPECT_TRUE(three_zeta.components[0].y.is_zero());
  auto strict = c.membership_R(t.zeta(1), 0);
  EXPECT_FALSE(strict.accepted);
  EXPECT_EQ(*strict.failing_level, 1);
  auto slack = c.membership_R(t.zeta(1), 1);
  EXPECT_TRUE(slack.accepted);
  EXPECT_FALSE(slack.accepted_strict);
}

TEST(Flatness, Examples) {
  const auto& t = tower3();
  const auto& c = comp3();
  for (const auto& m : c.flatness_test(t.embed(t.uniformizer(0), 3), 3)) EXPECT_FALSE(m.margin.has_value());
  auto z = c.flatness_test(t.zeta(1), 3);
  EXPECT_EQ(*z[0].margin, Rational(1, 2));
  for (int k = 1; k <= 3; ++k) EXPECT_FALSE(z[k].margin.has_value());
  // The witness family: (g_k - 1) zeta_{p^(k+2)} has valuation 1/(p-1) for every k.
  for (int k = 0; k <= 3; ++k) {
    auto f = c.flatness_test(t.zeta(k + 1), k);
    EXPECT_EQ(*f[k].margin, Rational(1, 2) - Rational(k));
  }
  // y = sum_{n <= 3} p^n rho_n: margin at k is at least min_{n > k} val(rho_n) = 1/e_{k+1}.
  TowerElement y = t.zero(3);
  for (int n = 0; n <= 3; ++n) y += t.embed(t.uniformizer(n), 3).shifted(n);
  auto fy = c.flatness_test(y, 3);
  for (int k = 0; k < 3; ++k) EXPECT_GE(*fy[k].margin, t.uniformizer_valuation(k + 1));
  EXPECT_FALSE(fy[3].margin.has_value());
}

TEST(SeriesInvert, Examples) {
  const auto& t = tower3();
  const auto& c = comp3();
  auto one = c.series_invert(c.perp_series_decompose(t.one(0)));
  EXPECT_TRUE(equal_at_precision(c.series_reconstruct(one), t.one(0)));
  auto y = t.one(1) + t.integer(1, 3) * t.zeta(1);
  auto inv = c.series_reconstruct(c.series_invert(c.perp_series_decompose(y)));
  TowerElement geom = t.zero(1), term = t.one(1);
  auto step = -(t.integer(1, 3) * t.zeta(1));
  for (int j = 0; j < t.prec(); ++j) {
    geom += term;
    term *= step;
  }
  EXPECT_TRUE(equal_at_precision(inv, geom));
  EXPECT_TRUE(c.membership_R(inv, 0).accepted_strict);
  Sampler rng(7);
  for (int i = 0; i < 20; ++i) {
    auto x = t.random_unit(static_cast<int>(rng.below(4)), rng);
    auto s = c.perp_series_decompose(x);
    auto back = c.series_reconstruct(c.series_invert(c.series_invert(s)));
    EXPECT_TRUE(equal_at_precision(back, x));
  }
  EXPECT_THROW(c.series_invert(PerpSeries{}), DivisionByZero);
}
