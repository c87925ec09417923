#pragma once

// Exact tower constants: different drift (a, b), norm congruence c_norm and m_c,
// trace bound c_2, (1 - g_n) bound c_3, and the lattice shifts n_0, n_1.

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cyclodiff/differentials.hpp"
#include "cyclodiff/errors.hpp"
#include "cyclodiff/lattice.hpp"
#include "cyclodiff/rational.hpp"
#include "cyclodiff/sampler.hpp"
#include "cyclodiff/tower.hpp"

namespace cyclodiff {

inline constexpr int kDefaultNormSamples = 1000;

struct NormCell {
  int n = 0;
  int k = 0;
  Rational value;       // min of val(N(x) - x^(p^k)) - p^k val(x)
  std::string witness;  // "rho^i" or "unit#j"
};

struct TraceCell {
  int n = 0;
  int k = 0;
  Rational value;  // max_i (i / e_{n+k} - val R_n(rho_{n+k}^i))
  std::uint64_t witness = 0;
};

struct GammaCell {
  int n = 0;
  int k = 0;
  int max_divisor = 0;  // largest elementary divisor of 1 - g_n on O_{K_{n+k}}^perp
};

struct ConstantsReport {
  TowerParams params;
  std::uint64_t seed = 0;
  int samples = 0;

  std::vector<Rational> different_k0;  // val different(K_n / K_0), n = 0..L
  std::vector<Rational> different_qp;  // val different(K_n / Q_p)
  Rational a;
  Rational b;

  std::vector<NormCell> norm_cells;
  Rational c_norm;
  NormCell c_norm_witness;
  int m_c = 0;

  std::vector<TraceCell> trace_cells;
  Rational c2_sup;
  int c2_star = 0;

  std::vector<GammaCell> gamma_cells;
  int c3_star = 0;

  std::vector<int> n0_levels;  // least c with p^(n+c) O_{K_n} in the kernel lattice
  int n0 = 0;
  int n1 = 0;
  int slack_C = 0;  // quasi-multiplicativity slack of w'_2: 2 n_0 + n_1 + 2 c_2*

  nlohmann::json to_json() const {
    auto rats = [](const std::vector<Rational>& v) {
      nlohmann::json a = nlohmann::json::array();
      for (const auto& r : v) a.push_back(to_string(r));
      return a;
    };
    nlohmann::json norms = nlohmann::json::array();
    for (const auto& c : norm_cells)
      norms.push_back({{"n", c.n}, {"k", c.k}, {"value", to_string(c.value)}, {"witness", c.witness}});
    nlohmann::json traces = nlohmann::json::array();
    for (const auto& c : trace_cells)
      traces.push_back({{"n", c.n}, {"k", c.k}, {"value", to_string(c.value)}, {"witness_power", c.witness}});
    nlohmann::json gammas = nlohmann::json::array();
    for (const auto& c : gamma_cells) gammas.push_back({{"n", c.n}, {"k", c.k}, {"max_divisor", c.max_divisor}});
    return {{"tower", params.to_json()},
            {"seed", seed},
            {"samples", samples},
            {"different_over_k0", rats(different_k0)},
            {"different_over_qp", rats(different_qp)},
            {"a", to_string(a)},
            {"b", to_string(b)},
            {"c_norm", to_string(c_norm)},
            {"c_norm_witness", {{"n", c_norm_witness.n}, {"k", c_norm_witness.k}, {"x", c_norm_witness.witness}}},
            {"norm_cells", norms},
            {"m_c", m_c},
            {"c2_cells", traces},
            {"c2_sup", to_string(c2_sup)},
            {"c2_star", c2_star},
            {"c3_cells", gammas},
            {"c3_star", c3_star},
            {"n0_levels", n0_levels},
            {"n0", n0},
            {"n1", n1},
            {"slack_C", slack_C}};
  }
};

namespace detail {

inline std::string cell_name(int n, int k) { return "(n=" + std::to_string(n) + ", k=" + std::to_string(k) + ")"; }

inline NormCell norm_cell(const Tower& t, int n, int k, std::uint64_t seed, int samples) {
  const int m = n + k;
  const std::uint64_t pk = t.relative_degree(k);
  NormCell cell{n, k, Rational(0), ""};
  bool first = true;
  auto consider = [&](const TowerElement& x, const std::string& label) {
    TowerElement diff = t.embed(t.norm_down(x, n), m) - x.pow(pk);
    if (diff.is_zero()) throw InsufficientPrecision("norm congruence at " + cell_name(n, k) + " vanished for " + label);
    Rational v = t.valuation(diff) - Rational(static_cast<std::int64_t>(pk)) * t.valuation(x);
    if (first || v < cell.value) {
      cell.value = v;
      cell.witness = label;
      first = false;
    }
  };
  try {
    const TowerElement rho = t.uniformizer(m);
    TowerElement power = rho;
    for (std::uint64_t i = 1; i < pk; ++i, power *= rho) consider(power, "rho^" + std::to_string(i));
    Sampler rng(derive_seed(seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(k)));
    for (int j = 0; j < samples; ++j) consider(t.random_unit(m, rng), "unit#" + std::to_string(j));
  } catch (const InsufficientPrecision& e) {
    throw InsufficientPrecision(std::string(e.what()) + " in cell " + cell_name(n, k));
  }
  return cell;
}

inline TraceCell trace_cell(const Tower& t, int n, int k) {
  const int m = n + k;
  const Rational step = t.uniformizer_valuation(m);
  TraceCell cell{n, k, Rational(0), 0};
  const TowerElement rho = t.uniformizer(m);
  TowerElement power = t.one(m);
  for (std::uint64_t i = 0; i < t.relative_degree(k); ++i, power *= rho) {
    TowerElement r = t.normalized_trace(power, n);
    if (r.is_zero()) continue;
    Rational v = Rational(static_cast<std::int64_t>(i)) * step - t.valuation(r);
    if (v > cell.value) {
      cell.value = v;
      cell.witness = i;
    }
  }
  return cell;
}

inline GammaCell gamma_cell(const Tower& t, int n, int k) {
  const int m = n + k;
  const unsigned p = t.p();
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < t.degree(m); ++j)
    if (j % p != 0) idx.push_back(j);
  const GaloisElement g = t.generator(m, n);
  std::vector<Column> cols;
  for (auto j : idx) {
    TowerElement z = t.zeta_power(m, j);
    TowerElement y = z - t.galois_apply(g, z);
    Column c;
    for (auto i : idx) c.push_back(y[i].lift(0));
    cols.push_back(std::move(c));
  }
  auto ed = smith_valuations(p, t.prec(), cols, idx.size());
  int top = ed.empty() ? 0 : ed.back();
  if (top >= t.prec()) throw InsufficientPrecision("1 - g_n is singular at precision in cell " + cell_name(n, k));
  return GammaCell{n, k, top};
}

}  // namespace detail

/// c_2(n,k) for every cell n + k <= max_level, ordered by (n + k, n).
inline std::vector<TraceCell> trace_cells(const Tower& t) {
  std::vector<TraceCell> out;
  for (int m = 0; m <= t.max_level(); ++m)
    for (int n = 0; n <= m; ++n) out.push_back(detail::trace_cell(t, n, m - n));
  return out;
}

/// Integer slack ceil(max c_2(n,k)).
inline int trace_slack(const Tower& t) {
  Rational sup(0);
  for (const auto& c : trace_cells(t))
    if (c.value > sup) sup = c.value;
  return static_cast<int>(ceil_of(sup));
}

inline ConstantsReport estimate_constants(const Tower& t, const Differentials& diff, std::uint64_t seed,
                                          int samples = kDefaultNormSamples) {
  if (samples < 0) throw UsageError("sample count must be nonnegative");
  const int L = t.max_level();
  const unsigned p = t.p();
  ConstantsReport r;
  r.params = t.params();
  r.seed = seed;
  r.samples = samples;

  for (int n = 0; n <= L; ++n) {
    r.different_k0.push_back(diff.different(n).val_different);
    r.different_qp.push_back(diff.different_over_qp(n).val_different);
  }
  r.b = r.different_k0[L] - Rational(L);
  r.a = Rational(0);
  for (int n = 0; n <= L; ++n) {
    Rational dev = r.different_k0[n] - Rational(n) - r.b;
    if (dev < Rational(0)) dev = -dev;
    dev *= Rational(static_cast<std::int64_t>(t.relative_degree(n)));
    if (dev > r.a) r.a = dev;
  }

  for (int m = 1; m <= L; ++m)
    for (int n = 0; n < m; ++n) r.norm_cells.push_back(detail::norm_cell(t, n, m - n, seed, samples));
  r.c_norm_witness = r.norm_cells.front();
  for (const auto& c : r.norm_cells)
    if (c.value < r.c_norm_witness.value) r.c_norm_witness = c;
  r.c_norm = r.c_norm_witness.value;
  if (r.c_norm <= Rational(0)) throw Error("internal: norm congruence constant is not positive");
  const Rational target(1, static_cast<std::int64_t>(p) - 1);
  Rational scaled = r.c_norm;
  while (scaled < target) {
    scaled *= Rational(static_cast<std::int64_t>(p));
    ++r.m_c;
  }

  r.trace_cells = trace_cells(t);
  for (const auto& c : r.trace_cells)
    if (c.value > r.c2_sup) r.c2_sup = c.value;
  r.c2_star = static_cast<int>(ceil_of(r.c2_sup));

  for (int m = 1; m <= L; ++m)
    for (int n = 0; n < m; ++n) {
      r.gamma_cells.push_back(detail::gamma_cell(t, n, m - n));
      r.c3_star = std::max(r.c3_star, r.gamma_cells.back().max_divisor);
    }

  for (int n = 0; n <= L; ++n) {
    int shift = std::max(0, diff.kernel_lattice(n).exponent() - n);
    r.n0_levels.push_back(shift);
    r.n0 = std::max(r.n0, shift);
  }
  r.n1 = static_cast<int>(std::max<std::int64_t>(0, ceil_of(r.a - r.b + Rational(r.m_c + 2))));
  r.slack_C = 2 * r.n0 + r.n1 + 2 * r.c2_star;
  return r;
}

}  // namespace cyclodiff
