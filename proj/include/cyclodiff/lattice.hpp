#pragma once

// Full-rank Z_p-lattices in Z_p^d, held modulo p^N in canonical column Hermite
// form. Every lattice handled here contains p^N Z_p^d, so the reduction loses
// nothing: the lifted Hermite basis is an exact basis.

#include <gmpxx.h>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cyclodiff/errors.hpp"
#include "cyclodiff/padic_scalar.hpp"

namespace cyclodiff {

using Column = std::vector<mpz_class>;

namespace detail {

inline int val_mod(const mpz_class& z, unsigned p, int cap) { return valuation_capped(z, p, cap); }

inline mpz_class unit_inverse(const mpz_class& u, unsigned p, int k) {
  mpz_class inv;
  const mpz_class& m = prime_power(p, k);
  if (k == 0) return 0;
  mpz_invert(inv.get_mpz_t(), u.get_mpz_t(), m.get_mpz_t());
  return inv;
}

}  // namespace detail

/// Smith form data of a d x c matrix modulo p^N: P A Q = diag(p^divisors), P
/// unimodular modulo p^N. Divisors equal to N mean "zero at this precision".
struct SmithForm {
  std::vector<int> divisors;
  std::vector<Column> left;  // rows of P
};

/// Elementary-divisor valuations of the matrix whose columns are `cols` (length d each).
/// With `want_left`, also records the left transform P.
inline SmithForm smith_form(unsigned p, int N, const std::vector<Column>& cols, std::size_t d, bool want_left) {
  const mpz_class& mod = prime_power(p, N);
  const std::size_t c = cols.size();
  std::vector<Column> a(d, Column(c));  // row-major copy
  for (std::size_t j = 0; j < c; ++j)
    for (std::size_t i = 0; i < d; ++i) mpz_fdiv_r(a[i][j].get_mpz_t(), cols[j][i].get_mpz_t(), mod.get_mpz_t());
  std::vector<Column> P;
  if (want_left) {
    P.assign(d, Column(d));
    for (std::size_t i = 0; i < d; ++i) P[i][i] = 1;
  }
  SmithForm out;
  const std::size_t r = std::min(d, c);
  for (std::size_t t = 0; t < r; ++t) {
    int best = N;
    std::size_t br = t, bc = t;
    for (std::size_t i = t; i < d && best > 0; ++i)
      for (std::size_t j = t; j < c; ++j) {
        if (sgn(a[i][j]) == 0) continue;
        int v = detail::val_mod(a[i][j], p, best);
        if (v < best) {
          best = v;
          br = i;
          bc = j;
          if (v == 0) break;
        }
      }
    if (best >= N) {
      for (std::size_t k = t; k < d; ++k) out.divisors.push_back(N);
      out.left = std::move(P);
      return out;
    }
    std::swap(a[t], a[br]);
    if (want_left) std::swap(P[t], P[br]);
    if (bc != t)
      for (std::size_t i = 0; i < d; ++i) std::swap(a[i][t], a[i][bc]);
    mpz_class unit = a[t][t];
    for (int k = 0; k < best; ++k) unit /= p;
    mpz_class inv = detail::unit_inverse(unit, p, N - best);
    for (std::size_t j = t; j < c; ++j) {
      a[t][j] *= inv;
      mpz_fdiv_r(a[t][j].get_mpz_t(), a[t][j].get_mpz_t(), mod.get_mpz_t());
    }
    if (want_left)
      for (auto& e : P[t]) {
        e *= inv;
        mpz_fdiv_r(e.get_mpz_t(), e.get_mpz_t(), mod.get_mpz_t());
      }
    const mpz_class& pivot_power = prime_power(p, best);
    mpz_class f;
    for (std::size_t i = t + 1; i < d; ++i) {
      if (sgn(a[i][t]) == 0) continue;
      mpz_divexact(f.get_mpz_t(), a[i][t].get_mpz_t(), pivot_power.get_mpz_t());
      for (std::size_t j = t; j < c; ++j) {
        if (sgn(a[t][j]) == 0) continue;
        mpz_submul(a[i][j].get_mpz_t(), f.get_mpz_t(), a[t][j].get_mpz_t());
        mpz_fdiv_r(a[i][j].get_mpz_t(), a[i][j].get_mpz_t(), mod.get_mpz_t());
      }
      if (want_left)
        for (std::size_t j = 0; j < d; ++j) {
          if (sgn(P[t][j]) == 0) continue;
          mpz_submul(P[i][j].get_mpz_t(), f.get_mpz_t(), P[t][j].get_mpz_t());
          mpz_fdiv_r(P[i][j].get_mpz_t(), P[i][j].get_mpz_t(), mod.get_mpz_t());
        }
    }
    // Column operations only touch row t once the column below the pivot is clear.
    for (std::size_t j = t + 1; j < c; ++j) a[t][j] = 0;
    out.divisors.push_back(best);
  }
  for (std::size_t k = r; k < d; ++k) out.divisors.push_back(N);
  out.left = std::move(P);
  return out;
}

inline std::vector<int> smith_valuations(unsigned p, int N, const std::vector<Column>& cols, std::size_t d) {
  auto v = smith_form(p, N, cols, d, false).divisors;
  std::sort(v.begin(), v.end());
  return v;
}

class LatticeBasis {
 public:
  LatticeBasis() = default;

  /// Hermite form of the lattice spanned by `gens` together with p^N Z_p^d.
  /// Pivot choice per row: lowest valuation, then lowest generator index.
  static LatticeBasis from_generators(unsigned p, int level, int N, std::size_t d, std::vector<Column> gens) {
    const mpz_class& mod = prime_power(p, N);
    for (auto& g : gens) {
      if (g.size() != d) throw DomainError("generator of the wrong length");
      for (auto& e : g) mpz_fdiv_r(e.get_mpz_t(), e.get_mpz_t(), mod.get_mpz_t());
    }
    LatticeBasis L;
    L.p_ = p;
    L.level_ = level;
    L.N_ = N;
    L.d_ = d;
    std::vector<bool> used(gens.size(), false);
    for (std::size_t r = 0; r < d; ++r) {
      int best = N;
      std::size_t bj = 0;
      for (std::size_t j = 0; j < gens.size(); ++j) {
        if (used[j] || sgn(gens[j][r]) == 0) continue;
        int v = detail::val_mod(gens[j][r], p, best);
        if (v < best) {
          best = v;
          bj = j;
          if (v == 0) break;
        }
      }
      if (best >= N)
        throw InsufficientPrecision("lattice is not of full rank modulo p^" + std::to_string(N) + " (row " +
                                    std::to_string(r) + ")");
      used[bj] = true;
      Column piv = gens[bj];
      mpz_class unit = piv[r];
      for (int k = 0; k < best; ++k) unit /= p;
      mpz_class inv = detail::unit_inverse(unit, p, N - best);
      for (auto& e : piv) {
        e *= inv;
        mpz_fdiv_r(e.get_mpz_t(), e.get_mpz_t(), mod.get_mpz_t());
      }
      const mpz_class& pp = prime_power(p, best);
      mpz_class f;
      for (std::size_t j = 0; j < gens.size(); ++j) {
        if (used[j] || sgn(gens[j][r]) == 0) continue;
        mpz_divexact(f.get_mpz_t(), gens[j][r].get_mpz_t(), pp.get_mpz_t());
        for (std::size_t i = r; i < d; ++i) {
          if (sgn(piv[i]) == 0) continue;
          mpz_submul(gens[j][i].get_mpz_t(), f.get_mpz_t(), piv[i].get_mpz_t());
          mpz_fdiv_r(gens[j][i].get_mpz_t(), gens[j][i].get_mpz_t(), mod.get_mpz_t());
        }
      }
      // The virtual generator p^N e_r clears whatever pivoting left in row r.
      L.columns_.push_back(std::move(piv));
      L.pivots_.push_back(best);
    }
    L.reduce();
    return L;
  }

  /// The diagonal lattice with basis p^(exps[i]) e_i.
  static LatticeBasis diagonal(unsigned p, int level, int N, const std::vector<int>& exps) {
    std::vector<Column> gens;
    for (std::size_t i = 0; i < exps.size(); ++i) {
      Column c(exps.size());
      c[i] = prime_power(p, exps[i]);
      gens.push_back(std::move(c));
    }
    return from_generators(p, level, N, exps.size(), std::move(gens));
  }

  unsigned prime() const { return p_; }
  int level() const { return level_; }
  int modulus_exponent() const { return N_; }
  std::size_t dimension() const { return d_; }
  const std::vector<Column>& columns() const { return columns_; }
  const std::vector<int>& pivots() const { return pivots_; }

  /// log_p of the index [Z_p^d : L].
  std::int64_t index_exponent() const {
    std::int64_t s = 0;
    for (int a : pivots_) s += a;
    return s;
  }

  /// Sorted elementary-divisor valuations of L inside Z_p^d.
  const std::vector<int>& elementary_divisors() const {
    if (!divisors_) {
      auto v = smith_valuations(p_, N_, columns_, d_);
      if (!v.empty() && v.back() >= N_)
        throw InsufficientPrecision("an elementary divisor reaches p^" + std::to_string(N_));
      divisors_ = std::move(v);
    }
    return *divisors_;
  }

  /// Smallest e with p^e Z_p^d contained in L.
  int exponent() const {
    const auto& v = elementary_divisors();
    return v.empty() ? 0 : v.back();
  }

  /// Membership of an integer vector (exact, since p^N Z_p^d lies in L).
  bool contains(const Column& v) const { return contains_mod(v, N_); }

  /// Membership of a vector known only modulo p^prec.
  bool contains(const Column& v, int prec) const {
    if (prec >= N_) return contains_mod(v, N_);
    if (prec < exponent())
      throw InsufficientPrecision("membership undecidable below p^" + std::to_string(exponent()));
    return contains_mod(v, prec);
  }

  /// Integer coefficients c with v = sum_j c_j * column_j modulo p^N; nullopt if v is not in L.
  std::optional<Column> solve(const Column& v) const {
    const mpz_class& mod = prime_power(p_, N_);
    Column w(d_), c(d_);
    for (std::size_t i = 0; i < d_; ++i) mpz_fdiv_r(w[i].get_mpz_t(), v[i].get_mpz_t(), mod.get_mpz_t());
    for (std::size_t r = 0; r < d_; ++r) {
      if (sgn(w[r]) == 0) continue;
      const mpz_class& pp = prime_power(p_, pivots_[r]);
      if (!mpz_divisible_p(w[r].get_mpz_t(), pp.get_mpz_t())) return std::nullopt;
      mpz_divexact(c[r].get_mpz_t(), w[r].get_mpz_t(), pp.get_mpz_t());
      for (std::size_t i = r; i < d_; ++i) {
        if (sgn(columns_[r][i]) == 0) continue;
        mpz_submul(w[i].get_mpz_t(), c[r].get_mpz_t(), columns_[r][i].get_mpz_t());
        mpz_fdiv_r(w[i].get_mpz_t(), w[i].get_mpz_t(), mod.get_mpz_t());
      }
    }
    return c;
  }

  /// p^k L (k >= 0).
  LatticeBasis scaled(int k) const {
    if (k < 0) throw DomainError("scaled: negative exponent");
    std::vector<Column> gens;
    for (const auto& c : columns_) {
      Column g = c;
      for (auto& e : g) e *= prime_power(p_, k);
      gens.push_back(std::move(g));
    }
    return from_generators(p_, level_, N_, d_, std::move(gens));
  }

  /// L1 + L2.
  friend LatticeBasis operator+(const LatticeBasis& a, const LatticeBasis& b) {
    a.check_compatible(b);
    std::vector<Column> gens = a.columns_;
    gens.insert(gens.end(), b.columns_.begin(), b.columns_.end());
    return from_generators(a.p_, a.level_, std::min(a.N_, b.N_), a.d_, std::move(gens));
  }

  bool contains_lattice(const LatticeBasis& other) const {
    check_compatible(other);
    for (const auto& c : other.columns_)
      if (!contains(c)) return false;
    return true;
  }

  friend bool operator==(const LatticeBasis& a, const LatticeBasis& b) {
    return a.p_ == b.p_ && a.d_ == b.d_ && a.N_ == b.N_ && a.pivots_ == b.pivots_ && a.columns_ == b.columns_;
  }

  void check_compatible(const LatticeBasis& b) const {
    if (p_ != b.p_ || d_ != b.d_)
      throw DomainError("lattices of different rank (" + std::to_string(d_) + " vs " + std::to_string(b.d_) + ")");
  }

  /// Columns as lists of `p^v * u` entries; zero entries are "0".
  nlohmann::json to_json() const {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : columns_) {
      nlohmann::json col = nlohmann::json::array();
      for (const auto& e : c) col.push_back(PadicScalar::from_integer(p_, e, N_).to_string());
      cols.push_back(std::move(col));
    }
    return {{"p", p_},
            {"level", level_},
            {"modulus_exponent", N_},
            {"dimension", d_},
            {"pivots", pivots_},
            {"index_exponent", index_exponent()},
            {"columns", std::move(cols)}};
  }

 private:
  bool contains_mod(const Column& v, int prec) const {
    if (v.size() != d_) throw DomainError("vector of the wrong length");
    const mpz_class& mod = prime_power(p_, prec);
    Column w(d_);
    for (std::size_t i = 0; i < d_; ++i) mpz_fdiv_r(w[i].get_mpz_t(), v[i].get_mpz_t(), mod.get_mpz_t());
    mpz_class q;
    for (std::size_t r = 0; r < d_; ++r) {
      if (sgn(w[r]) == 0) continue;
      const mpz_class& pp = prime_power(p_, pivots_[r]);
      if (!mpz_divisible_p(w[r].get_mpz_t(), pp.get_mpz_t())) return false;
      mpz_divexact(q.get_mpz_t(), w[r].get_mpz_t(), pp.get_mpz_t());
      for (std::size_t i = r; i < d_; ++i) {
        if (sgn(columns_[r][i]) == 0) continue;
        mpz_submul(w[i].get_mpz_t(), q.get_mpz_t(), columns_[r][i].get_mpz_t());
        mpz_fdiv_r(w[i].get_mpz_t(), w[i].get_mpz_t(), mod.get_mpz_t());
      }
    }
    return true;
  }

  /// Entries below each pivot reduced modulo the pivot of their row.
  void reduce() {
    mpz_class q;
    for (std::size_t j = 0; j < d_; ++j)
      for (std::size_t r = j + 1; r < d_; ++r) {
        const mpz_class& pp = prime_power(p_, pivots_[r]);
        if (mpz_cmp(columns_[j][r].get_mpz_t(), pp.get_mpz_t()) < 0) continue;
        mpz_fdiv_q(q.get_mpz_t(), columns_[j][r].get_mpz_t(), pp.get_mpz_t());
        for (std::size_t i = r; i < d_; ++i) {
          if (sgn(columns_[r][i]) == 0) continue;
          mpz_submul(columns_[j][i].get_mpz_t(), q.get_mpz_t(), columns_[r][i].get_mpz_t());
        }
        const mpz_class& mod = prime_power(p_, N_);
        for (std::size_t i = r; i < d_; ++i) mpz_fdiv_r(columns_[j][i].get_mpz_t(), columns_[j][i].get_mpz_t(), mod.get_mpz_t());
      }
  }

  unsigned p_ = 0;
  int level_ = 0;
  int N_ = 0;
  std::size_t d_ = 0;
  std::vector<Column> columns_;
  std::vector<int> pivots_;
  mutable std::optional<std::vector<int>> divisors_;
};

/// Valuations of the elementary divisors of the transition matrix L2^-1 L1
/// (negative entries allowed), sorted.
inline std::vector<int> relative_elementary_divisors(const LatticeBasis& l1, const LatticeBasis& l2) {
  l1.check_compatible(l2);
  const unsigned p = l1.prime();
  const std::size_t d = l1.dimension();
  const int e = l2.exponent();
  const auto& h2 = l2.columns();
  const auto& piv2 = l2.pivots();
  // Y = H2^-1 (p^e H1) is integral because p^e Z_p^d lies in L2; solve exactly over Z.
  std::vector<Column> y;
  y.reserve(d);
  mpz_class acc;
  for (const auto& h : l1.columns()) {
    Column col(d);
    for (std::size_t r = 0; r < d; ++r) {
      acc = h[r] * prime_power(p, e);
      for (std::size_t j = 0; j < r; ++j)
        if (sgn(h2[j][r]) != 0 && sgn(col[j]) != 0) mpz_submul(acc.get_mpz_t(), h2[j][r].get_mpz_t(), col[j].get_mpz_t());
      const mpz_class& pp = prime_power(p, piv2[r]);
      if (!mpz_divisible_p(acc.get_mpz_t(), pp.get_mpz_t()))
        throw Error("internal: transition matrix is not integral after scaling");
      mpz_divexact(col[r].get_mpz_t(), acc.get_mpz_t(), pp.get_mpz_t());
    }
    y.push_back(std::move(col));
  }
  std::int64_t total = static_cast<std::int64_t>(d) * e + l1.index_exponent() - l2.index_exponent();
  int M = static_cast<int>(total) + 1;
  auto v = smith_valuations(p, M, y, d);
  if (!v.empty() && v.back() >= M) throw Error("internal: singular transition matrix");
  for (auto& x : v) x -= e;
  return v;
}

struct Commensurability {
  int c_plus = 0;   // least c >= 0 with p^c L1 inside L2
  int c_minus = 0;  // least c >= 0 with p^c L2 inside L1
  std::vector<int> relative_divisors;

  nlohmann::json to_json() const {
    return {{"c_plus", c_plus}, {"c_minus", c_minus}, {"relative_divisors", relative_divisors}};
  }
};

inline Commensurability commensurability_check(const LatticeBasis& l1, const LatticeBasis& l2) {
  Commensurability out;
  out.relative_divisors = relative_elementary_divisors(l1, l2);
  if (!out.relative_divisors.empty()) {
    out.c_plus = std::max(0, -out.relative_divisors.front());
    out.c_minus = std::max(0, out.relative_divisors.back());
  }
  return out;
}

}  // namespace cyclodiff
