#pragma once

// The cyclotomic Z_p-tower K_0 ⊂ K_1 ⊂ ... with K_n = Q_p(zeta_{p^(n+s)}),
// s = 1 for odd p and s = 2 for p = 2. Galois action, traces, norms, Tate's
// normalized traces R_n and the perpendicular projectors R_n^perp.

#include <gmpxx.h>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cyclodiff/errors.hpp"
#include "cyclodiff/padic_scalar.hpp"
#include "cyclodiff/rational.hpp"
#include "cyclodiff/sampler.hpp"
#include "cyclodiff/tower_element.hpp"

namespace cyclodiff {

inline constexpr std::size_t kMaxDegree = 512;

inline bool is_prime(unsigned n) {
  if (n < 2) return false;
  for (unsigned d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

struct TowerParams {
  unsigned p = 3;
  int s = 1;
  int max_level = 4;
  int prec = kDefaultPrecision;

  static TowerParams for_prime(unsigned p, int max_level = 4, int prec = kDefaultPrecision) {
    return TowerParams{p, p == 2 ? 2 : 1, max_level, prec};
  }

  void validate() const {
    if (!is_prime(p)) throw UsageError("p = " + std::to_string(p) + " is not prime");
    if (s != (p == 2 ? 2 : 1)) throw UsageError("s must be 1 for odd p and 2 for p = 2");
    if (max_level < 1) throw UsageError("max_level must be at least 1");
    if (prec < 8) throw UsageError("prec must be at least 8");
    LevelShape top{p, s, max_level};
    if (max_level > 12 || top.degree() > kMaxDegree)
      throw UsageError("degree of the top layer exceeds " + std::to_string(kMaxDegree));
  }

  nlohmann::json to_json() const {
    return {{"p", p}, {"s", s}, {"max_level", max_level}, {"prec", prec}};
  }

  static TowerParams from_json(const nlohmann::json& j) {
    TowerParams t;
    t.p = j.at("p").get<unsigned>();
    t.s = j.contains("s") ? j.at("s").get<int>() : (t.p == 2 ? 2 : 1);
    t.max_level = j.value("max_level", 4);
    t.prec = j.value("prec", kDefaultPrecision);
    return t;
  }

  friend bool operator==(const TowerParams&, const TowerParams&) = default;
};

/// sigma_a with a = (1 + p^s)^exponent acting on K_level; exponent is read modulo p^level.
struct GaloisElement {
  int level = 0;
  std::uint64_t exponent = 0;
  std::uint64_t unit = 1;
};

/// x = sum_i coeffs[i] * rho_n^i with coeffs in K_0, i < p^n.
struct RhoExpansion {
  int level = 0;
  std::vector<TowerElement> coeffs;
};

/// A valuation that is either certified (exact) or only a lower bound.
struct ValuationBound {
  Rational value;
  bool exact = false;
};

class Tower {
 public:
  explicit Tower(TowerParams params) : params_(params) {
    params_.validate();
    std::size_t n = shape(params_.max_level).degree() + 1;
    auto table = std::make_shared<std::vector<std::vector<mpz_class>>>(n);
    for (std::size_t i = 0; i < n; ++i) {
      (*table)[i].resize(i + 1);
      (*table)[i][0] = (*table)[i][i] = 1;
      for (std::size_t k = 1; k < i; ++k) (*table)[i][k] = (*table)[i - 1][k - 1] + (*table)[i - 1][k];
    }
    binomials_ = std::move(table);
  }

  const TowerParams& params() const { return params_; }
  unsigned p() const { return params_.p; }
  int s() const { return params_.s; }
  int max_level() const { return params_.max_level; }
  int prec() const { return params_.prec; }

  LevelShape shape(int n) const { return LevelShape{params_.p, params_.s, n}; }
  /// [K_n : Q_p], which is also the ramification index e_n.
  std::size_t degree(int n) const { return shape(n).degree(); }
  std::uint64_t relative_degree(int n) const { return ipow(params_.p, n); }
  Rational uniformizer_valuation(int n) const {
    return Rational(1, static_cast<std::int64_t>(degree(n)));
  }

  const mpz_class& binomial(std::size_t n, std::size_t k) const { return (*binomials_)[n][k]; }

  // ---- constructors -------------------------------------------------------

  TowerElement zero(int n) const { return TowerElement::zero(shape(check_level(n)), prec()); }
  TowerElement constant(int n, const PadicScalar& c) const {
    return TowerElement::constant(shape(check_level(n)), c);
  }
  TowerElement integer(int n, long z) const {
    return constant(n, PadicScalar::from_integer(p(), z, prec()));
  }
  TowerElement one(int n) const { return integer(n, 1); }
  TowerElement zeta_power(int n, std::uint64_t k) const {
    return TowerElement::zeta_power(shape(check_level(n)), k, prec());
  }
  TowerElement zeta(int n) const { return zeta_power(n, 1); }

  /// rho_n = zeta_{p^(n+s)} - 1, with val_p(rho_n) = 1/e_n.
  TowerElement uniformizer(int n) const { return zeta(n) - one(n); }

  /// Integer coefficients in the zeta-power basis.
  TowerElement element(int n, const std::vector<long>& coeffs) const {
    check_level(n);
    if (coeffs.size() != degree(n))
      throw DomainError("expected " + std::to_string(degree(n)) + " coefficients at level " +
                        std::to_string(n));
    std::vector<PadicScalar> c;
    c.reserve(coeffs.size());
    for (long z : coeffs) c.push_back(PadicScalar::from_integer(p(), z, prec()));
    return TowerElement(shape(n), std::move(c));
  }

  /// {"level": n, "coeffs": [...]} with integers or `p^v * u` strings.
  TowerElement parse_element(const nlohmann::json& j) const {
    int n = j.at("level").get<int>();
    check_level(n);
    const auto& arr = j.at("coeffs");
    if (!arr.is_array() || arr.size() != degree(n))
      throw UsageError("element at level " + std::to_string(n) + " needs " +
                       std::to_string(degree(n)) + " coefficients");
    std::vector<PadicScalar> c;
    for (const auto& e : arr) {
      if (e.is_number_integer()) c.push_back(PadicScalar::from_integer(p(), mpz_class(e.dump()), prec()));
      else c.push_back(PadicScalar::parse(e.get<std::string>(), p(), prec()));
    }
    return TowerElement(shape(n), std::move(c));
  }

  // ---- embeddings -----------------------------------------------------------

  /// K_n -> K_m via zeta_{p^(n+s)} = zeta_{p^(m+s)}^(p^(m-n)).
  TowerElement embed(const TowerElement& x, int m) const {
    check_element(x);
    check_level(m);
    if (m < x.level()) throw DomainError("embed: target level below source level");
    if (m == x.level()) return x;
    std::uint64_t stride = relative_degree(m - x.level());
    std::vector<PadicScalar> c(degree(m), PadicScalar::zero(p(), x.min_prec()));
    for (std::size_t k = 0; k < x.degree(); ++k) c[k * stride] = x[k];
    return TowerElement(shape(m), std::move(c));
  }

  bool lies_in(const TowerElement& x, int n) const {
    if (n >= x.level()) return true;
    std::uint64_t stride = relative_degree(x.level() - n);
    for (std::size_t k = 0; k < x.degree(); ++k)
      if (k % stride != 0 && !x[k].is_bottom()) return false;
    return true;
  }

  /// View an element of K_m that lies in K_n (n <= m) as a level-n element.
  TowerElement restrict_to(const TowerElement& x, int n) const {
    check_element(x);
    if (n >= x.level()) return embed(x, n);
    if (!lies_in(x, n))
      throw InsufficientPrecision("element of level " + std::to_string(x.level()) +
                                  " does not certifiably lie in K_" + std::to_string(n));
    std::uint64_t stride = relative_degree(x.level() - n);
    std::vector<PadicScalar> c;
    c.reserve(degree(n));
    for (std::size_t k = 0; k < degree(n); ++k) c.push_back(x[k * stride]);
    return TowerElement(shape(n), std::move(c));
  }

  // ---- Galois action ----------------------------------------------------------

  GaloisElement galois(int level, std::uint64_t exponent) const {
    check_level(level);
    std::uint64_t order = shape(level).order();
    std::uint64_t base = (1 + ipow(p(), s())) % order;
    std::uint64_t a = 1 % order;
    std::uint64_t e = exponent % relative_degree(level);
    for (std::uint64_t i = 0; i < e; ++i) a = (a * base) % order;
    return GaloisElement{level, e, a};
  }

  /// g_k = g_0^(p^k), a topological generator of Gal(K_inf / K_k), acting on K_level.
  GaloisElement generator(int level, int k) const { return galois(level, ipow(p(), k)); }

  /// zeta -> zeta^a for any a prime to p.
  TowerElement apply_unit(std::uint64_t a, const TowerElement& x) const {
    check_element(x);
    const LevelShape sh = x.shape();
    const std::uint64_t order = sh.order();
    if (a % p() == 0) throw DomainError("automorphism exponent divisible by p");
    detail::Lift lift = detail::to_lift(p(), x.coeffs());
    std::vector<mpz_class> acc(order);
    for (std::size_t k = 0; k < lift.v.size(); ++k) {
      if (sgn(lift.v[k]) == 0) continue;
      acc[(a % order) * k % order] += lift.v[k];
    }
    detail::reduce_cyclotomic(acc, sh);
    lift.v = std::move(acc);
    return TowerElement(sh, detail::from_lift(p(), lift));
  }

  TowerElement galois_apply(const GaloisElement& g, const TowerElement& x) const {
    if (g.level != x.level()) throw DomainError("galois_apply: element and automorphism at different levels");
    return apply_unit(g.unit, x);
  }

  /// The units a = 1 + j p^(n+s) mod p^(m+s): Gal(K_m / K_n).
  std::vector<std::uint64_t> relative_conjugate_units(int m, int n) const {
    std::vector<std::uint64_t> out;
    std::uint64_t step = ipow(p(), n + s());
    std::uint64_t order = shape(m).order();
    for (std::uint64_t j = 0; j < relative_degree(m - n); ++j) out.push_back((1 + j * step) % order);
    return out;
  }

  // ---- traces and norms ---------------------------------------------------

  /// Tr_{K_m/K_n}(x) as the sum of the conjugates of x.
  TowerElement trace_down(const TowerElement& x, int n) const {
    check_element(x);
    const int m = x.level();
    if (n > m || n < 0) throw DomainError("trace_down: target level outside [0, level]");
    if (n == m) return x;
    const LevelShape sh = x.shape();
    const std::uint64_t order = sh.order();
    detail::Lift lift = detail::to_lift(p(), x.coeffs());
    std::vector<mpz_class> acc(order);
    for (std::uint64_t a : relative_conjugate_units(m, n))
      for (std::size_t k = 0; k < lift.v.size(); ++k)
        if (sgn(lift.v[k]) != 0) acc[a * k % order] += lift.v[k];
    detail::reduce_cyclotomic(acc, sh);
    lift.v = std::move(acc);
    return restrict_to(TowerElement(sh, detail::from_lift(p(), lift)), n);
  }

  /// N_{K_m/K_n}(x), one layer at a time as products of p conjugates.
  TowerElement norm_down(const TowerElement& x, int n) const {
    check_element(x);
    if (n > x.level() || n < 0) throw DomainError("norm_down: target level outside [0, level]");
    TowerElement y = x;
    for (int l = x.level(); l > n; --l) {
      TowerElement prod = y;
      for (std::uint64_t a : relative_conjugate_units(l, l - 1)) {
        if (a == 1) continue;
        prod *= apply_unit(a, y);
      }
      y = restrict_to(prod, l - 1);
    }
    return y;
  }

  /// R_n(x) = p^-k Tr_{K_{n+k}/K_n}(x); the identity (embedding) when n >= level(x).
  TowerElement normalized_trace(const TowerElement& x, int n) const {
    check_element(x);
    if (n >= x.level()) return embed(x, check_level(n));
    return trace_down(x, n).shifted(-(x.level() - n));
  }

  /// R_n^perp = R_n - R_{n-1} (R_0^perp = R_0), landing in K_n^perp = ker(R_{n-1} : K_n -> K_{n-1}).
  TowerElement perp_project(const TowerElement& x, int n) const {
    check_element(x);
    check_level(n);
    if (n > x.level()) return TowerElement::zero(shape(n), x.min_prec());
    if (n == 0) return normalized_trace(x, 0);
    return normalized_trace(x, n) - embed(normalized_trace(x, n - 1), n);
  }

  // ---- bases and valuation ------------------------------------------------

  RhoExpansion to_rho_basis(const TowerElement& x) const {
    check_element(x);
    const int n = x.level();
    detail::Lift lift = detail::to_lift(p(), x.coeffs());
    auto blocks = rho_blocks_from_zeta(n, lift.v);
    RhoExpansion out{n, {}};
    for (auto& block : blocks)
      out.coeffs.emplace_back(shape(0), detail::from_lift(p(), detail::Lift{lift.shift, lift.prec, std::move(block)}));
    return out;
  }

  TowerElement from_rho_basis(const RhoExpansion& r) const {
    const int n = check_level(r.level);
    if (r.coeffs.size() != relative_degree(n)) throw DomainError("rho expansion of the wrong length");
    std::vector<PadicScalar> flat;
    for (const auto& c : r.coeffs) {
      if (c.level() != 0) throw DomainError("rho expansion coefficients must lie in K_0");
      flat.insert(flat.end(), c.coeffs().begin(), c.coeffs().end());
    }
    detail::Lift lift = detail::to_lift(p(), flat);
    std::size_t e0 = degree(0);
    std::vector<std::vector<mpz_class>> blocks(r.coeffs.size());
    for (std::size_t i = 0; i < blocks.size(); ++i)
      blocks[i].assign(lift.v.begin() + static_cast<long>(i * e0), lift.v.begin() + static_cast<long>((i + 1) * e0));
    lift.v = zeta_from_rho_blocks(n, blocks);
    return TowerElement(shape(n), detail::from_lift(p(), lift));
  }

  /// Z_p-coordinates in the basis rho_0^j rho_n^i (index i * e_0 + j).
  std::vector<PadicScalar> refined_coordinates(const TowerElement& x) const {
    check_element(x);
    detail::Lift lift = detail::to_lift(p(), x.coeffs());
    auto blocks = rho_blocks_from_zeta(x.level(), lift.v);
    std::vector<mpz_class> flat;
    flat.reserve(x.degree());
    for (auto& b : blocks) {
      auto r = base_rho_from_zeta(b);
      flat.insert(flat.end(), r.begin(), r.end());
    }
    lift.v = std::move(flat);
    return detail::from_lift(p(), lift);
  }

  TowerElement from_refined_coordinates(int n, const std::vector<PadicScalar>& coords) const {
    check_level(n);
    if (coords.size() != degree(n)) throw DomainError("refined coordinate vector of the wrong length");
    detail::Lift lift = detail::to_lift(p(), coords);
    std::size_t e0 = degree(0);
    std::vector<std::vector<mpz_class>> blocks(relative_degree(n));
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      std::vector<mpz_class> r(lift.v.begin() + static_cast<long>(i * e0), lift.v.begin() + static_cast<long>((i + 1) * e0));
      blocks[i] = base_zeta_from_rho(r);
    }
    lift.v = zeta_from_rho_blocks(n, blocks);
    return TowerElement(shape(n), detail::from_lift(p(), lift));
  }

  /// Coordinates in the Q_p-basis rho_n^k, k < e_n.
  std::vector<PadicScalar> qp_rho_coordinates(const TowerElement& x) const {
    check_element(x);
    detail::Lift lift = detail::to_lift(p(), x.coeffs());
    const std::size_t d = lift.v.size();
    std::vector<mpz_class> out(d);
    for (std::size_t k = 0; k < d; ++k)
      for (std::size_t j = k; j < d; ++j)
        if (sgn(lift.v[j]) != 0) mpz_addmul(out[k].get_mpz_t(), binomial(j, k).get_mpz_t(), lift.v[j].get_mpz_t());
    lift.v = std::move(out);
    return detail::from_lift(p(), lift);
  }

  TowerElement from_qp_rho_coordinates(int n, const std::vector<PadicScalar>& coords) const {
    check_level(n);
    if (coords.size() != degree(n)) throw DomainError("rho coordinate vector of the wrong length");
    detail::Lift lift = detail::to_lift(p(), coords);
    lift.v = alternating_binomial_transform(lift.v);
    return TowerElement(shape(n), detail::from_lift(p(), lift));
  }

  /// val_p(x) read from the rho-basis over K_0: min_i (val(x_i) + i/e_n), refined
  /// through the rho_0-basis of K_0. Terms have pairwise distinct valuations, so
  /// the minimum is exact whenever it is attained by a nonzero coordinate below
  /// every zero-at-precision coordinate's bound.
  ValuationBound valuation_bound(const TowerElement& x) const {
    const int n = x.level();
    auto coords = refined_coordinates(x);
    const std::int64_t e = static_cast<std::int64_t>(degree(n));
    const std::size_t e0 = degree(0);
    const std::uint64_t pn = relative_degree(n);
    std::optional<Rational> attained, bound;
    for (std::size_t idx = 0; idx < coords.size(); ++idx) {
      std::size_t i = idx / e0, j = idx % e0;
      Rational offset(static_cast<std::int64_t>(i + j * pn), e);
      const auto& c = coords[idx];
      if (c.is_bottom()) {
        Rational b = Rational(c.prec()) + offset;
        if (!bound || b < *bound) bound = b;
      } else {
        Rational v = Rational(*c.valuation()) + offset;
        if (!attained || v < *attained) attained = v;
      }
    }
    if (attained && (!bound || *attained < *bound)) return {*attained, true};
    if (!attained) return {*bound, false};
    return {std::min(*attained, *bound), false};
  }

  Rational valuation(const TowerElement& x) const {
    if (x.is_zero()) throw ValuationOfZero("element is zero at precision " + std::to_string(x.min_prec()));
    auto vb = valuation_bound(x);
    if (!vb.exact) throw InsufficientPrecision("valuation not certified at the working precision");
    return vb.value;
  }

  /// true iff val(x) >= c; throws when undecidable at the working precision.
  bool valuation_at_least(const TowerElement& x, const Rational& c) const {
    auto vb = valuation_bound(x);
    if (vb.value >= c) return true;
    if (vb.exact) return false;
    throw InsufficientPrecision("cannot decide val >= " + to_string(c));
  }

  // ---- field operations ---------------------------------------------------

  /// 1/x via the tower of norms: 1/x = conj / (x conj) with x conj one level down.
  TowerElement inverse(const TowerElement& x) const {
    check_element(x);
    if (x.is_zero()) throw DivisionByZero("inverse of a tower element that is zero at precision");
    const int n = x.level();
    if (n == 0) {
      TowerElement conj = one(0);
      std::uint64_t order = shape(0).order();
      for (std::uint64_t a = 2; a < order; ++a)
        if (a % p() != 0) conj *= apply_unit(a, x);
      TowerElement norm = x * conj;
      for (std::size_t k = 1; k < norm.degree(); ++k)
        if (!norm[k].is_bottom()) throw InsufficientPrecision("norm to Q_p not certified");
      return norm[0].inverse() * conj;
    }
    TowerElement conj = one(n);
    for (std::uint64_t a : relative_conjugate_units(n, n - 1))
      if (a != 1) conj *= apply_unit(a, x);
    TowerElement norm = restrict_to(x * conj, n - 1);
    return conj * embed(inverse(norm), n);
  }

  TowerElement divide(const TowerElement& a, const TowerElement& b) const { return a * inverse(b); }

  // ---- sampling -----------------------------------------------------------

  TowerElement random_integral(int n, Sampler& rng) const {
    check_level(n);
    std::vector<PadicScalar> c;
    c.reserve(degree(n));
    for (std::size_t k = 0; k < degree(n); ++k)
      c.push_back(PadicScalar::from_integer(p(), rng.residue(p(), prec()), prec()));
    return TowerElement(shape(n), std::move(c));
  }

  /// A random element of O_{K_n}^x (nonzero residue: the coefficient sum is prime to p).
  TowerElement random_unit(int n, Sampler& rng) const {
    for (;;) {
      TowerElement x = random_integral(n, rng);
      PadicScalar sum = PadicScalar::zero(p(), prec());
      for (const auto& c : x.coeffs()) sum = sum + c;
      if (sum.valuation_or_prec() == 0) return x;
    }
  }

  int check_level(int n) const {
    if (n < 0 || n > max_level())
      throw DomainError("level " + std::to_string(n) + " outside [0, " + std::to_string(max_level()) + "]");
    return n;
  }

 private:
  void check_element(const TowerElement& x) const {
    check_level(x.level());
    if (!(x.shape() == shape(x.level()))) throw DomainError("element does not belong to this tower");
  }

  /// zeta-power coordinates of K_n -> rho_n-power blocks with K_0 entries (zeta_0 coordinates).
  std::vector<std::vector<mpz_class>> rho_blocks_from_zeta(int n, const std::vector<mpz_class>& v) const {
    const std::size_t e0 = degree(0);
    const std::size_t pn = relative_degree(n);
    // zeta^(q p^n + r) = zeta_0^q zeta^r, and zeta^r = (1 + rho)^r.
    std::vector<std::vector<mpz_class>> out(pn, std::vector<mpz_class>(e0));
    for (std::size_t r = 0; r < pn; ++r)
      for (std::size_t q = 0; q < e0; ++q) {
        const mpz_class& a = v[q * pn + r];
        if (sgn(a) == 0) continue;
        for (std::size_t i = 0; i <= r; ++i)
          mpz_addmul(out[i][q].get_mpz_t(), binomial(r, i).get_mpz_t(), a.get_mpz_t());
      }
    return out;
  }

  std::vector<mpz_class> zeta_from_rho_blocks(int n, const std::vector<std::vector<mpz_class>>& blocks) const {
    const std::size_t e0 = degree(0);
    const std::size_t pn = relative_degree(n);
    std::vector<mpz_class> v(e0 * pn);
    // rho^i = sum_r binom(i, r) (-1)^(i-r) zeta^r.
    for (std::size_t i = 0; i < pn; ++i)
      for (std::size_t q = 0; q < e0; ++q) {
        const mpz_class& x = blocks[i][q];
        if (sgn(x) == 0) continue;
        for (std::size_t r = 0; r <= i; ++r) {
          if ((i - r) % 2 == 0) mpz_addmul(v[q * pn + r].get_mpz_t(), binomial(i, r).get_mpz_t(), x.get_mpz_t());
          else mpz_submul(v[q * pn + r].get_mpz_t(), binomial(i, r).get_mpz_t(), x.get_mpz_t());
        }
      }
    return v;
  }

  std::vector<mpz_class> base_rho_from_zeta(const std::vector<mpz_class>& v) const {
    std::vector<mpz_class> out(v.size());
    for (std::size_t k = 0; k < v.size(); ++k)
      if (sgn(v[k]) != 0)
        for (std::size_t j = 0; j <= k; ++j) mpz_addmul(out[j].get_mpz_t(), binomial(k, j).get_mpz_t(), v[k].get_mpz_t());
    return out;
  }

  std::vector<mpz_class> base_zeta_from_rho(const std::vector<mpz_class>& r) const {
    return alternating_binomial_transform(r);
  }

  std::vector<mpz_class> alternating_binomial_transform(const std::vector<mpz_class>& r) const {
    std::vector<mpz_class> out(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (sgn(r[i]) == 0) continue;
      for (std::size_t k = 0; k <= i; ++k) {
        if ((i - k) % 2 == 0) mpz_addmul(out[k].get_mpz_t(), binomial(i, k).get_mpz_t(), r[i].get_mpz_t());
        else mpz_submul(out[k].get_mpz_t(), binomial(i, k).get_mpz_t(), r[i].get_mpz_t());
      }
    }
    return out;
  }

  TowerParams params_;
  std::shared_ptr<const std::vector<std::vector<mpz_class>>> binomials_;
};

}  // namespace cyclodiff
