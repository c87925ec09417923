#pragma once

// Elements of K_n = Q_p(zeta) with zeta a primitive p^(n+s)-th root of unity,
// stored in the power basis 1, zeta, ..., zeta^(phi-1). The power basis is an
// integral basis, so integrality is read off coefficientwise.

#include <gmpxx.h>

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cyclodiff/errors.hpp"
#include "cyclodiff/padic_scalar.hpp"

namespace cyclodiff {

inline std::uint64_t ipow(std::uint64_t base, int exp) {
  std::uint64_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

/// Shape of one layer: root-of-unity order p^(n+s), degree phi = (p-1) p^(n+s-1).
struct LevelShape {
  unsigned p = 3;
  int s = 1;
  int level = 0;

  std::uint64_t order() const { return ipow(p, level + s); }
  std::uint64_t half_step() const { return ipow(p, level + s - 1); }
  std::size_t degree() const { return static_cast<std::size_t>((p - 1) * half_step()); }

  friend bool operator==(const LevelShape&, const LevelShape&) = default;
};

namespace detail {

/// Coefficient vector as integers: coordinate k equals p^shift * v[k] modulo p^prec.
struct Lift {
  int shift = 0;
  int prec = 0;
  std::vector<mpz_class> v;
};

inline int min_precision(const std::vector<PadicScalar>& c) {
  int m = c.empty() ? kDefaultPrecision : c.front().prec();
  for (const auto& x : c) m = std::min(m, x.prec());
  return m;
}

/// Smallest valuation, BOTTOM entries counting as their precision.
inline int min_valuation(const std::vector<PadicScalar>& c) {
  int m = c.empty() ? kDefaultPrecision : c.front().valuation_or_prec();
  for (const auto& x : c) m = std::min(m, x.valuation_or_prec());
  return m;
}

inline Lift to_lift(unsigned p, const std::vector<PadicScalar>& c) {
  Lift out;
  out.prec = min_precision(c);
  out.shift = std::min(min_valuation(c), out.prec);
  out.v.resize(c.size());
  int rel = out.prec - out.shift;
  if (rel <= 0) return out;
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (c[k].is_bottom() || *c[k].valuation() >= out.prec) continue;
    out.v[k] = c[k].lift(out.shift);
  }
  (void)p;
  return out;
}

inline std::vector<PadicScalar> from_lift(unsigned p, const Lift& lift) {
  std::vector<PadicScalar> out;
  out.reserve(lift.v.size());
  for (const auto& x : lift.v) out.push_back(PadicScalar::from_lift(p, lift.shift, x, lift.prec));
  return out;
}

/// Reduces a polynomial in zeta with respect to Phi_{p^(n+s)}(zeta) = 0.
/// Accepts any length up to 2 * order.
inline void reduce_cyclotomic(std::vector<mpz_class>& poly, const LevelShape& shape) {
  const std::size_t phi = shape.degree();
  const std::size_t step = shape.half_step();
  const std::size_t top = (shape.p - 1) * step;  // zeta^top = -sum_{i<p-1} zeta^(i*step)
  for (std::size_t k = poly.size(); k-- > phi;) {
    if (sgn(poly[k]) == 0) continue;
    std::size_t base = k - top;
    for (unsigned i = 0; i + 1 < shape.p; ++i) poly[base + i * step] -= poly[k];
    poly[k] = 0;
  }
  poly.resize(phi);
}

}  // namespace detail

class TowerElement {
 public:
  TowerElement() = default;

  TowerElement(LevelShape shape, std::vector<PadicScalar> coeffs)
      : shape_(shape), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != shape_.degree())
      throw DomainError("coefficient vector of length " + std::to_string(coeffs_.size()) +
                        " at level " + std::to_string(shape_.level) + " (expected " +
                        std::to_string(shape_.degree()) + ")");
    for (const auto& c : coeffs_)
      if (c.prime() != shape_.p) throw DomainError("coefficient over the wrong prime");
  }

  static TowerElement zero(LevelShape shape, int prec) {
    return TowerElement(shape, std::vector<PadicScalar>(shape.degree(), PadicScalar::zero(shape.p, prec)));
  }

  static TowerElement constant(LevelShape shape, const PadicScalar& c) {
    TowerElement out = zero(shape, c.prec());
    out.coeffs_[0] = c;
    return out;
  }

  /// zeta^k for any k >= 0.
  static TowerElement zeta_power(LevelShape shape, std::uint64_t k, int prec) {
    std::vector<mpz_class> poly(shape.order());
    poly[k % shape.order()] = 1;
    detail::reduce_cyclotomic(poly, shape);
    detail::Lift lift{0, prec, std::move(poly)};
    return TowerElement(shape, detail::from_lift(shape.p, lift));
  }

  const LevelShape& shape() const { return shape_; }
  int level() const { return shape_.level; }
  unsigned prime() const { return shape_.p; }
  std::size_t degree() const { return coeffs_.size(); }
  const std::vector<PadicScalar>& coeffs() const { return coeffs_; }
  const PadicScalar& operator[](std::size_t k) const { return coeffs_[k]; }

  int min_prec() const { return detail::min_precision(coeffs_); }
  /// Minimum coefficient valuation in the power basis (not the field valuation).
  int min_coeff_valuation() const { return detail::min_valuation(coeffs_); }

  /// Zero at the working precision.
  bool is_zero() const {
    return std::all_of(coeffs_.begin(), coeffs_.end(), [](const auto& c) { return c.is_bottom(); });
  }

  /// Membership in the ring of integers Z_p[zeta].
  bool is_integral() const {
    return std::all_of(coeffs_.begin(), coeffs_.end(), [](const auto& c) { return c.is_integral(); });
  }

  /// Membership in p^k Z_p[zeta].
  bool is_divisible_by_prime_power(int k) const {
    return std::all_of(coeffs_.begin(), coeffs_.end(),
                       [k](const auto& c) { return c.valuation_or_prec() >= k; });
  }

  TowerElement operator-() const {
    TowerElement out = *this;
    for (auto& c : out.coeffs_) c = -c;
    return out;
  }

  friend TowerElement operator+(const TowerElement& a, const TowerElement& b) {
    a.check_compatible(b);
    TowerElement out = a;
    for (std::size_t k = 0; k < out.coeffs_.size(); ++k) out.coeffs_[k] = a.coeffs_[k] + b.coeffs_[k];
    return out;
  }

  friend TowerElement operator-(const TowerElement& a, const TowerElement& b) { return a + (-b); }

  TowerElement& operator+=(const TowerElement& b) { return *this = *this + b; }
  TowerElement& operator-=(const TowerElement& b) { return *this = *this - b; }

  friend TowerElement operator*(const TowerElement& a, const TowerElement& b) {
    a.check_compatible(b);
    const unsigned p = a.prime();
    detail::Lift la = detail::to_lift(p, a.coeffs_);
    detail::Lift lb = detail::to_lift(p, b.coeffs_);
    detail::Lift out;
    out.shift = la.shift + lb.shift;
    out.prec = std::min(la.prec + b.min_coeff_valuation(), lb.prec + a.min_coeff_valuation());
    const std::size_t n = la.v.size();
    std::vector<mpz_class> prod(2 * n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      if (sgn(la.v[i]) == 0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (sgn(lb.v[j]) == 0) continue;
        mpz_addmul(prod[i + j].get_mpz_t(), la.v[i].get_mpz_t(), lb.v[j].get_mpz_t());
      }
    }
    detail::reduce_cyclotomic(prod, a.shape_);
    out.v = std::move(prod);
    return TowerElement(a.shape_, detail::from_lift(p, out));
  }

  TowerElement& operator*=(const TowerElement& b) { return *this = *this * b; }

  friend TowerElement operator*(const PadicScalar& c, const TowerElement& x) {
    TowerElement out = x;
    for (auto& coeff : out.coeffs_) coeff = c * coeff;
    return out;
  }

  /// Multiplication by p^k.
  TowerElement shifted(int k) const {
    TowerElement out = *this;
    for (auto& c : out.coeffs_) c = c.shifted(k);
    return out;
  }

  TowerElement truncated(int prec) const {
    TowerElement out = *this;
    for (auto& c : out.coeffs_) c = c.truncated(prec);
    return out;
  }

  TowerElement pow(std::uint64_t e) const {
    TowerElement result = constant(shape_, PadicScalar::from_integer(prime(), 1, min_prec()));
    TowerElement base = *this;
    while (e > 0) {
      if (e & 1) result *= base;
      e >>= 1;
      if (e) base *= base;
    }
    return result;
  }

  /// Equality modulo the working precision of both operands.
  friend bool equal_at_precision(const TowerElement& a, const TowerElement& b) {
    return (a - b).is_zero();
  }

  friend bool operator==(const TowerElement& a, const TowerElement& b) {
    return a.shape_ == b.shape_ && a.coeffs_ == b.coeffs_;
  }

  nlohmann::json to_json() const {
    nlohmann::json coeffs = nlohmann::json::array();
    for (const auto& c : coeffs_) coeffs.push_back(c.to_string());
    return {{"level", level()}, {"coeffs", coeffs}};
  }

  std::string to_string() const {
    std::string out;
    for (std::size_t k = 0; k < coeffs_.size(); ++k) {
      if (coeffs_[k].is_bottom()) continue;
      if (!out.empty()) out += " + ";
      out += "(" + coeffs_[k].to_string() + ")*z^" + std::to_string(k);
    }
    return out.empty() ? "0" : out;
  }

 private:
  void check_compatible(const TowerElement& b) const {
    if (!(shape_ == b.shape_))
      throw DomainError("tower elements at different levels (" + std::to_string(level()) + " vs " +
                        std::to_string(b.level()) + ")");
  }

  LevelShape shape_;
  std::vector<PadicScalar> coeffs_;
};

}  // namespace cyclodiff
