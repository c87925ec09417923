#pragma once

// Elements of Q_p at a capped absolute precision.
//
// A scalar is p^val * unit with the unit reduced modulo p^(prec - val); the
// value is known modulo p^prec. When the value is indistinguishable from
// zero at that precision the scalar is BOTTOM and only prec is meaningful.

#include <gmpxx.h>

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "cyclodiff/errors.hpp"

namespace cyclodiff {

inline constexpr int kDefaultPrecision = 60;

/// p^k for k >= 0. References stay valid for the lifetime of the thread.
inline const mpz_class& prime_power(unsigned p, int k) {
  thread_local std::unordered_map<unsigned, std::deque<mpz_class>> cache;
  if (k < 0) throw DomainError("negative exponent in prime_power");
  auto& powers = cache[p];
  if (powers.empty()) powers.emplace_back(1);
  while (static_cast<int>(powers.size()) <= k) powers.emplace_back(powers.back() * p);
  return powers[static_cast<std::size_t>(k)];
}

/// Strips every factor p from a nonzero z and returns how many were removed.
inline int remove_prime(mpz_class& z, unsigned p) {
  mpz_class prime(p);
  return static_cast<int>(mpz_remove(z.get_mpz_t(), z.get_mpz_t(), prime.get_mpz_t()));
}

/// v_p(z) for an integer, capped at `cap` (returned when z is divisible by p^cap).
inline int valuation_capped(const mpz_class& z, unsigned p, int cap) {
  if (sgn(z) == 0) return cap;
  if (p == 2) {
    auto v = static_cast<int>(mpz_scan1(z.get_mpz_t(), 0));
    return v < cap ? v : cap;
  }
  int v = 0;
  while (v < cap && mpz_divisible_p(z.get_mpz_t(), prime_power(p, v + 1).get_mpz_t())) ++v;
  return v;
}

inline mpz_class mod_prime_power(const mpz_class& z, unsigned p, int k) {
  mpz_class r;
  mpz_fdiv_r(r.get_mpz_t(), z.get_mpz_t(), prime_power(p, k).get_mpz_t());
  return r;
}

class PadicScalar {
 public:
  PadicScalar() = default;

  static PadicScalar zero(unsigned p, int prec) {
    PadicScalar z;
    z.p_ = p;
    z.prec_ = prec;
    return z;
  }

  /// The scalar p^shift * lift, known modulo p^prec.
  static PadicScalar from_lift(unsigned p, int shift, const mpz_class& lift, int prec) {
    PadicScalar out = zero(p, prec);
    int rel = prec - shift;
    if (rel <= 0) return out;
    mpz_class r = mod_prime_power(lift, p, rel);
    if (sgn(r) == 0) return out;
    int v = remove_prime(r, p);
    out.val_ = shift + v;
    out.unit_ = std::move(r);
    return out;
  }

  static PadicScalar from_integer(unsigned p, const mpz_class& z, int prec = kDefaultPrecision) {
    return from_lift(p, 0, z, prec);
  }

  static PadicScalar from_integer(unsigned p, long z, int prec = kDefaultPrecision) {
    return from_lift(p, 0, mpz_class(z), prec);
  }

  unsigned prime() const { return p_; }
  int prec() const { return prec_; }
  bool is_bottom() const { return !val_.has_value(); }
  std::optional<int> valuation() const { return val_; }
  /// The valuation, or prec for BOTTOM (a certified lower bound either way).
  int valuation_or_prec() const { return val_ ? *val_ : prec_; }
  const mpz_class& unit() const { return unit_; }

  bool is_integral() const { return val_ ? *val_ >= 0 : prec_ >= 0; }

  /// p^(val - shift) * unit as an integer; requires val >= shift. BOTTOM lifts to 0.
  mpz_class lift(int shift) const {
    if (!val_) return 0;
    if (*val_ < shift) throw DomainError("lift below the valuation");
    return unit_ * prime_power(p_, *val_ - shift);
  }

  PadicScalar operator-() const {
    if (!val_) return *this;
    PadicScalar out = *this;
    out.unit_ = prime_power(p_, prec_ - *val_) - unit_;
    return out;
  }

  friend PadicScalar operator+(const PadicScalar& a, const PadicScalar& b) {
    check_same_prime(a, b);
    int prec = std::min(a.prec_, b.prec_);
    if (!a.val_ && !b.val_) return zero(a.p_, prec);
    int shift = std::min(a.val_ ? *a.val_ : prec, b.val_ ? *b.val_ : prec);
    if (shift >= prec) return zero(a.p_, prec);
    mpz_class sum = a.lift_or_zero(shift) + b.lift_or_zero(shift);
    return from_lift(a.p_, shift, sum, prec);
  }

  friend PadicScalar operator-(const PadicScalar& a, const PadicScalar& b) { return a + (-b); }

  friend PadicScalar operator*(const PadicScalar& a, const PadicScalar& b) {
    check_same_prime(a, b);
    int prec = std::min(a.prec_ + b.valuation_or_prec(), b.prec_ + a.valuation_or_prec());
    if (!a.val_ || !b.val_) return zero(a.p_, prec);
    int val = *a.val_ + *b.val_;
    if (val >= prec) return zero(a.p_, prec);
    PadicScalar out = zero(a.p_, prec);
    out.val_ = val;
    out.unit_ = mod_prime_power(a.unit_ * b.unit_, a.p_, prec - val);
    return out;
  }

  /// Inverse to the remaining relative precision.
  PadicScalar inverse() const {
    if (!val_) throw DivisionByZero("inverse of a scalar that is zero at precision");
    int rel = prec_ - *val_;
    PadicScalar out = zero(p_, -*val_ + rel);
    out.val_ = -*val_;
    mpz_class modulus = prime_power(p_, rel);
    mpz_invert(out.unit_.get_mpz_t(), unit_.get_mpz_t(), modulus.get_mpz_t());
    return out;
  }

  friend PadicScalar operator/(const PadicScalar& a, const PadicScalar& b) {
    return a * b.inverse();
  }

  /// Multiplication by p^k, k of either sign.
  PadicScalar shifted(int k) const {
    PadicScalar out = *this;
    out.prec_ += k;
    if (out.val_) *out.val_ += k;
    return out;
  }

  /// Same value with the precision cap lowered to `prec` (never raised).
  PadicScalar truncated(int prec) const {
    if (prec >= prec_) return *this;
    if (!val_ || *val_ >= prec) return zero(p_, prec);
    PadicScalar out = *this;
    out.prec_ = prec;
    out.unit_ = mod_prime_power(unit_, p_, prec - *val_);
    return out;
  }

  /// Structural equality: same digits and same precision.
  friend bool operator==(const PadicScalar& a, const PadicScalar& b) {
    return a.p_ == b.p_ && a.prec_ == b.prec_ && a.val_ == b.val_ && a.unit_ == b.unit_;
  }

  /// Equality modulo the smaller of the two precisions.
  friend bool equal_at_precision(const PadicScalar& a, const PadicScalar& b) {
    return (a - b).is_bottom();
  }

  /// `p^v * u`, or `0` for BOTTOM.
  std::string to_string() const {
    if (!val_) return "0";
    return std::to_string(p_) + "^" + std::to_string(*val_) + " * " + unit_.get_str();
  }

  /// Inverse of to_string(); plain (signed) decimal integers are accepted as well.
  static PadicScalar parse(std::string_view text, unsigned p, int prec) {
    std::string s(text);
    auto trim = [](std::string t) {
      auto b = t.find_first_not_of(" \t");
      auto e = t.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : t.substr(b, e - b + 1);
    };
    s = trim(s);
    try {
      auto star = s.find('*');
      if (star == std::string::npos) return from_integer(p, mpz_class(s), prec);
      std::string head = trim(s.substr(0, star));
      std::string unit = trim(s.substr(star + 1));
      auto caret = head.find('^');
      if (caret == std::string::npos) throw UsageError("missing '^'");
      if (std::stoul(head.substr(0, caret)) != p) throw UsageError("prime mismatch");
      int v = std::stoi(head.substr(caret + 1));
      return from_lift(p, v, mpz_class(unit), prec);
    } catch (const UsageError& e) {
      throw UsageError("bad p-adic literal '" + s + "': " + e.what());
    } catch (const std::exception&) {
      throw UsageError("bad p-adic literal '" + s + "'");
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["p"] = p_;
    j["prec"] = prec_;
    j["unit"] = val_ ? unit_.get_str() : std::string("0");
    j["val"] = val_ ? nlohmann::json(*val_) : nlohmann::json(nullptr);
    return j;
  }

  static PadicScalar from_json(const nlohmann::json& j) {
    auto p = j.at("p").get<unsigned>();
    int prec = j.at("prec").get<int>();
    if (j.at("val").is_null()) return zero(p, prec);
    return from_lift(p, j.at("val").get<int>(), mpz_class(j.at("unit").get<std::string>()), prec);
  }

 private:
  static void check_same_prime(const PadicScalar& a, const PadicScalar& b) {
    if (a.p_ != b.p_) throw DomainError("scalars over different primes");
  }

  mpz_class lift_or_zero(int shift) const { return val_ ? lift(shift) : mpz_class(0); }

  unsigned p_ = 0;
  int prec_ = 0;
  std::optional<int> val_;
  mpz_class unit_ = 0;
};

}  // namespace cyclodiff
