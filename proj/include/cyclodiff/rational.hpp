#pragma once

#include <boost/rational.hpp>

#include <cstdint>
#include <string>
#include <string_view>

#include "cyclodiff/errors.hpp"

namespace cyclodiff {

/// Exact valuations. Denominators divide the ramification index of the level in use.
using Rational = boost::rational<std::int64_t>;

inline std::int64_t floor_of(const Rational& r) {
  std::int64_t q = r.numerator() / r.denominator();
  if (r.numerator() % r.denominator() != 0 && r.numerator() < 0) --q;
  return q;
}

inline std::int64_t ceil_of(const Rational& r) {
  std::int64_t q = r.numerator() / r.denominator();
  if (r.numerator() % r.denominator() != 0 && r.numerator() > 0) ++q;
  return q;
}

inline std::string to_string(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

inline Rational parse_rational(std::string_view text) {
  try {
    auto slash = text.find('/');
    if (slash == std::string_view::npos) return Rational(std::stoll(std::string(text)));
    return Rational(std::stoll(std::string(text.substr(0, slash))),
                    std::stoll(std::string(text.substr(slash + 1))));
  } catch (const std::exception&) {
    throw UsageError("not a rational: '" + std::string(text) + "'");
  }
}

}  // namespace cyclodiff
