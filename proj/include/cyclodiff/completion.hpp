#pragma once

// Finite model of the completion of K_inf for the lattice M = sum_n p^n O_{K_n}^perp:
// perpendicular series, the M-adic valuation w'_2, the decomposition y = sum p^n y_n,
// and the Galois flatness margins.

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cyclodiff/errors.hpp"
#include "cyclodiff/rational.hpp"
#include "cyclodiff/tower.hpp"

namespace cyclodiff {

struct PerpTerm {
  int n = 0;
  TowerElement x;  // in K_n^perp (K_0 for n = 0)
};

struct PerpSeries {
  std::vector<PerpTerm> terms;  // increasing n, nonzero terms only

  bool is_zero() const {
    for (const auto& t : terms)
      if (!t.x.is_zero()) return false;
    return true;
  }

  int top_level() const { return terms.empty() ? 0 : terms.back().n; }

  nlohmann::json to_json(const Tower& t) const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& term : terms) {
      auto j = term.x.to_json();
      arr.push_back({{"n", term.n}, {"coeffs", j["coeffs"]}});
    }
    auto margin = decay_margin(t);
    return {{"terms", arr},
            {"decay_margin", margin ? nlohmann::json(to_string(*margin)) : nlohmann::json(nullptr)},
            {"perpendicular", perpendicular(t)}};
  }

  static PerpSeries from_json(const Tower& t, const nlohmann::json& j) {
    PerpSeries s;
    for (const auto& term : j.at("terms")) {
      int n = term.at("n").get<int>();
      s.terms.push_back({n, t.parse_element({{"level", n}, {"coeffs", term.at("coeffs")}})});
    }
    s.validate(t);
    return s;
  }

  /// min_n (val(x_n) - n) over nonzero terms.
  std::optional<Rational> decay_margin(const Tower& t) const {
    std::optional<Rational> m;
    for (const auto& term : terms) {
      if (term.x.is_zero()) continue;
      Rational v = t.valuation(term.x) - Rational(term.n);
      if (!m || v < *m) m = v;
    }
    return m;
  }

  bool perpendicular(const Tower& t) const {
    for (const auto& term : terms)
      if (term.n > 0 && !t.normalized_trace(term.x, term.n - 1).is_zero()) return false;
    return true;
  }

  void validate(const Tower& t) const {
    for (std::size_t i = 0; i < terms.size(); ++i) {
      if (terms[i].x.level() != terms[i].n) throw DomainError("series term stored at the wrong level");
      if (i > 0 && terms[i].n <= terms[i - 1].n) throw DomainError("series terms must have increasing, distinct n");
    }
    if (!perpendicular(t)) throw DomainError("series term is not perpendicular");
  }
};

struct RComponent {
  int n = 0;
  TowerElement y;                      // p^-n R_n^perp(y)
  std::optional<Rational> valuation;   // nullopt for zero
};

struct RMembership {
  int slack = 0;
  bool accepted_strict = false;
  bool accepted = false;  // at `slack`
  std::optional<int> failing_level_strict;
  std::optional<int> failing_level;
  std::vector<RComponent> components;

  nlohmann::json to_json() const {
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : components)
      comps.push_back({{"n", c.n}, {"valuation", c.valuation ? nlohmann::json(to_string(*c.valuation)) : nlohmann::json(nullptr)}});
    auto opt = [](const std::optional<int>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    return {{"slack", slack}, {"accepted_strict", accepted_strict}, {"accepted", accepted},
            {"failing_level_strict", opt(failing_level_strict)}, {"failing_level", opt(failing_level)},
            {"components", comps}};
  }
};

struct FlatnessMargin {
  int k = 0;
  std::optional<Rational> margin;  // val((g_k - 1) y) - k; nullopt when (g_k - 1) y = 0

  nlohmann::json to_json() const {
    return {{"k", k}, {"margin", margin ? nlohmann::json(to_string(*margin)) : nlohmann::json("inf")}};
  }
};

class Completion {
 public:
  explicit Completion(const Tower& tower) : t_(tower) {}

  PerpSeries perp_series_decompose(const TowerElement& x) const {
    PerpSeries s;
    for (int n = 0; n <= x.level(); ++n) {
      TowerElement c = t_.perp_project(x, n);
      if (!c.is_zero()) s.terms.push_back({n, std::move(c)});
    }
    return s;
  }

  /// Sum of the terms at the largest level present.
  TowerElement series_reconstruct(const PerpSeries& s) const {
    s.validate(t_);
    const int top = s.top_level();
    TowerElement acc = t_.zero(top);
    for (const auto& term : s.terms) acc += t_.embed(term.x, top);
    return acc;
  }

  /// w'_2(x) = floor(min_n (val R_n^perp(x) - n)).
  std::int64_t w2_valuation(const TowerElement& x) const {
    if (x.is_zero()) throw ValuationOfZero("w'_2 of an element that is zero at precision");
    std::optional<Rational> m;
    for (int n = 0; n <= x.level(); ++n) {
      TowerElement c = t_.perp_project(x, n);
      if (c.is_zero()) continue;
      Rational v = t_.valuation(c) - Rational(n);
      if (!m || v < *m) m = v;
    }
    if (!m) throw InsufficientPrecision("every perpendicular component vanished at precision");
    return floor_of(*m);
  }

  /// y = sum_n p^n y_n with y_n = p^-n R_n^perp(y); accepted when every y_n has val >= -slack.
  RMembership membership_R(const TowerElement& y, int slack) const {
    RMembership out;
    out.slack = slack;
    for (int n = 0; n <= y.level(); ++n) {
      RComponent c{n, t_.perp_project(y, n).shifted(-n), std::nullopt};
      if (!c.y.is_zero()) {
        c.valuation = t_.valuation(c.y);
        if (*c.valuation < Rational(0) && !out.failing_level_strict) out.failing_level_strict = n;
        if (*c.valuation < Rational(-slack) && !out.failing_level) out.failing_level = n;
      }
      out.components.push_back(std::move(c));
    }
    out.accepted_strict = !out.failing_level_strict;
    out.accepted = !out.failing_level;
    return out;
  }

  /// Margins val((g_k - 1) y) - k for g_k = g_0^(p^k), k = 0..k_max.
  std::vector<FlatnessMargin> flatness_test(const TowerElement& y, int k_max) const {
    t_.check_level(k_max);
    std::vector<FlatnessMargin> out;
    for (int k = 0; k <= k_max; ++k) {
      TowerElement diff = t_.galois_apply(t_.generator(y.level(), k), y) - y;
      FlatnessMargin m{k, std::nullopt};
      if (!diff.is_zero()) m.margin = t_.valuation(diff) - Rational(k);
      out.push_back(m);
    }
    return out;
  }

  PerpSeries series_invert(const PerpSeries& s) const {
    TowerElement y = series_reconstruct(s);
    if (y.is_zero()) throw DivisionByZero("inverse of the zero series");
    return perp_series_decompose(t_.inverse(y));
  }

 private:
  const Tower& t_;
};

}  // namespace cyclodiff
