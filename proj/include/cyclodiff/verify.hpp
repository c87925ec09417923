#pragma once

// Verification suites: each runs a family of exact checks on one tower and records
// every assertion with its witness data. Reports are pure functions of (tower, seed).

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cyclodiff/completion.hpp"
#include "cyclodiff/constants.hpp"
#include "cyclodiff/differentials.hpp"
#include "cyclodiff/errors.hpp"
#include "cyclodiff/lattice.hpp"
#include "cyclodiff/sampler.hpp"
#include "cyclodiff/tower.hpp"

namespace cyclodiff {

inline constexpr const char* kVersion = "0.1.0";

struct Assertion {
  std::string name;
  std::string claim;
  bool pass = false;
  nlohmann::json witness;

  nlohmann::json to_json() const { return {{"name", name}, {"claim", claim}, {"pass", pass}, {"witness", witness}}; }
};

struct SuiteReport {
  std::string suite;
  std::vector<Assertion> assertions;
  nlohmann::json data = nlohmann::json::object();

  bool passed() const {
    return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.pass; });
  }

  int failures() const {
    return static_cast<int>(std::count_if(assertions.begin(), assertions.end(), [](const Assertion& a) { return !a.pass; }));
  }

  const Assertion* find(const std::string& name) const {
    for (const auto& a : assertions)
      if (a.name == name) return &a;
    return nullptr;
  }

  void check(std::string name, std::string claim, bool pass, nlohmann::json witness = nullptr) {
    assertions.push_back({std::move(name), std::move(claim), pass, std::move(witness)});
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& a : assertions) arr.push_back(a.to_json());
    return {{"suite", suite}, {"passed", passed()}, {"failures", failures()}, {"assertions", arr}, {"data", data}};
  }
};

/// Sample counts per suite.
struct VerifyOptions {
  int norm_samples = kDefaultNormSamples;
  int trace_samples = 1000;
  int gamma_samples = 100;
  int fouvar_samples = 50;
  int nopdiv_samples = 20;
  int rnk2_samples = 100;
  int corpus_samples = 20;
  int shadow_samples = 100;
  int base_change_samples = 50;

  /// Every count replaced by n.
  static VerifyOptions uniform(int n) {
    if (n < 1) throw UsageError("sample count must be positive");
    return VerifyOptions{n, n, n, n, n, n, n, n, n};
  }
};

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"tatediff", "fonemb",  "rnbdd", "gaminv", "rhoval", "theorem-b",
                                                 "fouvar",   "nopdiv",  "base-change", "rnk2", "diffvec",
                                                 "theorem-a-shadow"};
  return names;
}

/// Envelope shared by every emitted report.
inline nlohmann::json report_envelope(const std::string& command, const TowerParams& params, std::uint64_t seed) {
  return {{"version", kVersion}, {"command", command}, {"tower", params.to_json()}, {"seed", seed}};
}

/// Canonical serialization: sorted keys, two-space indent, trailing newline.
inline std::string canonical_dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

inline void emit_report(const nlohmann::json& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << canonical_dump(report);
  out.flush();
  if (!out) throw IoError("write to " + path + " failed");
}

namespace detail {

inline nlohmann::json rat(const Rational& r) { return to_string(r); }
inline nlohmann::json rat(const std::optional<Rational>& r) { return r ? nlohmann::json(to_string(*r)) : nlohmann::json(nullptr); }

inline int vp(std::uint64_t k, unsigned p) {
  int v = 0;
  for (; k % p == 0; k /= p) ++v;
  return v;
}

}  // namespace detail

class Verifier {
 public:
  Verifier(const Tower& tower, std::uint64_t seed, VerifyOptions options = {})
      : t_(tower), diff_(tower), comp_(tower), seed_(seed), opt_(options) {}

  const Tower& tower() const { return t_; }
  const Differentials& differentials() const { return diff_; }
  std::uint64_t seed() const { return seed_; }

  const ConstantsReport& constants() {
    if (!constants_) constants_ = estimate_constants(t_, diff_, seed_, opt_.norm_samples);
    return *constants_;
  }

  SuiteReport run(const std::string& name) {
    static const std::map<std::string, SuiteReport (Verifier::*)()> table = {
        {"tatediff", &Verifier::tatediff},       {"fonemb", &Verifier::fonemb},
        {"rnbdd", &Verifier::rnbdd},             {"gaminv", &Verifier::gaminv},
        {"rhoval", &Verifier::rhoval},           {"theorem-b", &Verifier::theorem_b},
        {"fouvar", &Verifier::fouvar},           {"nopdiv", &Verifier::nopdiv},
        {"base-change", &Verifier::base_change}, {"rnk2", &Verifier::rnk2},
        {"diffvec", &Verifier::diffvec},         {"theorem-a-shadow", &Verifier::theorem_a_shadow}};
    auto it = table.find(name);
    if (it == table.end()) throw UsageError("unknown suite '" + name + "'");
    SuiteReport r = (this->*(it->second))();
    r.suite = name;
    return r;
  }

  // ---- different growth ---------------------------------------------------

  SuiteReport tatediff() {
    SuiteReport r;
    const unsigned p = t_.p();
    const Rational tame(1, static_cast<std::int64_t>(p) - 1);
    const Rational base_qp = Rational(t_.s()) - tame;
    const auto& c = constants();
    nlohmann::json per = nlohmann::json::array();
    for (int n = 0; n <= t_.max_level(); ++n) {
      Rational over_k0 = diff_.different(n).val_different;
      Rational over_qp = diff_.different_over_qp(n).val_different;
      Rational oracle = Rational(n + t_.s()) - tame;
      per.push_back({{"n", n}, {"over_k0", detail::rat(over_k0)}, {"over_qp", detail::rat(over_qp)}});
      r.check("different-level-" + std::to_string(n), "val d(K_n/K_0) = n", over_k0 == Rational(n),
              {{"n", n}, {"value", detail::rat(over_k0)}});
      r.check("conductor-discriminant-" + std::to_string(n),
              "val d(K_n/Q_p) = n + s - 1/(p-1) and the K_0-relative value is the difference",
              over_qp == oracle && over_k0 == oracle - base_qp,
              {{"n", n}, {"over_qp", detail::rat(over_qp)}, {"oracle", detail::rat(oracle)}});
      r.check("generator-valuation-" + std::to_string(n), "val g'(rho_n) equals the recorded different",
              t_.valuation(diff_.different(n).generator) == over_k0, {{"n", n}});
      Rational dev = over_k0 - Rational(n) - c.b;
      if (dev < Rational(0)) dev = -dev;
      r.check("drift-bound-" + std::to_string(n), "|val d(K_n/K_0) - n - b| <= p^-n a",
              dev * Rational(static_cast<std::int64_t>(t_.relative_degree(n))) <= c.a, {{"n", n}, {"deviation", detail::rat(dev)}});
      if (n > 0)
        r.check("unbounded-" + std::to_string(n), "different valuations strictly increase along the tower",
                over_k0 > diff_.different(n - 1).val_different, {{"n", n}});
    }
    r.data = {{"a", detail::rat(c.a)}, {"b", detail::rat(c.b)}, {"differents", per}};
    return r;
  }

  // ---- norm congruence ----------------------------------------------------

  SuiteReport fonemb() {
    SuiteReport r;
    const auto& c = constants();
    const unsigned p = t_.p();
    for (const auto& cell : c.norm_cells)
      r.check("norm-cell-" + std::to_string(cell.n) + "-" + std::to_string(cell.k),
              "val(N_{K_{n+k}/K_n}(x)/x^(p^k) - 1) > 0 on basis powers and sampled units", cell.value > Rational(0),
              {{"n", cell.n}, {"k", cell.k}, {"value", detail::rat(cell.value)}, {"witness", cell.witness}});
    TowerElement rho1 = t_.uniformizer(1);
    TowerElement gap = t_.embed(t_.uniformizer(0), 1) - rho1.pow(p);
    Rational direct = t_.valuation(gap) - Rational(p) * t_.valuation(rho1);
    r.check("witness-rho1", "the cell (0,1) at x = rho_1 equals val(rho_0 - rho_1^p) - p val(rho_1)",
            !c.norm_cells.empty() && c.norm_cells.front().n == 0 && c.norm_cells.front().k == 1 && c.norm_cells.front().value <= direct,
            {{"direct", detail::rat(direct)}});
    if (p == 3)
      r.check("witness-two-thirds", "for p = 3 the witness (0,1,rho_1) gives exactly 2/3", direct == Rational(2, 3),
              {{"value", detail::rat(direct)}});
    r.check("c-norm-minimum", "c_norm is the minimum over all cells and is positive",
            c.c_norm > Rational(0) && std::all_of(c.norm_cells.begin(), c.norm_cells.end(), [&](const NormCell& x) { return x.value >= c.c_norm; }),
            {{"c_norm", detail::rat(c.c_norm)}, {"n", c.c_norm_witness.n}, {"k", c.c_norm_witness.k}, {"x", c.c_norm_witness.witness}});
    Rational target(1, static_cast<std::int64_t>(p) - 1);
    Rational scaled = c.c_norm;
    for (int i = 0; i < c.m_c; ++i) scaled *= Rational(static_cast<std::int64_t>(p));
    r.check("m-c-minimal", "m_c is the least m >= 0 with p^m c_norm >= 1/(p-1)",
            scaled >= target && (c.m_c == 0 || scaled / Rational(static_cast<std::int64_t>(p)) < target), {{"m_c", c.m_c}});
    r.data = {{"c_norm", detail::rat(c.c_norm)}, {"m_c", c.m_c}, {"samples_per_cell", c.samples}};
    return r;
  }

  // ---- trace bound and perpendicular decomposition ------------------------

  SuiteReport rnbdd() {
    SuiteReport r;
    const auto& c = constants();
    for (const auto& cell : c.trace_cells) {
      if (cell.k == 0)
        r.check("identity-cell-" + std::to_string(cell.n), "c_2(n,0) = 0 since R_n is the identity on K_n", cell.value == Rational(0),
                {{"n", cell.n}, {"value", detail::rat(cell.value)}});
      r.check("cell-" + std::to_string(cell.n) + "-" + std::to_string(cell.k), "c_2(n,k) <= c_2*",
              cell.value <= Rational(c.c2_star), {{"n", cell.n}, {"k", cell.k}, {"value", detail::rat(cell.value)}});
    }
    Sampler rng(derive_seed(seed_, 3));
    int bound_violations = 0;
    int perp_violations = 0;
    int checked = 0;
    nlohmann::json first_bad = nullptr;
    for (int s = 0; s < opt_.trace_samples; ++s) {
      int m = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(t_.max_level())));
      TowerElement x = t_.random_integral(m, rng).shifted(static_cast<int>(rng.below(3)));
      if (x.is_zero()) continue;
      Rational vx = t_.valuation(x);
      for (int n = 0; n <= m; ++n) {
        ++checked;
        TowerElement perp = t_.perp_project(x, n);
        if (!perp.shifted(c.c2_star).is_integral()) {
          ++perp_violations;
          if (first_bad.is_null()) first_bad = {{"sample", s}, {"n", n}, {"kind", "perp"}};
        }
        TowerElement rn = t_.normalized_trace(x, n);
        if (!rn.is_zero() && t_.valuation(rn) < vx - cell_c2(c, n, m - n)) {
          ++bound_violations;
          if (first_bad.is_null()) first_bad = {{"sample", s}, {"n", n}, {"kind", "trace"}};
        }
      }
    }
    r.check("perp-containment", "R_n^perp(O_{K_m}) lies in p^-c_2* O_{K_n} on all samples", perp_violations == 0,
            {{"checked", checked}, {"violations", perp_violations}, {"first", first_bad}});
    r.check("trace-bound", "val R_n(x) >= val x - c_2(n, m-n) on all samples", bound_violations == 0,
            {{"checked", checked}, {"violations", bound_violations}});
    r.data = {{"c2_sup", detail::rat(c.c2_sup)}, {"c2_star", c.c2_star}, {"samples", opt_.trace_samples}};
    return r;
  }

  // ---- invertibility of 1 - g_n on perpendicular parts --------------------

  SuiteReport gaminv() {
    SuiteReport r;
    const auto& c = constants();
    const unsigned p = t_.p();
    const Rational c3(c.c3_star);
    for (const auto& cell : c.gamma_cells)
      r.check("cell-" + std::to_string(cell.n) + "-" + std::to_string(cell.k),
              "elementary divisors of 1 - g_n on O_{K_{n+k}}^perp are at most c_3*", cell.max_divisor <= c.c3_star,
              {{"n", cell.n}, {"k", cell.k}, {"max_divisor", cell.max_divisor}});
    int checked = 0;
    int violations = 0;
    Rational worst(-1000);
    for (int m = 1; m <= t_.max_level(); ++m)
      for (int n = 0; n < m; ++n) {
        GaloisElement g = t_.generator(m, n);
        for (std::size_t j = 1; j < t_.degree(m); ++j) {
          if (j % p == 0) continue;
          TowerElement x = t_.zeta_power(m, j);
          Rational gap = t_.valuation(x - t_.galois_apply(g, x)) - t_.valuation(x);
          ++checked;
          if (gap > c3) ++violations;
          if (gap > worst) worst = gap;
        }
      }
    r.check("basis", "val(x) >= val((1 - g_n) x) - c_3* for every perp-lattice basis vector, n + k <= L", violations == 0,
            {{"checked", checked}, {"violations", violations}, {"largest_gap", detail::rat(worst)}});
    Sampler rng(derive_seed(seed_, 4));
    int s_checked = 0;
    int s_viol = 0;
    Rational s_worst(-1000);
    for (int s = 0; s < opt_.gamma_samples; ++s) {
      int m = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(t_.max_level())));
      int n = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
      TowerElement x = t_.perp_project(t_.random_integral(m, rng), m);
      if (x.is_zero()) continue;
      Rational gap = t_.valuation(x - t_.galois_apply(t_.generator(m, n), x)) - t_.valuation(x);
      ++s_checked;
      if (gap > c3) ++s_viol;
      if (gap > s_worst) s_worst = gap;
    }
    r.check("samples", "val(x) >= val((1 - g_n) x) - c_3* on random perpendicular elements", s_viol == 0,
            {{"checked", s_checked}, {"violations", s_viol}, {"largest_gap", detail::rat(s_worst)}});
    r.data = {{"c3_star", c.c3_star}};
    return r;
  }

  // ---- rho congruence -----------------------------------------------------

  SuiteReport rhoval() {
    SuiteReport r;
    const auto& c = constants();
    const unsigned p = t_.p();
    const std::uint64_t kmax = static_cast<std::uint64_t>(p) * p * p;
    const int nmax = std::min(3, t_.max_level() - 1);
    int checked = 0;
    int violations = 0;
    nlohmann::json first_bad = nullptr;
    std::optional<Rational> base_case;
    for (int n = 0; n <= nmax; ++n) {
      TowerElement rho_hi = t_.uniformizer(n + 1);
      TowerElement rho_lo = t_.embed(t_.uniformizer(n), n + 1);
      TowerElement hi_p = rho_hi.pow(p);
      TowerElement hi = t_.one(n + 1);
      TowerElement lo = t_.one(n + 1);
      for (std::uint64_t k = 1; k <= kmax; ++k) {
        hi *= hi_p;
        lo *= rho_lo;
        TowerElement gap = hi - lo;
        ++checked;
        Rational need = Rational(detail::vp(k, p) - c.m_c);
        bool ok = t_.valuation_at_least(gap, need);
        if (!ok) {
          ++violations;
          if (first_bad.is_null()) first_bad = {{"n", n}, {"k", k}};
        }
        if (n == 0 && k == 1) base_case = t_.valuation(gap);
      }
    }
    r.check("congruence", "val(rho_{n+1}^(pk) - rho_n^k) >= val_p(k) - m_c for k <= p^3", violations == 0,
            {{"checked", checked}, {"violations", violations}, {"first", first_bad}, {"m_c", c.m_c}});
    if (p == 3)
      r.check("base-case", "for p = 3, val(rho_1^3 - rho_0) = 7/6", base_case && *base_case == Rational(7, 6),
              {{"value", detail::rat(base_case)}});
    r.data = {{"n_max", nmax}, {"k_max", kmax}};
    return r;
  }

  // ---- commensurability of the kernel and sum lattices ---------------------

  SuiteReport theorem_b() {
    SuiteReport r;
    const auto& c = constants();
    nlohmann::json per = nlohmann::json::array();
    for (int n = 1; n <= t_.max_level(); ++n) {
      const LatticeBasis& K = diff_.kernel_lattice(n);
      const LatticeBasis& B = diff_.theorem_b_lattice(n);
      Commensurability cm = commensurability_check(B, K);
      per.push_back({{"n", n}, {"c_plus", cm.c_plus}, {"c_minus", cm.c_minus}});
      r.check("commensurable-" + std::to_string(n),
              "p^c+ sum_m p^m O_{K_m} lies in O^{d=0} and p^c- O^{d=0} lies in the sum, with c+ <= n_0 and c- <= n_1",
              cm.c_plus <= c.n0 && cm.c_minus <= c.n1, cm.to_json());
      r.check("trivial-inclusion-" + std::to_string(n), "p^(n + n_0) O_{K_n} lies in O_{K_n}^{d=0}",
              K.contains_lattice(diff_.scaled_integers(n, n + c.n0)), {{"n", n}, {"n0", c.n0}});
      r.check("nested-" + std::to_string(n), "O_{K_{n-1}}^{d=0} embeds in O_{K_n}^{d=0}",
              embedded_kernel_contained(n), {{"n", n}});
    }
    if (t_.max_level() >= 1) {
      Commensurability one = commensurability_check(diff_.theorem_b_lattice(1), diff_.kernel_lattice(1));
      r.check("level-one-equal", "at n = 1 the two lattices coincide",
              one.c_plus == 0 && one.c_minus == 0 && diff_.kernel_lattice(1) == diff_.theorem_b_lattice(1), one.to_json());
    }
    Sampler rng(derive_seed(seed_, 6));
    int checked = 0;
    int mismatches = 0;
    for (int n = 1; n <= t_.max_level(); ++n)
      for (int s = 0; s < 10; ++s) {
        TowerElement x = t_.random_integral(n - 1, rng).shifted(static_cast<int>(rng.below(static_cast<std::uint64_t>(n) + 1)));
        bool lo = diff_.in_kernel(x);
        bool hi = diff_.in_kernel(t_.embed(x, n));
        bool lat = diff_.kernel_lattice(n).contains(diff_.coordinate_column(t_.embed(x, n)));
        ++checked;
        if (lo != hi || hi != lat) ++mismatches;
      }
    r.check("restriction", "O_{K_n}^{d=0} meets K_{n-1} in O_{K_{n-1}}^{d=0} on samples", mismatches == 0,
            {{"checked", checked}, {"mismatches", mismatches}});
    int inc_viol = 0;
    for (int n = 1; n < t_.max_level(); ++n) {
      std::vector<OmegaClass> samples;
      samples.push_back(diff_.d_map(t_.uniformizer(n)));
      for (int s = 0; s < 5; ++s) {
        TowerElement x = t_.random_integral(n, rng);
        OmegaClass w = diff_.d_map(x);
        if (!w.is_zero(t_)) samples.push_back(w);
      }
      InclusionReport rep = diff_.omega_inclusion_check(n, n + 1, samples);
      if (!rep.injective()) ++inc_viol;
    }
    r.check("omega-injective", "Omega_{O_{K_n}/O_{K_0}} -> Omega_{O_{K_{n+1}}/O_{K_0}} kills no sampled nonzero class",
            inc_viol == 0, {{"violations", inc_viol}});
    r.data = {{"n0", c.n0}, {"n1", c.n1}, {"levels", per}};
    return r;
  }

  // ---- constructive decomposition of the kernel ---------------------------

  SuiteReport fouvar() {
    SuiteReport r;
    const auto& c = constants();
    const int n = std::min(3, t_.max_level());
    const LatticeBasis& K = diff_.kernel_lattice(n);
    Sampler rng(derive_seed(seed_, 7));
    int verified = 0;
    int exact = 0;
    int total = 0;
    nlohmann::json first_bad = nullptr;
    auto run_one = [&](const TowerElement& x, const std::string& label) {
      FlatDecomposition dec = diff_.flat_decompose(x, c.n1);
      ++total;
      if (dec.all_verified()) ++verified;
      if (dec.reconstruction_exact) ++exact;
      if (!dec.all_verified() && first_bad.is_null()) first_bad = {{"label", label}, {"decomposition", dec.to_json()}};
      return dec;
    };
    FlatDecomposition ex = run_one(t_.uniformizer(n).shifted(n), "p^n rho_n");
    for (int s = 0; s < opt_.fouvar_samples; ++s) run_one(diff_.lattice_element(K, rng), "kernel#" + std::to_string(s));
    r.check("certificates", "every y_k lies in p^(n-k+1-n_1) O_{K_{n-k+1}} and the tail in O_{K_{n_1}}", verified == total,
            {{"n", n}, {"n1", c.n1}, {"total", total}, {"verified", verified}, {"first_failure", first_bad}});
    r.check("reconstruction", "y_1 + ... + y_{n-n_1} + tail = x exactly", exact == total, {{"total", total}, {"exact", exact}});
    r.check("example", "x = p^n rho_n decomposes with verified memberships", ex.all_verified(), ex.to_json());
    TowerElement low = t_.embed(t_.uniformizer(std::min(c.n1, n)).shifted(std::min(c.n1, n)), std::min(c.n1, n));
    FlatDecomposition triv = diff_.flat_decompose(low, c.n1);
    r.check("trivial", "x given at level <= n_1 has no y_k and tail x", triv.y.empty() && triv.tail == low && triv.all_verified(),
            {{"level", low.level()}});
    bool rejects = false;
    try {
      diff_.flat_decompose(t_.uniformizer(n), c.n1);
    } catch (const DomainError&) {
      rejects = true;
    }
    r.check("domain", "elements with dx != 0 are rejected", rejects);
    r.data = {{"n", n}, {"n1", c.n1}, {"samples", opt_.fouvar_samples}};
    return r;
  }

  // ---- p-divisibility of d(O) ----------------------------------------------

  SuiteReport nopdiv() {
    SuiteReport r;
    const auto& c = constants();
    const int M = t_.max_level();
    const int bound = c.n0 + c.n1 + c.c2_star;
    Sampler rng(derive_seed(seed_, 8));
    std::vector<std::pair<std::string, TowerElement>> xs;
    if (M >= 2) xs.push_back({"rho_1", t_.uniformizer(1)});
    while (static_cast<int>(xs.size()) < opt_.nopdiv_samples && M >= 2) {
      int m = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(M - 1)));
      TowerElement x = t_.random_integral(m, rng).shifted(static_cast<int>(rng.below(2)));
      if (!diff_.in_kernel(x)) xs.push_back({"sample#" + std::to_string(xs.size()), x});
    }
    int stable = 0;
    int within = 0;
    int worst = 0;
    nlohmann::json first_bad = nullptr;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& [label, x] : xs) {
      DivisibilityReport rep = diff_.divisibility_exponent(x, M);
      bool st = rep.stabilized_before_top();
      bool wi = rep.sup <= bound;
      stable += st;
      within += wi;
      worst = std::max(worst, rep.sup);
      if ((!st || !wi) && first_bad.is_null()) first_bad = {{"x", label}, {"report", rep.to_json()}};
      if (rows.size() < 5) rows.push_back({{"x", label}, {"report", rep.to_json()}});
    }
    const int total = static_cast<int>(xs.size());
    r.check("levels", "the stabilization check needs max_level >= 2", M >= 2, {{"max_level", M}});
    r.check("stabilizes", "sup_m i_max(m) is attained below the top level", M >= 2 && stable == total,
            {{"total", total}, {"stable", stable}, {"first_failure", first_bad}});
    r.check("bounded", "sup_m i_max(m) <= n_0 + n_1 + c_2*", M >= 2 && within == total,
            {{"total", total}, {"within", within}, {"bound", bound}, {"largest", worst}});
    r.data = {{"bound", bound}, {"max_level", M}, {"examples", rows}};
    return r;
  }

  // ---- base change Q_p vs K_0 ----------------------------------------------

  SuiteReport base_change() {
    SuiteReport r;
    const int top = std::min(2, t_.max_level());
    const int rr = static_cast<int>(ceil_of(diff_.different_over_qp(0).val_different));
    nlohmann::json per = nlohmann::json::array();
    for (int n = 0; n <= top; ++n) {
      Commensurability cm = commensurability_check(diff_.kernel_lattice_qp(n), diff_.kernel_lattice(n));
      per.push_back(cm.to_json());
      r.check("lattices-" + std::to_string(n), "O^{d'=0} over Q_p lies in O^{d=0} over K_0, which p^r pulls back inside it",
              cm.c_plus == 0 && cm.c_minus <= rr, cm.to_json());
    }
    Sampler rng(derive_seed(seed_, 12));
    int compat = 0;
    int killed = 0;
    int total = 0;
    for (int s = 0; s < opt_.base_change_samples; ++s) {
      int n = static_cast<int>(rng.below(static_cast<std::uint64_t>(top) + 1));
      BaseChangeReport b = diff_.base_change_compare(t_.random_integral(n, rng));
      ++total;
      compat += b.quotient_compatible;
      killed += b.kernel_killed;
    }
    r.check("quotient", "d over Q_p maps onto d over K_0 under the quotient", compat == total, {{"total", total}, {"compatible", compat}});
    r.check("kernel-killed", "the kernel of the quotient is killed by p^r", killed == total, {{"total", total}, {"killed", killed}, {"r", rr}});
    bool constants_ok = true;
    for (int n = 0; n <= top; ++n) {
      TowerElement x = t_.embed(t_.random_integral(0, rng), n);
      BaseChangeReport b = diff_.base_change_compare(x);
      constants_ok = constants_ok && b.over_k0.is_zero(t_) && b.kernel_killed && b.over_qp.rep.is_integral();
    }
    r.check("base-constants", "on O_{K_0}: d over K_0 vanishes, d over Q_p is integral and killed by p^r", constants_ok);
    bool rho_ok = true;
    for (int n = 1; n <= top; ++n) {
      BaseChangeReport b = diff_.base_change_compare(t_.uniformizer(n));
      rho_ok = rho_ok && !b.over_k0.is_zero(t_) && !b.over_qp.is_zero(t_) && b.quotient_compatible;
    }
    r.check("uniformizers", "d(rho_n) is nonzero over both bases and quotient-compatible", rho_ok);
    r.data = {{"r", rr}, {"levels", per}};
    return r;
  }

  // ---- perpendicular series ------------------------------------------------

  SuiteReport rnk2() {
    SuiteReport r;
    const int m = std::min(3, t_.max_level());
    Sampler rng(derive_seed(seed_, 10));
    int roundtrip = 0;
    int perp = 0;
    int unique = 0;
    int nonempty = 0;
    int lemma = 0;
    int total = 0;
    for (int s = 0; s < opt_.rnk2_samples; ++s) {
      TowerElement x = t_.random_integral(m, rng).shifted(static_cast<int>(rng.below(3)) - 1);
      if (x.is_zero()) continue;
      ++total;
      PerpSeries ser = comp_.perp_series_decompose(x);
      nonempty += !ser.terms.empty();
      perp += ser.perpendicular(t_);
      TowerElement back = t_.embed(comp_.series_reconstruct(ser), m);
      roundtrip += (back - x).is_zero();
      std::int64_t w = comp_.w2_valuation(x);
      bool ok = true;
      for (const auto& term : ser.terms) ok = ok && t_.valuation(term.x) >= Rational(w + term.n);
      lemma += ok;
      PerpSeries moved = ser;
      if (!moved.terms.empty()) {
        auto& term = moved.terms[rng.below(moved.terms.size())];
        TowerElement bump = t_.perp_project(t_.random_integral(term.n, rng), term.n);
        term.x += bump;
        moved.terms.erase(std::remove_if(moved.terms.begin(), moved.terms.end(), [](const PerpTerm& q) { return q.x.is_zero(); }),
                          moved.terms.end());
      }
      PerpSeries again = comp_.perp_series_decompose(t_.embed(comp_.series_reconstruct(moved), m));
      unique += same_terms(moved, again);
    }
    r.check("roundtrip", "reconstruct(decompose(x)) = x on random elements of K_" + std::to_string(m), roundtrip == total,
            {{"total", total}, {"exact", roundtrip}});
    r.check("perpendicular", "every term of decompose(x) lies in K_n^perp", perp == total, {{"total", total}, {"ok", perp}});
    r.check("uniqueness", "perturbing one term and re-decomposing recovers the perturbed terms", unique == total,
            {{"total", total}, {"ok", unique}});
    r.check("lemma-bound", "val R_n^perp(x) >= w'_2(x) + n", lemma == total, {{"total", total}, {"ok", lemma}});
    PerpSeries zero = comp_.perp_series_decompose(t_.zero(m));
    r.check("zero", "the zero element has the empty series and the empty series reconstructs to zero",
            zero.terms.empty() && zero.is_zero() && comp_.series_reconstruct(PerpSeries{}).is_zero() && nonempty == total,
            {{"nonzero_with_terms", nonempty}});
    r.data = {{"level", m}, {"samples", opt_.rnk2_samples}};
    return r;
  }

  // ---- flat vectors ---------------------------------------------------------

  SuiteReport diffvec() {
    SuiteReport r;
    const auto& c = constants();
    const int L = t_.max_level();
    const unsigned p = t_.p();
    Sampler rng(derive_seed(seed_, 11));

    std::vector<std::pair<std::string, TowerElement>> members;
    members.push_back({"one", t_.one(0)});
    {
      const int top = std::min(3, L);
      TowerElement y = t_.zero(top);
      for (int n = 0; n <= top; ++n) y += t_.embed(t_.uniformizer(n).shifted(n), top);
      members.push_back({"sum p^n rho_n", y});
    }
    for (int s = 0; s < opt_.corpus_samples; ++s) {
      int m = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(L)));
      TowerElement y = t_.zero(m);
      for (int n = 0; n <= m; ++n) y += t_.embed(t_.perp_project(t_.random_integral(n, rng), n).shifted(n), m);
      if (!y.is_zero()) members.push_back({"series#" + std::to_string(s), y});
    }

    int accepted = 0;
    int forward = 0;
    int forward_tight = 0;
    int finite = 0;
    nlohmann::json first_bad = nullptr;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& [label, y] : members) {
      RMembership mem = comp_.membership_R(y, c.c2_star);
      accepted += mem.accepted;
      auto margins = comp_.flatness_test(y, y.level());
      bool ok = true;
      bool tight = true;
      bool fin = true;
      for (const auto& mg : margins) {
        auto paper = min_component(mem, mg.k, true);
        auto strict = min_component(mem, mg.k, false);
        if (!mg.margin) continue;
        if (mg.k >= y.level()) fin = false;
        if (paper && *mg.margin < *paper) ok = false;
        if (strict && *mg.margin < *strict + Rational(1)) tight = false;
        if (!strict) tight = false;
      }
      forward += ok;
      forward_tight += tight;
      finite += fin;
      if ((!ok || !tight || !fin || !mem.accepted) && first_bad.is_null())
        first_bad = {{"y", label}, {"membership", mem.to_json()}, {"margins", margins_json(margins)}};
      if (rows.size() < 4) rows.push_back({{"y", label}, {"margins", margins_json(margins)}});
    }
    const int total = static_cast<int>(members.size());
    r.check("corpus-accepted", "every corpus element built as sum p^n y_n passes membership at slack c_2*", accepted == total,
            {{"total", total}, {"accepted", accepted}, {"first_failure", first_bad}});
    r.check("forward", "accepted y: val((g_k - 1) y) - k >= min_{n >= k} val(y_n)", forward == total,
            {{"total", total}, {"ok", forward}});
    r.check("forward-strict", "accepted y: val((g_k - 1) y) - k >= 1 + min_{n > k} val(y_n)", forward_tight == total,
            {{"total", total}, {"ok", forward_tight}});
    r.check("eventually-fixed", "accepted y at level m has infinite margins for k >= m", finite == total,
            {{"total", total}, {"ok", finite}});

    int conv_checked = 0;
    int conv_viol = 0;
    std::vector<TowerElement> converse_corpus;
    for (const auto& [label, y] : members) converse_corpus.push_back(y);
    for (int s = 0; s < opt_.corpus_samples; ++s)
      converse_corpus.push_back(t_.random_integral(1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(L))), rng));
    for (int m = 1; m <= L; ++m) converse_corpus.push_back(t_.zeta(m));
    for (const auto& y : converse_corpus)
      for (int n = 0; n + 1 <= y.level(); ++n) {
        TowerElement moved = y - t_.galois_apply(t_.generator(y.level(), n), y);
        TowerElement comp = t_.perp_project(y, n + 1);
        if (comp.is_zero()) continue;
        ++conv_checked;
        if (moved.is_zero() || t_.valuation(comp) < t_.valuation(moved) - Rational(c.c2_star + c.c3_star)) ++conv_viol;
      }
    r.check("converse", "val R_{n+1}^perp(y) >= val((1 - g_n) y) - c_2* - c_3*", conv_viol == 0,
            {{"checked", conv_checked}, {"violations", conv_viol}});

    nlohmann::json wit = nlohmann::json::array();
    bool witness_exact = true;
    bool slack_grows = true;
    const Rational tame(1, static_cast<std::int64_t>(p) - 1);
    for (int k = 0; k + 1 <= L; ++k) {
      TowerElement w = t_.zeta(k + 1);
      Rational v = t_.valuation(t_.galois_apply(t_.generator(k + 1, k), w) - w);
      wit.push_back({{"k", k}, {"val", detail::rat(v)}, {"margin", detail::rat(v - Rational(k))}});
      witness_exact = witness_exact && v == tame;
    }
    for (int m = 1; m <= L; ++m) slack_grows = slack_grows && required_slack(t_.zeta(m)) == m;
    r.check("witness-bounded", "val((g_k - 1) zeta_{p^(k+1+s)}) = 1/(p-1) for every k, so its margin 1/(p-1) - k is unbounded below",
            witness_exact, wit);
    r.check("witness-slack", "zeta_{p^(m+s)} needs membership slack exactly m", slack_grows);
    if (L >= 1) {
      auto mg = comp_.flatness_test(t_.zeta(1), 0);
      bool ok = mg[0].margin && *mg[0].margin == tame;
      if (p == 3) ok = ok && *mg[0].margin == Rational(1, 2);
      r.check("zeta-first-layer", "margin at k = 0 of zeta_{p^(1+s)} is 1/(p-1) (1/2 for p = 3)", ok, mg[0].to_json());
    }

    int inv_total = 0;
    int inv_member = 0;
    int inv_involution = 0;
    for (const auto& [label, y] : members) {
      if (t_.valuation(y) != Rational(0)) continue;
      ++inv_total;
      PerpSeries s = comp_.perp_series_decompose(y);
      PerpSeries inv = comp_.series_invert(s);
      TowerElement iy = comp_.series_reconstruct(inv);
      inv_member += comp_.membership_R(t_.embed(iy, y.level()), c.c2_star).accepted;
      TowerElement back = t_.embed(comp_.series_reconstruct(comp_.series_invert(inv)), y.level());
      inv_involution += (back - y).is_zero();
    }
    r.check("inverse-member", "1/y passes membership at slack c_2* for unit members y", inv_member == inv_total,
            {{"total", inv_total}, {"ok", inv_member}});
    r.check("inverse-involution", "invert(invert(y)) = y", inv_involution == inv_total, {{"total", inv_total}, {"ok", inv_involution}});
    if (L >= 1) {
      TowerElement y = t_.one(1) + t_.zeta(1).shifted(1);
      TowerElement inv = comp_.series_reconstruct(comp_.series_invert(comp_.perp_series_decompose(y)));
      TowerElement geo = t_.zero(1);
      TowerElement term = t_.one(1);
      TowerElement ratio = -t_.zeta(1).shifted(1);
      for (int j = 0; j <= t_.prec(); ++j, term *= ratio) geo += term;
      r.check("geometric", "1/(1 + p zeta_{p^(1+s)}) equals the geometric series at working precision",
              (t_.embed(inv, 1) - geo).is_zero());
    }
    r.data = {{"c2_star", c.c2_star}, {"c3_star", c.c3_star}, {"examples", rows}};
    return r;
  }

  // ---- w'_2 against val_p ---------------------------------------------------

  SuiteReport theorem_a_shadow() {
    SuiteReport r;
    const auto& c = constants();
    const int L = t_.max_level();
    nlohmann::json fam = nlohmann::json::array();
    std::optional<Rational> prev;
    bool grows = true;
    for (int m = 1; m <= L; ++m) {
      TowerElement z = t_.zeta(m).shifted(m);
      Rational v = t_.valuation(z);
      std::int64_t w = comp_.w2_valuation(z);
      Rational gap = v - Rational(w);
      fam.push_back({{"m", m}, {"val_p", detail::rat(v)}, {"w2", w}, {"gap", detail::rat(gap)}});
      if (prev && gap - *prev < Rational(1)) grows = false;
      prev = gap;
    }
    r.check("gap-grows", "val_p(p^m zeta_{p^(m+s)}) - w'_2 grows by at least 1 per level", grows && L >= 1, fam);

    Sampler rng(derive_seed(seed_, 13));
    int total = 0;
    int ultra = 0;
    int quasi = 0;
    int homog = 0;
    int dominated = 0;
    int ultra_total = 0;
    for (int s = 0; s < opt_.shadow_samples; ++s) {
      int m = static_cast<int>(rng.below(static_cast<std::uint64_t>(L) + 1));
      TowerElement x = t_.random_integral(m, rng).shifted(static_cast<int>(rng.below(3)));
      TowerElement y = t_.random_integral(m, rng).shifted(static_cast<int>(rng.below(3)));
      if (x.is_zero() || y.is_zero()) continue;
      ++total;
      std::int64_t wx = comp_.w2_valuation(x);
      std::int64_t wy = comp_.w2_valuation(y);
      TowerElement xy = x * y;
      if (xy.is_zero() || comp_.w2_valuation(xy) >= wx + wy - c.slack_C) ++quasi;
      TowerElement sum = x + y;
      if (!sum.is_zero()) {
        ++ultra_total;
        ultra += comp_.w2_valuation(sum) >= std::min(wx, wy);
      }
      int k = static_cast<int>(rng.below(4));
      homog += comp_.w2_valuation(x.shifted(k)) == wx + k;
      dominated += t_.valuation(x) >= Rational(wx);
    }
    r.check("quasi-multiplicative", "w'_2(xy) >= w'_2(x) + w'_2(y) - C", quasi == total,
            {{"total", total}, {"ok", quasi}, {"C", c.slack_C}});
    r.check("ultrametric", "w'_2(x + y) >= min(w'_2 x, w'_2 y)", ultra == ultra_total, {{"total", ultra_total}, {"ok", ultra}});
    r.check("homogeneous", "w'_2(p^k x) = k + w'_2(x)", homog == total, {{"total", total}, {"ok", homog}});
    r.check("dominated", "val_p(x) >= w'_2(x)", dominated == total, {{"total", total}, {"ok", dominated}});
    r.check("unit", "w'_2(1) = 0", comp_.w2_valuation(t_.one(0)) == 0);
    if (L >= 1 && t_.p() == 3) r.check("zeta-nine", "w'_2(zeta_9) = -1", comp_.w2_valuation(t_.zeta(1)) == -1);
    r.data = {{"C", c.slack_C}, {"family", fam}};
    return r;
  }

 private:
  static Rational cell_c2(const ConstantsReport& c, int n, int k) {
    for (const auto& cell : c.trace_cells)
      if (cell.n == n && cell.k == k) return cell.value;
    throw Error("internal: missing trace cell");
  }

  bool embedded_kernel_contained(int n) const {
    const LatticeBasis& lo = diff_.kernel_lattice(n - 1);
    const LatticeBasis& hi = diff_.kernel_lattice(n);
    for (const auto& col : lo.columns()) {
      std::vector<PadicScalar> coords;
      for (const auto& z : col) coords.push_back(PadicScalar::from_integer(t_.p(), z, t_.prec()));
      TowerElement x = t_.from_refined_coordinates(n - 1, coords);
      if (!hi.contains(diff_.coordinate_column(t_.embed(x, n)))) return false;
    }
    return true;
  }

  static bool same_terms(const PerpSeries& a, const PerpSeries& b) {
    if (a.terms.size() != b.terms.size()) return false;
    for (std::size_t i = 0; i < a.terms.size(); ++i)
      if (a.terms[i].n != b.terms[i].n || !(a.terms[i].x - b.terms[i].x).is_zero()) return false;
    return true;
  }

  /// min val(y_n) over components with n >= k (inclusive) or n > k.
  static std::optional<Rational> min_component(const RMembership& mem, int k, bool inclusive) {
    std::optional<Rational> m;
    for (const auto& comp : mem.components) {
      if (comp.n < k || (!inclusive && comp.n == k) || !comp.valuation) continue;
      if (!m || *comp.valuation < *m) m = comp.valuation;
    }
    return m;
  }

  int required_slack(const TowerElement& y) const {
    RMembership mem = comp_.membership_R(y, 0);
    Rational worst(0);
    for (const auto& c : mem.components)
      if (c.valuation && *c.valuation < worst) worst = *c.valuation;
    return static_cast<int>(ceil_of(-worst));
  }

  static nlohmann::json margins_json(const std::vector<FlatnessMargin>& ms) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& m : ms) a.push_back(m.to_json());
    return a;
  }

  const Tower& t_;
  Differentials diff_;
  Completion comp_;
  std::uint64_t seed_;
  VerifyOptions opt_;
  std::optional<ConstantsReport> constants_;
};

/// Full report for one suite, wrapped in the common envelope.
inline nlohmann::json suite_report_json(const Verifier& v, const SuiteReport& s) {
  nlohmann::json j = report_envelope("verify", v.tower().params(), v.seed());
  j["suite"] = s.to_json();
  j["passed"] = s.passed();
  return j;
}

}  // namespace cyclodiff
