#pragma once

// Kähler differentials of the tower: Omega = O_{K_n} / different * d(rho_n),
// the derivation d, the lattice of d-closed integers and its comparison with
// sum_m p^m O_{K_m}, and the telescoping decomposition of d-closed elements.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cyclodiff/errors.hpp"
#include "cyclodiff/lattice.hpp"
#include "cyclodiff/rational.hpp"
#include "cyclodiff/tower.hpp"

namespace cyclodiff {

enum class Base { K0, Qp };

inline std::string to_string(Base b) { return b == Base::K0 ? "K0" : "Qp"; }

struct DifferentData {
  int level = 0;
  Base base = Base::K0;
  Rational val_different;
  TowerElement generator;

  nlohmann::json to_json() const {
    return {{"level", level}, {"base", to_string(base)}, {"val_different", to_string(val_different)},
            {"generator", generator.to_json()}};
  }
};

/// rep * d(rho_n) modulo the different.
struct OmegaClass {
  int level = 0;
  Base base = Base::K0;
  TowerElement rep;
  Rational val_different;

  /// Ties (val(rep) = val(different)) are the zero class.
  bool is_zero(const Tower& t) const { return t.valuation_at_least(rep, val_different); }

  OmegaClass scaled(const TowerElement& x) const { return OmegaClass{level, base, x * rep, val_different}; }

  friend OmegaClass operator+(const OmegaClass& a, const OmegaClass& b) {
    a.check(b);
    return OmegaClass{a.level, a.base, a.rep + b.rep, a.val_different};
  }
  friend OmegaClass operator-(const OmegaClass& a, const OmegaClass& b) {
    a.check(b);
    return OmegaClass{a.level, a.base, a.rep - b.rep, a.val_different};
  }

  bool equals(const Tower& t, const OmegaClass& b) const { return (*this - b).is_zero(t); }

  void check(const OmegaClass& b) const {
    if (level != b.level || base != b.base) throw DomainError("differential classes of different modules");
  }

  nlohmann::json to_json() const {
    return {{"level", level}, {"base", to_string(base)}, {"rep", rep.to_json()},
            {"val_different", to_string(val_different)}};
  }
};

struct AnnihilatorResult {
  bool divides = false;
  std::optional<TowerElement> witness;  // omega2 = witness * omega1
};

struct InclusionReport {
  int from_level = 0;
  int to_level = 0;
  int checked = 0;
  int violations = 0;
  Rational transition_valuation;

  bool injective() const { return violations == 0; }
  nlohmann::json to_json() const {
    return {{"from_level", from_level}, {"to_level", to_level}, {"checked", checked},
            {"violations", violations}, {"transition_valuation", to_string(transition_valuation)}};
  }
};

struct BaseChangeReport {
  OmegaClass over_qp;
  OmegaClass over_k0;
  bool quotient_compatible = false;
  int r = 0;
  bool kernel_killed = false;

  nlohmann::json to_json() const {
    return {{"over_qp", over_qp.to_json()}, {"over_k0", over_k0.to_json()},
            {"quotient_compatible", quotient_compatible}, {"r", r}, {"kernel_killed", kernel_killed}};
  }
};

struct MembershipCertificate {
  int index = 0;           // k for y_k; 0 for the tail
  int level = 0;
  int claimed_exponent = 0;  // y in p^claimed O_{K_level}
  std::optional<Rational> valuation;  // nullopt for zero
  bool verified = false;

  nlohmann::json to_json() const {
    return {{"index", index}, {"level", level}, {"claimed_membership", "p^" + std::to_string(claimed_exponent) + " O_K" + std::to_string(level)},
            {"valuation", valuation ? nlohmann::json(to_string(*valuation)) : nlohmann::json(nullptr)},
            {"verified", verified}};
  }
};

struct FlatDecomposition {
  int n1 = 0;
  std::vector<TowerElement> y;  // y[k-1] at level n - k + 1
  TowerElement tail;
  std::vector<MembershipCertificate> certificates;
  bool reconstruction_exact = false;

  bool all_verified() const {
    if (!reconstruction_exact) return false;
    for (const auto& c : certificates)
      if (!c.verified) return false;
    return true;
  }

  nlohmann::json to_json() const {
    nlohmann::json ys = nlohmann::json::array();
    for (const auto& e : y) ys.push_back(e.to_json());
    nlohmann::json certs = nlohmann::json::array();
    for (const auto& c : certificates) certs.push_back(c.to_json());
    return {{"n1", n1}, {"y", ys}, {"tail", tail.to_json()}, {"certificates", certs},
            {"reconstruction_exact", reconstruction_exact}, {"verified", all_verified()}};
  }
};

struct DivisibilityReport {
  std::map<int, int> i_max;  // level -> largest i with dx in p^i d(O_{K_level})
  int sup = 0;
  int stabilized_at = 0;     // first level attaining sup
  int max_level = 0;

  bool stabilized_before_top() const { return stabilized_at < max_level; }

  nlohmann::json to_json() const {
    nlohmann::json per = nlohmann::json::object();
    for (auto [m, i] : i_max) per[std::to_string(m)] = i;
    return {{"i_max", per}, {"sup", sup}, {"stabilized_at", stabilized_at}, {"max_level", max_level}};
  }
};

class Differentials {
 public:
  explicit Differentials(const Tower& tower) : t_(tower) {}

  const Tower& tower() const { return t_; }

  // ---- the different ------------------------------------------------------

  /// Coefficients (in K_0) of the minimal polynomial of rho_n over K_0, as the
  /// product of X - sigma(rho_n) over Gal(K_n/K_0). Certified Eisenstein.
  const std::vector<TowerElement>& minimal_polynomial(int n) const {
    t_.check_level(n);
    auto it = minpoly_.find(n);
    if (it != minpoly_.end()) return it->second;
    const TowerElement rho = t_.uniformizer(n);
    std::vector<TowerElement> poly{t_.one(n)};  // ascending
    for (std::uint64_t a : t_.relative_conjugate_units(n, 0)) {
      TowerElement root = t_.apply_unit(a, rho);
      std::vector<TowerElement> next(poly.size() + 1, t_.zero(n));
      for (std::size_t i = 0; i < poly.size(); ++i) {
        next[i + 1] += poly[i];
        next[i] -= root * poly[i];
      }
      poly = std::move(next);
    }
    std::vector<TowerElement> coeffs;
    for (const auto& c : poly) coeffs.push_back(t_.restrict_to(c, 0));
    certify_eisenstein(coeffs, n);
    return minpoly_.emplace(n, std::move(coeffs)).first->second;
  }

  /// The different of K_n/K_0, generated by g'(rho_n).
  const DifferentData& different(int n) const {
    auto it = different_.find(n);
    if (it != different_.end()) return it->second;
    const auto& g = minimal_polynomial(n);
    const TowerElement rho = t_.uniformizer(n);
    TowerElement acc = t_.zero(n);
    for (std::size_t i = g.size() - 1; i >= 1; --i) {
      TowerElement c = t_.embed(g[i], n) * t_.integer(n, static_cast<long>(i));
      acc = acc * rho + c;
    }
    DifferentData out{n, Base::K0, t_.valuation(acc), acc};
    return different_.emplace(n, std::move(out)).first->second;
  }

  /// The different of K_n/Q_p, generated by the product of rho_n - sigma(rho_n) over sigma != 1.
  const DifferentData& different_over_qp(int n) const {
    auto it = different_qp_.find(n);
    if (it != different_qp_.end()) return it->second;
    t_.check_level(n);
    const TowerElement rho = t_.uniformizer(n);
    const std::uint64_t order = t_.shape(n).order();
    TowerElement acc = t_.one(n);
    for (std::uint64_t a = 2; a < order; ++a)
      if (a % t_.p() != 0) acc *= rho - t_.apply_unit(a, rho);
    DifferentData out{n, Base::Qp, t_.valuation(acc), acc};
    return different_qp_.emplace(n, std::move(out)).first->second;
  }

  Rational different_valuation(int n, Base base) const {
    return base == Base::K0 ? different(n).val_different : different_over_qp(n).val_different;
  }

  // ---- the derivation -----------------------------------------------------

  /// dx over K_0: the class of sum_i i x_i rho_n^(i-1).
  OmegaClass d_map(const TowerElement& x) const {
    require_integral(x);
    const int n = x.level();
    RhoExpansion r = t_.to_rho_basis(x);
    RhoExpansion dr{n, std::vector<TowerElement>(r.coeffs.size(), t_.zero(0))};
    for (std::size_t i = 1; i < r.coeffs.size(); ++i)
      dr.coeffs[i - 1] = t_.integer(0, static_cast<long>(i)) * r.coeffs[i];
    return OmegaClass{n, Base::K0, t_.from_rho_basis(dr), different(n).val_different};
  }

  /// dx over Q_p, from the Z_p-coordinates in the basis rho_n^k.
  OmegaClass d_map_qp(const TowerElement& x) const {
    require_integral(x);
    const int n = x.level();
    auto c = t_.qp_rho_coordinates(x);
    std::vector<PadicScalar> dc(c.size(), PadicScalar::zero(t_.p(), x.min_prec()));
    for (std::size_t k = 1; k < c.size(); ++k)
      dc[k - 1] = PadicScalar::from_integer(t_.p(), static_cast<long>(k), t_.prec()) * c[k];
    return OmegaClass{n, Base::Qp, t_.from_qp_rho_coordinates(n, dc), different_over_qp(n).val_different};
  }

  OmegaClass d_map(const TowerElement& x, Base base) const { return base == Base::K0 ? d_map(x) : d_map_qp(x); }

  /// d(rho_n) / d(rho_m) = p^(m-n) zeta_m^(p^(m-n) - 1) for n <= m.
  TowerElement transition_factor(int n, int m) const {
    std::uint64_t q = t_.relative_degree(m - n);
    return t_.zeta_power(m, q - 1).shifted(m - n);
  }

  /// The image of a class at level n in Omega at level m.
  OmegaClass transport(const OmegaClass& w, int m) const {
    if (w.base != Base::K0) throw DomainError("transport is defined over K_0");
    return OmegaClass{m, Base::K0, t_.embed(w.rep, m) * transition_factor(w.level, m), different(m).val_different};
  }

  /// Whether Ann(omega1) is contained in Ann(omega2), with omega2 = x omega1 on success.
  AnnihilatorResult annihilator_divides(const OmegaClass& w1, const OmegaClass& w2) const {
    w1.check(w2);
    if (w1.rep.is_zero() || w2.rep.is_zero())
      throw InsufficientPrecision("annihilator test on a representative that is zero at precision");
    Rational v1 = t_.valuation(w1.rep);
    Rational v2 = t_.valuation(w2.rep);
    if (v2 >= v1) return {true, t_.divide(w2.rep, w1.rep)};
    if (v2 >= w2.val_different) return {true, t_.zero(w1.level)};
    return {false, std::nullopt};
  }

  /// Injectivity of Omega_n -> Omega_m on the given classes (nonzero stays nonzero, zero stays zero).
  InclusionReport omega_inclusion_check(int n, int m, const std::vector<OmegaClass>& samples) const {
    if (m <= n) throw DomainError("omega_inclusion_check needs m > n");
    InclusionReport rep{n, m, 0, 0, t_.valuation(transition_factor(n, m))};
    for (const auto& w : samples) {
      if (w.level != n) throw DomainError("sample class at the wrong level");
      bool before = w.is_zero(t_);
      bool after = transport(w, m).is_zero(t_);
      ++rep.checked;
      if (before != after) ++rep.violations;
    }
    return rep;
  }

  /// Omega over Q_p maps onto Omega over K_0; the kernel is killed by p^r, r = ceil(val different(K_0/Q_p)).
  BaseChangeReport base_change_compare(const TowerElement& x) const {
    const int n = x.level();
    BaseChangeReport out{d_map_qp(x), d_map(x), false, static_cast<int>(ceil_of(different_over_qp(0).val_different)), false};
    TowerElement diff = out.over_qp.rep - out.over_k0.rep;
    out.quotient_compatible = t_.valuation_at_least(diff, different(n).val_different);
    out.kernel_killed = t_.valuation_at_least(diff.shifted(out.r), different_over_qp(n).val_different);
    return out;
  }

  // ---- lattices -----------------------------------------------------------

  /// Z_p-coordinates of an integral element in the basis rho_0^j rho_n^i.
  Column coordinate_column(const TowerElement& x) const {
    require_integral(x);
    auto c = t_.refined_coordinates(x);
    Column out(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) {
      if (c[k].prec() < t_.prec())
        throw InsufficientPrecision("coordinate known only modulo p^" + std::to_string(c[k].prec()));
      out[k] = c[k].lift(0);
    }
    return out;
  }

  /// Exponents t_i with kernel = sum_i rho_0^(t_i) O_{K_0} rho_n^i.
  std::vector<int> kernel_exponents(int n) const {
    const Rational D = different(n).val_different;
    const std::int64_t e0 = static_cast<std::int64_t>(t_.degree(0));
    const std::int64_t en = static_cast<std::int64_t>(t_.degree(n));
    std::vector<int> out(t_.relative_degree(n), 0);
    for (std::size_t i = 1; i < out.size(); ++i) {
      Rational need = D - Rational(vp(i)) - Rational(static_cast<std::int64_t>(i) - 1, en);
      out[i] = static_cast<int>(std::max<std::int64_t>(0, ceil_of(need * e0)));
    }
    return out;
  }

  /// O_{K_n}^{d=0} over K_0.
  const LatticeBasis& kernel_lattice(int n) const {
    auto it = kernel_.find(n);
    if (it != kernel_.end()) return it->second;
    auto exps = kernel_exponents(n);
    const std::size_t e0 = t_.degree(0);
    const std::size_t d = t_.degree(n);
    std::vector<Column> gens;
    TowerElement rho0 = t_.uniformizer(0);
    for (std::size_t i = 0; i < exps.size(); ++i)
      for (std::size_t j = 0; j < e0; ++j) {
        auto block = coordinate_column(rho0.pow(static_cast<std::uint64_t>(exps[i]) + j));
        Column c(d);
        for (std::size_t q = 0; q < e0; ++q) c[i * e0 + q] = block[q];
        gens.push_back(std::move(c));
      }
    auto L = LatticeBasis::from_generators(t_.p(), n, t_.prec(), d, std::move(gens));
    return kernel_.emplace(n, std::move(L)).first->second;
  }

  /// O_{K_n}^{d=0} over Q_p: sum_k p^(t_k) Z_p rho_n^k.
  LatticeBasis kernel_lattice_qp(int n) const {
    const Rational D = different_over_qp(n).val_different;
    const std::int64_t en = static_cast<std::int64_t>(t_.degree(n));
    const std::size_t d = t_.degree(n);
    std::vector<Column> gens;
    TowerElement power = t_.one(n);
    const TowerElement rho = t_.uniformizer(n);
    for (std::size_t k = 0; k < d; ++k) {
      int tk = 0;
      if (k > 0) {
        Rational need = D - Rational(vp(k)) - Rational(static_cast<std::int64_t>(k) - 1, en);
        tk = static_cast<int>(std::max<std::int64_t>(0, ceil_of(need)));
      }
      gens.push_back(coordinate_column(power.shifted(tk)));
      power *= rho;
    }
    return LatticeBasis::from_generators(t_.p(), n, t_.prec(), d, std::move(gens));
  }

  /// sum_{m <= n} p^m O_{K_m}, generated by p^m rho_0^j rho_m^i.
  const LatticeBasis& theorem_b_lattice(int n) const {
    auto it = theorem_b_.find(n);
    if (it != theorem_b_.end()) return it->second;
    t_.check_level(n);
    const std::size_t e0 = t_.degree(0);
    std::vector<TowerElement> base;
    TowerElement rho0 = t_.embed(t_.uniformizer(0), n);
    for (std::size_t j = 0; j < e0; ++j) base.push_back(rho0.pow(j));
    std::vector<Column> gens;
    for (int m = 0; m <= n; ++m) {
      TowerElement rho_m = t_.embed(t_.uniformizer(m), n);
      TowerElement power = t_.one(n);
      for (std::uint64_t i = 0; i < t_.relative_degree(m); ++i) {
        for (const auto& b : base) gens.push_back(coordinate_column((b * power).shifted(m)));
        power *= rho_m;
      }
    }
    auto L = LatticeBasis::from_generators(t_.p(), n, t_.prec(), t_.degree(n), std::move(gens));
    return theorem_b_.emplace(n, std::move(L)).first->second;
  }

  /// p^c O_{K_n} as a lattice.
  LatticeBasis scaled_integers(int n, int c) const {
    return LatticeBasis::diagonal(t_.p(), n, t_.prec(), std::vector<int>(t_.degree(n), c));
  }

  TowerElement lattice_element(const LatticeBasis& L, Sampler& rng) const {
    const std::size_t d = L.dimension();
    std::vector<PadicScalar> coords(d, PadicScalar::zero(t_.p(), t_.prec()));
    Column acc(d);
    for (const auto& col : L.columns()) {
      mpz_class c = rng.residue(t_.p(), t_.prec());
      for (std::size_t i = 0; i < d; ++i) acc[i] += c * col[i];
    }
    for (std::size_t i = 0; i < d; ++i) coords[i] = PadicScalar::from_integer(t_.p(), acc[i], t_.prec());
    return t_.from_refined_coordinates(L.level(), coords);
  }

  bool in_kernel(const TowerElement& x) const { return d_map(x).is_zero(t_); }

  // ---- decomposition and divisibility ------------------------------------

  /// x = y_1 + ... + y_{n-n1} + tail with y_k in p^(n-k+1-n1) O_{K_{n-k+1}}, tail in O_{K_{n1}}.
  FlatDecomposition flat_decompose(const TowerElement& x, int n1) const {
    if (!in_kernel(x)) throw DomainError("flat_decompose: dx is not zero");
    const int n = x.level();
    FlatDecomposition out;
    out.n1 = n1;
    if (n <= n1) {
      out.tail = x;
      out.certificates.push_back(certify(0, x, 0));
      out.reconstruction_exact = true;
      return out;
    }
    RhoExpansion r = t_.to_rho_basis(x);
    // T_j = sum over p^j | i of x_i rho_{n-j}^(i / p^j), an element of O_{K_{n-j}}.
    auto partial = [&](int j) {
      std::uint64_t step = t_.relative_degree(j);
      RhoExpansion s{n - j, {}};
      for (std::size_t i = 0; i < r.coeffs.size(); i += step) s.coeffs.push_back(r.coeffs[i]);
      return t_.from_rho_basis(s);
    };
    TowerElement prev = x;
    TowerElement sum = TowerElement::zero(x.shape(), x.min_prec());
    for (int k = 1; k <= n - n1; ++k) {
      TowerElement next = partial(k);
      TowerElement yk = prev - t_.embed(next, n - k + 1);
      out.certificates.push_back(certify(k, yk, n - k + 1 - n1));
      sum += t_.embed(yk, n);
      out.y.push_back(std::move(yk));
      prev = std::move(next);
    }
    out.tail = prev;
    out.certificates.push_back(certify(0, out.tail, 0));
    out.reconstruction_exact = (sum + t_.embed(out.tail, n) - x).is_zero();
    return out;
  }

  /// For each level m in [level(x), M]: the largest i with dx in p^i d(O_{K_m}),
  /// i.e. x in p^i O_{K_m} + O_{K_m}^{d=0}.
  DivisibilityReport divisibility_exponent(const TowerElement& x, int M) const {
    if (in_kernel(x)) throw DomainError("divisibility_exponent: dx is zero");
    t_.check_level(M);
    if (M < x.level()) throw DomainError("divisibility_exponent: level bound below the element's level");
    DivisibilityReport rep;
    rep.max_level = M;
    const unsigned p = t_.p();
    const int N = t_.prec();
    for (int m = x.level(); m <= M; ++m) {
      const SmithForm& sf = kernel_smith(m);
      Column v = coordinate_column(t_.embed(x, m));
      std::optional<int> best;
      for (std::size_t j = 0; j < v.size(); ++j) {
        mpz_class y = 0;
        for (std::size_t i = 0; i < v.size(); ++i)
          if (sgn(sf.left[j][i]) != 0 && sgn(v[i]) != 0) mpz_addmul(y.get_mpz_t(), sf.left[j][i].get_mpz_t(), v[i].get_mpz_t());
        int vy = valuation_capped(mod_prime_power(y, p, N), p, N);
        if (vy < sf.divisors[j] && (!best || vy < *best)) best = vy;
      }
      if (!best) throw Error("internal: element with dx != 0 lies in the kernel lattice");
      rep.i_max[m] = *best;
    }
    rep.sup = 0;
    for (auto [m, i] : rep.i_max) rep.sup = std::max(rep.sup, i);
    for (auto [m, i] : rep.i_max)
      if (i == rep.sup) {
        rep.stabilized_at = m;
        break;
      }
    return rep;
  }

 private:
  int vp(std::uint64_t k) const {
    int v = 0;
    while (k % t_.p() == 0) {
      k /= t_.p();
      ++v;
    }
    return v;
  }

  void require_integral(const TowerElement& x) const {
    if (!x.is_integral()) throw DomainError("element is not integral");
  }

  void certify_eisenstein(const std::vector<TowerElement>& g, int n) const {
    const Rational unit_val = t_.uniformizer_valuation(0);
    bool ok = g.size() == t_.relative_degree(n) + 1 && equal_at_precision(g.back(), t_.one(0));
    for (std::size_t i = 0; ok && i + 1 < g.size(); ++i) ok = t_.valuation_at_least(g[i], unit_val);
    ok = ok && !g[0].is_zero() && t_.valuation(g[0]) == unit_val;
    if (!ok) throw Error("internal: minimal polynomial of rho_" + std::to_string(n) + " is not Eisenstein");
  }

  MembershipCertificate certify(int index, const TowerElement& y, int exponent) const {
    MembershipCertificate c{index, y.level(), exponent, std::nullopt, false};
    if (!y.is_zero()) c.valuation = t_.valuation(y);
    for (const auto& coeff : y.coeffs())
      if (coeff.is_bottom() && coeff.prec() < exponent)
        throw InsufficientPrecision("membership in p^" + std::to_string(exponent) + " O undecidable");
    c.verified = y.is_divisible_by_prime_power(exponent) &&
                 (!c.valuation || *c.valuation >= Rational(exponent));
    return c;
  }

  const SmithForm& kernel_smith(int m) const {
    auto it = smith_.find(m);
    if (it != smith_.end()) return it->second;
    const auto& L = kernel_lattice(m);
    auto sf = smith_form(t_.p(), L.modulus_exponent(), L.columns(), L.dimension(), true);
    return smith_.emplace(m, std::move(sf)).first->second;
  }

  const Tower& t_;
  mutable std::map<int, std::vector<TowerElement>> minpoly_;
  mutable std::map<int, DifferentData> different_;
  mutable std::map<int, DifferentData> different_qp_;
  mutable std::map<int, LatticeBasis> kernel_;
  mutable std::map<int, LatticeBasis> theorem_b_;
  mutable std::map<int, SmithForm> smith_;
};

}  // namespace cyclodiff
