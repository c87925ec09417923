// tower: build cyclotomic towers, compute constants, run verification suites.
//
// Exit status: 0 when every assertion passes, 1 when some assertion fails,
// 2 on usage errors or inputs outside an operation's domain, 3 on any other error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cyclodiff/cyclodiff.hpp"

using namespace cyclodiff;

namespace {

struct Options {
  std::string config;
  std::optional<unsigned> p;
  std::optional<int> s;
  std::optional<int> levels;
  std::optional<int> prec;
  std::uint64_t seed = 1;
  std::string out;
  std::optional<int> samples;
  std::string element;
  std::optional<int> n1;
  std::optional<int> slack;
  bool invert = false;
  std::string suite = "all";
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TowerParams resolve_params(const Options& o) {
  TowerParams t;
  if (!o.config.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(o.config));
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(std::string("config: ") + e.what());
    }
    t = TowerParams::from_json(j);
  }
  if (o.p) {
    t.p = *o.p;
    if (!o.s) t.s = t.p == 2 ? 2 : 1;
  }
  if (o.s) t.s = *o.s;
  if (o.levels) t.max_level = *o.levels;
  if (o.prec) t.prec = *o.prec;
  t.validate();
  return t;
}

VerifyOptions verify_options(const Options& o) { return o.samples ? VerifyOptions::uniform(*o.samples) : VerifyOptions{}; }

/// JSON literal, @file, or zeta:n / rho:n / one:n.
TowerElement parse_element_arg(const Tower& t, const std::string& text) {
  std::string body = text;
  if (!body.empty() && body[0] == '@') body = read_file(body.substr(1));
  auto colon = body.find(':');
  if (colon != std::string::npos && body.find('{') == std::string::npos) {
    std::string kind = body.substr(0, colon);
    int n = 0;
    try {
      n = std::stoi(body.substr(colon + 1));
    } catch (const std::exception&) {
      throw UsageError("bad element level in '" + text + "'");
    }
    if (kind == "zeta") return t.zeta(n);
    if (kind == "rho") return t.uniformizer(n);
    if (kind == "one") return t.one(n);
    throw UsageError("unknown element kind '" + kind + "'");
  }
  try {
    return t.parse_element(nlohmann::json::parse(body));
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("element: ") + e.what());
  }
}

int finish(const Options& o, nlohmann::json report, bool passed) {
  report["passed"] = passed;
  if (o.out.empty())
    std::cout << canonical_dump(report);
  else
    emit_report(report, o.out);
  return passed ? 0 : 1;
}

nlohmann::json with_assertions(nlohmann::json env, const SuiteReport& r) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& a : r.assertions) arr.push_back(a.to_json());
  env["assertions"] = arr;
  env["result"] = r.data;
  return env;
}

int cmd_build(const Options& o) {
  Tower t(resolve_params(o));
  Differentials d(t);
  SuiteReport r;
  nlohmann::json levels = nlohmann::json::array();
  for (int n = 0; n <= t.max_level(); ++n) {
    Rational v = t.valuation(t.uniformizer(n));
    levels.push_back({{"n", n},
                      {"degree", t.degree(n)},
                      {"relative_degree", t.relative_degree(n)},
                      {"uniformizer_valuation", to_string(v)},
                      {"different_over_k0", to_string(d.different(n).val_different)},
                      {"different_over_qp", to_string(d.different_over_qp(n).val_different)}});
    r.check("uniformizer-" + std::to_string(n), "val rho_n = 1/e_n", v == t.uniformizer_valuation(n));
    if (n > 0) {
      TowerElement nm = t.norm_down(t.uniformizer(n), n - 1);
      TowerElement lower = t.uniformizer(n - 1);
      r.check("norm-compatible-" + std::to_string(n), "N(rho_n) = rho_{n-1}, up to sign when p = 2",
              (nm - lower).is_zero() || (t.p() == 2 && (nm + lower).is_zero()));
    }
  }
  r.data = {{"levels", levels}};
  nlohmann::json env = with_assertions(report_envelope("build", t.params(), o.seed), r);
  return finish(o, env, r.passed());
}

int cmd_constants(const Options& o) {
  Tower t(resolve_params(o));
  Differentials d(t);
  ConstantsReport c = estimate_constants(t, d, o.seed, o.samples.value_or(kDefaultNormSamples));
  SuiteReport r;
  r.check("c-norm-positive", "c_norm > 0", c.c_norm > Rational(0));
  r.check("shifts-nonnegative", "n_0, n_1 >= 0", c.n0 >= 0 && c.n1 >= 0);
  r.data = c.to_json();
  return finish(o, with_assertions(report_envelope("constants", t.params(), o.seed), r), r.passed());
}

int cmd_verify(const Options& o) {
  Tower t(resolve_params(o));
  Verifier v(t, o.seed, verify_options(o));
  std::vector<std::string> names;
  if (o.suite == "all")
    names = suite_names();
  else
    names.push_back(o.suite);
  nlohmann::json env = report_envelope("verify", t.params(), o.seed);
  nlohmann::json suites = nlohmann::json::array();
  bool passed = true;
  for (const auto& name : names) {
    SuiteReport r = v.run(name);
    passed = passed && r.passed();
    suites.push_back(r.to_json());
    std::cerr << (r.passed() ? "PASS " : "FAIL ") << name << " (" << r.assertions.size() << " assertions)\n";
  }
  env["suites"] = suites;
  return finish(o, env, passed);
}

int cmd_decompose(const Options& o) {
  Tower t(resolve_params(o));
  Differentials d(t);
  int n1 = 0;
  if (o.n1)
    n1 = *o.n1;
  else
    n1 = estimate_constants(t, d, o.seed, o.samples.value_or(kDefaultNormSamples)).n1;
  TowerElement x;
  if (o.element.empty()) {
    Sampler rng(derive_seed(o.seed, 0xdec));
    x = d.lattice_element(d.kernel_lattice(std::min(3, t.max_level())), rng);
  } else {
    x = parse_element_arg(t, o.element);
  }
  FlatDecomposition dec = d.flat_decompose(x, n1);
  SuiteReport r;
  r.check("certificates", "all membership certificates verified", dec.all_verified());
  r.check("reconstruction", "sum of y_k and tail equals x", dec.reconstruction_exact);
  r.data = {{"x", x.to_json()}, {"decomposition", dec.to_json()}};
  return finish(o, with_assertions(report_envelope("decompose", t.params(), o.seed), r), r.passed());
}

int cmd_w2(const Options& o) {
  Tower t(resolve_params(o));
  Completion c(t);
  TowerElement x = parse_element_arg(t, o.element.empty() ? "zeta:1" : o.element);
  std::int64_t w = c.w2_valuation(x);
  PerpSeries s = c.perp_series_decompose(x);
  SuiteReport r;
  bool bound = true;
  for (const auto& term : s.terms) bound = bound && t.valuation(term.x) >= Rational(w + term.n);
  r.check("component-bound", "val R_n^perp(x) >= w'_2(x) + n", bound);
  r.data = {{"x", x.to_json()}, {"w2", w}, {"val_p", to_string(t.valuation(x))}, {"series", s.to_json(t)}};
  return finish(o, with_assertions(report_envelope("w2", t.params(), o.seed), r), r.passed());
}

int cmd_series(const Options& o) {
  Tower t(resolve_params(o));
  Completion c(t);
  TowerElement x = parse_element_arg(t, o.element.empty() ? "zeta:1" : o.element);
  const int slack = o.slack.value_or(trace_slack(t));
  PerpSeries s = c.perp_series_decompose(x);
  SuiteReport r;
  TowerElement back = t.embed(c.series_reconstruct(s), x.level());
  r.check("roundtrip", "reconstruct(decompose(x)) = x", (back - x).is_zero());
  r.check("perpendicular", "every term lies in K_n^perp", s.perpendicular(t));
  RMembership mem = c.membership_R(x, slack);
  nlohmann::json margins = nlohmann::json::array();
  for (const auto& m : c.flatness_test(x, x.level())) margins.push_back(m.to_json());
  r.data = {{"x", x.to_json()}, {"series", s.to_json(t)}, {"membership", mem.to_json()}, {"flatness", margins}};
  if (o.invert) {
    PerpSeries inv = c.series_invert(s);
    TowerElement prod = t.embed(c.series_reconstruct(inv), x.level()) * x;
    r.check("inverse", "x * invert(x) = 1", (prod - t.one(x.level())).is_zero());
    r.data["inverse"] = inv.to_json(t);
    r.data["inverse_membership"] = c.membership_R(t.embed(c.series_reconstruct(inv), x.level()), slack).to_json();
  }
  return finish(o, with_assertions(report_envelope("series", t.params(), o.seed), r), r.passed());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cyclotomic tower differentials lab"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "JSON file with p, s, max_level, prec");
  app.add_option("--p", o.p, "prime");
  app.add_option("--s", o.s, "base offset (1 for odd p, 2 for p = 2)");
  app.add_option("--levels", o.levels, "top level of the tower");
  app.add_option("--prec", o.prec, "absolute precision");
  app.add_option("--seed", o.seed, "random seed");
  app.add_option("--out", o.out, "write the JSON report here instead of stdout");
  app.add_option("--samples", o.samples, "override every sample count");

  auto* build = app.add_subcommand("build", "describe the tower");
  auto* constants = app.add_subcommand("constants", "compute the tower constants");
  auto* verify = app.add_subcommand("verify", "run a verification suite");
  verify->add_option("suite", o.suite, "suite name or 'all'");
  auto* decompose = app.add_subcommand("decompose", "decompose a d-kernel element");
  decompose->add_option("--element", o.element, "JSON literal, @file, zeta:n or rho:n");
  decompose->add_option("--n1", o.n1, "use this n_1 instead of computing constants");
  auto* w2 = app.add_subcommand("w2", "w'_2 valuation of an element");
  w2->add_option("--element", o.element, "JSON literal, @file, zeta:n or rho:n");
  auto* series = app.add_subcommand("series", "perpendicular series, membership and flatness");
  series->add_option("--element", o.element, "JSON literal, @file, zeta:n or rho:n");
  series->add_option("--slack", o.slack, "membership slack (default c_2*)");
  series->add_flag("--invert", o.invert, "also invert the series");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*build) return cmd_build(o);
    if (*constants) return cmd_constants(o);
    if (*verify) return cmd_verify(o);
    if (*decompose) return cmd_decompose(o);
    if (*w2) return cmd_w2(o);
    if (*series) return cmd_series(o);
  } catch (const UsageError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 3;
  }
  return 2;
}
