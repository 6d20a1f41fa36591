#pragma once

// Fuzzy logic: Mamdani inference with centroid defuzzification, photochromic
// membership and absorbance, conformer-ensemble entropy and two-state
// amplitude memberships.

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "neuromime/core/error.hpp"

namespace neuromime::fuzzy {

struct Triangular {
  double a, b, c;
};
struct Trapezoid {
  double a, b, c, d;
};
struct Gaussian {
  double mu, sigma;
};
using Shape = std::variant<Triangular, Trapezoid, Gaussian>;

inline void validate_shape(const Shape& s, const std::string& label) {
  auto bad = [&] { throw InvalidInput("fuzzy set '" + label + "': shape parameters out of order"); };
  if (const auto* t = std::get_if<Triangular>(&s)) {
    if (!(t->a <= t->b && t->b <= t->c) || t->a == t->c) bad();
  } else if (const auto* z = std::get_if<Trapezoid>(&s)) {
    if (!(z->a <= z->b && z->b <= z->c && z->c <= z->d) || z->a == z->d) bad();
  } else if (!(std::get<Gaussian>(s).sigma > 0.0)) {
    bad();
  }
}

inline double membership(const Shape& s, double x) {
  if (const auto* t = std::get_if<Triangular>(&s)) {
    if (x < t->a || x > t->c) return 0.0;
    if (x == t->b) return 1.0;
    return x < t->b ? (x - t->a) / (t->b - t->a) : (t->c - x) / (t->c - t->b);
  }
  if (const auto* z = std::get_if<Trapezoid>(&s)) {
    if (x < z->a || x > z->d) return 0.0;
    if (x >= z->b && x <= z->c) return 1.0;
    return x < z->b ? (x - z->a) / (z->b - z->a) : (z->d - x) / (z->d - z->c);
  }
  const auto& g = std::get<Gaussian>(s);
  const double u = (x - g.mu) / g.sigma;
  return std::exp(-0.5 * u * u);
}

struct FuzzySet {
  std::string label;
  Shape shape;
};

struct FuzzyVariable {
  std::string name;
  double lo = 0.0, hi = 1.0;  // universe of discourse
  std::vector<FuzzySet> sets;

  const FuzzySet* find(const std::string& label) const {
    for (const auto& s : sets)
      if (s.label == label) return &s;
    return nullptr;
  }
};

/// Antecedent expression: a leaf "variable IS set" or a connective.
struct Expr {
  enum class Op { Is, And, Or, Not } op = Op::Is;
  std::string variable, set;
  std::vector<Expr> children;

  static Expr is(std::string var, std::string set) { return {Op::Is, std::move(var), std::move(set), {}}; }
  static Expr all(std::vector<Expr> c) { return {Op::And, {}, {}, std::move(c)}; }
  static Expr any(std::vector<Expr> c) { return {Op::Or, {}, {}, std::move(c)}; }
  static Expr negate(Expr c) { return {Op::Not, {}, {}, {std::move(c)}}; }
};

struct FuzzyRule {
  Expr antecedent;
  std::string output_variable, output_set;
};

enum class NoFirePolicy { Midpoint, Throw };

struct FuzzySystem {
  std::vector<FuzzyVariable> inputs, outputs;
  std::vector<FuzzyRule> rules;
  NoFirePolicy no_fire = NoFirePolicy::Midpoint;
  int grid_points = 1001;

  const FuzzyVariable* input(const std::string& name) const {
    for (const auto& v : inputs)
      if (v.name == name) return &v;
    return nullptr;
  }
  const FuzzyVariable* output(const std::string& name) const {
    for (const auto& v : outputs)
      if (v.name == name) return &v;
    return nullptr;
  }

  void validate() const {
    for (const auto* group : {&inputs, &outputs})
      for (const auto& v : *group) {
        if (!(v.hi > v.lo)) throw InvalidInput("fuzzy variable '" + v.name + "': empty universe");
        for (const auto& s : v.sets) validate_shape(s.shape, s.label);
      }
    if (grid_points < 2) throw InvalidInput("FuzzySystem: need at least 2 grid points");
    auto check = [&](auto&& self, const Expr& e) -> void {
      if (e.op == Expr::Op::Is) {
        const auto* v = input(e.variable);
        if (!v) throw InvalidInput("fuzzy rule references unknown input '" + e.variable + "'");
        if (!v->find(e.set)) throw InvalidInput("fuzzy rule references unknown set '" + e.set + "'");
        return;
      }
      if (e.children.empty() || (e.op == Expr::Op::Not && e.children.size() != 1))
        throw InvalidInput("fuzzy rule has a malformed connective");
      for (const auto& c : e.children) self(self, c);
    };
    for (const auto& r : rules) {
      check(check, r.antecedent);
      const auto* o = output(r.output_variable);
      if (!o || !o->find(r.output_set))
        throw InvalidInput("fuzzy rule references unknown output '" + r.output_variable + "." + r.output_set + "'");
    }
  }
};

struct FlsResult {
  std::map<std::string, double> values;
  std::map<std::string, bool> fired;
};

/// Firing strength of an antecedent: AND = min, OR = max, NOT = 1 - x.
inline double firing_strength(const FuzzySystem& sys, const Expr& e, const std::map<std::string, double>& x) {
  switch (e.op) {
    case Expr::Op::Is: return membership(sys.input(e.variable)->find(e.set)->shape, x.at(e.variable));
    case Expr::Op::And: {
      double s = 1.0;
      for (const auto& c : e.children) s = std::min(s, firing_strength(sys, c, x));
      return s;
    }
    case Expr::Op::Or: {
      double s = 0.0;
      for (const auto& c : e.children) s = std::max(s, firing_strength(sys, c, x));
      return s;
    }
    case Expr::Op::Not: return 1.0 - firing_strength(sys, e.children.front(), x);
  }
  return 0.0;
}

/// Mamdani inference: each rule clips its consequent at its firing strength,
/// clipped sets are aggregated by max, and each output is the centroid of
/// the aggregate (trapezoidal rule on a uniform grid).
inline FlsResult fls_eval(const FuzzySystem& sys, const std::map<std::string, double>& crisp) {
  sys.validate();
  for (const auto& v : sys.inputs) {
    const auto it = crisp.find(v.name);
    if (it == crisp.end()) throw InvalidInput("fls_eval: missing input '" + v.name + "'");
    if (!(it->second >= v.lo && it->second <= v.hi))
      throw InvalidInput("fls_eval: input '" + v.name + "' outside its universe");
  }
  std::vector<double> strength(sys.rules.size());
  for (std::size_t r = 0; r < sys.rules.size(); ++r) strength[r] = firing_strength(sys, sys.rules[r].antecedent, crisp);

  FlsResult out;
  for (const auto& ov : sys.outputs) {
    const auto n = static_cast<std::size_t>(sys.grid_points);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double x = ov.lo + (ov.hi - ov.lo) * static_cast<double>(k) / static_cast<double>(n - 1);
      double mu = 0.0;
      for (std::size_t r = 0; r < sys.rules.size(); ++r) {
        if (sys.rules[r].output_variable != ov.name || strength[r] <= 0.0) continue;
        mu = std::max(mu, std::min(strength[r], membership(ov.find(sys.rules[r].output_set)->shape, x)));
      }
      const double w = (k == 0 || k + 1 == n) ? 0.5 : 1.0;
      num += w * mu * x;
      den += w * mu;
    }
    if (den > 0.0) {
      out.values[ov.name] = std::clamp(num / den, ov.lo, ov.hi);
      out.fired[ov.name] = true;
    } else {
      if (sys.no_fire == NoFirePolicy::Throw) throw DegenerateSignal("fls_eval: no rule fired for '" + ov.name + "'");
      out.values[ov.name] = 0.5 * (ov.lo + ov.hi);
      out.fired[ov.name] = false;
    }
  }
  return out;
}

// ---- JSON schema -----------------------------------------------------------
//
// {
//   "inputs":  [{"name": "t", "universe": [0, 10],
//                "sets": [{"label": "low", "triangular": [0, 0, 5]},
//                         {"label": "mid", "trapezoid": [2, 4, 6, 8]},
//                         {"label": "high", "gaussian": [10, 2]}]}],
//   "outputs": [ ...same form... ],
//   "rules":   [{"if": {"and": [{"is": ["t", "low"]}, {"not": {"is": ["u", "high"]}}]},
//                "then": ["y", "small"]}],
//   "no_fire": "midpoint" | "error"
// }

namespace detail {

inline double number(const nlohmann::json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  return j.get<double>();
}

inline Expr parse_expr(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object() || j.size() != 1) throw ConfigError(where + ": expression must be a one-key object");
  const auto& [key, val] = *j.items().begin();
  if (key == "is") {
    if (!val.is_array() || val.size() != 2 || !val[0].is_string() || !val[1].is_string())
      throw ConfigError(where + ".is: expected [variable, set]");
    return Expr::is(val[0].get<std::string>(), val[1].get<std::string>());
  }
  if (key == "not") return Expr::negate(parse_expr(val, where + ".not"));
  if (key == "and" || key == "or") {
    if (!val.is_array() || val.empty()) throw ConfigError(where + "." + key + ": expected a non-empty array");
    std::vector<Expr> c;
    for (std::size_t i = 0; i < val.size(); ++i)
      c.push_back(parse_expr(val[i], where + "." + key + "[" + std::to_string(i) + "]"));
    return key == "and" ? Expr::all(std::move(c)) : Expr::any(std::move(c));
  }
  throw ConfigError(where + ": unknown connective '" + key + "'");
}

inline std::vector<FuzzyVariable> parse_variables(const nlohmann::json& arr, const std::string& where) {
  if (!arr.is_array()) throw ConfigError(where + ": expected an array");
  std::vector<FuzzyVariable> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& v = arr[i];
    const std::string at = where + "[" + std::to_string(i) + "]";
    if (!v.contains("name") || !v["name"].is_string()) throw ConfigError(at + ".name: expected a string");
    if (!v.contains("universe") || !v["universe"].is_array() || v["universe"].size() != 2)
      throw ConfigError(at + ".universe: expected [lo, hi]");
    FuzzyVariable fv;
    fv.name = v["name"].get<std::string>();
    fv.lo = number(v["universe"][0], at + ".universe[0]");
    fv.hi = number(v["universe"][1], at + ".universe[1]");
    if (!v.contains("sets") || !v["sets"].is_array()) throw ConfigError(at + ".sets: expected an array");
    for (std::size_t k = 0; k < v["sets"].size(); ++k) {
      const auto& s = v["sets"][k];
      const std::string st = at + ".sets[" + std::to_string(k) + "]";
      if (!s.contains("label") || !s["label"].is_string()) throw ConfigError(st + ".label: expected a string");
      auto params = [&](const char* key, std::size_t n) {
        const auto& p = s[key];
        if (!p.is_array() || p.size() != n) throw ConfigError(st + "." + key + ": expected " + std::to_string(n) + " numbers");
        std::vector<double> out;
        for (std::size_t q = 0; q < n; ++q) out.push_back(number(p[q], st + "." + key));
        return out;
      };
      FuzzySet set;
      set.label = s["label"].get<std::string>();
      if (s.contains("triangular")) {
        const auto p = params("triangular", 3);
        set.shape = Triangular{p[0], p[1], p[2]};
      } else if (s.contains("trapezoid")) {
        const auto p = params("trapezoid", 4);
        set.shape = Trapezoid{p[0], p[1], p[2], p[3]};
      } else if (s.contains("gaussian")) {
        const auto p = params("gaussian", 2);
        set.shape = Gaussian{p[0], p[1]};
      } else {
        throw ConfigError(st + ": expected one of triangular, trapezoid, gaussian");
      }
      fv.sets.push_back(std::move(set));
    }
    out.push_back(std::move(fv));
  }
  return out;
}

}  // namespace detail

inline FuzzySystem fuzzy_system_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("fuzzy system: expected a JSON object");
  FuzzySystem sys;
  sys.inputs = detail::parse_variables(j.value("inputs", nlohmann::json::array()), "inputs");
  sys.outputs = detail::parse_variables(j.value("outputs", nlohmann::json::array()), "outputs");
  const auto rules = j.value("rules", nlohmann::json::array());
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const std::string at = "rules[" + std::to_string(i) + "]";
    const auto& r = rules[i];
    if (!r.contains("if") || !r.contains("then")) throw ConfigError(at + ": expected 'if' and 'then'");
    const auto& t = r["then"];
    if (!t.is_array() || t.size() != 2 || !t[0].is_string() || !t[1].is_string())
      throw ConfigError(at + ".then: expected [variable, set]");
    sys.rules.push_back({detail::parse_expr(r["if"], at + ".if"), t[0].get<std::string>(), t[1].get<std::string>()});
  }
  if (j.contains("no_fire")) {
    const auto policy = j["no_fire"].get<std::string>();
    if (policy == "midpoint") sys.no_fire = NoFirePolicy::Midpoint;
    else if (policy == "error") sys.no_fire = NoFirePolicy::Throw;
    else throw ConfigError("no_fire: expected 'midpoint' or 'error'");
  }
  try {
    sys.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  return sys;
}

inline FuzzySystem load_fuzzy_system(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open fuzzy system file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
  return fuzzy_system_from_json(j);
}

// ---------------------------------------------------------------------------
// Photochromic fuzzy sets.

/// Sum of Gaussian bands over wavelength (nm).
struct BandSpectrum {
  struct Band {
    double center_nm, width_nm, peak;
  };
  std::vector<Band> bands;

  double operator()(double nm) const {
    double v = 0.0;
    for (const auto& b : bands) {
      const double u = (nm - b.center_nm) / b.width_nm;
      v += b.peak * std::exp(-0.5 * u * u);
    }
    return v;
  }
};

struct PhotochromeSpec {
  std::string name;
  BandSpectrum quantum_yield;    // Φ_PC(λ)
  BandSpectrum eps_uncolored;    // M^-1 cm^-1
  BandSpectrum eps_colored;      // M^-1 cm^-1
  double c0 = 1e-4;              // M
  double path_length = 1.0;      // cm
  double k_bleach = 0.05;        // s^-1

  void validate() const {
    if (!(c0 >= 0.0) || !(path_length >= 0.0)) throw InvalidInput("PhotochromeSpec: negative concentration or path");
    if (!(k_bleach > 0.0)) throw InvalidInput("PhotochromeSpec: k_bleach must be positive");
    for (const auto* s : {&quantum_yield, &eps_uncolored, &eps_colored})
      for (const auto& b : s->bands)
        if (!(b.peak >= 0.0) || !(b.width_nm > 0.0)) throw InvalidInput("PhotochromeSpec: bad spectral band");
  }
};

/// Photo-coloration degree μ = Φ(λ)·I0·(1 − 10^(−ε_Un(λ)·C0·l)).
inline double bipful_membership(const PhotochromeSpec& s, double i0, double lambda_irr_nm) {
  s.validate();
  if (!(i0 >= 0.0) || !(lambda_irr_nm > 0.0)) throw InvalidInput("bipful_membership: negative input");
  const double absorbance = s.eps_uncolored(lambda_irr_nm) * s.c0 * s.path_length;
  return s.quantum_yield(lambda_irr_nm) * i0 * -std::expm1(-absorbance * std::numbers::ln10);
}

/// Photostationary absorbance A(λ) = Σ_i ε_Co,i(λ)·μ_i / k_Δ,i.
inline double bipful_absorbance(std::span<const PhotochromeSpec> specs, std::span<const double> mu, double lambda_an_nm) {
  if (specs.size() != mu.size()) throw InvalidInput("bipful_absorbance: lists are not aligned");
  double a = 0.0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (!(specs[i].k_bleach > 0.0)) throw InvalidInput("bipful_absorbance: k_bleach must be positive");
    a += specs[i].eps_colored(lambda_an_nm) * mu[i] / specs[i].k_bleach;
  }
  return a;
}

/// Synthetic four-compound library: three band-selective photochromes
/// (UV-C, UV-B and UV-A absorbers colouring red, green and blue) plus a
/// broadband absorber with a flat grey coloured form. Invented spectra,
/// for demonstration only.
inline std::vector<PhotochromeSpec> synthetic_photochromes() {
  auto make = [](std::string name, double uv_center, double uv_width, double vis_center, double vis_width,
                 double vis_peak) {
    PhotochromeSpec s;
    s.name = std::move(name);
    s.quantum_yield.bands = {{uv_center, uv_width * 1.5, 0.5}};
    s.eps_uncolored.bands = {{uv_center, uv_width, 2e4}};
    s.eps_colored.bands = {{vis_center, vis_width, vis_peak}};
    return s;
  };
  return {make("uvc-red", 260.0, 12.0, 640.0, 40.0, 3e4), make("uvb-green", 305.0, 10.0, 540.0, 40.0, 3e4),
          make("uva-blue", 360.0, 15.0, 450.0, 40.0, 3e4), make("broad-grey", 320.0, 60.0, 545.0, 400.0, 2e3)};
}

/// Absorbance at each analysis wavelength after irradiation at lambda_irr.
inline std::vector<double> bipful_response(std::span<const PhotochromeSpec> specs, double i0, double lambda_irr_nm,
                                           std::span<const double> analysis_nm) {
  std::vector<double> mu;
  for (const auto& s : specs) mu.push_back(bipful_membership(s, i0, lambda_irr_nm));
  std::vector<double> out;
  for (double l : analysis_nm) out.push_back(bipful_absorbance(specs, mu, l));
  return out;
}

// ---------------------------------------------------------------------------

/// Normalised Shannon entropy of a conformer distribution; 0 for n = 1.
inline double fuzzy_entropy(std::span<const double> mu, double tolerance = 1e-9) {
  if (mu.empty()) throw InvalidInput("fuzzy_entropy: empty ensemble");
  double total = 0.0;
  for (double m : mu) {
    if (!(m >= 0.0)) throw InvalidInput("fuzzy_entropy: negative weight");
    total += m;
  }
  if (std::abs(total - 1.0) > tolerance) throw InvalidInput("fuzzy_entropy: weights must sum to 1");
  if (mu.size() == 1) return 0.0;
  double h = 0.0;
  for (double m : mu)
    if (m > 0.0) h -= m * std::log(m);
  return std::clamp(h / std::log(static_cast<double>(mu.size())), 0.0, 1.0);
}

struct QubitMemberships {
  double zero = 0.0, one = 0.0;
};

/// (|a|², |b|²) for a normalised two-state amplitude pair.
inline QubitMemberships qubit_memberships(std::complex<double> a, std::complex<double> b, double tolerance = 1e-9) {
  const double pa = std::norm(a), pb = std::norm(b);
  if (!std::isfinite(pa) || !std::isfinite(pb) || std::abs(pa + pb - 1.0) > tolerance)
    throw InvalidInput("qubit_memberships: |a|^2 + |b|^2 must equal 1");
  return {pa, pb};
}

}  // namespace neuromime::fuzzy
