#pragma once

// Experiment registry, TOML configuration and run reports.
//
// Config file layout:
//
//   experiment = "puf-study"   # optional, must match the subcommand
//   seed = 0                   # xoshiro256** root seed
//   [output]
//   dir = "out/puf"
//   emit = ["csv", "json", "svg"]
//   [params]
//   devices = 100
//
// Every experiment reads its parameters through `Params`, which records the
// resolved values (defaults included) for the report and rejects keys it
// never asked for.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <toml.hpp>

#include "neuromime/core/error.hpp"
#include "neuromime/core/image.hpp"
#include "neuromime/core/rng.hpp"
#include "neuromime/core/series.hpp"
#include "neuromime/devices.hpp"
#include "neuromime/dynamics.hpp"
#include "neuromime/fuzzy.hpp"
#include "neuromime/io.hpp"
#include "neuromime/reservoir.hpp"
#include "neuromime/security.hpp"
#include "neuromime/synapse.hpp"

namespace neuromime::harness {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Typed parameter reader.

class Params {
 public:
  Params(const toml::table* table, std::string path) : table_(table), path_(std::move(path)) {}

  const std::string& path() const { return path_; }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError(where(key) + ": " + msg);
  }

  double number(const std::string& key, double def) {
    const auto* n = lookup(key);
    double v = def;
    if (n) {
      if (!(n->is_integer() || n->is_floating_point())) fail(key, "expected a number");
      v = *n->value<double>();
      if (!std::isfinite(v)) fail(key, "must be finite");
    }
    echo_[key] = v;
    return v;
  }

  double positive(const std::string& key, double def) {
    const double v = number(key, def);
    if (!(v > 0.0)) fail(key, "must be > 0");
    return v;
  }

  double non_negative(const std::string& key, double def) {
    const double v = number(key, def);
    if (!(v >= 0.0)) fail(key, "must be >= 0");
    return v;
  }

  double in_range(const std::string& key, double def, double lo, double hi) {
    const double v = number(key, def);
    if (!(v >= lo && v <= hi)) fail(key, "must lie in [" + io::format_double(lo) + ", " + io::format_double(hi) + "]");
    return v;
  }

  std::int64_t integer(const std::string& key, std::int64_t def, std::int64_t lo = std::numeric_limits<std::int64_t>::min(),
                       std::int64_t hi = std::numeric_limits<std::int64_t>::max()) {
    const auto* n = lookup(key);
    std::int64_t v = def;
    if (n) {
      if (!n->is_integer()) fail(key, "expected an integer");
      v = *n->value<std::int64_t>();
    }
    if (v < lo || v > hi) fail(key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    echo_[key] = v;
    return v;
  }

  bool boolean(const std::string& key, bool def) {
    const auto* n = lookup(key);
    bool v = def;
    if (n) {
      if (!n->is_boolean()) fail(key, "expected true or false");
      v = *n->value<bool>();
    }
    echo_[key] = v;
    return v;
  }

  std::string string(const std::string& key, const std::string& def, const std::vector<std::string>& allowed = {}) {
    const auto* n = lookup(key);
    std::string v = def;
    if (n) {
      if (!n->is_string()) fail(key, "expected a string");
      v = *n->value<std::string>();
    }
    if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      fail(key, "must be one of: " + list);
    }
    echo_[key] = v;
    return v;
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> def, std::size_t min_size = 0) {
    const auto* n = lookup(key);
    if (n) {
      const auto* arr = n->as_array();
      if (!arr) fail(key, "expected an array of numbers");
      def.clear();
      for (std::size_t k = 0; k < arr->size(); ++k) {
        const auto& e = *arr->get(k);
        if (!(e.is_integer() || e.is_floating_point())) fail(key + "[" + std::to_string(k) + "]", "expected a number");
        const double v = *e.value<double>();
        if (!std::isfinite(v)) fail(key + "[" + std::to_string(k) + "]", "must be finite");
        def.push_back(v);
      }
    }
    if (def.size() < min_size) fail(key, "needs at least " + std::to_string(min_size) + " entries");
    echo_[key] = def;
    return def;
  }

  std::vector<std::int64_t> integers(const std::string& key, std::vector<std::int64_t> def) {
    const auto* n = lookup(key);
    if (n) {
      const auto* arr = n->as_array();
      if (!arr) fail(key, "expected an array of integers");
      def.clear();
      for (std::size_t k = 0; k < arr->size(); ++k) {
        const auto& e = *arr->get(k);
        if (!e.is_integer()) fail(key + "[" + std::to_string(k) + "]", "expected an integer");
        def.push_back(*e.value<std::int64_t>());
      }
    }
    echo_[key] = def;
    return def;
  }

  std::vector<std::string> strings(const std::string& key, std::vector<std::string> def) {
    const auto* n = lookup(key);
    if (n) {
      const auto* arr = n->as_array();
      if (!arr) fail(key, "expected an array of strings");
      def.clear();
      for (std::size_t k = 0; k < arr->size(); ++k) {
        const auto& e = *arr->get(k);
        if (!e.is_string()) fail(key + "[" + std::to_string(k) + "]", "expected a string");
        def.push_back(*e.value<std::string>());
      }
    }
    echo_[key] = def;
    return def;
  }

  /// Nested table; absent tables read as empty so defaults apply.
  Params& table(const std::string& key) {
    auto it = children_.find(key);
    if (it != children_.end()) return *it->second;
    const auto* n = lookup(key);
    const toml::table* t = nullptr;
    if (n) {
      t = n->as_table();
      if (!t) fail(key, "expected a table");
    }
    auto child = std::make_unique<Params>(t, where(key));
    auto& ref = *child;
    children_.emplace(key, std::move(child));
    return ref;
  }

  /// Rejects keys that no reader asked for.
  void finish() const {
    if (table_)
      for (auto&& [k, v] : *table_) {
        const std::string key(k.str());
        if (!used_.count(key)) throw ConfigError(where(key) + ": unknown key");
      }
    for (const auto& [k, c] : children_) c->finish();
  }

  json echo() const {
    json j = echo_.is_null() ? json::object() : echo_;
    for (const auto& [k, c] : children_) j[k] = c->echo();
    return j;
  }

 private:
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const toml::node* lookup(const std::string& key) {
    used_.insert(key);
    return table_ ? table_->get(key) : nullptr;
  }

  const toml::table* table_;
  std::string path_;
  std::set<std::string> used_;
  json echo_ = json::object();
  std::map<std::string, std::unique_ptr<Params>> children_;
};

/// Device block: `kind` picks the factory defaults, any field may override.
inline devices::MemristorParams read_device(Params& p, const std::string& default_kind) {
  const auto kind = p.string("kind", default_kind, {"linear-drift", "rectifying", "stochastic-switch"});
  auto d = kind == "rectifying"          ? devices::MemristorParams::rectifying()
           : kind == "stochastic-switch" ? devices::MemristorParams::stochastic_switch()
                                         : devices::MemristorParams::linear_drift();
  d.r_on = p.positive("r_on", d.r_on);
  d.r_off = p.positive("r_off", d.r_off);
  d.thickness = p.positive("thickness", d.thickness);
  d.mobility = p.non_negative("mobility", d.mobility);
  d.window_p = p.number("window_p", d.window_p);
  d.saturation_current = p.positive("saturation_current", d.saturation_current);
  d.ideality = p.positive("ideality", d.ideality);
  d.v_set = p.number("v_set", d.v_set);
  d.v_reset = p.number("v_reset", d.v_reset);
  d.tau_delay_median = p.positive("tau_delay_median", d.tau_delay_median);
  d.tau_relax_median = p.positive("tau_relax_median", d.tau_relax_median);
  d.sigma_log = p.non_negative("sigma_log", d.sigma_log);
  try {
    d.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(p.path() + ": " + e.what());
  }
  return d;
}

// ---------------------------------------------------------------------------
// Configuration and reports.

inline const std::vector<std::string>& emit_formats() {
  static const std::vector<std::string> f{"csv", "json", "svg", "pgm", "bits"};
  return f;
}

struct ExperimentConfig {
  std::string id;
  std::uint64_t seed = 0;
  fs::path out_dir = "out";
  std::vector<std::string> emit = emit_formats();
  toml::table params;
  fs::path base_dir = ".";  // relative file references in params resolve here
};

struct RunReport {
  json config;
  std::map<std::string, double> metrics;
  std::map<std::string, std::string> notes;
  std::vector<std::string> artifacts;  // relative to the output directory
  double wall_time = 0.0;              // s; printed, not written, so reports stay byte-stable

  json to_json() const {
    return json{{"config", config}, {"metrics", metrics}, {"notes", notes}, {"artifacts", artifacts}};
  }
};

inline ExperimentConfig parse_config(const std::string& text, const std::string& id, const std::string& source_name,
                                     fs::path base_dir = ".") {
  toml::table root;
  try {
    root = toml::parse(text, source_name);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source_name << ":" << e.source().begin.line << ":" << e.source().begin.column << ": "
        << e.description();
    throw ConfigError(msg.str());
  }
  ExperimentConfig cfg;
  cfg.id = id;
  cfg.base_dir = std::move(base_dir);
  for (auto&& [k, v] : root) {
    const std::string key(k.str());
    if (key != "experiment" && key != "seed" && key != "output" && key != "params")
      throw ConfigError(key + ": unknown key");
  }
  if (const auto* n = root.get("experiment")) {
    if (!n->is_string()) throw ConfigError("experiment: expected a string");
    if (*n->value<std::string>() != id)
      throw ConfigError("experiment: file is for '" + *n->value<std::string>() + "', not '" + id + "'");
  }
  if (const auto* n = root.get("seed")) {
    if (!n->is_integer() || *n->value<std::int64_t>() < 0) throw ConfigError("seed: expected a non-negative integer");
    cfg.seed = static_cast<std::uint64_t>(*n->value<std::int64_t>());
  }
  if (const auto* n = root.get("output")) {
    const auto* t = n->as_table();
    if (!t) throw ConfigError("output: expected a table");
    for (auto&& [k, v] : *t) {
      const std::string key(k.str());
      if (key == "dir") {
        if (!v.is_string()) throw ConfigError("output.dir: expected a string");
        cfg.out_dir = *v.value<std::string>();
      } else if (key == "emit") {
        const auto* arr = v.as_array();
        if (!arr) throw ConfigError("output.emit: expected an array of strings");
        cfg.emit.clear();
        for (std::size_t i = 0; i < arr->size(); ++i) {
          const auto s = arr->get(i)->value<std::string>();
          const auto& ok = emit_formats();
          if (!s || std::find(ok.begin(), ok.end(), *s) == ok.end())
            throw ConfigError("output.emit[" + std::to_string(i) + "]: must be one of csv, json, svg, pgm, bits");
          cfg.emit.push_back(*s);
        }
      } else {
        throw ConfigError("output." + key + ": unknown key");
      }
    }
  }
  if (const auto* n = root.get("params")) {
    const auto* t = n->as_table();
    if (!t) throw ConfigError("params: expected a table");
    cfg.params = *t;
  }
  return cfg;
}

inline ExperimentConfig load_config(const fs::path& file, const std::string& id) {
  std::ifstream f(file);
  if (!f) throw ConfigError("cannot read config '" + file.string() + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), id, file.string(), file.has_parent_path() ? file.parent_path() : fs::path("."));
}

/// Output sink handed to a running experiment.
class Context {
 public:
  Context(const ExperimentConfig& cfg, RunReport& report) : cfg_(cfg), report_(report) {}

  std::uint64_t seed() const { return cfg_.seed; }
  Rng rng(std::uint64_t stream) const { return Rng(cfg_.seed).split(stream); }
  const fs::path& base_dir() const { return cfg_.base_dir; }

  bool wants(const std::string& format) const {
    return std::find(cfg_.emit.begin(), cfg_.emit.end(), format) != cfg_.emit.end();
  }

  void metric(const std::string& name, double value) {
    if (!std::isfinite(value)) throw Error("metric '" + name + "' is not finite");
    report_.metrics[name] = value;
  }
  void note(const std::string& name, std::string value) { report_.notes[name] = std::move(value); }

  void csv(const std::string& name, const io::Table& t) {
    if (!wants("csv")) return;
    io::write_csv(cfg_.out_dir / name, t);
    report_.artifacts.push_back(name);
  }
  void svg_lines(const std::string& name, const std::string& title, const std::string& xl, const std::string& yl,
                 const std::vector<io::Curve>& curves, bool log_x = false) {
    if (!wants("svg")) return;
    io::write_svg_lines(cfg_.out_dir / name, title, xl, yl, curves, log_x);
    report_.artifacts.push_back(name);
  }
  void svg_heatmap(const std::string& name, const std::string& title, const std::vector<double>& xs,
                   const std::vector<double>& ys, const std::vector<int>& codes) {
    if (!wants("svg")) return;
    io::write_svg_heatmap(cfg_.out_dir / name, title, xs, ys, codes);
    report_.artifacts.push_back(name);
  }
  void pgm(const std::string& name, const Image& img) {
    if (!wants("pgm")) return;
    io::write_pgm(cfg_.out_dir / name, img);
    report_.artifacts.push_back(name);
  }
  void bits(const std::string& name, const security::BitStream& s) {
    if (!wants("bits")) return;
    io::write_bits(cfg_.out_dir / name, s.bits, s.source);
    report_.artifacts.push_back(name);
    report_.artifacts.push_back(name + ".json");
  }

 private:
  const ExperimentConfig& cfg_;
  RunReport& report_;
};

using Runner = std::function<void(Context&)>;

struct ExperimentSpec {
  std::string id;
  std::string summary;
  // Reads parameters and returns the work to run; nothing heavy happens here.
  std::function<Runner(Params&)> configure;
};

namespace experiments {

inline std::vector<double> decimate(const std::vector<double>& x, std::size_t step) {
  std::vector<double> out;
  for (std::size_t k = 0; k < x.size(); k += step) out.push_back(x[k]);
  return out;
}

inline std::string fixed_name(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

// -- synapse-facilitation ---------------------------------------------------

inline Runner synapse_facilitation(Params& p) {
  synapse::EquivCircuit circuit;
  synapse::LightProtocol light;
  const double dt = p.positive("dt", 1e-6);
  auto gaps_ms = p.numbers("gaps_ms", {10, 20, 50, 100, 200, 500, 1000, 2000}, 2);
  for (std::size_t k = 0; k < gaps_ms.size(); ++k)
    if (!(gaps_ms[k] >= 0.0)) p.fail("gaps_ms[" + std::to_string(k) + "]", "must be >= 0");
  light.pulse_width = p.positive("pulse_width_ms", 2.0) * 1e-3;
  light.flux = p.non_negative("flux", 1.0);
  circuit.r_trap = p.positive("r_trap", circuit.r_trap);
  circuit.c_trap = p.positive("c_trap", circuit.c_trap);
  circuit.trap_enabled = p.boolean("trap_enabled", true);
  const bool control = p.boolean("control", true);
  const bool fit = p.boolean("fit", true);
  if (dt > circuit.max_stable_dt()) p.fail("dt", "exceeds the stability bound " + io::format_double(circuit.max_stable_dt()));
  return [=](Context& ctx) {
    std::vector<double> gaps;
    for (double g : gaps_ms) gaps.push_back(g * 1e-3);
    const auto sweep = synapse::facilitation_sweep(circuit, light, gaps, dt);
    io::Table t;
    std::vector<double> ratio;
    for (const auto& [g, r] : sweep) ratio.push_back(r);
    t.add("gap_ms", gaps_ms);
    t.add("ratio", ratio);
    std::vector<io::Curve> curves{{"trap enabled", gaps_ms, ratio}};
    for (std::size_t k = 0; k < gaps_ms.size(); ++k) ctx.metric("ratio_" + fixed_name(gaps_ms[k]) + "ms", ratio[k]);
    if (control) {
      auto off = circuit;
      off.trap_enabled = false;
      const auto ctrl = synapse::facilitation_sweep(off, light, gaps, dt);
      std::vector<double> cr;
      double dev = 0.0;
      for (const auto& [g, r] : ctrl) {
        cr.push_back(r);
        dev = std::max(dev, std::abs(r - 1.0));
      }
      t.add("control_ratio", cr);
      curves.push_back({"trap disabled", gaps_ms, cr});
      ctx.metric("control_max_deviation", dev);
    }
    if (fit && sweep.size() >= 6) {
      try {
        const auto f = synapse::fit_biexponential(sweep);
        ctx.metric("fit_converged", 1.0);
        ctx.metric("fit_alpha1", f.alpha1);
        ctx.metric("fit_alpha2", f.alpha2);
        ctx.metric("fit_t1_ms", f.t1 * 1e3);
        ctx.metric("fit_t2_ms", f.t2 * 1e3);
        ctx.metric("fit_beta", f.beta);
        ctx.metric("fit_ill_conditioned", f.ill_conditioned ? 1.0 : 0.0);
        std::vector<double> fx;
        for (double g : gaps) fx.push_back(f(g));
        t.add("fit", fx);
      } catch (const synapse::FitFailure&) {
        ctx.metric("fit_converged", 0.0);
      }
    }
    ctx.csv("facilitation.csv", t);
    ctx.svg_lines("facilitation.svg", "Paired-pulse facilitation", "inter-pulse gap (ms)", "amp2 / amp1", curves, true);
  };
}

// -- reservoir-waveforms ----------------------------------------------------

inline Runner reservoir_waveforms(Params& p) {
  const auto topology = p.string("topology", "ring", {"ring", "small-world"});
  const auto n = static_cast<int>(p.integer("n_nodes", 12, 3, 256));
  const double rewiring = p.in_range("rewiring_p", 0.3, 0.0, 1.0);
  const auto graph_seed = static_cast<std::uint64_t>(p.integer("graph_seed", 0, 0));
  const double sigma = p.non_negative("sigma_dev", 0.0);
  const double c_node = p.non_negative("c_node", 5e-7);
  std::vector<std::int64_t> def_readouts;
  if (topology == "ring") def_readouts = {n / 4, n / 2};
  else
    for (int k = 1; k <= 5; ++k) def_readouts.push_back(k * n / 6);
  const auto readouts64 = p.integers("readouts", def_readouts);
  if (readouts64.empty()) p.fail("readouts", "needs at least one node");
  std::vector<int> readouts;
  for (std::size_t k = 0; k < readouts64.size(); ++k) {
    if (readouts64[k] < 0 || readouts64[k] >= n) p.fail("readouts[" + std::to_string(k) + "]", "node out of range");
    readouts.push_back(static_cast<int>(readouts64[k]));
  }
  reservoir::WaveformTask task;
  task.n_per_class = static_cast<int>(p.integer("n_per_class", 150, 2, 100000));
  task.f_lo = p.positive("f_lo", 80.0);
  task.f_hi = p.positive("f_hi", 120.0);
  if (!(task.f_hi > task.f_lo)) p.fail("f_hi", "must exceed f_lo");
  task.amplitude = p.positive("amplitude", 1.0);
  task.hyper.epochs = static_cast<int>(p.integer("epochs", 2000, 1, 1000000));
  task.hyper.learning_rate = p.positive("learning_rate", 0.5);
  task.hyper.test_fraction = p.in_range("test_fraction", 0.5, 0.05, 0.95);
  auto& dev = p.table("device");
  const auto device = read_device(dev, "linear-drift");
  if (device.kind == devices::DeviceKind::StochasticSwitch) dev.fail("kind", "network edges must be drift devices");
  return [=](Context& ctx) {
    auto net = topology == "ring" ? reservoir::make_ring(n, device)
                                  : reservoir::make_small_world(n, rewiring, graph_seed, device);
    net.sigma_dev = sigma;
    net.c_node = c_node;
    const auto res = reservoir::classify_waveforms(net, readouts, task, ctx.seed());
    ctx.metric("train_accuracy", res.train_accuracy);
    ctx.metric("test_accuracy", res.test_accuracy);
    ctx.metric("edges", static_cast<double>(net.edges.size()));

    // node potentials for one sine and one triangle at mid-band frequency
    const double f = 0.5 * (task.f_lo + task.f_hi);
    io::Table t;
    std::vector<io::Curve> curves;
    for (auto kind : {reservoir::WaveKind::Sine, reservoir::WaveKind::Triangle}) {
      const reservoir::WaveformSample w{kind, f, task.amplitude};
      TimeSeries in;
      in.dt = 1.0 / (f * task.features.steps_per_period);
      in.samples.resize(static_cast<std::size_t>(task.features.periods * task.features.steps_per_period));
      for (std::size_t k = 0; k < in.size(); ++k) in.samples[k] = w.value(in.time(k));
      const std::vector<devices::MemristorParams> devs(net.edges.size(), net.device);
      const auto states = reservoir::reservoir_states(net, devs, in);
      const std::string tag = kind == reservoir::WaveKind::Sine ? "sine" : "triangle";
      if (t.columns.empty()) {
        std::vector<double> time(in.size());
        for (std::size_t k = 0; k < in.size(); ++k) time[k] = in.time(k);
        t.add("t", time);
      }
      t.add(tag + "_input", in.samples);
      for (int r : readouts) {
        std::vector<double> v(in.size());
        for (std::size_t k = 0; k < in.size(); ++k) v[k] = states(r, static_cast<Eigen::Index>(k));
        t.add(tag + "_node" + std::to_string(r), v);
        curves.push_back({tag + " node " + std::to_string(r), t.columns.front(), v});
      }
    }
    ctx.csv("readout_states.csv", t);
    ctx.svg_lines("readout_states.svg", "Readout node potentials", "t (s)", "V", curves);
  };
}

// -- interval-consonance ----------------------------------------------------

inline const std::map<std::string, std::pair<int, int>>& interval_table() {
  static const std::map<std::string, std::pair<int, int>> t{
      {"unison", {1, 1}},        {"minor-second", {16, 15}}, {"major-second", {9, 8}},
      {"minor-third", {6, 5}},   {"major-third", {5, 4}},    {"fourth", {4, 3}},
      {"tritone", {45, 32}},     {"fifth", {3, 2}},          {"minor-sixth", {8, 5}},
      {"major-sixth", {5, 3}},   {"minor-seventh", {16, 9}}, {"major-seventh", {15, 8}},
      {"octave", {2, 1}}};
  return t;
}

inline Runner interval_consonance(Params& p) {
  dynamics::IntervalExperiment base;
  base.f1 = p.positive("f1", 220.0);
  base.duration = p.positive("duration", 1.0);
  base.discard = p.non_negative("discard", 0.1);
  base.tone_amplitude = p.positive("tone_amplitude", 0.5);
  base.sample_rate = p.positive("sample_rate", 44100.0);
  base.score_threshold = p.in_range("score_threshold", 0.9, 0.0, 1.0);
  base.tc_max = p.positive("tc_max", 0.1);
  const auto names = p.strings("intervals", {"octave", "fifth", "fourth", "tritone"});
  for (std::size_t k = 0; k < names.size(); ++k)
    if (!interval_table().count(names[k]) || names[k] == "unison")
      p.fail("intervals[" + std::to_string(k) + "]", "unknown interval '" + names[k] + "'");
  base.device = read_device(p.table("device"), "linear-drift");
  return [=](Context& ctx) {
    std::vector<dynamics::IntervalResult> results(names.size());
    parallel_for(names.size(), [&](std::size_t k) {
      auto e = base;
      const auto [num, den] = interval_table().at(names[k]);
      e.f2 = e.f1 * num / den;
      e.validate();
      results[k] = dynamics::interval_consonance(e);
    });
    const auto ref = dynamics::single_tone_reference(base);
    double ref_peak = 0.0;
    for (double i : ref.i) ref_peak = std::max(ref_peak, std::abs(i));
    io::Table summary;
    std::vector<double> idx, ratio, tc, score, consonant, envelope;
    std::vector<io::Curve> loops;
    const auto tail = static_cast<std::size_t>(std::llround(0.05 * base.sample_rate));
    for (std::size_t k = 0; k < names.size(); ++k) {
      const auto& r = results[k];
      double peak = 0.0;
      for (double i : r.trajectory.i) peak = std::max(peak, std::abs(i));
      idx.push_back(static_cast<double>(k));
      ratio.push_back(static_cast<double>(r.ratio.p) / r.ratio.q);
      tc.push_back(r.common_period);
      score.push_back(r.score);
      consonant.push_back(r.label == dynamics::IntervalLabel::Consonant ? 1.0 : 0.0);
      envelope.push_back(peak / ref_peak);
      ctx.metric("score_" + names[k], r.score);
      ctx.metric("consonant_" + names[k], consonant.back());
      ctx.metric("envelope_ratio_" + names[k], envelope.back());
      ctx.note("ratio_" + names[k], std::to_string(r.ratio.p) + "/" + std::to_string(r.ratio.q));
      const std::size_t n = r.trajectory.size();
      const std::size_t from = n > tail ? n - tail : 0;
      loops.push_back({names[k], std::vector<double>(r.trajectory.v.begin() + static_cast<std::ptrdiff_t>(from), r.trajectory.v.end()),
                       std::vector<double>(r.trajectory.i.begin() + static_cast<std::ptrdiff_t>(from), r.trajectory.i.end())});
      io::Table tr;
      std::vector<double> time;
      for (std::size_t s = from; s < n; ++s) time.push_back(static_cast<double>(s) * r.trajectory.dt);
      tr.add("t", time);
      tr.add("v", loops.back().x);
      tr.add("i", loops.back().y);
      tr.add("x", std::vector<double>(r.trajectory.x.begin() + static_cast<std::ptrdiff_t>(from), r.trajectory.x.end()));
      ctx.csv("trajectory_" + names[k] + ".csv", tr);
    }
    ctx.metric("reference_peak_current", ref_peak);
    summary.add("index", idx);
    summary.add("ratio", ratio);
    summary.add("common_period_s", tc);
    summary.add("score", score);
    summary.add("consonant", consonant);
    summary.add("envelope_ratio", envelope);
    ctx.csv("intervals.csv", summary);
    ctx.svg_lines("loops.svg", "I-V loops, last 50 ms", "v (V)", "i (A)", loops);
  };
}

// -- esm-amplitude ----------------------------------------------------------

inline Runner esm_amplitude(Params& p) {
  reservoir::EchoNode node;
  node.gain = p.positive("gain", node.gain);
  node.sense_resistance = p.positive("sense_resistance", node.sense_resistance);
  node.delay = p.positive("delay", node.delay);
  node.clip = p.positive("clip", node.clip);
  const double nominal = p.positive("nominal_threshold_vpp", node.threshold_vpp);
  const auto amps = p.numbers("amplitudes_vpp", linspace(0.5, 3.0, 20), 1);
  const auto n_iter = static_cast<int>(p.integer("iterations", 20, 1, 10000));
  const auto samples = static_cast<std::size_t>(p.integer("samples", 200, 8, 1000000));
  node.device = read_device(p.table("device"), "rectifying");
  return [=](Context& ctx) {
    const double thr = reservoir::esm_threshold(node, 0.05, node.clip, n_iter, samples);
    ctx.metric("threshold_vpp", thr);
    ctx.metric("threshold_relative_error", std::abs(thr - nominal) / nominal);
    std::vector<std::vector<double>> traj(amps.size());
    parallel_for(amps.size(), [&](std::size_t k) {
      traj[k] = reservoir::esm_iterate(node, reservoir::esm_pulse(amps[k], node.delay, samples), n_iter);
    });
    io::Table t, it;
    std::vector<double> finals, grows;
    bool dichotomy = true;
    std::vector<io::Curve> curves;
    std::vector<double> steps;
    for (int s = 0; s <= n_iter; ++s) steps.push_back(s);
    it.add("iteration", steps);
    for (std::size_t k = 0; k < amps.size(); ++k) {
      const bool g = traj[k].back() > traj[k].front();
      finals.push_back(traj[k].back());
      grows.push_back(g ? 1.0 : 0.0);
      if (g != (amps[k] > thr)) dichotomy = false;
      it.add("vpp_" + fixed_name(amps[k]), traj[k]);
      curves.push_back({fixed_name(amps[k]) + " Vpp", steps, traj[k]});
    }
    ctx.metric("dichotomy_holds", dichotomy ? 1.0 : 0.0);
    t.add("input_vpp", amps);
    t.add("final_vpp", finals);
    t.add("grows", grows);
    ctx.csv("amplitudes.csv", t);
    ctx.csv("iterations.csv", it);
    ctx.svg_lines("iterations.svg", "Echo-state amplitude map", "iteration", "Vpp", curves);
  };
}

// -- chua-crypt -------------------------------------------------------------

inline std::vector<Image> test_images(std::size_t n) {
  Image h(n, n), v(n, n), rings(n, n);
  const double c = 0.5 * static_cast<double>(n - 1);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t col = 0; col < n; ++col) {
      const auto denom = static_cast<double>(std::max<std::size_t>(n - 1, 1));
      h.at(r, col) = static_cast<std::uint8_t>(std::lround(255.0 * static_cast<double>(col) / denom));
      v.at(r, col) = static_cast<std::uint8_t>(std::lround(255.0 * static_cast<double>(r) / denom));
      const double d = std::hypot(static_cast<double>(r) - c, static_cast<double>(col) - c);
      rings.at(r, col) = static_cast<std::uint8_t>(127.5 + 127.5 * std::cos(d * 0.4));
    }
  return {h, v, rings};
}

inline Runner chua_crypt(Params& p) {
  security::ChaoticChannel ch;
  ch.mask_gain = p.positive("mask_gain", ch.mask_gain);
  ch.dt = p.in_range("dt", ch.dt, 1e-5, 0.01);
  ch.lowpass_cutoff = p.non_negative("lowpass_cutoff", ch.lowpass_cutoff);
  ch.discard = p.non_negative("discard", ch.discard);
  ch.settle = p.non_negative("settle", ch.settle);
  ch.rx = ch.tx;
  const double duration = p.positive("duration", 2000.0);
  const double f_msg = p.positive("message_frequency", 0.0025);
  const double mismatch = p.number("alpha_mismatch", 0.05);
  const double snr = p.number("snr_db", 20.0);
  const auto trials = static_cast<std::size_t>(p.integer("noise_trials", 10, 1, 1000));
  const auto size = static_cast<std::size_t>(p.integer("image_size", 128, 1, 4096));
  const auto perm_seed = static_cast<std::uint64_t>(p.integer("permutation_seed", 12345, 0));
  if (!(ch.discard < duration)) p.fail("discard", "must be shorter than the duration");
  return [=](Context& ctx) {
    const auto n = static_cast<std::size_t>(std::llround(duration / ch.dt)) + 1;
    TimeSeries raw;
    raw.dt = ch.dt;
    raw.samples.resize(n);
    for (std::size_t k = 0; k < n; ++k) raw.samples[k] = std::sin(2.0 * std::numbers::pi * f_msg * raw.time(k));
    const auto msg = security::scale_message(ch, raw);
    const auto s = security::mask_encrypt(ch, msg);
    const auto matched = security::mask_decrypt(ch, s, &msg);
    ctx.metric("corr_matched", *matched.correlation);
    auto mis = ch;
    mis.rx.alpha = ch.tx.alpha * (1.0 + mismatch);
    ctx.metric("corr_mismatch_plus", *security::mask_decrypt(mis, s, &msg).correlation);
    mis.rx.alpha = ch.tx.alpha * (1.0 - mismatch);
    ctx.metric("corr_mismatch_minus", *security::mask_decrypt(mis, s, &msg).correlation);
    std::vector<double> noisy(trials);
    parallel_for(trials, [&](std::size_t k) {
      Rng rng = Rng(ctx.seed()).split(100 + k);
      noisy[k] = *security::mask_decrypt(ch, security::add_channel_noise(s, snr, rng), &msg).correlation;
    });
    double sum = 0.0;
    for (double c : noisy) sum += c;
    ctx.metric("corr_noise_mean", sum / static_cast<double>(trials));
    ctx.metric("corr_noise_min", *std::min_element(noisy.begin(), noisy.end()));
    ctx.metric("corr_noise_max", *std::max_element(noisy.begin(), noisy.end()));
    ctx.metric("corr_noise_fraction_ge_0.8",
               static_cast<double>(std::count_if(noisy.begin(), noisy.end(), [](double c) { return c >= 0.8; })) /
                   static_cast<double>(trials));

    io::Table t;
    const std::size_t step = 100;
    std::vector<double> time;
    for (std::size_t k = 0; k < n; k += step) time.push_back(msg.time(k));
    t.add("t", time);
    t.add("message", decimate(msg.samples, step));
    t.add("transmitted", decimate(s.samples, step));
    t.add("recovered", decimate(matched.message.samples, step));
    ctx.csv("masking.csv", t);
    ctx.svg_lines("masking.svg", "Message and matched-key recovery", "t", "amplitude",
                  {{"message", time, decimate(msg.samples, step)},
                   {"recovered", time, decimate(matched.message.samples, step)}});

    security::ScrambleKey key;
    key.permutation_seed = perm_seed;
    const auto images = test_images(size);
    const std::array<std::string, 3> names{"hgrad", "vgrad", "rings"};
    bool roundtrip = true;
    std::vector<Image> scrambled;
    for (std::size_t k = 0; k < images.size(); ++k) {
      const auto sc = security::scramble_image(images[k], key);
      const auto back = security::descramble_image(sc, key);
      roundtrip = roundtrip && back == images[k];
      ctx.pgm(names[k] + ".pgm", images[k]);
      ctx.pgm(names[k] + "_scrambled.pgm", sc);
      ctx.pgm(names[k] + "_restored.pgm", back);
      scrambled.push_back(sc);
    }
    ctx.metric("scramble_roundtrip", roundtrip ? 1.0 : 0.0);
    const std::vector<double> a(scrambled[0].pixels.begin(), scrambled[0].pixels.end());
    const std::vector<double> b(scrambled[1].pixels.begin(), scrambled[1].pixels.end());
    ctx.metric("scrambled_output_corr", pearson(a, b));
    ctx.metric("chi2_p_hgrad", security::histogram_uniformity(scrambled[0].pixels).p_value);
    ctx.metric("chi2_p_vgrad", security::histogram_uniformity(scrambled[1].pixels).p_value);
  };
}

// -- puf-study --------------------------------------------------------------

inline Runner puf_study(Params& p) {
  security::PufDesign d;
  d.rows = static_cast<std::size_t>(p.integer("rows", 16, 1, 512));
  d.cols = static_cast<std::size_t>(p.integer("cols", 16, 1, 512));
  d.g_lrs = p.positive("g_lrs", d.g_lrs);
  d.g_hrs = p.positive("g_hrs", d.g_hrs);
  d.lrs_fraction = p.in_range("lrs_fraction", d.lrs_fraction, 0.0, 1.0);
  d.sigma_log = p.non_negative("sigma_log", d.sigma_log);
  d.read_noise_sigma = p.non_negative("read_noise", d.read_noise_sigma);
  const auto devices = static_cast<std::size_t>(p.integer("devices", 100, 2, 100000));
  const auto challenges = static_cast<std::size_t>(p.integer("challenges", 256, 1, 1000000));
  const double v_c = p.positive("v_c", 0.2);
  return [=](Context& ctx) {
    const auto st = security::puf_study(d, devices, challenges, ctx.seed());
    ctx.metric("inter_hd", st.inter_hd);
    ctx.metric("intra_hd", st.intra_hd);
    security::CrossbarPUF two{2, 2, Eigen::MatrixXd::Constant(2, 2, d.g_lrs), 0.0};
    const double oracle = 4.0 / 3.0 * d.g_lrs * v_c;
    ctx.metric("two_by_two_relative_error", std::abs(security::puf_current(two, {0, 0, v_c}) - oracle) / oracle);

    Rng fab = Rng(ctx.seed()).split(0).split(0);
    const auto puf = security::make_crossbar_puf(d, fab);
    const auto set = security::puf_challenge_set(puf, challenges, v_c);
    const auto resp = security::puf_responses(puf, set, nullptr);
    io::Table t;
    std::vector<double> row, col, cur, bit;
    for (std::size_t k = 0; k < set.size(); ++k) {
      row.push_back(static_cast<double>(set[k].row));
      col.push_back(static_cast<double>(set[k].col));
      cur.push_back(resp[k].current);
      bit.push_back(resp[k].bit);
    }
    t.add("row", row);
    t.add("col", col);
    t.add("current_a", cur);
    t.add("bit", bit);
    ctx.csv("device0_responses.csv", t);
  };
}

// -- trng-study -------------------------------------------------------------

inline Runner trng_study(Params& p) {
  const auto n_bits = static_cast<std::size_t>(p.integer("n_bits", 100000, 100, 100000000));
  security::TrngOptions fair;
  fair.pulse_voltage = p.positive("pulse_voltage", fair.pulse_voltage);
  fair.threshold_quantile = p.in_range("threshold_quantile", 0.5, 1e-6, 1.0 - 1e-6);
  const double biased_q = p.in_range("biased_quantile", 0.3, 1e-6, 1.0 - 1e-6);
  const bool chaotic = p.boolean("keystream_check", true);
  const auto device = read_device(p.table("device"), "stochastic-switch");
  if (device.kind != devices::DeviceKind::StochasticSwitch)
    throw ConfigError("params.device.kind: the generator needs a stochastic-switch device");
  return [=](Context& ctx) {
    Rng rng = ctx.rng(0);
    const auto bits = security::trng_generate(device, n_bits, rng, fair);
    auto put = [&](const std::string& tag, const security::BitStream& b) {
      const auto r = security::randomness_tests(b);
      ctx.metric(tag + "_monobit_p", r.monobit);
      ctx.metric(tag + "_block_frequency_p", r.block_frequency);
      ctx.metric(tag + "_runs_p", r.runs);
      ctx.metric(tag + "_all_pass", r.all_pass() ? 1.0 : 0.0);
      ctx.metric(tag + "_length", static_cast<double>(b.size()));
      double ones = 0.0;
      for (auto v : b.bits) ones += v;
      ctx.metric(tag + "_ones_fraction", ones / static_cast<double>(b.size()));
    };
    put("fair", bits);
    auto biased_opt = fair;
    biased_opt.threshold_quantile = biased_q;
    Rng rng_b = ctx.rng(1);
    const auto biased = security::trng_generate(device, n_bits, rng_b, biased_opt);
    put("biased", biased);
    const auto corrected = security::von_neumann(biased);
    put("corrected", corrected);
    ctx.metric("corrected_expected_length", static_cast<double>(n_bits) * biased_q * (1.0 - biased_q));
    if (chaotic) {
      security::KeystreamParams kp;
      kp.init[0] += 1e-3 * static_cast<double>(ctx.seed() % 1000);
      const auto ks = security::keystream(kp, (n_bits + 7) / 8);
      auto kb = security::bits_from_bytes(ks, "chua-keystream");
      kb.bits.resize(n_bits);
      put("keystream", kb);
    }
    ctx.bits("fair.bits", bits);
  };
}

// -- bipful-demo ------------------------------------------------------------

inline Runner bipful_demo(Params& p) {
  const double i0 = p.positive("intensity", 1.0);
  const auto irr = p.numbers("irradiation_nm", {365.0, 310.0, 254.0}, 1);
  const auto an = p.numbers("analysis_nm", {450.0, 550.0, 650.0}, 1);
  const auto channels = p.strings("channel_names", {"blue", "green", "red"});
  if (channels.size() != an.size()) p.fail("channel_names", "must name every analysis wavelength");
  const auto rules = p.string("rules", "");
  return [=](Context& ctx) {
    std::optional<fuzzy::FuzzySystem> sys;
    if (!rules.empty()) {
      fs::path path = rules;
      if (path.is_relative()) path = ctx.base_dir() / path;
      try {
        sys = fuzzy::load_fuzzy_system(path.string());
      } catch (const ConfigError& e) {
        throw ConfigError("params.rules: " + std::string(e.what()));
      }
    }
    const auto specs = fuzzy::synthetic_photochromes();
    io::Table t;
    t.add("analysis_nm", an);
    std::set<std::size_t> winners;
    for (double l : irr) {
      const auto a = fuzzy::bipful_response(specs, i0, l, an);
      const auto best = static_cast<std::size_t>(std::max_element(a.begin(), a.end()) - a.begin());
      winners.insert(best);
      ctx.metric("argmax_channel_" + fixed_name(l) + "nm", static_cast<double>(best));
      ctx.note("colour_" + fixed_name(l) + "nm", channels[best]);
      t.add("absorbance_" + fixed_name(l) + "nm", a);
      if (sys) {
        const double peak = *std::max_element(a.begin(), a.end());
        std::map<std::string, double> crisp;
        for (std::size_t c = 0; c < an.size(); ++c) crisp[channels[c]] = peak > 0.0 ? a[c] / peak : 0.0;
        const auto out = fuzzy::fls_eval(*sys, crisp);
        for (const auto& [name, v] : out.values) ctx.metric("fls_" + name + "_" + fixed_name(l) + "nm", v);
      }
    }
    ctx.metric("distinct_channels", winners.size() == irr.size() ? 1.0 : 0.0);
    ctx.csv("absorbance.csv", t);
    std::vector<io::Curve> spectra;
    const auto grid = linspace(380.0, 720.0, 171);
    for (double l : irr) spectra.push_back({fixed_name(l) + " nm", grid, fuzzy::bipful_response(specs, i0, l, grid)});
    ctx.svg_lines("spectra.svg", "Photostationary absorbance", "wavelength (nm)", "A", spectra);
  };
}

// -- srdp-sweep -------------------------------------------------------------

inline Runner srdp_sweep(Params& p) {
  devices::PulseTrain base;
  base.amplitude = p.number("amplitude", base.amplitude);
  base.width = p.positive("width", base.width);
  base.count = static_cast<int>(p.integer("count", base.count, 1, 100000));
  const auto freqs = p.numbers("frequencies_hz", {1, 2, 5, 10, 20, 50, 100}, 1);
  devices::BcmState bcm;
  bcm.theta = p.positive("theta_hz", bcm.theta);
  bcm.tau_theta = p.positive("tau_theta", bcm.tau_theta);
  bcm.w = p.non_negative("initial_weight", bcm.w);
  const double prime_hz = p.positive("priming_hz", 50.0);
  const auto device = read_device(p.table("device"), "linear-drift");
  return [=](Context& ctx) {
    auto train_at = [&](double f) {
      auto t = base;
      t.frequency = f;
      t.validate();
      return t;
    };
    std::vector<double> naive, primed;
    for (double f : freqs) {
      const std::array<devices::PulseTrain, 1> one{train_at(f)};
      naive.push_back(devices::srdp_response(device, bcm, one).dw[0]);
      // after a high-rate priming train the threshold has slid upward
      const std::array<devices::PulseTrain, 2> two{train_at(prime_hz), train_at(f)};
      primed.push_back(devices::srdp_response(device, bcm, two).dw[1]);
      ctx.metric("dw_" + fixed_name(f) + "hz", naive.back());
      ctx.metric("dw_primed_" + fixed_name(f) + "hz", primed.back());
    }
    io::Table t;
    t.add("frequency_hz", freqs);
    t.add("dw", naive);
    t.add("dw_after_priming", primed);
    ctx.csv("srdp.csv", t);
    ctx.svg_lines("srdp.svg", "Rate-dependent weight change", "frequency (Hz)", "dw",
                  {{"naive", freqs, naive}, {"after priming", freqs, primed}}, true);
  };
}

// -- lock-map ---------------------------------------------------------------

inline Runner lock_map(Params& p) {
  reservoir::OscillatorBank bank;
  const auto nat = p.numbers("natural_hz", {bank.natural_freqs.begin(), bank.natural_freqs.end()});
  if (nat.size() != 4) p.fail("natural_hz", "needs exactly 4 frequencies");
  for (std::size_t k = 0; k < 4; ++k) bank.natural_freqs[k] = nat[k];
  bank.coupling = p.non_negative("coupling", bank.coupling);
  const double lo = p.positive("f_lo", 250.0);
  const double hi = p.positive("f_hi", 650.0);
  if (!(hi > lo)) p.fail("f_hi", "must exceed f_lo");
  const auto n = static_cast<std::size_t>(p.integer("grid_points", 161, 2, 4096));
  const auto classes = static_cast<int>(p.integer("classes", 5, 2, 64));
  const auto per_class = static_cast<int>(p.integer("points_per_class", 60, 2, 100000));
  const double spread = p.positive("spread", 0.3);
  return [=](Context& ctx) {
    const auto grid = linspace(lo, hi, n);
    const auto map = reservoir::injection_lock_map(bank, grid, grid);
    std::set<int> distinct(map.codes.begin(), map.codes.end());
    ctx.metric("sync_states", static_cast<double>(distinct.size()));
    Rng rng = ctx.rng(0);
    const auto pts = reservoir::synthetic_vowels(map, classes, per_class, spread, rng);
    std::vector<reservoir::LabeledPoint> train, test;
    for (std::size_t k = 0; k < pts.size(); ++k) (k % 2 == 0 ? train : test).push_back(pts[k]);
    ctx.metric("vowel_accuracy", reservoir::vowel_classify(map, train, test));
    io::Table t;
    std::vector<double> fa, fb, code;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        fa.push_back(grid[i]);
        fb.push_back(grid[j]);
        code.push_back(map.at(i, j));
      }
    t.add("f_a", fa);
    t.add("f_b", fb);
    t.add("code", code);
    ctx.csv("lock_map.csv", t);
    ctx.svg_heatmap("lock_map.svg", "Synchronisation states", grid, grid, map.codes);
  };
}

// -- photo-hash -------------------------------------------------------------

inline Runner photo_hash(Params& p) {
  security::PhotoHashParams hp;
  hp.i0_a = p.number("i0_a", hp.i0_a);
  hp.i0_c = p.number("i0_c", hp.i0_c);
  hp.k_a = p.non_negative("k_a", hp.k_a);
  hp.k_c = p.non_negative("k_c", hp.k_c);
  hp.k_q = p.non_negative("k_q", hp.k_q);
  hp.t0 = p.positive("t0", hp.t0);
  hp.window = p.positive("window", hp.window);
  hp.readout_resolution = p.positive("readout_resolution", hp.readout_resolution);
  const auto message = p.string("message", "memristive photoelectrochemical hash");
  const auto trials = static_cast<std::size_t>(p.integer("avalanche_trials", 1000, 0, 1000000));
  const auto length = static_cast<std::size_t>(p.integer("avalanche_message_bytes", 64, 1, 1 << 20));
  return [=](Context& ctx) {
    const std::vector<std::uint8_t> bytes(message.begin(), message.end());
    const auto digest = security::photo_hash(hp, bytes);
    ctx.note("digest", security::to_hex(digest));
    ctx.note("empty_digest", security::to_hex(security::photo_hash(hp, std::span<const std::uint8_t>{})));
    auto hq = hp;
    hq.k_q = 0.0;
    auto inst = hq;
    inst.i0_a = hq.i0_a * (1.0 - hq.t0);
    ctx.metric("kq0_matches_memoryless", security::photo_hash(hq, bytes) == security::photo_hash_memoryless(inst, bytes) ? 1.0 : 0.0);
    if (trials > 0) {
      Rng rng = ctx.rng(0);
      std::vector<std::uint8_t> base(length);
      for (auto& b : base) b = static_cast<std::uint8_t>(rng.below(256));
      std::vector<std::size_t> flips(trials);
      for (auto& f : flips) f = rng.below(length * 8);
      const auto ref = security::photo_hash(hp, base);
      std::vector<double> dist(trials);
      parallel_for(trials, [&](std::size_t k) {
        auto m = base;
        m[flips[k] / 8] ^= static_cast<std::uint8_t>(1u << (flips[k] % 8));
        dist[k] = static_cast<double>(security::hamming_bits(ref, security::photo_hash(hp, m))) / 256.0;
      });
      double sum = 0.0;
      for (double d : dist) sum += d;
      ctx.metric("avalanche_mean", sum / static_cast<double>(trials));
      ctx.metric("avalanche_min", *std::min_element(dist.begin(), dist.end()));
      io::Table t;
      std::vector<double> bit;
      for (auto f : flips) bit.push_back(static_cast<double>(f));
      t.add("flipped_bit", bit);
      t.add("digest_distance", dist);
      ctx.csv("avalanche.csv", t);
    }
    // photocurrent trace of the digest phase for the configured message
    std::vector<double> fl;
    for (auto b : bytes) fl.push_back((b + 1) / 256.0);
    if (!fl.empty()) {
      io::Table t;
      std::vector<double> time, cur;
      for (std::size_t k = 0; k < fl.size(); ++k) {
        const double tk = hp.window * static_cast<double>(k + 1);
        time.push_back(tk);
        cur.push_back(security::photocurrent_with_memory(hp, std::span(fl).first(k + 1), tk));
      }
      t.add("t", time);
      t.add("flux", fl);
      t.add("photocurrent_a", cur);
      ctx.csv("message_response.csv", t);
    }
  };
}

// -- harmonics --------------------------------------------------------------

inline Runner harmonics(Params& p) {
  dynamics::HarmonicDrive d;
  d.amplitude = p.positive("amplitude", d.amplitude);
  d.frequency = p.positive("frequency", d.frequency);
  d.periods = static_cast<int>(p.integer("periods", d.periods, 10, 100000));
  d.settle_periods = static_cast<int>(p.integer("settle_periods", d.settle_periods, 0, 100000));
  d.steps_per_period = static_cast<int>(p.integer("steps_per_period", d.steps_per_period, 16, 1000000));
  d.r_load = p.positive("r_load", d.r_load);
  d.k_max = static_cast<int>(p.integer("k_max", d.k_max, 2, 64));
  if (2 * d.k_max >= d.steps_per_period) p.fail("k_max", "highest harmonic must stay below Nyquist");
  const auto device = read_device(p.table("device"), "linear-drift");
  return [=](Context& ctx) {
    // analytic anchor: |sin| has a0 = 2/pi and a2 = 4/(3 pi) at twice the sine frequency
    TimeSeries rect;
    rect.dt = 1.0 / (d.frequency * d.steps_per_period);
    const auto n = static_cast<std::size_t>(d.periods * d.steps_per_period);
    for (std::size_t k = 0; k < n; ++k)
      rect.samples.push_back(std::abs(std::sin(2.0 * std::numbers::pi * d.frequency * rect.time(k))));
    const auto anchor = dynamics::harmonic_spectrum(rect, 2.0 * d.frequency, 2);
    ctx.metric("abs_sine_a1_over_a0", anchor.amplitude[1] / anchor.amplitude[0]);

    const std::array<std::pair<const char*, dynamics::HarmonicCircuit>, 3> circuits{{
        {"resistor", dynamics::HarmonicCircuit::Resistor},
        {"single", dynamics::HarmonicCircuit::SingleMemristor},
        {"bridge", dynamics::HarmonicCircuit::MemristorBridge},
    }};
    io::Table t;
    std::vector<double> ks;
    for (int k = 0; k <= d.k_max; ++k) ks.push_back(k);
    t.add("harmonic", ks);
    std::vector<io::Curve> curves;
    for (const auto& [name, c] : circuits) {
      const auto run = dynamics::harmonic_experiment(c, device, d);
      ctx.metric(std::string("shg_") + name, run.efficiency.second);
      ctx.metric(std::string("harmonics_total_") + name, run.efficiency.total);
      t.add(std::string("amplitude_") + name, run.spectrum.amplitude);
      const auto tail = static_cast<std::size_t>(2 * d.steps_per_period);
      const auto& v = run.load_voltage.samples;
      std::vector<double> x, y;
      for (std::size_t k = v.size() - tail; k < v.size(); ++k) {
        x.push_back(run.load_voltage.time(k));
        y.push_back(v[k]);
      }
      curves.push_back({name, x, y});
    }
    ctx.csv("spectra.csv", t);
    ctx.svg_lines("load_voltage.svg", "Load voltage, last two periods", "t (s)", "V", curves);
  };
}

// -- chua-lyapunov ----------------------------------------------------------

inline Runner chua_lyapunov(Params& p) {
  dynamics::ChuaParams c;
  c.alpha = p.number("alpha", c.alpha);
  c.beta = p.positive("beta", c.beta);
  c.m0 = p.number("m0", c.m0);
  c.m1 = p.number("m1", c.m1);
  const auto kind = p.string("nonlinearity", "piecewise-linear", {"piecewise-linear", "cubic"});
  if (kind == "cubic") c.nonlinearity = dynamics::ChuaNonlinearity::Cubic;
  c.cubic_a = p.number("cubic_a", c.cubic_a);
  c.cubic_b = p.number("cubic_b", c.cubic_b);
  const auto init = p.numbers("init", {0.7, 0.0, 0.0}, 3);
  if (init.size() != 3) p.fail("init", "needs exactly 3 values");
  const double dt = p.in_range("dt", 0.01, 1e-5, 0.01);
  const double duration = p.positive("duration", 600.0);
  const double transient = p.non_negative("transient", 100.0);
  if (!(transient < duration)) p.fail("transient", "must be shorter than the duration");
  const auto stride = static_cast<std::size_t>(p.integer("stride", 5, 1, 1000));
  const double offset = p.positive("perturbation", 1e-8);
  dynamics::LyapunovOptions opt;
  opt.embed_dim = static_cast<int>(p.integer("embed_dim", opt.embed_dim, 1, 64));
  opt.embed_delay = static_cast<int>(p.integer("embed_delay", opt.embed_delay, 0, 100000));
  opt.min_rise = p.non_negative("min_rise", opt.min_rise);
  return [=](Context& ctx) {
    const dynamics::Vec3 a{init[0], init[1], init[2]};
    dynamics::Vec3 b = a;
    b[0] += offset;
    const auto ta = dynamics::chua_integrate(c, a, duration, dt);
    const auto tb = dynamics::chua_integrate(c, b, duration, dt);

    auto x = ta.channel(0, stride);
    const auto skip = static_cast<std::size_t>(std::llround(transient / x.dt));
    x.samples.erase(x.samples.begin(), x.samples.begin() + static_cast<std::ptrdiff_t>(skip));
    const auto est = dynamics::lyapunov_largest(x, opt);
    ctx.metric("lambda", est.lambda);
    ctx.metric("lambda_fit_r2", est.r2);

    double span = 0.0, first_large = -1.0;
    std::vector<double> ts, sep;
    for (std::size_t k = 0; k < ta.size(); ++k) {
      double d = 0.0;
      for (int j = 0; j < 3; ++j) d += (ta.states[k][j] - tb.states[k][j]) * (ta.states[k][j] - tb.states[k][j]);
      d = std::sqrt(d);
      span = std::max(span, std::abs(ta.states[k][0]));
      if (first_large < 0.0 && d >= 1.0) first_large = dt * static_cast<double>(k);
      if (k % stride == 0) {
        ts.push_back(dt * static_cast<double>(k));
        sep.push_back(std::max(d, 1e-300));
      }
    }
    ctx.metric("x_peak", span);
    ctx.metric("divergence_time", first_large);
    ctx.metric("max_separation", *std::max_element(sep.begin(), sep.end()));

    std::vector<double> steps;
    for (std::size_t k = 0; k < est.divergence.size(); ++k) steps.push_back(static_cast<double>(k) * x.dt);
    io::Table div;
    div.add("t", steps);
    div.add("mean_log_distance", est.divergence);
    ctx.csv("divergence.csv", div);
    io::Table traj;
    traj.add("t", ts);
    traj.add("x", decimate(ta.channel(0).samples, stride));
    traj.add("y", decimate(ta.channel(1).samples, stride));
    traj.add("z", decimate(ta.channel(2).samples, stride));
    traj.add("separation", sep);
    ctx.csv("trajectory.csv", traj);
    std::vector<double> logsep;
    for (double s : sep) logsep.push_back(std::log10(s));
    ctx.svg_lines("separation.svg", "Separation of two trajectories", "t", "log10 distance", {{"separation", ts, logsep}});
    ctx.svg_lines("attractor.svg", "Attractor, x-y projection", "x", "y",
                  {{"orbit", decimate(ta.channel(0).samples, stride), decimate(ta.channel(1).samples, stride)}});
  };
}

}  // namespace experiments

inline const std::vector<ExperimentSpec>& registry() {
  static const std::vector<ExperimentSpec> r{
      {"synapse-facilitation", "paired-pulse facilitation of the photoelectrochemical synapse, with bi-exponential fit",
       experiments::synapse_facilitation},
      {"reservoir-waveforms", "sine vs triangle classification with a memristor network reservoir",
       experiments::reservoir_waveforms},
      {"interval-consonance", "two-tone drive of a memristor: periodicity score per musical interval",
       experiments::interval_consonance},
      {"esm-amplitude", "single-node echo-state amplitude growth/decay threshold", experiments::esm_amplitude},
      {"chua-crypt", "chaotic masking channel and image scrambler", experiments::chua_crypt},
      {"puf-study", "crossbar PUF uniqueness and reliability", experiments::puf_study},
      {"trng-study", "stochastic-delay random bits and statistical tests", experiments::trng_study},
      {"bipful-demo", "photochromic fuzzy discrimination of UV bands", experiments::bipful_demo},
      {"srdp-sweep", "rate-dependent plasticity with a sliding threshold", experiments::srdp_sweep},
      {"lock-map", "injection-lock synchronisation map and cluster classification", experiments::lock_map},
      {"photo-hash", "photocurrent hash digest and avalanche study", experiments::photo_hash},
      {"harmonics", "harmonic generation by resistor, memristor and memristor bridge", experiments::harmonics},
      {"chua-lyapunov", "Chua attractor, largest Lyapunov exponent and trajectory divergence",
       experiments::chua_lyapunov},
  };
  return r;
}

inline std::string experiment_ids() {
  std::string s;
  for (const auto& e : registry()) s += (s.empty() ? "" : ", ") + e.id;
  return s;
}

inline RunReport run_experiment(const ExperimentConfig& cfg) {
  const auto it = std::find_if(registry().begin(), registry().end(), [&](const auto& e) { return e.id == cfg.id; });
  if (it == registry().end())
    throw ConfigError("unknown experiment '" + cfg.id + "'; valid ids: " + experiment_ids());
  const auto start = std::chrono::steady_clock::now();
  Params params(&cfg.params, "params");
  Runner run = it->configure(params);
  params.finish();

  RunReport report;
  report.config = json{{"experiment", cfg.id},
                       {"seed", cfg.seed},
                       {"rng", "xoshiro256** (splitmix64 seeding)"},
                       {"output", {{"dir", cfg.out_dir.generic_string()}, {"emit", cfg.emit}}},
                       {"params", params.echo()}};
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw Error("cannot create output directory '" + cfg.out_dir.string() + "'");
  Context ctx(cfg, report);
  run(ctx);
  report.artifacts.push_back("report.json");
  io::write_json(cfg.out_dir / "report.json", report.to_json());
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace neuromime::harness
