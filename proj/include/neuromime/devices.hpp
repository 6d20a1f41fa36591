#pragma once

// Behavioural memristor models: linear ionic drift with a Joglekar window,
// a drift memristor behind a Shockley diode (rectifying junction), and a
// volatile binary switch with lognormal switching/relaxation delays.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "neuromime/core/error.hpp"
#include "neuromime/core/rng.hpp"
#include "neuromime/core/series.hpp"

namespace neuromime::devices {

enum class DeviceKind { LinearDrift, Rectifying, StochasticSwitch };
enum class ResistanceLevel { HRS, LRS };

struct MemristorParams {
  DeviceKind kind = DeviceKind::LinearDrift;
  double r_on = 100.0;           // Ω
  double r_off = 16e3;           // Ω
  double thickness = 10e-9;      // m
  double mobility = 1e-12;       // m² s⁻¹ V⁻¹
  double window_p = 2.0;         // Joglekar exponent
  double saturation_current = 1e-6;  // A (rectifying)
  double ideality = 2.0;
  double thermal_voltage = 0.025852;  // V at 300 K
  double v_set = 0.5;            // V (stochastic)
  double v_reset = -0.5;         // V (stochastic)
  double tau_delay_median = 10e-6;   // s
  double tau_relax_median = 50e-6;   // s
  double sigma_log = 0.5;

  /// State-rate constant of the drift equation, mobility·R_on / D².
  double drift_rate() const { return mobility * r_on / (thickness * thickness); }

  void validate() const {
    auto bad = [](const std::string& m) { throw InvalidInput("MemristorParams: " + m); };
    if (!(r_on > 0.0) || !(r_off >= r_on)) bad("require r_off >= r_on > 0");
    if (!(window_p >= 1.0)) bad("window exponent p must be >= 1");
    if (!(thickness > 0.0)) bad("thickness must be positive");
    if (!(mobility >= 0.0)) bad("mobility must be non-negative");
    if (!(tau_delay_median > 0.0) || !(tau_relax_median > 0.0)) bad("delay medians must be positive");
    if (!(sigma_log >= 0.0)) bad("sigma_log must be non-negative");
    if (kind == DeviceKind::Rectifying &&
        (!(saturation_current > 0.0) || !(ideality > 0.0) || !(thermal_voltage > 0.0)))
      bad("diode parameters must be positive");
    if (kind == DeviceKind::StochasticSwitch && !(v_set > v_reset)) bad("require v_set > v_reset");
  }

  static MemristorParams linear_drift() { return {}; }

  static MemristorParams rectifying() {
    MemristorParams p;
    p.kind = DeviceKind::Rectifying;
    p.r_on = 1e3;
    p.r_off = 10e3;
    p.mobility = 1e-16;  // slow state: the junction acts as a near-static nonlinearity
    return p;
  }

  static MemristorParams stochastic_switch() {
    MemristorParams p;
    p.kind = DeviceKind::StochasticSwitch;
    p.r_on = 1e3;
    p.r_off = 1e6;
    return p;
  }
};

struct MemristorState {
  double x = 0.5;  // normalised internal state, 1 = fully ON
  double q = 0.0;  // accumulated charge, C
  ResistanceLevel level = ResistanceLevel::HRS;

  bool valid() const { return x >= 0.0 && x <= 1.0 && std::isfinite(q); }
};

struct StepResult {
  MemristorState state;
  double current = 0.0;
};

inline double memristance(const MemristorParams& p, double x) {
  return x * p.r_on + (1.0 - x) * p.r_off;
}

/// Joglekar window f(x) = 1 - (2x - 1)^(2p).
inline double joglekar_window(double x, double p) {
  return 1.0 - std::pow(2.0 * x - 1.0, 2.0 * p);
}

/// Current through a Shockley diode in series with resistance `r`.
/// Solves v = i·r + n·Vt·ln(1 + i/Is) by safeguarded Newton.
inline double series_diode_current(double v, double r, double i_s, double n, double vt) {
  if (v == 0.0) return 0.0;
  const double nvt = n * vt;
  auto g = [&](double i) { return i * r + nvt * std::log1p(i / i_s) - v; };
  double lo, hi;
  if (v > 0.0) {
    lo = 0.0;
    hi = v / r;
  } else {
    lo = std::max(-i_s * (1.0 - 1e-15), v / r);
    hi = 0.0;
  }
  double i = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double gi = g(i);
    if (gi > 0.0) hi = i; else lo = i;
    const double dg = r + nvt / (i_s + i);
    double next = i - gi / dg;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - i) <= 1e-15 * std::max(1.0, std::abs(i)) + 1e-300) {
      i = next;
      break;
    }
    i = next;
    if (hi - lo <= 1e-16 * std::max(std::abs(lo), std::abs(hi))) break;
  }
  return i;
}

/// Instantaneous device current at state x and terminal voltage v.
inline double device_current(const MemristorParams& p, double x, double v) {
  const double m = memristance(p, x);
  if (p.kind == DeviceKind::Rectifying)
    return series_diode_current(v, m, p.saturation_current, p.ideality, p.thermal_voltage);
  return v / m;
}

namespace detail {

inline void check_step_args(const MemristorParams& p, const MemristorState& s, double v0, double v1,
                            double dt) {
  if (!std::isfinite(v0) || !std::isfinite(v1) || !std::isfinite(dt))
    throw InvalidInput("memristor_step: non-finite voltage or dt");
  if (!(dt > 0.0)) throw InvalidInput("memristor_step: dt must be positive");
  if (!s.valid()) throw InvalidInput("memristor_step: state out of range");
  (void)p;
}

inline ResistanceLevel level_of(double x) {
  return x >= 0.5 ? ResistanceLevel::LRS : ResistanceLevel::HRS;
}

}  // namespace detail

/// Advances the device over one step with the terminal voltage ramping
/// linearly from v_begin to v_end. Drift models use RK4 on (x, q); the
/// switch model applies threshold switching and volatile relaxation.
/// The returned current is evaluated at the end of the step.
inline StepResult memristor_advance(const MemristorParams& p, const MemristorState& s, double v_begin,
                                    double v_end, double dt) {
  detail::check_step_args(p, s, v_begin, v_end, dt);
  StepResult out;
  out.state = s;

  if (p.kind == DeviceKind::StochasticSwitch) {
    double x = s.x;
    const double v = v_end;
    if (v >= p.v_set) {
      x = 1.0;
    } else if (v <= p.v_reset) {
      x = 0.0;
    } else {
      x *= std::exp(-dt / p.tau_relax_median);
    }
    const double i = v / memristance(p, x);
    out.state.x = x;
    out.state.q = s.q + 0.5 * (v_begin / memristance(p, s.x) + i) * dt;
    out.state.level = detail::level_of(x);
    out.current = i;
    return out;
  }

  const double k = p.drift_rate();
  auto deriv = [&](double tau, double x) {
    const double v = v_begin + (v_end - v_begin) * tau / dt;
    const double xc = std::clamp(x, 0.0, 1.0);
    const double i = device_current(p, xc, v);
    return std::array<double, 2>{k * i * joglekar_window(xc, p.window_p), i};
  };
  const auto k1 = deriv(0.0, s.x);
  const auto k2 = deriv(0.5 * dt, s.x + 0.5 * dt * k1[0]);
  const auto k3 = deriv(0.5 * dt, s.x + 0.5 * dt * k2[0]);
  const auto k4 = deriv(dt, s.x + dt * k3[0]);
  const double x = s.x + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
  const double dq = dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
  out.state.x = std::clamp(x, 0.0, 1.0);
  out.state.q = s.q + dq;
  out.state.level = detail::level_of(out.state.x);
  out.current = device_current(p, out.state.x, v_end);
  return out;
}

/// Single step at constant terminal voltage.
inline StepResult memristor_step(const MemristorParams& p, const MemristorState& s, double v, double dt) {
  return memristor_advance(p, s, v, v, dt);
}

struct IvTrajectory {
  double dt = 0.0;
  std::vector<double> v, i, x;

  std::size_t size() const { return v.size(); }

  double min_origin_distance() const {
    double best = INFINITY;
    for (std::size_t k = 0; k < v.size(); ++k) best = std::min(best, std::abs(v[k]) + std::abs(i[k]));
    return best;
  }

  /// Total lobe area of the (v, i) curve over samples [first, last). A pinched
  /// loop has lobes of opposite orientation, so each run of same-sign voltage
  /// is closed on itself and its absolute area added.
  double loop_area(std::size_t first = 0, std::size_t last = SIZE_MAX) const {
    last = std::min(last, v.size());
    double total = 0.0;
    std::size_t run_begin = first;
    auto close_run = [&](std::size_t b, std::size_t e) {
      if (e <= b + 2) return;
      double twice = 0.0;
      for (std::size_t k = b; k < e; ++k) {
        const std::size_t n = (k + 1 < e) ? k + 1 : b;
        twice += v[k] * i[n] - v[n] * i[k];
      }
      total += 0.5 * std::abs(twice);
    };
    for (std::size_t k = first + 1; k < last; ++k) {
      if ((v[k] >= 0.0) != (v[k - 1] >= 0.0)) {
        close_run(run_begin, k);
        run_begin = k;
      }
    }
    close_run(run_begin, last);
    return total;
  }
};

/// Pointwise device response to a sampled voltage waveform.
inline IvTrajectory iv_trajectory(const MemristorParams& p, std::span<const double> waveform, double dt,
                                  MemristorState init = {}) {
  p.validate();
  if (waveform.empty()) throw InvalidInput("iv_trajectory: empty waveform");
  if (!all_finite(waveform)) throw InvalidInput("iv_trajectory: non-finite waveform sample");
  IvTrajectory out;
  out.dt = dt;
  out.v.reserve(waveform.size());
  out.i.reserve(waveform.size());
  out.x.reserve(waveform.size());
  MemristorState s = init;
  out.v.push_back(waveform[0]);
  out.i.push_back(device_current(p, s.x, waveform[0]));
  out.x.push_back(s.x);
  for (std::size_t k = 1; k < waveform.size(); ++k) {
    const auto r = memristor_advance(p, s, waveform[k - 1], waveform[k], dt);
    s = r.state;
    out.v.push_back(waveform[k]);
    out.i.push_back(r.current);
    out.x.push_back(s.x);
  }
  return out;
}

/// Sampled sum of sines, amplitude[k]·sin(2π f[k] t).
inline std::vector<double> sine_mix(std::span<const double> freqs, std::span<const double> amps, double dt,
                                    std::size_t n) {
  std::vector<double> out(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = dt * static_cast<double>(k);
    for (std::size_t j = 0; j < freqs.size(); ++j)
      out[k] += amps[j] * std::sin(2.0 * std::numbers::pi * freqs[j] * t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rate-dependent plasticity with a BCM sliding threshold.

enum class PulseShape { Rect, Biphasic };

struct PulseTrain {
  double amplitude = 1.2;  // V
  double width = 10e-6;    // s, width of the narrow (first) phase
  double frequency = 10.0; // Hz
  int count = 20;
  int polarity = +1;
  PulseShape shape = PulseShape::Biphasic;

  /// Total active time per spike: biphasic spikes add a 10x wider tail.
  double spike_duration() const { return shape == PulseShape::Biphasic ? 11.0 * width : width; }

  void validate() const {
    if (!std::isfinite(amplitude)) throw InvalidInput("PulseTrain: amplitude must be finite");
    if (!(width > 0.0) || !(frequency > 0.0)) throw InvalidInput("PulseTrain: width and frequency must be positive");
    if (count < 1) throw InvalidInput("PulseTrain: count must be >= 1");
    if (polarity != 1 && polarity != -1) throw InvalidInput("PulseTrain: polarity must be +1 or -1");
    if (spike_duration() * frequency > 1.0) throw InvalidInput("PulseTrain: spikes overlap (width x frequency > 1)");
  }

  double duration() const { return static_cast<double>(count) / frequency; }
};

/// Voltage at time t within a spike train. A biphasic spike is a narrow pulse
/// of amplitude A and width w followed by an opposite pulse of -A/10 lasting 10w.
inline double pulse_train_voltage(const PulseTrain& train, double t) {
  if (t < 0.0 || t >= train.duration()) return 0.0;
  const double period = 1.0 / train.frequency;
  const double phase = std::fmod(t, period);
  const double a = train.amplitude * train.polarity;
  if (phase < train.width) return a;
  if (train.shape == PulseShape::Biphasic && phase < 11.0 * train.width) return -a / 10.0;
  return 0.0;
}

struct BcmState {
  double w = 1.0;           // synaptic weight
  double theta = 10.0;      // sliding threshold, Hz
  double tau_theta = 1.0;   // s

  void validate() const {
    if (!(theta > 0.0)) throw InvalidInput("BcmState: theta must be positive");
    if (!(w >= 0.0)) throw InvalidInput("BcmState: weight must be non-negative");
    if (!(tau_theta > 0.0)) throw InvalidInput("BcmState: tau_theta must be positive");
  }
};

struct SrdpResult {
  BcmState bcm;
  std::vector<double> dw;
};

/// State excursion produced by the high-amplitude phase of one spike on a
/// mid-state device. Sets the per-spike plasticity scale.
inline double spike_efficacy(const MemristorParams& p, const PulseTrain& train) {
  constexpr int substeps = 50;
  const double dt = train.width / substeps;
  MemristorState s;
  s.x = 0.5;
  for (int k = 0; k < substeps; ++k) s = memristor_step(p, s, train.amplitude, dt).state;
  return std::abs(s.x - 0.5);
}

/// Rate-coded plasticity: each train changes the weight by
/// count·η·tanh(ln(f/θ)), where η is the device's per-spike efficacy, and then
/// moves ln θ toward ln f with time constant τ_θ over the train duration.
inline SrdpResult srdp_response(const MemristorParams& p, BcmState bcm, std::span<const PulseTrain> trains) {
  p.validate();
  bcm.validate();
  if (trains.empty()) throw InvalidInput("srdp_response: no pulse trains");
  SrdpResult out;
  out.dw.reserve(trains.size());
  for (const auto& train : trains) {
    train.validate();
    if (train.shape != PulseShape::Biphasic)
      throw ContractViolation("srdp_response: bidirectional weight change requires biphasic spikes");
    const double eta = spike_efficacy(p, train);
    const double drive = std::tanh(std::log(train.frequency / bcm.theta));
    const double dw = static_cast<double>(train.count) * eta * drive;
    const double applied = std::max(dw, -bcm.w);
    bcm.w += applied;
    out.dw.push_back(dw);
    const double keep = std::exp(-train.duration() / bcm.tau_theta);
    bcm.theta = std::exp(std::log(train.frequency) + (std::log(bcm.theta) - std::log(train.frequency)) * keep);
  }
  out.bcm = bcm;
  return out;
}

// ---------------------------------------------------------------------------
// Stochastic switching delays.

struct SwitchDelays {
  double set_delay = 0.0;
  double relax_delay = 0.0;
};

/// Draws (switching delay, relaxation delay) from lognormal laws around the
/// configured medians. Returns nullopt when v is below the set threshold.
inline std::optional<SwitchDelays> stochastic_delay_sample(const MemristorParams& p, double v, Rng& rng) {
  if (p.kind != DeviceKind::StochasticSwitch)
    throw ContractViolation("stochastic_delay_sample: device is not a stochastic switch");
  if (!std::isfinite(v)) throw InvalidInput("stochastic_delay_sample: non-finite voltage");
  p.validate();
  if (v < p.v_set) return std::nullopt;
  SwitchDelays d;
  d.set_delay = rng.lognormal_median(p.tau_delay_median, p.sigma_log);
  d.relax_delay = rng.lognormal_median(p.tau_relax_median, p.sigma_log);
  return d;
}

}  // namespace neuromime::devices
