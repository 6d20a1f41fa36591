#pragma once

// Nonlinear-dynamics toolbox: Chua oscillator, largest Lyapunov exponent by
// nearest-neighbour divergence, phase-response metric, harmonic analysis of
// periodically driven devices and the two-tone interval experiment.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "neuromime/core/error.hpp"
#include "neuromime/core/ode.hpp"
#include "neuromime/core/parallel.hpp"
#include "neuromime/core/series.hpp"
#include "neuromime/devices.hpp"

namespace neuromime::dynamics {

using devices::MemristorParams;
using devices::MemristorState;

// ---------------------------------------------------------------------------
// Chua oscillator (dimensionless form).

enum class ChuaNonlinearity { PiecewiseLinear, Cubic };

struct ChuaParams {
  double alpha = 9.0;
  double beta = 14.286;
  double m0 = -8.0 / 7.0;
  double m1 = -5.0 / 7.0;
  ChuaNonlinearity nonlinearity = ChuaNonlinearity::PiecewiseLinear;
  double cubic_a = 1.0 / 16.0;   // h(x) = a x^3 + b x for the cubic variant
  double cubic_b = -1.0 / 6.0;
  double blowup_bound = 1e3;

  void validate() const {
    for (double v : {alpha, beta, m0, m1, cubic_a, cubic_b})
      if (!std::isfinite(v)) throw InvalidInput("ChuaParams: non-finite parameter");
    if (!(beta > 0.0)) throw InvalidInput("ChuaParams: beta must be positive");
    if (!(blowup_bound > 0.0)) throw InvalidInput("ChuaParams: blow-up bound must be positive");
  }

  double h(double x) const {
    if (nonlinearity == ChuaNonlinearity::Cubic) return cubic_a * x * x * x + cubic_b * x;
    return m1 * x + 0.5 * (m0 - m1) * (std::abs(x + 1.0) - std::abs(x - 1.0));
  }
};

using Vec3 = std::array<double, 3>;

inline Vec3 chua_rhs(const ChuaParams& p, const Vec3& s) {
  return {p.alpha * (s[1] - s[0] - p.h(s[0])), s[0] - s[1] + s[2], -p.beta * s[1]};
}

struct ChuaTrajectory {
  double dt = 0.0;
  std::vector<Vec3> states;

  std::size_t size() const { return states.size(); }
  TimeSeries channel(std::size_t c, std::size_t stride = 1) const {
    TimeSeries s;
    s.dt = dt * static_cast<double>(stride);
    for (std::size_t k = 0; k < states.size(); k += stride) s.samples.push_back(states[k][c]);
    return s;
  }
};

/// RK4 integration; the trajectory holds round(T/dt)+1 states including init.
inline ChuaTrajectory chua_integrate(const ChuaParams& p, const Vec3& init, double t_total, double dt) {
  p.validate();
  if (!(dt > 0.0) || dt > 0.01) throw InvalidInput("chua_integrate: dt must lie in (0, 0.01]");
  if (!(t_total >= 0.0) || !std::isfinite(t_total)) throw InvalidInput("chua_integrate: bad duration");
  for (double v : init)
    if (!std::isfinite(v)) throw InvalidInput("chua_integrate: non-finite initial state");
  const auto n = static_cast<std::size_t>(std::llround(t_total / dt));
  ChuaTrajectory tr;
  tr.dt = dt;
  tr.states.reserve(n + 1);
  tr.states.push_back(init);
  Vec3 s = init;
  auto f = [&](double, const Vec3& y) { return chua_rhs(p, y); };
  for (std::size_t k = 0; k < n; ++k) {
    s = rk4_step<3>(f, 0.0, s, dt);
    if (!(std::abs(s[0]) <= p.blowup_bound && std::abs(s[1]) <= p.blowup_bound && std::abs(s[2]) <= p.blowup_bound))
      throw BlowUpError("chua_integrate: trajectory left the bounded region", dt * static_cast<double>(k + 1));
    tr.states.push_back(s);
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Largest Lyapunov exponent (Rosenstein nearest-neighbour divergence).

struct LyapunovOptions {
  int embed_dim = 6;
  int embed_delay = 0;       // 0 selects the first zero of the autocorrelation
  int theiler_window = -1;   // -1 selects embed_delay * embed_dim
  int max_steps = 0;         // divergence horizon; 0 selects min(N/10, 100)
  int min_fit_length = 5;
  double min_rise = 0.1;     // nats the fit window must climb to count as divergence
};

struct LyapunovEstimate {
  double lambda = 0.0;       // per unit time
  int fit_begin = 0, fit_end = 0;  // step indices, inclusive/exclusive
  double r2 = 0.0;
  int embed_delay = 0;
  std::vector<double> divergence;  // mean log distance per step
};

/// Lag of the first non-positive autocorrelation value (at least 1).
inline int first_autocorrelation_zero(std::span<const double> x, int max_lag) {
  const double m = mean(x);
  double c0 = 0.0;
  for (double v : x) c0 += (v - m) * (v - m);
  if (c0 <= 0.0) return 1;
  for (int lag = 1; lag < max_lag && static_cast<std::size_t>(lag) < x.size(); ++lag) {
    double c = 0.0;
    for (std::size_t k = 0; k + static_cast<std::size_t>(lag) < x.size(); ++k)
      c += (x[k] - m) * (x[k + static_cast<std::size_t>(lag)] - m);
    if (c <= 0.0) return lag;
  }
  return std::max(1, max_lag);
}

inline LyapunovEstimate lyapunov_largest(const TimeSeries& series, const LyapunovOptions& opt = {}) {
  series.validate("lyapunov_largest");
  if (series.size() < 1000) throw InvalidInput("lyapunov_largest: need at least 1000 samples");
  if (!all_finite(series.samples)) throw InvalidInput("lyapunov_largest: non-finite sample");
  if (opt.embed_dim < 1) throw InvalidInput("lyapunov_largest: embedding dimension must be >= 1");
  if (!(opt.min_rise >= 0.0)) throw InvalidInput("lyapunov_largest: min_rise must be non-negative");

  LyapunovEstimate est;
  const int tau = opt.embed_delay > 0 ? opt.embed_delay
                                      : first_autocorrelation_zero(series.samples, static_cast<int>(series.size() / 10));
  est.embed_delay = tau;
  const int m = opt.embed_dim;
  const auto n_vec = static_cast<long>(series.size()) - static_cast<long>((m - 1) * tau);
  const int horizon = opt.max_steps > 0 ? opt.max_steps : static_cast<int>(std::min<long>(n_vec / 10, 100));
  const int theiler = opt.theiler_window >= 0 ? opt.theiler_window : tau * m;
  if (n_vec <= horizon + 10) throw DegenerateSignal("lyapunov_largest: series too short for the embedding");

  const auto& x = series.samples;
  auto dist2 = [&](long a, long b) {
    double d = 0.0;
    for (int j = 0; j < m; ++j) {
      const double e = x[static_cast<std::size_t>(a + j * tau)] - x[static_cast<std::size_t>(b + j * tau)];
      d += e * e;
    }
    return d;
  };

  // Neighbours closer than 1e-10 of the signal spread are exact repeats
  // (e.g. a sampled period that divides the record) and carry no divergence.
  double var = 0.0;
  const double mu = mean(x);
  for (double v : x) var += (v - mu) * (v - mu);
  var /= static_cast<double>(x.size());
  const double floor2 = 1e-20 * var * m;

  const long usable = n_vec - horizon;
  std::vector<long> neighbour(static_cast<std::size_t>(usable), -1);
  parallel_for(static_cast<std::size_t>(usable), [&](std::size_t ui) {
    const auto i = static_cast<long>(ui);
    double best = INFINITY;
    long arg = -1;
    for (long j = 0; j < usable; ++j) {
      if (std::abs(i - j) <= theiler) continue;
      const double d = dist2(i, j);
      if (d > floor2 && d < best) {
        best = d;
        arg = j;
      }
    }
    neighbour[ui] = arg;
  });

  est.divergence.assign(static_cast<std::size_t>(horizon), 0.0);
  std::vector<long> counts(static_cast<std::size_t>(horizon), 0);
  for (long i = 0; i < usable; ++i) {
    const long j = neighbour[static_cast<std::size_t>(i)];
    if (j < 0) continue;
    for (int k = 0; k < horizon; ++k) {
      const double d = dist2(i + k, j + k);
      if (d > 0.0) {
        est.divergence[static_cast<std::size_t>(k)] += 0.5 * std::log(d);
        ++counts[static_cast<std::size_t>(k)];
      }
    }
  }
  for (int k = 0; k < horizon; ++k) {
    if (counts[static_cast<std::size_t>(k)] == 0) throw DegenerateSignal("lyapunov_largest: no valid neighbours");
    est.divergence[static_cast<std::size_t>(k)] /= static_cast<double>(counts[static_cast<std::size_t>(k)]);
  }

  // Fit window: the contiguous range starting in the first half of the
  // horizon whose least-squares line has the highest R².
  auto fit = [&](int a, int b) {
    const double n = b - a;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (int k = a; k < b; ++k) {
      const double y = est.divergence[static_cast<std::size_t>(k)];
      sx += k;
      sy += y;
      sxx += double(k) * k;
      sxy += k * y;
      syy += y * y;
    }
    const double vx = sxx - sx * sx / n, vy = syy - sy * sy / n, cxy = sxy - sx * sy / n;
    const double slope = vx > 0 ? cxy / vx : 0.0;
    const double r2 = (vx > 0 && vy > 0) ? cxy * cxy / (vx * vy) : 0.0;
    return std::pair{slope, r2};
  };
  const int min_len = std::max(3, opt.min_fit_length);
  double best_r2 = -1.0;
  for (int a = 0; a < horizon / 2; ++a)
    for (int b = a + min_len; b <= horizon; ++b) {
      const auto [slope, r2] = fit(a, b);
      if (slope * (b - a - 1) < opt.min_rise) continue;
      // prefer longer windows on ties so short accidental lines do not win
      if (r2 > best_r2 + 1e-12 || (std::abs(r2 - best_r2) <= 1e-12 && b - a > est.fit_end - est.fit_begin)) {
        best_r2 = r2;
        est.lambda = slope / series.dt;
        est.fit_begin = a;
        est.fit_end = b;
        est.r2 = r2;
      }
    }
  // No window climbs: the separation never grows, so report the mean trend
  // over the whole horizon, which is ~0 for periodic signals.
  if (best_r2 < 0.0) {
    const auto [slope, r2] = fit(0, horizon);
    est.lambda = slope / series.dt;
    est.fit_begin = 0;
    est.fit_end = horizon;
    est.r2 = r2;
  }
  return est;
}

// ---------------------------------------------------------------------------
// Phase-response metric of a periodic spiker.

struct PhasePerturbation {
  double tau = 0.0;     // time since the most recent spike
  double t0 = 0.0;      // unperturbed period
  double phi = 0.0;     // tau / t0
  double delta_t = 0.0; // perturbed period minus t0
};

inline PhasePerturbation phase_response(std::span<const double> spike_times, double perturbation_time,
                                        double perturbed_period) {
  if (!std::is_sorted(spike_times.begin(), spike_times.end()))
    throw InvalidInput("phase_response: spike times must be ascending");
  const auto last = std::upper_bound(spike_times.begin(), spike_times.end(), perturbation_time);
  const auto before = static_cast<std::size_t>(last - spike_times.begin());
  if (before < 2) throw InvalidInput("phase_response: need two spikes before the perturbation");
  PhasePerturbation out;
  out.t0 = spike_times[before - 1] - spike_times[before - 2];
  if (!(out.t0 > 0.0)) throw InvalidInput("phase_response: coincident spikes");
  out.tau = perturbation_time - spike_times[before - 1];
  out.phi = out.tau / out.t0;
  if (out.phi >= 1.0) throw InvalidInput("phase_response: perturbation later than one period after the last spike");
  out.delta_t = perturbed_period - out.t0;
  return out;
}

// ---------------------------------------------------------------------------
// Harmonic analysis.

struct HarmonicSpectrum {
  double f0 = 0.0;
  std::vector<double> amplitude;  // index k -> amplitude at k·f0

  double db_relative(std::size_t k, std::size_t ref = 1) const {
    return 20.0 * std::log10(amplitude[k] / amplitude[ref]);
  }
};

/// Amplitudes at k·f0, k = 0..k_max, from a Hann-windowed DFT. Each
/// amplitude is the largest magnitude among the bins within ±1 bin of k·f0
/// and the exact (fractional) frequency itself, divided by the window's
/// coherent gain.
inline HarmonicSpectrum harmonic_spectrum(const TimeSeries& series, double f0, int k_max) {
  series.validate("harmonic_spectrum");
  if (!all_finite(series.samples)) throw InvalidInput("harmonic_spectrum: non-finite sample");
  if (k_max < 0) throw InvalidInput("harmonic_spectrum: k_max must be >= 0");
  const double nyquist = 0.5 / series.dt;
  if (!(f0 > 0.0) || f0 * std::max(1, k_max) >= nyquist)
    throw InvalidInput("harmonic_spectrum: harmonic frequency above Nyquist");
  if (series.duration() * f0 < 10.0 - 1e-9) throw InvalidInput("harmonic_spectrum: need at least 10 periods");

  const std::size_t n = series.size();
  const double nd = static_cast<double>(n);
  std::vector<double> xw(n);
  double gain = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / nd));
    gain += w;
    xw[i] = series[i] * w;
  }
  gain /= nd;

  auto magnitude = [&](double bin) {
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ph = -2.0 * std::numbers::pi * bin * static_cast<double>(i) / nd;
      re += xw[i] * std::cos(ph);
      im += xw[i] * std::sin(ph);
    }
    return std::hypot(re, im);
  };

  HarmonicSpectrum out;
  out.f0 = f0;
  for (int k = 0; k <= k_max; ++k) {
    if (k == 0) {
      out.amplitude.push_back(magnitude(0.0) / (nd * gain));
      continue;
    }
    const double exact = k * f0 * nd * series.dt;
    double best = magnitude(exact);
    for (long b = static_cast<long>(std::ceil(exact - 1.0)); b <= static_cast<long>(std::floor(exact + 1.0)); ++b)
      if (b >= 1) best = std::max(best, magnitude(static_cast<double>(b)));
    out.amplitude.push_back(2.0 * best / (nd * gain));
  }
  return out;
}

struct ShgEfficiency {
  double second = 0.0;  // P(2 f0) / P_in
  double total = 0.0;   // sum over k >= 2 / P_in
};

/// Harmonic power fractions for a load voltage spectrum across r_load.
inline ShgEfficiency shg_efficiency(const HarmonicSpectrum& spec, double input_power, double r_load) {
  if (!(input_power > 0.0)) throw DegenerateSignal("shg_efficiency: zero input power");
  if (!(r_load > 0.0)) throw InvalidInput("shg_efficiency: load must be positive");
  if (spec.amplitude.size() < 3) throw InvalidInput("shg_efficiency: spectrum must reach k = 2");
  auto power = [&](std::size_t k) { return spec.amplitude[k] * spec.amplitude[k] / (2.0 * r_load); };
  ShgEfficiency e;
  e.second = power(2) / input_power;
  for (std::size_t k = 2; k < spec.amplitude.size(); ++k) e.total += power(k);
  e.total /= input_power;
  return e;
}

enum class HarmonicCircuit { Resistor, SingleMemristor, MemristorBridge };

struct HarmonicDrive {
  double amplitude = 1.0;  // V
  double frequency = 50.0; // Hz
  int periods = 20;        // analysed after `settle_periods`
  int settle_periods = 5;
  int steps_per_period = 400;
  double r_load = 1e3;     // Ω
  int k_max = 6;
};

struct HarmonicRun {
  TimeSeries load_voltage;
  double input_power = 0.0;
  HarmonicSpectrum spectrum;
  ShgEfficiency efficiency;
};

/// Drives a sine source into one of three networks and analyses the load:
/// a resistor of the device's initial resistance in series with the load,
/// one memristor in series with the load, or a four-memristor bridge with
/// the load across its midpoints (left arm forward-then-reversed, right arm
/// reversed-then-forward).
inline HarmonicRun harmonic_experiment(HarmonicCircuit circuit, const MemristorParams& device,
                                       const HarmonicDrive& d) {
  device.validate();
  if (device.kind == devices::DeviceKind::StochasticSwitch)
    throw InvalidInput("harmonic_experiment: drift or rectifying device required");
  const double dt = 1.0 / (d.frequency * d.steps_per_period);
  const auto settle = static_cast<std::size_t>(d.settle_periods * d.steps_per_period);
  const auto total = settle + static_cast<std::size_t>(d.periods * d.steps_per_period);
  const double r0 = devices::memristance(device, MemristorState{}.x);

  std::array<MemristorState, 4> s{};
  HarmonicRun run;
  run.load_voltage.dt = dt;
  double energy = 0.0;
  for (std::size_t k = 0; k < total; ++k) {
    const double v = d.amplitude * std::sin(2.0 * std::numbers::pi * d.frequency * dt * static_cast<double>(k));
    double v_load = 0.0, i_src = 0.0;
    switch (circuit) {
      case HarmonicCircuit::Resistor: {
        i_src = v / (r0 + d.r_load);
        v_load = i_src * d.r_load;
        break;
      }
      case HarmonicCircuit::SingleMemristor: {
        const double m = devices::memristance(device, s[0].x);
        i_src = v / (m + d.r_load);
        v_load = i_src * d.r_load;
        s[0] = devices::memristor_step(device, s[0], v - v_load, dt).state;
        break;
      }
      case HarmonicCircuit::MemristorBridge: {
        // Nodes: top = v, bottom = 0, left (a), right (b); load between a and b.
        std::array<double, 4> g{};
        for (std::size_t j = 0; j < 4; ++j) g[j] = 1.0 / devices::memristance(device, s[j].x);
        const double gl = 1.0 / d.r_load;
        Eigen::Matrix2d a;
        a << g[0] + g[1] + gl, -gl, -gl, g[2] + g[3] + gl;
        const Eigen::Vector2d rhs(g[0] * v, g[2] * v);
        const Eigen::Vector2d x = a.partialPivLu().solve(rhs);
        v_load = x[0] - x[1];
        i_src = g[0] * (v - x[0]) + g[2] * (v - x[1]);
        // Device polarity: positive voltage drives x up in the "forward" elements.
        s[0] = devices::memristor_step(device, s[0], v - x[0], dt).state;   // top-left, forward
        s[1] = devices::memristor_step(device, s[1], -x[0], dt).state;      // bottom-left, reversed
        s[2] = devices::memristor_step(device, s[2], -(v - x[1]), dt).state; // top-right, reversed
        s[3] = devices::memristor_step(device, s[3], x[1], dt).state;       // bottom-right, forward
        break;
      }
    }
    if (k >= settle) {
      run.load_voltage.samples.push_back(v_load);
      energy += v * i_src;
    }
  }
  run.input_power = energy / static_cast<double>(run.load_voltage.size());
  run.spectrum = harmonic_spectrum(run.load_voltage, d.frequency, d.k_max);
  run.efficiency = shg_efficiency(run.spectrum, run.input_power, d.r_load);
  return run;
}

// ---------------------------------------------------------------------------
// Two-tone interval experiment.

enum class IntervalLabel { Consonant, Dissonant };

struct IntervalExperiment {
  double f1 = 220.0, f2 = 440.0;  // Hz
  MemristorParams device = MemristorParams::linear_drift();
  double duration = 1.0;          // s
  double discard = 0.1;           // s of transient removed before scoring
  double tone_amplitude = 0.5;    // V per tone
  double sample_rate = 44100.0;   // Hz
  double score_threshold = 0.9;
  double tc_max = 0.1;            // s
  int max_denominator = 64;
  double ratio_tolerance = 1e-6;  // relative

  void validate() const {
    device.validate();
    if (!(f1 > 0.0) || !(f2 > f1)) throw InvalidInput("IntervalExperiment: need f2 > f1 > 0");
    if (!(duration >= 1.0)) throw InvalidInput("IntervalExperiment: duration must be >= 1 s");
    if (!(discard >= 0.0) || discard >= duration) throw InvalidInput("IntervalExperiment: bad transient discard");
    if (!(sample_rate > 2.0 * f2)) throw InvalidInput("IntervalExperiment: sample rate below Nyquist");
  }
};

struct RationalApprox {
  int p = 1, q = 1;
  bool exact = true;  // false when no p/q met the tolerance (best candidate used)
};

/// Smallest-denominator p/q (q <= max_q) within rel_tol of r; otherwise the
/// closest candidate, flagged inexact.
inline RationalApprox rational_ratio(double r, int max_q, double rel_tol) {
  RationalApprox best{1, 1, false};
  double best_err = INFINITY;
  for (int q = 1; q <= max_q; ++q) {
    const int p = static_cast<int>(std::lround(r * q));
    if (p < 1) continue;
    const double err = std::abs(static_cast<double>(p) / q - r) / r;
    if (err <= rel_tol && std::gcd(p, q) == 1) return {p, q, true};
    if (err < best_err) {
      best_err = err;
      const int g = std::gcd(p, q);
      best = {p / g, q / g, false};
    }
  }
  return best;
}

struct IntervalResult {
  devices::IvTrajectory trajectory;
  RationalApprox ratio;
  double common_period = 0.0;  // s
  double score = 0.0;
  IntervalLabel label = IntervalLabel::Dissonant;
};

/// Normalised (biased) autocorrelation: sum over the overlap divided by the
/// full-length zero-lag energy, so long lags are penalised by the shrinking
/// overlap.
inline double biased_autocorrelation(std::span<const double> x, std::size_t lag) {
  const double m = mean(x);
  double c0 = 0.0, c = 0.0;
  for (double v : x) c0 += (v - m) * (v - m);
  if (c0 <= 0.0 || lag >= x.size()) return 0.0;
  for (std::size_t k = 0; k + lag < x.size(); ++k) c += (x[k] - m) * (x[k + lag] - m);
  return c / c0;
}

inline IntervalResult interval_consonance(const IntervalExperiment& e) {
  e.validate();
  const double dt = 1.0 / e.sample_rate;
  const auto n = static_cast<std::size_t>(std::llround(e.duration * e.sample_rate));
  const std::array<double, 2> freqs{e.f1, e.f2};
  const std::array<double, 2> amps{e.tone_amplitude, e.tone_amplitude};
  const auto wave = devices::sine_mix(freqs, amps, dt, n);

  IntervalResult out;
  out.trajectory = devices::iv_trajectory(e.device, wave, dt);
  out.ratio = rational_ratio(e.f2 / e.f1, e.max_denominator, e.ratio_tolerance);
  out.common_period = static_cast<double>(out.ratio.q) / e.f1;

  const auto skip = static_cast<std::size_t>(std::llround(e.discard * e.sample_rate));
  const std::span<const double> cur(out.trajectory.i.data() + skip, out.trajectory.i.size() - skip);
  const auto lag = static_cast<long>(std::llround(out.common_period * e.sample_rate));
  double score = -1.0;
  for (long l = std::max(1L, lag - 2); l <= lag + 2; ++l)
    score = std::max(score, biased_autocorrelation(cur, static_cast<std::size_t>(l)));
  out.score = std::clamp(score, 0.0, 1.0);
  out.label = (out.score >= e.score_threshold && out.common_period <= e.tc_max) ? IntervalLabel::Consonant
                                                                                 : IntervalLabel::Dissonant;
  return out;
}

/// Reference loop for boundedness checks: the lower tone alone at the
/// combined peak amplitude 2a.
inline devices::IvTrajectory single_tone_reference(const IntervalExperiment& e) {
  e.validate();
  const double dt = 1.0 / e.sample_rate;
  const auto n = static_cast<std::size_t>(std::llround(e.duration * e.sample_rate));
  const std::array<double, 1> freqs{e.f1};
  const std::array<double, 1> amps{2.0 * e.tone_amplitude};
  return devices::iv_trajectory(e.device, devices::sine_mix(freqs, amps, dt, n), dt);
}

}  // namespace neuromime::dynamics
