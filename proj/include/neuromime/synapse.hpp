#pragma once

// Photoelectrochemical synapse: equivalent-circuit simulation, paired-pulse
// facilitation, the bi-exponential plasticity fit and the two-branch STDP
// window.
//
// Circuit topology (all potentials referenced to the back contact):
//
//   light ──► I_ph ──► [cb] ──D_a──R_a──(R1‖C1)──(R2‖C2)──(R3‖C3)── gnd
//                       │  └──D_T──R_b──[trap]──(R_T‖C_T)── gnd
//                       └──G_rec── gnd
//
// The conduction-band node `cb` has no capacitance, so its potential is
// solved algebraically from Kirchhoff's current law at every RK4 stage. The
// reported output potential is the voltage drop across the electrode branch
// (R_a plus the three RC loops).

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/lambert_w.hpp>

#include "neuromime/core/error.hpp"
#include "neuromime/core/series.hpp"

namespace neuromime::synapse {

struct DiodeParams {
  double saturation_current = 1e-12;  // A
  double ideality = 1.0;
  double thermal_voltage = 0.025852;  // V

  double nvt() const { return ideality * thermal_voltage; }
};

struct RcLoop {
  double r = 1e3;    // Ω
  double c = 10e-9;  // F
};

struct EquivCircuit {
  double r_a = 100.0;                          // electrolyte resistance
  double r_b = 1e3;                            // CdS/MWCNT junction transfer resistance
  std::array<RcLoop, 3> rc_loops{};            // nanoparticulate electrode
  double r_trap = 232.8e3;                     // calibrated: R_T·C_T = 116.4 ms
  double c_trap = 500e-9;                      // 50 × C_i
  double g_recombination = 1e-6;               // S, thermal relaxation 1'
  DiodeParams diode_a{};
  DiodeParams diode_t{};
  double photocurrent_gain = 1e-3;             // A per unit flux
  bool trap_enabled = true;

  void validate() const {
    auto bad = [](const std::string& m) { throw InvalidInput("EquivCircuit: " + m); };
    if (!(r_a > 0.0) || !(r_b > 0.0) || !(r_trap > 0.0)) bad("resistances must be positive");
    for (const auto& loop : rc_loops)
      if (!(loop.r > 0.0) || !(loop.c > 0.0)) bad("RC loop values must be positive");
    if (!(c_trap > 0.0)) bad("trap capacitance must be positive");
    if (!(g_recombination > 0.0)) bad("recombination conductance must be positive");
    for (const auto* d : {&diode_a, &diode_t})
      if (!(d->saturation_current > 0.0) || !(d->ideality > 0.0) || !(d->thermal_voltage > 0.0))
        bad("diode parameters must be positive");
    if (!(photocurrent_gain >= 0.0)) bad("photocurrent gain must be non-negative");
  }

  /// Largest step the explicit integrator accepts: one tenth of the
  /// shortest time constant in the network.
  double max_stable_dt() const {
    double tau = r_trap * c_trap;
    for (const auto& loop : rc_loops) tau = std::min(tau, loop.r * loop.c);
    if (trap_enabled) tau = std::min(tau, r_b * c_trap);
    return tau / 10.0;
  }
};

struct LightProtocol {
  double pulse_width = 2e-3;          // s
  std::vector<double> intervals{};    // gaps between consecutive pulses, s
  double flux = 1.0;                  // normalised intensity
  double wavelength_nm = 450.0;       // label only
  double lead_time = 1e-3;            // dark time before the first pulse
  double tail_time = 5e-3;            // dark time after the last pulse

  void validate() const {
    if (!(pulse_width > 0.0)) throw InvalidInput("LightProtocol: pulse width must be positive");
    if (!(flux >= 0.0)) throw InvalidInput("LightProtocol: flux must be non-negative");
    for (double g : intervals)
      if (!(g >= 0.0)) throw InvalidInput("LightProtocol: intervals must be non-negative");
    if (!(lead_time >= 0.0) || !(tail_time >= 0.0)) throw InvalidInput("LightProtocol: negative padding");
  }

  std::vector<double> onsets() const {
    std::vector<double> out{lead_time};
    for (double g : intervals) out.push_back(out.back() + pulse_width + g);
    return out;
  }

  double total_time() const { return onsets().back() + pulse_width + tail_time; }
};

struct CircuitResponse {
  TimeSeries potential;
  std::vector<double> pulse_onsets;
  double pulse_width = 0.0;
};

namespace detail {

/// W(e^z) for the principal branch, accurate for any real z.
inline double lambert_w_exp(double z) {
  if (z < -40.0) return std::exp(z);
  if (z < 2.0) return boost::math::lambert_w0(std::exp(z));
  double w = z - std::log(z);
  for (int k = 0; k < 8; ++k) {
    const double f = w + std::log(w) - z;
    const double step = f / (1.0 + 1.0 / w);
    w -= step;
    if (std::abs(step) <= 1e-15 * w) break;
  }
  return w;
}

struct BranchCurrent {
  double current;
  double conductance;  // dI/dV
};

/// Current through a Shockley diode in series with `r` at total drop v, via
/// the closed form I = (nVt/r)·W((Is·r/nVt)·e^((v + Is·r)/nVt)) - Is.
inline BranchCurrent diode_branch(const DiodeParams& d, double r, double v) {
  const double nvt = d.nvt();
  const double is = d.saturation_current;
  const double z = std::log(is * r / nvt) + (v + is * r) / nvt;
  const double w = lambert_w_exp(z);
  const double i = nvt / r * w - is;
  return {i, 1.0 / (r + nvt / (i + is))};
}

struct Solved {
  double v_cb;
  double i_a;
  double i_t;
};

}  // namespace detail

/// Stateful integrator for the equivalent circuit; exposed so sweeps can
/// reuse it and tests can probe internal node voltages.
class CircuitSimulator {
 public:
  // State: three RC-loop voltages and the trap voltage.
  using State = std::array<double, 4>;

  explicit CircuitSimulator(EquivCircuit c) : c_(std::move(c)) { c_.validate(); }

  const EquivCircuit& circuit() const { return c_; }

  detail::Solved solve_node(const State& s, double i_ph) {
    const double v_rc = s[0] + s[1] + s[2];
    double v = v_cb_guess_;
    double lo = -1e3, hi = 1e3;
    detail::Solved out{};
    for (int it = 0; it < 100; ++it) {
      const auto a = detail::diode_branch(c_.diode_a, c_.r_a, v - v_rc);
      double f = a.current + c_.g_recombination * v - i_ph;
      double df = a.conductance + c_.g_recombination;
      double i_t = 0.0;
      if (c_.trap_enabled) {
        const auto t = detail::diode_branch(c_.diode_t, c_.r_b, v - s[3]);
        f += t.current;
        df += t.conductance;
        i_t = t.current;
      }
      out = {v, a.current, i_t};
      if (f > 0.0) hi = std::min(hi, v); else lo = std::max(lo, v);
      double next = v - f / df;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - v) <= 1e-13 * std::max(1.0, std::abs(v))) break;
      v = next;
    }
    v_cb_guess_ = out.v_cb;
    return out;
  }

  State derivative(const State& s, double i_ph) {
    const auto n = solve_node(s, i_ph);
    State d{};
    for (int k = 0; k < 3; ++k) {
      const auto& loop = c_.rc_loops[static_cast<std::size_t>(k)];
      d[static_cast<std::size_t>(k)] = (n.i_a - s[static_cast<std::size_t>(k)] / loop.r) / loop.c;
    }
    d[3] = c_.trap_enabled ? (n.i_t - s[3] / c_.r_trap) / c_.c_trap : 0.0;
    return d;
  }

  /// RK4 step with the photocurrent held constant over the step.
  State step(const State& s, double i_ph, double dt) {
    auto axpy = [](const State& a, double h, const State& b) {
      State o{};
      for (std::size_t i = 0; i < 4; ++i) o[i] = a[i] + h * b[i];
      return o;
    };
    const auto k1 = derivative(s, i_ph);
    const auto k2 = derivative(axpy(s, 0.5 * dt, k1), i_ph);
    const auto k3 = derivative(axpy(s, 0.5 * dt, k2), i_ph);
    const auto k4 = derivative(axpy(s, dt, k3), i_ph);
    State o{};
    for (std::size_t i = 0; i < 4; ++i) o[i] = s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return o;
  }

  /// Electrode-branch potential: drop over R_a and the RC loops.
  double output(const State& s, double i_ph) {
    const auto n = solve_node(s, i_ph);
    return n.i_a * c_.r_a + s[0] + s[1] + s[2];
  }

 private:
  EquivCircuit c_;
  double v_cb_guess_ = 0.0;
};

/// Simulates the circuit under a pulsed light protocol; light enters as a
/// rectangular current injection of photocurrent_gain × flux.
inline CircuitResponse simulate_circuit(const EquivCircuit& circuit, const LightProtocol& protocol, double dt) {
  circuit.validate();
  protocol.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("simulate_circuit: dt must be positive");
  const double bound = circuit.max_stable_dt();
  if (dt > bound)
    throw StabilityError("simulate_circuit: dt exceeds stability bound " + std::to_string(bound) + " s", bound);

  CircuitResponse out;
  out.pulse_onsets = protocol.onsets();
  out.pulse_width = protocol.pulse_width;
  const auto n_steps = static_cast<std::size_t>(std::ceil(protocol.total_time() / dt));
  out.potential.dt = dt;
  out.potential.samples.assign(n_steps + 1, 0.0);

  const double i_on = circuit.photocurrent_gain * protocol.flux;
  auto light = [&](double t) {
    // onsets are sorted; linear scan over a handful of pulses
    for (double on : out.pulse_onsets)
      if (t >= on && t < on + protocol.pulse_width) return i_on;
    return 0.0;
  };

  CircuitSimulator sim(circuit);
  CircuitSimulator::State s{};
  if (i_on == 0.0) return out;  // at rest the network stays exactly at zero
  for (std::size_t k = 0; k < n_steps; ++k) {
    const double t_mid = (static_cast<double>(k) + 0.5) * dt;
    const double i_ph = light(t_mid);
    s = sim.step(s, i_ph, dt);
    const double t_next = static_cast<double>(k + 1) * dt;
    out.potential.samples[k + 1] = sim.output(s, light(t_next));
  }
  return out;
}

/// Peak of each pulse window, where window k runs from onset k to onset k+1
/// (or the end of the record).
inline std::vector<double> pulse_peaks(const TimeSeries& series, std::span<const double> onsets) {
  std::vector<double> peaks;
  for (std::size_t k = 0; k < onsets.size(); ++k) {
    const auto begin = static_cast<std::size_t>(std::floor(onsets[k] / series.dt));
    const std::size_t end = (k + 1 < onsets.size())
                                ? static_cast<std::size_t>(std::floor(onsets[k + 1] / series.dt))
                                : series.size();
    double peak = 0.0;
    for (std::size_t i = begin; i < std::min(end, series.size()); ++i) peak = std::max(peak, series[i]);
    peaks.push_back(peak);
  }
  return peaks;
}

/// Second-to-first peak ratio of a paired-pulse response.
inline double pair_ratio(const TimeSeries& series, std::span<const double> onsets) {
  if (onsets.size() < 2) throw DegenerateSignal("pair_ratio: need at least two pulses");
  const auto peaks = pulse_peaks(series, onsets.first(2));
  if (!(peaks[0] > 0.0) || !(peaks[1] > 0.0)) throw DegenerateSignal("pair_ratio: missing response peak");
  return peaks[1] / peaks[0];
}

inline double pair_ratio(const CircuitResponse& r) { return pair_ratio(r.potential, r.pulse_onsets); }

/// Facilitation ratio f(Δt) for each inter-pulse gap on a fresh circuit.
inline std::vector<std::pair<double, double>> facilitation_sweep(const EquivCircuit& circuit,
                                                                 LightProtocol base,
                                                                 std::span<const double> gaps, double dt) {
  std::vector<std::pair<double, double>> out;
  for (double gap : gaps) {
    base.intervals = {gap};
    out.emplace_back(gap, pair_ratio(simulate_circuit(circuit, base, dt)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bi-exponential plasticity fit: f(Δt) = α1·e^(-Δt/T1) + α2·e^(-Δt/T2) + β.

struct PlasticityFit {
  double alpha1 = 0.0, alpha2 = 0.0, t1 = 0.0, t2 = 0.0, beta = 0.0;
  double chi2 = 0.0;
  Eigen::Matrix<double, 5, 5> covariance = Eigen::Matrix<double, 5, 5>::Zero();
  bool converged = false;
  bool ill_conditioned = false;
  int iterations = 0;

  double operator()(double dt) const {
    return alpha1 * std::exp(-dt / t1) + alpha2 * std::exp(-dt / t2) + beta;
  }

  /// One-sigma uncertainties in (α1, α2, T1, T2, β) order.
  std::array<double, 5> sigma() const {
    std::array<double, 5> s{};
    for (int i = 0; i < 5; ++i) s[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, covariance(i, i)));
    return s;
  }
};

class FitFailure : public Error {
 public:
  FitFailure(const std::string& what, PlasticityFit best) : Error(what), best_(std::move(best)) {}
  const PlasticityFit& best() const noexcept { return best_; }

 private:
  PlasticityFit best_;
};

struct FitOptions {
  int max_iterations = 400;       // per start
  int starts_per_axis = 6;        // T-initialisation grid
  double gradient_tolerance = 1e-14;
  double step_tolerance = 1e-13;
};

namespace detail {

using Vec5 = Eigen::Matrix<double, 5, 1>;

// Parameters are optimised as (α1, α2, ln T1, ln T2, β) to keep T positive.
inline double biexp(const Vec5& p, double x) {
  return p[0] * std::exp(-x / std::exp(p[2])) + p[1] * std::exp(-x / std::exp(p[3])) + p[4];
}

inline Eigen::MatrixXd biexp_jacobian(const Vec5& p, std::span<const std::pair<double, double>> pts) {
  Eigen::MatrixXd j(static_cast<Eigen::Index>(pts.size()), 5);
  const double t1 = std::exp(p[2]), t2 = std::exp(p[3]);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double x = pts[k].first;
    const double e1 = std::exp(-x / t1), e2 = std::exp(-x / t2);
    const auto r = static_cast<Eigen::Index>(k);
    j(r, 0) = e1;
    j(r, 1) = e2;
    j(r, 2) = p[0] * e1 * x / t1;  // d/d(ln T1)
    j(r, 3) = p[1] * e2 * x / t2;
    j(r, 4) = 1.0;
  }
  return j;
}

inline Eigen::VectorXd biexp_residual(const Vec5& p, std::span<const std::pair<double, double>> pts) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t k = 0; k < pts.size(); ++k) r[static_cast<Eigen::Index>(k)] = pts[k].second - biexp(p, pts[k].first);
  return r;
}

struct LmResult {
  Vec5 p;
  double chi2;
  bool converged;
  int iterations;
};

inline LmResult levenberg_marquardt(Vec5 p, std::span<const std::pair<double, double>> pts, const FitOptions& opt) {
  double lambda = 1e-3;
  Eigen::VectorXd r = biexp_residual(p, pts);
  double chi2 = r.squaredNorm();
  bool converged = false;
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    const Eigen::MatrixXd j = biexp_jacobian(p, pts);
    const Eigen::Matrix<double, 5, 5> jtj = j.transpose() * j;
    const Vec5 g = j.transpose() * r;
    if (g.cwiseAbs().maxCoeff() <= opt.gradient_tolerance * std::max(1.0, chi2)) {
      converged = true;
      break;
    }
    bool accepted = false;
    for (int tries = 0; tries < 30; ++tries) {
      Eigen::Matrix<double, 5, 5> a = jtj;
      for (int d = 0; d < 5; ++d) a(d, d) += lambda * std::max(jtj(d, d), 1e-30);
      const Vec5 step = a.ldlt().solve(g);
      const Vec5 trial = p + step;
      if (!trial.allFinite() || std::abs(trial[2]) > 50.0 || std::abs(trial[3]) > 50.0) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd rt = biexp_residual(trial, pts);
      const double chi2t = rt.squaredNorm();
      if (chi2t <= chi2) {
        const double rel_step = step.norm() / (p.norm() + opt.step_tolerance);
        const double decrease = chi2 - chi2t;
        p = trial;
        r = rt;
        chi2 = chi2t;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (rel_step < opt.step_tolerance || decrease <= 1e-30 + 1e-15 * chi2t) converged = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!accepted) {
      // no downhill step at any damping: we are at a (numerical) minimum
      converged = true;
      break;
    }
    if (converged) break;
  }
  return {p, chi2, converged, it};
}

/// Linear amplitudes (α1, α2, β) for fixed time constants.
inline Eigen::Vector3d linear_amplitudes(double t1, double t2, std::span<const std::pair<double, double>> pts) {
  Eigen::MatrixXd a(static_cast<Eigen::Index>(pts.size()), 3);
  Eigen::VectorXd y(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    a(r, 0) = std::exp(-pts[k].first / t1);
    a(r, 1) = std::exp(-pts[k].first / t2);
    a(r, 2) = 1.0;
    y[r] = pts[k].second;
  }
  return a.colPivHouseholderQr().solve(y);
}

}  // namespace detail

/// Levenberg-Marquardt fit of the bi-exponential facilitation law, multi-started
/// over a log grid of time-constant pairs. The result is reported with T1 >= T2.
inline PlasticityFit fit_biexponential(std::vector<std::pair<double, double>> points, const FitOptions& opt = {}) {
  if (points.size() < 6) throw InvalidInput("fit_biexponential: need at least 6 points");
  for (const auto& [x, y] : points)
    if (!(x > 0.0) || !std::isfinite(x) || !std::isfinite(y))
      throw InvalidInput("fit_biexponential: intervals must be positive and finite");
  std::sort(points.begin(), points.end());
  const std::span<const std::pair<double, double>> pts(points);

  const double x_lo = points.front().first;
  const double x_hi = points.back().first;
  const auto grid = logspace(x_lo * 0.5, x_hi * 2.0, static_cast<std::size_t>(std::max(2, opt.starts_per_axis)));

  detail::LmResult best{detail::Vec5::Zero(), INFINITY, false, 0};
  int total_iterations = 0;
  for (std::size_t a = 0; a < grid.size(); ++a) {
    for (std::size_t b = 0; b < a; ++b) {
      const double t1 = grid[a], t2 = grid[b];
      const Eigen::Vector3d lin = detail::linear_amplitudes(t1, t2, pts);
      if (!lin.allFinite()) continue;
      detail::Vec5 p0;
      p0 << lin[0], lin[1], std::log(t1), std::log(t2), lin[2];
      const auto res = detail::levenberg_marquardt(p0, pts, opt);
      total_iterations += res.iterations;
      if (res.chi2 < best.chi2 || (res.chi2 == best.chi2 && res.converged && !best.converged)) best = res;
    }
  }

  PlasticityFit fit;
  auto p = best.p;
  if (p[2] < p[3]) {
    std::swap(p[0], p[1]);
    std::swap(p[2], p[3]);
  }
  fit.alpha1 = p[0];
  fit.alpha2 = p[1];
  fit.t1 = std::exp(p[2]);
  fit.t2 = std::exp(p[3]);
  fit.beta = p[4];
  fit.chi2 = best.chi2;
  fit.converged = best.converged;
  fit.iterations = total_iterations;

  // Covariance in natural parameters: s²·(JᵀJ)⁻¹ with dT = T·d(ln T).
  Eigen::MatrixXd j = detail::biexp_jacobian(p, pts);
  j.col(2) /= fit.t1;
  j.col(3) /= fit.t2;
  const Eigen::Matrix<double, 5, 5> jtj = j.transpose() * j;
  const auto dof = static_cast<double>(points.size()) - 5.0;
  const double s2 = dof > 0.0 ? fit.chi2 / dof : 0.0;
  Eigen::JacobiSVD<Eigen::Matrix<double, 5, 5>> svd(jtj, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(4);
  fit.covariance = svd.solve(Eigen::Matrix<double, 5, 5>::Identity()) * s2;
  const bool near_degenerate = std::abs(fit.t1 - fit.t2) <= 1e-3 * fit.t1;
  fit.ill_conditioned = near_degenerate || !(smin > 1e-14 * smax);

  if (!fit.converged || !std::isfinite(fit.chi2))
    throw FitFailure("fit_biexponential: no start converged within the iteration budget", fit);
  return fit;
}

// ---------------------------------------------------------------------------
// STDP window, potentiation branch for Δt >= 0 and depression branch below.

struct StdpWindowParams {
  double a_plus = 1.0, a_minus = 0.5;
  double tau_a = 20e-3, tau_b = 20e-3, tau_c = 100e-3, tau_d = 100e-3;

  void validate() const {
    if (!(tau_a > 0.0) || !(tau_b > 0.0) || !(tau_c > 0.0) || !(tau_d > 0.0))
      throw InvalidInput("StdpWindowParams: time constants must be positive");
  }
};

inline double stdp_window(const StdpWindowParams& p, double dt) {
  p.validate();
  if (dt >= 0.0) return p.a_plus * std::exp(-dt / p.tau_a) + std::abs(p.a_minus) * std::exp(-dt / p.tau_c);
  return p.a_plus * std::exp(dt / p.tau_b) + std::abs(p.a_minus) * std::exp(dt / p.tau_d);
}

}  // namespace neuromime::synapse
