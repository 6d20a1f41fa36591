#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "../common/oracles.hpp"
#include "neuromime/dynamics.hpp"

using namespace neuromime;
using namespace neuromime::dynamics;
using Catch::Approx;

namespace {

TimeSeries sampled(double dt, std::size_t n, double (*f)(double)) {
  TimeSeries s;
  s.dt = dt;
  for (std::size_t k = 0; k < n; ++k) s.samples.push_back(f(dt * static_cast<double>(k)));
  return s;
}

double sep(const Vec3& a, const Vec3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

}  // namespace

TEST_CASE("origin is a fixed point of the Chua flow") {
  const ChuaParams p;
  const auto tr = chua_integrate(p, {0, 0, 0}, 10.0, 0.01);
  for (const auto& s : tr.states) CHECK(sep(s, {0, 0, 0}) == 0.0);
  ChuaParams cubic;
  cubic.nonlinearity = ChuaNonlinearity::Cubic;
  CHECK(chua_rhs(cubic, {0, 0, 0})[0] == 0.0);
}

TEST_CASE("Chua step matches an independent integrator") {
  const ChuaParams p;
  const oracle::Chua ref;
  const auto tr = chua_integrate(p, {0.7, 0, 0}, 5.0, 0.01);
  std::array<double, 3> s{0.7, 0, 0};
  for (std::size_t k = 1; k < tr.size(); ++k) {
    s = ref.step(s, 0.01);
    REQUIRE(sep(tr.states[k], {s[0], s[1], s[2]}) < 1e-12);
  }
}

TEST_CASE("double-scroll trajectories stay bounded and separate") {
  const ChuaParams p;
  const auto a = chua_integrate(p, {0.7, 0, 0}, 300.0, 0.01);
  const auto b = chua_integrate(p, {0.7 + 1e-8, 0, 0}, 300.0, 0.01);
  double peak = 0.0, worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    peak = std::max(peak, std::abs(a.states[k][0]));
    worst = std::max(worst, sep(a.states[k], b.states[k]));
  }
  CHECK(peak < 5.0);
  CHECK(worst > 1.0);  // comparable to the attractor itself
  // both scrolls are visited
  double lo = 0.0, hi = 0.0;
  for (const auto& s : a.states) {
    lo = std::min(lo, s[0]);
    hi = std::max(hi, s[0]);
  }
  CHECK(lo < -1.0);
  CHECK(hi > 1.0);
}

TEST_CASE("runaway parameters raise a blow-up error") {
  ChuaParams p;
  p.m0 = p.m1 = -2.0;  // x' = alpha (y + x): the origin repels without bound
  CHECK_THROWS_AS(chua_integrate(p, {0.7, 0, 0}, 1000.0, 0.01), BlowUpError);
  CHECK_THROWS_AS(chua_integrate(ChuaParams{}, {0.7, 0, 0}, 1.0, 0.1), InvalidInput);
}

TEST_CASE("logistic map exponent is ln 2") {
  TimeSeries s;
  s.dt = 1.0;
  double x = 0.3;
  for (int k = 0; k < 5000; ++k) {
    x = 4.0 * x * (1.0 - x);
    s.samples.push_back(x);
  }
  LyapunovOptions o;
  o.embed_dim = 1;
  o.embed_delay = 1;
  o.max_steps = 20;
  const auto e = lyapunov_largest(s, o);
  CHECK(std::abs(e.lambda / oracle::logistic_lambda_reference() - 1.0) < 0.1);
  CHECK(e.fit_end > e.fit_begin);
}

TEST_CASE("pure sine has no positive exponent") {
  for (double dt : {0.01, 0.02, 0.05}) {
    const auto s = sampled(dt, 5000, [](double t) { return std::sin(2 * std::numbers::pi * t); });
    CHECK(lyapunov_largest(s).lambda <= 0.01);
  }
}

TEST_CASE("Chua exponent is positive and agrees with two-trajectory divergence") {
  const ChuaParams p;
  const auto tr = chua_integrate(p, {0.7, 0, 0}, 600.0, 0.01);
  auto x = tr.channel(0, 5);
  x.samples.erase(x.samples.begin(), x.samples.begin() + 2000);
  const double est = lyapunov_largest(x).lambda;
  const double ref = oracle::benettin_lambda(oracle::Chua{}, {0.7, 0, 0}, 0.01, 10000, 2000, 10);
  CHECK(est > 0.0);
  CHECK(ref > 0.0);
  // time-delay estimates on a scalar channel are coarse; same order of magnitude
  CHECK(est / ref > 0.5);
  CHECK(est / ref < 2.0);
}

TEST_CASE("Lyapunov input checks") {
  TimeSeries shortie;
  shortie.dt = 1.0;
  shortie.samples.assign(100, 0.5);
  CHECK_THROWS_AS(lyapunov_largest(shortie), InvalidInput);
  const auto s = sampled(0.01, 2000, [](double t) { return std::sin(t); });
  LyapunovOptions bad;
  bad.embed_dim = 0;
  CHECK_THROWS_AS(lyapunov_largest(s, bad), InvalidInput);
}

TEST_CASE("phase response") {
  const std::vector<double> spikes{0.0, 1.0, 2.0, 3.0};
  const auto r = phase_response(spikes, 3.25, 1.1);
  CHECK(r.t0 == 1.0);
  CHECK(r.tau == 0.25);
  CHECK(r.phi == 0.25);
  CHECK(r.delta_t == Approx(0.1));
  CHECK(phase_response(spikes, 3.0, 1.0).phi == 0.0);

  const std::vector<double> one{0.0};
  CHECK_THROWS_AS(phase_response(one, 0.5, 1.0), InvalidInput);
  const std::vector<double> unsorted{1.0, 0.0, 2.0};
  CHECK_THROWS_AS(phase_response(unsorted, 2.5, 1.0), InvalidInput);
  CHECK_THROWS_AS(phase_response(spikes, 4.5, 1.0), InvalidInput);
}

TEST_CASE("harmonic analyzer on analytic signals") {
  SECTION("rectified sine") {
    const auto s = sampled(1e-4, 100000, [](double t) { return std::abs(std::sin(2 * std::numbers::pi * 5.0 * t)); });
    const auto sp = harmonic_spectrum(s, 10.0, 4);
    CHECK(sp.amplitude[0] == Approx(2.0 / std::numbers::pi).epsilon(0.01));
    CHECK(sp.amplitude[1] / sp.amplitude[0] == Approx(2.0 / 3.0).epsilon(0.01));
  }
  SECTION("pure sine has no harmonics") {
    const auto s = sampled(1e-4, 100000, [](double t) { return std::sin(2 * std::numbers::pi * 50.0 * t); });
    const auto sp = harmonic_spectrum(s, 50.0, 5);
    CHECK(sp.amplitude[1] == Approx(1.0).epsilon(1e-3));
    for (std::size_t k = 2; k <= 5; ++k) CHECK(sp.db_relative(k) < -60.0);
  }
  SECTION("agrees with a direct windowed DFT") {
    const auto s = sampled(1e-4, 20000, [](double t) {
      return 0.3 + std::sin(2 * std::numbers::pi * 40.0 * t) + 0.2 * std::cos(2 * std::numbers::pi * 120.0 * t);
    });
    const auto sp = harmonic_spectrum(s, 40.0, 3);
    const double p1 = oracle::power_at(s.samples, s.dt, 40.0), p3 = oracle::power_at(s.samples, s.dt, 120.0);
    CHECK(sp.amplitude[3] / sp.amplitude[1] == Approx(std::sqrt(p3 / p1)).epsilon(1e-6));
  }
  SECTION("too few periods or above Nyquist") {
    const auto s = sampled(1e-3, 1000, [](double t) { return std::sin(t); });
    CHECK_THROWS_AS(harmonic_spectrum(s, 5.0, 2), InvalidInput);
    CHECK_THROWS_AS(harmonic_spectrum(s, 300.0, 2), InvalidInput);
  }
}

TEST_CASE("memristive circuits generate harmonics a resistor does not") {
  const auto dev = devices::MemristorParams::linear_drift();
  const HarmonicDrive d;
  const auto r = harmonic_experiment(HarmonicCircuit::Resistor, dev, d);
  const auto s = harmonic_experiment(HarmonicCircuit::SingleMemristor, dev, d);
  const auto b = harmonic_experiment(HarmonicCircuit::MemristorBridge, dev, d);
  CHECK(r.efficiency.second < 1e-12);
  CHECK(s.efficiency.second > r.efficiency.second);
  CHECK(b.efficiency.second > s.efficiency.second);
  CHECK(s.efficiency.total >= s.efficiency.second);
}

TEST_CASE("resistor spectrum scales linearly with drive") {
  const auto dev = devices::MemristorParams::linear_drift();
  HarmonicDrive d;
  const double a1 = harmonic_experiment(HarmonicCircuit::Resistor, dev, d).spectrum.amplitude[1];
  d.amplitude *= 3.0;
  const double a3 = harmonic_experiment(HarmonicCircuit::Resistor, dev, d).spectrum.amplitude[1];
  CHECK(a3 / a1 == Approx(3.0).epsilon(1e-9));
}

TEST_CASE("rational approximation of frequency ratios") {
  const auto fifth = rational_ratio(1.5, 64, 1e-6);
  CHECK(fifth.p == 3);
  CHECK(fifth.q == 2);
  CHECK(fifth.exact);
  const auto tritone = rational_ratio(45.0 / 32.0, 64, 1e-6);
  CHECK(tritone.p == 45);
  CHECK(tritone.q == 32);
  CHECK_FALSE(rational_ratio(std::sqrt(2.0), 64, 1e-9).exact);
}

TEST_CASE("biased autocorrelation") {
  std::vector<double> x(100);
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = (k % 2) ? 1.0 : -1.0;
  CHECK(biased_autocorrelation(x, 0) == Approx(1.0));
  CHECK(biased_autocorrelation(x, 2) == Approx(98.0 / 100.0));
  CHECK(biased_autocorrelation(x, 1) < 0.0);
  const std::vector<double> flat(10, 3.0);
  CHECK(biased_autocorrelation(flat, 1) == 0.0);
}

TEST_CASE("interval consonance ordering and labels") {
  auto run = [](int num, int den) {
    IntervalExperiment e;
    e.f2 = e.f1 * num / den;
    return interval_consonance(e);
  };
  const auto octave = run(2, 1), fifth = run(3, 2), fourth = run(4, 3), tritone = run(45, 32);
  CHECK(octave.label == IntervalLabel::Consonant);
  CHECK(fifth.label == IntervalLabel::Consonant);
  CHECK(tritone.label == IntervalLabel::Dissonant);
  CHECK(octave.score >= fifth.score);
  CHECK(fifth.score >= fourth.score);
  CHECK(fourth.score > tritone.score);
  CHECK(octave.common_period == Approx(1.0 / 220.0));
  CHECK(tritone.common_period == Approx(32.0 / 220.0));

  // loops stay inside the envelope of the single tone at the same peak drive
  IntervalExperiment e;
  const auto ref = single_tone_reference(e);
  double ref_peak = 0.0, tri_peak = 0.0;
  for (double i : ref.i) ref_peak = std::max(ref_peak, std::abs(i));
  for (double i : tritone.trajectory.i) tri_peak = std::max(tri_peak, std::abs(i));
  CHECK(tri_peak <= 1.05 * ref_peak);
}

TEST_CASE("interval experiment validation") {
  IntervalExperiment e;
  e.f2 = e.f1;
  CHECK_THROWS_AS(interval_consonance(e), InvalidInput);
  e.f2 = 440.0;
  e.duration = 0.5;
  CHECK_THROWS_AS(interval_consonance(e), InvalidInput);
}
