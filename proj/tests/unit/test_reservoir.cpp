#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "neuromime/reservoir.hpp"

using namespace neuromime;
using namespace neuromime::reservoir;
using Catch::Approx;

namespace {

TimeSeries drive(std::size_t n, double dt) {
  TimeSeries s;
  s.dt = dt;
  s.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) s.samples[k] = std::sin(2 * std::numbers::pi * 100.0 * dt * static_cast<double>(k));
  return s;
}

std::vector<double> grid(double lo, double hi, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k) g[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  return g;
}

}  // namespace

TEST_CASE("echo node: zero signal stays zero") {
  const EchoNode node;
  const auto amps = esm_iterate(node, esm_pulse(0.0, node.delay, 200), 10);
  for (double a : amps) CHECK(a == 0.0);
}

TEST_CASE("echo node: large pulses grow, small pulses fade") {
  const EchoNode node;
  const auto big = esm_iterate(node, esm_pulse(2.2, node.delay, 200), 20);
  const auto small = esm_iterate(node, esm_pulse(1.0, node.delay, 200), 20);
  CHECK(big.back() > big.front());
  CHECK(small.back() < small.front());
  for (double a : big) CHECK(a <= 2 * node.clip + 1e-12);
}

TEST_CASE("echo node: threshold near the calibrated amplitude") {
  const EchoNode node;
  const double th = esm_threshold(node);
  CHECK(std::abs(th / 1.85 - 1.0) < 0.15);
}

TEST_CASE("echo node rejects stochastic devices") {
  EchoNode node;
  node.device = devices::MemristorParams::stochastic_switch();
  CHECK_THROWS_AS(esm_iterate(node, esm_pulse(1.0, 1e-3, 50), 1), InvalidInput);
}

TEST_CASE("ring graph shape") {
  const auto ring = make_ring(12);
  for (int d : ring.degrees()) CHECK(d == 2);
  CHECK(ring.connected());
  CHECK_THROWS_AS(make_ring(2), InvalidInput);
}

TEST_CASE("small-world graphs are connected and keep the edge count") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto net = make_small_world(12, 0.3, seed);
    CHECK(net.connected());
    CHECK(net.edges.size() == 12);
    for (const auto& e : net.edges) CHECK(e.from != e.to);
  }
  CHECK_THROWS_AS(make_small_world(12, 1.5, 0), InvalidInput);
}

TEST_CASE("zero input leaves every node at zero") {
  const auto net = make_ring(8);
  TimeSeries in;
  in.dt = 1e-4;
  in.samples.assign(100, 0.0);
  const auto s = reservoir_states(net, in);
  CHECK(s.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("shifting the input node rotates the ring response") {
  auto a = make_ring(8);
  auto b = a;
  b.input_node = 3;
  const auto in = drive(400, 5e-5);
  const auto sa = reservoir_states(a, in);
  const auto sb = reservoir_states(b, in);
  const double scale = sa.cwiseAbs().maxCoeff();
  REQUIRE(scale > 0.0);
  double worst = 0.0;
  for (Eigen::Index node = 0; node < 8; ++node)
    worst = std::max(worst, (sa.row(node) - sb.row((node + 3) % 8)).cwiseAbs().maxCoeff());
  CHECK(worst < 1e-9 * scale);
}

TEST_CASE("readout forward pass") {
  ReadoutLayer layer;
  layer.weights = Eigen::MatrixXd::Zero(2, 3);
  const std::vector<double> x{0.3, -1.0, 2.0};
  const auto y0 = readout_forward(layer, x);
  CHECK(y0[0] == 0.5);
  CHECK(y0[1] == 0.5);

  layer.weights = Eigen::MatrixXd::Zero(2, 1);
  layer.weights(0, 0) = std::log(3.0);
  layer.weights(1, 0) = -std::log(3.0);
  const std::vector<double> one{1.0};
  const auto y1 = readout_forward(layer, one);
  CHECK(y1[0] == Approx(0.75).epsilon(1e-14));
  CHECK(y1[1] == Approx(0.25).epsilon(1e-14));

  // two readout features worked by hand: h = (2 - 1, 1 + 0.5) = (1, 1.5)
  layer.weights.resize(2, 2);
  layer.weights << 1.0, -1.0, 0.5, 0.5;
  const std::vector<double> two{2.0, 1.0};
  const auto y2 = readout_forward(layer, two);
  CHECK(y2[0] == Approx(1.0 / (1.0 + std::exp(-1.0))));
  CHECK(y2[1] == Approx(1.0 / (1.0 + std::exp(-1.5))));

  CHECK_THROWS_AS(readout_forward(layer, one), ContractViolation);
}

TEST_CASE("readout training on separable data") {
  Rng rng(4);
  std::vector<std::vector<double>> f;
  std::vector<int> labels;
  for (int k = 0; k < 100; ++k) {
    const int c = k % 2;
    f.push_back({c == 0 ? 1.0 + rng.uniform() : -1.0 - rng.uniform(), rng.normal(), 1.0});
    labels.push_back(c);
  }
  const auto r = train_readout(f, labels, TrainHyper{});
  CHECK(r.train_accuracy == 1.0);
  CHECK(r.test_accuracy == 1.0);

  const std::vector<int> single(f.size(), 0);
  CHECK_THROWS_AS(train_readout(f, single, TrainHyper{}), DegenerateSignal);
}

TEST_CASE("waveform dataset") {
  Rng rng(2);
  const auto d = waveform_dataset(80, 120, 25, 0.7, rng);
  int sines = 0;
  for (const auto& w : d) {
    sines += w.kind == WaveKind::Sine;
    CHECK(w.amplitude == 0.7);
    CHECK(w.frequency >= 80.0);
    CHECK(w.frequency <= 120.0);
  }
  CHECK(d.size() == 50);
  CHECK(sines == 25);
  CHECK_THROWS_AS(waveform_dataset(80, 120, 0, 1.0, rng), InvalidInput);

  // equal peak values for both shapes
  const WaveformSample s{WaveKind::Sine, 100.0, 1.0}, t{WaveKind::Triangle, 100.0, 1.0};
  CHECK(s.value(0.0025) == Approx(1.0));
  CHECK(t.value(0.0025) == Approx(1.0));
}

TEST_CASE("ring reservoir separates sine from triangle") {
  const auto net = make_ring(12);
  WaveformTask task;
  task.n_per_class = 40;
  const std::vector<int> readouts{3, 6};
  const auto r = classify_waveforms(net, readouts, task, 0);
  CHECK(r.test_accuracy >= 0.9);
}

TEST_CASE("lock state boundaries") {
  OscillatorBank bank;
  const double far = 5000.0;
  const double f0 = bank.natural_freqs[0], half = bank.coupling * f0;
  CHECK(lock_state(bank, 10.0, far)[0] == LockState::Free);
  CHECK(lock_state(bank, f0, far)[0] == LockState::A);
  CHECK(locked_frequency(bank, 0, f0 + 0.99 * half, far) == f0 + 0.99 * half);
  CHECK(lock_state(bank, f0 + 1.01 * half, far)[0] == LockState::Free);
  CHECK(locked_frequency(bank, 0, f0 + 1.01 * half, far) == f0);
  CHECK(lock_state(bank, far, f0 - 0.5 * half)[0] == LockState::B);
  // closer input wins
  CHECK(lock_state(bank, f0 + 0.5 * half, f0 - 0.2 * half)[0] == LockState::B);
}

TEST_CASE("locking width grows linearly with coupling") {
  auto locked_width = [](double eps) {
    OscillatorBank bank;
    bank.coupling = eps;
    const auto g = grid(200.0, 700.0, 50001);
    std::size_t n = 0;
    for (double f : g) n += lock_state(bank, f, 5000.0)[1] == LockState::A;
    return static_cast<double>(n) * (g[1] - g[0]);
  };
  const double w1 = locked_width(0.02), w2 = locked_width(0.04);
  CHECK(w1 == Approx(2 * 0.02 * 380.0).epsilon(0.01));
  CHECK(w2 / w1 == Approx(2.0).epsilon(0.01));
}

TEST_CASE("lock map is piecewise constant with the analytic boundaries") {
  const OscillatorBank bank;
  const auto g = grid(250, 650, 161);
  const auto map = injection_lock_map(bank, g, g);
  for (std::size_t ia = 0; ia < g.size(); ++ia)
    for (std::size_t ib = 0; ib < g.size(); ++ib) REQUIRE(map.at(ia, ib) == label_code(lock_state(bank, g[ia], g[ib])));
  const std::set<int> distinct(map.codes.begin(), map.codes.end());
  CHECK(distinct.size() > 4);
  CHECK(map.lookup(300.0, 560.0) == label_code(lock_state(bank, 300.0, 560.0)));
  CHECK_THROWS_AS(map.lookup(100.0, 300.0), InvalidInput);
}

TEST_CASE("cluster classification on the lock map") {
  const OscillatorBank bank;
  const auto g = grid(250, 650, 161);
  const auto map = injection_lock_map(bank, g, g);
  auto split = [](const std::vector<LabeledPoint>& pts) {
    std::vector<LabeledPoint> a, b;
    for (std::size_t k = 0; k < pts.size(); ++k) (k % 2 ? b : a).push_back(pts[k]);
    return std::pair{a, b};
  };

  SECTION("single cluster is always right") {
    Rng rng(1);
    const auto [tr, te] = split(synthetic_vowels(map, 1, 40, 0.3, rng));
    CHECK(vowel_classify(map, tr, te) == 1.0);
  }
  SECTION("seven clusters are mostly recovered") {
    Rng rng(2);
    const auto [tr, te] = split(synthetic_vowels(map, 7, 60, 0.3, rng));
    CHECK(vowel_classify(map, tr, te) > 0.7);
  }
  SECTION("shuffled labels fall to chance") {
    Rng rng(3);
    auto pts = synthetic_vowels(map, 5, 200, 0.3, rng);
    for (auto& p : pts) p.label = static_cast<int>(rng.below(5));
    const auto [tr, te] = split(pts);
    CHECK(vowel_classify(map, tr, te) < 0.35);
  }
}
