#pragma once

// Reservoir engines: a single rectifying node with delayed feedback (echo
// state machine), memristor-network reservoirs with a sigmoid perceptron
// readout, and a phase-locking oscillator bank used as a toy classifier.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "neuromime/core/error.hpp"
#include "neuromime/core/parallel.hpp"
#include "neuromime/core/rng.hpp"
#include "neuromime/core/series.hpp"
#include "neuromime/devices.hpp"

namespace neuromime::reservoir {

using devices::MemristorParams;
using devices::MemristorState;

// ---------------------------------------------------------------------------
// Echo state machine: one rectifying device, an amplifier and a delay line.

struct EchoNode {
  MemristorParams device = MemristorParams::rectifying();
  double sense_resistance = 1e3;  // Ω, current-to-voltage conversion
  double gain = 6.5313;            // calibrated so the growth threshold sits at 1.85 Vpp
  double delay = 1e-3;            // s; one full signal window
  double clip = 5.0;              // V
  double threshold_vpp = 1.85;    // V, nominal threshold the gain was calibrated against

  void validate() const {
    device.validate();
    if (device.kind == devices::DeviceKind::StochasticSwitch)
      throw InvalidInput("EchoNode: device must be a drift or rectifying memristor");
    if (!(gain > 0.0) || !(delay > 0.0) || !(clip > 0.0) || !(sense_resistance > 0.0))
      throw InvalidInput("EchoNode: gain, delay, clip and sense resistance must be positive");
  }
};

/// One forward-biased half-sine window of peak-to-peak amplitude vpp.
inline TimeSeries esm_pulse(double vpp, double window, std::size_t samples) {
  if (samples < 2) throw InvalidInput("esm_pulse: need at least two samples");
  TimeSeries s;
  s.dt = window / static_cast<double>(samples - 1);
  s.samples.resize(samples);
  for (std::size_t k = 0; k < samples; ++k)
    s.samples[k] = vpp * std::sin(std::numbers::pi * static_cast<double>(k) / static_cast<double>(samples - 1));
  return s;
}

/// Feeds the node's amplified, clipped device response back as the next
/// window's input. Returns the peak-to-peak amplitude of the input window
/// followed by that of each of the n_iter outputs. The device state carries
/// over between iterations; the delay equals one window, so consecutive
/// windows abut.
inline std::vector<double> esm_iterate(const EchoNode& node, const TimeSeries& signal, int n_iter,
                                       MemristorState init = {}) {
  node.validate();
  signal.validate("esm_iterate");
  if (n_iter < 1) throw InvalidInput("esm_iterate: n_iter must be >= 1");
  if (!all_finite(signal.samples)) throw InvalidInput("esm_iterate: non-finite signal");

  std::vector<double> amplitudes{peak_to_peak(signal.samples)};
  std::vector<double> window = signal.samples;
  MemristorState s = init;
  for (int it = 0; it < n_iter; ++it) {
    std::vector<double> out(window.size());
    out[0] = std::clamp(node.gain * node.sense_resistance * devices::device_current(node.device, s.x, window[0]),
                        -node.clip, node.clip);
    for (std::size_t k = 1; k < window.size(); ++k) {
      const auto r = devices::memristor_advance(node.device, s, window[k - 1], window[k], signal.dt);
      s = r.state;
      out[k] = std::clamp(node.gain * node.sense_resistance * r.current, -node.clip, node.clip);
    }
    amplitudes.push_back(peak_to_peak(out));
    window = std::move(out);
  }
  return amplitudes;
}

/// Gain that makes `vpp` a fixed point of the amplitude map for a static
/// device at state x0.
inline double esm_calibrate_gain(const EchoNode& node, double vpp, double x0 = 0.5) {
  node.validate();
  const double i = devices::device_current(node.device, x0, vpp);
  if (!(i > 0.0)) throw DegenerateSignal("esm_calibrate_gain: device conducts no forward current");
  return vpp / (node.sense_resistance * i);
}

/// Growth/decay threshold by bisection on the half-sine amplitude: a
/// trajectory counts as growing when its last amplitude exceeds the input.
inline double esm_threshold(const EchoNode& node, double lo = 0.05, double hi = -1.0, int n_iter = 20,
                            std::size_t samples = 200) {
  if (hi <= 0.0) hi = node.clip;
  auto grows = [&](double a) {
    const auto traj = esm_iterate(node, esm_pulse(a, node.delay, samples), n_iter);
    return traj.back() > traj.front();
  };
  if (grows(lo) || !grows(hi)) throw DegenerateSignal("esm_threshold: no growth/decay dichotomy in range");
  for (int k = 0; k < 50 && hi - lo > 1e-6 * hi; ++k) {
    const double mid = 0.5 * (lo + hi);
    (grows(mid) ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Memristor-network reservoir.

enum class Topology { Ring, SmallWorld };

struct Edge {
  int from = 0;  // memristor polarity: positive current flows from -> to
  int to = 1;
};

struct ReservoirNet {
  Topology topology = Topology::Ring;
  int n_nodes = 12;
  std::vector<Edge> edges;
  MemristorParams device = MemristorParams::linear_drift();
  double sigma_dev = 0.0;      // relative device-to-device spread
  double rewiring_p = 0.0;
  int input_node = 0;
  double r_in = 1e3;           // Ω, source resistance into the input node
  double r_load = 10e3;        // Ω, every node to ground; <= 0 disables
  double c_node = 5e-7;        // F, every node to ground; <= 0 disables

  void validate() const {
    device.validate();
    if (n_nodes < 2) throw InvalidInput("ReservoirNet: need at least 2 nodes");
    if (input_node < 0 || input_node >= n_nodes) throw InvalidInput("ReservoirNet: input node out of range");
    if (!(sigma_dev >= 0.0)) throw InvalidInput("ReservoirNet: sigma_dev must be non-negative");
    if (!(r_in > 0.0)) throw InvalidInput("ReservoirNet: r_in must be positive");
    if (device.kind == devices::DeviceKind::StochasticSwitch)
      throw InvalidInput("ReservoirNet: edges must be drift memristors");
    for (const auto& e : edges)
      if (e.from < 0 || e.to < 0 || e.from >= n_nodes || e.to >= n_nodes || e.from == e.to)
        throw InvalidInput("ReservoirNet: bad edge");
  }

  std::vector<int> degrees() const {
    std::vector<int> d(static_cast<std::size_t>(n_nodes), 0);
    for (const auto& e : edges) {
      ++d[static_cast<std::size_t>(e.from)];
      ++d[static_cast<std::size_t>(e.to)];
    }
    return d;
  }

  bool connected() const {
    std::vector<int> parent(static_cast<std::size_t>(n_nodes));
    for (int i = 0; i < n_nodes; ++i) parent[static_cast<std::size_t>(i)] = i;
    auto find = [&](int a) {
      while (parent[static_cast<std::size_t>(a)] != a) a = parent[static_cast<std::size_t>(a)];
      return a;
    };
    int groups = n_nodes;
    for (const auto& e : edges) {
      const int a = find(e.from), b = find(e.to);
      if (a != b) {
        parent[static_cast<std::size_t>(a)] = b;
        --groups;
      }
    }
    return groups == 1;
  }
};

inline ReservoirNet make_ring(int n_nodes, const MemristorParams& device = MemristorParams::linear_drift()) {
  if (n_nodes < 3) throw InvalidInput("make_ring: need at least 3 nodes");
  ReservoirNet net;
  net.topology = Topology::Ring;
  net.n_nodes = n_nodes;
  net.device = device;
  for (int k = 0; k < n_nodes; ++k) net.edges.push_back({k, (k + 1) % n_nodes});
  return net;
}

/// Watts-Strogatz rewiring of the ring: each edge keeps its source and, with
/// probability p, moves its far end to a uniformly chosen node that is not
/// already a neighbour. Draws repeat until the graph is connected.
inline ReservoirNet make_small_world(int n_nodes, double rewiring_p, std::uint64_t seed,
                                     const MemristorParams& device = MemristorParams::linear_drift()) {
  if (!(rewiring_p >= 0.0 && rewiring_p <= 1.0)) throw InvalidInput("make_small_world: p must be in [0,1]");
  const ReservoirNet ring = make_ring(n_nodes, device);
  const Rng root(seed);
  for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
    Rng rng = root.split(attempt);
    ReservoirNet net = ring;
    net.topology = Topology::SmallWorld;
    net.rewiring_p = rewiring_p;
    auto linked = [&](int a, int b) {
      return std::any_of(net.edges.begin(), net.edges.end(), [&](const Edge& e) {
        return (e.from == a && e.to == b) || (e.from == b && e.to == a);
      });
    };
    for (auto& e : net.edges) {
      if (rng.uniform() >= rewiring_p) continue;
      std::vector<int> options;
      for (int c = 0; c < n_nodes; ++c)
        if (c != e.from && c != e.to && !linked(e.from, c)) options.push_back(c);
      if (options.empty()) continue;
      e.to = options[static_cast<std::size_t>(rng.below(options.size()))];
    }
    if (net.connected()) return net;
  }
  throw TopologyError("make_small_world: could not draw a connected graph");
}

/// Per-edge device realisation: R_on, R_off and mobility each scaled by an
/// independent lognormal factor of log-spread sigma_dev.
inline std::vector<MemristorParams> realize_devices(const ReservoirNet& net, Rng& rng) {
  std::vector<MemristorParams> out(net.edges.size(), net.device);
  if (net.sigma_dev == 0.0) return out;
  for (auto& p : out) {
    p.r_on *= rng.lognormal_median(1.0, net.sigma_dev);
    p.r_off *= rng.lognormal_median(1.0, net.sigma_dev);
    if (p.r_off < p.r_on) std::swap(p.r_on, p.r_off);
    p.mobility *= rng.lognormal_median(1.0, net.sigma_dev);
  }
  return out;
}

/// Node potentials over time, shape (n_nodes, input length). Each step
/// solves the nodal equations with memristor conductances frozen, node
/// capacitors as backward-Euler companions, then advances every device with
/// its branch voltage.
inline Eigen::MatrixXd reservoir_states(const ReservoirNet& net, std::span<const MemristorParams> devs,
                                        const TimeSeries& input) {
  net.validate();
  input.validate("reservoir_states");
  if (devs.size() != net.edges.size()) throw ContractViolation("reservoir_states: one device per edge required");
  if (!all_finite(input.samples)) throw InvalidInput("reservoir_states: non-finite input");

  // Every connected component needs a path to ground, else the matrix is singular.
  {
    std::vector<int> parent(static_cast<std::size_t>(net.n_nodes));
    for (int i = 0; i < net.n_nodes; ++i) parent[static_cast<std::size_t>(i)] = i;
    auto find = [&](int a) {
      while (parent[static_cast<std::size_t>(a)] != a) a = parent[static_cast<std::size_t>(a)];
      return a;
    };
    for (const auto& e : net.edges) parent[static_cast<std::size_t>(find(e.from))] = find(e.to);
    const bool every_node_grounded = net.r_load > 0.0 || net.c_node > 0.0;
    if (!every_node_grounded) {
      const int grounded = find(net.input_node);
      for (int i = 0; i < net.n_nodes; ++i)
        if (find(i) != grounded) throw TopologyError("reservoir_states: node " + std::to_string(i) + " floats");
    }
  }

  const auto n = static_cast<Eigen::Index>(net.n_nodes);
  const double dt = input.dt;
  std::vector<MemristorState> states(net.edges.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(input.size()));
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd g(n, n);
  Eigen::VectorXd rhs(n);
  const double g_c = net.c_node > 0.0 ? net.c_node / dt : 0.0;
  const double g_l = net.r_load > 0.0 ? 1.0 / net.r_load : 0.0;

  for (std::size_t k = 0; k < input.size(); ++k) {
    g.setZero();
    rhs.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      g(i, i) += g_l + g_c;
      rhs[i] += g_c * v[i];
    }
    g(net.input_node, net.input_node) += 1.0 / net.r_in;
    rhs[net.input_node] += input[k] / net.r_in;
    for (std::size_t e = 0; e < net.edges.size(); ++e) {
      const double ge = 1.0 / devices::memristance(devs[e], states[e].x);
      const auto a = net.edges[e].from, b = net.edges[e].to;
      g(a, a) += ge;
      g(b, b) += ge;
      g(a, b) -= ge;
      g(b, a) -= ge;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success) throw TopologyError("reservoir_states: singular nodal matrix");
    v = llt.solve(rhs);
    out.col(static_cast<Eigen::Index>(k)) = v;
    for (std::size_t e = 0; e < net.edges.size(); ++e) {
      const double ve = v[net.edges[e].from] - v[net.edges[e].to];
      states[e] = devices::memristor_step(devs[e], states[e], ve, dt).state;
    }
  }
  return out;
}

inline Eigen::MatrixXd reservoir_states(const ReservoirNet& net, const TimeSeries& input) {
  const std::vector<MemristorParams> devs(net.edges.size(), net.device);
  return reservoir_states(net, devs, input);
}

// ---------------------------------------------------------------------------
// Readout perceptron.

struct ReadoutLayer {
  Eigen::MatrixXd weights;          // 2 x features
  std::vector<int> readout_node_ids;
  int samples_per_node = 8;
};

inline double sigmoid(double h) { return 1.0 / (1.0 + std::exp(-h)); }

/// y_i = sigmoid(sum_j w_ij x_j) for the two output units.
inline std::array<double, 2> readout_forward(const ReadoutLayer& layer, std::span<const double> x) {
  if (layer.weights.rows() != 2 || layer.weights.cols() != static_cast<Eigen::Index>(x.size()))
    throw ContractViolation("readout_forward: weight matrix does not match feature length");
  std::array<double, 2> y{};
  for (Eigen::Index i = 0; i < 2; ++i) {
    double h = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) h += layer.weights(i, static_cast<Eigen::Index>(j)) * x[j];
    y[static_cast<std::size_t>(i)] = sigmoid(h);
  }
  return y;
}

enum class WaveKind { Sine, Triangle };

struct WaveformSample {
  WaveKind kind = WaveKind::Sine;
  double frequency = 1.0;  // Hz
  double amplitude = 1.0;  // V, peak

  double value(double t) const {
    const double ph = frequency * t - std::floor(frequency * t);
    if (kind == WaveKind::Sine) return amplitude * std::sin(2.0 * std::numbers::pi * ph);
    // zero-phase triangle rising through 0 at t = 0, peak at a quarter period
    const double tri = ph < 0.25 ? 4.0 * ph : (ph < 0.75 ? 2.0 - 4.0 * ph : 4.0 * ph - 4.0);
    return amplitude * tri;
  }
};

/// Sine and triangle samples of equal amplitude, frequencies uniform in
/// [f_lo, f_hi], alternating classes so the set is exactly balanced.
inline std::vector<WaveformSample> waveform_dataset(double f_lo, double f_hi, int n_per_class, double amplitude,
                                                    Rng& rng) {
  if (n_per_class < 1) throw InvalidInput("waveform_dataset: n must be >= 1");
  if (!(f_lo > 0.0) || !(f_hi > f_lo)) throw InvalidInput("waveform_dataset: empty frequency range");
  if (!(amplitude > 0.0)) throw InvalidInput("waveform_dataset: amplitude must be positive");
  std::vector<WaveformSample> out;
  for (int k = 0; k < n_per_class; ++k) {
    out.push_back({WaveKind::Sine, rng.uniform(f_lo, f_hi), amplitude});
    out.push_back({WaveKind::Triangle, rng.uniform(f_lo, f_hi), amplitude});
  }
  return out;
}

struct FeatureOptions {
  int periods = 4;              // drive length; the last period is sampled
  int steps_per_period = 200;
  int samples_per_node = 8;
};

/// Readout-node potentials at fixed phase points of the last input period.
inline std::vector<double> reservoir_features(const ReservoirNet& net, std::span<const MemristorParams> devs,
                                              const WaveformSample& w, std::span<const int> readouts,
                                              const FeatureOptions& opt = {}) {
  if (opt.steps_per_period % opt.samples_per_node != 0)
    throw InvalidInput("reservoir_features: steps per period must be a multiple of samples per node");
  TimeSeries in;
  in.dt = 1.0 / (w.frequency * opt.steps_per_period);
  const auto total = static_cast<std::size_t>(opt.periods * opt.steps_per_period);
  in.samples.resize(total);
  for (std::size_t k = 0; k < total; ++k) in.samples[k] = w.value(in.dt * static_cast<double>(k));
  const auto states = reservoir_states(net, devs, in);
  const auto start = static_cast<Eigen::Index>(total - static_cast<std::size_t>(opt.steps_per_period));
  const int stride = opt.steps_per_period / opt.samples_per_node;
  std::vector<double> f;
  for (int node : readouts) {
    if (node < 0 || node >= net.n_nodes) throw InvalidInput("reservoir_features: readout node out of range");
    for (int s = 0; s < opt.samples_per_node; ++s) f.push_back(states(node, start + s * stride));
  }
  return f;
}

struct TrainHyper {
  double learning_rate = 0.5;
  int epochs = 2000;
  double test_fraction = 0.5;
  std::uint64_t seed = 0;
};

struct TrainResult {
  ReadoutLayer layer;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

/// Predicted class: 0 = sine (target (0,1)), 1 = triangle (target (1,0)).
inline int readout_class(const ReadoutLayer& layer, std::span<const double> x) {
  const auto y = readout_forward(layer, x);
  return y[1] >= y[0] ? 0 : 1;
}

/// Full-batch gradient descent on the summed binary cross-entropy of the two
/// sigmoid units; weights start at zero.
inline TrainResult train_readout(const std::vector<std::vector<double>>& features, const std::vector<int>& labels,
                                 const TrainHyper& hyper, std::vector<int> readout_ids = {},
                                 int samples_per_node = 8) {
  if (features.size() != labels.size() || features.empty())
    throw InvalidInput("train_readout: features and labels must be non-empty and aligned");
  const bool has0 = std::find(labels.begin(), labels.end(), 0) != labels.end();
  const bool has1 = std::find(labels.begin(), labels.end(), 1) != labels.end();
  if (!has0 || !has1) throw DegenerateSignal("train_readout: dataset contains a single class");
  const auto dim = static_cast<Eigen::Index>(features.front().size());
  for (const auto& f : features)
    if (static_cast<Eigen::Index>(f.size()) != dim) throw ContractViolation("train_readout: ragged features");

  // Seeded stratified split.
  Rng rng(hyper.seed);
  std::vector<std::size_t> train, test;
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) idx.push_back(i);
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng.below(i))]);
    const auto n_test = static_cast<std::size_t>(std::round(hyper.test_fraction * static_cast<double>(idx.size())));
    for (std::size_t i = 0; i < idx.size(); ++i) (i < n_test ? test : train).push_back(idx[i]);
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  if (train.empty()) throw InvalidInput("train_readout: empty training split");

  Eigen::MatrixXd x(static_cast<Eigen::Index>(train.size()), dim);
  Eigen::MatrixXd t(static_cast<Eigen::Index>(train.size()), 2);
  for (std::size_t r = 0; r < train.size(); ++r) {
    const auto& f = features[train[r]];
    for (Eigen::Index c = 0; c < dim; ++c) x(static_cast<Eigen::Index>(r), c) = f[static_cast<std::size_t>(c)];
    const bool sine = labels[train[r]] == 0;
    t(static_cast<Eigen::Index>(r), 0) = sine ? 0.0 : 1.0;
    t(static_cast<Eigen::Index>(r), 1) = sine ? 1.0 : 0.0;
  }

  // Columns are trained at unit RMS and the scale is folded back into the
  // weights afterwards, so the deployed layer is still h = W x.
  Eigen::VectorXd col_scale(dim);
  for (Eigen::Index c = 0; c < dim; ++c) {
    const double r = std::sqrt(x.col(c).squaredNorm() / static_cast<double>(x.rows()));
    col_scale[c] = r > 0.0 ? r : 1.0;
    x.col(c) /= col_scale[c];
  }

  ReadoutLayer layer;
  layer.weights = Eigen::MatrixXd::Zero(2, dim);
  layer.readout_node_ids = std::move(readout_ids);
  layer.samples_per_node = samples_per_node;
  const double scale = hyper.learning_rate / static_cast<double>(train.size());
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    Eigen::MatrixXd h = x * layer.weights.transpose();
    Eigen::MatrixXd y = h.unaryExpr([](double v) { return sigmoid(v); });
    layer.weights -= scale * (y - t).transpose() * x;
  }
  for (Eigen::Index c = 0; c < dim; ++c) layer.weights.col(c) /= col_scale[c];

  auto accuracy = [&](const std::vector<std::size_t>& idx) {
    if (idx.empty()) return 0.0;
    std::size_t hit = 0;
    for (auto i : idx) hit += readout_class(layer, features[i]) == labels[i] ? 1 : 0;
    return static_cast<double>(hit) / static_cast<double>(idx.size());
  };
  TrainResult res;
  res.train_accuracy = accuracy(train);
  res.test_accuracy = accuracy(test);
  res.layer = std::move(layer);
  return res;
}

struct WaveformTask {
  double f_lo = 80.0, f_hi = 120.0;
  int n_per_class = 150;
  double amplitude = 1.0;
  FeatureOptions features{};
  TrainHyper hyper{};
};

/// End-to-end waveform classification. Device variability is redrawn for
/// every dataset item from a per-item split of the seed.
inline TrainResult classify_waveforms(const ReservoirNet& net, std::span<const int> readouts,
                                      const WaveformTask& task, std::uint64_t seed) {
  Rng data_rng = Rng(seed).split(1);
  const auto data = waveform_dataset(task.f_lo, task.f_hi, task.n_per_class, task.amplitude, data_rng);
  const Rng device_root = Rng(seed).split(2);
  std::vector<std::vector<double>> feats(data.size());
  std::vector<int> labels(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    Rng rng = device_root.split(i);
    const auto devs = realize_devices(net, rng);
    feats[i] = reservoir_features(net, devs, data[i], readouts, task.features);
    labels[i] = data[i].kind == WaveKind::Sine ? 0 : 1;
  });
  TrainHyper hyper = task.hyper;
  hyper.seed = Rng(seed).split(3).next();
  return train_readout(feats, labels, hyper, std::vector<int>(readouts.begin(), readouts.end()),
                       task.features.samples_per_node);
}

// ---------------------------------------------------------------------------
// Injection-locked oscillator bank (phase-locking toy model).

enum class LockState { Free, A, B };

struct OscillatorBank {
  std::array<double, 4> natural_freqs{300.0, 380.0, 470.0, 560.0};
  double coupling = 0.05;

  void validate() const {
    if (!(coupling >= 0.0)) throw InvalidInput("OscillatorBank: coupling must be non-negative");
    for (double f : natural_freqs)
      if (!(f > 0.0)) throw InvalidInput("OscillatorBank: frequencies must be positive");
  }
};

using SyncLabel = std::array<LockState, 4>;

/// Oscillator k locks to an input within its half-bandwidth coupling·f_k;
/// when both inputs qualify the closer one wins (A on exact ties).
inline SyncLabel lock_state(const OscillatorBank& bank, double f_a, double f_b) {
  SyncLabel out{};
  for (std::size_t k = 0; k < 4; ++k) {
    const double fk = bank.natural_freqs[k];
    const double half = bank.coupling * fk;
    const double da = std::abs(f_a - fk), db = std::abs(f_b - fk);
    const bool la = da < half, lb = db < half;
    out[k] = la && (!lb || da <= db) ? LockState::A : (lb ? LockState::B : LockState::Free);
  }
  return out;
}

/// Output frequency of oscillator k: the input it is locked to, else natural.
inline double locked_frequency(const OscillatorBank& bank, std::size_t k, double f_a, double f_b) {
  const auto s = lock_state(bank, f_a, f_b)[k];
  return s == LockState::A ? f_a : (s == LockState::B ? f_b : bank.natural_freqs[k]);
}

inline int label_code(const SyncLabel& l) {
  int code = 0;
  for (auto s : l) code = code * 3 + static_cast<int>(s);
  return code;
}

struct LockMap {
  std::vector<double> fa_grid, fb_grid;
  std::vector<int> codes;  // row-major over (fa index, fb index)

  int at(std::size_t ia, std::size_t ib) const { return codes[ia * fb_grid.size() + ib]; }

  /// Code of the grid cell nearest to (f_a, f_b); the point must lie in the grid's span.
  int lookup(double f_a, double f_b) const {
    auto nearest = [](const std::vector<double>& g, double f) {
      if (f < g.front() || f > g.back()) throw InvalidInput("LockMap: point outside map");
      const auto it = std::lower_bound(g.begin(), g.end(), f);
      auto i = static_cast<std::size_t>(it - g.begin());
      if (i > 0 && (i == g.size() || f - g[i - 1] <= g[i] - f)) --i;
      return i;
    };
    return at(nearest(fa_grid, f_a), nearest(fb_grid, f_b));
  }
};

inline LockMap injection_lock_map(const OscillatorBank& bank, std::vector<double> fa_grid,
                                  std::vector<double> fb_grid) {
  bank.validate();
  if (fa_grid.empty() || fb_grid.empty()) throw InvalidInput("injection_lock_map: empty grid");
  if (!std::is_sorted(fa_grid.begin(), fa_grid.end()) || !std::is_sorted(fb_grid.begin(), fb_grid.end()))
    throw InvalidInput("injection_lock_map: grids must be ascending");
  LockMap m{std::move(fa_grid), std::move(fb_grid), {}};
  m.codes.reserve(m.fa_grid.size() * m.fb_grid.size());
  for (double fa : m.fa_grid)
    for (double fb : m.fb_grid) m.codes.push_back(label_code(lock_state(bank, fa, fb)));
  return m;
}

struct LabeledPoint {
  double f_a = 0.0, f_b = 0.0;
  int label = 0;
};

/// Majority label per sync state learned on `train`, scored on `test`.
/// Sync states unseen in training predict the overall majority label.
inline double vowel_classify(const LockMap& map, std::span<const LabeledPoint> train,
                             std::span<const LabeledPoint> test) {
  if (train.empty() || test.empty()) throw InvalidInput("vowel_classify: empty split");
  std::map<int, std::map<int, int>> votes;
  std::map<int, int> overall;
  for (const auto& p : train) {
    ++votes[map.lookup(p.f_a, p.f_b)][p.label];
    ++overall[p.label];
  }
  auto argmax = [](const std::map<int, int>& m) {
    return std::max_element(m.begin(), m.end(), [](auto& a, auto& b) { return a.second < b.second; })->first;
  };
  const int fallback = argmax(overall);
  std::size_t hit = 0;
  for (const auto& p : test) {
    const auto it = votes.find(map.lookup(p.f_a, p.f_b));
    const int guess = it == votes.end() ? fallback : argmax(it->second);
    hit += guess == p.label ? 1 : 0;
  }
  return static_cast<double>(hit) / static_cast<double>(test.size());
}

/// Synthetic "vowel" clusters: one isotropic Gaussian per chosen sync state,
/// centred on the state's region centroid with spread = `spread` times the
/// region's smaller half-extent. The `n_classes` largest regions are used.
inline std::vector<LabeledPoint> synthetic_vowels(const LockMap& map, int n_classes, int n_per_class,
                                                  double spread, Rng& rng) {
  struct Region {
    int code;
    std::size_t cells = 0;
    double sa = 0, sb = 0, a_lo = INFINITY, a_hi = -INFINITY, b_lo = INFINITY, b_hi = -INFINITY;
  };
  std::map<int, Region> regions;
  for (std::size_t ia = 0; ia < map.fa_grid.size(); ++ia)
    for (std::size_t ib = 0; ib < map.fb_grid.size(); ++ib) {
      auto& r = regions[map.at(ia, ib)];
      r.code = map.at(ia, ib);
      ++r.cells;
      r.sa += map.fa_grid[ia];
      r.sb += map.fb_grid[ib];
      r.a_lo = std::min(r.a_lo, map.fa_grid[ia]);
      r.a_hi = std::max(r.a_hi, map.fa_grid[ia]);
      r.b_lo = std::min(r.b_lo, map.fb_grid[ib]);
      r.b_hi = std::max(r.b_hi, map.fb_grid[ib]);
    }
  std::vector<Region> ordered;
  for (auto& [code, r] : regions) ordered.push_back(r);
  std::stable_sort(ordered.begin(), ordered.end(), [](auto& a, auto& b) { return a.cells > b.cells; });
  if (static_cast<int>(ordered.size()) < n_classes) throw InvalidInput("synthetic_vowels: not enough sync states");

  std::vector<LabeledPoint> out;
  for (int c = 0; c < n_classes; ++c) {
    const auto& r = ordered[static_cast<std::size_t>(c)];
    const double ca = r.sa / static_cast<double>(r.cells), cb = r.sb / static_cast<double>(r.cells);
    const double sigma = spread * 0.5 * std::min(r.a_hi - r.a_lo, r.b_hi - r.b_lo);
    for (int k = 0; k < n_per_class; ++k) {
      LabeledPoint p{};
      do {
        p.f_a = ca + sigma * rng.normal();
        p.f_b = cb + sigma * rng.normal();
      } while (p.f_a < map.fa_grid.front() || p.f_a > map.fa_grid.back() || p.f_b < map.fb_grid.front() ||
               p.f_b > map.fb_grid.back());
      p.label = c;
      out.push_back(p);
    }
  }
  return out;
}

}  // namespace neuromime::reservoir
