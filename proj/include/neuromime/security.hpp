#pragma once

// Memristive cryptographic primitives: chaotic masking over a Chua channel,
// a permutation/XOR image scrambler, a stochastic-delay TRNG with three
// statistical tests, a sneak-path crossbar PUF and a photocurrent hash.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "neuromime/core/error.hpp"
#include "neuromime/core/image.hpp"
#include "neuromime/core/ode.hpp"
#include "neuromime/core/parallel.hpp"
#include "neuromime/core/rng.hpp"
#include "neuromime/core/series.hpp"
#include "neuromime/devices.hpp"
#include "neuromime/dynamics.hpp"

namespace neuromime::security {

using dynamics::ChuaParams;
using dynamics::Vec3;

namespace detail {

// Second-order Butterworth run forward then backward, so the output has no
// phase lag. Edges are initialised at the boundary sample to avoid a step.
inline std::vector<double> zero_phase_lowpass(std::vector<double> x, double cutoff, double dt) {
  if (x.size() < 2 || !(cutoff > 0.0)) return x;
  if (!(cutoff * dt < 0.5)) throw InvalidInput("zero_phase_lowpass: cutoff at or above Nyquist");
  const double k = std::tan(std::numbers::pi * cutoff * dt);
  const double q = std::numbers::sqrt2 / 2.0;
  const double norm = 1.0 / (1.0 + k / q + k * k);
  const double b0 = k * k * norm, b1 = 2.0 * b0, b2 = b0;
  const double a1 = 2.0 * (k * k - 1.0) * norm, a2 = (1.0 - k / q + k * k) * norm;
  auto pass = [&](std::vector<double>& v) {
    double x1 = v.front(), x2 = v.front(), y1 = v.front(), y2 = v.front();
    for (double& s : v) {
      const double y = b0 * s + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
      x2 = x1;
      x1 = s;
      y2 = y1;
      y1 = y;
      s = y;
    }
  };
  pass(x);
  std::reverse(x.begin(), x.end());
  pass(x);
  std::reverse(x.begin(), x.end());
  return x;
}

inline void check_state(const ChuaParams& p, const Vec3& s, double t, const char* who) {
  for (double v : s)
    if (!(std::abs(v) <= p.blowup_bound)) throw BlowUpError(std::string(who) + ": trajectory diverged", t);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Chaotic masking: s = m + c, recovered by a receiver synchronised through
// the transmitted signal.

enum class SyncScheme { DriveX };

struct ChaoticChannel {
  ChuaParams tx;
  Vec3 tx_init{0.1, 0.0, 0.0};
  ChuaParams rx;
  Vec3 rx_init{0.0, 0.0, 0.0};
  double mask_gain = 0.02;
  SyncScheme sync = SyncScheme::DriveX;
  double dt = 0.01;               // dimensionless Chua time per sample
  double settle = 200.0;          // transmitter runs this long before the message starts
  double lowpass_cutoff = 0.005;  // post-filter on the recovered message, 0 disables
  double discard = 100.0;         // receiver synchronisation transient

  void validate() const {
    tx.validate();
    rx.validate();
    if (!(mask_gain > 0.0) || !std::isfinite(mask_gain)) throw InvalidInput("ChaoticChannel: mask_gain must be > 0");
    if (!(dt > 0.0) || dt > 0.01) throw InvalidInput("ChaoticChannel: dt must lie in (0, 0.01]");
    if (!(settle >= 0.0) || !(discard >= 0.0) || !(lowpass_cutoff >= 0.0))
      throw InvalidInput("ChaoticChannel: settle, discard and cutoff must be non-negative");
  }
};

/// Transmitter drive variable x over n samples, after the settling run.
inline TimeSeries chaos_carrier(const ChaoticChannel& ch, std::size_t n) {
  ch.validate();
  if (n == 0) throw InvalidInput("chaos_carrier: empty request");
  auto f = [&](double, const Vec3& y) { return dynamics::chua_rhs(ch.tx, y); };
  Vec3 s = ch.tx_init;
  const auto skip = static_cast<std::size_t>(std::llround(ch.settle / ch.dt));
  for (std::size_t k = 0; k < skip; ++k) {
    s = rk4_step<3>(f, 0.0, s, ch.dt);
    detail::check_state(ch.tx, s, ch.dt * static_cast<double>(k + 1), "mask_encrypt");
  }
  TimeSeries c;
  c.dt = ch.dt;
  c.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    c.samples[k] = s[0];
    s = rk4_step<3>(f, 0.0, s, ch.dt);
    detail::check_state(ch.tx, s, ch.settle + ch.dt * static_cast<double>(k + 1), "mask_encrypt");
  }
  return c;
}

/// Rescales a raw message so that rms(message) / rms(carrier) = mask_gain.
inline TimeSeries scale_message(const ChaoticChannel& ch, const TimeSeries& raw) {
  raw.validate("scale_message");
  const double r = rms(raw.samples);
  if (!(r > 0.0)) return raw;
  const TimeSeries c = chaos_carrier(ch, raw.size());
  TimeSeries out = raw;
  const double g = ch.mask_gain * rms(c.samples) / r;
  for (double& v : out.samples) v *= g;
  return out;
}

inline TimeSeries mask_encrypt(const ChaoticChannel& ch, const TimeSeries& message) {
  message.validate("mask_encrypt");
  if (std::abs(message.dt - ch.dt) > 1e-12 * ch.dt)
    throw InvalidInput("mask_encrypt: message must be sampled at the channel step");
  TimeSeries s = chaos_carrier(ch, message.size());
  for (std::size_t k = 0; k < s.size(); ++k) s.samples[k] += message.samples[k];
  return s;
}

inline TimeSeries add_channel_noise(const TimeSeries& s, double snr_db, Rng& rng) {
  const double sigma = rms(s.samples) / std::pow(10.0, snr_db / 20.0);
  TimeSeries out = s;
  for (double& v : out.samples) v += sigma * rng.normal();
  return out;
}

struct DecryptResult {
  TimeSeries message;  // post-filtered estimate
  TimeSeries raw;      // s - x_r before filtering
  TimeSeries carrier;  // receiver's x_r
  std::optional<double> correlation;
};

/// Receiver: (y, z) driven by s in place of x, x_r driven by y_r. The
/// estimate is s - x_r. Correlation against `truth` ignores the first
/// `discard` time units.
inline DecryptResult mask_decrypt(const ChaoticChannel& ch, const TimeSeries& s,
                                  const TimeSeries* truth = nullptr) {
  ch.validate();
  s.validate("mask_decrypt");
  if (!all_finite(s.samples)) throw InvalidInput("mask_decrypt: non-finite signal");
  const ChuaParams& r = ch.rx;
  const double dt = s.dt;
  const std::size_t n = s.size();
  DecryptResult out;
  out.carrier.dt = out.raw.dt = out.message.dt = dt;
  out.carrier.samples.resize(n);
  Vec3 st = ch.rx_init;
  for (std::size_t k = 0; k < n; ++k) {
    out.carrier.samples[k] = st[0];
    const double s0 = s.samples[k];
    const double s1 = k + 1 < n ? s.samples[k + 1] : s0;
    auto f = [&](double tau, const Vec3& y) {
      const double drive = s0 + (s1 - s0) * tau / dt;
      return Vec3{r.alpha * (y[1] - y[0] - r.h(y[0])), drive - y[1] + y[2], -r.beta * y[1]};
    };
    st = rk4_step<3>(f, 0.0, st, dt);
    detail::check_state(r, st, dt * static_cast<double>(k + 1), "mask_decrypt");
  }
  out.raw.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.raw.samples[k] = s.samples[k] - out.carrier.samples[k];
  out.message.samples = detail::zero_phase_lowpass(out.raw.samples, ch.lowpass_cutoff, dt);
  if (truth) {
    if (truth->size() != n) throw InvalidInput("mask_decrypt: truth length differs from signal");
    const auto skip = std::min(n, static_cast<std::size_t>(std::llround(ch.discard / dt)));
    if (n - skip < 2) throw DegenerateSignal("mask_decrypt: nothing left after the transient");
    out.correlation = pearson(std::span(out.message.samples).subspan(skip),
                              std::span(truth->samples).subspan(skip));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Chua keystream and image scrambler.

struct KeystreamParams {
  ChuaParams chua;
  Vec3 init{0.1, 0.0, 0.0};
  double dt = 0.01;
  std::size_t stride = 10;  // integration steps per byte
  double transient = 100.0;
  double x_min = -2.5;
  double x_max = 2.5;
  // 0 takes the leading base-256 digit of the normalised sample. The double
  // scroll spends most time near its two lobes, so that digit is far from
  // uniform; deeper digits are.
  int digit = 3;

  void validate() const {
    chua.validate();
    if (!(dt > 0.0) || dt > 0.01) throw InvalidInput("KeystreamParams: dt must lie in (0, 0.01]");
    if (stride == 0) throw InvalidInput("KeystreamParams: stride must be >= 1");
    if (!(x_max > x_min)) throw InvalidInput("KeystreamParams: require x_max > x_min");
    if (digit < 0 || digit > 4) throw InvalidInput("KeystreamParams: digit must lie in [0, 4]");
    if (!(transient >= 0.0)) throw InvalidInput("KeystreamParams: transient must be non-negative");
  }
};

inline std::uint8_t quantize_byte(double x, double x_min, double x_max, int digit) {
  const double u = (x - x_min) / (x_max - x_min);
  const double scaled = std::floor(u * std::pow(256.0, digit + 1));
  if (digit == 0) return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
  const double clamped = std::clamp(scaled, 0.0, std::pow(256.0, digit + 1) - 1.0);
  return static_cast<std::uint8_t>(std::fmod(clamped, 256.0));
}

inline std::vector<std::uint8_t> keystream(const KeystreamParams& p, std::size_t n_bytes) {
  p.validate();
  auto f = [&](double, const Vec3& y) { return dynamics::chua_rhs(p.chua, y); };
  Vec3 s = p.init;
  std::size_t step = 0;
  auto advance = [&] {
    s = rk4_step<3>(f, 0.0, s, p.dt);
    ++step;
    detail::check_state(p.chua, s, p.dt * static_cast<double>(step), "keystream");
  };
  const auto skip = static_cast<std::size_t>(std::llround(p.transient / p.dt));
  for (std::size_t k = 0; k < skip; ++k) advance();
  std::vector<std::uint8_t> out(n_bytes);
  for (auto& b : out) {
    for (std::size_t k = 0; k < p.stride; ++k) advance();
    b = quantize_byte(s[0], p.x_min, p.x_max, p.digit);
  }
  return out;
}

struct ScrambleKey {
  std::uint64_t permutation_seed = 0;
  KeystreamParams keystream;
};

inline std::vector<std::size_t> column_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  for (std::size_t k = 0; k < n; ++k) perm[k] = k;
  Rng rng(seed);
  for (std::size_t k = n; k > 1; --k) std::swap(perm[k - 1], perm[rng.below(k)]);
  return perm;
}

namespace detail {

inline void reverse_odd_rows(Image& img) {
  for (std::size_t r = 1; r < img.height; r += 2)
    std::reverse(img.pixels.begin() + static_cast<std::ptrdiff_t>(r * img.width),
                 img.pixels.begin() + static_cast<std::ptrdiff_t>((r + 1) * img.width));
}

inline void reverse_odd_cols(Image& img) {
  for (std::size_t c = 1; c < img.width; c += 2)
    for (std::size_t r = 0; r < img.height / 2; ++r) std::swap(img.at(r, c), img.at(img.height - 1 - r, c));
}

inline void xor_keystream(Image& img, const KeystreamParams& p) {
  const auto ks = keystream(p, img.pixels.size());
  for (std::size_t k = 0; k < ks.size(); ++k) img.pixels[k] ^= ks[k];
}

}  // namespace detail

/// Reverse odd rows, reverse odd columns (0-based), permute columns, XOR.
inline Image scramble_image(const Image& img, const ScrambleKey& key) {
  img.validate("scramble_image");
  Image a = img;
  detail::reverse_odd_rows(a);
  detail::reverse_odd_cols(a);
  const auto perm = column_permutation(a.width, key.permutation_seed);
  Image b(a.width, a.height);
  for (std::size_t r = 0; r < a.height; ++r)
    for (std::size_t c = 0; c < a.width; ++c) b.at(r, c) = a.at(r, perm[c]);
  detail::xor_keystream(b, key.keystream);
  return b;
}

inline Image descramble_image(const Image& img, const ScrambleKey& key) {
  img.validate("descramble_image");
  Image b = img;
  detail::xor_keystream(b, key.keystream);
  const auto perm = column_permutation(b.width, key.permutation_seed);
  Image a(b.width, b.height);
  for (std::size_t r = 0; r < b.height; ++r)
    for (std::size_t c = 0; c < b.width; ++c) a.at(r, perm[c]) = b.at(r, c);
  detail::reverse_odd_cols(a);
  detail::reverse_odd_rows(a);
  return a;
}

/// Chi-square statistic of the 256-bin histogram against uniform and its
/// upper-tail p-value (255 degrees of freedom).
struct HistogramUniformity {
  double chi2 = 0.0;
  double p_value = 0.0;
};

inline HistogramUniformity histogram_uniformity(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw InvalidInput("histogram_uniformity: no data");
  std::array<double, 256> counts{};
  for (auto b : bytes) counts[b] += 1.0;
  const double expected = static_cast<double>(bytes.size()) / 256.0;
  HistogramUniformity h;
  for (double c : counts) h.chi2 += (c - expected) * (c - expected) / expected;
  h.p_value = boost::math::gamma_q(255.0 / 2.0, h.chi2 / 2.0);
  return h;
}

// ---------------------------------------------------------------------------
// True random bits from stochastic switching delays, and statistical tests.

struct BitStream {
  std::vector<std::uint8_t> bits;
  std::string source;

  std::size_t size() const noexcept { return bits.size(); }
  bool operator==(const BitStream&) const = default;
};

struct TrngOptions {
  double pulse_voltage = 1.0;
  // Bit = 1 when the delay exceeds this quantile of the delay law, so the
  // expected ones-fraction is 1 - quantile.
  double threshold_quantile = 0.5;
  bool von_neumann = false;
};

/// Pairs 01 -> 0, 10 -> 1; equal pairs are dropped.
inline BitStream von_neumann(const BitStream& in) {
  BitStream out;
  out.source = in.source + "+von-neumann";
  out.bits.reserve(in.bits.size() / 4);
  for (std::size_t k = 0; k + 1 < in.bits.size(); k += 2)
    if (in.bits[k] != in.bits[k + 1]) out.bits.push_back(in.bits[k]);
  return out;
}

inline BitStream trng_generate(const devices::MemristorParams& device, std::size_t n_bits, Rng& rng,
                               const TrngOptions& opt = {}) {
  if (n_bits == 0) throw InvalidInput("trng_generate: n_bits must be positive");
  if (device.kind != devices::DeviceKind::StochasticSwitch)
    throw ContractViolation("trng_generate: device is not a stochastic switch");
  if (!(opt.threshold_quantile > 0.0 && opt.threshold_quantile < 1.0))
    throw InvalidInput("trng_generate: threshold quantile must lie in (0, 1)");
  if (opt.pulse_voltage < device.v_set) throw InvalidInput("trng_generate: pulse below the set threshold");
  const double z = boost::math::quantile(boost::math::normal(), opt.threshold_quantile);
  const double threshold = device.tau_delay_median * std::exp(device.sigma_log * z);
  BitStream out;
  out.source = "stochastic-delay";
  out.bits.resize(n_bits);
  for (auto& b : out.bits) {
    const auto d = devices::stochastic_delay_sample(device, opt.pulse_voltage, rng);
    b = d->set_delay > threshold ? 1 : 0;
  }
  return opt.von_neumann ? von_neumann(out) : out;
}

inline BitStream bits_from_bytes(std::span<const std::uint8_t> bytes, std::string source) {
  BitStream out;
  out.source = std::move(source);
  out.bits.reserve(bytes.size() * 8);
  for (auto b : bytes)
    for (int k = 7; k >= 0; --k) out.bits.push_back(static_cast<std::uint8_t>((b >> k) & 1u));
  return out;
}

struct RandomnessReport {
  static constexpr double alpha = 0.01;
  double monobit = 0.0;
  double block_frequency = 0.0;
  double runs = 0.0;
  std::size_t block_size = 0;

  static bool pass(double p) { return p >= alpha; }
  bool all_pass() const { return pass(monobit) && pass(block_frequency) && pass(runs); }
};

/// Frequency, block-frequency and runs tests with the NIST SP 800-22
/// statistics. Block size is 128, or the whole stream when shorter.
inline RandomnessReport randomness_tests(const BitStream& stream) {
  const std::size_t n = stream.bits.size();
  if (n < 100) throw InvalidInput("randomness_tests: stream needs at least 100 bits");
  for (auto b : stream.bits)
    if (b > 1) throw InvalidInput("randomness_tests: bits must be 0 or 1");
  const double nd = static_cast<double>(n);
  RandomnessReport rep;

  double ones = 0.0;
  for (auto b : stream.bits) ones += b;
  const double s_obs = std::abs(2.0 * ones - nd) / std::sqrt(nd);
  rep.monobit = std::erfc(s_obs / std::numbers::sqrt2);

  const std::size_t m = std::min<std::size_t>(128, n);
  const std::size_t blocks = n / m;
  double chi2 = 0.0;
  for (std::size_t b = 0; b < blocks; ++b) {
    double c = 0.0;
    for (std::size_t k = 0; k < m; ++k) c += stream.bits[b * m + k];
    const double pi = c / static_cast<double>(m) - 0.5;
    chi2 += pi * pi;
  }
  chi2 *= 4.0 * static_cast<double>(m);
  rep.block_size = m;
  rep.block_frequency = boost::math::gamma_q(static_cast<double>(blocks) / 2.0, chi2 / 2.0);

  const double pi = ones / nd;
  if (std::abs(pi - 0.5) >= 2.0 / std::sqrt(nd)) {
    rep.runs = 0.0;  // frequency prerequisite failed
  } else {
    double v = 1.0;
    for (std::size_t k = 0; k + 1 < n; ++k) v += stream.bits[k] != stream.bits[k + 1] ? 1.0 : 0.0;
    const double num = std::abs(v - 2.0 * nd * pi * (1.0 - pi));
    rep.runs = std::erfc(num / (2.0 * std::sqrt(2.0 * nd) * pi * (1.0 - pi)));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Crossbar PUF read through sneak paths.

struct CrossbarPUF {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Eigen::MatrixXd g;  // S
  double read_noise_sigma = 0.01;

  void validate() const {
    if (rows == 0 || cols == 0) throw InvalidInput("CrossbarPUF: empty array");
    if (static_cast<std::size_t>(g.rows()) != rows || static_cast<std::size_t>(g.cols()) != cols)
      throw InvalidInput("CrossbarPUF: conductance matrix has wrong shape");
    for (Eigen::Index i = 0; i < g.size(); ++i)
      if (!(g.data()[i] > 0.0) || !std::isfinite(g.data()[i]))
        throw InvalidInput("CrossbarPUF: conductances must be positive and finite");
    if (!(read_noise_sigma >= 0.0)) throw InvalidInput("CrossbarPUF: read noise must be non-negative");
  }
};

struct PufDesign {
  std::size_t rows = 16;
  std::size_t cols = 16;
  // One-time random programming into LRS or HRS, then lognormal spread.
  double g_lrs = 1e-3;
  double g_hrs = 1e-4;
  double lrs_fraction = 0.5;
  double sigma_log = 0.1;
  double read_noise_sigma = 0.01;
};

inline CrossbarPUF make_crossbar_puf(const PufDesign& d, Rng& rng) {
  if (!(d.g_lrs > 0.0) || !(d.g_hrs > 0.0)) throw InvalidInput("make_crossbar_puf: conductances must be positive");
  if (!(d.lrs_fraction >= 0.0 && d.lrs_fraction <= 1.0)) throw InvalidInput("make_crossbar_puf: bad LRS fraction");
  CrossbarPUF puf;
  puf.rows = d.rows;
  puf.cols = d.cols;
  puf.read_noise_sigma = d.read_noise_sigma;
  puf.g.resize(static_cast<Eigen::Index>(d.rows), static_cast<Eigen::Index>(d.cols));
  for (std::size_t r = 0; r < d.rows; ++r)
    for (std::size_t c = 0; c < d.cols; ++c) {
      const double base = rng.uniform() < d.lrs_fraction ? d.g_lrs : d.g_hrs;
      puf.g(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rng.lognormal_median(base, d.sigma_log);
    }
  puf.validate();
  return puf;
}

struct PufChallenge {
  std::size_t row = 0;
  std::size_t col = 0;
  double v_c = 0.2;
};

/// Noise-free current into column `col` with row `row` at V_C, column `col`
/// grounded and every other line floating.
inline double puf_current(const CrossbarPUF& puf, const PufChallenge& ch) {
  puf.validate();
  if (ch.row >= puf.rows || ch.col >= puf.cols) throw InvalidInput("puf_current: challenge outside the array");
  if (!(ch.v_c > 0.0) || !std::isfinite(ch.v_c)) throw InvalidInput("puf_current: V_C must be positive");
  const std::size_t nr = puf.rows, nc = puf.cols;
  const std::size_t n = (nr - 1) + (nc - 1);
  // Floating rows first, then floating columns; -1 marks a biased line.
  auto row_node = [&](std::size_t r) -> long {
    return r == ch.row ? -1 : static_cast<long>(r < ch.row ? r : r - 1);
  };
  auto col_node = [&](std::size_t c) -> long {
    return c == ch.col ? -1 : static_cast<long>((nr - 1) + (c < ch.col ? c : c - 1));
  };
  Eigen::VectorXd v_row = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nr));
  v_row(static_cast<Eigen::Index>(ch.row)) = ch.v_c;
  if (n > 0) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < nr; ++r)
      for (std::size_t c = 0; c < nc; ++c) {
        const double g = puf.g(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        const long i = row_node(r), j = col_node(c);
        if (i >= 0) a(i, i) += g;
        if (j >= 0) a(j, j) += g;
        if (i >= 0 && j >= 0) {
          a(i, j) -= g;
          a(j, i) -= g;
        } else if (j >= 0 && r == ch.row) {
          b(j) += g * ch.v_c;
        }
      }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success) throw TopologyError("puf_current: singular nodal system");
    const Eigen::VectorXd x = ldlt.solve(b);
    if (!x.allFinite()) throw TopologyError("puf_current: singular nodal system");
    for (std::size_t r = 0; r < nr; ++r)
      if (r != ch.row) v_row(static_cast<Eigen::Index>(r)) = x(row_node(r));
  }
  double i_out = 0.0;
  for (std::size_t r = 0; r < nr; ++r)
    i_out += puf.g(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(ch.col)) * v_row(static_cast<Eigen::Index>(r));
  return i_out;
}

struct PufResponse {
  double current = 0.0;
  std::uint8_t bit = 0;
};

/// Reads every challenge once (multiplicative Gaussian read noise when rng
/// is given) and thresholds at the median current of the set.
inline std::vector<PufResponse> puf_responses(const CrossbarPUF& puf, std::span<const PufChallenge> challenges,
                                              Rng* rng) {
  if (challenges.empty()) throw InvalidInput("puf_responses: empty challenge set");
  std::vector<PufResponse> out(challenges.size());
  for (std::size_t k = 0; k < challenges.size(); ++k) {
    double i = puf_current(puf, challenges[k]);
    if (rng) i *= 1.0 + puf.read_noise_sigma * rng->normal();
    out[k].current = i;
  }
  std::vector<double> cur(out.size());
  for (std::size_t k = 0; k < out.size(); ++k) cur[k] = out[k].current;
  const double med = median(cur);
  for (auto& r : out) r.bit = r.current >= med ? 1 : 0;
  return out;
}

/// Single challenge against a reference set that fixes the threshold.
inline PufResponse puf_response(const CrossbarPUF& puf, const PufChallenge& ch, std::span<const PufChallenge> set,
                                Rng* rng) {
  std::vector<double> cur;
  cur.reserve(set.size());
  for (const auto& c : set) cur.push_back(puf_current(puf, c));
  PufResponse r;
  r.current = puf_current(puf, ch);
  if (rng) r.current *= 1.0 + puf.read_noise_sigma * rng->normal();
  r.bit = r.current >= median(cur) ? 1 : 0;
  return r;
}

/// All (row, col) pairs in row-major order, cycled up to n challenges.
inline std::vector<PufChallenge> puf_challenge_set(const CrossbarPUF& puf, std::size_t n, double v_c = 0.2) {
  std::vector<PufChallenge> out(n);
  const std::size_t cells = puf.rows * puf.cols;
  for (std::size_t k = 0; k < n; ++k) out[k] = {(k % cells) / puf.cols, k % puf.cols, v_c};
  return out;
}

struct PufStudy {
  double inter_hd = 0.0;  // mean fractional distance between device pairs
  double intra_hd = 0.0;  // mean fractional distance between two reads of one device
  std::size_t devices = 0;
  std::size_t challenges = 0;
};

inline PufStudy puf_study(const PufDesign& design, std::size_t n_devices, std::size_t n_challenges,
                          std::uint64_t seed) {
  if (n_devices < 2 || n_challenges == 0) throw InvalidInput("puf_study: need >= 2 devices and >= 1 challenge");
  std::vector<std::vector<std::uint8_t>> first(n_devices), second(n_devices);
  const Rng root(seed);
  parallel_for(n_devices, [&](std::size_t d) {
    Rng fab = root.split(0).split(d);
    Rng noise = root.split(1).split(d);
    const CrossbarPUF puf = make_crossbar_puf(design, fab);
    const auto set = puf_challenge_set(puf, n_challenges);
    for (auto* dst : {&first[d], &second[d]}) {
      const auto resp = puf_responses(puf, set, &noise);
      dst->resize(resp.size());
      for (std::size_t k = 0; k < resp.size(); ++k) (*dst)[k] = resp[k].bit;
    }
  });
  auto hd = [&](const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
    std::size_t diff = 0;
    for (std::size_t k = 0; k < a.size(); ++k) diff += a[k] != b[k];
    return static_cast<double>(diff) / static_cast<double>(a.size());
  };
  PufStudy s;
  s.devices = n_devices;
  s.challenges = n_challenges;
  double inter = 0.0, intra = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < n_devices; ++a) {
    intra += hd(first[a], second[a]);
    for (std::size_t b = a + 1; b < n_devices; ++b, ++pairs) inter += hd(first[a], first[b]);
  }
  s.inter_hd = inter / static_cast<double>(pairs);
  s.intra_hd = intra / static_cast<double>(n_devices);
  return s;
}

// ---------------------------------------------------------------------------
// Photoelectrochemical hash.

struct PhotoHashParams {
  double i0_a = 1e-6;  // A
  double i0_c = 4e-7;  // A
  double k_a = 3.0;
  double k_c = 1.0;
  double k_q = 2.0;
  double t0 = 0.05;      // s
  double window = 1e-3;  // s per flux step
  double readout_resolution = 1e-12;  // A per count of the current readout
  double alpha = 1e4;    // m^-1
  double n_d = 1e24;     // m^-3
  double u = 0.5;        // V
  double v_fb = -0.2;    // V
  double eps = 10.0;
  double eps0 = 8.8541878128e-12;
  double e = 1.602176634e-19;

  void validate() const {
    if (!(t0 > 0.0)) throw InvalidInput("PhotoHashParams: t0 must be positive");
    if (!(k_a >= 0.0) || !(k_c >= 0.0) || !(k_q >= 0.0)) throw InvalidInput("PhotoHashParams: k's must be >= 0");
    if (!(n_d > 0.0)) throw InvalidInput("PhotoHashParams: N_D must be positive");
    if (!(window > 0.0)) throw InvalidInput("PhotoHashParams: window must be positive");
    if (!(readout_resolution > 0.0)) throw InvalidInput("PhotoHashParams: readout resolution must be positive");
    for (double v : {i0_a, i0_c, alpha, u, v_fb, eps, eps0, e})
      if (!std::isfinite(v)) throw InvalidInput("PhotoHashParams: non-finite parameter");
  }
};

/// Depletion-layer saturation photocurrent i0 = alpha phi sqrt(2 e eps eps0 (U - V_FB) / N_D).
inline double saturation_current(const PhotoHashParams& p, double phi) {
  p.validate();
  if (p.u < p.v_fb) throw InvalidInput("saturation_current: require U >= V_FB");
  return p.alpha * phi * std::sqrt(2.0 * p.e * p.eps * p.eps0 * (p.u - p.v_fb) / p.n_d);
}

/// Memoryless response to a flux level.
inline double photocurrent(const PhotoHashParams& p, double phi) {
  return p.i0_a * (1.0 - std::exp(-p.k_a * phi)) - p.i0_c * (1.0 - std::exp(-p.k_c * phi));
}

/// Running-window integral of exp(-k_q phi(t')) over [t - t0, t] for a
/// piecewise-constant flux, fluxes[k] held on [k w, (k+1) w). Dark (phi = 0)
/// before t = 0.
inline double memory_integral(const PhotoHashParams& p, std::span<const double> fluxes, double t) {
  if (p.k_q == 0.0) return p.t0;  // integrand is identically 1
  const double lo = t - p.t0;
  double acc = 0.0;
  if (lo < 0.0) acc += std::min(-lo, p.t0);
  const double w = p.window;
  const auto first = static_cast<long>(std::floor(std::max(lo, 0.0) / w));
  for (long k = std::max(first, 0L); k < static_cast<long>(fluxes.size()); ++k) {
    const double a = std::max(lo, static_cast<double>(k) * w);
    const double b = std::min(t, static_cast<double>(k + 1) * w);
    if (b <= a) {
      if (static_cast<double>(k) * w >= t) break;
      continue;
    }
    acc += (b - a) * std::exp(-p.k_q * fluxes[static_cast<std::size_t>(k)]);
  }
  return acc;
}

/// Response with fading memory, evaluated at time t inside or at the end of
/// the last supplied step.
inline double photocurrent_with_memory(const PhotoHashParams& p, std::span<const double> fluxes, double t) {
  if (fluxes.empty()) return 0.0;
  const auto k = std::min(fluxes.size() - 1, static_cast<std::size_t>(std::max(0.0, std::ceil(t / p.window) - 1.0)));
  const double phi = fluxes[k];
  return (p.i0_a * (1.0 - memory_integral(p, fluxes, t))) * (1.0 - std::exp(-p.k_a * phi)) -
         p.i0_c * (1.0 - std::exp(-p.k_c * phi));
}

inline constexpr std::size_t kDigestBits = 256;

namespace detail {

// Low byte of the digitised current, fed back into the next flux level so
// that every later step depends on the whole prefix.
inline unsigned feedback_digit(double current, double resolution) {
  return static_cast<unsigned>(std::fmod(std::floor(std::abs(current) / resolution), 256.0));
}

template <typename Response>
std::array<std::uint8_t, kDigestBits / 8> hash_core(const PhotoHashParams& p, std::span<const std::uint8_t> message,
                                                    Response&& response) {
  std::array<std::uint8_t, kDigestBits / 8> digest{};
  std::vector<double> fluxes;
  std::vector<double> samples;
  samples.reserve(kDigestBits);
  if (message.empty()) {
    // zero flux throughout
    fluxes.assign(kDigestBits, 0.0);
    for (std::size_t k = 0; k < kDigestBits; ++k)
      samples.push_back(response(std::span<const double>(fluxes.data(), k + 1), p.window * static_cast<double>(k + 1)));
  } else {
    fluxes.reserve(message.size() + kDigestBits);
    unsigned fb = 0;
    auto push = [&](unsigned level) {
      fluxes.push_back(static_cast<double>(level + 1) / 256.0);
      const double i = response(std::span<const double>(fluxes), p.window * static_cast<double>(fluxes.size()));
      fb = feedback_digit(i, p.readout_resolution);
      return i;
    };
    for (auto b : message) push((b + fb) & 0xffu);
    for (std::size_t k = 0; k < kDigestBits; ++k) samples.push_back(push(fb));
  }
  const double med = median(samples);
  for (std::size_t k = 0; k < kDigestBits; ++k)
    if (samples[k] > med) digest[k / 8] |= static_cast<std::uint8_t>(0x80u >> (k % 8));
  return digest;
}

}  // namespace detail

/// Message bytes drive flux steps (b + 1)/256 one window each, chained
/// through the sampled photocurrent; 256 further self-driven steps are
/// sampled and thresholded at their median (equal-to-median is 0).
inline std::array<std::uint8_t, kDigestBits / 8> photo_hash(const PhotoHashParams& p,
                                                            std::span<const std::uint8_t> message) {
  p.validate();
  return detail::hash_core(p, message, [&](std::span<const double> fl, double t) {
    return photocurrent_with_memory(p, fl, t);
  });
}

/// Same digest pipeline driven by the memoryless response.
inline std::array<std::uint8_t, kDigestBits / 8> photo_hash_memoryless(const PhotoHashParams& p,
                                                                       std::span<const std::uint8_t> message) {
  p.validate();
  return detail::hash_core(p, message, [&](std::span<const double> fl, double) {
    return photocurrent(p, fl.back());
  });
}

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 0xf]);
  }
  return s;
}

inline std::size_t hamming_bits(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) throw InvalidInput("hamming_bits: length mismatch");
  std::size_t d = 0;
  for (std::size_t k = 0; k < a.size(); ++k) d += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(a[k] ^ b[k])));
  return d;
}

}  // namespace neuromime::security
