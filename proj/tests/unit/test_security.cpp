#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include "../common/oracles.hpp"
#include "neuromime/security.hpp"

using namespace neuromime;
using namespace neuromime::security;
using Catch::Approx;

namespace {

TimeSeries tone(const ChaoticChannel& ch, std::size_t n, double f) {
  TimeSeries raw;
  raw.dt = ch.dt;
  raw.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) raw.samples[k] = std::sin(2 * std::numbers::pi * f * raw.time(k));
  return scale_message(ch, raw);
}

Image random_image(std::size_t w, std::size_t h, Rng& rng) {
  Image img(w, h);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

double byte_corr(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ma += a[k];
    mb += b[k];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    sab += (a[k] - ma) * (b[k] - mb);
    saa += (a[k] - ma) * (a[k] - ma);
    sbb += (b[k] - mb) * (b[k] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("masking: zero message leaves the carrier") {
  const ChaoticChannel ch;
  TimeSeries zero;
  zero.dt = ch.dt;
  zero.samples.assign(5000, 0.0);
  const auto s = mask_encrypt(ch, zero);
  const auto c = chaos_carrier(ch, 5000);
  CHECK(s.samples == c.samples);
}

TEST_CASE("masking is additive") {
  const ChaoticChannel ch;
  const auto m = tone(ch, 5000, 0.0025);
  const auto s = mask_encrypt(ch, m);
  const auto c = chaos_carrier(ch, 5000);
  for (std::size_t k = 0; k < s.size(); ++k) REQUIRE(s.samples[k] - c.samples[k] == Approx(m.samples[k]).margin(1e-15));
  const double ratio = rms(m.samples) / rms(c.samples);
  CHECK(ratio == Approx(ch.mask_gain).epsilon(1e-12));
}

TEST_CASE("the carrier buries a narrowband message") {
  ChaoticChannel ch;
  ch.mask_gain = 0.03;
  const std::size_t n = 100001;
  const double f = 0.0025;
  const auto m = tone(ch, n, f);
  const auto c = chaos_carrier(ch, n);
  const auto s = mask_encrypt(ch, m);
  const double pm = oracle::power_at(m.samples, m.dt, f), pc = oracle::power_at(c.samples, c.dt, f);
  CHECK(pm / pc < 0.1);
  // no line stands out of the neighbouring band
  double band = 0.0;
  int count = 0;
  for (double g = 0.5 * f; g <= 1.5 * f; g += 0.05 * f)
    if (std::abs(g - f) > 0.1 * f) {
      band += oracle::power_at(s.samples, s.dt, g);
      ++count;
    }
  CHECK(oracle::power_at(s.samples, s.dt, f) < 3.0 * band / count);
}

TEST_CASE("matched receiver recovers, mismatched does not") {
  ChaoticChannel ch;
  const auto m = tone(ch, 200001, 0.0025);
  const auto s = mask_encrypt(ch, m);
  CHECK(*mask_decrypt(ch, s, &m).correlation >= 0.95);
  for (double f : {1.05, 0.95}) {
    auto bad = ch;
    bad.rx.alpha = ch.tx.alpha * f;
    CHECK(std::abs(*mask_decrypt(bad, s, &m).correlation) < 0.5);
  }
  CHECK_FALSE(mask_decrypt(ch, s).correlation.has_value());
}

TEST_CASE("channel noise has the requested power") {
  TimeSeries s;
  s.dt = 0.01;
  s.samples.assign(200000, 1.0);
  Rng rng(3);
  const auto noisy = add_channel_noise(s, 20.0, rng);
  std::vector<double> diff(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) diff[k] = noisy.samples[k] - s.samples[k];
  CHECK(rms(diff) == Approx(0.1).epsilon(0.01));
}

TEST_CASE("scrambler round trip on random images") {
  Rng rng(5);
  ScrambleKey key;
  key.permutation_seed = 77;
  for (int trial = 0; trial < 30; ++trial) {
    const auto w = 1 + static_cast<std::size_t>(rng.below(40));
    const auto h = 1 + static_cast<std::size_t>(rng.below(40));
    const auto img = random_image(w, h, rng);
    REQUIRE(descramble_image(scramble_image(img, key), key) == img);
  }
}

TEST_CASE("a single pixel is only XORed") {
  ScrambleKey key;
  Image one(1, 1, 200);
  const auto ks = keystream(key.keystream, 1);
  CHECK(scramble_image(one, key).pixels[0] == (200 ^ ks[0]));
  CHECK_THROWS_AS(scramble_image(Image{}, key), InvalidInput);
}

TEST_CASE("scrambling is the documented composition") {
  // 2x3, odd row reversed, odd column reversed, identity key stream removed by XOR
  ScrambleKey key;
  Image img(3, 2);
  img.pixels = {1, 2, 3, 4, 5, 6};
  const auto out = scramble_image(img, key);
  const auto ks = keystream(key.keystream, 6);
  const auto perm = column_permutation(3, key.permutation_seed);
  // after row reversal: [1 2 3; 6 5 4]; after odd-column reversal: [1 5 3; 6 2 4]
  const Image pre = [&] {
    Image a(3, 2);
    a.pixels = {1, 5, 3, 6, 2, 4};
    return a;
  }();
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 3; ++c) CHECK(out.at(r, c) == (pre.at(r, perm[c]) ^ ks[r * 3 + c]));
  std::set<std::size_t> seen(perm.begin(), perm.end());
  CHECK(seen.size() == 3);
}

TEST_CASE("scrambled outputs of different images look alike and uniform") {
  ScrambleKey key;
  const std::size_t n = 128;
  Image grad(n, n), rings(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      grad.at(r, c) = static_cast<std::uint8_t>(2 * c);
      rings.at(r, c) = static_cast<std::uint8_t>(127.5 + 127.5 * std::cos(std::hypot(r - 63.5, c - 63.5) * 0.4));
    }
  const auto a = scramble_image(grad, key), b = scramble_image(rings, key);
  CHECK(std::abs(byte_corr(a.pixels, b.pixels)) < 0.05);
  CHECK(histogram_uniformity(a.pixels).p_value >= 0.01);
  CHECK(histogram_uniformity(b.pixels).p_value >= 0.01);
}

TEST_CASE("keystream properties") {
  KeystreamParams p;
  SECTION("deterministic") { CHECK(keystream(p, 1000) == keystream(p, 1000)); }
  SECTION("tiny initial difference decorrelates the stream") {
    auto q = p;
    q.init[0] += 1e-8;
    const auto a = keystream(p, 20000), b = keystream(q, 20000);
    std::size_t diff = 0;
    for (std::size_t k = 0; k < a.size(); ++k) diff += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(a[k] ^ b[k])));
    CHECK(static_cast<double>(diff) / (8.0 * static_cast<double>(a.size())) == Approx(0.5).margin(0.02));
  }
  SECTION("byte histogram is flat") {
    const auto ks = keystream(p, 1000000);
    std::array<double, 256> counts{};
    for (auto b : ks) counts[b] += 1.0;
    const double e = 1e6 / 256.0, sigma = std::sqrt(1e6 * (1.0 / 256.0) * (255.0 / 256.0));
    for (double c : counts) CHECK(std::abs(c - e) < 5.0 * sigma);
  }
  SECTION("bad quantiser range") {
    p.x_max = p.x_min;
    CHECK_THROWS_AS(keystream(p, 10), InvalidInput);
  }
}

TEST_CASE("randomness tests on known streams") {
  BitStream zeros{std::vector<std::uint8_t>(1000, 0), "zeros"};
  const auto z = randomness_tests(zeros);
  CHECK(z.monobit < 1e-10);
  CHECK_FALSE(z.all_pass());

  BitStream alt;
  for (int k = 0; k < 1000; ++k) alt.bits.push_back(static_cast<std::uint8_t>(k % 2));
  const auto a = randomness_tests(alt);
  CHECK(a.monobit == 1.0);
  CHECK(a.runs < 0.01);

  // NIST SP 800-22 worked example for the frequency test: n = 100
  const std::string eps =
      "1100100100001111110110101010001000100001011010001100001000110100110001001100011001100010100010111000";
  BitStream ex;
  for (char c : eps) ex.bits.push_back(static_cast<std::uint8_t>(c - '0'));
  const auto r = randomness_tests(ex);
  CHECK(r.monobit == Approx(0.109599).margin(1e-6));
  CHECK(r.runs == Approx(0.500798).margin(1e-6));

  BitStream tiny{std::vector<std::uint8_t>(50, 1), "tiny"};
  CHECK_THROWS_AS(randomness_tests(tiny), InvalidInput);
}

TEST_CASE("TRNG streams") {
  const auto dev = devices::MemristorParams::stochastic_switch();
  SECTION("fair threshold passes") {
    Rng rng(1);
    CHECK(randomness_tests(trng_generate(dev, 100000, rng)).all_pass());
  }
  SECTION("same seed, same bits") {
    Rng a(9), b(9);
    CHECK(trng_generate(dev, 5000, a) == trng_generate(dev, 5000, b));
  }
  SECTION("designed bias fails and the corrector restores it") {
    Rng rng(2);
    TrngOptions opt;
    opt.threshold_quantile = 0.3;  // ones with probability 0.7
    const auto biased = trng_generate(dev, 100000, rng, opt);
    CHECK(randomness_tests(biased).monobit < 0.01);
    const auto fixed = von_neumann(biased);
    CHECK(randomness_tests(fixed).monobit >= 0.01);
    const double expected = 2.0 * 0.7 * 0.3 * 100000 / 2.0;
    CHECK(static_cast<double>(fixed.size()) == Approx(expected).epsilon(0.03));
  }
  SECTION("argument checks") {
    Rng rng(1);
    CHECK_THROWS_AS(trng_generate(dev, 0, rng), InvalidInput);
    CHECK_THROWS_AS(trng_generate(devices::MemristorParams::linear_drift(), 10, rng), ContractViolation);
  }
}

TEST_CASE("von Neumann pairs") {
  BitStream in;
  in.bits = {0, 1, 1, 0, 1, 1, 0, 0, 1, 0, 1};
  CHECK(von_neumann(in).bits == std::vector<std::uint8_t>{0, 1, 1});
}

TEST_CASE("crossbar: hand-solved 2x2") {
  CrossbarPUF puf;
  puf.rows = puf.cols = 2;
  const double g = 2e-4, v = 0.3;
  puf.g = Eigen::MatrixXd::Constant(2, 2, g);
  // direct cell plus one three-cell sneak chain of g/3
  const double expected = g * v + g / 3.0 * v;
  CHECK(std::abs(puf_current(puf, {0, 1, v}) / expected - 1.0) < 1e-9);
  CHECK(std::abs(puf_current(puf, {1, 0, v}) / expected - 1.0) < 1e-9);
}

TEST_CASE("crossbar: isolated cell has no sneak path") {
  CrossbarPUF puf;
  puf.rows = puf.cols = 4;
  puf.g = Eigen::MatrixXd::Constant(4, 4, 1e-15);
  puf.g(2, 1) = 1e-3;
  CHECK(puf_current(puf, {2, 1, 0.2}) == Approx(1e-3 * 0.2).epsilon(1e-3));
}

TEST_CASE("crossbar solver matches the full nodal oracle") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    CrossbarPUF puf;
    puf.rows = 1 + static_cast<std::size_t>(rng.below(4));
    puf.cols = 1 + static_cast<std::size_t>(rng.below(4));
    puf.g.resize(static_cast<Eigen::Index>(puf.rows), static_cast<Eigen::Index>(puf.cols));
    for (Eigen::Index k = 0; k < puf.g.size(); ++k) puf.g.data()[k] = rng.lognormal_median(1e-4, 1.0);
    const auto r = static_cast<std::size_t>(rng.below(puf.rows));
    const auto c = static_cast<std::size_t>(rng.below(puf.cols));
    const double got = puf_current(puf, {r, c, 0.2});
    const double want = oracle::crossbar_current(puf.g, r, c, 0.2);
    REQUIRE(std::abs(got / want - 1.0) < 1e-9);
  }
}

TEST_CASE("crossbar input checks") {
  CrossbarPUF puf;
  puf.rows = puf.cols = 2;
  puf.g = Eigen::MatrixXd::Constant(2, 2, 1e-4);
  CHECK_THROWS_AS(puf_current(puf, {2, 0, 0.2}), InvalidInput);
  CHECK_THROWS_AS(puf_current(puf, {0, 0, 0.0}), InvalidInput);
  puf.g(0, 0) = 0.0;
  CHECK_THROWS_AS(puf_current(puf, {0, 0, 0.2}), InvalidInput);
}

TEST_CASE("PUF responses are balanced and device-specific") {
  const PufDesign d;
  Rng fab(4);
  const auto puf = make_crossbar_puf(d, fab);
  const auto set = puf_challenge_set(puf, 256);
  const auto resp = puf_responses(puf, set, nullptr);
  int ones = 0;
  for (const auto& r : resp) ones += r.bit;
  CHECK(ones == 128);
  CHECK(puf_response(puf, set[5], set, nullptr).bit == resp[5].bit);

  const auto study = puf_study(d, 30, 256, 8);
  CHECK(study.inter_hd > 0.4);
  CHECK(study.inter_hd < 0.6);
  CHECK(study.intra_hd < 0.05);
}

TEST_CASE("photo hash") {
  const PhotoHashParams p;
  const std::string text = "the quick brown fox";
  const std::vector<std::uint8_t> msg(text.begin(), text.end());
  SECTION("deterministic, 64 hex characters") {
    CHECK(photo_hash(p, msg) == photo_hash(p, msg));
    const auto hex = to_hex(photo_hash(p, msg));
    CHECK(hex.size() == 64);
    CHECK(hex.find_first_not_of("0123456789abcdef") == std::string::npos);
  }
  SECTION("empty message is all zeros by the tie rule") {
    const auto d = photo_hash(p, std::span<const std::uint8_t>{});
    CHECK(std::all_of(d.begin(), d.end(), [](auto b) { return b == 0; }));
  }
  SECTION("without quenching the memory term is a constant factor") {
    auto q = p;
    q.k_q = 0.0;
    auto inst = q;
    inst.i0_a = q.i0_a * (1.0 - q.t0);
    CHECK(photo_hash(q, msg) == photo_hash_memoryless(inst, msg));
    const std::vector<double> fl{0.2, 0.7, 0.4};
    CHECK(photocurrent_with_memory(q, fl, 3 * q.window) == Approx(photocurrent(inst, 0.4)).epsilon(1e-14));
  }
  SECTION("single-bit flips change about half the digest") {
    Rng rng(6);
    std::vector<std::uint8_t> m(64);
    for (auto& b : m) b = static_cast<std::uint8_t>(rng.below(256));
    const auto base = photo_hash(p, m);
    double total = 0.0;
    for (int k = 0; k < 50; ++k) {
      auto f = m;
      f[rng.below(64)] ^= static_cast<std::uint8_t>(1u << rng.below(8));
      total += static_cast<double>(hamming_bits(base, photo_hash(p, f))) / 256.0;
    }
    CHECK(total / 50 >= 0.3);
  }
  SECTION("memory window integral") {
    auto q = p;
    q.t0 = 2 * q.window;
    const std::vector<double> fl{1.0, 0.0};
    // [0, w) at flux 1, [w, 2w) dark
    CHECK(memory_integral(q, fl, 2 * q.window) == Approx(q.window * std::exp(-q.k_q) + q.window));
    // before t = 0 the window sees darkness
    CHECK(memory_integral(q, fl, q.window) == Approx(q.window + q.window * std::exp(-q.k_q)));
  }
  SECTION("saturation current") {
    const double i = saturation_current(p, 2.0);
    CHECK(i == Approx(p.alpha * 2.0 * std::sqrt(2 * p.e * p.eps * p.eps0 * (p.u - p.v_fb) / p.n_d)));
  }
}
