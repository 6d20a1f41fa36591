#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "neuromime/core/error.hpp"

namespace neuromime {

/// Uniformly sampled real signal.
struct TimeSeries {
  double dt = 1.0;
  std::vector<double> samples;

  TimeSeries() = default;
  TimeSeries(double step, std::vector<double> values)
      : dt(step), samples(std::move(values)) {}

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  double duration() const noexcept { return dt * static_cast<double>(samples.size()); }
  double time(std::size_t k) const noexcept { return dt * static_cast<double>(k); }
  double operator[](std::size_t k) const { return samples[k]; }
  double& operator[](std::size_t k) { return samples[k]; }

  void validate(const char* who) const {
    if (!(dt > 0.0) || !std::isfinite(dt))
      throw InvalidInput(std::string(who) + ": dt must be positive and finite");
    if (samples.size() < 2)
      throw InvalidInput(std::string(who) + ": series needs at least 2 samples");
  }
};

inline bool all_finite(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double v) { return std::isfinite(v); });
}

inline double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

inline double rms(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double acc = 0.0;
  for (double v : xs) acc += v * v;
  return std::sqrt(acc / static_cast<double>(xs.size()));
}

inline double peak_to_peak(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  return *hi - *lo;
}

/// Pearson correlation; 0 when either side is constant.
inline double pearson(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = std::min(a.size(), b.size());
  if (n < 2) return 0.0;
  const double ma = mean(a.first(n));
  const double mb = mean(b.first(n));
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double da = a[k] - ma;
    const double db = b[k] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

inline double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  const std::size_t mid = xs.size() / 2;
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
  const double upper = xs[mid];
  if (xs.size() % 2 == 1) return upper;
  const double lower = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t k = 0; k < n; ++k)
    out[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  return out;
}

inline std::vector<double> logspace(double lo, double hi, std::size_t n) {
  auto out = linspace(std::log(lo), std::log(hi), n);
  for (double& v : out) v = std::exp(v);
  return out;
}

}  // namespace neuromime
