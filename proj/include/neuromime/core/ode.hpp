#pragma once

#include <array>
#include <cstddef>

namespace neuromime {

// Fixed-step classical Runge-Kutta for small fixed-size systems.
// `f(t, y)` returns dy/dt as the same array type.
template <std::size_t N, typename F>
std::array<double, N> rk4_step(F&& f, double t, const std::array<double, N>& y, double dt) {
  auto axpy = [](const std::array<double, N>& a, double s, const std::array<double, N>& b) {
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = a[i] + s * b[i];
    return out;
  };
  const auto k1 = f(t, y);
  const auto k2 = f(t + 0.5 * dt, axpy(y, 0.5 * dt, k1));
  const auto k3 = f(t + 0.5 * dt, axpy(y, 0.5 * dt, k2));
  const auto k4 = f(t + dt, axpy(y, dt, k3));
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i)
    out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

template <typename F>
double rk4_step_scalar(F&& f, double t, double y, double dt) {
  const double k1 = f(t, y);
  const double k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1);
  const double k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2);
  const double k4 = f(t + dt, y + dt * k3);
  return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace neuromime
