#pragma once

// Reference computations used by the tests. These are written from the
// governing equations and deliberately share no code with the library.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// Dimensionless Chua system with the piecewise-linear diode.
struct Chua {
  double alpha = 9.0, beta = 14.286, m0 = -8.0 / 7.0, m1 = -5.0 / 7.0;

  std::array<double, 3> rhs(const std::array<double, 3>& s) const {
    const double x = s[0];
    const double g = m1 * x + 0.5 * (m0 - m1) * (std::fabs(x + 1.0) - std::fabs(x - 1.0));
    return {alpha * (s[1] - x - g), x - s[1] + s[2], -beta * s[1]};
  }

  std::array<double, 3> step(std::array<double, 3> s, double h) const {
    auto add = [](std::array<double, 3> a, const std::array<double, 3>& b, double k) {
      for (int i = 0; i < 3; ++i) a[i] += k * b[i];
      return a;
    };
    const auto k1 = rhs(s);
    const auto k2 = rhs(add(s, k1, h / 2));
    const auto k3 = rhs(add(s, k2, h / 2));
    const auto k4 = rhs(add(s, k3, h));
    for (int i = 0; i < 3; ++i) s[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    return s;
  }
};

// Largest exponent from two nearby trajectories, renormalising the
// separation back to d0 every `renorm` steps.
inline double benettin_lambda(const Chua& c, std::array<double, 3> a, double h, std::size_t transient,
                              std::size_t blocks, std::size_t renorm, double d0 = 1e-8) {
  for (std::size_t k = 0; k < transient; ++k) a = c.step(a, h);
  std::array<double, 3> b = a;
  b[0] += d0;
  double sum = 0.0;
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    for (std::size_t k = 0; k < renorm; ++k) {
      a = c.step(a, h);
      b = c.step(b, h);
    }
    double d = 0.0;
    for (int i = 0; i < 3; ++i) d += (b[i] - a[i]) * (b[i] - a[i]);
    d = std::sqrt(d);
    sum += std::log(d / d0);
    for (int i = 0; i < 3; ++i) b[i] = a[i] + (b[i] - a[i]) * d0 / d;
  }
  return sum / (static_cast<double>(blocks * renorm) * h);
}

// Crossbar current by a full nodal solve over all rows and columns, with
// the two biased lines imposed as fixed-potential equations.
inline double crossbar_current(const Eigen::MatrixXd& g, std::size_t row, std::size_t col, double v) {
  const auto nr = static_cast<Eigen::Index>(g.rows());
  const auto nc = static_cast<Eigen::Index>(g.cols());
  const Eigen::Index n = nr + nc;  // rows 0..nr-1, columns nr..n-1
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < nr; ++i)
    for (Eigen::Index j = 0; j < nc; ++j) {
      const double gij = g(i, j);
      a(i, i) += gij;
      a(nr + j, nr + j) += gij;
      a(i, nr + j) -= gij;
      a(nr + j, i) -= gij;
    }
  const auto r = static_cast<Eigen::Index>(row);
  const auto c = nr + static_cast<Eigen::Index>(col);
  a.row(r).setZero();
  a(r, r) = 1.0;
  rhs(r) = v;
  a.row(c).setZero();
  a(c, c) = 1.0;
  rhs(c) = 0.0;
  const Eigen::VectorXd u = a.fullPivLu().solve(rhs);
  // current leaving the grounded column into ground
  double i = 0.0;
  for (Eigen::Index k = 0; k < nr; ++k) i += g(k, static_cast<Eigen::Index>(col)) * (u(k) - u(c));
  return i;
}

// Periodogram value of x at frequency f (cycles per unit time), Hann window.
inline double power_at(const std::vector<double>& x, double dt, double f) {
  const std::size_t n = x.size();
  std::complex<double> acc{0.0, 0.0};
  const double pi = 3.14159265358979323846;
  for (std::size_t k = 0; k < n; ++k) {
    const double w = 0.5 - 0.5 * std::cos(2 * pi * static_cast<double>(k) / static_cast<double>(n - 1));
    acc += w * x[k] * std::polar(1.0, -2 * pi * f * dt * static_cast<double>(k));
  }
  return std::norm(acc);
}

inline double logistic_lambda_reference() { return std::log(2.0); }

}  // namespace oracle
