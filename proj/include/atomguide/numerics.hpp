#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <numbers>
#include <span>
#include <thread>
#include <vector>

#include "atomguide/errors.hpp"
#include "atomguide/linalg.hpp"

namespace atomguide::numerics {

/// Finite-difference weights for the `order`-th derivative at `x0` on the
/// stencil `x` (Fornberg's recursion; any spacing).
inline std::vector<double> fornberg_weights(double x0, std::span<const double> x, int order) {
  const int n = static_cast<int>(x.size()) - 1;
  std::vector<std::vector<double>> c(x.size(), std::vector<double>(order + 1, 0.0));
  double c1 = 1.0;
  double c4 = x[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    const int mn = std::min(i, order);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) w[i] = c[i][order];
  return w;
}

/// First derivative of sampled data on an arbitrary increasing grid using a
/// `points`-wide stencil: centered in the interior, one-sided at the ends.
/// points = 3 gives the second-order scheme; points = 5 the fourth-order one.
template <class T>
std::vector<T> derivative(std::span<const double> t, std::span<const T> f, int points = 3) {
  const std::size_t n = t.size();
  require(n == f.size(), "derivative: size mismatch");
  require(n >= static_cast<std::size_t>(points), "derivative: not enough samples for stencil");
  const std::size_t half = static_cast<std::size_t>(points / 2);
  std::vector<T> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t lo = i >= half ? i - half : 0;
    lo = std::min(lo, n - static_cast<std::size_t>(points));
    const auto w = fornberg_weights(t[i], t.subspan(lo, points), 1);
    // differences against f[i] so constant data gives exactly zero
    T acc = w[0] * (f[lo] - f[i]);
    for (int k = 1; k < points; ++k) acc = acc + w[k] * (f[lo + k] - f[i]);
    out[i] = acc;
  }
  return out;
}

/// Cumulative trapezoidal integral, starting from zero.
inline std::vector<double> cumulative_trapezoid(std::span<const double> t, std::span<const double> f) {
  std::vector<double> out(t.size(), 0.0);
  for (std::size_t i = 1; i < t.size(); ++i) out[i] = out[i - 1] + 0.5 * (f[i] + f[i - 1]) * (t[i] - t[i - 1]);
  return out;
}

/// Removes 2*pi jumps so consecutive samples differ by at most pi.
inline void unwrap(std::span<double> phase) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 1; i < phase.size(); ++i)
    phase[i] += two_pi * std::round((phase[i - 1] - phase[i]) / two_pi);
}

inline bool strictly_increasing(std::span<const double> t) {
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1])) return false;
  return true;
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = a;
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

/// Runs body(i) for i in [0, n) on up to `threads` workers. Each index is
/// visited exactly once, so results written per index are order-independent.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += threads) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace atomguide::numerics
