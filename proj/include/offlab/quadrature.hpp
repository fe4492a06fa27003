#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace offlab::quad {

struct Tolerance {
  double abs = 1e-12;
  double rel = 1e-10;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  std::size_t intervals = 0;
  std::size_t evaluations = 0;
  bool converged = false;
};

/// 15-point Kronrod rule with its embedded 7-point Gauss rule on [a, b].
/// Returns {integral, |K15 - G7|}.
std::pair<double, double> gauss_kronrod_15(const std::function<double(double)>& fn,
                                           double a, double b);

/// Globally adaptive Gauss-Kronrod integration over [a, b], in the manner of
/// QUADPACK's QAG: the interval with the largest error estimate is bisected
/// until the summed error meets max(abs, rel * |value|). Interior
/// breakpoints (ignored when outside (a, b)) seed the initial partition.
Result integrate(const std::function<double(double)>& fn, double a, double b,
                 Tolerance tol = {}, std::span<const double> breakpoints = {},
                 std::size_t max_intervals = 4000);

}  // namespace offlab::quad
