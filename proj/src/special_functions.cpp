// SPDX-License-Identifier: Apache-2.0
#include "obd/special_functions.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "obd/error.hpp"

namespace obd {
namespace {

constexpr double kTiny = 1e-300;
constexpr double kEps = 1e-16;
constexpr int kMaxIterations = 100000;

// Continued fraction for I_x(a,b) * a * B(a,b) / (x^a (1-x)^b).
double beta_continued_fraction(double x, double a, double b) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) return h;
  }
  throw Error(ErrorKind::kDomainError, "incomplete beta continued fraction did not converge");
}

// x^a (1-x)^b / (a B(a,b)), evaluated in log space.
double front_factor(double x, double a, double b) {
  const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  return std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta) / a;
}

}  // namespace

double regularized_incomplete_beta(double x, double a, double b) {
  if (!(x >= 0.0 && x <= 1.0) || !(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw Error(ErrorKind::kDomainError, "I_x(a,b) requires x in [0,1] and a,b > 0 (x=" + std::to_string(x) +
                                             ", a=" + std::to_string(a) + ", b=" + std::to_string(b) + ")");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  if (a == b && x == 0.5) return 0.5;
  if (a == 1.0) return -std::expm1(b * std::log1p(-x));
  if (b == 1.0) return std::pow(x, a);

  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front_factor(x, a, b) * beta_continued_fraction(x, a, b);
  }
  return 1.0 - front_factor(1.0 - x, b, a) * beta_continued_fraction(1.0 - x, b, a);
}

}  // namespace obd
