// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace obd {

/// Regularized incomplete beta I_x(a, b), the Beta(a, b) CDF at x.
///
/// Evaluated by the continued-fraction expansion with modified Lentz
/// iteration, switching to I_x(a,b) = 1 - I_{1-x}(b,a) on the side where the
/// fraction converges fastest. Absolute error is below 1e-12 for the
/// parameter ranges dose-finding produces (a, b up to a few thousand, and
/// down to the 1e-6 pseudo-counts of a Haldane-style prior).
///
/// Throws Error(kDomainError) unless 0 <= x <= 1 and a, b > 0.
double regularized_incomplete_beta(double x, double a, double b);

}  // namespace obd
