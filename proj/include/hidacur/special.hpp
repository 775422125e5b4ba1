/*
   Copyright 2026 The hidacur Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

// Upper incomplete gamma function Gamma(a, x) = int_x^inf y^(a-1) e^-y dy for
// real a in [-10, 10] (including zero and negative values) and x > 0.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "hidacur/error.hpp"

namespace hidacur {

inline constexpr double kGammaParamLimit = 10.0;

namespace detail {

inline constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

/// Legendre continued fraction (modified Lentz). Converges for every real a
/// and x > 0; fast once x >= max(1, a + 1).
inline double upper_gamma_continued_fraction(double a, double x)
{
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 100000; ++i) {
        const double an = -double(i) * (double(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) {
            d = tiny;
        }
        c = b + an / c;
        if (std::abs(c) < tiny) {
            c = tiny;
        }
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) {
            break;
        }
    }
    return std::exp(a * std::log(x) - x) * h;
}

/// Lower incomplete gamma by its power series, for a > 0.
inline double lower_gamma_series(double a, double x)
{
    double ap = a;
    double term = 1.0 / a;
    double sum = term;
    for (int n = 0; n < 100000; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-17) {
            break;
        }
    }
    return sum * std::exp(a * std::log(x) - x);
}

/// Gamma(a, x) for |a| <= 1/2 and small x, free of the 1/a cancellation in
/// Gamma(a) - gamma(a, x):
///   (Gamma(1+a) - 1)/a - (x^a - 1)/a - x^a sum_{k>=1} (-x)^k / (k! (a+k)).
inline double upper_gamma_small_a(double a, double x)
{
    const double lx = std::log(x);
    double g1;
    double xa_m1;
    if (a == 0.0) {
        g1 = -kEulerGamma;
        xa_m1 = lx;
    } else {
        g1 = boost::math::tgamma1pm1(a) / a;
        xa_m1 = std::expm1(a * lx) / a;
    }
    double term = 1.0;
    double sum = 0.0;
    for (int k = 1; k < 200; ++k) {
        term *= -x / double(k);
        const double add = term / (a + double(k));
        sum += add;
        if (std::abs(add) < 1e-17 * std::abs(sum)) {
            break;
        }
    }
    return g1 - xa_m1 - std::exp(a * lx) * sum;
}

} // namespace detail

/// Gamma(a, x) with relative error around 1e-13 on a in [-10, 10], x > 0.
///
/// Continued fraction for x >= max(1, a + 1); series for a > 1/2 below that;
/// a cancellation-free expansion for |a| <= 1/2; and for a < -1/2 the
/// downward recurrence Gamma(a, x) = (Gamma(a+1, x) - x^a e^-x) / a started
/// from the |a| <= 1/2 value.
inline double upper_incomplete_gamma(double a, double x)
{
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw DomainError("upper_incomplete_gamma: x must be positive and finite, got " + std::to_string(x));
    }
    if (!std::isfinite(a) || std::abs(a) > kGammaParamLimit) {
        throw UnsupportedParameter("upper_incomplete_gamma: a = " + std::to_string(a) + " outside [-10, 10]");
    }
    if (x >= std::max(1.0, a + 1.0)) {
        return detail::upper_gamma_continued_fraction(a, x);
    }
    if (a > 0.5) {
        return std::tgamma(a) - detail::lower_gamma_series(a, x);
    }
    if (a >= -0.5) {
        return detail::upper_gamma_small_a(a, x);
    }
    const int steps = int(std::ceil(-0.5 - a));
    double b = a + double(steps);
    double g = detail::upper_gamma_small_a(b, x);
    const double lx = std::log(x);
    for (int k = 0; k < steps; ++k) {
        b -= 1.0;
        g = (g - std::exp(b * lx - x)) / b;
    }
    return g;
}

/// int_0^T t^(-d/2) exp(-r^2 / (2t)) dt = 2^(d/2-1) r^(2-d) Gamma(d/2 - 1, r^2 / (2T)).
inline double singular_mass_closed(int d, double r, double T)
{
    if (d < 1) {
        throw DomainError("singular_mass_closed: d must be >= 1");
    }
    if (!(r > 0.0) || !std::isfinite(r)) {
        throw DomainError("singular_mass_closed: |x| must be positive (the identity fails at x = 0)");
    }
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw DomainError("singular_mass_closed: T must be positive");
    }
    const double a = 0.5 * double(d) - 1.0;
    if (a > kGammaParamLimit) {
        throw UnsupportedParameter("singular_mass_closed: d = " + std::to_string(d) + " exceeds supported range");
    }
    const double log_prefactor = a * std::numbers::ln2 - 2.0 * a * std::log(r);
    return std::exp(log_prefactor) * upper_incomplete_gamma(a, r * r / (2.0 * T));
}

} // namespace hidacur
