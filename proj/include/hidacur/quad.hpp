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

// Adaptive quadrature on (0, T] for integrands with an endpoint singularity
// at t = 0. Dyadic panels graded toward the origin are refined globally with
// a 21-point Gauss-Kronrod rule; the origin itself is never evaluated.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <queue>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "hidacur/error.hpp"

namespace hidacur {

template <class V>
struct BasicQuadResult {
    V value{};
    double abs_error_estimate = 0.0;
    std::size_t node_count = 0;
};

using QuadResult = BasicQuadResult<double>;

/// Declared behaviour of the integrand near t = 0:
/// |f(t)| <= M * t^exponent * exp(-damping / t).
struct Singularity {
    double exponent = 0.0;
    double damping = 0.0;
};

struct QuadOptions {
    double abs_tol = 1e-10;
    double rel_tol = 0.0;
    std::size_t max_evaluations = 1'000'000;
};

namespace detail {

// QUADPACK qk21 abscissae and weights; the 10-point Gauss nodes are the
// odd-indexed Kronrod nodes.
inline constexpr std::array<double, 11> kKronrodNodes = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};

inline constexpr std::array<double, 11> kKronrodWeights = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525685074, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};

inline constexpr std::array<double, 5> kGaussWeights = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

inline constexpr std::size_t kRuleNodes = 21;

template <class V>
inline std::array<double, 2> parts(const V& v)
{
    if constexpr (std::is_same_v<V, double>) {
        return {v, 0.0};
    } else {
        return {v.real(), v.imag()};
    }
}

template <class V>
inline bool finite_value(const V& v)
{
    auto p = parts(v);
    return std::isfinite(p[0]) && std::isfinite(p[1]);
}

template <class V>
struct Segment {
    double a = 0.0;
    double b = 0.0;
    V value{};
    double err = 0.0;
    bool at_roundoff = false;

    bool operator<(const Segment& o) const { return err < o.err; }
};

// QUADPACK error heuristic for one real part of a Kronrod/Gauss pair.
// `floor` receives the rounding floor that was applied.
inline double kronrod_error(double resk, double resg, double resabs, double resasc, double& floor)
{
    constexpr double eps = std::numeric_limits<double>::epsilon();
    constexpr double tiny = std::numeric_limits<double>::min();
    double err = std::abs(resk - resg);
    if (resasc != 0.0 && err != 0.0) {
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    }
    floor = 0.0;
    if (resabs > tiny / (50.0 * eps)) {
        floor = 50.0 * eps * resabs;
        err = std::max(floor, err);
    }
    return err;
}

/// Evaluates the Kronrod/Gauss pair on [a, b]. When `nodes` is non-null it
/// receives the integrand values and their abscissae.
template <class V, class F>
Segment<V> gauss_kronrod(F& f, double a, double b, std::array<V, kRuleNodes>* nodes = nullptr,
                         std::array<double, kRuleNodes>* abscissae = nullptr)
{
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    std::array<V, kRuleNodes> fv{};
    std::array<double, kRuleNodes> tv{};
    for (std::size_t j = 0; j < 10; ++j) {
        const double dx = half * kKronrodNodes[j];
        tv[2 * j] = center - dx;
        tv[2 * j + 1] = center + dx;
    }
    tv[20] = center;
    for (std::size_t j = 0; j < kRuleNodes; ++j) {
        fv[j] = f(tv[j]);
        if (!finite_value(fv[j])) {
            throw IntegrandFailure("integrand is not finite at t = " + std::to_string(tv[j]));
        }
    }

    V resk = fv[20] * kKronrodWeights[10];
    V resg{};
    for (std::size_t j = 0; j < 10; ++j) {
        const V s = fv[2 * j] + fv[2 * j + 1];
        resk += s * kKronrodWeights[j];
        if (j % 2 == 1) {
            resg += s * kGaussWeights[j / 2];
        }
    }
    const auto mean = parts(resk * 0.5);
    const auto k = parts(resk);
    const auto g = parts(resg);

    Segment<V> seg;
    seg.a = a;
    seg.b = b;
    seg.value = resk * half;
    std::array<double, 2> err{};
    std::array<double, 2> floor{};
    for (int p = 0; p < 2; ++p) {
        double resabs = kKronrodWeights[10] * std::abs(parts(fv[20])[p]);
        double resasc = kKronrodWeights[10] * std::abs(parts(fv[20])[p] - mean[p]);
        for (std::size_t j = 0; j < 10; ++j) {
            const double lo = parts(fv[2 * j])[p];
            const double hi = parts(fv[2 * j + 1])[p];
            resabs += kKronrodWeights[j] * (std::abs(lo) + std::abs(hi));
            resasc += kKronrodWeights[j] * (std::abs(lo - mean[p]) + std::abs(hi - mean[p]));
        }
        const double h = std::abs(half);
        err[p] = kronrod_error(k[p] * half, g[p] * half, resabs * h, resasc * h, floor[p]);
    }
    seg.err = std::hypot(err[0], err[1]);
    seg.at_roundoff = err[0] <= floor[0] && err[1] <= floor[1];
    if (nodes) {
        *nodes = fv;
    }
    if (abscissae) {
        *abscissae = tv;
    }
    return seg;
}

template <class V>
double magnitude(const V& v)
{
    auto p = parts(v);
    return std::hypot(p[0], p[1]);
}

template <class V>
double tolerance_for(const V& total, const QuadOptions& opts)
{
    return std::max(opts.abs_tol, opts.rel_tol * magnitude(total));
}

/// Global adaptive bisection starting from `initial`. `tail_value` and
/// `tail_err` are a fixed contribution that is not refined.
template <class V, class F>
BasicQuadResult<V> refine(F& f, std::vector<Segment<V>> initial, V tail_value, double tail_err,
                          const QuadOptions& opts, std::size_t evaluations)
{
    std::vector<Segment<V>> frozen;
    double stuck_err = 0.0; // frozen error that is not a rounding floor
    std::priority_queue<Segment<V>> heap(std::less<Segment<V>>{}, std::move(initial));

    auto resum = [&] {
        // Left-to-right order so the result does not depend on heap layout.
        std::vector<Segment<V>> all = frozen;
        auto copy = heap;
        while (!copy.empty()) {
            all.push_back(copy.top());
            copy.pop();
        }
        std::sort(all.begin(), all.end(), [](const auto& l, const auto& r) { return l.a < r.a; });
        V value = tail_value;
        double err = tail_err;
        for (const auto& s : all) {
            value += s.value;
            err += s.err;
        }
        return std::pair{value, err};
    };
    auto result = [&] {
        auto [value, err] = resum();
        BasicQuadResult<V> r;
        r.value = value;
        r.abs_error_estimate = err;
        r.node_count = evaluations;
        return r;
    };

    auto [value, err] = resum();
    std::size_t steps = 0;
    while (err > tolerance_for(value, opts)) {
        if (heap.empty()) {
            // Only rounding floors left: nothing finer is representable.
            if (stuck_err + tail_err <= tolerance_for(value, opts)) {
                break;
            }
            auto r = result();
            throw BudgetExceeded("quadrature cannot reach tolerance: all panels at resolution limit",
                                 parts(r.value)[0], r.abs_error_estimate);
        }
        if (evaluations + 2 * kRuleNodes > opts.max_evaluations) {
            auto r = result();
            throw BudgetExceeded("quadrature evaluation budget of " + std::to_string(opts.max_evaluations) +
                                     " exceeded",
                                 parts(r.value)[0], r.abs_error_estimate);
        }
        Segment<V> worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (worst.at_roundoff || !(mid > worst.a && mid < worst.b)) {
            if (!worst.at_roundoff) {
                stuck_err += worst.err;
            }
            frozen.push_back(worst);
            continue;
        }
        Segment<V> left = gauss_kronrod<V>(f, worst.a, mid);
        Segment<V> right = gauss_kronrod<V>(f, mid, worst.b);
        evaluations += 2 * kRuleNodes;
        value += left.value + right.value - worst.value;
        err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
        // incremental sums drift; resynchronise periodically
        if (++steps % 64 == 0) {
            std::tie(value, err) = resum();
        }
    }
    return result();
}

} // namespace detail

/// Adaptive Gauss-Kronrod integration of a smooth integrand over [a, b].
template <class V = double, class F>
BasicQuadResult<V> integrate_interval(F&& f, double a, double b, const QuadOptions& opts = {})
{
    if (!(std::isfinite(a) && std::isfinite(b))) {
        throw DomainError("integrate_interval: bounds must be finite");
    }
    if (!(opts.abs_tol > 0.0) && !(opts.rel_tol > 0.0)) {
        throw DomainError("integrate_interval: tolerance must be positive");
    }
    if (a == b) {
        return {};
    }
    std::vector<detail::Segment<V>> initial{detail::gauss_kronrod<V>(f, a, b)};
    return detail::refine<V>(f, std::move(initial), V{}, 0.0, opts, detail::kRuleNodes);
}

/// Adaptive integration over [b_0, b_n] starting from the partition given by
/// the increasing breakpoints b.
template <class V = double, class F>
BasicQuadResult<V> integrate_partition(F&& f, const std::vector<double>& b, const QuadOptions& opts = {})
{
    if (b.size() < 2) {
        throw DomainError("integrate_partition: need at least two breakpoints");
    }
    if (!(opts.abs_tol > 0.0) && !(opts.rel_tol > 0.0)) {
        throw DomainError("integrate_partition: tolerance must be positive");
    }
    std::vector<detail::Segment<V>> initial;
    for (std::size_t k = 0; k + 1 < b.size(); ++k) {
        if (!(b[k] < b[k + 1]) || !std::isfinite(b[k + 1])) {
            throw DomainError("integrate_partition: breakpoints must be finite and increasing");
        }
        initial.push_back(detail::gauss_kronrod<V>(f, b[k], b[k + 1]));
    }
    const std::size_t evaluations = initial.size() * detail::kRuleNodes;
    return detail::refine<V>(f, std::move(initial), V{}, 0.0, opts, evaluations);
}

/// Integrates f over (0, T] where f may be singular at the origin.
///
/// Two regimes are supported. With `sing.damping > 0` the integrand carries
/// exp(-damping / t) and any algebraic exponent is admissible; the remaining
/// mass near 0 is bounded by the monotone envelope. Without damping the
/// exponent must exceed -1; the geometric decay of dyadic panel masses is
/// extrapolated to the origin and its envelope bound is charged as error.
template <class V = double, class F>
BasicQuadResult<V> integrate_singular(F&& f, double T, Singularity sing, const QuadOptions& opts)
{
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw DomainError("integrate_singular: T must be positive and finite");
    }
    if (!(opts.abs_tol > 0.0) && !(opts.rel_tol > 0.0)) {
        throw DomainError("integrate_singular: tolerance must be positive");
    }
    if (sing.damping < 0.0 || !std::isfinite(sing.damping) || !std::isfinite(sing.exponent)) {
        throw DomainError("integrate_singular: invalid singularity model");
    }
    const bool damped = sing.damping > 0.0;
    const double s = sing.exponent;
    if (!damped && s <= -1.0) {
        throw DomainError("integrate_singular: exponent " + std::to_string(s) +
                          " is not integrable at 0 without damping");
    }

    using detail::kRuleNodes;
    std::vector<detail::Segment<V>> panels;
    std::size_t evaluations = 0;

    if (!damped && s >= 0.0) {
        panels.push_back(detail::gauss_kronrod<V>(f, 0.0, T));
        return detail::refine<V>(f, std::move(panels), V{}, 0.0, opts, kRuleNodes);
    }

    // log of the envelope t^s exp(-c/t)
    auto log_envelope = [&](double t) { return s * std::log(t) - sing.damping / t; };
    // the envelope increases on (0, t_peak)
    const double t_peak =
        (damped && s < 0.0) ? sing.damping / (-s) : std::numeric_limits<double>::infinity();
    const double ratio = std::exp2(-(s + 1.0));

    V tail_value{};
    double tail_err = 0.0;
    V running{};
    double hi = T;
    constexpr std::size_t kMaxPanels = 1100;
    for (std::size_t k = 0;; ++k) {
        const double lo = 0.5 * hi;
        std::array<V, kRuleNodes> fv{};
        std::array<double, kRuleNodes> tv{};
        panels.push_back(detail::gauss_kronrod<V>(f, lo, hi, &fv, &tv));
        evaluations += kRuleNodes;
        running += panels.back().value;

        // envelope constant M estimated from this panel's nodes
        double log_m = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < kRuleNodes; ++j) {
            const double mag = detail::magnitude(fv[j]);
            if (mag > 0.0) {
                log_m = std::max(log_m, std::log(mag) - log_envelope(tv[j]));
            }
        }

        const double budget = 0.25 * detail::tolerance_for(running, opts);
        double bound = std::numeric_limits<double>::infinity();
        V extrapolated{};
        if (std::isinf(log_m) && log_m < 0.0) {
            bound = 0.0;
        } else if (damped) {
            if (lo <= t_peak) {
                bound = std::exp(log_m + std::log(lo) + log_envelope(lo));
            }
        } else {
            bound = std::exp(log_m + (s + 1.0) * std::log(lo)) / (s + 1.0);
            extrapolated = panels.back().value * (ratio / (1.0 - ratio));
        }
        if (bound <= budget) {
            tail_value = extrapolated;
            tail_err = bound;
            break;
        }
        if (k + 1 >= kMaxPanels || lo < 1e-290 || evaluations + kRuleNodes > opts.max_evaluations) {
            throw BudgetExceeded("integrate_singular: mass near t = 0 did not fall below tolerance",
                                 detail::parts(running)[0], bound);
        }
        hi = lo;
    }
    return detail::refine<V>(f, std::move(panels), tail_value, tail_err, opts, evaluations);
}

/// Real-valued convenience overload with an absolute tolerance.
template <class F>
QuadResult integrate_singular(F&& f, double T, double sing_exponent, double tol)
{
    QuadOptions opts;
    opts.abs_tol = tol;
    return integrate_singular<double>(std::forward<F>(f), T, Singularity{sing_exponent, 0.0}, opts);
}

} // namespace hidacur
