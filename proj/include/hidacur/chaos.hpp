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

// Chaos kernels of the stochastic current: numerical extraction from
// U(s) = S Psi(s phi) and the closed-form first and second kernels.

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/factorials.hpp>
#include <nlohmann/json.hpp>

#include "hidacur/error.hpp"
#include "hidacur/quad.hpp"
#include "hidacur/schwartz.hpp"
#include "hidacur/stransform.hpp"

namespace hidacur {

struct ChaosPairing {
    double value = 0.0;
    double error_estimate = 0.0;
    /// complex-step estimate minus central-difference estimate (n = 1 only)
    double cross_check = 0.0;
};

struct ExtractOptions {
    /// base step as a multiple of 1/||phi||
    double step_scale = 0.25;
    /// Richardson levels per base step
    int levels = 4;
    double abs_tol = 1e-9;
    double rel_tol = 1e-7;
};

namespace detail {

// n-th central difference of U at 0 with step h, divided by h^n.
inline double central_difference(const UFunctional& F, const TestFunction& phi, int n, double h)
{
    double sum = 0.0;
    for (int k = 0; k <= n; ++k) {
        const double s = (0.5 * n - k) * h;
        const double w = boost::math::binomial_coefficient<double>(unsigned(n), unsigned(k));
        sum += ((k % 2) ? -w : w) * F(cplx(s, 0.0), phi).real();
    }
    return sum / std::pow(h, n);
}

struct Richardson {
    double value = 0.0;
    double error = 0.0;
};

// Central differences have an even error expansion; halve h and eliminate
// h^2, h^4, ... in turn.
inline Richardson richardson_derivative(const UFunctional& F, const TestFunction& phi, int n, double h0, int levels)
{
    std::vector<std::vector<double>> table(static_cast<std::size_t>(levels));
    double h = h0;
    Richardson best{0.0, std::numeric_limits<double>::infinity()};
    for (int k = 0; k < levels; ++k, h *= 0.5) {
        auto& row = table[std::size_t(k)];
        row.push_back(central_difference(F, phi, n, h));
        double factor = 4.0;
        for (int m = 1; m <= k; ++m, factor *= 4.0) {
            const double prev = table[std::size_t(k - 1)][std::size_t(m - 1)];
            row.push_back(row[std::size_t(m - 1)] + (row[std::size_t(m - 1)] - prev) / (factor - 1.0));
        }
        if (k > 0) {
            const double err = std::abs(row[std::size_t(k)] - table[std::size_t(k - 1)][std::size_t(k - 1)]);
            if (err < best.error) {
                best = {row[std::size_t(k)], err};
            }
        }
    }
    return best;
}

} // namespace detail

/// <Psi^(n), phi^(x)n> = U^(n)(0) / n! with U(s) = F(s phi).
///
/// Order 1 uses the complex step Im U(ih)/h, cross-checked by an extrapolated
/// central difference. Order n >= 2 uses extrapolated central differences
/// from two base steps; disagreement beyond tolerance throws
/// UnstableDerivative.
inline ChaosPairing extract_chaos_pairing(const UFunctional& F, const TestFunction& phi, int n,
                                          const ExtractOptions& opts = {})
{
    if (n < 0) {
        throw DomainError("extract_chaos_pairing: order must be >= 0");
    }
    ChaosPairing out;
    if (n == 0) {
        out.value = F(cplx(0.0, 0.0), phi).real();
        return out;
    }
    const double norm = phi.combined_norm();
    if (norm == 0.0) {
        return out; // U is constant along the zero ray
    }
    const double h0 = opts.step_scale / norm;
    const double nfact = boost::math::factorial<double>(unsigned(n));
    auto tolerance = [&](double v) { return std::max(opts.abs_tol, opts.rel_tol * std::abs(v)); };

    if (n == 1) {
        const double h = 1e-20 * h0;
        out.value = F(cplx(0.0, h), phi).imag() / h;
        const auto cd = detail::richardson_derivative(F, phi, 1, h0, opts.levels);
        out.cross_check = out.value - cd.value;
        out.error_estimate = std::abs(out.cross_check);
        if (std::abs(out.cross_check) > tolerance(out.value)) {
            throw UnstableDerivative("extract_chaos_pairing: complex step " + std::to_string(out.value) +
                                     " and central difference " + std::to_string(cd.value) + " disagree");
        }
        return out;
    }

    const auto a = detail::richardson_derivative(F, phi, n, h0, opts.levels);
    const auto b = detail::richardson_derivative(F, phi, n, 0.6 * h0, opts.levels);
    const double gap = std::abs(a.value - b.value);
    out.value = 0.5 * (a.value + b.value) / nfact;
    out.error_estimate = std::max({gap, a.error, b.error}) / nfact;
    if (gap / nfact > tolerance(out.value)) {
        throw UnstableDerivative("extract_chaos_pairing: order " + std::to_string(n) +
                                 " estimates from two step sizes disagree by " + std::to_string(gap / nfact));
    }
    return out;
}

enum class SecondChaosConvention { paper, derivative };

inline std::string to_string(SecondChaosConvention c)
{
    return c == SecondChaosConvention::paper ? "paper" : "derivative";
}

enum class Atom { delta, eta_delta, delta_eta };

/// Kernel of order n in {0, 1, 2} of xi_i(x), carried as a density on (0, T]
/// against atom shapes:
///   n = 1: density(t) delta_t in slot i;
///   n = 2: density(t) (Id_ki x_j eta_t (x) delta_t + Id_ji x_k delta_t (x) eta_t),
///          eta_t = 1_[0,t].
/// The density is coefficient * t^power * exp(-|x|^2 / 2t).
struct FiniteRankKernel {
    int order = 0;
    int component = 0;
    CurrentParams params;
    double coefficient = 0.0;
    double power = 0.0;
    std::vector<Atom> atoms;

    double density(double t) const
    {
        const double r2 = params.norm_x() * params.norm_x();
        return coefficient * std::pow(t, power) * std::exp(-r2 / (2.0 * t));
    }

    /// Pairing with phi^(x)n: on the diagonal both atom terms of the second
    /// kernel give (x . c(t)) phi_i(t).
    QuadResult pair(const TestFunction& phi, const QuadOptions& opts) const
    {
        QuadResult out;
        out.node_count = 1;
        if (order == 0 || phi.coefficients(component).empty()) {
            return out;
        }
        if (order == 2 && params.at_origin()) {
            return out; // x . c(t) vanishes identically
        }
        const int i = component;
        const double r = params.norm_x();
        auto atom_weight = [&](double t) {
            if (order == 1) {
                return phi.eval(t, i);
            }
            double xc = 0.0;
            for (int j = 0; j < params.d; ++j) {
                xc += params.x[std::size_t(j)] * phi.cumulative(t, j);
            }
            return double(atoms.size()) * xc * phi.eval(t, i);
        };
        auto f = [&](double t) { return density(t) * atom_weight(t); };
        return integrate_singular<double>(f, params.T, Singularity{power, 0.5 * r * r}, opts);
    }
};

inline FiniteRankKernel first_chaos_kernel(const CurrentParams& p, int i)
{
    p.validate();
    if (p.at_origin() && p.d > 1) {
        throw NonexistenceError("first chaos at x = 0 in dimension d = " + std::to_string(p.d) +
                                ": the first chaos xi_i^(1)(0) is divergent");
    }
    if (i < 0 || i >= p.d) {
        throw std::out_of_range("first_chaos_kernel: component index out of range");
    }
    FiniteRankKernel k;
    k.order = 1;
    k.component = i;
    k.params = p;
    k.coefficient = std::pow(2.0 * std::numbers::pi, -0.5 * p.d);
    k.power = -0.5 * p.d;
    k.atoms = {Atom::delta};
    return k;
}

/// Second kernel under either convention. `paper` carries the
/// prefactor -1/(4 (2 pi)^(d/2)); `derivative` is the Taylor coefficient
/// (1/2) U''(0) of the S-transform, prefactor 1/(2 (2 pi)^(d/2)). Paired with
/// phi^(x)2 the two differ by the factor -2.
inline FiniteRankKernel second_chaos_kernel(const CurrentParams& p, int i, SecondChaosConvention conv)
{
    p.validate();
    if (p.at_origin() && p.d > 1) {
        throw NonexistenceError("second chaos at x = 0 in dimension d = " + std::to_string(p.d) +
                                ": xi(0) is not a Hida distribution");
    }
    if (i < 0 || i >= p.d) {
        throw std::out_of_range("second_chaos_kernel: component index out of range");
    }
    FiniteRankKernel k;
    k.order = 2;
    k.component = i;
    k.params = p;
    const double base = std::pow(2.0 * std::numbers::pi, -0.5 * p.d);
    k.coefficient = conv == SecondChaosConvention::paper ? -0.25 * base : 0.5 * base;
    k.power = -0.5 * p.d - 1.0;
    k.atoms = {Atom::eta_delta, Atom::delta_eta};
    return k;
}

inline QuadOptions chaos_quad_options(double tol)
{
    QuadOptions o;
    o.abs_tol = tol;
    o.rel_tol = 0.0;
    return o;
}

/// (2 pi)^(-d/2) int_0^T t^(-d/2) exp(-|x|^2/2t) phi_i(t) dt.
inline double first_chaos_pairing_closed(const CurrentParams& p, const TestFunction& phi, int i, double tol = 1e-12)
{
    detail::check_dimension(p, phi);
    return first_chaos_kernel(p, i).pair(phi, chaos_quad_options(tol)).value;
}

/// c (2 pi)^(-d/2) int_0^T t^(-d/2-1) exp(-|x|^2/2t) (x . c(t)) phi_i(t) dt with
/// c = -1/2 (paper) or 1 (derivative).
inline double second_chaos_pairing_closed(const CurrentParams& p, const TestFunction& phi, int i,
                                          SecondChaosConvention conv, double tol = 1e-12)
{
    detail::check_dimension(p, phi);
    return second_chaos_kernel(p, i, conv).pair(phi, chaos_quad_options(tol)).value;
}

/// Bound on sum_{n > N} |a_n| s^n for U(s) = sum a_n s^n given
/// |U(z)| <= C1 exp(C2 |z|^2 ||phi||^2): Cauchy estimates on circles of
/// radius R > s give |a_n| <= C1 exp(C2 R^2 ||phi||^2) R^-n; the bound is
/// minimised over s < R <= R_max, the largest radius where the growth bound
/// is known to hold.
inline double taylor_remainder_bound(double C1, double C2, double phi_norm, int N, double s = 1.0,
                                     double R_max = std::numeric_limits<double>::infinity())
{
    if (!(s > 0.0) || N < 0) {
        throw DomainError("taylor_remainder_bound: need s > 0 and N >= 0");
    }
    if (!(R_max > s)) {
        throw DomainError("taylor_remainder_bound: R_max must exceed s");
    }
    const double top = std::min(R_max, s * 1e4);
    double best = std::numeric_limits<double>::infinity();
    for (double R = std::min(s * 1.01, top);; R = std::min(R * 1.01, top)) {
        const double q = s / R;
        const double log_b = std::log(C1) + C2 * R * R * phi_norm * phi_norm + double(N + 1) * std::log(q) -
                             std::log1p(-q);
        best = std::min(best, std::exp(log_b));
        if (R >= top) {
            break;
        }
    }
    return best;
}

inline void to_json(nlohmann::json& j, const FiniteRankKernel& k)
{
    nlohmann::json atoms = nlohmann::json::array();
    for (Atom a : k.atoms) {
        atoms.push_back(a == Atom::delta ? "delta" : a == Atom::eta_delta ? "eta(x)delta" : "delta(x)eta");
    }
    j = {{"order", k.order},       {"component", k.component}, {"params", k.params},
         {"coefficient", k.coefficient}, {"power", k.power},  {"atoms", atoms}};
}

} // namespace hidacur
