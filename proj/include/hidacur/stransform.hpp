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

// S-transforms of the Donsker delta, white noise and the stochastic current
// xi(x) = int_0^T delta(x - B(t)) dB(t), together with Wick products,
// integrability checks and growth-bound fits for U-functionals.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hidacur/diagnostics.hpp"
#include "hidacur/error.hpp"
#include "hidacur/quad.hpp"
#include "hidacur/schwartz.hpp"
#include "hidacur/special.hpp"

namespace hidacur {

using cplx = std::complex<double>;

struct CurrentParams {
    std::vector<double> x{0.0};
    double T = 1.0;
    int d = 1;

    CurrentParams() = default;
    CurrentParams(std::vector<double> x_, double T_) : x(std::move(x_)), T(T_), d(int(x.size())) { validate(); }

    void validate() const
    {
        if (d < 1) {
            throw DomainError("CurrentParams: d must be >= 1");
        }
        if (x.size() != std::size_t(d)) {
            throw DomainError("CurrentParams: length(x) must equal d");
        }
        if (!(T > 0.0) || !std::isfinite(T)) {
            throw DomainError("CurrentParams: T must be positive and finite");
        }
        for (double v : x) {
            if (!std::isfinite(v)) {
                throw DomainError("CurrentParams: x must be finite");
            }
        }
    }

    double norm_x() const
    {
        double s = 0.0;
        for (double v : x) {
            s += v * v;
        }
        return std::sqrt(s);
    }

    bool at_origin() const { return norm_x() == 0.0; }
};

inline void to_json(nlohmann::json& j, const CurrentParams& p) { j = {{"x", p.x}, {"T", p.T}, {"d", p.d}}; }

inline void from_json(const nlohmann::json& j, CurrentParams& p)
{
    p.x = j.at("x").get<std::vector<double>>();
    p.T = j.at("T").get<double>();
    p.d = j.value("d", int(p.x.size()));
    p.validate();
}

/// A map z, phi -> F(z phi) on complex rays, as in the U-functional
/// characterisation of S-transforms.
struct UFunctional {
    std::function<cplx(cplx, const TestFunction&)> fn;
    std::string label;

    cplx operator()(cplx z, const TestFunction& phi) const { return fn(z, phi); }
    cplx eval(cplx z, const TestFunction& phi) const { return fn(z, phi); }
};

/// Per-component values with quadrature diagnostics.
template <class V>
struct ComponentValues {
    std::vector<V> value;
    std::vector<double> abs_error_estimate;
    std::size_t node_count = 0;
};

namespace detail {

inline void check_dimension(const CurrentParams& p, const TestFunction& phi)
{
    p.validate();
    if (phi.dimension() != p.d) {
        throw DomainError("test function dimension " + std::to_string(phi.dimension()) +
                          " does not match d = " + std::to_string(p.d));
    }
}

inline void require_existence(const CurrentParams& p, const char* what)
{
    if (p.at_origin() && p.d > 1) {
        throw NonexistenceError(std::string(what) + " at x = 0 in dimension d = " + std::to_string(p.d) +
                                ": the first chaos of xi(0) is divergent, so xi(0) cannot be a Hida distribution");
    }
}

// (2 pi tau)^(-d/2) exp(-|x - z c(t)|^2 / (2 tau)) z phi_i(t), tau = t + shift.
template <class V>
V current_integrand(const CurrentParams& p, const TestFunction& phi, V z, int i, double shift, double t)
{
    const double tau = t + shift;
    V sq{};
    for (int j = 0; j < p.d; ++j) {
        const V diff = p.x[std::size_t(j)] - z * phi.cumulative(t, j);
        sq += diff * diff;
    }
    const double phi_i = phi.eval(t, i);
    if (phi_i == 0.0) {
        return V{};
    }
    return std::exp(-sq / (2.0 * tau) - 0.5 * p.d * std::log(2.0 * std::numbers::pi * tau)) * z * phi_i;
}

template <class V>
ComponentValues<V> current_components(const CurrentParams& p, const TestFunction& phi, V z, double shift,
                                      const QuadOptions& opts)
{
    ComponentValues<V> out;
    const double r = p.norm_x();
    std::vector<double> breaks;
    if (shift > 0.0) {
        // dyadic grading down to the mollifier scale
        breaks.push_back(0.0);
        double b = p.T;
        std::vector<double> rev{b};
        while (b > 0.125 * shift && rev.size() < 60) {
            b *= 0.5;
            rev.push_back(b);
        }
        breaks.insert(breaks.end(), rev.rbegin(), rev.rend());
    }
    for (int i = 0; i < p.d; ++i) {
        if (phi.coefficients(i).empty()) {
            out.value.push_back(V{});
            out.abs_error_estimate.push_back(0.0);
            continue;
        }
        auto f = [&](double t) { return current_integrand<V>(p, phi, z, i, shift, t); };
        BasicQuadResult<V> res;
        if (shift > 0.0) {
            res = integrate_partition<V>(f, breaks, opts);
        } else {
            res = integrate_singular<V>(f, p.T, Singularity{-0.5 * p.d, 0.5 * r * r}, opts);
        }
        out.value.push_back(res.value);
        out.abs_error_estimate.push_back(res.abs_error_estimate);
        out.node_count += res.node_count;
    }
    return out;
}

inline QuadOptions absolute(double tol)
{
    if (!(tol > 0.0)) {
        throw DomainError("tolerance must be positive");
    }
    QuadOptions o;
    o.abs_tol = tol;
    o.rel_tol = 0.0;
    return o;
}

} // namespace detail

/// S W_i(t)(phi) = phi_i(t).
inline double s_white_noise(const TestFunction& phi, double t, int i) { return phi.eval(t, i); }

/// S delta(x - B(t))(z phi) = (2 pi t)^(-d/2) exp(-sum_j (x_j - z c_j(t))^2 / (2t)).
inline cplx s_donsker(const std::vector<double>& x, double t, const TestFunction& phi, cplx z)
{
    if (!(t > 0.0)) {
        throw DomainError("s_donsker: t must be positive");
    }
    if (int(x.size()) != phi.dimension()) {
        throw DomainError("s_donsker: length(x) must equal the dimension of phi");
    }
    const int d = phi.dimension();
    cplx sq{};
    for (int j = 0; j < d; ++j) {
        const cplx diff = x[std::size_t(j)] - z * phi.cumulative(t, j);
        sq += diff * diff;
    }
    return std::exp(-sq / (2.0 * t) - 0.5 * d * std::log(2.0 * std::numbers::pi * t));
}

/// Full per-component result of the current's S-transform at z phi.
template <class V = double>
ComponentValues<V> s_current_values(const CurrentParams& p, const TestFunction& phi, V z, const QuadOptions& opts)
{
    detail::check_dimension(p, phi);
    detail::require_existence(p, "s_current");
    return detail::current_components<V>(p, phi, z, 0.0, opts);
}

/// S xi(x)(phi), one value per component, each to absolute tolerance tol.
inline std::vector<double> s_current(const CurrentParams& p, const TestFunction& phi, double tol)
{
    return s_current_values<double>(p, phi, 1.0, detail::absolute(tol)).value;
}

template <class V = double>
ComponentValues<V> s_current_mollified_values(const CurrentParams& p, const TestFunction& phi, double eps2, V z,
                                              const QuadOptions& opts)
{
    detail::check_dimension(p, phi);
    if (!(eps2 > 0.0) || !std::isfinite(eps2)) {
        throw DomainError("s_current_mollified: eps2 must be positive");
    }
    return detail::current_components<V>(p, phi, z, eps2, opts);
}

/// S-transform of the current with delta replaced by the Gaussian density of
/// variance eps2. Exists for every x and d.
inline std::vector<double> s_current_mollified(const CurrentParams& p, const TestFunction& phi, double eps2,
                                               double tol)
{
    return s_current_mollified_values<double>(p, phi, eps2, 1.0, detail::absolute(tol)).value;
}

/// S(Phi wick Psi) = S Phi * S Psi.
inline UFunctional wick_product(const UFunctional& F, const UFunctional& G)
{
    return {[F, G](cplx z, const TestFunction& phi) { return F(z, phi) * G(z, phi); },
            "(" + F.label + ") wick (" + G.label + ")"};
}

inline UFunctional constant_functional(cplx c)
{
    return {[c](cplx, const TestFunction&) { return c; }, "constant"};
}

inline UFunctional donsker_functional(std::vector<double> x, double t)
{
    return {[x, t](cplx z, const TestFunction& phi) { return s_donsker(x, t, phi, z); },
            "donsker(t=" + std::to_string(t) + ")"};
}

inline UFunctional white_noise_functional(double t, int i)
{
    return {[t, i](cplx z, const TestFunction& phi) { return z * phi.eval(t, i); },
            "white_noise(t=" + std::to_string(t) + ", i=" + std::to_string(i) + ")"};
}

/// The integrand delta(x - B(t)) wick W_i(t) of the current.
inline UFunctional current_integrand_functional(std::vector<double> x, double t, int i)
{
    return wick_product(donsker_functional(std::move(x), t), white_noise_functional(t, i));
}

/// Default quadrature for functionals: relative accuracy, so that the tiny
/// imaginary parts used in complex-step differentiation stay resolved.
inline QuadOptions functional_quad_options()
{
    QuadOptions o;
    o.abs_tol = 1e-300;
    o.rel_tol = 1e-12;
    o.max_evaluations = 4000000;
    return o;
}

inline UFunctional current_functional(CurrentParams p, int i, QuadOptions opts = functional_quad_options())
{
    p.validate();
    detail::require_existence(p, "current_functional");
    if (i < 0 || i >= p.d) {
        throw std::out_of_range("current_functional: component index out of range");
    }
    return {[p, i, opts](cplx z, const TestFunction& phi) {
                detail::check_dimension(p, phi);
                if (phi.coefficients(i).empty()) {
                    return cplx{};
                }
                const double r = p.norm_x();
                auto f = [&](double t) { return detail::current_integrand<cplx>(p, phi, z, i, 0.0, t); };
                return integrate_singular<cplx>(f, p.T, Singularity{-0.5 * p.d, 0.5 * r * r}, opts).value;
            },
            "current(i=" + std::to_string(i) + ")"};
}

inline UFunctional mollified_current_functional(CurrentParams p, int i, double eps2,
                                                QuadOptions opts = functional_quad_options())
{
    p.validate();
    if (i < 0 || i >= p.d) {
        throw std::out_of_range("mollified_current_functional: component index out of range");
    }
    return {[p, i, eps2, opts](cplx z, const TestFunction& phi) {
                return s_current_mollified_values<cplx>(p, phi, eps2, z, opts).value[std::size_t(i)];
            },
            "mollified_current(i=" + std::to_string(i) + ", eps2=" + std::to_string(eps2) + ")"};
}

struct Integrability {
    bool integrable = true;
    /// int_0^T t^(-d/2) exp(-|x|^2/2t) dt, +inf when divergent.
    double mass = 0.0;
    std::optional<DivergenceReport> divergence;
};

/// Whether t -> t^(-d/2) exp(-|x|^2/2t) is integrable on (0, T].
inline Integrability check_integrability(const CurrentParams& p)
{
    p.validate();
    Integrability out;
    if (!p.at_origin()) {
        out.mass = singular_mass_closed(p.d, p.norm_x(), p.T);
        return out;
    }
    if (p.d == 1) {
        QuadOptions o;
        o.abs_tol = 1e-300;
        o.rel_tol = 1e-13;
        out.mass = integrate_singular<double>([](double t) { return 1.0 / std::sqrt(t); }, p.T,
                                              Singularity{-0.5, 0.0}, o)
                       .value;
        return out;
    }
    std::vector<double> cutoffs;
    for (int k = 1; k <= 10; ++k) {
        cutoffs.push_back(p.T * std::pow(10.0, -k));
    }
    out.divergence = divergence_scan(p.d, p.T, cutoffs);
    out.integrable = false;
    out.mass = std::numeric_limits<double>::infinity();
    return out;
}

struct BoundFit {
    double C1 = 0.0;
    double C2 = 0.0;
    std::string norm_used = "combined";
    std::size_t samples = 0;
    /// coefficient of rho = r ||phi|| in the least-squares fit; absorbed into C1
    double linear = 0.0;
    std::vector<double> rho;
    std::vector<double> log_max;

    /// Whether |F(z phi)| <= C1 exp(C2 |z|^2 ||phi||^2) holds at rho.
    double log_bound(double rho_value) const { return std::log(C1) + C2 * rho_value * rho_value; }
};

namespace detail {

// Solves the n x n system A y = b in place (n <= 3), partial pivoting.
template <std::size_t N>
std::array<double, N> solve_small(std::array<std::array<double, N>, N> A, std::array<double, N> b, std::size_t n)
{
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(A[r][c]) > std::abs(A[piv][c])) {
                piv = r;
            }
        }
        std::swap(A[c], A[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double m = A[r][c] / A[c][c];
            for (std::size_t k = c; k < n; ++k) {
                A[r][k] -= m * A[c][k];
            }
            b[r] -= m * b[c];
        }
    }
    std::array<double, N> y{};
    for (std::size_t c = n; c-- > 0;) {
        double s = b[c];
        for (std::size_t k = c + 1; k < n; ++k) {
            s -= A[c][k] * y[k];
        }
        y[c] = s / A[c][c];
    }
    return y;
}

} // namespace detail

/// Fits |F(z phi)| <= C1 exp(C2 |z|^2 ||phi||^2) on z = r e^(i theta).
///
/// For each radius the largest log|F| over the angles is taken. These are
/// fitted by least squares on {1, rho, rho^2} with rho = r ||phi|| (fewer
/// terms when fewer radii are given); C2 is the rho^2 coefficient clipped at 0
/// and C1 is then raised until every sample is majorised.
inline BoundFit fit_ufunctional_bound(const UFunctional& F, const TestFunction& phi, const std::vector<double>& radii,
                                      int angles_per_radius)
{
    if (radii.empty()) {
        throw DomainError("fit_ufunctional_bound: radii must be nonempty");
    }
    if (angles_per_radius < 1) {
        throw DomainError("fit_ufunctional_bound: angles_per_radius must be >= 1");
    }
    for (double r : radii) {
        if (!(r > 0.0) || !std::isfinite(r)) {
            throw DomainError("fit_ufunctional_bound: radii must be positive");
        }
    }
    const double norm = phi.combined_norm();
    BoundFit fit;
    fit.samples = radii.size() * std::size_t(angles_per_radius);

    std::vector<double> rho, y;
    for (double r : radii) {
        double best = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < angles_per_radius; ++k) {
            const double theta = 2.0 * std::numbers::pi * k / angles_per_radius;
            const double mag = std::abs(F(std::polar(r, theta), phi));
            if (!std::isfinite(mag)) {
                throw IntegrandFailure("fit_ufunctional_bound: F is not finite at |z| = " + std::to_string(r));
            }
            best = std::max(best, std::log(mag));
        }
        fit.rho.push_back(r * norm);
        fit.log_max.push_back(best);
        if (std::isfinite(best)) {
            rho.push_back(r * norm);
            y.push_back(best);
        }
    }
    if (y.empty()) {
        return fit; // F vanishes on every sample
    }

    std::vector<double> distinct = rho;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (norm > 0.0 && distinct.size() >= 2) {
        // basis columns: 1, rho^2 and, with three or more radii, rho
        const std::size_t n = distinct.size() >= 3 ? 3 : 2;
        std::array<std::array<double, 3>, 3> A{};
        std::array<double, 3> b{};
        for (std::size_t k = 0; k < rho.size(); ++k) {
            const std::array<double, 3> row = {1.0, rho[k] * rho[k], rho[k]};
            for (std::size_t r = 0; r < n; ++r) {
                for (std::size_t c = 0; c < n; ++c) {
                    A[r][c] += row[r] * row[c];
                }
                b[r] += row[r] * y[k];
            }
        }
        const auto coef = detail::solve_small<3>(A, b, n);
        fit.C2 = std::max(0.0, coef[1]);
        fit.linear = n == 3 ? coef[2] : 0.0;
    }
    double log_c1 = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < rho.size(); ++k) {
        log_c1 = std::max(log_c1, y[k] - fit.C2 * rho[k] * rho[k]);
    }
    fit.C1 = std::exp(log_c1);
    return fit;
}

inline void to_json(nlohmann::json& j, const BoundFit& f)
{
    j = {{"C1", f.C1}, {"C2", f.C2},   {"norm_used", f.norm_used}, {"samples", f.samples},
         {"linear", f.linear}, {"rho", f.rho}, {"log_max", f.log_max}};
}

/// The chain of upper bounds for |S(delta(x - B(t)) wick W_i(t))(z phi)|,
/// each stage dominating the previous one:
///   L0 the value itself,
///   L1 after |exp(w)| = exp(Re w) and Cauchy-Schwarz on Re(z x.c),
///   L2 after |c(t)| <= sqrt(d) t |phi|_inf, |c(t)|^2 <= t |phi|^2 and
///      |z phi_i(t)| <= exp(|z| |phi|_inf),
///   L3 = C t^(-d/2) exp(-|x|^2/2t) exp(|x|^2/2) exp(|z|^2 ||phi||^2 / 2) by
///      ab <= (a^2 + b^2)/2, with
///      C = (2 pi)^(-d/2) exp((sqrt(d)|x| + 1)^2/2 - |x|^2/2).
/// |phi|_inf is the largest sup norm over components.
struct ProofChainBound {
    double L0 = 0.0;
    double L1 = 0.0;
    double L2 = 0.0;
    double L3 = 0.0;
    double C = 0.0;
};

inline ProofChainBound proof_chain_bound(const std::vector<double>& x, double t, const TestFunction& phi, cplx z,
                                         int i)
{
    if (!(t > 0.0)) {
        throw DomainError("proof_chain_bound: t must be positive");
    }
    const int d = phi.dimension();
    double xx = 0.0, cc = 0.0;
    for (int j = 0; j < d; ++j) {
        xx += x.at(std::size_t(j)) * x[std::size_t(j)];
        const double c = phi.cumulative(t, j);
        cc += c * c;
    }
    const double ax = std::sqrt(xx), ac = std::sqrt(cc), az = std::abs(z);
    const double sup = phi.sup_norm(), l2 = phi.l2_norm();
    const double log_base = -0.5 * d * std::log(2.0 * std::numbers::pi * t) - xx / (2.0 * t);
    const double sd = std::sqrt(double(d));

    ProofChainBound b;
    b.L0 = std::abs(s_donsker(x, t, phi, z) * z * phi.eval(t, i));
    b.L1 = std::exp(log_base + ax * az * ac / t + az * az * cc / (2.0 * t)) * az * std::abs(phi.eval(t, i));
    b.L2 = std::exp(log_base + sd * ax * az * sup + 0.5 * az * az * l2 * l2 + az * sup);
    const double log_c = 0.5 * (sd * ax + 1.0) * (sd * ax + 1.0) - 0.5 * xx;
    b.C = std::exp(-0.5 * d * std::log(2.0 * std::numbers::pi) + log_c);
    const double norm = phi.combined_norm();
    b.L3 = std::exp(log_base + log_c + 0.5 * xx + 0.5 * az * az * norm * norm);
    return b;
}

/// Result record {params, phi_ref, value[], tol, node_count}.
template <class V>
nlohmann::json result_record(const CurrentParams& p, const TestFunction& phi, const ComponentValues<V>& r, double tol)
{
    nlohmann::json values = nlohmann::json::array();
    for (const auto& v : r.value) {
        if constexpr (std::is_same_v<V, double>) {
            values.push_back(v);
        } else {
            values.push_back({v.real(), v.imag()});
        }
    }
    return {{"params", p},
            {"phi_ref", phi},
            {"value", values},
            {"abs_error_estimate", r.abs_error_estimate},
            {"tol", tol},
            {"node_count", r.node_count}};
}

} // namespace hidacur
