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

// Cutoff scans of the first-chaos mass int_delta^T t^(-d/2) dt at x = 0.

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hidacur/error.hpp"

namespace hidacur {

enum class Verdict { convergent, divergent };

inline std::string to_string(Verdict v) { return v == Verdict::convergent ? "convergent" : "divergent"; }

struct DivergenceReport {
    int d = 1;
    double T = 1.0;
    std::vector<double> cutoffs;
    std::vector<double> masses;
    /// "power" for A + B delta^q, "log" for A + B ln(1/delta).
    std::string model;
    double exponent = 0.0;        // q of the power model
    double power_coefficient = 0.0;
    double power_limit = 0.0;     // A of the power model
    double log_slope = 0.0;       // B of the log model
    double log_intercept = 0.0;
    double power_residual = 0.0;  // rms over the tail
    double log_residual = 0.0;
    std::size_t tail_points = 0;
    Verdict verdict = Verdict::convergent;

    double residual() const { return model == "log" ? log_residual : power_residual; }
};

namespace detail {

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double rms = std::numeric_limits<double>::infinity();
};

// Least squares y = a + b u.
inline LineFit fit_line(const std::vector<double>& u, const std::vector<double>& y)
{
    const double n = double(u.size());
    double mu = 0.0, my = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        mu += u[k];
        my += y[k];
    }
    mu /= n;
    my /= n;
    double suu = 0.0, suy = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        suu += (u[k] - mu) * (u[k] - mu);
        suy += (u[k] - mu) * (y[k] - my);
    }
    LineFit f;
    if (!(suu > 0.0) || !std::isfinite(suu)) {
        return f;
    }
    f.slope = suy / suu;
    f.intercept = my - f.slope * mu;
    double rss = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        const double r = y[k] - f.intercept - f.slope * u[k];
        rss += r * r;
    }
    f.rms = std::sqrt(rss / n);
    return f;
}

inline LineFit fit_power(const std::vector<double>& delta, const std::vector<double>& y, double q)
{
    std::vector<double> u(delta.size());
    for (std::size_t k = 0; k < delta.size(); ++k) {
        u[k] = std::pow(delta[k], q);
    }
    return fit_line(u, y);
}

} // namespace detail

/// Closed-form mass int_delta^T t^(-d/2) dt.
inline double cutoff_mass(int d, double T, double delta)
{
    if (d == 2) {
        return std::log(T / delta);
    }
    const double p = 1.0 - 0.5 * d;
    return (std::pow(T, p) - std::pow(delta, p)) / p;
}

/// Masses on a decreasing cutoff grid and a classification of their limit.
///
/// The smallest 60% of the cutoffs are fitted by A + B delta^q (q from a grid
/// scan refined by golden section, |q| >= 0.02) and by A + B ln(1/delta). The
/// verdict is divergent when the log model fits at least as well or q < 0.
inline DivergenceReport divergence_scan(int d, double T, const std::vector<double>& cutoffs)
{
    if (d < 1) {
        throw DomainError("divergence_scan: d must be >= 1");
    }
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw DomainError("divergence_scan: T must be positive");
    }
    if (cutoffs.size() < 4) {
        throw DomainError("divergence_scan: need at least 4 cutoffs");
    }
    for (std::size_t k = 0; k < cutoffs.size(); ++k) {
        if (!(cutoffs[k] > 0.0 && cutoffs[k] < T)) {
            throw DomainError("divergence_scan: cutoffs must lie in (0, T)");
        }
        if (k > 0 && !(cutoffs[k] < cutoffs[k - 1])) {
            throw DomainError("divergence_scan: cutoffs must be strictly decreasing");
        }
    }

    DivergenceReport rep;
    rep.d = d;
    rep.T = T;
    rep.cutoffs = cutoffs;
    for (double delta : cutoffs) {
        rep.masses.push_back(cutoff_mass(d, T, delta));
    }

    const std::size_t K = cutoffs.size();
    const std::size_t n = std::max<std::size_t>(std::min<std::size_t>(K, 4), std::size_t(std::ceil(0.6 * K)));
    rep.tail_points = n;
    std::vector<double> delta(cutoffs.end() - std::ptrdiff_t(n), cutoffs.end());
    std::vector<double> mass(rep.masses.end() - std::ptrdiff_t(n), rep.masses.end());

    std::vector<double> log_inv(n);
    for (std::size_t k = 0; k < n; ++k) {
        log_inv[k] = std::log(1.0 / delta[k]);
    }
    const auto log_fit = detail::fit_line(log_inv, mass);
    rep.log_slope = log_fit.slope;
    rep.log_intercept = log_fit.intercept;
    rep.log_residual = log_fit.rms;

    // q near 0 makes delta^q collinear with the constant; that limit is the
    // log model.
    constexpr double kQMin = 0.02, kQMax = 3.0, kStep = 0.01;
    double best_q = kQMin;
    double best_rms = std::numeric_limits<double>::infinity();
    for (double sign : {-1.0, 1.0}) {
        for (double a = kQMin; a <= kQMax + 1e-12; a += kStep) {
            const double rms = detail::fit_power(delta, mass, sign * a).rms;
            if (rms < best_rms) {
                best_rms = rms;
                best_q = sign * a;
            }
        }
    }
    const double sign = best_q < 0.0 ? -1.0 : 1.0;
    double lo = std::max(kQMin, std::abs(best_q) - kStep);
    double hi = std::min(kQMax, std::abs(best_q) + kStep);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    auto rms_at = [&](double a) { return detail::fit_power(delta, mass, sign * a).rms; };
    double c = hi - g * (hi - lo), e = lo + g * (hi - lo);
    double fc = rms_at(c), fe = rms_at(e);
    for (int it = 0; it < 100 && hi - lo > 1e-13; ++it) {
        if (fc < fe) {
            hi = e;
            e = c;
            fe = fc;
            c = hi - g * (hi - lo);
            fc = rms_at(c);
        } else {
            lo = c;
            c = e;
            fc = fe;
            e = lo + g * (hi - lo);
            fe = rms_at(e);
        }
    }
    const double q = sign * 0.5 * (lo + hi);
    const auto pow_fit = detail::fit_power(delta, mass, q);
    if (pow_fit.rms <= best_rms) {
        best_q = q;
        best_rms = pow_fit.rms;
    }
    const auto final_fit = detail::fit_power(delta, mass, best_q);
    rep.exponent = best_q;
    rep.power_coefficient = final_fit.slope;
    rep.power_limit = final_fit.intercept;
    rep.power_residual = final_fit.rms;

    // ties within rounding go to the log model
    double scale = 0.0;
    for (double m : mass) {
        scale = std::max(scale, std::abs(m));
    }
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * scale;
    const bool log_wins = rep.log_residual <= rep.power_residual + noise;
    rep.model = log_wins ? "log" : "power";
    rep.verdict = (log_wins || rep.exponent < 0.0) ? Verdict::divergent : Verdict::convergent;
    return rep;
}

inline void to_json(nlohmann::json& j, const DivergenceReport& r)
{
    j = nlohmann::json{{"d", r.d},
                       {"T", r.T},
                       {"cutoffs", r.cutoffs},
                       {"masses", r.masses},
                       {"model", r.model},
                       {"exponent", r.exponent},
                       {"power_coefficient", r.power_coefficient},
                       {"power_limit", r.power_limit},
                       {"power_residual", r.power_residual},
                       {"log_slope", r.log_slope},
                       {"log_intercept", r.log_intercept},
                       {"log_residual", r.log_residual},
                       {"tail_points", r.tail_points},
                       {"verdict", to_string(r.verdict)}};
}

/// Tidy CSV of (delta, mass) pairs.
inline void write_csv(std::ostream& os, const DivergenceReport& r)
{
    os << "delta,mass\n";
    os.precision(17);
    for (std::size_t k = 0; k < r.cutoffs.size(); ++k) {
        os << r.cutoffs[k] << ',' << r.masses[k] << '\n';
    }
}

} // namespace hidacur
