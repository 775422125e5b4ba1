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

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "hidacur/quad.hpp"

namespace hidacur {
namespace {

constexpr double kSqrt2Gamma = 0.79537949084670289607; // sqrt(2) Gamma(1/2, 1/2)

struct Case {
    const char* name;
    double (*f)(double);
    double T;
    Singularity sing;
    double exact;
};

const Case kCases[] = {
    {"t^-1/2", [](double t) { return 1.0 / std::sqrt(t); }, 1.0, {-0.5, 0.0}, 2.0},
    {"t^-3/2 e^-1/2t", [](double t) { return std::pow(t, -1.5) * std::exp(-0.5 / t); }, 1.0, {-1.5, 0.5},
     kSqrt2Gamma},
    {"1", [](double) { return 1.0; }, 2.0, {0.0, 0.0}, 2.0},
};

TEST(IntegrateSingular, Examples)
{
    for (const auto& c : kCases) {
        QuadOptions opts;
        opts.abs_tol = 1e-12;
        auto r = integrate_singular<double>(c.f, c.T, c.sing, opts);
        EXPECT_NEAR(r.value, c.exact, 1e-12) << c.name;
        EXPECT_GE(r.abs_error_estimate, 0.0);
        EXPECT_GE(r.node_count, 1u);
    }
    // overload taking the exponent only
    EXPECT_NEAR(integrate_singular([](double t) { return 1.0 / std::sqrt(t); }, 1.0, -0.5, 1e-10).value, 2.0, 1e-10);
}

TEST(IntegrateSingular, ErrorEstimateBoundsTrueError)
{
    int total = 0, covered = 0;
    for (const auto& c : kCases) {
        for (double tol = 1e-3; tol >= 1e-13; tol /= 3.0) {
            QuadOptions opts;
            opts.abs_tol = tol;
            auto r = integrate_singular<double>(c.f, c.T, c.sing, opts);
            ++total;
            const double err = std::abs(r.value - c.exact);
            covered += err <= std::max(r.abs_error_estimate, 4e-16 * std::abs(c.exact)) ? 1 : 0;
            EXPECT_LE(r.abs_error_estimate, tol) << c.name;
        }
    }
    EXPECT_GE(double(covered), 0.99 * total) << covered << "/" << total;
}

TEST(IntegrateSingular, HalvingToleranceDoesNotIncreaseError)
{
    for (const auto& c : kCases) {
        double prev = std::numeric_limits<double>::infinity();
        for (double tol = 1e-4; tol >= 1e-12; tol *= 0.5) {
            QuadOptions opts;
            opts.abs_tol = tol;
            const double err = std::abs(integrate_singular<double>(c.f, c.T, c.sing, opts).value - c.exact);
            // allow for rounding noise once the error is at machine level
            EXPECT_LE(err, std::max(prev, 4e-16 * std::abs(c.exact))) << c.name << " tol=" << tol;
            prev = err;
        }
    }
}

TEST(IntegrateSingular, NeverEvaluatesOrigin)
{
    bool touched = false;
    auto f = [&](double t) {
        touched = touched || t <= 0.0;
        return std::pow(t, -0.25);
    };
    integrate_singular(f, 1.0, -0.25, 1e-12);
    integrate_singular<double>(f, 1.0, Singularity{0.0, 0.0}, QuadOptions{});
    EXPECT_FALSE(touched);
}

TEST(IntegrateSingular, DampedStrongSingularity)
{
    // t^-5/2 e^{-r^2/2t} on (0, 1] with small r: mass concentrates near t ~ r^2
    const double r = 0.05;
    auto f = [&](double t) { return std::pow(t, -2.5) * std::exp(-r * r / (2.0 * t)); };
    QuadOptions opts;
    opts.abs_tol = 1e-300;
    opts.rel_tol = 1e-11;
    auto res = integrate_singular<double>(f, 1.0, Singularity{-2.5, 0.5 * r * r}, opts);
    // substitute u = r^2/2t: 2^{3/2} r^{-3} Gamma(3/2, r^2/2)
    const double exact = std::pow(2.0, 1.5) * std::pow(r, -3.0) *
                         (0.5 * std::sqrt(std::numbers::pi) * std::erfc(r / std::sqrt(2.0)) +
                          (r / std::sqrt(2.0)) * std::exp(-0.5 * r * r));
    EXPECT_LE(std::abs(res.value - exact), 1e-10 * exact);
}

TEST(IntegrateSingular, ComplexIntegrand)
{
    auto f = [](double t) { return std::complex<double>(1.0 / std::sqrt(t), t); };
    QuadOptions opts;
    opts.abs_tol = 1e-12;
    auto r = integrate_singular<std::complex<double>>(f, 1.0, Singularity{-0.5, 0.0}, opts);
    EXPECT_NEAR(r.value.real(), 2.0, 1e-12);
    EXPECT_NEAR(r.value.imag(), 0.5, 1e-12);
}

TEST(IntegrateSingular, RelativeToleranceOnTinyImaginaryPart)
{
    // complex-step style: imaginary part many orders below the real one is
    // still controlled when it dominates the magnitude
    const double h = 1e-20;
    auto f = [&](double t) { return std::complex<double>(0.0, h * std::cos(t) / std::sqrt(t)); };
    QuadOptions opts;
    opts.abs_tol = 1e-300;
    opts.rel_tol = 1e-12;
    auto r = integrate_singular<std::complex<double>>(f, 1.0, Singularity{-0.5, 0.0}, opts);
    const double exact = 1.8090484758005441629; // int_0^1 cos(t)/sqrt(t) dt
    EXPECT_LE(std::abs(r.value.imag() / h - exact), 1e-11);
}

TEST(IntegrateSingular, Errors)
{
    auto inv = [](double t) { return 1.0 / t; };
    EXPECT_THROW(integrate_singular(inv, 1.0, -1.0, 1e-8), DomainError);
    EXPECT_THROW(integrate_singular(inv, 0.0, -0.5, 1e-8), DomainError);
    EXPECT_THROW(integrate_singular(inv, 1.0, -0.5, 0.0), DomainError);

    auto bad = [](double t) { return t > 0.5 ? std::nan("") : 1.0; };
    EXPECT_THROW(integrate_singular(bad, 1.0, 0.0, 1e-8), IntegrandFailure);

    // wildly oscillating integrand with a tiny budget
    QuadOptions opts;
    opts.abs_tol = 1e-14;
    opts.max_evaluations = 200;
    auto osc = [](double t) { return std::sin(1e4 * t); };
    try {
        integrate_singular<double>(osc, 1.0, Singularity{0.0, 0.0}, opts);
        FAIL() << "expected BudgetExceeded";
    } catch (const BudgetExceeded& e) {
        EXPECT_TRUE(std::isfinite(e.best_estimate()));
        EXPECT_GT(e.error_estimate(), 0.0);
    }
}

TEST(GaussKronrod, RuleExactness)
{
    double sumk = 0.0, sumg = 0.0;
    for (std::size_t j = 0; j < 10; ++j) {
        sumk += 2.0 * detail::kKronrodWeights[j];
    }
    sumk += detail::kKronrodWeights[10];
    for (double w : detail::kGaussWeights) {
        sumg += 2.0 * w;
    }
    EXPECT_NEAR(sumk, 2.0, 1e-15);
    EXPECT_NEAR(sumg, 2.0, 1e-15);
    // 21-point Kronrod integrates t^p exactly up to p = 31
    for (int p = 0; p <= 31; ++p) {
        auto f = [p](double t) { return std::pow(t, p); };
        auto seg = detail::gauss_kronrod<double>(f, 0.0, 1.0);
        EXPECT_NEAR(seg.value, 1.0 / (p + 1), 1e-15) << p;
    }
}

TEST(IntegrateInterval, SmoothIntegrand)
{
    auto r = integrate_interval([](double t) { return std::exp(t); }, 0.0, 2.0, QuadOptions{1e-14, 0.0, 100000});
    EXPECT_NEAR(r.value, std::exp(2.0) - 1.0, 1e-13);
    EXPECT_EQ(integrate_interval([](double) { return 1.0; }, 3.0, 3.0).value, 0.0);
}

} // namespace
} // namespace hidacur
