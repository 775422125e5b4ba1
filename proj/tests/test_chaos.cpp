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
#include <random>

#include <gtest/gtest.h>

#include "hidacur/chaos.hpp"
#include "test_support.hpp"

namespace hidacur {
namespace {

using testing::cumulative_oracle;
using testing::random_test_function;

TestFunction h0(int d = 1, int comp = 0)
{
    std::vector<std::vector<double>> c(static_cast<std::size_t>(d));
    c[std::size_t(comp)] = {1.0};
    return TestFunction(c);
}

std::vector<double> random_point(std::mt19937_64& rng, int d, double lo, double hi)
{
    std::normal_distribution<double> n;
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> x(static_cast<std::size_t>(d));
    double s = 0.0;
    for (auto& v : x) {
        v = n(rng);
        s += v * v;
    }
    for (auto& v : x) {
        v *= u(rng) / std::sqrt(s);
    }
    return x;
}

TEST(ExtractChaos, OrderZeroOfCurrentVanishes)
{
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 12; ++rep) {
        const int d = 1 + rep % 3;
        const auto x = rep < 3 ? std::vector<double>{0.0} : random_point(rng, d, 0.3, 2.0);
        const CurrentParams p(x, 0.5 + 0.2 * rep);
        auto phi = random_test_function(rng, p.d, 4);
        for (int i = 0; i < p.d; ++i) {
            EXPECT_EQ(extract_chaos_pairing(current_functional(p, i), phi, 0).value, 0.0);
        }
    }
}

TEST(ExtractChaos, FirstOrderOfDonsker)
{
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 10; ++rep) {
        auto phi = random_test_function(rng, 1, 5);
        const double x = -1.5 + 0.3 * rep, t = 0.2 + 0.15 * rep;
        const double expect = std::exp(-x * x / (2.0 * t)) / std::sqrt(2.0 * std::numbers::pi * t) * (x / t) *
                              cumulative_oracle(phi, t, 0);
        const auto got = extract_chaos_pairing(donsker_functional({x}, t), phi, 1);
        EXPECT_NEAR(got.value, expect, 1e-12);
    }
}

TEST(ExtractChaos, FirstOrderOfCurrentMatchesClosedForm)
{
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 12; ++rep) {
        const int d = 1 + rep % 3;
        const CurrentParams p(random_point(rng, d, 0.3, 2.0), 0.5 + 0.1 * rep);
        auto phi = random_test_function(rng, d, 4);
        for (int i = 0; i < d; ++i) {
            const auto got = extract_chaos_pairing(current_functional(p, i), phi, 1);
            EXPECT_NEAR(got.value, first_chaos_pairing_closed(p, phi, i), 1e-8);
            EXPECT_LE(std::abs(got.cross_check), 1e-9);
        }
    }
}

TEST(FirstChaosClosed, OriginInOneDimension)
{
    // 40-digit reference of (2 pi)^(-1/2) int_0^1 t^(-1/2) h_0(t) dt
    const CurrentParams p({0.0}, 1.0);
    EXPECT_NEAR(first_chaos_pairing_closed(p, h0(), 0), 0.54682852730151098745, 1e-12);
    const double oracle = testing::fixed_quadrature(
        [](double u) { return 2.0 * testing::hermite_oracle(0, u * u) / std::sqrt(2.0 * std::numbers::pi); }, 0.0,
        1.0);
    EXPECT_NEAR(oracle, 0.54682852730151098745, 1e-13);
    const auto ex = extract_chaos_pairing(current_functional(p, 0), h0(), 1);
    EXPECT_NEAR(ex.value, 0.54682852730151098745, 1e-10);
}

TEST(FirstChaosClosed, ZeroAndNonexistence)
{
    EXPECT_EQ(first_chaos_pairing_closed(CurrentParams({1.0, 2.0}, 1.0), TestFunction(2), 1), 0.0);
    EXPECT_THROW(first_chaos_pairing_closed(CurrentParams({0.0, 0.0}, 1.0), h0(2), 0), NonexistenceError);
    EXPECT_THROW(first_chaos_kernel(CurrentParams({0.0, 0.0, 0.0}, 1.0), 0), NonexistenceError);
    EXPECT_THROW(first_chaos_kernel(CurrentParams({1.0}, 1.0), 1), std::out_of_range);
}

TEST(SecondChaosClosed, OrthogonalDirectionVanishes)
{
    const CurrentParams p({0.0, 1.0}, 1.0);
    std::mt19937_64 rng(4);
    auto raw = random_test_function(rng, 1, 4);
    const TestFunction phi({std::vector<double>(raw.coefficients(0).begin(), raw.coefficients(0).end()), {}});
    for (auto conv : {SecondChaosConvention::paper, SecondChaosConvention::derivative}) {
        EXPECT_NEAR(second_chaos_pairing_closed(p, phi, 0, conv), 0.0, 1e-15);
        EXPECT_EQ(second_chaos_pairing_closed(CurrentParams({0.3, 1.0}, 1.0), TestFunction(2), 1, conv), 0.0);
    }
}

TEST(SecondChaosClosed, DerivativeConventionMatchesExtraction)
{
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 9; ++rep) {
        const int d = 1 + rep % 3;
        const CurrentParams p(random_point(rng, d, 0.3, 2.0), 0.5 + 0.15 * rep);
        auto phi = random_test_function(rng, d, 4);
        for (int i = 0; i < d; ++i) {
            const double derivative = second_chaos_pairing_closed(p, phi, i, SecondChaosConvention::derivative);
            const double paper = second_chaos_pairing_closed(p, phi, i, SecondChaosConvention::paper);
            const auto got = extract_chaos_pairing(current_functional(p, i), phi, 2);
            EXPECT_NEAR(got.value, derivative, 1e-6);
            // the `paper` kernel is -1/2 of the Taylor coefficient
            EXPECT_NEAR(derivative, -2.0 * paper, 1e-13 * std::max(1.0, std::abs(derivative)));
        }
    }
}

TEST(SecondChaosClosed, Nonexistence)
{
    EXPECT_THROW(second_chaos_pairing_closed(CurrentParams({0.0, 0.0}, 1.0), h0(2), 0,
                                             SecondChaosConvention::derivative),
                 NonexistenceError);
    EXPECT_EQ(second_chaos_pairing_closed(CurrentParams({0.0}, 1.0), h0(), 0, SecondChaosConvention::paper), 0.0);
}

TEST(ExtractChaos, Homogeneity)
{
    std::mt19937_64 rng(6);
    for (int rep = 0; rep < 4; ++rep) {
        const int d = 1 + rep % 2;
        const CurrentParams p(random_point(rng, d, 0.5, 1.5), 1.0);
        auto phi = random_test_function(rng, d, 3);
        const auto F = current_functional(p, 0);
        for (int n : {1, 2}) {
            const double base = extract_chaos_pairing(F, phi, n).value;
            for (double lambda : {2.0, -0.5}) {
                const double scaled = extract_chaos_pairing(F, lambda * phi, n).value;
                EXPECT_NEAR(scaled, std::pow(lambda, n) * base, 1e-8) << n << " " << lambda;
            }
        }
    }
}

TEST(ExtractChaos, TruncatedReconstructionWithinRemainderBound)
{
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 3; ++rep) {
        const int d = 1 + rep;
        const CurrentParams p(random_point(rng, d, 0.5, 1.5), 1.0);
        auto raw = random_test_function(rng, d, 3);
        const auto phi = (0.1 / raw.combined_norm()) * raw;
        const auto F = current_functional(p, 0);
        double partial = 0.0;
        for (int n = 0; n <= 3; ++n) {
            partial += extract_chaos_pairing(F, phi, n).value;
        }
        const double target = F(1.0, phi).real();
        std::vector<double> radii;
        for (double rho : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
            radii.push_back(rho / phi.combined_norm());
        }
        const auto fit = fit_ufunctional_bound(F, phi, radii, 16);
        // the fitted growth is only known up to the largest sampled radius
        const double bound = taylor_remainder_bound(fit.C1, fit.C2, phi.combined_norm(), 3, 1.0, radii.back());
        EXPECT_LE(std::abs(target - partial), bound) << rep;
        EXPECT_LT(bound, 1e-2);
    }
}

TEST(ExtractChaos, UnstableDerivativeDetected)
{
    const UFunctional conj_fn{[](cplx z, const TestFunction&) { return std::conj(z); }, "conj"};
    EXPECT_THROW(extract_chaos_pairing(conj_fn, h0(), 1), UnstableDerivative);
    const UFunctional kink{[](cplx z, const TestFunction&) { return cplx(std::abs(z), 0.0); }, "abs"};
    EXPECT_THROW(extract_chaos_pairing(kink, h0(), 2), UnstableDerivative);
    EXPECT_THROW(extract_chaos_pairing(kink, h0(), -1), DomainError);
}

TEST(ExtractChaos, PolynomialCoefficients)
{
    // U(s) = 1 + 2s - 3s^2 + s^3 / 2 along any ray
    const UFunctional poly{[](cplx z, const TestFunction& phi) {
                               const double n = phi.combined_norm();
                               const cplx s = z * n;
                               return 1.0 + 2.0 * s - 3.0 * s * s + 0.5 * s * s * s;
                           },
                           "poly"};
    const auto phi = (1.0 / h0().combined_norm()) * h0();
    EXPECT_NEAR(extract_chaos_pairing(poly, phi, 0).value, 1.0, 1e-15);
    EXPECT_NEAR(extract_chaos_pairing(poly, phi, 1).value, 2.0, 1e-12);
    EXPECT_NEAR(extract_chaos_pairing(poly, phi, 2).value, -3.0, 1e-8);
    EXPECT_NEAR(extract_chaos_pairing(poly, phi, 3).value, 0.5, 1e-6);
}

TEST(TaylorRemainder, DecreasesWithOrder)
{
    double prev = taylor_remainder_bound(1.0, 0.5, 0.1, 0);
    for (int N = 1; N < 8; ++N) {
        const double b = taylor_remainder_bound(1.0, 0.5, 0.1, N);
        EXPECT_LT(b, prev);
        prev = b;
    }
    EXPECT_THROW(taylor_remainder_bound(1.0, 0.5, 0.1, 2, 0.0), DomainError);
    EXPECT_THROW(taylor_remainder_bound(1.0, 0.5, 0.1, 2, 1.0, 0.5), DomainError);
    // a bounded fit cannot be extrapolated past the sampled radius
    EXPECT_GT(taylor_remainder_bound(2.0, 0.0, 1.0, 3, 1.0, 10.0), 2.0 * std::pow(0.1, 4));
}

TEST(FiniteRankKernel, ShapesAndJson)
{
    const CurrentParams p({1.0, -0.5}, 2.0);
    const auto k1 = first_chaos_kernel(p, 1);
    EXPECT_EQ(k1.atoms.size(), 1u);
    EXPECT_DOUBLE_EQ(k1.power, -1.0);
    EXPECT_NEAR(k1.density(1.0), std::exp(-1.25 / 2.0) / (2.0 * std::numbers::pi), 1e-15);
    const auto k2 = second_chaos_kernel(p, 0, SecondChaosConvention::paper);
    EXPECT_EQ(k2.atoms.size(), 2u);
    EXPECT_DOUBLE_EQ(k2.power, -2.0);
    EXPECT_NEAR(k2.coefficient, -0.25 / (2.0 * std::numbers::pi), 1e-15);
    const nlohmann::json j = k2;
    EXPECT_EQ(j.at("order"), 2);
    EXPECT_EQ(j.at("atoms")[0], "eta(x)delta");
}

} // namespace
} // namespace hidacur
