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
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "hidacur/schwartz.hpp"
#include "test_support.hpp"

namespace hidacur {
namespace {

using testing::cumulative_oracle;
using testing::random_test_function;

const double kH00 = std::pow(std::numbers::pi, -0.25);

TestFunction single(int d, int comp, int k, double c)
{
    std::vector<std::vector<double>> comps(static_cast<std::size_t>(d));
    comps[std::size_t(comp)].assign(std::size_t(k + 1), 0.0);
    comps[std::size_t(comp)][std::size_t(k)] = c;
    return TestFunction(comps);
}

TEST(HermiteFunction, MatchesIndependentOracle)
{
    for (unsigned k = 0; k < 25; ++k) {
        for (double t : {-6.0, -2.5, -0.3, 0.0, 0.7, 1.9, 4.0, 7.5}) {
            EXPECT_NEAR(hermite_function(k, t), testing::hermite_oracle(k, t), 1e-13) << "k=" << k << " t=" << t;
        }
    }
}

TEST(HermiteFunction, NoUnderflowCliffAtLargeArgument)
{
    // h_120 has its turning point near 15.5; at t = 40 it is tiny but the
    // recurrence must not collapse to an exact zero before t^2/2 > 745.
    const double v = hermite_function(120, 36.0);
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GT(std::abs(v), 0.0);
    EXPECT_LT(std::abs(v), 1e-100);
}

TEST(Eval, Examples)
{
    EXPECT_EQ(TestFunction(2).eval(0.3, 1), 0.0);
    EXPECT_NEAR(single(1, 0, 0, 1.0).eval(0.0, 0), kH00, 1e-15);
    EXPECT_NEAR(single(1, 0, 0, 1.0).eval(1.0, 0), kH00 * std::exp(-0.5), 1e-15);
}

TEST(Eval, IndexOutOfRange)
{
    TestFunction phi(2);
    EXPECT_THROW(phi.eval(0.0, 2), std::out_of_range);
    EXPECT_THROW(phi.eval(0.0, -1), std::out_of_range);
    EXPECT_THROW(phi.cumulative(0.5, 3), std::out_of_range);
}

TEST(Eval, RapidDecay)
{
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        auto phi = random_test_function(rng, 2, 12, 3.0);
        for (int i = 0; i < 2; ++i) {
            EXPECT_LT(std::abs(phi.eval(50.0, i)), 1e-8);
            EXPECT_LT(std::abs(phi.eval(-50.0, i)), 1e-8);
        }
    }
}

TEST(Norms, L2Examples)
{
    EXPECT_EQ(TestFunction(3).l2_norm(), 0.0);
    EXPECT_DOUBLE_EQ(single(1, 0, 0, 1.0).l2_norm(), 1.0);
    TestFunction phi({{3.0}, {0.0, 4.0}});
    EXPECT_DOUBLE_EQ(phi.l2_norm(), 5.0);
}

TEST(Norms, L2MatchesQuadratureOfSquare)
{
    std::mt19937_64 rng(5);
    auto phi = random_test_function(rng, 2, 8, 1.7);
    double sq = 0.0;
    for (int i = 0; i < 2; ++i) {
        sq += testing::fixed_quadrature([&](double t) { return std::pow(phi.eval(t, i), 2); }, -20.0, 20.0);
    }
    EXPECT_NEAR(std::sqrt(sq), phi.l2_norm(), 1e-12);
}

TEST(Norms, SupExamples)
{
    EXPECT_EQ(TestFunction(2).sup_norm(), 0.0);
    EXPECT_NEAR(single(1, 0, 0, 1.0).sup_norm(), kH00, 1e-12);
    // max of sqrt(2) pi^-1/4 t exp(-t^2/2) is at t = 1
    EXPECT_NEAR(single(1, 0, 1, 1.0).sup_norm(), std::sqrt(2.0) * kH00 * std::exp(-0.5), 1e-12);
    // the component with the larger peak wins
    EXPECT_NEAR(TestFunction({{0.5}, {0.0, -2.0}}).sup_norm(), 2.0 * std::sqrt(2.0) * kH00 * std::exp(-0.5), 1e-12);
}

TEST(Norms, SupDominatesPointValues)
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> tdist(-8.0, 8.0);
    for (int rep = 0; rep < 10; ++rep) {
        auto phi = random_test_function(rng, 3, 1 + rep * 2, 2.0);
        const double sup = phi.sup_norm();
        for (int s = 0; s < 1000; ++s) {
            const int i = int(rng() % 3);
            EXPECT_GE(sup, std::abs(phi.eval(tdist(rng), i)));
        }
    }
}

TEST(Norms, CombinedExamples)
{
    EXPECT_EQ(TestFunction(1).combined_norm(), 0.0);
    EXPECT_NEAR(single(1, 0, 0, 1.0).combined_norm(), std::sqrt(1.0 + 1.0 / std::sqrt(std::numbers::pi)), 1e-12);
}

TEST(Norms, Homogeneity)
{
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 10; ++rep) {
        auto phi = random_test_function(rng, 2, 6, 1.3);
        for (double lambda : {2.0, -0.5, 3.25}) {
            auto scaled = lambda * phi;
            EXPECT_NEAR(scaled.l2_norm(), std::abs(lambda) * phi.l2_norm(), 1e-12);
            EXPECT_NEAR(scaled.sup_norm(), std::abs(lambda) * phi.sup_norm(), 1e-12);
            EXPECT_NEAR(scaled.combined_norm(), std::abs(lambda) * phi.combined_norm(), 1e-12);
        }
    }
}

TEST(Norms, Parseval)
{
    std::mt19937_64 rng(13);
    for (int rep = 0; rep < 50; ++rep) {
        auto phi = random_test_function(rng, 1 + rep % 4, 1 + rep % 9, 0.1 + rep);
        double sq = 0.0;
        for (const auto& c : phi.components()) {
            for (double v : c) {
                sq += v * v;
            }
        }
        EXPECT_LE(std::abs(std::pow(phi.l2_norm(), 2) - sq), 1e-12 * std::max(1.0, sq));
    }
}

TEST(Cumulative, Examples)
{
    std::mt19937_64 rng(1);
    auto phi = random_test_function(rng, 2, 5);
    EXPECT_EQ(phi.cumulative(0.0, 0), 0.0);
    EXPECT_EQ(TestFunction(2).cumulative(1.7, 1), 0.0);
    // 40-digit quadrature of pi^-1/4 exp(-s^2/2) over [0, 1]
    EXPECT_NEAR(single(1, 0, 0, 1.0).cumulative(1.0, 0), 0.64268133721747558827, 1e-13);
    EXPECT_THROW(phi.cumulative(-0.1, 0), DomainError);
}

TEST(Cumulative, MatchesAntiderivativeRecurrence)
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> tdist(0.0, 12.0);
    for (int rep = 0; rep < 20; ++rep) {
        auto phi = random_test_function(rng, 2, 1 + rep, 1.0);
        for (int s = 0; s < 50; ++s) {
            const double t = tdist(rng);
            const int i = s % 2;
            EXPECT_NEAR(phi.cumulative(t, i), cumulative_oracle(phi, t, i), 1e-12) << "t=" << t;
        }
        // beyond the tabulated reach the value is the full integral
        EXPECT_NEAR(phi.cumulative(100.0, 0), cumulative_oracle(phi, 60.0, 0), 1e-12);
    }
}

TEST(Cumulative, Linearity)
{
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int rep = 0; rep < 20; ++rep) {
        auto phi = random_test_function(rng, 2, 7);
        auto psi = random_test_function(rng, 2, 4);
        const double a = u(rng), b = u(rng);
        auto combo = a * phi + b * psi;
        for (double t : {0.0, 0.1, 0.77, 1.0, 2.5, 9.0}) {
            for (int i = 0; i < 2; ++i) {
                EXPECT_NEAR(combo.cumulative(t, i), a * phi.cumulative(t, i) + b * psi.cumulative(t, i), 1e-10);
            }
        }
    }
}

TEST(TestFunctionJson, Binary64RoundTrip)
{
    std::mt19937_64 rng(23);
    auto phi = random_test_function(rng, 3, 6, 0.7);
    nlohmann::json j = phi;
    EXPECT_EQ(j.at("d").get<int>(), 3);
    auto back = nlohmann::json::parse(j.dump()).get<TestFunction>();
    ASSERT_EQ(back.dimension(), 3);
    for (int i = 0; i < 3; ++i) {
        auto a = phi.coefficients(i);
        auto b = back.coefficients(i);
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t k = 0; k < a.size(); ++k) {
            EXPECT_EQ(a[k], b[k]);
        }
    }
}

TEST(TestFunctionJson, RejectsInconsistentDimension)
{
    auto j = nlohmann::json::parse(R"({"d": 2, "components": [[1.0]]})");
    EXPECT_THROW(j.get<TestFunction>(), DomainError);
}

TEST(TestFunction, RejectsNonFinite)
{
    EXPECT_THROW(TestFunction({{1.0, std::nan("")}}), DomainError);
    EXPECT_THROW(TestFunction(std::vector<std::vector<double>>{}), DomainError);
}

} // namespace
} // namespace hidacur
