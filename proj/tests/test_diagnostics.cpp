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
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "hidacur/diagnostics.hpp"
#include "hidacur/special.hpp"

namespace hidacur {
namespace {

std::vector<double> decades(int from, int to)
{
    std::vector<double> out;
    for (int k = from; k <= to; ++k) {
        out.push_back(std::pow(10.0, -k));
    }
    return out;
}

TEST(DivergenceScan, OneDimensionConverges)
{
    const auto rep = divergence_scan(1, 1.0, decades(2, 8));
    EXPECT_EQ(rep.verdict, Verdict::convergent);
    EXPECT_EQ(rep.model, "power");
    EXPECT_NEAR(rep.power_limit, 2.0, 1e-9);
    EXPECT_NEAR(rep.exponent, 0.5, 1e-6);
    EXPECT_NEAR(rep.masses.back(), 2.0, 1e-3);
}

TEST(DivergenceScan, OneDimensionLimitScalesWithSqrtT)
{
    for (double T : {0.25, 4.0, 9.0}) {
        std::vector<double> grid;
        for (double c : decades(2, 8)) {
            grid.push_back(c * T);
        }
        const auto rep = divergence_scan(1, T, grid);
        EXPECT_EQ(rep.verdict, Verdict::convergent);
        EXPECT_NEAR(rep.power_limit, 2.0 * std::sqrt(T), 1e-9 * std::sqrt(T));
    }
}

TEST(DivergenceScan, TwoDimensionsLogarithmic)
{
    const auto rep = divergence_scan(2, 1.0, decades(2, 8));
    EXPECT_EQ(rep.verdict, Verdict::divergent);
    EXPECT_EQ(rep.model, "log");
    EXPECT_NEAR(rep.log_slope, 1.0, 0.01);
    for (std::size_t k = 0; k < rep.cutoffs.size(); ++k) {
        EXPECT_NEAR(rep.masses[k], std::log(1.0 / rep.cutoffs[k]), 1e-12);
    }
}

TEST(DivergenceScan, ThreeDimensionsPowerLaw)
{
    const auto rep = divergence_scan(3, 1.0, decades(2, 8));
    EXPECT_EQ(rep.verdict, Verdict::divergent);
    EXPECT_EQ(rep.model, "power");
    EXPECT_NEAR(rep.exponent, -0.5, 0.02);
    EXPECT_NEAR(rep.power_coefficient, 2.0, 0.05);
}

TEST(DivergenceScan, ClassificationAcrossDimensions)
{
    for (int d = 1; d <= 6; ++d) {
        const auto rep = divergence_scan(d, 1.0, decades(2, 8));
        EXPECT_EQ(rep.verdict, d == 1 ? Verdict::convergent : Verdict::divergent) << d;
        if (d >= 3) {
            EXPECT_NEAR(rep.exponent, 1.0 - 0.5 * d, 0.02) << d;
        }
        if (d == 2) {
            EXPECT_EQ(rep.model, "log");
        }
    }
}

TEST(DivergenceScan, MassesIncreaseAsCutoffShrinks)
{
    for (int d = 1; d <= 6; ++d) {
        const auto rep = divergence_scan(d, 2.0, decades(1, 9));
        for (std::size_t k = 1; k < rep.masses.size(); ++k) {
            EXPECT_GT(rep.masses[k], rep.masses[k - 1]);
        }
    }
}

TEST(DivergenceScan, VerdictConsistentWithModel)
{
    for (int d = 1; d <= 6; ++d) {
        for (int K : {4, 5, 7, 12}) {
            const auto rep = divergence_scan(d, 1.0, decades(1, K));
            const bool unbounded = rep.model == "log" || rep.exponent < 0.0;
            EXPECT_EQ(rep.verdict == Verdict::divergent, unbounded);
            EXPECT_GE(rep.tail_points, 4u);
            EXPECT_LE(rep.tail_points, std::size_t(K));
        }
    }
}

TEST(DivergenceScan, MalformedGrids)
{
    EXPECT_THROW(divergence_scan(1, 1.0, {0.1, 0.01, 0.001}), DomainError);
    EXPECT_THROW(divergence_scan(1, 1.0, {0.1, 0.01, 0.01, 0.001}), DomainError);
    EXPECT_THROW(divergence_scan(1, 1.0, {0.001, 0.01, 0.1, 0.5}), DomainError);
    EXPECT_THROW(divergence_scan(1, 1.0, {1.5, 0.1, 0.01, 0.001}), DomainError);
    EXPECT_THROW(divergence_scan(1, 1.0, {0.1, 0.01, 0.001, 0.0}), DomainError);
    EXPECT_THROW(divergence_scan(0, 1.0, decades(1, 5)), DomainError);
    EXPECT_THROW(divergence_scan(2, -1.0, decades(1, 5)), DomainError);
}

TEST(DivergenceScan, NeverContradictsSingularMass)
{
    // away from the origin the damped mass is finite in every dimension and
    // tends to the d = 1 limit 2 sqrt(T) as |x| -> 0
    for (int d = 1; d <= 6; ++d) {
        for (double r : {0.1, 0.5, 1.0, 2.0}) {
            const double m = singular_mass_closed(d, r, 1.0);
            EXPECT_TRUE(std::isfinite(m));
            EXPECT_GT(m, 0.0);
        }
    }
    const auto rep = divergence_scan(1, 1.0, decades(2, 8));
    EXPECT_NEAR(singular_mass_closed(1, 1e-6, 1.0), rep.power_limit, 1e-5);
}

TEST(DivergenceScan, JsonAndCsv)
{
    const auto rep = divergence_scan(2, 1.0, decades(2, 6));
    const nlohmann::json j = rep;
    EXPECT_EQ(j.at("verdict"), "divergent");
    EXPECT_EQ(j.at("model"), "log");
    EXPECT_EQ(j.at("masses").size(), 5u);
    std::ostringstream os;
    write_csv(os, rep);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "delta,mass");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
    }
    EXPECT_EQ(rows, 5);
}

} // namespace
} // namespace hidacur
