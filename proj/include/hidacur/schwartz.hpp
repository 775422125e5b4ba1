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

// Vector-valued Schwartz test functions represented in the orthonormal
// Hermite-function basis of L^2(R).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hidacur/error.hpp"
#include "hidacur/quad.hpp"

namespace hidacur {

namespace detail {

inline const double kPiQuarterInv = std::pow(std::numbers::pi, -0.25);

/// Calls visit(k, h_k(t)) for k = 0..n-1. The three-term recurrence is run in
/// a rescaled frame so that large |t| does not underflow h_0 before the higher
/// functions become significant.
template <class Visit>
void hermite_functions(double t, std::size_t n, Visit&& visit)
{
    if (n == 0) {
        return;
    }
    const double half_sq = 0.5 * t * t;
    // Carry values as v_k * exp(log_scale).
    double log_scale = 0.0;
    double prev = 0.0;
    double cur = kPiQuarterInv;
    if (half_sq < 600.0) {
        cur *= std::exp(-half_sq);
    } else {
        log_scale = -half_sq;
    }
    auto emit = [&](std::size_t k, double v) {
        if (log_scale == 0.0) {
            visit(k, v);
        } else {
            const double lv = std::log(std::abs(v)) + log_scale;
            visit(k, lv < -745.0 ? 0.0 : std::copysign(std::exp(lv), v));
        }
    };
    emit(0, cur);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double next = std::sqrt(2.0 / double(k + 1)) * t * cur - std::sqrt(double(k) / double(k + 1)) * prev;
        prev = cur;
        cur = next;
        if (log_scale != 0.0 && std::abs(cur) > 1e200) {
            prev *= 1e-200;
            cur *= 1e-200;
            log_scale += 200.0 * std::numbers::ln10;
            if (log_scale >= 0.0) {
                // back in representable range: fold the scale in
                const double f = std::exp(log_scale);
                prev *= f;
                cur *= f;
                log_scale = 0.0;
            }
        }
        emit(k + 1, cur);
    }
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
template <std::size_t N>
struct GaussLegendre {
    std::array<double, N> x{};
    std::array<double, N> w{};

    GaussLegendre()
    {
        for (std::size_t i = 0; i < (N + 1) / 2; ++i) {
            double z = std::cos(std::numbers::pi * (double(i) + 0.75) / (double(N) + 0.5));
            double dp = 0.0;
            for (int iter = 0; iter < 100; ++iter) {
                double p0 = 1.0, p1 = 0.0;
                for (std::size_t j = 0; j < N; ++j) {
                    const double p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * double(j) + 1.0) * z * p1 - double(j) * p2) / double(j + 1);
                }
                dp = double(N) * (z * p0 - p1) / (z * z - 1.0);
                const double dz = p0 / dp;
                z -= dz;
                if (std::abs(dz) < 1e-16) {
                    break;
                }
            }
            x[i] = -z;
            x[N - 1 - i] = z;
            w[i] = w[N - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
    }
};

inline const GaussLegendre<20>& gauss_legendre20()
{
    static const GaussLegendre<20> rule;
    return rule;
}

} // namespace detail

/// h_k(t), the k-th orthonormal Hermite function.
inline double hermite_function(std::size_t k, double t)
{
    double out = 0.0;
    detail::hermite_functions(t, k + 1, [&](std::size_t j, double v) {
        if (j == k) {
            out = v;
        }
    });
    return out;
}

/// Element of S_d spanned by finitely many Hermite functions per component.
///
/// Immutable after construction. The running integrals t -> int_0^t phi_i
/// are tabulated at construction on a dyadic grid covering the numerical
/// support, so `cumulative` is a table lookup plus one short Gauss-Legendre
/// panel and is safe to call concurrently.
class TestFunction {
public:
    TestFunction() : TestFunction(1) {}

    /// The zero function in dimension d.
    explicit TestFunction(int d)
    {
        if (d < 1) {
            throw DomainError("TestFunction: dimension must be >= 1");
        }
        components_.assign(std::size_t(d), {});
        build_cache();
    }

    explicit TestFunction(std::vector<std::vector<double>> components) : components_(std::move(components))
    {
        if (components_.empty()) {
            throw DomainError("TestFunction: dimension must be >= 1");
        }
        for (const auto& c : components_) {
            for (double v : c) {
                if (!std::isfinite(v)) {
                    throw DomainError("TestFunction: coefficients must be finite");
                }
            }
        }
        build_cache();
    }

    int dimension() const noexcept { return int(components_.size()); }

    std::span<const double> coefficients(int i) const { return components_.at(check_index(i)); }

    const std::vector<std::vector<double>>& components() const noexcept { return components_; }

    /// Largest number of basis functions used by any component.
    std::size_t degree_bound() const noexcept
    {
        std::size_t n = 0;
        for (const auto& c : components_) {
            n = std::max(n, c.size());
        }
        return n;
    }

    /// phi_i(t) for a 0-based component index.
    double eval(double t, int i) const
    {
        const auto& c = components_.at(check_index(i));
        double sum = 0.0;
        detail::hermite_functions(t, c.size(), [&](std::size_t k, double v) { sum += c[k] * v; });
        return sum;
    }

    /// int_0^t phi_i(s) ds for t >= 0.
    double cumulative(double t, int i) const
    {
        const auto idx = check_index(i);
        if (!(t >= 0.0)) {
            throw DomainError("cumulative: t must be >= 0");
        }
        const auto& nodes = cache_->nodes[idx];
        if (t >= cache_->reach) {
            return nodes.back();
        }
        const auto cell = std::size_t(t / cache_->step);
        const double a = double(cell) * cache_->step;
        return nodes[cell] + panel_integral(a, t, idx);
    }

    /// Euclidean norm of the coefficients, equal to the L^2 norm by Parseval.
    double l2_norm() const
    {
        double sum = 0.0;
        for (const auto& c : components_) {
            for (double v : c) {
                sum += v * v;
            }
        }
        return std::sqrt(sum);
    }

    /// Upper estimate of sup_t max_i |phi_i(t)|.
    ///
    /// A grid fine relative to the local oscillation length brackets every
    /// extremum; the best candidates are refined by golden-section search.
    /// Outside the bracketing interval each Hermite function is monotone, so
    /// sum_k |c_k h_k(L)| bounds the tail. The refined value is within about
    /// 1e-12 of the true supremum.
    double sup_norm() const
    {
        const double reach = bracket();
        const double grid = std::min(0.05, 0.25 / std::sqrt(2.0 * double(degree_bound()) + 1.0));
        const auto n = std::size_t(std::ceil(2.0 * reach / grid));
        double best = 0.0;
        for (int i = 0; i < dimension(); ++i) {
            std::vector<double> vals(n + 1);
            for (std::size_t j = 0; j <= n; ++j) {
                vals[j] = std::abs(eval(-reach + double(j) * grid, i));
            }
            const double grid_max = *std::max_element(vals.begin(), vals.end());
            best = std::max(best, grid_max);
            for (std::size_t j = 0; j <= n; ++j) {
                const double left = j > 0 ? vals[j - 1] : -1.0;
                const double right = j < n ? vals[j + 1] : -1.0;
                if (vals[j] >= left && vals[j] >= right && vals[j] >= 0.5 * grid_max) {
                    const double tc = -reach + double(j) * grid;
                    best = std::max(best, refine_max(i, tc - grid, tc + grid));
                }
            }
            double tail = 0.0;
            const auto& c = components_[std::size_t(i)];
            detail::hermite_functions(reach, c.size(), [&](std::size_t k, double v) { tail += std::abs(c[k] * v); });
            best = std::max(best, tail);
        }
        return best;
    }

    /// sqrt(|phi|^2 + |phi|_inf^2).
    double combined_norm() const
    {
        const double l2 = l2_norm();
        const double sup = sup_norm();
        return std::sqrt(l2 * l2 + sup * sup);
    }

    TestFunction scaled(double lambda) const
    {
        TestFunction out = *this;
        for (auto& c : out.components_) {
            for (double& v : c) {
                v *= lambda;
            }
        }
        auto cache = std::make_shared<Cache>(*cache_);
        for (auto& nodes : cache->nodes) {
            for (double& v : nodes) {
                v *= lambda;
            }
        }
        out.cache_ = std::move(cache);
        return out;
    }

    friend TestFunction operator*(double lambda, const TestFunction& f) { return f.scaled(lambda); }

    friend TestFunction operator+(const TestFunction& f, const TestFunction& g)
    {
        if (f.dimension() != g.dimension()) {
            throw DomainError("TestFunction: dimension mismatch in sum");
        }
        std::vector<std::vector<double>> comps(f.components_.size());
        for (std::size_t i = 0; i < comps.size(); ++i) {
            const auto& a = f.components_[i];
            const auto& b = g.components_[i];
            comps[i].assign(std::max(a.size(), b.size()), 0.0);
            for (std::size_t k = 0; k < a.size(); ++k) {
                comps[i][k] += a[k];
            }
            for (std::size_t k = 0; k < b.size(); ++k) {
                comps[i][k] += b[k];
            }
        }
        return TestFunction(std::move(comps));
    }

    /// Half-width beyond which every basis function in use is monotone and
    /// below 1e-30 relative to its peak.
    double bracket() const { return std::sqrt(2.0 * double(degree_bound()) + 1.0) + 12.0; }

private:
    struct Cache {
        double step = 0.25;
        double reach = 0.0;
        std::vector<std::vector<double>> nodes;
    };

    std::size_t check_index(int i) const
    {
        if (i < 0 || i >= dimension()) {
            throw std::out_of_range("TestFunction: component index " + std::to_string(i) + " out of range [0, " +
                                    std::to_string(dimension()) + ")");
        }
        return std::size_t(i);
    }

    double panel_integral(double a, double b, std::size_t i) const
    {
        if (b <= a) {
            return 0.0;
        }
        const auto& rule = detail::gauss_legendre20();
        const double c = 0.5 * (a + b);
        const double h = 0.5 * (b - a);
        double sum = 0.0;
        for (std::size_t j = 0; j < rule.x.size(); ++j) {
            sum += rule.w[j] * eval(c + h * rule.x[j], int(i));
        }
        return h * sum;
    }

    void build_cache()
    {
        auto cache = std::make_shared<Cache>();
        const double freq = std::sqrt(2.0 * double(degree_bound()) + 1.0);
        double step = 0.25;
        while (step * freq > 1.0) {
            step *= 0.5;
        }
        cache->step = step;
        const auto cells = std::size_t(std::ceil(bracket() / step));
        cache->reach = double(cells) * step;
        cache->nodes.resize(components_.size());
        QuadOptions opts;
        opts.abs_tol = 1e-15;
        opts.rel_tol = 1e-14;
        for (std::size_t i = 0; i < components_.size(); ++i) {
            auto& nodes = cache->nodes[i];
            nodes.assign(cells + 1, 0.0);
            if (components_[i].empty()) {
                continue;
            }
            auto f = [&](double t) { return eval(t, int(i)); };
            for (std::size_t c = 0; c < cells; ++c) {
                const double a = double(c) * step;
                nodes[c + 1] = nodes[c] + integrate_interval(f, a, a + step, opts).value;
            }
        }
        cache_ = std::move(cache);
    }

    double refine_max(int i, double lo, double hi) const
    {
        const double invphi = 0.5 * (std::sqrt(5.0) - 1.0);
        auto g = [&](double t) { return std::abs(eval(t, i)); };
        double a = lo, b = hi;
        double c = b - invphi * (b - a), d = a + invphi * (b - a);
        double gc = g(c), gd = g(d);
        for (int iter = 0; iter < 80 && b - a > 1e-13; ++iter) {
            if (gc > gd) {
                b = d;
                d = c;
                gd = gc;
                c = b - invphi * (b - a);
                gc = g(c);
            } else {
                a = c;
                c = d;
                gc = gd;
                d = a + invphi * (b - a);
                gd = g(d);
            }
        }
        return std::max({gc, gd, g(0.5 * (a + b))});
    }

    std::vector<std::vector<double>> components_;
    std::shared_ptr<const Cache> cache_;
};

// Free-function spellings of the module operations.

inline double eval(const TestFunction& phi, double t, int i) { return phi.eval(t, i); }
inline double l2_norm(const TestFunction& phi) { return phi.l2_norm(); }
inline double sup_norm(const TestFunction& phi) { return phi.sup_norm(); }
inline double combined_norm(const TestFunction& phi) { return phi.combined_norm(); }
inline double cumulative(const TestFunction& phi, double t, int i) { return phi.cumulative(t, i); }

/// JSON form {"d": d, "components": [[c_00, c_01, ...], ...]}.
inline void to_json(nlohmann::json& j, const TestFunction& phi)
{
    j = nlohmann::json{{"d", phi.dimension()}, {"components", phi.components()}};
}

inline void from_json(const nlohmann::json& j, TestFunction& phi)
{
    auto comps = j.at("components").get<std::vector<std::vector<double>>>();
    if (j.contains("d") && j.at("d").get<int>() != int(comps.size())) {
        throw DomainError("TestFunction JSON: d does not match number of components");
    }
    phi = TestFunction(std::move(comps));
}

} // namespace hidacur
