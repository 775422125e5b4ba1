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

// Monte Carlo estimates of the mollified current's S-transform from
// simulated Brownian paths.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numbers>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "hidacur/error.hpp"
#include "hidacur/random.hpp"
#include "hidacur/schwartz.hpp"
#include "hidacur/stransform.hpp"

namespace hidacur {

struct MCConfig {
    CurrentParams params;
    std::uint64_t paths = 1000;
    std::uint64_t steps = 1024;
    double eps2 = 0.01;
    std::uint64_t seed = 0;
    /// paths per work unit; part of the partitioning policy
    std::uint64_t block_size = 1024;

    void validate() const
    {
        params.validate();
        if (paths < 1 || steps < 1 || block_size < 1) {
            throw DomainError("MCConfig: paths, steps and block_size must be >= 1");
        }
        if (!(eps2 > 0.0) || !std::isfinite(eps2)) {
            throw DomainError("MCConfig: eps2 must be positive");
        }
    }

    std::uint64_t blocks() const { return (paths + block_size - 1) / block_size; }
    double dt() const { return params.T / double(steps); }
};

inline void to_json(nlohmann::json& j, const MCConfig& c)
{
    j = {{"params", c.params}, {"paths", c.paths}, {"steps", c.steps},
         {"eps2", c.eps2},     {"seed", c.seed},   {"block_size", c.block_size}};
}

inline void from_json(const nlohmann::json& j, MCConfig& c)
{
    c.params = j.at("params").get<CurrentParams>();
    c.paths = j.value("paths", c.paths);
    c.steps = j.value("steps", c.steps);
    c.eps2 = j.value("eps2", c.eps2);
    c.seed = j.value("seed", c.seed);
    c.block_size = j.value("block_size", c.block_size);
    c.validate();
}

/// Running mean and co-moment matrix of a fixed-length sample vector.
/// Merging uses the pairwise update of Chan, Golub and LeVeque.
class MomentAccumulator {
public:
    explicit MomentAccumulator(std::size_t dim = 0) : mean_(dim, 0.0), comoment_(dim * dim, 0.0) {}

    void add(const std::vector<double>& v)
    {
        const std::size_t D = mean_.size();
        ++n_;
        const double inv = 1.0 / double(n_);
        delta_.resize(D);
        for (std::size_t a = 0; a < D; ++a) {
            delta_[a] = v[a] - mean_[a];
            mean_[a] += delta_[a] * inv;
        }
        for (std::size_t a = 0; a < D; ++a) {
            const double after = v[a] - mean_[a];
            for (std::size_t b = 0; b < D; ++b) {
                comoment_[a * D + b] += after * delta_[b];
            }
        }
    }

    void merge(const MomentAccumulator& o)
    {
        if (o.n_ == 0) {
            return;
        }
        if (n_ == 0) {
            *this = o;
            return;
        }
        const std::size_t D = mean_.size();
        const double na = double(n_), nb = double(o.n_), n = na + nb;
        std::vector<double> delta(D);
        for (std::size_t a = 0; a < D; ++a) {
            delta[a] = o.mean_[a] - mean_[a];
        }
        for (std::size_t a = 0; a < D; ++a) {
            for (std::size_t b = 0; b < D; ++b) {
                comoment_[a * D + b] += o.comoment_[a * D + b] + delta[a] * delta[b] * na * nb / n;
            }
        }
        for (std::size_t a = 0; a < D; ++a) {
            mean_[a] += delta[a] * nb / n;
        }
        n_ += o.n_;
    }

    std::uint64_t count() const { return n_; }
    double mean(std::size_t a) const { return mean_[a]; }
    /// sample covariance
    double cov(std::size_t a, std::size_t b) const
    {
        return n_ > 1 ? comoment_[a * mean_.size() + b] / double(n_ - 1) : 0.0;
    }

private:
    std::uint64_t n_ = 0;
    std::vector<double> mean_;
    std::vector<double> comoment_;
    std::vector<double> delta_;
};

struct MCBlock {
    std::uint64_t index = 0;
    std::uint64_t paths = 0;
    std::vector<double> mean; // plain per-component mean of F_i W in this block
};

struct MCEstimate {
    /// control-variate estimate and its standard error
    std::vector<double> mean;
    std::vector<double> std_error;
    /// plain sample mean of F_i W
    std::vector<double> plain_mean;
    std::vector<double> plain_std_error;
    std::uint64_t paths = 0;
    /// (sum W)^2 / sum W^2
    double effective_sample_size = 0.0;
    MCConfig config;
    std::vector<MCBlock> blocks;
};

/// Body of the estimate; identical configs give byte-identical dumps.
inline void to_json(nlohmann::json& j, const MCEstimate& e)
{
    j = {{"mean", e.mean},
         {"stderr", e.std_error},
         {"plain_mean", e.plain_mean},
         {"plain_stderr", e.plain_std_error},
         {"N_effective", e.effective_sample_size},
         {"paths", e.paths},
         {"config", e.config}};
}

/// Per-block partial means and the running mean over blocks so far.
inline void write_block_csv(std::ostream& os, const MCEstimate& e)
{
    const std::size_t d = e.mean.size();
    os << "block,paths";
    for (std::size_t i = 0; i < d; ++i) {
        os << ",block_mean_" << i << ",running_mean_" << i;
    }
    os << '\n';
    os.precision(17);
    std::vector<double> sum(d, 0.0);
    std::uint64_t total = 0;
    for (const auto& b : e.blocks) {
        total += b.paths;
        os << b.index << ',' << total;
        for (std::size_t i = 0; i < d; ++i) {
            sum[i] += b.mean[i] * double(b.paths);
            os << ',' << b.mean[i] << ',' << sum[i] / double(total);
        }
        os << '\n';
    }
}

/// Worker count: HIDACUR_THREADS when set, otherwise the hardware count.
inline unsigned mc_thread_count()
{
    if (const char* env = std::getenv("HIDACUR_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) {
            return unsigned(v);
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace detail {

/// One Brownian path: normals come from the Philox stream keyed on
/// (seed, global path index), consumed in (step, component) order.
class PathSampler {
public:
    PathSampler(const MCConfig& cfg, std::uint64_t path) : stream_(cfg.seed, path), sd_(std::sqrt(cfg.dt())) {}

    double increment() { return sd_ * normal_(stream_); }

private:
    PhiloxStream stream_;
    ZigguratNormal normal_;
    double sd_;
};

inline std::vector<double> phi_table(const MCConfig& cfg, const TestFunction& phi)
{
    const int d = cfg.params.d;
    std::vector<double> tab(cfg.steps * std::size_t(d));
    for (std::uint64_t k = 0; k < cfg.steps; ++k) {
        for (int j = 0; j < d; ++j) {
            tab[k * std::size_t(d) + std::size_t(j)] = phi.eval(double(k) * cfg.dt(), j);
        }
    }
    return tab;
}

} // namespace detail

/// Increments of the paths in block `block`, laid out [path][step][component].
inline std::vector<double> simulate_increments(const MCConfig& cfg, std::uint64_t block)
{
    cfg.validate();
    if (block >= cfg.blocks()) {
        throw DomainError("simulate_increments: block index out of range");
    }
    const std::uint64_t first = block * cfg.block_size;
    const std::uint64_t last = std::min(cfg.paths, first + cfg.block_size);
    const std::size_t per_path = cfg.steps * std::size_t(cfg.params.d);
    std::vector<double> out;
    out.reserve((last - first) * per_path);
    for (std::uint64_t p = first; p < last; ++p) {
        detail::PathSampler s(cfg, p);
        for (std::size_t k = 0; k < per_path; ++k) {
            out.push_back(s.increment());
        }
    }
    return out;
}

/// sum_k p_eps2(x - B(t_k)) (B(t_{k+1}) - B(t_k)) for one path given its
/// increments [step][component]; left-point (Ito) evaluation.
inline std::vector<double> mollified_current_sample(const MCConfig& cfg, const std::vector<double>& increments)
{
    const int d = cfg.params.d;
    if (increments.size() != cfg.steps * std::size_t(d)) {
        throw DomainError("mollified_current_sample: expected steps * d increments");
    }
    const double log_norm = -0.5 * d * std::log(2.0 * std::numbers::pi * cfg.eps2);
    std::vector<double> B(std::size_t(d), 0.0), F(std::size_t(d), 0.0);
    for (std::uint64_t k = 0; k < cfg.steps; ++k) {
        double r2 = 0.0;
        for (int j = 0; j < d; ++j) {
            const double diff = cfg.params.x[std::size_t(j)] - B[std::size_t(j)];
            r2 += diff * diff;
        }
        const double p = std::exp(log_norm - r2 / (2.0 * cfg.eps2));
        for (int j = 0; j < d; ++j) {
            const double dB = increments[k * std::size_t(d) + std::size_t(j)];
            F[std::size_t(j)] += p * dB;
            B[std::size_t(j)] += dB;
        }
    }
    return F;
}

/// Expectation of the discretised estimator, computed exactly: by Girsanov,
/// sum_k phi_i(t_k) dt (2 pi (t_k + eps2))^(-d/2) exp(-|x - c_k|^2 / (2 (t_k + eps2)))
/// with c_k = sum_{m<k} phi(t_m) dt. A Riemann sum of s_current_mollified.
inline std::vector<double> mc_discrete_expectation(const MCConfig& cfg, const TestFunction& phi)
{
    cfg.validate();
    const int d = cfg.params.d;
    const double dt = cfg.dt();
    const auto tab = detail::phi_table(cfg, phi);
    std::vector<double> c(std::size_t(d), 0.0), out(std::size_t(d), 0.0);
    for (std::uint64_t k = 0; k < cfg.steps; ++k) {
        const double tau = double(k) * dt + cfg.eps2;
        double r2 = 0.0;
        for (int j = 0; j < d; ++j) {
            const double diff = cfg.params.x[std::size_t(j)] - c[std::size_t(j)];
            r2 += diff * diff;
        }
        const double g = std::exp(-0.5 * d * std::log(2.0 * std::numbers::pi * tau) - r2 / (2.0 * tau));
        for (int j = 0; j < d; ++j) {
            const double ph = tab[k * std::size_t(d) + std::size_t(j)];
            out[std::size_t(j)] += ph * dt * g;
            c[std::size_t(j)] += ph * dt;
        }
    }
    return out;
}

namespace detail {

// Control-variate estimate from merged moments of (Y_i, F_i, W - 1, G).
inline void finish_estimate(MCEstimate& est, const MomentAccumulator& all, int d)
{
    const double N = double(all.count());
    // regression on the controls X = (F_0.., W - 1, G), all of known mean 0
    const std::size_t m = std::size_t(d) + 2;
    auto xi = [&](std::size_t a) { return std::size_t(d) + a; };
    // Cholesky of cov(X); degenerate controls (phi = 0 makes W - 1 and G vanish)
    // are dropped
    std::vector<std::vector<double>> L(m, std::vector<double>(m, 0.0));
    std::vector<bool> active(m, true);
    for (std::size_t a = 0; a < m; ++a) {
        const double saa = all.cov(xi(a), xi(a));
        double s = saa;
        for (std::size_t k = 0; k < a; ++k) {
            s -= L[a][k] * L[a][k];
        }
        if (!(s > 1e-12 * saa) || !(saa > 0.0)) {
            active[a] = false;
            continue;
        }
        L[a][a] = std::sqrt(s);
        for (std::size_t r = a + 1; r < m; ++r) {
            double t = all.cov(xi(r), xi(a));
            for (std::size_t k = 0; k < a; ++k) {
                t -= L[r][k] * L[a][k];
            }
            L[r][a] = t / L[a][a];
        }
    }
    std::size_t used = 0;
    for (bool a : active) {
        used += a ? 1 : 0;
    }
    for (int i = 0; i < d; ++i) {
        const std::size_t yi = std::size_t(i);
        const double var_y = all.cov(yi, yi);
        est.plain_mean.push_back(all.mean(yi));
        est.plain_std_error.push_back(std::sqrt(var_y / N));
        std::vector<double> z(m, 0.0), beta(m, 0.0);
        for (std::size_t a = 0; a < m; ++a) {
            if (!active[a]) {
                continue;
            }
            double t = all.cov(xi(a), yi);
            for (std::size_t k = 0; k < a; ++k) {
                t -= L[a][k] * z[k];
            }
            z[a] = t / L[a][a];
        }
        for (std::size_t a = m; a-- > 0;) {
            if (!active[a]) {
                continue;
            }
            double t = z[a];
            for (std::size_t k = a + 1; k < m; ++k) {
                t -= L[k][a] * beta[k];
            }
            beta[a] = t / L[a][a];
        }
        double adjusted = all.mean(yi);
        double explained = 0.0;
        for (std::size_t a = 0; a < m; ++a) {
            adjusted -= beta[a] * all.mean(xi(a));
            explained += z[a] * z[a];
        }
        const double dof = std::max(1.0, N - 1.0 - double(used));
        const double resid = std::max(0.0, var_y - explained) * (N - 1.0) / dof;
        est.mean.push_back(adjusted);
        // when the controls explain Y exactly (phi = 0) only rounding is left
        const double floor = 16.0 * std::numeric_limits<double>::epsilon() * est.plain_std_error.back();
        est.std_error.push_back(std::max(std::sqrt(resid / N), floor));
    }
    const double mw = all.mean(2 * std::size_t(d)) + 1.0;
    const double vw = all.cov(2 * std::size_t(d), 2 * std::size_t(d)) * (N - 1.0) / N;
    est.effective_sample_size = N * mw * mw / (mw * mw + vw);
}

} // namespace detail

/// mc_s_transform for several mollifier variances over the same paths. Each
/// result equals mc_s_transform with cfg.eps2 set to that variance.
inline std::vector<MCEstimate> mc_s_transform_multi(const MCConfig& cfg, const std::vector<double>& eps2s,
                                                    const TestFunction& phi, unsigned threads = 0)
{
    cfg.validate();
    detail::check_dimension(cfg.params, phi);
    if (eps2s.empty()) {
        throw DomainError("mc_s_transform: need at least one eps2");
    }
    for (double e : eps2s) {
        if (!(e > 0.0) || !std::isfinite(e)) {
            throw DomainError("MCConfig: eps2 must be positive");
        }
    }
    const int d = cfg.params.d;
    const std::size_t ne = eps2s.size();
    const std::size_t D = 2 * std::size_t(d) + 2; // Y_i, F_i, W - 1, G
    const double dt = cfg.dt();
    const double sd = std::sqrt(dt);
    const auto tab = detail::phi_table(cfg, phi);
    double quad = 0.0;
    for (double v : tab) {
        quad += v * v * dt;
    }
    std::vector<double> log_norm(ne), inv2eps(ne);
    for (std::size_t e = 0; e < ne; ++e) {
        log_norm[e] = -0.5 * d * std::log(2.0 * std::numbers::pi * eps2s[e]);
        inv2eps[e] = 1.0 / (2.0 * eps2s[e]);
    }
    const auto& x = cfg.params.x;

    const std::uint64_t nblocks = cfg.blocks();
    // results[b * ne + e]
    std::vector<MomentAccumulator> results(nblocks * ne, MomentAccumulator(D));

    auto run_block = [&](std::uint64_t b) {
        std::vector<MomentAccumulator> acc(ne, MomentAccumulator(D));
        std::vector<double> B(static_cast<std::size_t>(d)), dB(static_cast<std::size_t>(d));
        std::vector<double> F(ne * std::size_t(d)), v(D), pk(ne);
        const ZigguratNormal normal;
        const std::uint64_t first = b * cfg.block_size;
        const std::uint64_t last = std::min(cfg.paths, first + cfg.block_size);
        for (std::uint64_t p = first; p < last; ++p) {
            PhiloxStream stream(cfg.seed, p);
            std::fill(B.begin(), B.end(), 0.0);
            std::fill(F.begin(), F.end(), 0.0);
            double G = 0.0;
            const double* row = tab.data();
            for (std::uint64_t k = 0; k < cfg.steps; ++k, row += d) {
                double r2 = 0.0;
                for (int j = 0; j < d; ++j) {
                    const double diff = x[std::size_t(j)] - B[std::size_t(j)];
                    r2 += diff * diff;
                }
                for (std::size_t e = 0; e < ne; ++e) {
                    const double arg = r2 * inv2eps[e];
                    pk[e] = arg < 745.0 ? std::exp(log_norm[e] - arg) : 0.0;
                }
                for (int j = 0; j < d; ++j) {
                    dB[std::size_t(j)] = sd * normal(stream);
                }
                for (int j = 0; j < d; ++j) {
                    const double inc = dB[std::size_t(j)];
                    for (std::size_t e = 0; e < ne; ++e) {
                        F[e * std::size_t(d) + std::size_t(j)] += pk[e] * inc;
                    }
                    G += row[j] * inc;
                    B[std::size_t(j)] += inc;
                }
            }
            const double W = std::exp(G - 0.5 * quad);
            for (std::size_t e = 0; e < ne; ++e) {
                for (int i = 0; i < d; ++i) {
                    const double f = F[e * std::size_t(d) + std::size_t(i)];
                    v[std::size_t(i)] = f * W;
                    v[std::size_t(d + i)] = f;
                }
                v[2 * std::size_t(d)] = W - 1.0;
                v[2 * std::size_t(d) + 1] = G;
                acc[e].add(v);
            }
        }
        for (std::size_t e = 0; e < ne; ++e) {
            results[b * ne + e] = std::move(acc[e]);
        }
    };

    const unsigned nthreads = unsigned(std::min<std::uint64_t>(nblocks, threads ? threads : mc_thread_count()));
    if (nthreads <= 1) {
        for (std::uint64_t b = 0; b < nblocks; ++b) {
            run_block(b);
        }
    } else {
        std::atomic<std::uint64_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < nthreads; ++w) {
            pool.emplace_back([&] {
                for (std::uint64_t b = next++; b < nblocks; b = next++) {
                    run_block(b);
                }
            });
        }
        for (auto& t : pool) {
            t.join();
        }
    }

    std::vector<MCEstimate> out(ne);
    for (std::size_t e = 0; e < ne; ++e) {
        MCEstimate& est = out[e];
        est.config = cfg;
        est.config.eps2 = eps2s[e];
        est.paths = cfg.paths;
        std::vector<MomentAccumulator> blocks;
        blocks.reserve(nblocks);
        for (std::uint64_t b = 0; b < nblocks; ++b) {
            const auto& r = results[b * ne + e];
            MCBlock blk;
            blk.index = b;
            blk.paths = r.count();
            for (int i = 0; i < d; ++i) {
                blk.mean.push_back(r.mean(std::size_t(i)));
            }
            est.blocks.push_back(std::move(blk));
            blocks.push_back(r);
        }
        // fixed pairwise reduction tree over block order
        for (std::size_t width = 1; width < blocks.size(); width *= 2) {
            for (std::size_t a = 0; a + width < blocks.size(); a += 2 * width) {
                blocks[a].merge(blocks[a + width]);
            }
        }
        detail::finish_estimate(est, blocks.front(), d);
    }
    return out;
}

/// Estimates E[F C(phi) exp(<w, phi>)] for the mollified current F.
///
/// The Wiener integral of phi splits into its parts on [0, T] and outside;
/// the outside part is independent of the path and is integrated out
/// exactly, leaving the weight W = exp(sum_k phi(t_k) dB_k - dt/2 sum_k |phi(t_k)|^2).
/// The reported mean uses F_i, W - 1 and G = sum_k phi(t_k) dB_k, all of
/// mean zero, as regression control variates; the plain mean is reported as
/// well. Blocks of paths are independent; their moments are merged in a
/// fixed pairwise order, so the result does not depend on the thread count.
inline MCEstimate mc_s_transform(const MCConfig& cfg, const TestFunction& phi, unsigned threads = 0)
{
    return mc_s_transform_multi(cfg, {cfg.eps2}, phi, threads).front();
}

} // namespace hidacur
