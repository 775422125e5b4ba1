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

// Counter-based random numbers: Philox4x32-10 and a per-stream engine that
// satisfies UniformRandomBitGenerator.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>

namespace hidacur {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., SC11).
inline PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key) noexcept
{
    constexpr std::uint64_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
    std::uint32_t c0 = ctr[0], c1 = ctr[1], c2 = ctr[2], c3 = ctr[3];
    std::uint32_t k0 = key[0], k1 = key[1];
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = kM0 * c0;
        const std::uint64_t p1 = kM1 * c2;
        c0 = std::uint32_t(p1 >> 32) ^ c1 ^ k0;
        c2 = std::uint32_t(p0 >> 32) ^ c3 ^ k1;
        c1 = std::uint32_t(p1);
        c3 = std::uint32_t(p0);
        k0 += kW0;
        k1 += kW1;
    }
    return {c0, c1, c2, c3};
}

namespace detail {

inline constexpr std::size_t kPhiloxLanes = 8;

/// philox4x32 on kPhiloxLanes consecutive counters {c0 + l, c1, c2, c3};
/// independent lanes keep the multipliers busy.
inline void philox4x32_lanes(std::uint32_t c0, std::uint32_t c1, std::uint32_t c2, std::uint32_t c3, PhiloxKey key,
                             std::array<std::uint32_t, 4 * kPhiloxLanes>& out) noexcept
{
    constexpr std::size_t Lanes = kPhiloxLanes;
    constexpr std::uint64_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
    std::array<std::uint32_t, Lanes> x0, x1, x2, x3;
    for (std::size_t l = 0; l < Lanes; ++l) {
        x0[l] = c0 + std::uint32_t(l);
        x1[l] = c1;
        x2[l] = c2;
        x3[l] = c3;
    }
    std::uint32_t k0 = key[0], k1 = key[1];
#pragma GCC unroll 10
    for (int round = 0; round < 10; ++round) {
#pragma GCC unroll 8
        for (std::size_t l = 0; l < Lanes; ++l) {
            const std::uint64_t p0 = kM0 * x0[l];
            const std::uint64_t p1 = kM1 * x2[l];
            x0[l] = std::uint32_t(p1 >> 32) ^ x1[l] ^ k0;
            x2[l] = std::uint32_t(p0 >> 32) ^ x3[l] ^ k1;
            x1[l] = std::uint32_t(p1);
            x3[l] = std::uint32_t(p0);
        }
        k0 += kW0;
        k1 += kW1;
    }
    for (std::size_t l = 0; l < Lanes; ++l) {
        out[4 * l] = x0[l];
        out[4 * l + 1] = x1[l];
        out[4 * l + 2] = x2[l];
        out[4 * l + 3] = x3[l];
    }
}

} // namespace detail

/// Stream of 64-bit words for one (seed, stream id) pair. Word n is made of
/// output words 2(n mod 2), 2(n mod 2) + 1 of
/// philox4x32({n / 2 mod 2^32, n / 2^33, id_lo, id_hi}, seed), so every word
/// is addressable and distinct streams never overlap.
class PhiloxStream {
public:
    using result_type = std::uint64_t;

    PhiloxStream(std::uint64_t seed, std::uint64_t stream) noexcept
        : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)}, stream_(stream)
    {
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept
    {
        std::size_t slot = std::size_t(index_ % kWords);
        if (slot == 0 || !filled_) {
            refill();
        }
        ++index_;
        return (std::uint64_t(buffer_[2 * slot + 1]) << 32) | buffer_[2 * slot];
    }

    /// Moves to word n of the stream.
    void seek(std::uint64_t n) noexcept
    {
        index_ = n;
        filled_ = false;
    }

    std::uint64_t position() const noexcept { return index_; }

private:
    static constexpr std::size_t kLanes = detail::kPhiloxLanes;
    static constexpr std::size_t kWords = 2 * kLanes;

    void refill() noexcept
    {
        // first block of the batch holding word index_
        const std::uint64_t block = (index_ - index_ % kWords) / 2;
        const auto lo = std::uint32_t(block);
        if (lo <= std::numeric_limits<std::uint32_t>::max() - kLanes) {
            detail::philox4x32_lanes(lo, std::uint32_t(block >> 32), std::uint32_t(stream_),
                                             std::uint32_t(stream_ >> 32), key_, buffer_);
        } else {
            for (std::size_t l = 0; l < kLanes; ++l) {
                const std::uint64_t b = block + l;
                const auto r = philox4x32({std::uint32_t(b), std::uint32_t(b >> 32), std::uint32_t(stream_),
                                           std::uint32_t(stream_ >> 32)},
                                          key_);
                std::copy(r.begin(), r.end(), buffer_.begin() + std::ptrdiff_t(4 * l));
            }
        }
        filled_ = true;
    }

    PhiloxKey key_;
    std::uint64_t stream_;
    std::uint64_t index_ = 0;
    bool filled_ = false;
    std::array<std::uint32_t, 4 * kLanes> buffer_{};
};

/// Standard normal variates by the 128-layer ziggurat (Marsaglia and Tsang,
/// in Doornik's formulation). One 64-bit word per variate in the common case:
/// the low 7 bits pick the layer, the top 53 give the abscissa.
class ZigguratNormal {
public:
    template <class Engine>
    double operator()(Engine& eng) const
    {
        const auto& t = tables();
        for (;;) {
            const std::uint64_t w = eng();
            const std::size_t i = std::size_t(w & 0x7Fu);
            const double u = 2.0 * (double(w >> 11) * 0x1.0p-53) - 1.0;
            if (std::abs(u) < t.r[i]) {
                return u * t.x[i];
            }
            if (i == 0) {
                return tail(eng, u < 0.0);
            }
            const double x = u * t.x[i];
            const double f0 = std::exp(-0.5 * (t.x[i] * t.x[i] - x * x));
            const double f1 = std::exp(-0.5 * (t.x[i + 1] * t.x[i + 1] - x * x));
            if (f1 + open_uniform(eng) * (f0 - f1) < 1.0) {
                return x;
            }
        }
    }

private:
    static constexpr std::size_t kLayers = 128;
    static constexpr double kR = 3.442619855899;
    static constexpr double kV = 9.91256303526217e-3;

    struct Tables {
        std::array<double, kLayers + 1> x{};
        std::array<double, kLayers> r{};
    };

    static const Tables& tables()
    {
        static const Tables t = [] {
            Tables z;
            double f = std::exp(-0.5 * kR * kR);
            z.x[0] = kV / f;
            z.x[1] = kR;
            z.x[kLayers] = 0.0;
            for (std::size_t i = 2; i < kLayers; ++i) {
                z.x[i] = std::sqrt(-2.0 * std::log(kV / z.x[i - 1] + f));
                f = std::exp(-0.5 * z.x[i] * z.x[i]);
            }
            for (std::size_t i = 0; i < kLayers; ++i) {
                z.r[i] = z.x[i + 1] / z.x[i];
            }
            return z;
        }();
        return t;
    }

    template <class Engine>
    static double open_uniform(Engine& eng)
    {
        return (double(eng() >> 11) + 0.5) * 0x1.0p-53;
    }

    template <class Engine>
    static double tail(Engine& eng, bool negative)
    {
        double x, y;
        do {
            x = std::log(open_uniform(eng)) / kR;
            y = std::log(open_uniform(eng));
        } while (-2.0 * y < x * x);
        return negative ? x - kR : kR - x;
    }
};

} // namespace hidacur
