/*
   Copyright 2026 The cachehit Authors

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

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A draw is a
// pure function of (key, counter), so any sub-stream can be addressed
// directly and parallel runs reproduce serial ones bit for bit.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace cachehit {

class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter ctr, Key key) noexcept
    {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kW0;
                key[1] += kW1;
            }
            const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;
};

/// splitmix64 finalizer, used to derive independent Philox keys.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline Philox4x32::Key derive_key(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index = 0) noexcept
{
    const std::uint64_t k = mix64(seed ^ mix64(purpose * 0x100000001B3ull + mix64(index)));
    return {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

inline double u32_to_open01(std::uint32_t w) noexcept
{
    return (static_cast<double>(w) + 0.5) * 0x1p-32;
}

inline double u64_to_open01(std::uint32_t hi, std::uint32_t lo) noexcept
{
    // 52 bits: with 53 the top value (2^53 - 0.5) * 2^-53 rounds to 1.
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 12;
    return (static_cast<double>(bits) + 0.5) * 0x1p-52;
}

/// Sequential view of one addressed sub-stream: fixed key and the first three
/// counter words, the fourth word counts blocks.
class PhiloxStream {
public:
    using result_type = std::uint32_t;

    PhiloxStream(Philox4x32::Key key, std::uint32_t c0, std::uint32_t c1, std::uint32_t c2) noexcept
        : key_(key), ctr_{c0, c1, c2, 0}
    {
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept
    {
        if (pos_ == 4) {
            block_ = Philox4x32::generate(ctr_, key_);
            ++ctr_[3];
            pos_ = 0;
        }
        return block_[pos_++];
    }

    /// Uniform on (0, 1) with 53 random bits.
    double uniform() noexcept
    {
        const auto hi = (*this)();
        const auto lo = (*this)();
        return u64_to_open01(hi, lo);
    }

    /// Exp(1) from 32 random bits; bounded by kMaxExponential.
    double exponential() noexcept { return -std::log(u32_to_open01((*this)())); }

    /// Largest value exponential() can return: -log(0.5 * 2^-32), rounded up.
    static constexpr double kMaxExponential = 22.8739;

private:
    Philox4x32::Key key_;
    Philox4x32::Counter ctr_;
    Philox4x32::Counter block_{};
    int pos_ = 4;
};

}  // namespace cachehit
