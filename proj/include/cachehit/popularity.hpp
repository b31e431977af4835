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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cachehit/error.hpp"

namespace cachehit {

/// Normalized Zipf mass function: entry i-1 holds i^-gamma / sum_j j^-gamma.
inline std::vector<double> zipf_request_probs(std::size_t num_files, double gamma)
{
    if (num_files == 0) throw ValidationError("K", "library must hold at least one file");
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw ValidationError("gamma", "Zipf exponent must be a finite positive number");

    std::vector<double> probs(num_files);
    for (std::size_t i = 0; i < num_files; ++i)
        probs[i] = std::pow(static_cast<double>(i + 1), -gamma);
    // Summing smallest-first keeps the normalizer accurate for long tails.
    const double total = std::accumulate(probs.rbegin(), probs.rend(), 0.0);
    for (double& p : probs) p /= total;
    return probs;
}

/// Content library: K files with request probabilities and a per-cell cache
/// capacity of L files.
class ZipfLibrary {
public:
    static ZipfLibrary zipf(std::size_t num_files, double gamma, std::size_t capacity)
    {
        ZipfLibrary lib;
        lib.gamma_ = gamma;
        lib.probs_ = zipf_request_probs(num_files, gamma);
        lib.set_capacity(capacity);
        return lib;
    }

    /// User-supplied popularity. Must be a probability vector; ordering is
    /// not required but ties are broken by lower index wherever it matters.
    static ZipfLibrary from_probs(std::vector<double> probs, std::size_t capacity)
    {
        if (probs.empty()) throw ValidationError("popularity", "empty popularity vector");
        double total = 0.0;
        for (double p : probs) {
            if (!(p >= 0.0) || !std::isfinite(p))
                throw ValidationError("popularity", "entries must be finite and non-negative");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw ValidationError("popularity", "entries must sum to 1 (got " + std::to_string(total) + ")");
        ZipfLibrary lib;
        lib.gamma_ = std::nan("");
        lib.probs_ = std::move(probs);
        lib.set_capacity(capacity);
        return lib;
    }

    std::size_t num_files() const noexcept { return probs_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }
    /// NaN for explicit popularity vectors.
    double gamma() const noexcept { return gamma_; }
    std::span<const double> request_probs() const noexcept { return probs_; }
    double request_prob(std::size_t i) const { return probs_.at(i); }

    ZipfLibrary with_capacity(std::size_t capacity) const
    {
        ZipfLibrary copy = *this;
        copy.set_capacity(capacity);
        return copy;
    }

private:
    ZipfLibrary() = default;

    void set_capacity(std::size_t capacity)
    {
        if (capacity == 0) throw ValidationError("L", "cache capacity must be positive");
        if (capacity > probs_.size())
            throw ValidationError("L", "cache capacity " + std::to_string(capacity) +
                                           " exceeds library size " + std::to_string(probs_.size()));
        capacity_ = capacity;
    }

    std::vector<double> probs_;
    double gamma_ = 0.0;
    std::size_t capacity_ = 1;
};

/// Thrown by validate_placement. `kind()` says which constraint failed and
/// `amount()` by how much (signed sum excess, or worst box overshoot).
class PlacementError : public ValidationError {
public:
    enum class Kind { Box, Sum, Size };

    PlacementError(Kind kind, double amount, const std::string& what)
        : ValidationError("placement", what), kind_(kind), amount_(amount) {}

    Kind kind() const noexcept { return kind_; }
    double amount() const noexcept { return amount_; }

private:
    Kind kind_;
    double amount_;
};

/// Caching probabilities on the capped simplex {sum b_i = L, 0 <= b_i <= 1}.
/// Only obtainable through validate_placement, so holding one means the
/// constraints were checked.
class PlacementVector {
public:
    std::span<const double> values() const noexcept { return b_; }
    double operator[](std::size_t i) const { return b_[i]; }
    std::size_t size() const noexcept { return b_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }

private:
    friend PlacementVector validate_placement(std::span<const double>, std::size_t);
    std::vector<double> b_;
    std::size_t capacity_ = 0;
};

inline constexpr double kPlacementSumTolerance = 1e-9;

inline PlacementVector validate_placement(std::span<const double> b, std::size_t capacity)
{
    if (b.empty()) throw PlacementError(PlacementError::Kind::Size, 0.0, "placement vector is empty");
    if (capacity == 0 || capacity > b.size())
        throw PlacementError(PlacementError::Kind::Size, static_cast<double>(capacity),
                             "capacity must lie in [1, K]");

    double worst = 0.0;
    std::size_t worst_index = 0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (!std::isfinite(b[i]))
            throw PlacementError(PlacementError::Kind::Box, INFINITY,
                                 "b[" + std::to_string(i) + "] is not finite");
        const double over = std::max(-b[i], b[i] - 1.0);
        if (over > worst) {
            worst = over;
            worst_index = i;
        }
    }
    if (worst > 1e-12)
        throw PlacementError(PlacementError::Kind::Box, worst,
                             "b[" + std::to_string(worst_index) + "] leaves [0, 1] by " +
                                 std::to_string(worst));

    const double excess = std::accumulate(b.begin(), b.end(), 0.0) - static_cast<double>(capacity);
    if (std::abs(excess) > kPlacementSumTolerance)
        throw PlacementError(PlacementError::Kind::Sum, excess,
                             "placement sums to L" + std::string(excess > 0 ? "+" : "") +
                                 std::to_string(excess));

    PlacementVector out;
    out.b_.reserve(b.size());
    for (double v : b) out.b_.push_back(std::clamp(v, 0.0, 1.0));
    out.capacity_ = capacity;
    return out;
}

inline PlacementVector validate_placement(const std::vector<double>& b, std::size_t capacity)
{
    return validate_placement(std::span<const double>(b), capacity);
}

}  // namespace cachehit
