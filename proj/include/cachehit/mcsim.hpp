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

// Monte Carlo oracle for the hit probability. Base stations form a Poisson
// process on a disc of radius c / sqrt(lambda) around the user; caches are
// marked independently per station; fading is Rayleigh and redrawn every
// attempt.
//
// Stations are generated lazily in order of distance, and an attempt is
// settled as soon as the running interference either exceeds the signal or
// cannot exceed it even if all the unspent fading sat at the current radius. The decision is the same one a full scan would make; only
// the work is cut.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "cachehit/coverage.hpp"
#include "cachehit/error.hpp"
#include "cachehit/philox.hpp"
#include "cachehit/popularity.hpp"

namespace cachehit {

enum class CacheSemantics {
    CategoricalSingleFile,  // each station stores exactly one file drawn from {b_i}; needs L = 1
    IndependentPerFile,     // file i stored with probability b_i independently; size is L on average
};

struct SimConfig {
    double window_radius = 30.0;  // in units of lambda^{-1/2}
    std::uint64_t trials = 1'000'000;
    std::uint64_t seed = 1;
    CacheSemantics semantics = CacheSemantics::CategoricalSingleFile;
    unsigned threads = 1;

    SimConfig validated() const
    {
        if (!(window_radius > 0.0) || !std::isfinite(window_radius))
            throw ValidationError("window_radius", "must be positive");
        if (trials < 100) throw ValidationError("trials", "at least 100 trials are required for a CI");
        if (threads == 0) throw ValidationError("threads", "must be positive");
        return *this;
    }
};

struct SimResult {
    double hit_estimate = 0.0;
    double ci_halfwidth_99 = 0.0;
    std::vector<double> per_file_success;  // NaN for files never requested
    std::uint64_t trials_used = 0;
    std::uint64_t successes = 0;
    std::vector<std::string> flags;
};

inline constexpr double kZ99 = 2.5758293035489004;

/// Half-width of the two-sided 99% normal-approximation interval.
inline double binomial_ci99(double p, std::uint64_t trials)
{
    return kZ99 * std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(trials));
}

/// Mean interference from beyond the window relative to that from beyond the
/// median nearest-station distance. Above 1e-3 results carry a warning.
inline double window_tail_fraction(double window_radius, double alpha)
{
    const double median_nearest = std::sqrt(std::log(2.0) / std::acos(-1.0));
    return std::pow(window_radius / median_nearest, 2.0 - alpha);
}

namespace sim {

enum Purpose : std::uint64_t { kRequest = 1, kGeometry = 2, kMark = 3, kFading = 4 };

inline std::uint32_t lo32(std::uint64_t v) { return static_cast<std::uint32_t>(v); }
inline std::uint32_t hi32(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

/// Uniform addressed by (key, trial, realization, index); random access.
inline double keyed_uniform(const Philox4x32::Key& key, std::uint64_t trial, std::uint32_t realization,
                            std::uint32_t index)
{
    const auto w = Philox4x32::generate({lo32(trial), hi32(trial), realization, index}, key);
    return u64_to_open01(w[0], w[1]);
}

/// Window geometry shared by all realizations of one run. Positions use the
/// unit-rate area coordinate x = lambda * pi * r^2.
struct Window {
    double area = 0.0;
    double density = 1.0;
    double half_alpha = 2.0;
    std::poisson_distribution<std::uint64_t>::param_type count;

    Window(const ChannelParams& params, double window_radius)
        : area(std::acos(-1.0) * window_radius * window_radius),
          density(params.density),
          half_alpha(params.alpha / 2.0),
          count(area)
    {
    }

    /// r^-alpha for a point at area coordinate x.
    double path_gain(double x) const
    {
        const double r2 = x / (density * std::acos(-1.0));
        if (half_alpha == 2.0) return 1.0 / (r2 * r2);
        return std::pow(r2, -half_alpha);
    }
};

struct Station {
    double gain;  // r^-alpha
};

/// One realization of the station process, generated nearest first: given
/// the count, the next station is the minimum of the remaining uniforms.
class Realization {
public:
    Realization(const Window& window, std::uint64_t seed, std::uint64_t trial, std::uint32_t realization)
        : window_(&window), geo_(derive_key(seed, kGeometry), lo32(trial), hi32(trial), realization)
    {
        std::poisson_distribution<std::uint64_t> total(window.count);
        total_ = unvisited_ = total(geo_);
    }

    const std::vector<Station>& stations() const { return stations_; }
    std::uint64_t total() const { return total_; }
    bool exhausted() const { return unvisited_ == 0; }

    /// Appends the next nearest station; false once the window is used up.
    bool grow()
    {
        if (exhausted()) return false;
        const double n = static_cast<double>(unvisited_--);
        x_ += (window_->area - x_) * -std::expm1(std::log(geo_.uniform()) / n);
        stations_.push_back({window_->path_gain(x_)});
        return true;
    }

    /// Path gain no station yet to be generated can exceed.
    double remaining_gain_bound() const { return stations_.empty() ? 0.0 : stations_.back().gain; }

private:
    const Window* window_;
    PhiloxStream geo_;
    std::uint64_t total_ = 0;
    std::uint64_t unvisited_ = 0;
    double x_ = 0.0;
    std::vector<Station> stations_;
};

/// Nearest station; npos if the window is empty.
inline std::size_t nearest_station(Realization& real)
{
    if (real.stations().empty() && !real.grow()) return static_cast<std::size_t>(-1);
    return 0;
}

/// Nearest station for which `holds(index)` is true; npos if none in window.
template <class Holds>
std::size_t nearest_holder(Realization& real, Holds&& holds)
{
    for (std::size_t i = 0;; ++i) {
        if (i == real.stations().size() && !real.grow()) return static_cast<std::size_t>(-1);
        if (holds(i)) return i;
    }
}

enum class Require { Any, All };

/// Rayleigh fading of one attempt. The interferers' fading sum is drawn
/// first (Gamma) and then split station by station (uniform spacings), which
/// is the same joint law as iid exponentials but keeps the unspent sum known.
struct Attempt {
    PhiloxStream fading;
    double threshold = 0.0;  // signal / T
    double interference = 0.0;
    double fading_left = 0.0;
    std::uint64_t interferers_left = 0;
    bool settled = false;

    void start(double serving_gain, double threshold_T, std::uint64_t interferers)
    {
        threshold = -std::log(fading.uniform()) * serving_gain / threshold_T;
        interferers_left = interferers;
        if (interferers > 0) {
            std::gamma_distribution<double> sum(static_cast<double>(interferers));
            fading_left = sum(fading);
        }
    }

    double next_fading()
    {
        double h = fading_left;
        if (interferers_left > 1)
            h *= -std::expm1(std::log(fading.uniform()) / static_cast<double>(interferers_left - 1));
        fading_left -= h;
        --interferers_left;
        return h;
    }
};

/// Decide whether any / all attempts clear the SIR threshold when served by
/// station `serving` of `real`.
inline bool resolve(Realization& real, std::size_t serving, std::span<Attempt> attempts, double threshold_T,
                    Require require)
{
    const double serving_gain = real.stations()[serving].gain;
    for (auto& a : attempts) a.start(serving_gain, threshold_T, real.total() - 1);

    std::size_t live = attempts.size();
    for (std::size_t i = 0;; ++i) {
        if (i == real.stations().size() && !real.grow()) return live > 0;
        if (i == serving) continue;
        const double g = real.stations()[i].gain;
        for (auto& a : attempts) {
            if (a.settled) continue;
            a.interference += a.next_fading() * g;
            if (a.interference >= a.threshold) {
                a.settled = true;
                if (require == Require::All || --live == 0) return false;
            }
        }
        if (i + 1 < real.stations().size()) continue;
        const double gain_bound = real.remaining_gain_bound();
        for (auto& a : attempts) {
            if (a.settled || a.interference + gain_bound * a.fading_left >= a.threshold) continue;
            a.settled = true;
            if (require == Require::Any || --live == 0) return true;
        }
    }
}

struct Tally {
    std::uint64_t successes = 0;
    std::uint64_t no_serving = 0;
    std::vector<std::uint64_t> requests;
    std::vector<std::uint64_t> file_successes;

    explicit Tally(std::size_t files = 0) : requests(files, 0), file_successes(files, 0) {}

    void merge(const Tally& o)
    {
        successes += o.successes;
        no_serving += o.no_serving;
        for (std::size_t i = 0; i < requests.size(); ++i) {
            requests[i] += o.requests[i];
            file_successes[i] += o.file_successes[i];
        }
    }
};

/// Run `trial(index, tally)` for every trial, split over threads in
/// contiguous blocks. Tallies are integer counts, so the result does not
/// depend on the thread count.
template <class Trial>
Tally run_trials(std::uint64_t trials, unsigned threads, std::size_t files, Trial trial)
{
    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, trials));
    std::vector<Tally> parts(threads, Tally(files));
    auto work = [&](unsigned t) {
        const std::uint64_t begin = trials * t / threads;
        const std::uint64_t end = trials * (t + 1) / threads;
        for (std::uint64_t i = begin; i < end; ++i) trial(i, parts[t]);
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
    }
    Tally total(files);
    for (const auto& p : parts) total.merge(p);
    return total;
}

inline SimResult finish(const Tally& tally, std::uint64_t trials, const SimConfig& cfg, double alpha)
{
    SimResult r;
    r.trials_used = trials;
    r.successes = tally.successes;
    r.hit_estimate = static_cast<double>(tally.successes) / static_cast<double>(trials);
    r.ci_halfwidth_99 = binomial_ci99(r.hit_estimate, trials);
    r.per_file_success.resize(tally.requests.size());
    for (std::size_t i = 0; i < tally.requests.size(); ++i)
        r.per_file_success[i] = tally.requests[i] == 0
                                    ? std::nan("")
                                    : static_cast<double>(tally.file_successes[i]) / static_cast<double>(tally.requests[i]);
    if (trials < 10'000) r.flags.emplace_back("low-trial-count");
    if (window_tail_fraction(cfg.window_radius, alpha) > 1e-3) r.flags.emplace_back("window-truncation");
    if (tally.no_serving > 0)
        r.flags.emplace_back("no-serving-station-in-window:" + std::to_string(tally.no_serving));
    return r;
}

/// Cache marks of the requested file, addressable per station.
class MarkSampler {
public:
    MarkSampler(std::span<const double> b, CacheSemantics semantics, std::uint64_t seed)
        : semantics_(semantics), b_(b.begin(), b.end())
    {
        if (semantics_ == CacheSemantics::CategoricalSingleFile) {
            key_.push_back(derive_key(seed, kMark, 0));
            cdf_.resize(b_.size());
            std::partial_sum(b_.begin(), b_.end(), cdf_.begin());
        } else {
            for (std::size_t i = 0; i < b_.size(); ++i) key_.push_back(derive_key(seed, kMark, i + 1));
        }
    }

    bool holds(std::size_t file, std::uint64_t trial, std::uint32_t realization, std::uint32_t station) const
    {
        if (semantics_ == CacheSemantics::CategoricalSingleFile)
            return stored_file(trial, realization, station) == file;
        return keyed_uniform(key_[file], trial, realization, station) < b_[file];
    }

    /// Full cache content of one station.
    std::vector<std::size_t> contents(std::uint64_t trial, std::uint32_t realization, std::uint32_t station) const
    {
        std::vector<std::size_t> out;
        if (semantics_ == CacheSemantics::CategoricalSingleFile) {
            out.push_back(stored_file(trial, realization, station));
        } else {
            for (std::size_t i = 0; i < b_.size(); ++i)
                if (keyed_uniform(key_[i], trial, realization, station) < b_[i]) out.push_back(i);
        }
        return out;
    }

private:
    std::size_t stored_file(std::uint64_t trial, std::uint32_t realization, std::uint32_t station) const
    {
        const double u = keyed_uniform(key_[0], trial, realization, station) * cdf_.back();
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), b_.size() - 1);
    }

    CacheSemantics semantics_;
    std::vector<double> b_;
    std::vector<double> cdf_;
    std::vector<Philox4x32::Key> key_;
};

}  // namespace sim

/// Empirical hit probability for a placement.
///
/// Static: one realization of stations and caches serves all n attempts,
/// fading is redrawn per attempt. Mobile: stations, caches and fading are all
/// redrawn per attempt. Cache-agnostic users attach to the nearest station
/// and succeed only if it stores the file; cache-aware users attach to the
/// nearest station storing the file, and fail the attempt if none exists in
/// the window.
inline SimResult simulate_hit(const Scenario& scenario, const PlacementVector& b, const ZipfLibrary& lib,
                              const ChannelParams& params, const SimConfig& config)
{
    const auto sc = scenario.validated();
    const auto ch = params.validated();
    const auto cfg = config.validated();
    const std::size_t K = lib.num_files();
    if (b.size() != K) throw ValidationError("placement", "placement length does not match library size");
    if (cfg.semantics == CacheSemantics::CategoricalSingleFile && b.capacity() != 1)
        throw ValidationError("semantics", "categorical cache marks require L = 1");

    const sim::Window window(ch, cfg.window_radius);
    const sim::MarkSampler marks(b.values(), cfg.semantics, cfg.seed);
    std::vector<double> request_cdf(K);
    const auto probs = lib.request_probs();
    std::partial_sum(probs.begin(), probs.end(), request_cdf.begin());
    const auto request_key = derive_key(cfg.seed, sim::kRequest);
    constexpr auto npos = static_cast<std::size_t>(-1);

    auto trial = [&](std::uint64_t t, sim::Tally& tally) {
        const double u = sim::keyed_uniform(request_key, t, 0, 0) * request_cdf.back();
        const std::size_t file = std::min<std::size_t>(
            static_cast<std::size_t>(std::upper_bound(request_cdf.begin(), request_cdf.end(), u) - request_cdf.begin()),
            K - 1);
        ++tally.requests[file];

        const std::uint32_t realizations = sc.mobility == Mobility::Static ? 1u : sc.attempts;
        const std::uint32_t per_realization = sc.mobility == Mobility::Static ? sc.attempts : 1u;
        bool hit = false;
        for (std::uint32_t r = 0; r < realizations && !hit; ++r) {
            sim::Realization real(window, cfg.seed, t, r);
            auto holds = [&](std::size_t station) {
                return marks.holds(file, t, r, static_cast<std::uint32_t>(station));
            };
            std::size_t serving = npos;
            if (sc.policy == Policy::CacheAgnostic) {
                serving = sim::nearest_station(real);
                if (serving == npos) {
                    ++tally.no_serving;
                    continue;
                }
                if (!holds(serving)) continue;
            } else {
                serving = sim::nearest_holder(real, holds);
                if (serving == npos) {
                    ++tally.no_serving;
                    continue;
                }
            }
            std::vector<sim::Attempt> attempts;
            attempts.reserve(per_realization);
            for (std::uint32_t a = 0; a < per_realization; ++a)
                attempts.push_back({PhiloxStream(derive_key(cfg.seed, sim::kFading, a), sim::lo32(t), sim::hi32(t), r)});
            hit = sim::resolve(real, serving, attempts, ch.threshold, sim::Require::Any);
        }
        if (hit) {
            ++tally.successes;
            ++tally.file_successes[file];
        }
    };
    const auto tally = sim::run_trials(cfg.trials, cfg.threads, K, trial);
    return sim::finish(tally, cfg.trials, cfg, ch.alpha);
}

/// Empirical probability that all k attempts clear the threshold under a
/// fixed geometry. Cache-agnostic: coverage of the nearest station (the
/// caching factor is not included). Cache-aware: nearest station among those
/// storing the file, each station storing it with probability b.
inline SimResult simulate_joint_coverage(unsigned k, Policy policy, double b, const ChannelParams& params,
                                         const SimConfig& config)
{
    if (k == 0) throw ValidationError("k", "number of attempts must be positive");
    check_probability(b);
    const auto ch = params.validated();
    const auto cfg = config.validated();
    const sim::Window window(ch, cfg.window_radius);
    const auto mark_key = derive_key(cfg.seed, sim::kMark, 1);
    constexpr auto npos = static_cast<std::size_t>(-1);

    auto trial = [&](std::uint64_t t, sim::Tally& tally) {
        sim::Realization real(window, cfg.seed, t, 0);
        std::size_t serving = npos;
        if (policy == Policy::CacheAgnostic) {
            serving = sim::nearest_station(real);
        } else {
            serving = sim::nearest_holder(real, [&](std::size_t station) {
                return sim::keyed_uniform(mark_key, t, 0, static_cast<std::uint32_t>(station)) < b;
            });
        }
        if (serving == npos) {
            ++tally.no_serving;
            return;
        }
        std::vector<sim::Attempt> attempts;
        attempts.reserve(k);
        for (unsigned a = 0; a < k; ++a)
            attempts.push_back({PhiloxStream(derive_key(cfg.seed, sim::kFading, a), sim::lo32(t), sim::hi32(t), 0)});
        if (sim::resolve(real, serving, attempts, ch.threshold, sim::Require::All)) ++tally.successes;
    };
    const auto tally = sim::run_trials(cfg.trials, cfg.threads, 0, trial);
    return sim::finish(tally, cfg.trials, cfg, ch.alpha);
}

/// Cache content of one simulated station, as used by simulate_hit.
inline std::vector<std::size_t> sample_cache_contents(const PlacementVector& b, CacheSemantics semantics,
                                                      std::uint64_t seed, std::uint64_t trial,
                                                      std::uint32_t realization, std::uint32_t station)
{
    const sim::MarkSampler marks(b.values(), semantics, seed);
    return marks.contents(trial, realization, station);
}

}  // namespace cachehit
