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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cachehit/optimizer.hpp"

using namespace cachehit;

namespace {

const ChannelParams kUnit{1.0, 4.0, 1.0};

double coverage(const ChannelParams& ch) { return 1.0 / (1.0 + rho1(ch.threshold, ch.alpha)); }

// Primal feasibility, dual feasibility, complementary slackness, stationarity.
void expect_kkt(const KktSolution& sol, const ZipfLibrary& lib, double residual_tol = kStationarityTolerance)
{
    const auto b = sol.b_star.values();
    EXPECT_NEAR(std::accumulate(b.begin(), b.end(), 0.0), static_cast<double>(lib.capacity()), 1e-8);
    ASSERT_EQ(sol.mu_star.size(), b.size());
    ASSERT_EQ(sol.w_star.size(), b.size());
    for (std::size_t i = 0; i < b.size(); ++i) {
        EXPECT_GE(b[i], 0.0);
        EXPECT_LE(b[i], 1.0);
        EXPECT_GE(sol.mu_star[i], 0.0);
        EXPECT_GE(sol.w_star[i], 0.0);
        EXPECT_LE(sol.mu_star[i] * b[i], 1e-8);
        EXPECT_LE(sol.w_star[i] * (1.0 - b[i]), 1e-8);
    }
    EXPECT_LE(sol.stationarity_residual, residual_tol) << sol.method;
    EXPECT_TRUE(sol.certified) << sol.method;
}

void expect_popularity_order(const PlacementVector& b)
{
    for (std::size_t i = 1; i < b.size(); ++i) EXPECT_GE(b[i - 1], b[i] - 1e-9) << "index " << i;
}

double max_gap_to_even(const PlacementVector& b)
{
    const double even = static_cast<double>(b.capacity()) / static_cast<double>(b.size());
    double gap = 0.0;
    for (double v : b.values()) gap = std::max(gap, std::abs(v - even));
    return gap;
}

}  // namespace

TEST(TwoFileClosedForm, ThresholdAndInteriorValue)
{
    const double pc = coverage(kUnit);
    EXPECT_NEAR(corollary1_threshold(1.2, pc), 2.0128721554217816469, 1e-12);
    for (unsigned n : {1u, 2u}) {
        const auto [b1, b2] = corollary1_two_file(1.2, pc, n);
        EXPECT_EQ(b1, 1.0);
        EXPECT_EQ(b2, 0.0);
    }
    const auto [b1, b2] = corollary1_two_file(1.2, pc, 3);
    EXPECT_NEAR(b1, 0.76350390034026264936, 1e-12);
    EXPECT_NEAR(b1 + b2, 1.0, 1e-15);
}

TEST(WaterFilling, AgreesWithTwoFileClosedForm)
{
    for (double alpha : {3.0, 4.0})
        for (double gamma : {0.6, 1.2, 2.0})
            for (unsigned n = 1; n <= 10; ++n) {
                const ChannelParams ch{1.0, alpha, 1.0};
                const auto lib = ZipfLibrary::zipf(2, gamma, 1);
                const auto sol = optimal_mobile_p1(lib, ch, n);
                const auto [b1, b2] = corollary1_two_file(gamma, coverage(ch), n);
                EXPECT_NEAR(sol.b_star[0], b1, 1e-9) << alpha << " " << gamma << " " << n;
                EXPECT_NEAR(sol.b_star[1], b2, 1e-9);
                expect_kkt(sol, lib);
            }
}

TEST(WaterFilling, MatchesGridSearch)
{
    for (std::size_t K : {2u, 3u})
        for (double gamma : {0.6, 1.2, 2.0})
            for (unsigned n : {2u, 3u, 5u, 10u}) {
                const auto lib = ZipfLibrary::zipf(K, gamma, 1);
                const auto sol = optimal_mobile_p1(lib, kUnit, n);
                const auto grid = grid_search_oracle({Policy::CacheAgnostic, Mobility::Mobile, n}, lib, kUnit, 1e-3);
                EXPECT_NEAR(sol.objective, grid.objective, 1e-5);
                EXPECT_GE(sol.objective, grid.objective - 1e-12);
                expect_kkt(sol, lib);
                expect_popularity_order(sol.b_star);
            }
}

TEST(WaterFilling, SpecialCases)
{
    const auto single = optimal_mobile_p1(ZipfLibrary::zipf(3, 1.2, 2), kUnit, 1);
    EXPECT_EQ(std::vector<double>(single.b_star.values().begin(), single.b_star.values().end()),
              (std::vector<double>{1, 1, 0}));
    const auto full = optimal_mobile_p1(ZipfLibrary::zipf(3, 1.2, 3), kUnit, 4);
    for (double v : full.b_star.values()) EXPECT_EQ(v, 1.0);
    EXPECT_EQ(optimal_mobile_p1(ZipfLibrary::zipf(1, 1.2, 1), kUnit, 5).b_star[0], 1.0);
}

TEST(WaterFilling, GeneralCapacityAndLargeLibraries)
{
    for (std::size_t L : {1u, 2u, 4u}) {
        const auto lib = ZipfLibrary::zipf(10, 0.9, L);
        for (unsigned n : {2u, 4u, 20u}) {
            const auto sol = optimal_mobile_p1(lib, {0.5, 3.5, 1.0}, n);
            expect_kkt(sol, lib);
            expect_popularity_order(sol.b_star);
            const auto projected = optimal_projected({Policy::CacheAgnostic, Mobility::Mobile, n}, lib, {0.5, 3.5, 1.0});
            EXPECT_NEAR(sol.objective, projected.objective, 1e-9);
        }
    }
}

TEST(CacheAwareDual, SingleAttemptMatchesClosedForm)
{
    for (std::size_t K : {2u, 3u, 5u})
        for (double gamma : {0.6, 1.2, 2.0}) {
            const auto lib = ZipfLibrary::zipf(K, gamma, 1);
            const auto sol = optimal_mobile_p2(lib, kUnit, 1);
            const auto closed = corollary2_single_tx_p2(lib, kUnit);
            for (std::size_t i = 0; i < K; ++i) EXPECT_NEAR(sol.b_star[i], closed[i], 1e-8) << K << " " << gamma;
            expect_kkt(sol, lib);
        }
}

TEST(CacheAwareDual, MatchesFineGrid)
{
    // Exhaustive 1e-4 grid over b1 evaluated in 20-digit arithmetic.
    const auto lib = ZipfLibrary::zipf(2, 1.2, 1);
    const struct {
        unsigned n;
        double b1, objective;
    } cases[] = {{1, 1.0, 0.39023813805838047824},
                 {2, 0.89, 0.56653202750864442119},
                 {3, 0.7242, 0.68982502405943646023},
                 {5, 0.6209, 0.84533025229311607819}};
    for (const auto& c : cases) {
        const auto sol = optimal_mobile_p2(lib, kUnit, c.n);
        EXPECT_NEAR(sol.b_star[0], c.b1, 1e-4) << c.n;
        EXPECT_GE(sol.objective, c.objective - 1e-12);
        EXPECT_NEAR(sol.objective, c.objective, 1e-8);
        expect_kkt(sol, lib);
    }
}

TEST(CacheAwareDual, MatchesGridSearch)
{
    for (std::size_t K : {2u, 3u})
        for (double gamma : {0.6, 1.2, 2.0})
            for (unsigned n : {2u, 3u, 5u}) {
                const auto lib = ZipfLibrary::zipf(K, gamma, 1);
                const auto sol = optimal_mobile_p2(lib, kUnit, n);
                const Scenario sc{Policy::CacheAware, Mobility::Mobile, n};
                const auto grid = grid_search_oracle(sc, lib, kUnit, 1e-3);
                EXPECT_GE(sol.objective, grid.objective - 1e-12);
                EXPECT_NEAR(sol.objective, grid.objective, 1e-5);
                if (K == 2) {
                    EXPECT_NEAR(sol.b_star[0], grid.placement[0], 2e-3);
                }
                expect_popularity_order(sol.b_star);
            }
}

TEST(CacheAwareDual, SingleFileAndCapacityGuard)
{
    EXPECT_EQ(optimal_mobile_p2(ZipfLibrary::zipf(1, 1.2, 1), kUnit, 7).b_star[0], 1.0);
    EXPECT_THROW(optimal_mobile_p2(ZipfLibrary::zipf(3, 1.2, 2), kUnit, 3), ValidationError);
}

TEST(SingleAttemptCacheAware, UniformLibrarySplitsEvenly)
{
    const auto lib = ZipfLibrary::zipf(4, 1e-9, 1);
    const auto b = corollary2_single_tx_p2(lib, kUnit);
    for (double v : b.values()) EXPECT_NEAR(v, 0.25, 1e-6);
    EXPECT_EQ(corollary2_single_tx_p2(ZipfLibrary::zipf(1, 1.2, 1), kUnit)[0], 1.0);
}

TEST(SingleAttemptCacheAware, MatchesGridSearch)
{
    for (double gamma : {0.3, 0.6, 1.2}) {
        const auto lib = ZipfLibrary::zipf(2, gamma, 1);
        const auto b = corollary2_single_tx_p2(lib, kUnit);
        const auto grid = grid_search_oracle({Policy::CacheAware, Mobility::Mobile, 1}, lib, kUnit, 1e-4);
        EXPECT_NEAR(b[0], grid.placement[0], 1e-4) << gamma;
    }
}

TEST(StaticP1, TopCapacityIndicator)
{
    for (unsigned n : {1u, 3u, 10u, 30u}) {
        const auto b = optimal_static_p1(ZipfLibrary::zipf(3, 1.2, 1), kUnit, n);
        EXPECT_EQ(std::vector<double>(b.values().begin(), b.values().end()), (std::vector<double>{1, 0, 0}));
    }
    const auto two = optimal_static_p1(ZipfLibrary::zipf(3, 1.2, 2), kUnit, 4);
    EXPECT_EQ(std::vector<double>(two.values().begin(), two.values().end()), (std::vector<double>{1, 1, 0}));
    const auto all = optimal_static_p1(ZipfLibrary::zipf(3, 1.2, 3), kUnit, 4);
    for (double v : all.values()) EXPECT_EQ(v, 1.0);
    const auto sol = optimal_placement({Policy::CacheAgnostic, Mobility::Static, 4}, ZipfLibrary::zipf(3, 1.2, 1), kUnit);
    expect_kkt(sol, ZipfLibrary::zipf(3, 1.2, 1));
}

TEST(StaticP2, SingleAttemptMatchesClosedForm)
{
    const auto lib = ZipfLibrary::zipf(3, 0.6, 1);
    const auto sol = optimal_static_p2(lib, kUnit, 1);
    const auto closed = corollary2_single_tx_p2(lib, kUnit);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(sol.b_star[i], closed[i], 1e-6);
}

TEST(StaticP2, MatchesGridSearch)
{
    for (double gamma : {0.3, 0.6, 1.2})
        for (unsigned n : {2u, 3u, 6u}) {
            const auto lib = ZipfLibrary::zipf(2, gamma, 1);
            const auto sol = optimal_static_p2(lib, kUnit, n);
            const auto grid = grid_search_oracle({Policy::CacheAware, Mobility::Static, n}, lib, kUnit, 1e-2);
            EXPECT_NEAR(sol.b_star[0], grid.placement[0], 5e-3 + 1e-2) << gamma << " " << n;
            EXPECT_GE(sol.objective, grid.objective - 1e-12);
            EXPECT_LE(sol.stationarity_residual, 1e-6);
            const auto fine = grid_search_oracle({Policy::CacheAware, Mobility::Static, n}, lib, kUnit, 1e-3);
            EXPECT_NEAR(sol.b_star[0], fine.placement[0], 5e-3);
        }
}

TEST(StaticP2, CapGuard)
{
    EXPECT_THROW(optimal_static_p2(ZipfLibrary::zipf(3, 1.2, 1), kUnit, kStaticAttemptCap + 1), ValidationError);
    EXPECT_THROW(optimal_static_p2(ZipfLibrary::zipf(3, 1.2, 2), kUnit, 3), ValidationError);
}

TEST(ManyAttempts, EvenPlacementInTheLimit)
{
    for (std::size_t L : {1u, 2u})
        for (auto policy : {Policy::CacheAgnostic, Policy::CacheAware}) {
            const auto lib = ZipfLibrary::zipf(3, 1.2, L);
            double prev = INFINITY;
            for (unsigned n = 20; n <= 100; n += 10) {
                const auto sol = optimal_placement({policy, Mobility::Mobile, n}, lib, kUnit);
                const double gap = max_gap_to_even(sol.b_star);
                EXPECT_LE(gap, prev + 1e-9) << n;
                prev = gap;
                EXPECT_TRUE(sol.certified) << to_string(policy) << " L=" << L << " n=" << n;
            }
            EXPECT_LE(prev, 0.02) << to_string(policy) << " L=" << L;
        }
}

TEST(Ordering, CacheAwareNeverWorseAtOptimum)
{
    for (std::size_t K : {2u, 3u, 5u})
        for (unsigned n = 1; n <= 10; ++n)
            for (auto mobility : {Mobility::Static, Mobility::Mobile}) {
                const auto lib = ZipfLibrary::zipf(K, 1.2, 1);
                const double p1 = optimal_placement({Policy::CacheAgnostic, mobility, n}, lib, kUnit).objective;
                const double p2 = optimal_placement({Policy::CacheAware, mobility, n}, lib, kUnit).objective;
                EXPECT_GE(p2, p1 - 1e-9) << K << " " << n << " " << to_string(mobility);
            }
}

TEST(Projection, FeasibleIdempotentAndOptimal)
{
    std::mt19937_64 rng(99);
    std::normal_distribution<double> nd(0.3, 0.8);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t K = 2 + rep % 7;
        const double L = 1 + rep % (K - 1);
        std::vector<double> y(K);
        for (double& v : y) v = nd(rng);
        const auto x = project_capped_simplex(y, L);
        EXPECT_NEAR(std::accumulate(x.begin(), x.end(), 0.0), L, 1e-10);
        for (double v : x) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
        const auto again = project_capped_simplex(x, L);
        for (std::size_t i = 0; i < K; ++i) EXPECT_NEAR(again[i], x[i], 1e-10);
        // x = clamp(y - tau) for one common tau: interior coordinates share y - x.
        double tau = NAN;
        for (std::size_t i = 0; i < K; ++i)
            if (x[i] > 1e-9 && x[i] < 1 - 1e-9) {
                if (std::isnan(tau)) tau = y[i] - x[i];
                EXPECT_NEAR(y[i] - x[i], tau, 1e-9);
            }
        if (!std::isnan(tau))
            for (std::size_t i = 0; i < K; ++i) {
                if (x[i] <= 1e-9) {
                    EXPECT_LE(y[i] - tau, 1e-9);
                }
                if (x[i] >= 1 - 1e-9) {
                    EXPECT_GE(y[i] - tau, 1 - 1e-9);
                }
            }
    }
}

TEST(GridOracle, KnownOptimaAndGuards)
{
    const Scenario mobile1{Policy::CacheAgnostic, Mobility::Mobile, 1};
    const auto two = grid_search_oracle(mobile1, ZipfLibrary::zipf(2, 1.2, 1), kUnit, 1e-2);
    EXPECT_EQ(two.placement[0], 1.0);
    EXPECT_EQ(grid_search_oracle(mobile1, ZipfLibrary::zipf(1, 1.2, 1), kUnit, 1e-2).placement[0], 1.0);
    const auto three =
        grid_search_oracle({Policy::CacheAgnostic, Mobility::Mobile, 3}, ZipfLibrary::zipf(2, 1.2, 1), kUnit, 1e-3);
    EXPECT_NEAR(three.placement[0], 0.7635, 1e-3);
    EXPECT_THROW(grid_search_oracle(mobile1, ZipfLibrary::zipf(5, 1.2, 1), kUnit, 1e-2), ValidationError);
    EXPECT_THROW(grid_search_oracle(mobile1, ZipfLibrary::zipf(2, 1.2, 1), kUnit, 0.05), ValidationError);
    EXPECT_THROW(grid_search_oracle(mobile1, ZipfLibrary::zipf(2, 1.2, 1), kUnit, 0.003), ValidationError);
}

TEST(Dispatcher, EverySolverCertifies)
{
    for (auto policy : {Policy::CacheAgnostic, Policy::CacheAware})
        for (auto mobility : {Mobility::Static, Mobility::Mobile})
            for (std::size_t L : {1u, 2u})
                for (unsigned n : {1u, 2u, 5u}) {
                    const auto lib = ZipfLibrary::zipf(4, 1.0, L);
                    const auto sol = optimal_placement({policy, mobility, n}, lib, {2.0, 3.0, 1.0});
                    expect_kkt(sol, lib, policy == Policy::CacheAware && (mobility == Mobility::Static || L > 1)
                                             ? ProjectedAscentOptions{}.certify_tolerance
                                             : kStationarityTolerance);
                    expect_popularity_order(sol.b_star);
                    const auto grid = grid_search_oracle({policy, mobility, n}, lib, {2.0, 3.0, 1.0}, 1e-2);
                    EXPECT_GE(sol.objective, grid.objective - 1e-9);
                }
}
