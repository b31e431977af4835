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

#include <cmath>
#include <numbers>

#include "cachehit/coverage.hpp"
#include "cachehit/hit.hpp"
#include "oracles/direct_integrals.hpp"

using namespace cachehit;

namespace {

constexpr double kQuarterPi = std::numbers::pi / 4.0;

// Plain trapezoid rule on 10^7 panels. The rho1 tail is mapped to (0, 1] by
// u = lo * w^-m with m = 2/(p-1), which leaves a smooth integrand.
double trapezoid(auto f, double a, double b, long panels = 10'000'000)
{
    const double h = (b - a) / static_cast<double>(panels);
    double sum = 0.5 * (f(a) + f(b));
    for (long i = 1; i < panels; ++i) sum += f(a + h * static_cast<double>(i));
    return sum * h;
}

double trapezoid_rho1(double T, double alpha)
{
    const double p = alpha / 2.0, lo = std::pow(T, -2.0 / alpha), m = 2.0 / (p - 1.0);
    auto f = [&](double w) {
        if (w == 0.0) return 0.0;
        const double u = lo * std::pow(w, -m);
        return m * lo * std::pow(w, -m - 1.0) / (1.0 + std::pow(u, p));
    };
    return std::pow(T, 2.0 / alpha) * trapezoid(f, 0.0, 1.0);
}

double trapezoid_rho2(double T, double alpha)
{
    const double hi = std::pow(T, -2.0 / alpha);
    return std::pow(T, 2.0 / alpha) * trapezoid([&](double u) { return 1.0 / (1.0 + std::pow(u, alpha / 2.0)); }, 0.0, hi);
}

using oracle::direct_joint_p1;
using oracle::direct_joint_p2;

}  // namespace

TEST(Rho, QuarterPiAtUnitThreshold)
{
    EXPECT_NEAR(rho1(1.0, 4.0), kQuarterPi, 1e-12);
    EXPECT_NEAR(rho2(1.0, 4.0), kQuarterPi, 1e-12);
}

TEST(Rho, PartitionOfHalfLine)
{
    for (double T : {0.1, 1.0, 10.0})
        for (double alpha : {2.5, 3.0, 4.0, 5.0})
            EXPECT_NEAR(rho1(T, alpha) + rho2(T, alpha), rho_total(T, alpha), 1e-10) << T << " " << alpha;
}

TEST(Rho, ElementaryFormsAtAlphaFour)
{
    // With alpha = 4 both integrals are arctangents: rho1 = sqrt(T) atan(sqrt(T)),
    // rho2 = sqrt(T) atan(1/sqrt(T)); both vanish as T -> 0.
    for (double T : {1e-10, 1e-4, 0.3, 3.0, 100.0}) {
        const double s = std::sqrt(T);
        EXPECT_NEAR(rho1(T, 4.0), s * std::atan(s), 1e-12 * std::max(1.0, T));
        EXPECT_NEAR(rho2(T, 4.0), s * std::atan(1.0 / s), 1e-12 * std::max(1.0, s));
    }
    EXPECT_LT(rho1(1e-10, 4.0), 2e-10);
}

TEST(Rho, MatchesHighPrecisionValues)
{
    // 20-digit mpmath quadrature of the untransformed integrals.
    EXPECT_NEAR(rho1(1.0, 3.0), 1.6712976965294421067, 1e-12);
    EXPECT_NEAR(rho2(1.0, 3.0), 0.74710145578284836078, 1e-12);
    EXPECT_NEAR(rho1(10.0, 4.0), 3.9987600505576613678, 1e-12);
    EXPECT_NEAR(rho2(10.0, 4.0), 0.96853408234038924938, 1e-12);
    EXPECT_NEAR(rho1(0.1, 2.5), 0.39367373249441954101, 1e-12);
    EXPECT_NEAR(rho2(0.1, 2.5), 0.28400081490069457527, 1e-12);
    EXPECT_NEAR(rho1(10.0, 5.0), 2.3459856184805409547, 1e-12);
}

TEST(Rho, MatchesTrapezoidOracle)
{
    EXPECT_NEAR(rho1(1.0, 3.0), trapezoid_rho1(1.0, 3.0), 1e-10);
    EXPECT_NEAR(rho2(1.0, 3.0), trapezoid_rho2(1.0, 3.0), 1e-10);
    EXPECT_NEAR(rho1(10.0, 4.0), trapezoid_rho1(10.0, 4.0), 1e-10);
    EXPECT_NEAR(rho2(10.0, 4.0), trapezoid_rho2(10.0, 4.0), 1e-10);
}

TEST(Rho, RejectsInvalidChannel)
{
    EXPECT_THROW(rho1(1.0, 2.0), ValidationError);
    EXPECT_THROW(rho2(0.0, 4.0), ValidationError);
    EXPECT_THROW(ChannelParams({1.0, 4.0, 0.0}).validated(), ValidationError);
}

TEST(Rho, ConstantsIdentity)
{
    for (double alpha : {2.5, 3.0, 4.0}) {
        const auto c = RhoConstants::compute(ChannelParams{2.0, alpha, 1.0});
        EXPECT_NEAR(c.B + c.C, 1.0 + c.rho1, 1e-14);
        EXPECT_GT(c.B, 0.0);
        EXPECT_LT(c.B, 1.0);
    }
}

TEST(Channel, DecibelRoundTrip)
{
    for (double db : {-10.0, -3.0, 0.0, 3.0, 7.5, 20.0})
        EXPECT_NEAR(ChannelParams::linear_to_db(ChannelParams::db_to_linear(db)), db, 1e-12);
    EXPECT_EQ(ChannelParams::from_db(0.0, 4.0).threshold, 1.0);
}

TEST(SuccessProb, CacheAgnostic)
{
    EXPECT_NEAR(success_prob_p1(1.0, 1.0, 4.0), 1.0 / (1.0 + kQuarterPi), 1e-12);
    EXPECT_NEAR(success_prob_p1(1.0, 1.0, 4.0), 0.56010, 1e-5);
    EXPECT_EQ(success_prob_p1(0.0, 1.0, 4.0), 0.0);
    EXPECT_NEAR(success_prob_p1(0.5, 1.0, 4.0), 0.28005, 1e-5);
    EXPECT_THROW(success_prob_p1(1.5, 1.0, 4.0), ValidationError);
}

TEST(SuccessProb, CacheAware)
{
    EXPECT_NEAR(success_prob_p2(1.0, 1.0, 4.0), success_prob_p1(1.0, 1.0, 4.0), 1e-14);
    EXPECT_EQ(success_prob_p2(0.0, 1.0, 4.0), 0.0);
    EXPECT_NEAR(success_prob_p2(0.5, 1.0, 4.0), 0.29795651084055309802, 1e-12);
}

TEST(SuccessProb, CacheAwareIncreasingAndConcave)
{
    for (double alpha : {2.5, 3.0, 4.0}) {
        const auto rho = RhoConstants::compute(ChannelParams{1.0, alpha, 1.0});
        double prev = 0.0, prev_slope = INFINITY;
        for (int i = 1; i <= 1000; ++i) {
            const double b = i / 1000.0;
            const double v = success_prob_p2(b, rho);
            EXPECT_GT(v, prev);
            const double slope = (v - prev) * 1000.0;
            EXPECT_LT(slope, prev_slope);
            prev = v;
            prev_slope = slope;
        }
    }
}

TEST(JointCoverage, SingleAttemptReductions)
{
    for (double alpha : {3.0, 4.0}) {
        const ChannelParams ch{1.0, alpha, 1.0};
        const auto rho = RhoConstants::compute(ch);
        EXPECT_NEAR(joint_coverage_p1(1, ch), 1.0 / (1.0 + rho.rho1), 1e-12);
        for (double b : {0.25, 0.5, 1.0}) EXPECT_NEAR(joint_coverage_p2(1, b, ch), success_prob_p2(b, rho), 1e-12);
    }
}

TEST(JointCoverage, FullPlacementCollapsesToNearestCell)
{
    const ChannelParams ch{1.0, 4.0, 1.0};
    for (unsigned k = 1; k <= 6; ++k) EXPECT_NEAR(joint_coverage_p2(k, 1.0, ch), joint_coverage_p1(k, ch), 1e-14);
    EXPECT_EQ(joint_coverage_p2(3, 0.0, ch), 0.0);
    EXPECT_THROW(joint_coverage_p1(0, ch), ValidationError);
}

TEST(JointCoverage, MatchesFrozenQuadrature)
{
    // scipy nested quadrature of the double integrals, good to ~1e-8.
    const ChannelParams ch{1.0, 4.0, 1.0};
    const double p1[] = {0.5600991557739297, 0.4118451219934224, 0.33640340327436286, 0.29008839445341883};
    for (unsigned k = 1; k <= 4; ++k) EXPECT_NEAR(joint_coverage_p1(k, ch), p1[k - 1], 1e-8);
    EXPECT_NEAR(joint_coverage_p1(2, ChannelParams{1.0, 3.0, 1.0}), 0.24278742994684951, 1e-8);
    EXPECT_NEAR(joint_coverage_p1(3, ChannelParams{1.0, 3.0, 1.0}), 0.18489622232851023, 1e-8);
    const double p2[] = {0.2979565121561131, 0.20901735547172082, 0.16897987089921995};
    for (unsigned k = 1; k <= 3; ++k) EXPECT_NEAR(joint_coverage_p2(k, 0.5, ch), p2[k - 1], 1e-8);
    EXPECT_NEAR(joint_coverage_p2(2, 0.25, ch), 0.10529995019430828, 1e-8);
}

TEST(JointCoverage, MatchesDirectNestedIntegral)
{
    for (double lambda : {0.1, 1.0, 100.0}) {
        const ChannelParams ch{1.0, 4.0, lambda};
        EXPECT_NEAR(joint_coverage_p1(2, ch), direct_joint_p1(2, 1.0, 4.0, lambda), 1e-7) << lambda;
        EXPECT_NEAR(joint_coverage_p2(2, 0.5, ch), direct_joint_p2(2, 0.5, 1.0, 4.0, lambda), 1e-7) << lambda;
    }
    EXPECT_NEAR(joint_coverage_p1(3, ChannelParams{1.0, 3.0, 1.0}), direct_joint_p1(3, 1.0, 3.0, 1.0), 1e-7);
    EXPECT_NEAR(joint_coverage_p2(2, 0.25, ChannelParams{1.0, 4.0, 1.0}), direct_joint_p2(2, 0.25, 1.0, 4.0, 1.0),
                1e-7);
    EXPECT_NEAR(joint_coverage_p2(4, 0.8, ChannelParams{2.0, 3.5, 1.0}), direct_joint_p2(4, 0.8, 2.0, 3.5, 1.0),
                1e-7);
}

TEST(JointCoverage, DecreasingAndPositivelyCorrelated)
{
    for (double alpha : {3.0, 4.0}) {
        const ChannelParams ch{1.0, alpha, 1.0};
        const double first = joint_coverage_p1(1, ch);
        double prev = first;
        for (unsigned k = 2; k <= 10; ++k) {
            const double v = joint_coverage_p1(k, ch);
            EXPECT_LT(v, prev);
            EXPECT_GT(v, 0.0);
            EXPECT_GE(v, std::pow(first, k));
            prev = v;
        }
    }
}

TEST(JointCoverage, DensityInvariance)
{
    for (unsigned k : {1u, 2u, 5u})
        for (double lambda : {0.1, 100.0}) {
            EXPECT_NEAR(joint_coverage_p1(k, {1.0, 4.0, lambda}), joint_coverage_p1(k, {1.0, 4.0, 1.0}), 1e-12);
            EXPECT_NEAR(joint_coverage_p2(k, 0.3, {1.0, 4.0, lambda}), joint_coverage_p2(k, 0.3, {1.0, 4.0, 1.0}),
                        1e-12);
        }
}

TEST(InclusionExclusion, BinomialCoefficients)
{
    EXPECT_EQ(binomial(5, 2), 10.0);
    EXPECT_EQ(binomial(30, 15), 155117520.0);
    EXPECT_EQ(binomial(7, 0), 1.0);
}

TEST(InclusionExclusion, IndependentEventsGiveComplement)
{
    // With P(all k succeed) = p^k the alternating sum is 1 - (1-p)^n.
    for (unsigned n : {1u, 2u, 5u, 10u, 30u}) {
        std::vector<double> terms(n);
        for (unsigned k = 1; k <= n; ++k) terms[k - 1] = std::pow(0.3, k);
        EXPECT_NEAR(inclusion_exclusion(n, terms), 1.0 - std::pow(0.7, n), 1e-12) << n;
    }
}

TEST(StaticSuccess, TwoAttemptsByHand)
{
    const ChannelParams ch{1.0, 4.0, 1.0};
    const JointCoverageTable table(ch, 4);
    EXPECT_NEAR(table.static_coverage_p1(2), 2 * joint_coverage_p1(1, ch) - joint_coverage_p1(2, ch), 1e-14);
    EXPECT_NEAR(table.static_coverage_p1(2), 0.70835319, 1e-8);
    EXPECT_NEAR(table.static_success_p2(2, 0.5), 2 * joint_coverage_p2(1, 0.5, ch) - joint_coverage_p2(2, 0.5, ch),
                1e-14);
    EXPECT_THROW(table.p1(5), ValidationError);
}

TEST(StaticSuccess, DerivativeMatchesFiniteDifference)
{
    const JointCoverageTable table(ChannelParams{1.0, 4.0, 1.0}, 6);
    for (unsigned n : {1u, 3u, 6u})
        for (double b : {0.1, 0.5, 0.9}) {
            const double h = 1e-6;
            const double fd = (table.static_success_p2(n, b + h) - table.static_success_p2(n, b - h)) / (2 * h);
            EXPECT_NEAR(table.static_success_p2_derivative(n, b), fd, 1e-7);
        }
}

TEST(SuccessModel, DerivativesMatchFiniteDifferences)
{
    const ChannelParams ch{1.0, 4.0, 1.0};
    for (auto policy : {Policy::CacheAgnostic, Policy::CacheAware})
        for (auto mobility : {Mobility::Static, Mobility::Mobile})
            for (unsigned n : {1u, 2u, 5u}) {
                const SuccessModel m(Scenario{policy, mobility, n}, ch);
                for (double b : {0.2, 0.6}) {
                    const double h = 1e-6;
                    EXPECT_NEAR(m.derivative(b), (m.success(b + h) - m.success(b - h)) / (2 * h), 1e-7);
                    EXPECT_NEAR(m.outage(b), 1.0 - m.success(b), 1e-14);
                }
            }
}

TEST(SuccessModel, StaticCapIsEnforced)
{
    const ChannelParams ch{1.0, 4.0, 1.0};
    EXPECT_NO_THROW(SuccessModel(Scenario{Policy::CacheAware, Mobility::Static, kStaticAttemptCap}, ch));
    EXPECT_THROW(SuccessModel(Scenario{Policy::CacheAware, Mobility::Static, kStaticAttemptCap + 1}, ch),
                 ValidationError);
    EXPECT_NO_THROW(SuccessModel(Scenario{Policy::CacheAware, Mobility::Mobile, 1000}, ch));
    EXPECT_THROW(Scenario({Policy::CacheAware, Mobility::Mobile, 0}).validated(), ValidationError);
}

TEST(HitProb, SingleFileMobileClosedForm)
{
    const ChannelParams ch{1.0, 4.0, 1.0};
    const auto lib = ZipfLibrary::zipf(1, 1.2, 1);
    const auto b = validate_placement(std::vector<double>{1.0}, 1);
    const double pc = 1.0 / (1.0 + rho1(1.0, 4.0));
    for (unsigned n : {1u, 2u, 7u, 50u})
        EXPECT_NEAR(hit_prob(Scenario{Policy::CacheAgnostic, Mobility::Mobile, n}, b, lib, ch).value,
                    1.0 - std::pow(1.0 - pc, n), 1e-12);
}

TEST(HitProb, MobilityIrrelevantForOneAttempt)
{
    const ChannelParams ch{1.0, 4.0, 1.0};
    const auto lib = ZipfLibrary::zipf(3, 1.2, 1);
    const auto b = validate_placement(std::vector<double>{0.5, 0.3, 0.2}, 1);
    for (auto policy : {Policy::CacheAgnostic, Policy::CacheAware})
        EXPECT_NEAR(hit_prob(Scenario{policy, Mobility::Static, 1}, b, lib, ch).value,
                    hit_prob(Scenario{policy, Mobility::Mobile, 1}, b, lib, ch).value, 1e-12);
}

TEST(HitProb, MonotoneInAttemptsAndMobilityHelps)
{
    const auto lib = ZipfLibrary::zipf(3, 0.8, 1);
    const auto b = validate_placement(std::vector<double>{0.6, 0.3, 0.1}, 1);
    for (double alpha : {3.0, 4.0}) {
        const ChannelParams ch{1.0, alpha, 1.0};
        for (auto policy : {Policy::CacheAgnostic, Policy::CacheAware}) {
            double prev_static = 0.0, prev_mobile = 0.0;
            for (unsigned n = 1; n <= kStaticAttemptCap; ++n) {
                const double s = hit_prob(Scenario{policy, Mobility::Static, n}, b, lib, ch).value;
                const double m = hit_prob(Scenario{policy, Mobility::Mobile, n}, b, lib, ch).value;
                EXPECT_GE(s, prev_static - 1e-12) << n;
                EXPECT_GE(m, prev_mobile - 1e-12) << n;
                EXPECT_GE(m, s - 1e-12) << n;
                EXPECT_GE(s, 0.0);
                EXPECT_LE(m, 1.0);
                prev_static = s;
                prev_mobile = m;
            }
        }
    }
}

TEST(HitProb, DensityInvariance)
{
    const auto lib = ZipfLibrary::zipf(2, 1.2, 1);
    const auto b = validate_placement(std::vector<double>{0.7, 0.3}, 1);
    for (auto policy : {Policy::CacheAgnostic, Policy::CacheAware})
        for (auto mobility : {Mobility::Static, Mobility::Mobile})
            for (double lambda : {0.1, 100.0})
                EXPECT_NEAR(hit_prob(Scenario{policy, mobility, 4}, b, lib, {1.0, 4.0, lambda}).value,
                            hit_prob(Scenario{policy, mobility, 4}, b, lib, {1.0, 4.0, 1.0}).value, 1e-12);
}

TEST(HitProb, StaticBeyondCapFallsBackToSimulation)
{
    const auto lib = ZipfLibrary::zipf(2, 1.2, 1);
    const auto b = validate_placement(std::vector<double>{0.7, 0.3}, 1);
    SimConfig cfg;
    cfg.trials = 2000;
    cfg.seed = 5;
    const auto r = hit_prob(Scenario{Policy::CacheAgnostic, Mobility::Static, 40}, b, lib, {1.0, 4.0, 1.0}, cfg);
    EXPECT_TRUE(r.monte_carlo);
    EXPECT_GT(r.ci_halfwidth_99, 0.0);
    ASSERT_FALSE(r.flags.empty());
    EXPECT_EQ(r.flags.front(), "static-attempts-above-cap:monte-carlo");
    // Bounded by the cap value and by perfect coverage of a cached file.
    const double at_cap =
        hit_prob(Scenario{Policy::CacheAgnostic, Mobility::Static, kStaticAttemptCap}, b, lib, {1.0, 4.0, 1.0}).value;
    EXPECT_GT(r.value + r.ci_halfwidth_99, at_cap);
    EXPECT_LE(r.value, 0.7 * 0.6967304549770724 + 0.3 * 0.3032695450229276 + r.ci_halfwidth_99);
}
