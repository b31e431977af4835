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

// Analytic coverage, success and hit probabilities for probabilistic caching
// in an interference-limited Poisson small-cell network with Rayleigh fading.
//
// All quantities here are invariant to the base-station density: after the
// radial substitution v = u / r the density only rescales the nearest-cell
// distance, and the Gaussian-type outer expectation integrates in closed form.
// The joint coverage of k attempts under common geometry therefore reduces to
//
//   P1(k)    = 1 / (1 + 2 I_k)
//   P2(k, b) = b / (b + 2 I_k + 2 (1 - b) H_k)
//
// where I_k and H_k are 1-D integrals of 1 - (1 + T v^-alpha)^-k over the
// interferer radius beyond / inside the serving distance.

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cachehit/error.hpp"
#include "cachehit/popularity.hpp"

namespace cachehit {

/// Physical-layer environment: SIR threshold (linear), path-loss exponent
/// and base-station density. Density never enters an analytic result.
struct ChannelParams {
    double threshold = 1.0;
    double alpha = 4.0;
    double density = 1.0;

    static ChannelParams from_db(double threshold_db, double alpha, double density = 1.0)
    {
        return ChannelParams{db_to_linear(threshold_db), alpha, density}.validated();
    }

    static double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
    static double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

    ChannelParams validated() const
    {
        if (!(threshold > 0.0) || !std::isfinite(threshold))
            throw ValidationError("T", "SIR threshold must be positive and finite");
        if (!(alpha > 2.0) || !std::isfinite(alpha))
            throw ValidationError("alpha", "path-loss exponent must exceed 2");
        if (!(density > 0.0) || !std::isfinite(density))
            throw ValidationError("lambda", "density must be positive and finite");
        return *this;
    }
};

enum class Policy { CacheAgnostic, CacheAware };  // P1, P2
enum class Mobility { Static, Mobile };

inline const char* to_string(Policy p) { return p == Policy::CacheAgnostic ? "P1" : "P2"; }
inline const char* to_string(Mobility m) { return m == Mobility::Static ? "static" : "mobile"; }

struct Scenario {
    Policy policy = Policy::CacheAgnostic;
    Mobility mobility = Mobility::Mobile;
    unsigned attempts = 1;  // maximum number of transmissions n

    Scenario validated() const
    {
        if (attempts == 0) throw ValidationError("n", "at least one transmission is required");
        return *this;
    }
};

/// Largest n for which the static inclusion-exclusion sum is evaluated
/// analytically; beyond it binomial cancellation eats the precision.
inline constexpr unsigned kStaticAttemptCap = 30;

namespace detail {

inline constexpr double kQuadTolerance = 1e-12;
inline constexpr unsigned kQuadDepth = 15;

template <class F>
double integrate(F f, double lo, double hi)
{
    double err = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        f, lo, hi, kQuadDepth, kQuadTolerance, &err);
    return v;
}

/// (1 - (1 + e)^-k) / e, continuous at e = 0 where it equals k.
inline double attempt_kernel(double e, unsigned k)
{
    if (e < 1e-300) return static_cast<double>(k);
    return -std::expm1(-static_cast<double>(k) * std::log1p(e)) / e;
}

inline void check_channel(double threshold, double alpha)
{
    ChannelParams{threshold, alpha, 1.0}.validated();
}

}  // namespace detail

/// Interference integral for the cache-agnostic policy:
/// T^{2/a} * int_{T^{-2/a}}^inf du / (1 + u^{a/2}).
///
/// Evaluated as qT int_0^1 dz / (1 + T z^{pq}) with p = a/2, q = 1/(p-1),
/// which maps the slowly decaying tail onto a bounded integrand.
inline double rho1(double threshold, double alpha)
{
    detail::check_channel(threshold, alpha);
    const double p = alpha / 2.0;
    const double q = 1.0 / (p - 1.0);
    const double pq = p * q;
    return q * threshold *
           detail::integrate([&](double z) { return 1.0 / (1.0 + threshold * std::pow(z, pq)); }, 0.0, 1.0);
}

/// T^{2/a} * int_0^{T^{-2/a}} du / (1 + u^{a/2}), evaluated as
/// int_0^1 dx / (1 + x^{a/2} / T).
inline double rho2(double threshold, double alpha)
{
    detail::check_channel(threshold, alpha);
    const double p = alpha / 2.0;
    return detail::integrate([&](double x) { return threshold / (threshold + std::pow(x, p)); }, 0.0, 1.0);
}

/// T^{2/a} * int_0^inf du / (1 + u^{a/2}) in closed form; rho1 + rho2.
inline double rho_total(double threshold, double alpha)
{
    detail::check_channel(threshold, alpha);
    const double p = alpha / 2.0;
    const double pi = boost::math::constants::pi<double>();
    return std::pow(threshold, 1.0 / p) * (pi / p) / std::sin(pi / p);
}

struct RhoConstants {
    double rho1 = 0.0;
    double rho2 = 0.0;
    double B = 1.0;  // 1 - rho2
    double C = 0.0;  // rho1 + rho2

    static RhoConstants compute(const ChannelParams& params)
    {
        RhoConstants r;
        r.rho1 = cachehit::rho1(params.threshold, params.alpha);
        r.rho2 = cachehit::rho2(params.threshold, params.alpha);
        r.B = 1.0 - r.rho2;
        r.C = r.rho1 + r.rho2;
        return r;
    }

    /// Single-attempt coverage of the nearest cell, 1 / (1 + rho1).
    double nearest_coverage() const { return 1.0 / (1.0 + rho1); }
};

inline void check_probability(double b, const char* field = "b")
{
    if (!(b >= 0.0 && b <= 1.0)) throw ValidationError(field, "caching probability must lie in [0, 1]");
}

/// Per-attempt success under the cache-agnostic policy: b / (1 + rho1).
inline double success_prob_p1(double b, double threshold, double alpha)
{
    check_probability(b);
    return b / (1.0 + rho1(threshold, alpha));
}

inline double success_prob_p2(double b, const RhoConstants& rho)
{
    check_probability(b);
    if (b == 0.0) return 0.0;
    return b / (b + rho.rho1 + (1.0 - b) * rho.rho2);
}

/// Per-attempt success under the cache-aware policy:
/// b / (b + rho1 + (1 - b) rho2). Zero when no cell holds the file.
inline double success_prob_p2(double b, double threshold, double alpha)
{
    check_probability(b);
    if (b == 0.0) return 0.0;
    return success_prob_p2(b, RhoConstants::compute(ChannelParams{threshold, alpha, 1.0}.validated()));
}

/// Interference integrals for k attempts under common geometry.
/// `beyond` = I_k covers interferers farther than the serving cell,
/// `inside` = H_k covers the disc inside it (normalized radius).
struct JointIntegrals {
    double beyond = 0.0;
    double inside = 0.0;

    static JointIntegrals compute(unsigned k, double threshold, double alpha)
    {
        if (k == 0) throw ValidationError("k", "number of attempts must be positive");
        detail::check_channel(threshold, alpha);
        const double p = alpha / 2.0;
        const double q = 1.0 / (p - 1.0);
        const double pq = p * q;
        JointIntegrals out;
        out.beyond = 0.5 * q * threshold * detail::integrate(
            [&](double z) { return detail::attempt_kernel(threshold * std::pow(z, pq), k); }, 0.0, 1.0);
        out.inside = 0.5 * detail::integrate(
            [&](double x) {
                const double xp = std::pow(x, p);
                // 1 - (x^p / (x^p + T))^k
                return -std::expm1(static_cast<double>(k) * std::log(xp / (xp + threshold)));
            },
            0.0, 1.0);
        return out;
    }
};

/// Probability that all k attempts clear the threshold when the user stays
/// attached to its nearest cell (geometry fixed, fading redrawn).
inline double joint_coverage_p1(unsigned k, const ChannelParams& params)
{
    const auto params_ok = params.validated();
    const auto j = JointIntegrals::compute(k, params_ok.threshold, params_ok.alpha);
    return 1.0 / (1.0 + 2.0 * j.beyond);
}

/// Joint coverage of k attempts when the user attaches to the nearest cell
/// holding the file (density b*lambda); cells without the file interfere from
/// the whole plane. Returns 0 for b = 0.
inline double joint_coverage_p2(unsigned k, double b, const ChannelParams& params)
{
    check_probability(b);
    const auto params_ok = params.validated();
    const auto j = JointIntegrals::compute(k, params_ok.threshold, params_ok.alpha);
    if (b == 0.0) return 0.0;
    return b / (b + 2.0 * j.beyond + 2.0 * (1.0 - b) * j.inside);
}

/// Binomial coefficient as a double; exact for the n handled here.
inline double binomial(unsigned n, unsigned k)
{
    double c = 1.0;
    for (unsigned j = 1; j <= k; ++j) c = c * static_cast<double>(n - k + j) / static_cast<double>(j);
    return std::round(c);
}

/// Compensated sum of C(n,k) (-1)^{k+1} terms[k-1] over k = 1..n.
inline double inclusion_exclusion(unsigned n, std::span<const double> terms)
{
    double sum = 0.0;
    double comp = 0.0;
    for (unsigned k = 1; k <= n; ++k) {
        const double sign = (k % 2 == 1) ? 1.0 : -1.0;
        const double y = sign * binomial(n, k) * terms[k - 1] - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

/// Joint-coverage integrals for k = 1..n, computed once per channel so that
/// static success probabilities can be evaluated cheaply for many placements.
class JointCoverageTable {
public:
    JointCoverageTable(const ChannelParams& params, unsigned max_attempts)
    {
        const auto p = params.validated();
        if (max_attempts == 0) throw ValidationError("n", "at least one transmission is required");
        integrals_.reserve(max_attempts);
        for (unsigned k = 1; k <= max_attempts; ++k)
            integrals_.push_back(JointIntegrals::compute(k, p.threshold, p.alpha));
    }

    unsigned max_attempts() const noexcept { return static_cast<unsigned>(integrals_.size()); }

    double p1(unsigned k) const { return 1.0 / (1.0 + 2.0 * at(k).beyond); }

    double p2(unsigned k, double b) const
    {
        if (b <= 0.0) return 0.0;
        const auto& j = at(k);
        return b / (b + 2.0 * j.beyond + 2.0 * (1.0 - b) * j.inside);
    }

    /// d/db of p2(k, b).
    double p2_derivative(unsigned k, double b) const
    {
        const auto& j = at(k);
        const double d = 2.0 * (j.beyond + j.inside);
        const double denom = b * (1.0 - 2.0 * j.inside) + d;
        return d / (denom * denom);
    }

    /// Probability of at least one covered attempt out of n, nearest-cell
    /// attachment (does not include the caching factor b).
    double static_coverage_p1(unsigned n) const
    {
        std::vector<double> terms(n);
        for (unsigned k = 1; k <= n; ++k) terms[k - 1] = p1(k);
        return inclusion_exclusion(n, terms);
    }

    double static_success_p2(unsigned n, double b) const
    {
        if (b <= 0.0) return 0.0;
        std::vector<double> terms(n);
        for (unsigned k = 1; k <= n; ++k) terms[k - 1] = p2(k, b);
        return inclusion_exclusion(n, terms);
    }

    double static_success_p2_derivative(unsigned n, double b) const
    {
        std::vector<double> terms(n);
        for (unsigned k = 1; k <= n; ++k) terms[k - 1] = p2_derivative(k, b);
        return inclusion_exclusion(n, terms);
    }

private:
    const JointIntegrals& at(unsigned k) const
    {
        if (k == 0 || k > integrals_.size()) throw ValidationError("k", "attempt index out of table range");
        return integrals_[k - 1];
    }

    std::vector<JointIntegrals> integrals_;
};

/// Success probability of one file within n attempts as a function of its
/// caching probability, for a fixed scenario and channel. Also provides the
/// derivative used by the optimizers.
class SuccessModel {
public:
    SuccessModel(const Scenario& scenario, const ChannelParams& params)
        : scenario_(scenario.validated()), rho_(RhoConstants::compute(params.validated()))
    {
        if (scenario_.mobility == Mobility::Static) {
            if (scenario_.attempts > kStaticAttemptCap)
                throw ValidationError("n", "static analytic evaluation is limited to n <= " +
                                               std::to_string(kStaticAttemptCap));
            table_.emplace_back(params, scenario_.attempts);
            static_coverage_p1_ = table_.front().static_coverage_p1(scenario_.attempts);
        }
    }

    static bool analytic_available(const Scenario& scenario)
    {
        return scenario.mobility == Mobility::Mobile || scenario.attempts <= kStaticAttemptCap;
    }

    const Scenario& scenario() const noexcept { return scenario_; }
    const RhoConstants& rho() const noexcept { return rho_; }

    /// Single-attempt success probability.
    double per_attempt(double b) const
    {
        if (scenario_.policy == Policy::CacheAgnostic) return b * rho_.nearest_coverage();
        if (b <= 0.0) return 0.0;
        return b / (rho_.B * b + rho_.C);
    }

    double success(double b) const
    {
        const unsigned n = scenario_.attempts;
        if (scenario_.mobility == Mobility::Mobile) {
            const double ps = per_attempt(b);
            return -std::expm1(static_cast<double>(n) * std::log1p(-ps));
        }
        if (scenario_.policy == Policy::CacheAgnostic) return b * static_coverage_p1_;
        return table_.front().static_success_p2(n, b);
    }

    /// 1 - success(b), computed without cancellation in the mobile case so
    /// that optimizers still see progress when success is within an ulp of 1.
    double outage(double b) const
    {
        if (scenario_.mobility == Mobility::Mobile)
            return std::exp(static_cast<double>(scenario_.attempts) * std::log1p(-per_attempt(b)));
        return 1.0 - success(b);
    }

    double derivative(double b) const
    {
        const double n = scenario_.attempts;
        if (scenario_.mobility == Mobility::Mobile) {
            if (scenario_.policy == Policy::CacheAgnostic) {
                const double pc = rho_.nearest_coverage();
                return n * pc * std::pow(1.0 - b * pc, n - 1.0);
            }
            return std::exp(log_derivative_p2(b));
        }
        if (scenario_.policy == Policy::CacheAgnostic) return static_coverage_p1_;
        return table_.front().static_success_p2_derivative(scenario_.attempts, b);
    }

    /// log of n C ((B-1) b + C)^{n-1} / (B b + C)^{n+1}, the marginal gain of
    /// the mobile cache-aware objective. Kept in log form so large n neither
    /// underflows nor overflows.
    double log_derivative_p2(double b) const
    {
        const double n = scenario_.attempts;
        return std::log(n * rho_.C) + (n - 1.0) * std::log((rho_.B - 1.0) * b + rho_.C) -
               (n + 1.0) * std::log(rho_.B * b + rho_.C);
    }

    /// Static cache-agnostic coverage within n attempts (excluding the b factor).
    double static_coverage_p1() const { return static_coverage_p1_; }

private:
    Scenario scenario_;
    RhoConstants rho_;
    std::vector<JointCoverageTable> table_;  // holds one entry in the static case
    double static_coverage_p1_ = 0.0;
};

/// Sum_i P_Ri * success_i(b_i) for a placement.
inline double analytic_hit_prob(const SuccessModel& model, std::span<const double> b,
                                std::span<const double> request_probs)
{
    if (b.size() != request_probs.size())
        throw ValidationError("placement", "placement length does not match library size");
    double hit = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) hit += request_probs[i] * model.success(b[i]);
    return std::clamp(hit, 0.0, 1.0);
}

/// Sum_i P_Ri * outage_i(b_i), i.e. 1 - hit probability.
inline double analytic_miss_prob(const SuccessModel& model, std::span<const double> b,
                                 std::span<const double> request_probs)
{
    if (b.size() != request_probs.size())
        throw ValidationError("placement", "placement length does not match library size");
    double miss = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) miss += request_probs[i] * model.outage(b[i]);
    return miss;
}

}  // namespace cachehit
