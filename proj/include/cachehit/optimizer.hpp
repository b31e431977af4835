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

// Optimal probabilistic cache placement on the capped simplex
// {sum b_i = L, 0 <= b_i <= 1}:
//
//  - mobile, cache-agnostic: water-filling in closed form per dual value,
//    dual found by bisection (general L);
//  - mobile, cache-aware: per-file stationarity roots nested in a dual
//    bisection (L = 1), plus the single-attempt closed form;
//  - static, cache-agnostic: the objective is linear, so the top-L files;
//  - static cache-aware and anything with general L: projected ascent.
//
// Every solver reports its dual variables so callers can audit the KKT
// system. Stationarity is written as f'_i + nu + mu_i - w_i = 0 with
// mu, w >= 0, mu_i b_i = 0 and w_i (b_i - 1) = 0.

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cachehit/coverage.hpp"
#include "cachehit/error.hpp"
#include "cachehit/popularity.hpp"

namespace cachehit {

inline constexpr double kStationarityTolerance = 1e-7;

struct KktSolution {
    PlacementVector b_star;
    double nu_star = 0.0;
    std::vector<double> mu_star;  // duals of b_i >= 0
    std::vector<double> w_star;   // duals of b_i <= 1
    double stationarity_residual = 0.0;
    double objective = 0.0;  // hit probability at b_star
    bool certified = false;
    std::string method;
    std::vector<std::string> notes;
};

namespace detail {

inline std::vector<double> gradient(const SuccessModel& model, std::span<const double> probs,
                                    std::span<const double> b)
{
    std::vector<double> g(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) g[i] = probs[i] * model.derivative(b[i]);
    return g;
}

}  // namespace detail

/// Fill in duals, residual and objective for a feasible placement. When `nu`
/// is not given it is chosen as the best fit: minus the mean marginal gain of
/// the interior coordinates, or the midpoint of the admissible interval when
/// every coordinate sits on a bound.
inline KktSolution certify(const SuccessModel& model, const ZipfLibrary& lib, std::vector<double> b,
                           std::optional<double> nu = std::nullopt, std::string method = "certify")
{
    const auto probs = lib.request_probs();
    if (b.size() != probs.size()) throw ValidationError("placement", "length does not match library size");

    const auto g = detail::gradient(model, probs, b);
    double nu_value = 0.0;
    if (nu) {
        nu_value = *nu;
    } else {
        double interior_sum = 0.0;
        std::size_t interior = 0;
        double lower = -std::numeric_limits<double>::infinity();  // from b = 1: nu >= -g
        double upper = std::numeric_limits<double>::infinity();   // from b = 0: nu <= -g
        for (std::size_t i = 0; i < b.size(); ++i) {
            if (b[i] <= 0.0)
                upper = std::min(upper, -g[i]);
            else if (b[i] >= 1.0)
                lower = std::max(lower, -g[i]);
            else {
                interior_sum += g[i];
                ++interior;
            }
        }
        if (interior > 0)
            nu_value = -interior_sum / static_cast<double>(interior);
        else if (std::isfinite(lower) && std::isfinite(upper))
            nu_value = 0.5 * (lower + upper);
        else
            nu_value = std::isfinite(lower) ? lower : upper;
    }

    KktSolution sol{validate_placement(b, lib.capacity()), 0.0, {}, {}, 0.0, 0.0, false, {}, {}};
    sol.nu_star = nu_value;
    sol.mu_star.assign(b.size(), 0.0);
    sol.w_star.assign(b.size(), 0.0);
    double residual = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        const double slack = g[i] + nu_value;
        if (b[i] <= 0.0)
            sol.mu_star[i] = std::max(0.0, -slack);
        else if (b[i] >= 1.0)
            sol.w_star[i] = std::max(0.0, slack);
        residual = std::max(residual, std::abs(slack + sol.mu_star[i] - sol.w_star[i]));
    }
    sol.stationarity_residual = residual;
    sol.objective = analytic_hit_prob(model, sol.b_star.values(), probs);
    sol.certified = residual <= kStationarityTolerance;
    sol.method = std::move(method);
    return sol;
}

/// Largest-probability-first file order, ties by lower index.
inline std::vector<std::size_t> popularity_order(const ZipfLibrary& lib)
{
    std::vector<std::size_t> order(lib.num_files());
    std::iota(order.begin(), order.end(), 0);
    const auto probs = lib.request_probs();
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) { return probs[a] > probs[c]; });
    return order;
}

inline std::vector<double> top_capacity_indicator(const ZipfLibrary& lib)
{
    std::vector<double> b(lib.num_files(), 0.0);
    const auto order = popularity_order(lib);
    for (std::size_t r = 0; r < lib.capacity(); ++r) b[order[r]] = 1.0;
    return b;
}

/// Mobile user, cache-agnostic attachment, any capacity L.
///
/// The per-file optimum for a dual value nu is the clamped water level
/// b_i = (1 - s c_i) / p_c with s = (-nu)^{1/(n-1)} and
/// c_i = (P_Ri n p_c)^{-1/(n-1)}; the sum is piecewise linear and decreasing
/// in s, so bisection on s locates the active set and the level is then
/// solved exactly on it.
inline KktSolution optimal_mobile_p1(const ZipfLibrary& lib, const ChannelParams& params, unsigned n)
{
    if (n == 0) throw ValidationError("n", "at least one transmission is required");
    const SuccessModel model(Scenario{Policy::CacheAgnostic, Mobility::Mobile, n}, params);
    const std::size_t K = lib.num_files();
    const auto L = static_cast<double>(lib.capacity());
    const auto probs = lib.request_probs();
    const double pc = model.rho().nearest_coverage();

    if (lib.capacity() == K) {
        auto sol = certify(model, lib, std::vector<double>(K, 1.0), std::nullopt, "water-filling");
        sol.notes.emplace_back("capacity equals library size");
        return sol;
    }
    if (n == 1) {
        // Linear objective: cache the L most requested files. Any nu between
        // the marginal gains of the last cached and first uncached file works.
        auto sol = certify(model, lib, top_capacity_indicator(lib), std::nullopt, "water-filling");
        sol.notes.emplace_back("single transmission: linear objective");
        return sol;
    }

    const double inv = 1.0 / (static_cast<double>(n) - 1.0);
    std::vector<double> c(K);
    for (std::size_t i = 0; i < K; ++i) {
        const double scale = probs[i] * static_cast<double>(n) * pc;
        c[i] = scale > 0.0 ? std::pow(scale, -inv) : std::numeric_limits<double>::infinity();
    }
    auto placement_at = [&](double s) {
        std::vector<double> b(K);
        for (std::size_t i = 0; i < K; ++i) b[i] = std::clamp((1.0 - s * c[i]) / pc, 0.0, 1.0);
        return b;
    };
    auto total_at = [&](double s) {
        const auto b = placement_at(s);
        return std::accumulate(b.begin(), b.end(), 0.0);
    };

    // At s_lo every file is fully cached, at s_hi none is.
    double s_lo = std::numeric_limits<double>::infinity();
    double s_hi = 0.0;
    for (double ci : c) {
        if (!std::isfinite(ci)) continue;
        s_lo = std::min(s_lo, (1.0 - pc) / ci);
        s_hi = std::max(s_hi, 1.0 / ci);
    }
    if (!std::isfinite(s_lo)) s_lo = 0.0;
    for (int it = 0; it < 400 && s_hi - s_lo > 1e-16 * s_hi; ++it) {
        const double mid = 0.5 * (s_lo + s_hi);
        if (total_at(mid) > L)
            s_lo = mid;
        else
            s_hi = mid;
    }
    double s = 0.5 * (s_lo + s_hi);

    // Exact level on the identified active set.
    {
        const auto b = placement_at(s);
        double interior_c = 0.0;
        double interior = 0.0;
        double full = 0.0;
        for (std::size_t i = 0; i < K; ++i) {
            if (b[i] >= 1.0)
                full += 1.0;
            else if (b[i] > 0.0) {
                interior += 1.0;
                interior_c += c[i];
            }
        }
        if (interior > 0.0) {
            const double exact = (interior - pc * (L - full)) / interior_c;
            if (std::abs(total_at(exact) - L) <= std::abs(total_at(s) - L)) s = exact;
        }
    }

    auto b = placement_at(s);
    // Remove the last few ulps of drift so the placement validates exactly.
    const double drift = std::accumulate(b.begin(), b.end(), 0.0) - L;
    if (drift != 0.0) {
        for (std::size_t i = 0; i < K; ++i) {
            if (b[i] > 0.0 && b[i] < 1.0) {
                b[i] = std::clamp(b[i] - drift, 0.0, 1.0);
                break;
            }
        }
    }
    const double nu = -std::pow(s, static_cast<double>(n) - 1.0);
    return certify(model, lib, std::move(b), nu, "water-filling");
}

/// Two-file closed form (K = 2, L = 1) for the mobile cache-agnostic case.
/// Returns (b1, b2).
inline std::pair<double, double> corollary1_two_file(double gamma, double coverage, unsigned n)
{
    if (!(gamma > 0.0)) throw ValidationError("gamma", "Zipf exponent must be positive");
    if (!(coverage > 0.0 && coverage < 1.0)) throw ValidationError("p_c", "coverage must lie in (0, 1)");
    if (n == 0) throw ValidationError("n", "at least one transmission is required");
    if (n == 1) return {1.0, 0.0};
    const double threshold = 1.0 + gamma / std::log2(1.0 / (1.0 - coverage));
    if (static_cast<double>(n) < threshold) return {1.0, 0.0};
    const double a = std::pow(2.0, gamma / (static_cast<double>(n) - 1.0));
    const double b1 = (a - 1.0 + coverage) / ((a + 1.0) * coverage);
    return {b1, 1.0 - b1};
}

/// Number of transmissions below which only the most popular file is cached
/// (two-file library, cache-agnostic, mobile).
inline double corollary1_threshold(double gamma, double coverage)
{
    return 1.0 + gamma / std::log2(1.0 / (1.0 - coverage));
}

/// Single-attempt cache-aware optimum (L = 1) by water-filling over the
/// number K* of cached files:
///   b_i = [(sqrt(P_Ri / eps) - C) / B]^+,
///   sqrt(eps) = sum_{i<=K*} sqrt(P_Ri) / (B + K* C),
/// which makes the top-K* entries sum to one.
inline PlacementVector corollary2_single_tx_p2(const ZipfLibrary& lib, const ChannelParams& params)
{
    if (lib.capacity() != 1) throw ValidationError("L", "single-attempt closed form assumes unit capacity");
    const auto rho = RhoConstants::compute(params.validated());
    const auto order = popularity_order(lib);
    const auto probs = lib.request_probs();
    const std::size_t K = lib.num_files();

    for (std::size_t kstar = K; kstar >= 1; --kstar) {
        double root_sum = 0.0;
        for (std::size_t r = 0; r < kstar; ++r) root_sum += std::sqrt(probs[order[r]]);
        const double sqrt_eps = root_sum / (rho.B + static_cast<double>(kstar) * rho.C);
        std::vector<double> b(K, 0.0);
        bool ok = true;
        for (std::size_t r = 0; r < K; ++r) {
            const double raw = (std::sqrt(probs[order[r]]) / sqrt_eps - rho.C) / rho.B;
            if (r < kstar) {
                if (!(raw > 0.0) || raw > 1.0 + 1e-12) ok = false;
                b[order[r]] = std::clamp(raw, 0.0, 1.0);
            } else if (raw > 0.0) {
                ok = false;
            }
        }
        if (ok) {
            const double drift = std::accumulate(b.begin(), b.end(), 0.0) - 1.0;
            b[order[0]] -= drift;
            return validate_placement(b, 1);
        }
    }
    // Unreachable for valid inputs: K* = 1 always yields b = e_1.
    throw SolverError("no feasible number of cached files found");
}

/// Mobile user, cache-aware attachment, unit capacity.
///
/// For a dual value nu each file takes 0, 1, or the root in (0, 1) of
/// P_Ri n C ((B-1) b + C)^{n-1} / (B b + C)^{n+1} + nu = 0. The dual is found
/// by bisection on log(-nu) over the union of the per-file intervals.
inline KktSolution optimal_mobile_p2(const ZipfLibrary& lib, const ChannelParams& params, unsigned n)
{
    if (n == 0) throw ValidationError("n", "at least one transmission is required");
    if (lib.capacity() != 1)
        throw ValidationError("L", "the cache-aware dual solver assumes unit capacity; "
                                   "use optimal_projected for general L");
    const SuccessModel model(Scenario{Policy::CacheAware, Mobility::Mobile, n}, params);
    const std::size_t K = lib.num_files();
    const auto probs = lib.request_probs();
    if (K == 1) return certify(model, lib, {1.0}, std::nullopt, "dual-bisection");

    // The stationarity function must be decreasing in b for the per-file
    // root to be unique; check on a grid rather than assume it.
    std::vector<std::string> notes;
    bool monotone = true;
    {
        double prev = model.log_derivative_p2(0.0);
        for (int j = 1; j <= 1000; ++j) {
            const double cur = model.log_derivative_p2(j / 1000.0);
            if (!(cur < prev)) monotone = false;
            prev = cur;
        }
    }
    if (!monotone) notes.emplace_back("stationarity function not monotone; scanning for roots");

    const double g0 = model.log_derivative_p2(0.0);
    const double g1 = model.log_derivative_p2(1.0);

    auto file_level = [&](std::size_t i, double t) -> double {
        // t = log(-nu); solve log P_i + log g(b) = t.
        if (probs[i] <= 0.0) return 0.0;
        const double lp = std::log(probs[i]);
        if (t >= lp + g0) return 0.0;
        if (t <= lp + g1) return 1.0;
        auto f = [&](double b) { return lp + model.log_derivative_p2(b) - t; };
        if (!monotone) {
            // Fall back to the first sign change on a fine grid.
            double lo = 0.0;
            for (int j = 1; j <= 4000; ++j) {
                const double hi = j / 4000.0;
                if (f(lo) * f(hi) <= 0.0) {
                    std::uintmax_t iters = 200;
                    auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
                    return 0.5 * (r.first + r.second);
                }
                lo = hi;
            }
            throw SolverError("no stationarity root for file " + std::to_string(i) + " in [0, 1]");
        }
        std::uintmax_t iters = 200;
        auto r = boost::math::tools::toms748_solve(f, 0.0, 1.0, boost::math::tools::eps_tolerance<double>(52), iters);
        if (iters >= 200)
            throw SolverError("stationarity root for file " + std::to_string(i) +
                              " did not converge in bracket [" + std::to_string(r.first) + ", " +
                              std::to_string(r.second) + "]");
        return 0.5 * (r.first + r.second);
    };
    auto placement_at = [&](double t) {
        std::vector<double> b(K);
        for (std::size_t i = 0; i < K; ++i) b[i] = file_level(i, t);
        return b;
    };
    auto total_at = [&](double t) {
        const auto b = placement_at(t);
        return std::accumulate(b.begin(), b.end(), 0.0);
    };

    double t_lo = std::numeric_limits<double>::infinity();
    double t_hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < K; ++i) {
        if (probs[i] <= 0.0) continue;
        t_lo = std::min(t_lo, std::log(probs[i]) + g1);
        t_hi = std::max(t_hi, std::log(probs[i]) + g0);
    }
    for (int it = 0; it < 300 && t_hi - t_lo > 1e-15 * std::max(1.0, std::abs(t_hi)); ++it) {
        const double mid = 0.5 * (t_lo + t_hi);
        const double total = total_at(mid);
        if (std::abs(total - 1.0) < 1e-14) {
            t_lo = t_hi = mid;
            break;
        }
        if (total > 1.0)
            t_lo = mid;
        else
            t_hi = mid;
    }
    const double t = 0.5 * (t_lo + t_hi);
    auto b = placement_at(t);
    const double total = std::accumulate(b.begin(), b.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-8)
        throw SolverError("dual bisection ended with sum b = " + std::to_string(total));
    // Absorb sub-tolerance drift into the largest interior entry.
    std::size_t target = 0;
    for (std::size_t i = 0; i < K; ++i)
        if (b[i] > 0.0 && b[i] < 1.0 && (b[target] <= 0.0 || b[target] >= 1.0 || b[i] > b[target])) target = i;
    b[target] = std::clamp(b[target] - (total - 1.0), 0.0, 1.0);

    auto sol = certify(model, lib, std::move(b), -std::exp(t), "dual-bisection");
    sol.notes = std::move(notes);
    if (!monotone) sol.certified = false;
    return sol;
}

/// Euclidean projection onto {sum x = capacity, 0 <= x <= 1}.
inline std::vector<double> project_capped_simplex(std::span<const double> y, double capacity)
{
    const std::size_t K = y.size();
    auto total_at = [&](double tau) {
        double s = 0.0;
        for (double v : y) s += std::clamp(v - tau, 0.0, 1.0);
        return s;
    };
    double lo = *std::min_element(y.begin(), y.end()) - 1.0;  // sum = K
    double hi = *std::max_element(y.begin(), y.end());        // sum = 0
    for (int it = 0; it < 200 && hi - lo > 1e-16 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (total_at(mid) > capacity)
            lo = mid;
        else
            hi = mid;
    }
    double tau = 0.5 * (lo + hi);
    // Solve the shift exactly on the active set.
    double interior_sum = 0.0;
    double interior = 0.0;
    double full = 0.0;
    for (double v : y) {
        const double x = v - tau;
        if (x >= 1.0)
            full += 1.0;
        else if (x > 0.0) {
            interior_sum += v;
            interior += 1.0;
        }
    }
    if (interior > 0.0) {
        const double exact = (interior_sum + full - capacity) / interior;
        if (std::abs(total_at(exact) - capacity) <= std::abs(total_at(tau) - capacity)) tau = exact;
    }
    std::vector<double> x(K);
    for (std::size_t i = 0; i < K; ++i) x[i] = std::clamp(y[i] - tau, 0.0, 1.0);
    return x;
}

struct ProjectedAscentOptions {
    unsigned max_iterations = 50000;
    /// Stop once the stationarity residual relative to the largest marginal
    /// gain falls below this.
    double relative_tolerance = 1e-11;
    /// Absolute residual required for a certified result.
    double certify_tolerance = 1e-6;
};

/// Projected gradient ascent with Armijo backtracking for any scenario and
/// capacity. Starts from the even placement L/K; deterministic.
inline KktSolution optimal_projected(const Scenario& scenario, const ZipfLibrary& lib,
                                     const ChannelParams& params, ProjectedAscentOptions opts = {})
{
    const SuccessModel model(scenario, params);
    const auto probs = lib.request_probs();
    const std::size_t K = lib.num_files();
    const auto L = static_cast<double>(lib.capacity());

    // Line search on the miss probability: the hit probability itself rounds
    // to 1 for large n long before the placement has converged.
    auto miss = [&](const std::vector<double>& b) { return analytic_miss_prob(model, b, probs); };
    auto relative_residual = [&](const std::vector<double>& b, const std::vector<double>& g) {
        const auto sol = certify(model, lib, b, std::nullopt, "");
        const double scale = std::max(1e-300, *std::max_element(g.begin(), g.end(), [](double a, double c) {
            return std::abs(a) < std::abs(c);
        }));
        return std::pair{sol.stationarity_residual / std::abs(scale), sol.stationarity_residual};
    };

    std::vector<double> b = project_capped_simplex(std::vector<double>(K, L / static_cast<double>(K)), L);
    double value = miss(b);
    double step = 1.0;
    unsigned it = 0;
    bool converged = false;
    for (; it < opts.max_iterations; ++it) {
        const auto g = detail::gradient(model, probs, b);
        if (relative_residual(b, g).first <= opts.relative_tolerance) {
            converged = true;
            break;
        }
        bool moved = false;
        // Dimensionless step along the gradient normalized by its largest
        // entry; the raw gradient shrinks like (1 - p_s)^n.
        double gmax = 0.0;
        for (double v : g) gmax = std::max(gmax, std::abs(v));
        if (gmax == 0.0) {
            converged = true;
            break;
        }
        step = std::min(step * 4.0, 1.0);
        for (int bt = 0; bt < 200; ++bt) {
            std::vector<double> y(K);
            for (std::size_t i = 0; i < K; ++i) y[i] = b[i] + step * g[i] / gmax;
            auto trial = project_capped_simplex(y, L);
            double ascent = 0.0;
            double moved_by = 0.0;
            for (std::size_t i = 0; i < K; ++i) {
                ascent += g[i] * (trial[i] - b[i]);  // first-order miss decrease
                moved_by = std::max(moved_by, std::abs(trial[i] - b[i]));
            }
            if (moved_by == 0.0) break;
            const double trial_value = miss(trial);
            if (trial_value <= value - 1e-4 * ascent) {
                b = std::move(trial);
                value = trial_value;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) {
            // No representable ascent step left; treat as converged at
            // machine precision and let the certificate decide.
            converged = true;
            break;
        }
    }

    auto sol = certify(model, lib, b, std::nullopt, "projected-ascent");
    sol.certified = sol.stationarity_residual <= opts.certify_tolerance;
    if (!converged) {
        sol.certified = false;
        sol.notes.emplace_back("iteration budget exhausted after " + std::to_string(it) + " steps");
    }
    if (!sol.certified) sol.notes.emplace_back("non-certified: residual " + std::to_string(sol.stationarity_residual));
    return sol;
}

/// Static user, cache-agnostic: the objective is linear in b with weights
/// P_Ri times the n-attempt coverage, so the L most popular files win.
inline PlacementVector optimal_static_p1(const ZipfLibrary& lib, const ChannelParams& params, unsigned n)
{
    Scenario{Policy::CacheAgnostic, Mobility::Static, n}.validated();
    params.validated();
    if (n > kStaticAttemptCap)
        throw ValidationError("n", "static solvers are limited to n <= " + std::to_string(kStaticAttemptCap));
    return validate_placement(top_capacity_indicator(lib), lib.capacity());
}

/// Static user, cache-aware, unit capacity: projected ascent on the
/// inclusion-exclusion objective.
inline KktSolution optimal_static_p2(const ZipfLibrary& lib, const ChannelParams& params, unsigned n,
                                     ProjectedAscentOptions opts = {})
{
    if (lib.capacity() != 1)
        throw ValidationError("L", "static cache-aware solver assumes unit capacity; use optimal_projected");
    if (n > kStaticAttemptCap)
        throw ValidationError("n", "static solvers are limited to n <= " + std::to_string(kStaticAttemptCap));
    auto sol = optimal_projected(Scenario{Policy::CacheAware, Mobility::Static, n}, lib, params, opts);
    sol.method = "static-p2-projected";
    return sol;
}

/// Even placement L/K, the large-n limit for a mobile user.
inline PlacementVector even_placement(const ZipfLibrary& lib)
{
    const double v = static_cast<double>(lib.capacity()) / static_cast<double>(lib.num_files());
    return validate_placement(std::vector<double>(lib.num_files(), v), lib.capacity());
}

/// Best solver for each scenario; every branch returns a KKT certificate.
inline KktSolution optimal_placement(const Scenario& scenario, const ZipfLibrary& lib, const ChannelParams& params)
{
    const auto sc = scenario.validated();
    if (sc.mobility == Mobility::Mobile) {
        if (sc.policy == Policy::CacheAgnostic) return optimal_mobile_p1(lib, params, sc.attempts);
        if (lib.capacity() == 1) return optimal_mobile_p2(lib, params, sc.attempts);
        return optimal_projected(sc, lib, params);
    }
    if (sc.policy == Policy::CacheAgnostic) {
        const auto b = optimal_static_p1(lib, params, sc.attempts);
        const SuccessModel model(sc, params);
        return certify(model, lib, std::vector<double>(b.values().begin(), b.values().end()), std::nullopt,
                       "static-p1-top-L");
    }
    if (lib.capacity() == 1) return optimal_static_p2(lib, params, sc.attempts);
    return optimal_projected(sc, lib, params);
}

struct GridOptimum {
    PlacementVector placement;
    double objective = 0.0;
};

/// Exhaustive search over placements whose entries are multiples of `step`.
/// Independent check for the solvers; limited to K <= 4.
inline GridOptimum grid_search_oracle(const Scenario& scenario, const ZipfLibrary& lib,
                                      const ChannelParams& params, double step)
{
    const std::size_t K = lib.num_files();
    if (K > 4) throw ValidationError("K", "grid search is limited to K <= 4");
    if (!(step > 0.0) || step > 1e-2 + 1e-15) throw ValidationError("step", "grid step must lie in (0, 0.01]");
    const auto m = static_cast<long>(std::llround(1.0 / step));
    if (std::abs(static_cast<double>(m) * step - 1.0) > 1e-9)
        throw ValidationError("step", "grid step must divide 1");

    const SuccessModel model(scenario, params);
    const auto probs = lib.request_probs();
    std::vector<double> value(static_cast<std::size_t>(m) + 1);
    for (long j = 0; j <= m; ++j) value[static_cast<std::size_t>(j)] = model.success(static_cast<double>(j) / m);

    const long target = m * static_cast<long>(lib.capacity());
    std::vector<long> idx(K, 0), best_idx;
    double best = -1.0;
    // Depth-first enumeration of compositions of `target` into K parts <= m.
    auto visit = [&](auto&& self, std::size_t pos, long remaining, double partial) -> void {
        if (pos + 1 == K) {
            if (remaining < 0 || remaining > m) return;
            idx[pos] = remaining;
            const double total = partial + probs[pos] * value[static_cast<std::size_t>(remaining)];
            if (total > best) {
                best = total;
                best_idx = idx;
            }
            return;
        }
        const long slots_after = static_cast<long>(K - pos - 1);
        const long lo = std::max(0L, remaining - slots_after * m);
        const long hi = std::min(m, remaining);
        for (long j = hi; j >= lo; --j) {
            idx[pos] = j;
            self(self, pos + 1, remaining - j, partial + probs[pos] * value[static_cast<std::size_t>(j)]);
        }
    };
    visit(visit, 0, target, 0.0);

    std::vector<double> b(K);
    for (std::size_t i = 0; i < K; ++i) b[i] = static_cast<double>(best_idx[i]) / static_cast<double>(m);
    // Re-sum in the canonical order to report the same number hit_prob gives.
    const auto placement = validate_placement(b, lib.capacity());
    return GridOptimum{placement, analytic_hit_prob(model, placement.values(), probs)};
}

}  // namespace cachehit
