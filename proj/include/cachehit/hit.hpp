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

// Hit probability front end: closed form where it is numerically safe,
// Monte Carlo for static evaluation past the alternating-sum cap.

#include <string>
#include <vector>

#include "cachehit/coverage.hpp"
#include "cachehit/mcsim.hpp"
#include "cachehit/popularity.hpp"

namespace cachehit {

struct HitResult {
    double value = 0.0;
    double ci_halfwidth_99 = 0.0;  // zero for analytic values
    bool monte_carlo = false;
    std::vector<std::string> flags;
};

/// Hit probability of placement `b`. Static scenarios with more than
/// kStaticAttemptCap attempts are estimated with `fallback`; the result is
/// flagged so callers can tell.
inline HitResult hit_prob(const Scenario& scenario, const PlacementVector& b, const ZipfLibrary& lib,
                          const ChannelParams& params, const SimConfig& fallback = {})
{
    const auto sc = scenario.validated();
    if (b.size() != lib.num_files())
        throw ValidationError("placement", "placement length does not match library size");
    HitResult out;
    if (sc.mobility == Mobility::Static && sc.attempts > kStaticAttemptCap) {
        SimConfig cfg = fallback;
        if (b.capacity() != 1) cfg.semantics = CacheSemantics::IndependentPerFile;
        const auto sim = simulate_hit(sc, b, lib, params, cfg);
        out.value = sim.hit_estimate;
        out.ci_halfwidth_99 = sim.ci_halfwidth_99;
        out.monte_carlo = true;
        out.flags = sim.flags;
        out.flags.insert(out.flags.begin(), "static-attempts-above-cap:monte-carlo");
        return out;
    }
    const SuccessModel model(sc, params);
    out.value = analytic_hit_prob(model, b.values(), lib.request_probs());
    return out;
}

}  // namespace cachehit
