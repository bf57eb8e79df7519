#pragma once

// Randomized configurations and the engine invariants checked on them. Shared
// by the unit suite and the acceptance binary.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "syncq/engine.hpp"
#include "syncq/random.hpp"

namespace props {

// A random but valid configuration; about a third use deterministic services
// so that event ties actually occur.
inline syncq::SimConfig random_config(syncq::RandomStream& r) {
    using namespace syncq;
    SimConfig c;
    c.n = 1 + static_cast<int>(r.below(30));
    c.lambda = 0.05 + 0.5 * r.uniform();
    switch (r.below(3)) {
        case 0: c.job_size = DeterministicSize{1 + static_cast<int>(r.below(static_cast<std::uint64_t>(c.n)))}; break;
        case 1: c.job_size = MixedPoissonPareto{2.0 + 2.0 * r.uniform(), 0.2 + 2.0 * r.uniform()}; break;
        default: {
            const int k = 1 + static_cast<int>(r.below(static_cast<std::uint64_t>(c.n)));
            c.job_size = EmpiricalSize{{{1, 0.5}, {k, 0.5}}};
            if (k == 1) c.job_size = DeterministicSize{1};
        }
    }
    c.truncation = r.below(2) ? TruncationMode{MinWithCap{c.n}} : TruncationMode{ConditionalOnCap{c.n}};
    switch (r.below(3)) {
        case 0: c.service.marginal = UniformService{0.0, 0.5 + r.uniform()}; break;
        case 1: c.service.marginal = ExponentialService{0.5 + 2.0 * r.uniform()}; break;
        default: c.service.marginal = DeterministicService{r.below(4) == 0 ? 0.0 : 0.25 * (1 + r.below(4))};
    }
    c.horizon_jobs = 300 + r.below(400);
    c.seed = r.next_u64();
    return c;
}

// Runs all three disciplines and returns a description of the first violated
// invariant, or an empty string.
inline std::string invariant_violation(const syncq::JobStream& s) {
    using namespace syncq;
    const auto at = [](const char* what, std::size_t j) { return std::string(what) + " at job " + std::to_string(j); };
    SimOutput sb, sm, mg;
    try {
        sb = run_syncb(s);
        sm = run_splitmerge(s);
        mg = run_mgn(s);
    } catch (const std::exception& e) {
        return std::string("run failed: ") + e.what();
    }
    for (const SimOutput* out : {&sb, &sm, &mg}) {
        // Deadlock freedom: every job departs.
        if (out->jobs.size() != s.jobs()) return "missing departures";
        for (std::size_t j = 0; j < s.jobs(); ++j) {
            if (!(out->jobs[j].waiting() >= 0.0)) return at("negative wait", j);
            if (!(out->jobs[j].sojourn() >= out->jobs[j].waiting())) return at("departure before start", j);
        }
    }
    std::map<std::uint32_t, std::vector<std::size_t>> by_server;  // fragment indices per server
    for (std::size_t j = 0; j < s.jobs(); ++j) {
        const auto svc = s.services_of(j);
        // SyncB decomposition: sojourn - waiting is exactly the largest fragment.
        if (sb.jobs[j].departure != sb.jobs[j].start + *std::max_element(svc.begin(), svc.end()))
            return at("SyncB decomposition", j);
        for (std::size_t f = s.offset[j]; f < s.offset[j + 1]; ++f) by_server[s.server[f]].push_back(f);
    }
    // Fairness: at every server, later arrivals never start earlier.
    const auto owner = [&](std::size_t f) {
        return static_cast<std::size_t>(std::upper_bound(s.offset.begin(), s.offset.end(), f) - s.offset.begin()) - 1;
    };
    for (const auto& [srv, frags] : by_server)
        for (std::size_t i = 1; i < frags.size(); ++i) {
            if (sb.jobs[owner(frags[i - 1])].start > sb.jobs[owner(frags[i])].start)
                return at("SyncB overtaking", owner(frags[i]));
            if (sm.fragment_start[frags[i - 1]] > sm.fragment_start[frags[i]])
                return at("Split-Merge overtaking", owner(frags[i]));
        }
    // M/G/n work conservation: a job that waited starts exactly when some job departs.
    std::set<double> departures;
    for (const auto& jr : mg.jobs) departures.insert(jr.departure);
    for (std::size_t j = 0; j < mg.jobs.size(); ++j)
        if (mg.jobs[j].waiting() > 0.0 && !departures.count(mg.jobs[j].start)) return at("M/G/n idle server", j);
    return {};
}

}  // namespace props
