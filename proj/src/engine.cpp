#include "syncq/engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "syncq/errors.hpp"

namespace syncq {

void validate(const SimConfig& c) {
    if (c.n < 1) throw ConfigError("n: must be >= 1");
    if (!(c.lambda > 0.0)) throw ConfigError("lambda: must be > 0");
    if (c.horizon_jobs == 0) throw ConfigError("horizon_jobs: must be >= 1");
    if (c.warmup_jobs >= c.horizon_jobs) throw ConfigError("warmup_jobs: must be < horizon_jobs");
    validate(c.job_size);
    validate(c.truncation);
    validate(c.service.marginal);
    if (max_job_size(c.job_size, c.truncation) > c.n)
        throw ConfigError("truncation: job sizes may exceed n=" + std::to_string(c.n) +
                          "; cap the law at m <= n so each fragment gets its own server");
}

void JobStream::push_job(double arrival_time, std::span<const std::uint32_t> servers, std::span<const double> services) {
    if (servers.size() != services.size() || servers.empty())
        throw std::invalid_argument("push_job: need one service per server and at least one fragment");
    if (!arrival.empty() && arrival_time < arrival.back()) throw std::invalid_argument("push_job: arrivals must be ordered");
    for (std::size_t i = 0; i < servers.size(); ++i) {
        if (servers[i] >= static_cast<std::uint32_t>(n)) throw std::invalid_argument("push_job: server id out of range");
        if (services[i] < 0.0) throw std::invalid_argument("push_job: negative service requirement");
        for (std::size_t q = 0; q < i; ++q)
            if (servers[q] == servers[i]) throw std::invalid_argument("push_job: servers must be distinct");
    }
    arrival.push_back(arrival_time);
    server.insert(server.end(), servers.begin(), servers.end());
    service.insert(service.end(), services.begin(), services.end());
    offset.push_back(server.size());
}

std::string_view to_string(Discipline d) {
    switch (d) {
        case Discipline::SyncB: return "syncb";
        case Discipline::SplitMerge: return "splitmerge";
        case Discipline::MGn: return "mgn";
    }
    return "?";
}

std::vector<double> SimOutput::waiting_times(std::size_t skip) const {
    std::vector<double> out;
    out.reserve(jobs.size() - std::min(skip, jobs.size()));
    for (std::size_t j = skip; j < jobs.size(); ++j) out.push_back(jobs[j].waiting());
    return out;
}

std::vector<double> SimOutput::sojourn_times(std::size_t skip) const {
    std::vector<double> out;
    out.reserve(jobs.size() - std::min(skip, jobs.size()));
    for (std::size_t j = skip; j < jobs.size(); ++j) out.push_back(jobs[j].sojourn());
    return out;
}

std::vector<std::uint32_t> assign_servers(int n, int k, RandomStream& rng) {
    if (k < 1 || k > n) throw ConfigError("assign_servers: need 1 <= k <= n");
    std::vector<std::uint32_t> chosen;
    chosen.reserve(static_cast<std::size_t>(k));
    const auto un = static_cast<std::uint32_t>(n);
    const auto uk = static_cast<std::uint32_t>(k);
    if (k <= 64) {
        for (std::uint32_t j = un - uk; j < un; ++j) {
            const auto t = static_cast<std::uint32_t>(rng.below(j + 1));
            const bool seen = std::find(chosen.begin(), chosen.end(), t) != chosen.end();
            chosen.push_back(seen ? j : t);
        }
    } else {
        std::vector<char> taken(un, 0);
        for (std::uint32_t j = un - uk; j < un; ++j) {
            const auto t = static_cast<std::uint32_t>(rng.below(j + 1));
            const std::uint32_t pick = taken[t] ? j : t;
            taken[pick] = 1;
            chosen.push_back(pick);
        }
    }
    return chosen;
}

JobStream generate_job_stream(const SimConfig& config, RandomStream& rng) {
    validate(config);
    const JobSizeSampler sizes(config.job_size, config.truncation);
    const double rate = config.lambda * config.n;

    JobStream stream;
    stream.n = config.n;
    stream.arrival.reserve(config.horizon_jobs);
    stream.offset.reserve(config.horizon_jobs + 1);
    std::vector<double> services;
    double t = 0.0;
    for (std::size_t j = 0; j < config.horizon_jobs; ++j) {
        t += rng.exponential(rate);
        const int k = sizes(rng);
        const auto servers = assign_servers(config.n, k, rng);
        services.resize(static_cast<std::size_t>(k));
        sample_fragments(config.service, services, rng);
        stream.arrival.push_back(t);
        stream.server.insert(stream.server.end(), servers.begin(), servers.end());
        stream.service.insert(stream.service.end(), services.begin(), services.end());
        stream.offset.push_back(stream.server.size());
    }
    return stream;
}

namespace {

constexpr int kCompletion = 0;
constexpr int kArrival = 1;

struct Payload {
    std::size_t index;  // job id for arrivals, fragment (or job, for M/G/n) for completions
};

std::vector<std::uint32_t> fragment_owners(const JobStream& s) {
    std::vector<std::uint32_t> owner(s.fragments());
    for (std::size_t j = 0; j < s.jobs(); ++j)
        std::fill(owner.begin() + static_cast<std::ptrdiff_t>(s.offset[j]),
                  owner.begin() + static_cast<std::ptrdiff_t>(s.offset[j + 1]), static_cast<std::uint32_t>(j));
    return owner;
}

void check_consistent(const JobStream& s) {
    if (s.n < 1) throw std::invalid_argument("job stream has no servers");
    if (s.offset.size() != s.jobs() + 1 || s.offset.back() != s.fragments() || s.service.size() != s.fragments())
        throw std::invalid_argument("job stream index arrays are inconsistent");
}

class ClockGuard {
public:
    void advance(double t) {
        if (t < clock_) throw std::logic_error("simulation clock moved backwards");
        clock_ = t;
    }
    double now() const noexcept { return clock_; }

private:
    double clock_ = 0.0;
};

void check_all_departed(std::size_t departed, std::size_t jobs) {
    if (departed != jobs)
        throw std::logic_error("simulation stalled: " + std::to_string(jobs - departed) + " jobs never departed");
}

SimOutput prepare_output(Discipline d, const JobStream& s, bool fragment_trace) {
    SimOutput out;
    out.discipline = d;
    out.jobs.resize(s.jobs());
    for (std::size_t j = 0; j < s.jobs(); ++j) {
        out.jobs[j].arrival = s.arrival[j];
        out.jobs[j].start = std::numeric_limits<double>::quiet_NaN();
    }
    if (fragment_trace) out.fragment_start.assign(s.fragments(), std::numeric_limits<double>::quiet_NaN());
    return out;
}

}  // namespace

SimOutput run_syncb(const JobStream& s) {
    check_consistent(s);
    SimOutput out = prepare_output(Discipline::SyncB, s, true);
    if (s.jobs() == 0) return out;

    const auto owner = fragment_owners(s);
    std::vector<std::deque<std::size_t>> queue(static_cast<std::size_t>(s.n));
    // Fragments of job j currently at the head of an idle server.
    std::vector<std::uint32_t> ready(s.jobs(), 0);
    std::vector<std::uint32_t> remaining(s.jobs(), 0);
    EventCalendar<Payload> calendar;
    ClockGuard clock;
    std::size_t departed = 0;

    auto start_job = [&](std::size_t j, double t) {
        out.jobs[j].start = t;
        remaining[j] = static_cast<std::uint32_t>(s.size_of(j));
        for (std::size_t f = s.offset[j]; f < s.offset[j + 1]; ++f) {
            out.fragment_start[f] = t;
            calendar.push(t + s.service[f], kCompletion, Payload{f});
        }
    };

    calendar.push(s.arrival[0], kArrival, Payload{0});
    while (!calendar.empty()) {
        const auto ev = calendar.pop();
        clock.advance(ev.time);
        ++out.events;
        if (ev.cls == kArrival) {
            const std::size_t j = ev.payload.index;
            for (std::size_t f = s.offset[j]; f < s.offset[j + 1]; ++f) {
                auto& q = queue[s.server[f]];
                // An empty queue means an idle server.
                if (q.empty()) ++ready[j];
                q.push_back(f);
            }
            if (ready[j] == static_cast<std::uint32_t>(s.size_of(j))) start_job(j, ev.time);
            if (j + 1 < s.jobs()) calendar.push(s.arrival[j + 1], kArrival, Payload{j + 1});
        } else {
            const std::size_t f = ev.payload.index;
            const std::size_t j = owner[f];
            auto& q = queue[s.server[f]];
            q.pop_front();
            if (--remaining[j] == 0) {
                out.jobs[j].departure = ev.time;
                ++departed;
            }
            if (!q.empty()) {
                const std::size_t h = owner[q.front()];
                if (++ready[h] == static_cast<std::uint32_t>(s.size_of(h))) start_job(h, ev.time);
            }
        }
    }
    check_all_departed(departed, s.jobs());
    out.final_clock = clock.now();
    return out;
}

SimOutput run_splitmerge(const JobStream& s) {
    check_consistent(s);
    SimOutput out = prepare_output(Discipline::SplitMerge, s, true);
    if (s.jobs() == 0) return out;

    const auto owner = fragment_owners(s);
    std::vector<std::deque<std::size_t>> queue(static_cast<std::size_t>(s.n));
    std::vector<std::uint32_t> done(s.jobs(), 0);
    EventCalendar<Payload> calendar;
    ClockGuard clock;
    std::size_t departed = 0;

    auto start_fragment = [&](std::size_t f, double t) {
        const std::size_t j = owner[f];
        out.fragment_start[f] = t;
        if (std::isnan(out.jobs[j].start)) out.jobs[j].start = t;
        calendar.push(t + s.service[f], kCompletion, Payload{f});
    };

    calendar.push(s.arrival[0], kArrival, Payload{0});
    while (!calendar.empty()) {
        const auto ev = calendar.pop();
        clock.advance(ev.time);
        ++out.events;
        if (ev.cls == kArrival) {
            const std::size_t j = ev.payload.index;
            for (std::size_t f = s.offset[j]; f < s.offset[j + 1]; ++f) {
                auto& q = queue[s.server[f]];
                const bool idle = q.empty();
                q.push_back(f);
                if (idle) start_fragment(f, ev.time);
            }
            if (j + 1 < s.jobs()) calendar.push(s.arrival[j + 1], kArrival, Payload{j + 1});
        } else {
            const std::size_t j = owner[ev.payload.index];
            if (++done[j] < static_cast<std::uint32_t>(s.size_of(j))) continue;
            // Last sibling finished: release every server the job holds.
            out.jobs[j].departure = ev.time;
            ++departed;
            for (std::size_t f = s.offset[j]; f < s.offset[j + 1]; ++f) {
                auto& q = queue[s.server[f]];
                q.pop_front();
                if (!q.empty()) start_fragment(q.front(), ev.time);
            }
        }
    }
    check_all_departed(departed, s.jobs());
    out.final_clock = clock.now();
    return out;
}

SimOutput run_mgn(const JobStream& s) {
    check_consistent(s);
    SimOutput out = prepare_output(Discipline::MGn, s, false);
    if (s.jobs() == 0) return out;

    std::deque<std::size_t> waiting;
    int free_servers = s.n;
    EventCalendar<Payload> calendar;
    ClockGuard clock;
    std::size_t departed = 0;

    auto start_job = [&](std::size_t j, double t) {
        const auto work = s.services_of(j);
        out.jobs[j].start = t;
        calendar.push(t + std::accumulate(work.begin(), work.end(), 0.0), kCompletion, Payload{j});
    };

    calendar.push(s.arrival[0], kArrival, Payload{0});
    while (!calendar.empty()) {
        const auto ev = calendar.pop();
        clock.advance(ev.time);
        ++out.events;
        const std::size_t j = ev.payload.index;
        if (ev.cls == kArrival) {
            if (free_servers > 0) {
                --free_servers;
                start_job(j, ev.time);
            } else {
                waiting.push_back(j);
            }
            if (j + 1 < s.jobs()) calendar.push(s.arrival[j + 1], kArrival, Payload{j + 1});
        } else {
            out.jobs[j].departure = ev.time;
            ++departed;
            if (!waiting.empty()) {
                start_job(waiting.front(), ev.time);
                waiting.pop_front();
            } else {
                ++free_servers;
            }
        }
    }
    check_all_departed(departed, s.jobs());
    out.final_clock = clock.now();
    return out;
}

SimOutput run_discipline(Discipline d, const JobStream& stream) {
    switch (d) {
        case Discipline::SyncB: return run_syncb(stream);
        case Discipline::SplitMerge: return run_splitmerge(stream);
        case Discipline::MGn: return run_mgn(stream);
    }
    throw std::invalid_argument("unknown discipline");
}

}  // namespace syncq
