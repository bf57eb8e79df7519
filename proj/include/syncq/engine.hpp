#pragma once

#include <cstddef>
#include <cstdint>
#include <queue>
#include <span>
#include <string_view>
#include <vector>

#include "syncq/dists.hpp"
#include "syncq/random.hpp"

namespace syncq {

/// Parameters of one finite-n simulation.
struct SimConfig {
    int n = 1;                  ///< number of servers
    double lambda = 0.1;        ///< per-server arrival intensity; total job rate is lambda*n
    JobSizeDistribution job_size = DeterministicSize{1};
    TruncationMode truncation = NoTruncation{};
    ServiceModel service;
    std::size_t horizon_jobs = 1000;
    std::size_t warmup_jobs = 0;
    std::uint64_t seed = 1;
};

/// Throws ConfigError naming the offending field.
void validate(const SimConfig& config);

/// A materialized arrival process shared by every discipline (common random
/// numbers). Fragments are stored flat; job j owns [offset[j], offset[j+1]).
struct JobStream {
    int n = 0;
    std::vector<double> arrival;
    std::vector<std::size_t> offset{0};
    std::vector<std::uint32_t> server;  ///< 0-based server ids
    std::vector<double> service;

    std::size_t jobs() const noexcept { return arrival.size(); }
    std::size_t fragments() const noexcept { return server.size(); }
    int size_of(std::size_t j) const noexcept { return static_cast<int>(offset[j + 1] - offset[j]); }
    std::span<const std::uint32_t> servers_of(std::size_t j) const {
        return {server.data() + offset[j], offset[j + 1] - offset[j]};
    }
    std::span<const double> services_of(std::size_t j) const {
        return {service.data() + offset[j], offset[j + 1] - offset[j]};
    }

    /// Appends one job; checks ordering, distinct servers and ids < n.
    void push_job(double arrival_time, std::span<const std::uint32_t> servers, std::span<const double> services);
};

enum class Discipline { SyncB, SplitMerge, MGn };

std::string_view to_string(Discipline d);

struct JobRecord {
    double arrival = 0.0;
    double start = 0.0;  ///< SyncB: synchronized start; Split-Merge: first fragment start; M/G/n: service start
    double departure = 0.0;

    double waiting() const noexcept { return start - arrival; }
    double sojourn() const noexcept { return departure - arrival; }
};

struct SimOutput {
    Discipline discipline = Discipline::SyncB;
    std::vector<JobRecord> jobs;
    /// Per-fragment service start, parallel to JobStream::server. Empty for M/G/n.
    std::vector<double> fragment_start;
    std::uint64_t events = 0;
    double final_clock = 0.0;

    std::vector<double> waiting_times(std::size_t skip = 0) const;
    std::vector<double> sojourn_times(std::size_t skip = 0) const;
};

/// Uniformly random k-subset of {0, ..., n-1} (Floyd's algorithm).
std::vector<std::uint32_t> assign_servers(int n, int k, RandomStream& rng);

JobStream generate_job_stream(const SimConfig& config, RandomStream& rng);

SimOutput run_syncb(const JobStream& stream);
SimOutput run_splitmerge(const JobStream& stream);
SimOutput run_mgn(const JobStream& stream);
SimOutput run_discipline(Discipline d, const JobStream& stream);

// ---------------------------------------------------------------------------

/// Time-ordered event queue. Ties break on (time, class, insertion order), so
/// completions (class 0) precede arrivals (class 1) at equal timestamps.
template <typename Payload>
class EventCalendar {
public:
    struct Event {
        double time;
        int cls;
        std::uint64_t seq;
        Payload payload;
    };

    void push(double time, int cls, Payload payload) { heap_.push(Event{time, cls, seq_++, payload}); }
    bool empty() const noexcept { return heap_.empty(); }
    std::size_t size() const noexcept { return heap_.size(); }
    Event pop() {
        Event e = heap_.top();
        heap_.pop();
        return e;
    }

private:
    struct Later {
        bool operator()(const Event& a, const Event& b) const noexcept {
            if (a.time != b.time) return a.time > b.time;
            if (a.cls != b.cls) return a.cls > b.cls;
            return a.seq > b.seq;
        }
    };
    std::priority_queue<Event, std::vector<Event>, Later> heap_;
    std::uint64_t seq_ = 0;
};

}  // namespace syncq
