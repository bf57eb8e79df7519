#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "syncq/random.hpp"

namespace syncq {

// ---------------------------------------------------------------------------
// Job sizes
// ---------------------------------------------------------------------------

struct DeterministicSize {
    int k = 1;
};

/// N = 1 + Poisson(L), L ~ Pareto(shape alpha, scale beta) on [beta, inf).
struct MixedPoissonPareto {
    double alpha = 3.0;
    double beta = 1.0;
};

struct EmpiricalSize {
    std::vector<std::pair<int, double>> pmf;  // (k, probability), k >= 1
};

using JobSizeDistribution = std::variant<DeterministicSize, MixedPoissonPareto, EmpiricalSize>;

struct NoTruncation {};
/// min{N, m}
struct MinWithCap {
    int m = 1;
};
/// N conditioned on N <= m
struct ConditionalOnCap {
    int m = 1;
};

using TruncationMode = std::variant<NoTruncation, MinWithCap, ConditionalOnCap>;

/// Throws ConfigError when a parameter is outside its family's domain.
void validate(const JobSizeDistribution& dist);
void validate(const TruncationMode& trunc);

/// The cap m of a truncation, or nullopt-like max() for NoTruncation.
int truncation_cap(const TruncationMode& trunc);

/// Largest size the (truncated) law can produce; max() when unbounded.
int max_job_size(const JobSizeDistribution& dist, const TruncationMode& trunc);

/// Closed-form E[N] = 1 + alpha*beta/(alpha-1).
double mixed_poisson_pareto_mean(const MixedPoissonPareto& d);

/// P(N = k) of the untruncated law, k >= 1.
double job_size_pmf(const JobSizeDistribution& dist, int k);

/// P(N <= m) of the untruncated law.
double job_size_cdf(const JobSizeDistribution& dist, int m);

/// E[N^p] of the truncated law. Throws NumericError("infinite moment") when the
/// moment diverges and NumericError("degenerate truncation") when the
/// conditioning event has probability numerically zero.
double job_size_moment(const JobSizeDistribution& dist, const TruncationMode& trunc, double p);

/// Draws job sizes from a truncated law. Construction validates the law and
/// precomputes whatever the truncation needs.
class JobSizeSampler {
public:
    JobSizeSampler(JobSizeDistribution dist, TruncationMode trunc);

    int operator()(RandomStream& rng) const;

    const JobSizeDistribution& distribution() const noexcept { return dist_; }
    const TruncationMode& truncation() const noexcept { return trunc_; }

private:
    int draw_untruncated(RandomStream& rng) const;
    int draw_from_table(RandomStream& rng) const;

    JobSizeDistribution dist_;
    TruncationMode trunc_;
    // Cumulative probabilities over k = table_first_, table_first_+1, ...
    std::vector<double> cdf_;
    int table_first_ = 1;
    bool use_table_ = false;
};

int sample_job_size(const JobSizeDistribution& dist, const TruncationMode& trunc, RandomStream& rng);

// ---------------------------------------------------------------------------
// Service requirements
// ---------------------------------------------------------------------------

struct UniformService {
    double a = 0.0;
    double b = 1.0;
};

struct ExponentialService {
    double rate = 1.0;
};

struct DeterministicService {
    double c = 1.0;
};

using ServiceMarginal = std::variant<UniformService, ExponentialService, DeterministicService>;

void validate(const ServiceMarginal& b);

/// Fills a size-k span with the joint service requirements of one job.
using JointServiceSampler = std::function<void(std::span<double>, RandomStream&)>;

struct ServiceModel {
    ServiceMarginal marginal = UniformService{};
    /// Empty means i.i.d. draws from the marginal.
    JointServiceSampler joint;
};

double sample_service(const ServiceMarginal& b, RandomStream& rng);

/// Fills `out` with one job's fragment requirements.
void sample_fragments(const ServiceModel& model, std::span<double> out, RandomStream& rng);
std::vector<double> sample_fragments(const ServiceModel& model, int k, RandomStream& rng);

double service_mean(const ServiceMarginal& b);
double service_second_moment(const ServiceMarginal& b);

/// Supremum of the theta for which E[exp(theta*chi)] is finite (inf if all).
double mgf_domain_upper(const ServiceMarginal& b);

/// E[exp(theta*chi)]; throws NumericError("MGF diverges") outside the domain.
double service_mgf(const ServiceMarginal& b, double theta);

/// E[chi*exp(theta*chi)], the theta-derivative of service_mgf.
double service_weighted_mgf(const ServiceMarginal& b, double theta);

}  // namespace syncq
