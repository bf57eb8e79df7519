#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "syncq/dists.hpp"
#include "syncq/random.hpp"

namespace syncq {

/// The branching vector of the many-server limit: job sizes N ~ f (untruncated),
/// fragment services chi ~ B, and inter-arrival gaps tau ~ Exp(lambda_star)
/// with lambda_star = lambda * E[N]. Edge increments are X = chi - tau.
struct LimitParams {
    JobSizeDistribution job_size = DeterministicSize{1};
    ServiceModel service;
    double lambda = 0.0;
    double mean_size = 1.0;
    double lambda_star = 0.0;
};

/// Validates the inputs and computes E[N] and lambda_star.
LimitParams make_limit_params(JobSizeDistribution job_size, ServiceModel service, double lambda);

/// Same as above with lambda_star given directly (lambda = lambda_star / E[N]).
LimitParams make_limit_params_from_rate(JobSizeDistribution job_size, ServiceModel service, double lambda_star);

/// E[N] * E[exp(beta*chi)] * lambda_star / (lambda_star + beta), i.e.
/// E[sum_i exp(beta * X_i)].
double branching_transform(const LimitParams& p, double beta);

/// Draws one node's offspring increments X_i = chi_i - tau_i (N, then (chi, tau)
/// pairs). Exposed so the samplers share one draw order.
class BranchDrawer {
public:
    explicit BranchDrawer(const LimitParams& p);
    int draw_size(RandomStream& rng) const { return sizes_(rng); }
    double draw_increment(RandomStream& rng) const;
    const LimitParams& params() const noexcept { return params_; }

private:
    LimitParams params_;
    JobSizeSampler sizes_;
};

/// A weighted branching tree materialized generation by generation. Each
/// generation stores the path sums S_j of its nodes; extend() grows the tree
/// by one generation without touching the existing ones.
class BranchingTree {
public:
    explicit BranchingTree(const LimitParams& p);

    void extend(RandomStream& rng);
    void grow_to(std::size_t depth, RandomStream& rng);
    /// Drops every generation but the root.
    void reset();

    std::size_t depth() const noexcept { return generations_.size() - 1; }
    const std::vector<double>& generation(std::size_t r) const { return generations_.at(r); }
    std::size_t node_count() const noexcept;

    /// max over A_r of S_j; -inf when generation r is empty.
    double level_max(std::size_t r) const;
    /// sum over A_r of exp(beta * S_j).
    double level_exp_sum(std::size_t r, double beta) const;
    /// max over r <= depth of level_max(r), i.e. the depth-truncated W.
    double max_path_sum() const;

private:
    BranchDrawer drawer_;
    std::vector<std::vector<double>> generations_;
};

/// Expected node count of a tree of the given depth, sum_{r<=depth} E[N]^r.
double expected_tree_nodes(const LimitParams& p, std::size_t depth);

constexpr double kDefaultTreeBudget = 2e7;

/// One exact draw of the depth-truncated endogenous solution. Throws
/// NumericError("tree budget exceeded") when the expected (or realized) node
/// count exceeds `node_budget`.
double sample_w_tree(const LimitParams& p, std::size_t depth, RandomStream& rng, double node_budget = kDefaultTreeBudget);

/// Population-dynamics approximation of the law of W after k generations.
struct PopDynPool {
    std::size_t generation = 0;
    std::vector<double> values;

    double mean() const;
};

struct PopDynOptions {
    unsigned threads = 1;
    std::size_t chunk = 4096;
};

/// Iterates W' = max(0, max_{i<=N}(chi_i - tau_i + W_i)) k times over a pool of
/// m entries, drawing W_i uniformly with replacement from the previous
/// generation. Each (generation, chunk) has its own substream of `rng`, so the
/// result does not depend on the thread count.
PopDynPool popdyn_pool(const LimitParams& p, std::size_t m, std::size_t k, RandomStream& rng, PopDynOptions opts = {});

/// One draw of the limiting sojourn time
/// T = max(0, max_{i<=N}(chi_i - tau_i + W_i)) + max_{j<=N} chi^(j).
double sample_sojourn_limit(const LimitParams& p, const PopDynPool& pool, RandomStream& rng);
std::vector<double> sample_sojourn_limit(const LimitParams& p, const PopDynPool& pool, std::size_t count,
                                         RandomStream& rng, PopDynOptions opts = {});

/// Number of generations after which the truncation error of W is below eps,
/// ceil(log(eps) / log(margin)).
std::size_t recommended_generations(double margin, double eps = 1e-4);

struct GeometricBoundRow {
    std::size_t r = 0;
    double estimate = 0.0;  ///< empirical P(U_r > 0)
    double std_error = 0.0;
    double bound = 1.0;  ///< rho_beta^r
    bool violated = false;
};

struct GeometricBoundReport {
    double beta = 0.0;
    double rho_beta = 0.0;
    std::size_t trials = 0;
    std::vector<GeometricBoundRow> rows;

    bool any_violation() const;
};

/// Monte-Carlo check of P(max_{j in A_r} S_j > 0) <= rho_beta^r for r <= r_max.
/// A row is flagged when the estimate exceeds the bound by more than four
/// binomial standard errors. Throws ConfigError("bound vacuous") if rho_beta >= 1.
GeometricBoundReport check_geometric_bound(const LimitParams& p, double beta, std::size_t r_max, std::size_t trials,
                                           RandomStream& rng, PopDynOptions opts = {});

struct MomentIdentityRow {
    std::size_t r = 0;
    double estimate = 0.0;  ///< mean of sum_{j in A_r} exp(beta*S_j)
    double std_error = 0.0;
    double exact = 0.0;  ///< branching_transform(beta)^r
};

/// Monte-Carlo estimates of E[sum_{j in A_r} exp(beta*S_j)] for r = 1..r_max.
std::vector<MomentIdentityRow> branching_moments(const LimitParams& p, double beta, std::size_t r_max, std::size_t trials,
                                                 RandomStream& rng, PopDynOptions opts = {});

}  // namespace syncq
