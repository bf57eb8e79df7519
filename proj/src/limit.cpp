#include "syncq/limit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "syncq/errors.hpp"
#include "syncq/parallel.hpp"

namespace syncq {

namespace {

double mean_job_size(const JobSizeDistribution& d) {
    if (const auto* mpp = std::get_if<MixedPoissonPareto>(&d)) return mixed_poisson_pareto_mean(*mpp);
    return job_size_moment(d, NoTruncation{}, 1.0);
}

// Independent base stream for a parallel computation: one draw from the caller's
// stream seeds it, so successive calls with the same stream differ.
RandomStream fork(RandomStream& rng) { return RandomStream(rng.next_u64(), rng.stream_id()); }

}  // namespace

LimitParams make_limit_params(JobSizeDistribution job_size, ServiceModel service, double lambda) {
    validate(job_size);
    validate(service.marginal);
    if (!(lambda > 0.0)) throw ConfigError("lambda: must be > 0");
    LimitParams p;
    p.mean_size = mean_job_size(job_size);
    p.job_size = std::move(job_size);
    p.service = std::move(service);
    p.lambda = lambda;
    p.lambda_star = lambda * p.mean_size;
    return p;
}

LimitParams make_limit_params_from_rate(JobSizeDistribution job_size, ServiceModel service, double lambda_star) {
    validate(job_size);
    const double mean = mean_job_size(job_size);
    return make_limit_params(std::move(job_size), std::move(service), lambda_star / mean);
}

double branching_transform(const LimitParams& p, double beta) {
    return p.mean_size * service_mgf(p.service.marginal, beta) * p.lambda_star / (p.lambda_star + beta);
}

// ---------------------------------------------------------------------------

BranchDrawer::BranchDrawer(const LimitParams& p) : params_(p), sizes_(p.job_size, NoTruncation{}) {}

double BranchDrawer::draw_increment(RandomStream& rng) const {
    const double chi = sample_service(params_.service.marginal, rng);
    const double tau = rng.exponential(params_.lambda_star);
    return chi - tau;
}

BranchingTree::BranchingTree(const LimitParams& p) : drawer_(p), generations_{{0.0}} {}

void BranchingTree::extend(RandomStream& rng) {
    std::vector<double> next;
    for (const double s : generations_.back()) {
        const int k = drawer_.draw_size(rng);
        for (int i = 0; i < k; ++i) next.push_back(s + drawer_.draw_increment(rng));
    }
    generations_.push_back(std::move(next));
}

void BranchingTree::grow_to(std::size_t depth, RandomStream& rng) {
    while (this->depth() < depth) extend(rng);
}

void BranchingTree::reset() { generations_.resize(1); }

std::size_t BranchingTree::node_count() const noexcept {
    std::size_t total = 0;
    for (const auto& g : generations_) total += g.size();
    return total;
}

double BranchingTree::level_max(std::size_t r) const {
    const auto& g = generations_.at(r);
    if (g.empty()) return -std::numeric_limits<double>::infinity();
    return *std::max_element(g.begin(), g.end());
}

double BranchingTree::level_exp_sum(std::size_t r, double beta) const {
    double sum = 0.0;
    for (const double s : generations_.at(r)) sum += std::exp(beta * s);
    return sum;
}

double BranchingTree::max_path_sum() const {
    double best = 0.0;
    for (std::size_t r = 0; r < generations_.size(); ++r) best = std::max(best, level_max(r));
    return best;
}

double expected_tree_nodes(const LimitParams& p, std::size_t depth) {
    double total = 0.0, level = 1.0;
    for (std::size_t r = 0; r <= depth; ++r) {
        total += level;
        level *= p.mean_size;
    }
    return total;
}

double sample_w_tree(const LimitParams& p, std::size_t depth, RandomStream& rng, double node_budget) {
    if (expected_tree_nodes(p, depth) > node_budget)
        throw NumericError("tree budget exceeded: expected " + std::to_string(expected_tree_nodes(p, depth)) +
                           " nodes at depth " + std::to_string(depth));
    const BranchDrawer drawer(p);
    std::vector<double> current{0.0}, next;
    double best = 0.0, nodes = 1.0;
    for (std::size_t r = 0; r < depth && !current.empty(); ++r) {
        next.clear();
        for (const double s : current) {
            const int k = drawer.draw_size(rng);
            for (int i = 0; i < k; ++i) {
                const double child = s + drawer.draw_increment(rng);
                best = std::max(best, child);
                next.push_back(child);
            }
        }
        nodes += static_cast<double>(next.size());
        if (nodes > node_budget) throw NumericError("tree budget exceeded: realized tree outgrew the node budget");
        current.swap(next);
    }
    return best;
}

// ---------------------------------------------------------------------------

double PopDynPool::mean() const {
    if (values.empty()) return 0.0;
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

PopDynPool popdyn_pool(const LimitParams& p, std::size_t m, std::size_t k, RandomStream& rng, PopDynOptions opts) {
    if (m == 0) throw ConfigError("popdyn: pool size must be >= 1");
    const BranchDrawer drawer(p);
    const RandomStream base = fork(rng);
    PopDynPool pool{0, std::vector<double>(m, 0.0)};
    std::vector<double> next(m);
    for (std::size_t g = 1; g <= k; ++g) {
        const auto& prev = pool.values;
        for_each_chunk(m, opts.chunk, opts.threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
            RandomStream rs = base.substream(mix_ids(g, c));
            for (std::size_t i = begin; i < end; ++i) {
                const int n = drawer.draw_size(rs);
                double best = 0.0;
                for (int q = 0; q < n; ++q) {
                    const double x = drawer.draw_increment(rs);
                    best = std::max(best, x + prev[rs.below(m)]);
                }
                next[i] = best;
            }
        });
        pool.values.swap(next);
        pool.generation = g;
    }
    return pool;
}

namespace {

double sojourn_draw(const BranchDrawer& drawer, const PopDynPool& pool, std::vector<double>& scratch, RandomStream& rng) {
    const int n = drawer.draw_size(rng);
    double wait = 0.0;
    for (int q = 0; q < n; ++q) {
        const double x = drawer.draw_increment(rng);
        wait = std::max(wait, x + pool.values[rng.below(pool.values.size())]);
    }
    scratch.resize(static_cast<std::size_t>(n));
    sample_fragments(drawer.params().service, scratch, rng);
    return wait + *std::max_element(scratch.begin(), scratch.end());
}

}  // namespace

double sample_sojourn_limit(const LimitParams& p, const PopDynPool& pool, RandomStream& rng) {
    if (pool.values.empty()) throw ConfigError("sample_sojourn_limit: empty pool");
    const BranchDrawer drawer(p);
    std::vector<double> scratch;
    return sojourn_draw(drawer, pool, scratch, rng);
}

std::vector<double> sample_sojourn_limit(const LimitParams& p, const PopDynPool& pool, std::size_t count,
                                         RandomStream& rng, PopDynOptions opts) {
    if (pool.values.empty()) throw ConfigError("sample_sojourn_limit: empty pool");
    const BranchDrawer drawer(p);
    const RandomStream base = fork(rng);
    std::vector<double> out(count);
    for_each_chunk(count, opts.chunk, opts.threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
        RandomStream rs = base.substream(c);
        std::vector<double> scratch;
        for (std::size_t i = begin; i < end; ++i) out[i] = sojourn_draw(drawer, pool, scratch, rs);
    });
    return out;
}

std::size_t recommended_generations(double margin, double eps) {
    if (!(margin < 1.0)) throw NumericError("recommended_generations: unstable parameters (margin >= 1)");
    if (margin <= 0.0) return 1;
    return static_cast<std::size_t>(std::max(1.0, std::ceil(std::log(eps) / std::log(margin))));
}

// ---------------------------------------------------------------------------

bool GeometricBoundReport::any_violation() const {
    return std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.violated; });
}

GeometricBoundReport check_geometric_bound(const LimitParams& p, double beta, std::size_t r_max, std::size_t trials,
                                           RandomStream& rng, PopDynOptions opts) {
    if (!(beta > 0.0)) throw ConfigError("check_geometric_bound: beta must be > 0");
    if (trials == 0) throw ConfigError("check_geometric_bound: trials must be >= 1");
    const double rho = branching_transform(p, beta);
    if (!(rho < 1.0)) throw ConfigError("bound vacuous: rho_beta = " + std::to_string(rho) + " >= 1");
    if (expected_tree_nodes(p, r_max) > kDefaultTreeBudget) throw NumericError("tree budget exceeded");

    const RandomStream base = fork(rng);
    const std::size_t chunks = (trials + opts.chunk - 1) / opts.chunk;
    std::vector<std::vector<std::size_t>> hits(chunks, std::vector<std::size_t>(r_max + 1, 0));
    for_each_chunk(trials, opts.chunk, opts.threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
        RandomStream rs = base.substream(c);
        BranchingTree tree(p);
        for (std::size_t t = begin; t < end; ++t) {
            tree.reset();
            tree.grow_to(r_max, rs);
            for (std::size_t r = 0; r <= r_max; ++r)
                if (tree.level_max(r) > 0.0) ++hits[c][r];
        }
    });

    GeometricBoundReport report{beta, rho, trials, {}};
    for (std::size_t r = 0; r <= r_max; ++r) {
        std::size_t count = 0;
        for (const auto& h : hits) count += h[r];
        GeometricBoundRow row;
        row.r = r;
        row.estimate = static_cast<double>(count) / static_cast<double>(trials);
        row.bound = std::pow(rho, static_cast<double>(r));
        // Binomial standard error under the bound itself.
        row.std_error = std::sqrt(row.bound * (1.0 - row.bound) / static_cast<double>(trials));
        row.violated = row.estimate > row.bound + 4.0 * row.std_error;
        report.rows.push_back(row);
    }
    return report;
}

std::vector<MomentIdentityRow> branching_moments(const LimitParams& p, double beta, std::size_t r_max, std::size_t trials,
                                                 RandomStream& rng, PopDynOptions opts) {
    if (trials < 2) throw ConfigError("branching_moments: trials must be >= 2");
    if (expected_tree_nodes(p, r_max) > kDefaultTreeBudget) throw NumericError("tree budget exceeded");
    const RandomStream base = fork(rng);
    const std::size_t chunks = (trials + opts.chunk - 1) / opts.chunk;
    // Per chunk, per level: (sum, sum of squares).
    std::vector<std::vector<std::pair<double, double>>> acc(chunks, std::vector<std::pair<double, double>>(r_max + 1));
    for_each_chunk(trials, opts.chunk, opts.threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
        RandomStream rs = base.substream(c);
        BranchingTree tree(p);
        for (std::size_t t = begin; t < end; ++t) {
            tree.reset();
            tree.grow_to(r_max, rs);
            for (std::size_t r = 1; r <= r_max; ++r) {
                const double z = tree.level_exp_sum(r, beta);
                acc[c][r].first += z;
                acc[c][r].second += z * z;
            }
        }
    });

    const double rho = branching_transform(p, beta);
    const double nt = static_cast<double>(trials);
    std::vector<MomentIdentityRow> rows;
    for (std::size_t r = 1; r <= r_max; ++r) {
        double s = 0.0, s2 = 0.0;
        for (const auto& a : acc) {
            s += a[r].first;
            s2 += a[r].second;
        }
        const double mean = s / nt;
        const double var = std::max(0.0, (s2 - nt * mean * mean) / (nt - 1.0));
        rows.push_back({r, mean, std::sqrt(var / nt), std::pow(rho, static_cast<double>(r))});
    }
    return rows;
}

}  // namespace syncq
