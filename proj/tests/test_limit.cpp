#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "syncq/asymptotics.hpp"
#include "syncq/errors.hpp"
#include "syncq/limit.hpp"

using namespace syncq;

namespace {

LimitParams mm1(double mu, double lambda_star) {
    return make_limit_params(DeterministicSize{1}, ServiceModel{ExponentialService{mu}, {}}, lambda_star);
}

LimitParams en2(double lambda) {
    return make_limit_params(MixedPoissonPareto{3.0, 2.0 / 3.0}, ServiceModel{UniformService{0, 1}, {}}, lambda);
}

}  // namespace

TEST(LimitParams, DerivedRates) {
    const auto p = en2(0.1);
    EXPECT_DOUBLE_EQ(p.mean_size, 2.0);
    EXPECT_DOUBLE_EQ(p.lambda_star, 0.2);
    const auto q = make_limit_params_from_rate(MixedPoissonPareto{3.0, 6.0}, ServiceModel{}, 0.5);
    EXPECT_DOUBLE_EQ(q.lambda, 0.05);
    EXPECT_THROW(en2(0.0), ConfigError);
}

TEST(BranchingTransform, MatchesDefinition) {
    const auto p = en2(0.05);
    for (double b : {0.0, 0.5, 1.4, 3.0})
        EXPECT_NEAR(branching_transform(p, b), 2.0 * (b == 0 ? 1.0 : std::expm1(b) / b) * 0.1 / (0.1 + b), 1e-14);
}

TEST(TreeSampler, DepthZeroIsZero) {
    RandomStream r(1, 0);
    EXPECT_EQ(sample_w_tree(en2(0.05), 0, r), 0.0);
}

TEST(TreeSampler, SingleChildIsRandomWalk) {
    // N = 1: the tree is a path whose path sums are the random walk S_k, so the
    // sampler returns max(0, S_1, ..., S_depth). The walk is rebuilt here from
    // the same stream with the documented draw order (size, chi, tau).
    const auto p = mm1(1.0, 0.5);
    const JobSizeSampler sizes(DeterministicSize{1}, NoTruncation{});
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        for (std::size_t depth : {1u, 5u, 40u}) {
            RandomStream a(seed, 3), b(seed, 3);
            double s = 0.0, best = 0.0;
            for (std::size_t k = 0; k < depth; ++k) {
                ASSERT_EQ(sizes(b), 1);
                const double chi = b.exponential(1.0);
                const double tau = b.exponential(0.5);
                s += chi - tau;
                best = std::max(best, s);
            }
            ASSERT_EQ(sample_w_tree(p, depth, a), best);
        }
    }
}

TEST(TreeSampler, MM1AtomAtZero) {
    // M/M/1 waiting time: P(W > 0) = rho = 0.5.
    const auto p = mm1(1.0, 0.5);
    RandomStream r(2, 0);
    const int n = 1'000'000;
    int positive = 0;
    for (int i = 0; i < n; ++i) positive += sample_w_tree(p, 60, r) > 0.0;
    EXPECT_NEAR(positive / double(n), 0.5, 0.005);
}

TEST(TreeSampler, BudgetExceeded) {
    RandomStream r(3, 0);
    const auto p = make_limit_params(MixedPoissonPareto{3.0, 66.0}, ServiceModel{}, 0.0001);
    try {
        sample_w_tree(p, 10, r);
        FAIL();
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("tree budget exceeded"), std::string::npos);
    }
}

TEST(BranchingTree, ExtendingNeverLowersTheMaximum) {
    const auto p = en2(0.1);
    RandomStream r(4, 0);
    for (int rep = 0; rep < 200; ++rep) {
        BranchingTree t(p);
        double prev = t.max_path_sum();
        EXPECT_EQ(prev, 0.0);
        std::vector<std::vector<double>> frozen;
        for (std::size_t d = 1; d <= 8; ++d) {
            t.extend(r);
            const double now = t.max_path_sum();
            ASSERT_GE(now, prev);
            prev = now;
            for (std::size_t g = 0; g < frozen.size(); ++g) ASSERT_EQ(t.generation(g), frozen[g]);
            frozen.push_back(t.generation(frozen.size()));
        }
    }
}

TEST(BranchingTree, EmptyLevelIsMinusInfinity) {
    BranchingTree t(en2(0.1));
    EXPECT_EQ(t.level_max(0), 0.0);
    EXPECT_EQ(t.node_count(), 1u);
    EXPECT_THROW(t.level_max(1), std::out_of_range);
}

TEST(PopDyn, GenerationZeroIsZeros) {
    RandomStream r(5, 0);
    const auto pool = popdyn_pool(en2(0.05), 1000, 0, r);
    EXPECT_EQ(pool.generation, 0u);
    for (double v : pool.values) EXPECT_EQ(v, 0.0);
}

TEST(PopDyn, MM1Mean) {
    // E[W] = rho / (mu - lambda*) = 1.
    RandomStream r(6, 0);
    const auto pool = popdyn_pool(mm1(1.0, 0.5), 100000, 60, r);
    for (double v : pool.values) ASSERT_GE(v, 0.0);
    EXPECT_NEAR(pool.mean(), 1.0, 0.02);
}

TEST(PopDyn, IndependentOfThreadCount) {
    const auto p = en2(0.1);
    RandomStream a(7, 0), b(7, 0);
    const auto one = popdyn_pool(p, 20000, 6, a, PopDynOptions{1, 1000});
    const auto many = popdyn_pool(p, 20000, 6, b, PopDynOptions{4, 1000});
    EXPECT_EQ(one.values, many.values);
}

TEST(PopDyn, TruncationErrorIsGeometric) {
    // Pool means at k and 2k differ by no more than the geometric envelope
    // rho^k * E[W]-scale, with Monte Carlo slack.
    const auto p = en2(0.1);
    const double rho = stability_margin(p).margin;
    for (std::size_t k : {2u, 4u, 8u}) {
        RandomStream r1(8, k), r2(9, k);
        const auto a = popdyn_pool(p, 200000, k, r1);
        const auto b = popdyn_pool(p, 200000, 2 * k, r2);
        const double ma = a.mean();
        double sa = 0.0;
        for (double v : a.values) sa += (v - ma) * (v - ma);
        const double se = std::sqrt(2.0 * sa / a.values.size() / a.values.size());
        EXPECT_LE(std::abs(b.mean() - a.mean()), 2.0 * std::pow(rho, static_cast<double>(k)) + 6.0 * se) << "k=" << k;
        EXPECT_GE(b.mean() + 6.0 * se, a.mean()) << "pool means are nondecreasing in k";
    }
}

TEST(SojournLimit, TrivialCases) {
    RandomStream r(10, 0);
    PopDynPool zeros{0, std::vector<double>(100, 0.0)};
    const auto p0 = make_limit_params(DeterministicSize{1}, ServiceModel{DeterministicService{0.0}, {}}, 0.5);
    for (int i = 0; i < 100; ++i) ASSERT_EQ(sample_sojourn_limit(p0, zeros, r), 0.0);
    const auto pc = make_limit_params(DeterministicSize{1}, ServiceModel{DeterministicService{0.8}, {}}, 0.5);
    RandomStream rp(11, 0);
    const auto pool = popdyn_pool(pc, 1000, 10, rp);
    for (double t : sample_sojourn_limit(pc, pool, 1000, r)) ASSERT_GE(t, 0.8);
    EXPECT_THROW(sample_sojourn_limit(pc, PopDynPool{}, r), ConfigError);
}

TEST(SojournLimit, ParallelMatchesSerialLayout) {
    const auto p = en2(0.1);
    RandomStream rp(12, 0);
    const auto pool = popdyn_pool(p, 5000, 10, rp);
    RandomStream a(13, 0), b(13, 0);
    EXPECT_EQ(sample_sojourn_limit(p, pool, 10000, a, {1, 512}), sample_sojourn_limit(p, pool, 10000, b, {3, 512}));
}

TEST(Generations, Recommended) {
    EXPECT_EQ(recommended_generations(0.5, 1e-4), 14u);
    EXPECT_EQ(recommended_generations(0.8888888888888888, 1e-4), 79u);
    EXPECT_THROW(recommended_generations(1.0), NumericError);
}

TEST(GeometricBound, ExponentialRace) {
    // N = 1, Exp(1), lambda* = 0.5, beta = 0.25: P(U_1 > 0) = P(chi > tau) = 1/3,
    // rho_beta = (1/0.75)(0.5/0.75) = 8/9.
    RandomStream r(14, 0);
    const auto rep = check_geometric_bound(mm1(1.0, 0.5), 0.25, 4, 200000, r);
    EXPECT_NEAR(rep.rho_beta, 8.0 / 9.0, 1e-12);
    EXPECT_EQ(rep.rows[0].estimate, 0.0);
    EXPECT_EQ(rep.rows[0].bound, 1.0);
    const double se = std::sqrt((1.0 / 3.0) * (2.0 / 3.0) / 200000);
    EXPECT_NEAR(rep.rows[1].estimate, 1.0 / 3.0, 4.0 * se);
    EXPECT_FALSE(rep.any_violation());
}

TEST(GeometricBound, VacuousBoundRejected) {
    RandomStream r(15, 0);
    try {
        check_geometric_bound(en2(0.25), 1.0, 3, 100, r);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("bound vacuous"), std::string::npos);
    }
}

TEST(MomentIdentity, SmallInstance) {
    const auto p = make_limit_params(EmpiricalSize{{{1, 0.5}, {2, 0.5}}}, ServiceModel{UniformService{0, 1}, {}}, 0.4);
    RandomStream r(16, 0);
    for (double beta : {0.3, 1.0}) {
        for (const auto& row : branching_moments(p, beta, 3, 200000, r)) {
            EXPECT_NEAR(row.exact, std::pow(branching_transform(p, beta), static_cast<double>(row.r)), 1e-14);
            EXPECT_NEAR(row.estimate, row.exact, 4.0 * row.std_error) << "beta=" << beta << " r=" << row.r;
        }
    }
}
