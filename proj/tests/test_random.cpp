#include <atomic>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "syncq/parallel.hpp"
#include "syncq/random.hpp"

using namespace syncq;

TEST(RandomStream, SameIdentityReproducesSequence) {
    RandomStream a(42, 7), b(42, 7);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(RandomStream, DistinctIdsDiffer) {
    RandomStream a(42, 7), b(42, 8), c(43, 7);
    int same_b = 0, same_c = 0;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u64();
        same_b += x == b.next_u64();
        same_c += x == c.next_u64();
    }
    EXPECT_EQ(same_b, 0);
    EXPECT_EQ(same_c, 0);
}

TEST(RandomStream, SubstreamIgnoresPosition) {
    RandomStream a(5, 1), b(5, 1);
    for (int i = 0; i < 10; ++i) b.next_u64();
    auto sa = a.substream(3), sb = b.substream(3);
    for (int i = 0; i < 100; ++i) ASSERT_EQ(sa.next_u64(), sb.next_u64());
    auto other = a.substream(4);
    EXPECT_NE(a.substream(3).next_u64(), other.next_u64());
}

TEST(RandomStream, UniformRanges) {
    RandomStream r(1, 0);
    for (int i = 0; i < 100000; ++i) {
        const double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        const double v = r.uniform_pos();
        ASSERT_GT(v, 0.0);
        ASSERT_LE(v, 1.0);
    }
}

TEST(RandomStream, ExponentialMean) {
    RandomStream r(2, 0);
    const int n = 400000;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += r.exponential(4.0);
    // sd of the mean is (1/4)/sqrt(n)
    EXPECT_NEAR(s / n, 0.25, 4.0 * 0.25 / std::sqrt(n));
}

TEST(RandomStream, BelowIsUniform) {
    RandomStream r(3, 0);
    std::vector<int> counts(5, 0);
    const int n = 500000;
    for (int i = 0; i < n; ++i) ++counts[r.below(5)];
    for (int c : counts) EXPECT_NEAR(c / double(n), 0.2, 4.0 * std::sqrt(0.2 * 0.8 / n));
}

TEST(RandomStream, MixIdsSpreads) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t a = 0; a < 100; ++a)
        for (std::uint64_t b = 0; b < 100; ++b) seen.insert(mix_ids(a, b));
    EXPECT_EQ(seen.size(), 10000u);
}

TEST(Parallel, EveryIndexOnceForAnyThreadCount) {
    for (unsigned threads : {1u, 2u, 5u}) {
        std::vector<std::atomic<int>> hits(1003);
        for_each_chunk(hits.size(), 64, threads, [&](std::size_t, std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) ++hits[i];
        });
        for (const auto& h : hits) ASSERT_EQ(h.load(), 1);
    }
}

TEST(Parallel, ExceptionsReachCaller) {
    auto boom = [](std::size_t c, std::size_t, std::size_t) {
        if (c == 3) throw std::runtime_error("chunk 3");
    };
    EXPECT_THROW(for_each_chunk(100, 10, 1, boom), std::runtime_error);
    EXPECT_THROW(for_each_chunk(100, 10, 4, boom), std::runtime_error);
}
