#include "syncq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "syncq/errors.hpp"

namespace syncq {

double mean(std::span<const double> samples) {
    if (samples.empty()) throw ConfigError("mean: empty sample");
    return std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
}

MeanCI mean_ci(std::span<const double> samples, std::size_t batches, double level) {
    if (batches < 2) throw ConfigError("mean_ci: need at least 2 batches");
    if (samples.size() < 2 * batches) throw ConfigError("mean_ci: too few samples for the requested batch count");
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("mean_ci: level must be in (0, 1)");

    const std::size_t size = samples.size() / batches;
    std::vector<double> means(batches);
    for (std::size_t b = 0; b < batches; ++b)
        means[b] = mean(samples.subspan(b * size, size));

    const double grand = mean(means);
    double ss = 0.0;
    for (const double m : means) ss += (m - grand) * (m - grand);
    const double nb = static_cast<double>(batches);
    const double se = std::sqrt(ss / (nb - 1.0) / nb);
    const boost::math::students_t t_dist(nb - 1.0);
    const double t = boost::math::quantile(t_dist, 0.5 + level / 2.0);

    MeanCI ci;
    ci.mean = grand;
    ci.lo = grand - t * se;
    ci.hi = grand + t * se;
    ci.level = level;
    ci.batches = batches;
    ci.batch_size = size;
    return ci;
}

bool intervals_overlap(const MeanCI& a, const MeanCI& b) { return a.lo <= b.hi && b.lo <= a.hi; }

std::vector<CcdfPoint> empirical_ccdf(std::span<const double> samples, std::span<const double> grid) {
    if (samples.empty()) throw ConfigError("empirical_ccdf: empty sample");
    if (!std::is_sorted(grid.begin(), grid.end())) throw ConfigError("empirical_ccdf: grid must be ascending");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    std::vector<CcdfPoint> out;
    out.reserve(grid.size());
    for (const double x : grid) {
        const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), x);
        out.push_back({x, static_cast<double>(above) / n});
    }
    return out;
}

double ccdf_std_error(double p, std::size_t n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

std::vector<double> log_grid(std::span<const double> samples, std::size_t points) {
    if (samples.empty()) throw ConfigError("log_grid: empty sample");
    if (points < 2) throw ConfigError("log_grid: need at least 2 points");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double p01 = sorted[sorted.size() / 100];
    const auto first_pos = std::upper_bound(sorted.begin(), sorted.end(), 0.0);
    const double top = sorted.back();
    if (first_pos == sorted.end()) return std::vector<double>(points, 0.0);
    double bottom = std::max(p01, *first_pos);
    if (bottom >= top) bottom = top / 10.0;
    std::vector<double> grid(points);
    const double ratio = std::log(top / bottom) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) grid[i] = bottom * std::exp(ratio * static_cast<double>(i));
    grid.back() = top;
    return grid;
}

std::vector<double> running_mean(std::span<const double> samples) {
    std::vector<double> out(samples.size());
    double sum = 0.0;
    for (std::size_t t = 0; t < samples.size(); ++t) {
        sum += samples[t];
        out[t] = sum / static_cast<double>(t + 1);
    }
    return out;
}

}  // namespace syncq
