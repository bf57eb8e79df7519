#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace syncq {

/// A batch-means confidence interval for a mean.
struct MeanCI {
    double mean = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double level = 0.95;
    std::size_t batches = 0;
    std::size_t batch_size = 0;

    double half_width() const noexcept { return 0.5 * (hi - lo); }
};

/// Nonoverlapping batch means with a Student-t interval on the batch means.
/// Trailing samples that do not fill a batch are discarded. Throws ConfigError
/// when samples.size() < 2 * batches or batches < 2.
MeanCI mean_ci(std::span<const double> samples, std::size_t batches = 30, double level = 0.95);

bool intervals_overlap(const MeanCI& a, const MeanCI& b);

struct CcdfPoint {
    double x = 0.0;
    double ccdf = 0.0;  ///< fraction of samples strictly greater than x
};

/// Empirical P(X > x) on an ascending grid. Throws ConfigError on empty samples
/// or an unsorted grid.
std::vector<CcdfPoint> empirical_ccdf(std::span<const double> samples, std::span<const double> grid);

/// Binomial standard error of an empirical tail probability.
double ccdf_std_error(double p, std::size_t n);

/// `points` log-spaced values from the 1st percentile (or smallest positive
/// sample, if larger) to the maximum of `samples`.
std::vector<double> log_grid(std::span<const double> samples, std::size_t points = 200);

/// Element t is the mean of the first t+1 samples.
std::vector<double> running_mean(std::span<const double> samples);

double mean(std::span<const double> samples);

}  // namespace syncq
