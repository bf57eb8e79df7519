#pragma once

#include <cstddef>
#include <utility>

#include "syncq/limit.hpp"
#include "syncq/random.hpp"

namespace syncq {

/// lambda * E[N], the rate of the gaps between a fragment and the job in front.
double lambda_star(double lambda, double mean_jobsize);

/// g(beta) = E[N] E[e^{beta chi}] lambda* / (lambda* + beta) minimized over beta.
struct StabilityReport {
    double beta_star = 0.0;
    double margin = 0.0;  ///< g(beta_star)
    bool stable = false;  ///< margin < 1
};

StabilityReport stability_margin(const LimitParams& params);

/// The per-server intensity at which the stability margin reaches 1, holding
/// the job-size law and service law fixed. Bisection tolerance `tol`.
double boundary_lambda(const JobSizeDistribution& job_size, const ServiceMarginal& service, double tol = 1e-10);

/// The Cramer-Lundberg root of g(theta) = 1 beyond the minimizer.
struct ThetaSolution {
    double theta = 0.0;
    double derivative_value = 0.0;  ///< E[sum_i X_i e^{theta X_i}] at theta
    bool valid = false;             ///< derivative finite and positive
    bool moment_warning = false;    ///< E[N^{max(theta, 1+eps)}] may be infinite
};

ThetaSolution solve_theta(const LimitParams& params);

struct HOptions {
    /// Integrate the tau's out analytically instead of sampling them.
    bool conditioned = false;
    unsigned threads = 1;
    std::size_t chunk = 8192;
    double level = 0.95;
};

struct HEstimate {
    double h = 0.0;
    std::pair<double, double> ci{0.0, 0.0};
    std::size_t samples_used = 0;
    double prefactor = 0.0;    ///< (lambda*+theta)^2 / (theta lambda* E[N])
    double numerator = 0.0;    ///< E[1 v max_i e^{theta Y_i} - sum_i e^{theta Y_i}]
    double numerator_se = 0.0;
    double denominator = 0.0;  ///< (lambda*+theta) E[e^{theta chi} chi] - E[e^{theta chi}]
};

/// Monte-Carlo estimate of the constant H in P(W > x) ~ H e^{-theta x}, with
/// the W_i resampled from a converged population-dynamics pool.
HEstimate estimate_H(const LimitParams& params, const ThetaSolution& theta, const PopDynPool& pool, std::size_t samples,
                     RandomStream& rng, HOptions opts = {});

/// min(1, h e^{-theta x}).
double cl_tail(double h, double theta, double x);

}  // namespace syncq
