#include "syncq/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "syncq/errors.hpp"
#include "syncq/parallel.hpp"

namespace syncq {

namespace {

constexpr double kBetaCap = 1e6;
constexpr double kMomentEpsilon = 0.05;

// Largest argument the solvers may hand to the MGF.
double domain_edge(const ServiceMarginal& b) {
    const double upper = mgf_domain_upper(b);
    return std::isfinite(upper) ? upper * (1.0 - 1e-12) : kBetaCap;
}

// log g(beta); log-convex in beta.
double log_g(double mean_size, double rate, const ServiceMarginal& b, double beta) {
    return std::log(mean_size) + std::log(service_mgf(b, beta)) + std::log(rate) - std::log(rate + beta);
}

StabilityReport minimize_g(double mean_size, double rate, const ServiceMarginal& b) {
    auto f = [&](double beta) { return log_g(mean_size, rate, b, beta); };
    const double edge = domain_edge(b);

    // Bracket the minimizer: grow hi until f stops decreasing.
    double hi = std::min(1.0, edge);
    while (hi < edge && f(hi) < f(hi / 2.0)) hi = std::min(2.0 * hi, edge);

    constexpr double inv_phi = 0.6180339887498949;
    double lo = 0.0;
    double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    while (hi - lo > 1e-10 * std::max(1.0, hi)) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    double beta = 0.5 * (lo + hi);
    double value = f(beta);
    // The infimum may sit at beta = 0 (g increasing from the start).
    if (f(0.0) <= value) {
        beta = 0.0;
        value = f(0.0);
    }
    StabilityReport report;
    report.beta_star = beta;
    report.margin = std::exp(value);
    report.stable = report.margin < 1.0;
    return report;
}

}  // namespace

double lambda_star(double lambda, double mean_jobsize) {
    if (!(lambda > 0.0)) throw ConfigError("lambda: must be > 0");
    if (!(mean_jobsize >= 1.0)) throw ConfigError("mean job size must be >= 1");
    return lambda * mean_jobsize;
}

StabilityReport stability_margin(const LimitParams& params) {
    return minimize_g(params.mean_size, params.lambda_star, params.service.marginal);
}

double boundary_lambda(const JobSizeDistribution& job_size, const ServiceMarginal& service, double tol) {
    const LimitParams base = make_limit_params(job_size, ServiceModel{service, {}}, 1.0);
    auto stable_at = [&](double lambda) { return minimize_g(base.mean_size, lambda * base.mean_size, service).stable; };

    double lo = 1e-6, hi = 1.0;
    if (!stable_at(lo)) throw NumericError("boundary_lambda: unstable even at lambda=" + std::to_string(lo));
    while (stable_at(hi)) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e9) throw NumericError("boundary_lambda: no stability boundary below lambda=1e9");
    }
    while (hi - lo > tol * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        (stable_at(mid) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

ThetaSolution solve_theta(const LimitParams& params) {
    const auto stab = stability_margin(params);
    if (!stab.stable)
        throw NumericError("no Cramér root: stability margin " + std::to_string(stab.margin) + " >= 1");

    const auto& b = params.service.marginal;
    const double rate = params.lambda_star;
    auto f = [&](double theta) { return log_g(params.mean_size, rate, b, theta); };
    const double edge = domain_edge(b);

    double lo = stab.beta_star;
    double hi = std::min(edge, std::max(2.0 * lo, 1.0));
    while (f(hi) <= 0.0) {
        if (hi >= edge) throw NumericError("root beyond MGF domain: g stays below 1 up to theta=" + std::to_string(hi));
        lo = hi;
        hi = std::min(2.0 * hi, edge);
    }
    for (int it = 0; it < 400 && hi - lo > 1e-13 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? hi : lo) = mid;
    }

    ThetaSolution sol;
    sol.theta = 0.5 * (lo + hi);
    const double t = sol.theta;
    const double inner = (rate + t) * service_weighted_mgf(b, t) - service_mgf(b, t);
    sol.derivative_value = params.mean_size * rate / ((rate + t) * (rate + t)) * inner;
    sol.valid = std::isfinite(sol.derivative_value) && sol.derivative_value > 0.0;
    if (const auto* mpp = std::get_if<MixedPoissonPareto>(&params.job_size))
        sol.moment_warning = std::max(t, 1.0 + kMomentEpsilon) >= mpp->alpha - kMomentEpsilon;
    return sol;
}

// ---------------------------------------------------------------------------

namespace {

// E_tau[ exp(theta * max(0, max_i(c_i - tau_i))) ] for i.i.d. tau_i ~ Exp(rate).
// For y >= 0, P(M <= y) = exp(-rate * sum_{c_i > y} (c_i - y)), piecewise
// exponential between consecutive sorted c_i, so the tail integral
// E[e^{theta M}] = 1 + theta int_0^inf e^{theta y} P(M > y) dy is exact.
double expected_exp_max(std::vector<double>& c, double theta, double rate) {
    std::sort(c.begin(), c.end(), std::greater<>());
    double total = 1.0;
    double suffix_sum = 0.0;  // sum of the c_i above the current segment
    for (std::size_t k = 0; k < c.size(); ++k) {
        if (c[k] <= 0.0) break;
        suffix_sum += c[k];
        const double seg_hi = c[k];
        const double seg_lo = (k + 1 < c.size()) ? std::max(0.0, c[k + 1]) : 0.0;
        if (seg_hi <= seg_lo) continue;
        const double count = static_cast<double>(k + 1);
        // On (seg_lo, seg_hi): P(M > y) = 1 - exp(-rate * (suffix_sum - count*y)).
        // int e^{theta y} dy = (e^{theta hi} - e^{theta lo}) / theta.
        const double plain = (std::exp(theta * seg_hi) - std::exp(theta * seg_lo)) / theta;
        // int e^{theta y - rate*suffix_sum + rate*count*y} dy
        const double a = theta + rate * count;
        const double mixed = (std::exp(a * seg_hi - rate * suffix_sum) - std::exp(a * seg_lo - rate * suffix_sum)) / a;
        total += theta * (plain - mixed);
    }
    return total;
}

}  // namespace

HEstimate estimate_H(const LimitParams& params, const ThetaSolution& theta, const PopDynPool& pool, std::size_t samples,
                     RandomStream& rng, HOptions opts) {
    if (!theta.valid) throw NumericError("estimate_H: theta solution is not valid (derivative condition fails)");
    if (pool.values.empty()) throw ConfigError("estimate_H: empty pool");
    if (samples < 2) throw ConfigError("estimate_H: need at least 2 samples");

    const double t = theta.theta;
    const double rate = params.lambda_star;
    const auto& b = params.service.marginal;

    HEstimate est;
    est.prefactor = (rate + t) * (rate + t) / (t * rate * params.mean_size);
    est.denominator = (rate + t) * service_weighted_mgf(b, t) - service_mgf(b, t);
    if (!(est.denominator > 0.0)) throw NumericError("estimate_H: nonpositive denominator");

    const BranchDrawer drawer(params);
    const RandomStream base(rng.next_u64(), rng.stream_id());
    const std::size_t chunks = (samples + opts.chunk - 1) / opts.chunk;
    std::vector<std::pair<double, double>> acc(chunks, {0.0, 0.0});
    const double tau_factor = rate / (rate + t);  // E[e^{-theta tau}]

    for_each_chunk(samples, opts.chunk, opts.threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
        RandomStream rs = base.substream(c);
        std::vector<double> shifts;
        for (std::size_t s = begin; s < end; ++s) {
            const int n = drawer.draw_size(rs);
            double value;
            if (opts.conditioned) {
                shifts.resize(static_cast<std::size_t>(n));
                double sum = 0.0;
                for (auto& cc : shifts) {
                    cc = sample_service(b, rs) + pool.values[rs.below(pool.values.size())];
                    if (t * cc > 700.0) throw NumericError("estimate_H: overflow in exp(theta*(chi+W))");
                    sum += std::exp(t * cc);
                }
                value = expected_exp_max(shifts, t, rate) - tau_factor * sum;
            } else {
                double mx = 1.0, sum = 0.0;
                for (int q = 0; q < n; ++q) {
                    const double y = drawer.draw_increment(rs) + pool.values[rs.below(pool.values.size())];
                    if (t * y > 700.0)
                        throw NumericError("estimate_H: overflow in exp(theta*(chi-tau+W)), theta*Y=" + std::to_string(t * y));
                    const double e = std::exp(t * y);
                    mx = std::max(mx, e);
                    sum += e;
                }
                value = mx - sum;
            }
            acc[c].first += value;
            acc[c].second += value * value;
        }
    });

    double s = 0.0, s2 = 0.0;
    for (const auto& a : acc) {
        s += a.first;
        s2 += a.second;
    }
    const double ns = static_cast<double>(samples);
    est.samples_used = samples;
    est.numerator = s / ns;
    const double var = std::max(0.0, (s2 - ns * est.numerator * est.numerator) / (ns - 1.0));
    est.numerator_se = std::sqrt(var / ns);
    const double scale = est.prefactor / est.denominator;
    est.h = scale * est.numerator;
    const double z = boost::math::quantile(boost::math::normal(), 0.5 + opts.level / 2.0);
    est.ci = {scale * (est.numerator - z * est.numerator_se), scale * (est.numerator + z * est.numerator_se)};
    return est;
}

double cl_tail(double h, double theta, double x) { return std::min(1.0, h * std::exp(-theta * x)); }

}  // namespace syncq
