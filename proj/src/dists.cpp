#include "syncq/dists.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "syncq/errors.hpp"

namespace syncq {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kQuadTolerance = 1e-12;
constexpr double kDegenerateMass = 1e-12;

// Poisson(x) pmf summed against g over j in [0, jmax], restricted to the window
// where the pmf exceeds roughly exp(-70).
template <typename G>
double poisson_expect(double x, long jmax, G&& g) {
    const double spread = 12.0 * std::sqrt(x) + 30.0;
    const long lo = std::max(0L, static_cast<long>(std::floor(x - spread)));
    const long hi = std::min(jmax, static_cast<long>(std::ceil(x + spread)));
    if (hi < lo) return 0.0;
    double pmf = std::exp(-x + static_cast<double>(lo) * std::log(x) - std::lgamma(static_cast<double>(lo) + 1.0));
    double sum = 0.0;
    for (long j = lo; j <= hi; ++j) {
        sum += g(j) * pmf;
        pmf *= x / static_cast<double>(j + 1);
    }
    return sum;
}

// E[(1 + P)^p] for P ~ Poisson(x), x large: Taylor expansion around the mean
// using the Poisson central moments x, x, 3x^2 + x.
double shifted_poisson_power_large(double x, double p) {
    const double y = 1.0 + x;
    const double d2 = p * (p - 1.0) / (y * y);
    const double d3 = d2 * (p - 2.0) / y;
    const double d4 = d3 * (p - 3.0) / y;
    return std::pow(y, p) * (1.0 + d2 * x / 2.0 + d3 * x / 6.0 + d4 * (3.0 * x * x + x) / 24.0);
}

constexpr double kLargeMixing = 1e5;

// Integrates h(Lambda) against the Pareto(alpha, beta) law of Lambda, in the
// probability scale u = F(Lambda) so the heavy tail maps onto u -> 1.
template <typename H>
double pareto_mixture_expect(const MixedPoissonPareto& d, H&& h) {
    boost::math::quadrature::tanh_sinh<double> integrator;
    auto f = [&](double u, double uc) {
        const double tail = uc > 0.0 ? uc : 1.0 - u;
        if (tail <= 0.0) return 0.0;
        const double x = d.beta * std::pow(tail, -1.0 / d.alpha);
        return h(x);
    };
    return integrator.integrate(f, 0.0, 1.0, kQuadTolerance);
}

double mpp_pmf(const MixedPoissonPareto& d, int k) {
    if (k < 1) return 0.0;
    const double j = static_cast<double>(k - 1);
    // Lambda = e^y; integrand is Poisson(j; x) * alpha beta^alpha x^(-alpha-1) * x.
    const double log_const = std::log(d.alpha) + d.alpha * std::log(d.beta) - std::lgamma(j + 1.0);
    auto f = [&](double y) {
        const double x = std::exp(y);
        return std::exp(-x + (j - d.alpha) * y + log_const);
    };
    const double lo = std::log(d.beta);
    const double x_hi = std::max(d.beta, j) + 40.0 * std::sqrt(j + 1.0) + 60.0;
    const double hi = std::log(x_hi);
    // Split at the mode so the adaptive rule sees a one-sided bump on each part.
    const double mode = std::log(std::clamp(j - d.alpha, d.beta, x_hi));
    double total = 0.0;
    if (mode > lo) total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, mode, 15, kQuadTolerance);
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, std::max(lo, mode), hi, 15, kQuadTolerance);
    return total;
}

// P(N <= m) for the mixed Poisson-Pareto law.
double mpp_cdf(const MixedPoissonPareto& d, int m) {
    if (m < 1) return 0.0;
    const long jmax = m - 1;
    const double far = static_cast<double>(m) + 40.0 * std::sqrt(static_cast<double>(m)) + 60.0;
    return pareto_mixture_expect(d, [&](double x) {
        if (x > far) return 0.0;
        return poisson_expect(x, jmax, [](long) { return 1.0; });
    });
}

std::vector<std::pair<int, double>> normalized_pmf(const EmpiricalSize& e) {
    auto pmf = e.pmf;
    std::sort(pmf.begin(), pmf.end());
    return pmf;
}

}  // namespace

// ---------------------------------------------------------------------------

void validate(const JobSizeDistribution& dist) {
    std::visit(overloaded{
                   [](const DeterministicSize& d) {
                       if (d.k < 1) throw ConfigError("job_size.k: must be >= 1");
                   },
                   [](const MixedPoissonPareto& d) {
                       if (!(d.alpha > 1.0)) throw ConfigError("job_size.alpha: must be > 1 for a finite mean");
                       if (!(d.beta > 0.0)) throw ConfigError("job_size.beta: must be > 0");
                   },
                   [](const EmpiricalSize& e) {
                       if (e.pmf.empty()) throw ConfigError("job_size.pmf: must be nonempty");
                       double total = 0.0;
                       for (const auto& [k, p] : e.pmf) {
                           if (k < 1) throw ConfigError("job_size.pmf: sizes must be >= 1");
                           if (!(p >= 0.0)) throw ConfigError("job_size.pmf: probabilities must be >= 0");
                           total += p;
                       }
                       if (std::abs(total - 1.0) > 1e-12) throw ConfigError("job_size.pmf: probabilities must sum to 1");
                   },
               },
               dist);
}

void validate(const TruncationMode& trunc) {
    const int m = truncation_cap(trunc);
    if (m < 1) throw ConfigError("truncation.m: cap must be >= 1");
}

int truncation_cap(const TruncationMode& trunc) {
    return std::visit(overloaded{
                          [](const NoTruncation&) { return std::numeric_limits<int>::max(); },
                          [](const MinWithCap& t) { return t.m; },
                          [](const ConditionalOnCap& t) { return t.m; },
                      },
                      trunc);
}

int max_job_size(const JobSizeDistribution& dist, const TruncationMode& trunc) {
    const int support_max = std::visit(overloaded{
                                           [](const DeterministicSize& d) { return d.k; },
                                           [](const MixedPoissonPareto&) { return std::numeric_limits<int>::max(); },
                                           [](const EmpiricalSize& e) {
                                               int k = 0;
                                               for (const auto& [kk, p] : e.pmf)
                                                   if (p > 0.0) k = std::max(k, kk);
                                               return k;
                                           },
                                       },
                                       dist);
    return std::min(support_max, truncation_cap(trunc));
}

double mixed_poisson_pareto_mean(const MixedPoissonPareto& d) { return 1.0 + d.alpha * d.beta / (d.alpha - 1.0); }

double job_size_pmf(const JobSizeDistribution& dist, int k) {
    return std::visit(overloaded{
                          [k](const DeterministicSize& d) { return d.k == k ? 1.0 : 0.0; },
                          [k](const MixedPoissonPareto& d) { return mpp_pmf(d, k); },
                          [k](const EmpiricalSize& e) {
                              double p = 0.0;
                              for (const auto& [kk, pp] : e.pmf)
                                  if (kk == k) p += pp;
                              return p;
                          },
                      },
                      dist);
}

double job_size_cdf(const JobSizeDistribution& dist, int m) {
    return std::visit(overloaded{
                          [m](const DeterministicSize& d) { return d.k <= m ? 1.0 : 0.0; },
                          [m](const MixedPoissonPareto& d) { return mpp_cdf(d, m); },
                          [m](const EmpiricalSize& e) {
                              double p = 0.0;
                              for (const auto& [kk, pp] : e.pmf)
                                  if (kk <= m) p += pp;
                              return p;
                          },
                      },
                      dist);
}

double job_size_moment(const JobSizeDistribution& dist, const TruncationMode& trunc, double p) {
    validate(dist);
    validate(trunc);
    if (!(p > 0.0)) throw ConfigError("moment order p must be > 0");

    if (const auto* mpp = std::get_if<MixedPoissonPareto>(&dist)) {
        const MixedPoissonPareto d = *mpp;
        return std::visit(
            overloaded{
                [&](const NoTruncation&) {
                    if (p >= d.alpha) throw NumericError("infinite moment: E[N^p] diverges for p >= alpha");
                    return pareto_mixture_expect(d, [&](double x) {
                        if (x > kLargeMixing) return shifted_poisson_power_large(x, p);
                        return poisson_expect(x, std::numeric_limits<long>::max(),
                                              [&](long j) { return std::pow(1.0 + static_cast<double>(j), p); });
                    });
                },
                [&](const MinWithCap& t) {
                    const double cap_p = std::pow(static_cast<double>(t.m), p);
                    const double far = t.m + 40.0 * std::sqrt(static_cast<double>(t.m)) + 60.0;
                    return pareto_mixture_expect(d, [&](double x) {
                        if (x > far) return cap_p;
                        double below_mass = 0.0;
                        const double below = poisson_expect(x, t.m - 2, [&](long j) {
                            return std::pow(1.0 + static_cast<double>(j), p);
                        });
                        below_mass = poisson_expect(x, t.m - 2, [](long) { return 1.0; });
                        return below + cap_p * std::max(0.0, 1.0 - below_mass);
                    });
                },
                [&](const ConditionalOnCap& t) {
                    const double mass = mpp_cdf(d, t.m);
                    if (mass < kDegenerateMass) throw NumericError("degenerate truncation: P(N <= m) is numerically 0");
                    const double far = t.m + 40.0 * std::sqrt(static_cast<double>(t.m)) + 60.0;
                    const double num = pareto_mixture_expect(d, [&](double x) {
                        if (x > far) return 0.0;
                        return poisson_expect(x, t.m - 1, [&](long j) { return std::pow(1.0 + static_cast<double>(j), p); });
                    });
                    return num / mass;
                },
            },
            trunc);
    }

    // Finite-support laws: exact summation.
    std::vector<std::pair<int, double>> pmf;
    if (const auto* det = std::get_if<DeterministicSize>(&dist))
        pmf = {{det->k, 1.0}};
    else
        pmf = normalized_pmf(std::get<EmpiricalSize>(dist));

    return std::visit(overloaded{
                          [&](const NoTruncation&) {
                              double s = 0.0;
                              for (const auto& [k, q] : pmf) s += q * std::pow(static_cast<double>(k), p);
                              return s;
                          },
                          [&](const MinWithCap& t) {
                              double s = 0.0;
                              for (const auto& [k, q] : pmf) s += q * std::pow(static_cast<double>(std::min(k, t.m)), p);
                              return s;
                          },
                          [&](const ConditionalOnCap& t) {
                              double s = 0.0, mass = 0.0;
                              for (const auto& [k, q] : pmf) {
                                  if (k > t.m) continue;
                                  s += q * std::pow(static_cast<double>(k), p);
                                  mass += q;
                              }
                              if (mass < kDegenerateMass) throw NumericError("degenerate truncation: P(N <= m) is numerically 0");
                              return s / mass;
                          },
                      },
                      trunc);
}

// ---------------------------------------------------------------------------

JobSizeSampler::JobSizeSampler(JobSizeDistribution dist, TruncationMode trunc)
    : dist_(std::move(dist)), trunc_(trunc) {
    validate(dist_);
    validate(trunc_);

    const bool conditional = std::holds_alternative<ConditionalOnCap>(trunc_);
    const int cap = truncation_cap(trunc_);

    std::vector<std::pair<int, double>> pmf;
    if (const auto* det = std::get_if<DeterministicSize>(&dist_)) {
        pmf = {{det->k, 1.0}};
    } else if (const auto* e = std::get_if<EmpiricalSize>(&dist_)) {
        pmf = normalized_pmf(*e);
    } else if (conditional) {
        const auto& d = std::get<MixedPoissonPareto>(dist_);
        const double mass = mpp_cdf(d, cap);
        if (mass < kDegenerateMass) throw NumericError("degenerate truncation: P(N <= m) is numerically 0");
        // Rejection is cheap when the cap keeps most of the mass.
        if (mass >= 0.25) return;
        if (cap > 1'000'000) throw NumericError("degenerate truncation: cap too large for a tabulated conditional law");
        for (int k = 1; k <= cap; ++k) pmf.emplace_back(k, mpp_pmf(d, k));
    } else {
        return;
    }

    if (conditional) std::erase_if(pmf, [cap](const auto& kp) { return kp.first > cap; });
    double total = 0.0;
    for (const auto& kp : pmf) total += kp.second;
    if (total < kDegenerateMass) throw NumericError("degenerate truncation: P(N <= m) is numerically 0");

    // Cumulative table over the contiguous range of sizes.
    table_first_ = pmf.front().first;
    const int last = pmf.back().first;
    std::vector<double> mass(static_cast<std::size_t>(last - table_first_ + 1), 0.0);
    for (const auto& [k, q] : pmf) mass[static_cast<std::size_t>(k - table_first_)] += q / total;
    cdf_.resize(mass.size());
    std::partial_sum(mass.begin(), mass.end(), cdf_.begin());
    cdf_.back() = 1.0;
    use_table_ = true;
}

int JobSizeSampler::draw_from_table(RandomStream& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const auto idx = std::min<std::ptrdiff_t>(it - cdf_.begin(), static_cast<std::ptrdiff_t>(cdf_.size()) - 1);
    return table_first_ + static_cast<int>(idx);
}

int JobSizeSampler::draw_untruncated(RandomStream& rng) const {
    const auto& d = std::get<MixedPoissonPareto>(dist_);
    const double rate = d.beta * std::pow(rng.uniform_pos(), -1.0 / d.alpha);
    const std::uint64_t extra = rng.poisson(rate);
    return static_cast<int>(std::min<std::uint64_t>(extra, std::numeric_limits<int>::max() - 1)) + 1;
}

int JobSizeSampler::operator()(RandomStream& rng) const {
    const int cap = truncation_cap(trunc_);
    if (use_table_) {
        const int k = draw_from_table(rng);
        return std::holds_alternative<MinWithCap>(trunc_) ? std::min(k, cap) : k;
    }
    if (std::holds_alternative<ConditionalOnCap>(trunc_)) {
        for (;;) {
            const int k = draw_untruncated(rng);
            if (k <= cap) return k;
        }
    }
    return std::min(draw_untruncated(rng), cap);
}

int sample_job_size(const JobSizeDistribution& dist, const TruncationMode& trunc, RandomStream& rng) {
    return JobSizeSampler(dist, trunc)(rng);
}

// ---------------------------------------------------------------------------

void validate(const ServiceMarginal& b) {
    std::visit(overloaded{
                   [](const UniformService& u) {
                       if (!(u.a >= 0.0) || !(u.b > u.a)) throw ConfigError("service: uniform requires 0 <= a < b");
                   },
                   [](const ExponentialService& e) {
                       if (!(e.rate > 0.0)) throw ConfigError("service.rate: must be > 0");
                   },
                   [](const DeterministicService& d) {
                       if (!(d.c >= 0.0)) throw ConfigError("service.c: must be >= 0");
                   },
               },
               b);
}

double sample_service(const ServiceMarginal& b, RandomStream& rng) {
    return std::visit(overloaded{
                          [&](const UniformService& u) { return u.a + (u.b - u.a) * rng.uniform(); },
                          [&](const ExponentialService& e) { return rng.exponential(e.rate); },
                          [](const DeterministicService& d) { return d.c; },
                      },
                      b);
}

void sample_fragments(const ServiceModel& model, std::span<double> out, RandomStream& rng) {
    if (model.joint) {
        model.joint(out, rng);
        return;
    }
    for (double& x : out) x = sample_service(model.marginal, rng);
}

std::vector<double> sample_fragments(const ServiceModel& model, int k, RandomStream& rng) {
    if (k < 1) throw ConfigError("sample_fragments: k must be >= 1");
    std::vector<double> out(static_cast<std::size_t>(k));
    sample_fragments(model, out, rng);
    return out;
}

double service_mean(const ServiceMarginal& b) {
    return std::visit(overloaded{
                          [](const UniformService& u) { return 0.5 * (u.a + u.b); },
                          [](const ExponentialService& e) { return 1.0 / e.rate; },
                          [](const DeterministicService& d) { return d.c; },
                      },
                      b);
}

double service_second_moment(const ServiceMarginal& b) {
    return std::visit(overloaded{
                          [](const UniformService& u) { return (u.a * u.a + u.a * u.b + u.b * u.b) / 3.0; },
                          [](const ExponentialService& e) { return 2.0 / (e.rate * e.rate); },
                          [](const DeterministicService& d) { return d.c * d.c; },
                      },
                      b);
}

double mgf_domain_upper(const ServiceMarginal& b) {
    if (const auto* e = std::get_if<ExponentialService>(&b)) return e->rate;
    return std::numeric_limits<double>::infinity();
}

namespace {

// expm1(z)/z and its derivative, stable near z = 0.
double expm1_ratio(double z) { return z == 0.0 ? 1.0 : std::expm1(z) / z; }

double expm1_ratio_derivative(double z) {
    if (std::abs(z) < 1e-3) return 0.5 + z / 3.0 + z * z / 8.0 + z * z * z / 30.0;
    return (z * std::exp(z) - std::expm1(z)) / (z * z);
}

void check_domain(const ServiceMarginal& b, double theta) {
    if (theta >= mgf_domain_upper(b))
        throw NumericError("MGF diverges: theta=" + std::to_string(theta) + " is outside the service law's domain");
}

}  // namespace

double service_mgf(const ServiceMarginal& b, double theta) {
    check_domain(b, theta);
    return std::visit(overloaded{
                          [theta](const UniformService& u) {
                              return std::exp(theta * u.a) * expm1_ratio(theta * (u.b - u.a));
                          },
                          [theta](const ExponentialService& e) { return e.rate / (e.rate - theta); },
                          [theta](const DeterministicService& d) { return std::exp(theta * d.c); },
                      },
                      b);
}

double service_weighted_mgf(const ServiceMarginal& b, double theta) {
    check_domain(b, theta);
    return std::visit(overloaded{
                          [theta](const UniformService& u) {
                              const double w = u.b - u.a;
                              const double ea = std::exp(theta * u.a);
                              return u.a * ea * expm1_ratio(theta * w) + ea * w * expm1_ratio_derivative(theta * w);
                          },
                          [theta](const ExponentialService& e) {
                              const double d = e.rate - theta;
                              return e.rate / (d * d);
                          },
                          [theta](const DeterministicService& d) { return d.c * std::exp(theta * d.c); },
                      },
                      b);
}

}  // namespace syncq
