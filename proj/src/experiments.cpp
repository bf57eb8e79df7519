#include "syncq/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include "syncq/asymptotics.hpp"
#include "syncq/errors.hpp"
#include "syncq/io.hpp"
#include "syncq/limit.hpp"
#include "syncq/parallel.hpp"

namespace syncq {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr Discipline kAll[] = {Discipline::SyncB, Discipline::SplitMerge, Discipline::MGn};

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json summary_json(const DisciplineSummary& s) {
    return {{"discipline", std::string(to_string(s.discipline))},
            {"mean_sojourn", s.sojourn.mean},
            {"ci_lo", finite_or_null(s.sojourn.lo)},
            {"ci_hi", finite_or_null(s.sojourn.hi)},
            {"mean_waiting", s.mean_waiting},
            {"jobs", s.jobs},
            {"events", s.events}};
}

// Runs the given disciplines on one stream, in parallel, results in input order.
std::vector<SimOutput> run_all(const JobStream& stream, std::span<const Discipline> ds, unsigned threads) {
    std::vector<SimOutput> outs(ds.size());
    for_each_chunk(ds.size(), 1, threads,
                   [&](std::size_t, std::size_t b, std::size_t) { outs[b] = run_discipline(ds[b], stream); });
    return outs;
}

PopDynPool converged_pool(const LimitParams& p, std::size_t m, std::optional<std::size_t> k, double eps,
                          std::uint64_t seed, unsigned threads, std::size_t& generations) {
    const auto stab = stability_margin(p);
    if (!stab.stable)
        throw NumericError("limit is unstable: stability margin " + fmt9(stab.margin) + " >= 1");
    generations = k.value_or(recommended_generations(stab.margin, eps));
    RandomStream rng(seed, kPoolStream);
    return popdyn_pool(p, m, generations, rng, PopDynOptions{threads});
}

std::vector<double> ccdf_grid(std::span<const double> samples) {
    auto grid = log_grid(samples);
    if (grid.empty() || grid.front() > 0.0) grid.insert(grid.begin(), 0.0);
    return grid;
}

}  // namespace

DisciplineSummary summarize(const SimOutput& out, std::size_t warmup, std::size_t batches) {
    const auto sojourn = out.sojourn_times(warmup);
    const auto waiting = out.waiting_times(warmup);
    DisciplineSummary s;
    s.discipline = out.discipline;
    if (sojourn.size() >= 2 * batches) {
        s.sojourn = mean_ci(sojourn, batches);
    } else {
        // Too short for batch means; the mean is still reported.
        const double nan = std::numeric_limits<double>::quiet_NaN();
        s.sojourn = MeanCI{mean(sojourn), nan, nan, 0.95, 0, 0};
    }
    s.mean_waiting = mean(waiting);
    s.jobs = sojourn.size();
    s.events = out.events;
    return s;
}

std::vector<DisciplineSummary> cmd_simulate(const ExperimentConfig& config, bool crn, const RunContext& ctx) {
    std::vector<Discipline> ds;
    if (crn || config.discipline == DisciplineSelector::AllCrn)
        ds.assign(std::begin(kAll), std::end(kAll));
    else
        ds.push_back(config.discipline == DisciplineSelector::SyncB        ? Discipline::SyncB
                     : config.discipline == DisciplineSelector::SplitMerge ? Discipline::SplitMerge
                                                                           : Discipline::MGn);

    RandomStream rng(config.sim.seed, kSimulationStream);
    const JobStream stream = generate_job_stream(config.sim, rng);
    const auto outs = run_all(stream, ds, ctx.threads);

    Manifest manifest(ctx.out_dir, "simulate", config.sim.seed, config_hash(config.source));
    std::vector<DisciplineSummary> summaries;
    for (const auto& out : outs) {
        const std::string name(to_string(out.discipline));
        write_jobs_csv(manifest.file("jobs_" + name + ".csv"), out);
        summaries.push_back(summarize(out, config.sim.warmup_jobs, config.batches));
        write_json(manifest.file("summary_" + name + ".json"), summary_json(summaries.back()));
    }
    if (summaries.size() > 1) {
        auto f = open_out(manifest.file("comparison.csv"));
        f << "discipline,mean_sojourn,ci_lo,ci_hi,mean_waiting,jobs,events\n";
        for (const auto& s : summaries)
            f << to_string(s.discipline) << ',' << fmt9(s.sojourn.mean) << ',' << fmt9(s.sojourn.lo) << ','
              << fmt9(s.sojourn.hi) << ',' << fmt9(s.mean_waiting) << ',' << s.jobs << ',' << s.events << '\n';
    }
    manifest.settings() = {{"batches", config.batches}, {"warmup_jobs", config.sim.warmup_jobs}};
    manifest.write();
    return summaries;
}

// ---------------------------------------------------------------------------

SimConfig table1_config(const Table1Row& row, const ScaleOptions& opts) {
    if (!(opts.scale >= 1.0)) throw ConfigError("scale: must be >= 1");
    SimConfig c;
    c.n = static_cast<int>(std::lround(1000.0 / opts.scale));
    c.lambda = row.arrival_rate / opts.scale / c.n;
    c.job_size = MixedPoissonPareto{3.0, row.beta};
    c.truncation = MinWithCap{c.n};
    c.service.marginal = UniformService{0.0, 1.0};
    c.horizon_jobs = opts.jobs;
    c.seed = opts.seed;
    validate(c);
    return c;
}

std::vector<Table1Cell> run_table1(const ScaleOptions& opts, unsigned threads) {
    constexpr std::size_t rows = std::size(kTable1Rows);
    std::vector<Table1Cell> cells(rows * 3);
    for_each_chunk(rows, 1, threads, [&](std::size_t r, std::size_t, std::size_t) {
        const SimConfig cfg = table1_config(kTable1Rows[r], opts);
        RandomStream rng(opts.seed, 100 + r);
        const JobStream stream = generate_job_stream(cfg, rng);
        for (std::size_t d = 0; d < 3; ++d) {
            const auto out = run_discipline(kAll[d], stream);
            cells[3 * r + d] = Table1Cell{kTable1Rows[r], cfg.n, summarize(out, 0, opts.batches)};
        }
    });
    return cells;
}

std::vector<Table1Cell> cmd_table1(const ScaleOptions& opts, const RunContext& ctx) {
    const auto cells = run_table1(opts, ctx.threads);
    const json settings = {{"scale", opts.scale}, {"jobs", opts.jobs}, {"batches", opts.batches}};
    Manifest manifest(ctx.out_dir, "table1", opts.seed, config_hash(settings));
    auto f = open_out(manifest.file("table1.csv"));
    f << "mean_size,beta,arrival_rate,n,model,mean_sojourn,ci_lo,ci_hi,jobs,events\n";
    for (const auto& c : cells)
        f << fmt9(c.row.mean_size) << ',' << fmt9(c.row.beta) << ',' << fmt9(c.row.arrival_rate / opts.scale) << ','
          << c.n << ',' << to_string(c.summary.discipline) << ',' << fmt9(c.summary.sojourn.mean) << ','
          << fmt9(c.summary.sojourn.lo) << ',' << fmt9(c.summary.sojourn.hi) << ',' << c.summary.jobs << ','
          << c.summary.events << '\n';
    f.close();
    manifest.settings() = settings;
    manifest.write();
    return cells;
}

// ---------------------------------------------------------------------------

FiguresResult cmd_figures(const FigureOptions& opts, const RunContext& ctx) {
    const json settings = {{"scale", opts.scale.scale},
                           {"jobs", opts.scale.jobs},
                           {"pool_size", opts.pool_size},
                           {"sojourn_samples", opts.sojourn_samples},
                           {"eps", opts.eps}};
    Manifest manifest(ctx.out_dir, "figures", opts.scale.seed, config_hash(settings));
    manifest.settings() = settings;
    FiguresResult result;

    struct Panel {
        const char* tag;
        Table1Row row;
    };
    const Panel panels[] = {{"fig3_left", kTable1Rows[0]}, {"fig3_right", kTable1Rows[1]}};
    for (std::size_t i = 0; i < std::size(panels); ++i) {
        const auto& panel = panels[i];
        const SimConfig cfg = table1_config(panel.row, opts.scale);
        RandomStream rng(opts.scale.seed, 10 * (i + 1));
        const JobStream stream = generate_job_stream(cfg, rng);
        const Discipline ds[] = {Discipline::SyncB, Discipline::SplitMerge};
        const auto outs = run_all(stream, ds, ctx.threads);
        const auto syncb = outs[0].sojourn_times();
        const auto split = outs[1].sojourn_times();

        const auto params = make_limit_params(cfg.job_size, cfg.service, cfg.lambda);
        std::size_t k = 0;
        const auto pool = converged_pool(params, opts.pool_size, std::nullopt, opts.eps, opts.scale.seed + i, ctx.threads, k);
        RandomStream srng(opts.scale.seed + i, kSojournStream);
        const auto limit = sample_sojourn_limit(params, pool, opts.sojourn_samples, srng, PopDynOptions{ctx.threads});

        std::vector<double> both(syncb);
        both.insert(both.end(), split.begin(), split.end());
        const auto grid = ccdf_grid(both);
        const std::string dir = panel.tag;
        for (const auto& [name, data] : {std::pair{"ccdf_syncb.csv", &syncb}, std::pair{"ccdf_splitmerge.csv", &split},
                                         std::pair{"ccdf_limit.csv", &limit}}) {
            const auto path = manifest.file(dir + "/" + name);
            write_ccdf_csv(path, empirical_ccdf(*data, grid));
            result.files.push_back(path);
        }
        manifest.settings()[dir] = {{"n", cfg.n},
                                    {"lambda", cfg.lambda},
                                    {"mean_size", panel.row.mean_size},
                                    {"beta", panel.row.beta},
                                    {"generations", k},
                                    {"margin", stability_margin(params).margin}};
    }

    const auto law = MixedPoissonPareto{3.0, 2.0 / 3.0};
    result.boundary_lambda = boundary_lambda(law, UniformService{0.0, 1.0});
    SimConfig cfg = table1_config(kTable1Rows[0], opts.scale);
    cfg.lambda = result.boundary_lambda;
    RandomStream rng(opts.scale.seed, 30);
    const JobStream stream = generate_job_stream(cfg, rng);
    const Discipline ds[] = {Discipline::SyncB, Discipline::SplitMerge};
    const auto outs = run_all(stream, ds, ctx.threads);
    for (const auto& [name, out] : {std::pair{"running_mean_boundary.csv", &outs[0]},
                                    std::pair{"running_mean_boundary_splitmerge.csv", &outs[1]}}) {
        const auto path = manifest.file(std::string("fig4/") + name);
        write_running_mean_csv(path, running_mean(out->sojourn_times()));
        result.files.push_back(path);
    }
    manifest.settings()["fig4"] = {{"n", cfg.n}, {"boundary_lambda", result.boundary_lambda}};
    manifest.write();
    return result;
}

// ---------------------------------------------------------------------------

json cmd_limit(const ExperimentConfig& config, const RunContext& ctx) {
    const auto params = limit_params(config);
    const auto stab = stability_margin(params);
    std::size_t k = 0;
    const auto pool = converged_pool(params, config.limit.pool_size, config.limit.generations, config.limit.eps,
                                     config.sim.seed, ctx.threads, k);
    RandomStream srng(config.sim.seed, kSojournStream);
    const auto sojourn = sample_sojourn_limit(params, pool, config.limit.sojourn_samples, srng, PopDynOptions{ctx.threads});

    Manifest manifest(ctx.out_dir, "limit", config.sim.seed, config_hash(config.source));
    write_values_csv(manifest.file("pool.csv"), pool.values);
    write_ccdf_csv(manifest.file("ccdf_w.csv"), empirical_ccdf(pool.values, ccdf_grid(pool.values)));
    write_ccdf_csv(manifest.file("ccdf_limit.csv"), empirical_ccdf(sojourn, ccdf_grid(sojourn)));
    const json report = {{"lambda", params.lambda},
                         {"lambda_star", params.lambda_star},
                         {"mean_size", params.mean_size},
                         {"margin", stab.margin},
                         {"beta_star", stab.beta_star},
                         {"generations", k},
                         {"pool_size", pool.values.size()},
                         {"mean_w", pool.mean()},
                         {"mean_sojourn", mean(sojourn)},
                         {"sojourn_samples", sojourn.size()}};
    write_json(manifest.file("limit.json"), report);
    manifest.settings() = {{"pool_size", config.limit.pool_size}, {"generations", k}, {"eps", config.limit.eps}};
    manifest.write();
    return report;
}

json cmd_asymptotics(const ExperimentConfig& config, const RunContext& ctx) {
    const auto params = limit_params(config);
    const auto stab = stability_margin(params);
    const auto theta = solve_theta(params);
    std::size_t k = 0;
    const auto pool = converged_pool(params, config.limit.pool_size, config.limit.generations, config.limit.eps,
                                     config.sim.seed, ctx.threads, k);
    RandomStream hrng(config.sim.seed, kHStream);
    HOptions hopts;
    hopts.conditioned = config.asymptotics.conditioned;
    hopts.threads = ctx.threads;
    const auto h = estimate_H(params, theta, pool, config.asymptotics.h_samples, hrng, hopts);

    Manifest manifest(ctx.out_dir, "asymptotics", config.sim.seed, config_hash(config.source));
    const double top = *std::max_element(pool.values.begin(), pool.values.end());
    std::vector<double> grid(200);
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = top * static_cast<double>(i) / (grid.size() - 1);
    {
        auto f = open_out(manifest.file("tail.csv"));
        f << "x,ccdf,cl_tail\n";
        for (const auto& p : empirical_ccdf(pool.values, grid))
            f << fmt9(p.x) << ',' << fmt9(p.ccdf) << ',' << fmt9(cl_tail(h.h, theta.theta, p.x)) << '\n';
    }
    const json report = {{"lambda_star", params.lambda_star},
                         {"margin", stab.margin},
                         {"beta_star", stab.beta_star},
                         {"stable", stab.stable},
                         {"theta", theta.theta},
                         {"derivative", theta.derivative_value},
                         {"valid", theta.valid},
                         {"moment_warning", theta.moment_warning},
                         {"H", h.h},
                         {"ci", {h.ci.first, h.ci.second}},
                         {"samples", h.samples_used},
                         {"conditioned", hopts.conditioned},
                         {"pool_size", pool.values.size()},
                         {"generations", k}};
    write_json(manifest.file("asymptotics.json"), report);
    manifest.settings() = {{"pool_size", config.limit.pool_size}, {"generations", k}, {"h_samples", h.samples_used}};
    manifest.write();
    return report;
}

json cmd_boundary(const ExperimentConfig& config, const RunContext& ctx) {
    const auto& marginal = config.sim.service.marginal;
    const double lc = boundary_lambda(config.sim.job_size, marginal);
    const auto stab = stability_margin(make_limit_params(config.sim.job_size, config.sim.service, lc));
    const json report = {{"lambda_crit", lc},
                         {"arrival_rate_crit", lc * config.sim.n},
                         {"margin", stab.margin},
                         {"beta_star", stab.beta_star}};
    Manifest manifest(ctx.out_dir, "boundary", config.sim.seed, config_hash(config.source));
    write_json(manifest.file("boundary.json"), report);
    manifest.settings() = report;
    manifest.write();
    return report;
}

}  // namespace syncq
