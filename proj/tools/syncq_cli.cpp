// syncq: command-line front end for the queue simulator, the limit sampler and
// the tail asymptotics.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "syncq/config.hpp"
#include "syncq/errors.hpp"
#include "syncq/experiments.hpp"
#include "syncq/io.hpp"
#include "syncq/parallel.hpp"

using namespace syncq;

namespace {

struct Common {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
    std::string out = "out";
    unsigned threads = default_threads();
};

ExperimentConfig load(const std::string& path, const Common& common) {
    auto j = load_config_json(path);
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    if (common.seed) j["seed"] = *common.seed;
    if (common.jobs) j["horizon_jobs"] = *common.jobs;
    return parse_experiment_config(j);
}

void print_summaries(const std::vector<DisciplineSummary>& rows) {
    std::printf("%-11s %12s %12s %12s %12s %9s\n", "discipline", "mean_sojourn", "ci_lo", "ci_hi", "mean_wait", "jobs");
    for (const auto& s : rows)
        std::printf("%-11s %12.6g %12.6g %12.6g %12.6g %9zu\n", std::string(to_string(s.discipline)).c_str(),
                    s.sojourn.mean, s.sojourn.lo, s.sojourn.hi, s.mean_waiting, s.jobs);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synchronized-start parallel-server queues: simulation, limits and tail asymptotics"};
    app.set_version_flag("--version", SYNCQ_VERSION);
    app.require_subcommand(1);

    Common common;
    app.add_option("--seed", common.seed, "Override the RNG seed");
    app.add_option("--out", common.out, "Output directory")->capture_default_str();
    app.add_option("--threads", common.threads, "Worker threads (outputs do not depend on it)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    std::string config_path;
    bool crn = false;
    auto* simulate = app.add_subcommand("simulate", "Simulate the finite-n system from a JSON config");
    simulate->add_option("config", config_path, "Config file")->required();
    simulate->add_flag("--crn", crn, "Run SyncB, Split-Merge and M/G/n on one shared job stream");
    simulate->add_option("--jobs", common.jobs, "Override horizon_jobs");

    ScaleOptions scale;
    bool full = false;
    auto* table1 = app.add_subcommand("table1", "Mean sojourn table: three job-size laws times three models");
    table1->add_option("--scale", scale.scale, "Divide n=1000 and the arrival rate by this")->capture_default_str();
    table1->add_flag("--full", full, "Full scale (same as --scale 1)");
    table1->add_option("--jobs", scale.jobs, "Jobs per run")->capture_default_str();

    FigureOptions fig;
    auto* figures = app.add_subcommand("figures", "Tail CCDF data and running means at the stability boundary");
    figures->add_option("--scale", fig.scale.scale, "Divide n=1000 and the arrival rate by this")->capture_default_str();
    figures->add_flag("--full", full, "Full scale (same as --scale 1)");
    figures->add_option("--jobs", fig.scale.jobs, "Jobs per run")->capture_default_str();
    figures->add_option("--pool-size", fig.pool_size, "Population-dynamics pool size")->capture_default_str();
    figures->add_option("--limit-samples", fig.sojourn_samples, "Draws of the limiting sojourn time")
        ->capture_default_str();

    auto* limit = app.add_subcommand("limit", "Sample the many-server limit of the waiting and sojourn times");
    limit->add_option("config", config_path, "Config file")->required();
    auto* asymptotics = app.add_subcommand("asymptotics", "Cramer-Lundberg exponent and constant for the limit");
    asymptotics->add_option("config", config_path, "Config file")->required();
    auto* boundary = app.add_subcommand("boundary", "Critical arrival intensity for a config's laws");
    boundary->add_option("config", config_path, "Config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const RunContext ctx{common.out, common.threads};
        if (*simulate) {
            print_summaries(cmd_simulate(load(config_path, common), crn, ctx));
        } else if (*table1 || *figures) {
            auto& s = *table1 ? scale : fig.scale;
            if (full) s.scale = 1.0;
            if (common.seed) s.seed = *common.seed;
            if (*table1) {
                const auto cells = cmd_table1(s, ctx);
                std::printf("%6s %6s %-11s %12s %12s %12s\n", "E[N]", "n", "model", "mean_sojourn", "ci_lo", "ci_hi");
                for (const auto& c : cells)
                    std::printf("%6g %6d %-11s %12.6g %12.6g %12.6g\n", c.row.mean_size, c.n,
                                std::string(to_string(c.summary.discipline)).c_str(), c.summary.sojourn.mean,
                                c.summary.sojourn.lo, c.summary.sojourn.hi);
            } else {
                const auto r = cmd_figures(fig, ctx);
                std::printf("boundary lambda %.9g\n", r.boundary_lambda);
                for (const auto& f : r.files) std::printf("wrote %s\n", f.string().c_str());
            }
        } else if (*limit) {
            std::cout << cmd_limit(load(config_path, common), ctx).dump(2) << '\n';
        } else if (*asymptotics) {
            std::cout << cmd_asymptotics(load(config_path, common), ctx).dump(2) << '\n';
        } else if (*boundary) {
            std::cout << cmd_boundary(load(config_path, common), ctx).dump(2) << '\n';
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
