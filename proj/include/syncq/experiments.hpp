#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "json.hpp"

#include "syncq/config.hpp"
#include "syncq/engine.hpp"
#include "syncq/stats.hpp"

namespace syncq {

// Stream ids; every purpose draws from its own stream of the run seed.
inline constexpr std::uint64_t kSimulationStream = 1;
inline constexpr std::uint64_t kPoolStream = 2;
inline constexpr std::uint64_t kSojournStream = 3;
inline constexpr std::uint64_t kHStream = 4;

struct RunContext {
    std::filesystem::path out_dir = "out";
    unsigned threads = 1;
};

struct DisciplineSummary {
    Discipline discipline = Discipline::SyncB;
    MeanCI sojourn;
    double mean_waiting = 0.0;
    std::size_t jobs = 0;
    std::uint64_t events = 0;
};

DisciplineSummary summarize(const SimOutput& out, std::size_t warmup, std::size_t batches);

/// Runs the configured discipline(s). With `crn` (or discipline "all-crn") all
/// three run on one shared stream and comparison.csv is written.
std::vector<DisciplineSummary> cmd_simulate(const ExperimentConfig& config, bool crn, const RunContext& ctx);

// ---------------------------------------------------------------------------

/// One row of the sojourn-time table: E[N], the Pareto scale giving it, and
/// the total arrival rate at n = 1000.
struct Table1Row {
    double mean_size;
    double beta;
    double arrival_rate;
};
inline constexpr Table1Row kTable1Rows[] = {{2.0, 2.0 / 3.0, 100.0}, {10.0, 6.0, 6.5}, {100.0, 66.0, 0.06}};

struct ScaleOptions {
    double scale = 10.0;  ///< divides n = 1000 and the total arrival rate
    std::size_t jobs = 30'000;
    std::uint64_t seed = 1;
    std::size_t batches = 30;
};

/// The simulation config of one table row at the given scale (alpha = 3,
/// U(0,1) services, sizes capped at n).
SimConfig table1_config(const Table1Row& row, const ScaleOptions& opts);

struct Table1Cell {
    Table1Row row;
    int n = 0;
    DisciplineSummary summary;
};

/// Three rows times three disciplines; each row shares one job stream.
std::vector<Table1Cell> run_table1(const ScaleOptions& opts, unsigned threads = 1);
std::vector<Table1Cell> cmd_table1(const ScaleOptions& opts, const RunContext& ctx);

// ---------------------------------------------------------------------------

struct FigureOptions {
    ScaleOptions scale;
    std::size_t pool_size = 100'000;
    std::size_t sojourn_samples = 1'000'000;
    double eps = 1e-4;
};

struct FiguresResult {
    double boundary_lambda = 0.0;
    std::vector<std::filesystem::path> files;
};

/// Tail data for both job-size laws of the tail figure (E[N] = 2 at total rate
/// 100 and E[N] = 10 at 6.5) and running means at the stability boundary.
FiguresResult cmd_figures(const FigureOptions& opts, const RunContext& ctx);

// ---------------------------------------------------------------------------

/// Population pool, CCDFs of W and T, and a JSON summary.
nlohmann::json cmd_limit(const ExperimentConfig& config, const RunContext& ctx);

/// Stability report, theta, H with CI, and cl_tail against the pool's CCDF.
nlohmann::json cmd_asymptotics(const ExperimentConfig& config, const RunContext& ctx);

/// Critical per-server intensity for the config's job-size and service laws.
nlohmann::json cmd_boundary(const ExperimentConfig& config, const RunContext& ctx);

}  // namespace syncq
