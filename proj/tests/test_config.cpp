#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <variant>

#include <gtest/gtest.h>

#include "json.hpp"
#include "syncq/config.hpp"
#include "syncq/errors.hpp"
#include "syncq/experiments.hpp"
#include "syncq/io.hpp"

using namespace syncq;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = SYNCQ_CONFIG_DIR;

fs::path scratch(const std::string& name) {
    const auto info = ::testing::UnitTest::GetInstance()->current_test_info();
    const fs::path dir = fs::temp_directory_path() / "syncq_tests" / (std::string(info->name()) + "_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

json base() {
    return json::parse(R"({
        "n": 10, "lambda": 0.05,
        "job_size": {"kind": "mixed_poisson_pareto", "alpha": 3, "beta": 0.6666666666666666},
        "service": {"kind": "uniform", "a": 0, "b": 1},
        "horizon_jobs": 2000
    })");
}

std::string error_of(const json& j) {
    try {
        parse_experiment_config(j);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Config, Defaults) {
    const auto c = parse_experiment_config(base());
    EXPECT_EQ(c.sim.n, 10);
    EXPECT_DOUBLE_EQ(c.sim.lambda, 0.05);
    ASSERT_TRUE(std::holds_alternative<MinWithCap>(c.sim.truncation));
    EXPECT_EQ(std::get<MinWithCap>(c.sim.truncation).m, 10);
    EXPECT_EQ(c.discipline, DisciplineSelector::AllCrn);
    EXPECT_EQ(c.batches, 30u);
    EXPECT_EQ(c.sim.seed, 1u);
    EXPECT_EQ(c.sim.warmup_jobs, 0u);
    EXPECT_EQ(c.limit.pool_size, 100000u);
    EXPECT_FALSE(c.limit.generations.has_value());
    EXPECT_FALSE(c.asymptotics.conditioned);
}

TEST(Config, ArrivalRateIsTotal) {
    auto j = base();
    j.erase("lambda");
    j["arrival_rate"] = 2.0;
    EXPECT_DOUBLE_EQ(parse_experiment_config(j).sim.lambda, 0.2);
    j["lambda"] = 0.2;
    EXPECT_NE(error_of(j).find("exactly one"), std::string::npos);
}

TEST(Config, FieldLevelErrors) {
    auto j = base();
    j["job_size"]["alpha"] = 1.0;
    EXPECT_NE(error_of(j).find("alpha"), std::string::npos);

    j = base();
    j["job_size"].erase("beta");
    EXPECT_NE(error_of(j).find("job_size.beta: missing"), std::string::npos);

    j = base();
    j["service"]["kind"] = "weibull";
    EXPECT_NE(error_of(j).find("service.kind"), std::string::npos);

    j = base();
    j["n"] = -3;
    EXPECT_NE(error_of(j).find("n"), std::string::npos);

    j = base();
    j["discipline"] = "fifo";
    EXPECT_NE(error_of(j).find("discipline"), std::string::npos);

    j = base();
    j["truncation"] = {{"kind", "min_cap"}};
    EXPECT_NE(error_of(j).find("truncation.m: missing"), std::string::npos);

    j = base();
    j["limit"] = {{"eps", 2.0}};
    EXPECT_NE(error_of(j).find("limit.eps"), std::string::npos);

    j = base();
    j["lambda"] = "fast";
    EXPECT_NE(error_of(j).find("lambda: expected a number"), std::string::npos);
}

TEST(Config, MalformedFile) {
    const auto dir = scratch("bad");
    std::ofstream(dir / "bad.json") << "{\"n\": 10,";
    try {
        load_experiment_config(dir / "bad.json");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("JSON parse error"), std::string::npos);
    }
    EXPECT_THROW(load_experiment_config(dir / "missing.json"), ConfigError);
}

TEST(Config, ShippedConfigsParse) {
    for (const auto& entry : fs::directory_iterator(kConfigs)) {
        SCOPED_TRACE(entry.path().string());
        EXPECT_NO_THROW(load_experiment_config(entry.path()));
    }
}

TEST(Config, HashIsStableAndSensitive) {
    const auto h = config_hash(base());
    EXPECT_EQ(h.size(), 16u);
    EXPECT_EQ(h, config_hash(json::parse(base().dump())));
    auto j = base();
    j["lambda"] = 0.051;
    EXPECT_NE(h, config_hash(j));
}

TEST(Config, LimitParamsUseUntruncatedLaw) {
    const auto p = limit_params(parse_experiment_config(base()));
    EXPECT_DOUBLE_EQ(p.mean_size, 2.0);
    EXPECT_DOUBLE_EQ(p.lambda_star, 0.1);
}

TEST(Simulate, SingleJobHasNoWait) {
    auto j = base();
    j["horizon_jobs"] = 1;
    const auto dir = scratch("out");
    const auto s = cmd_simulate(parse_experiment_config(j), true, RunContext{dir, 1});
    ASSERT_EQ(s.size(), 3u);
    for (const auto& d : s) {
        EXPECT_EQ(d.mean_waiting, 0.0);
        EXPECT_EQ(d.jobs, 1u);
        EXPECT_TRUE(std::isnan(d.sojourn.lo));
    }
    const auto summary = json::parse(slurp(dir / "summary_syncb.json"));
    EXPECT_TRUE(summary["ci_lo"].is_null());
    EXPECT_TRUE(fs::exists(dir / "comparison.csv"));
}

TEST(Simulate, JobsCsvMatchesSummary) {
    auto j = base();
    j["discipline"] = "syncb";
    const auto dir = scratch("out");
    const auto s = cmd_simulate(parse_experiment_config(j), false, RunContext{dir, 1});
    ASSERT_EQ(s.size(), 1u);
    EXPECT_FALSE(fs::exists(dir / "comparison.csv"));
    std::ifstream f(dir / "jobs_syncb.csv");
    std::string line;
    std::getline(f, line);
    EXPECT_EQ(line, "job_id,arrival,start,departure,waiting,sojourn");
    // Batch means drop the 2000 % 30 trailing jobs.
    const std::size_t used = 2000 / 30 * 30;
    double sum = 0.0;
    std::size_t rows = 0;
    while (std::getline(f, line)) {
        std::stringstream ss(line);
        std::string cell;
        for (int c = 0; c < 6; ++c) std::getline(ss, cell, ',');
        if (rows++ < used) sum += std::stod(cell);
    }
    EXPECT_EQ(rows, 2000u);
    EXPECT_NEAR(sum / used, s[0].sojourn.mean, 1e-6);
}

TEST(Simulate, ManifestRecordsRun) {
    const auto dir = scratch("out");
    const auto c = parse_experiment_config(base());
    cmd_simulate(c, true, RunContext{dir, 1});
    const auto m = json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(m["command"], "simulate");
    EXPECT_EQ(m["seed"], 1);
    EXPECT_EQ(m["config_hash"], config_hash(base()));
    EXPECT_EQ(m["version"], SYNCQ_VERSION);
    for (const auto& f : m["files"]) EXPECT_TRUE(fs::exists(dir / f.get<std::string>())) << f;
    EXPECT_EQ(m["files"].size(), 7u);
    EXPECT_EQ(m["settings"]["batches"], 30);
}

TEST(Determinism, SimulateOutputIndependentOfThreads) {
    const auto c = parse_experiment_config(base());
    const auto a = scratch("a"), b = scratch("b");
    cmd_simulate(c, true, RunContext{a, 1});
    cmd_simulate(c, true, RunContext{b, 3});
    for (const char* f : {"jobs_syncb.csv", "jobs_splitmerge.csv", "jobs_mgn.csv", "comparison.csv", "manifest.json"})
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Determinism, Table1IndependentOfThreads) {
    ScaleOptions opts;
    opts.scale = 50;
    opts.jobs = 3000;
    const auto a = scratch("a"), b = scratch("b");
    cmd_table1(opts, RunContext{a, 1});
    cmd_table1(opts, RunContext{b, 3});
    const auto text = slurp(a / "table1.csv");
    EXPECT_EQ(text, slurp(b / "table1.csv"));
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 10);
}

TEST(Determinism, LimitPoolIndependentOfThreads) {
    auto j = base();
    j["limit"] = {{"pool_size", 20000}, {"generations", 12}, {"sojourn_samples", 20000}};
    const auto c = parse_experiment_config(j);
    const auto a = scratch("a"), b = scratch("b");
    const auto ra = cmd_limit(c, RunContext{a, 1});
    cmd_limit(c, RunContext{b, 3});
    for (const char* f : {"pool.csv", "ccdf_w.csv", "ccdf_limit.csv", "limit.json"})
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    EXPECT_EQ(ra["generations"], 12);
    EXPECT_EQ(read_values_csv(a / "pool.csv").size(), 20000u);
}

TEST(Limit, UnstableConfigIsNumericError) {
    auto j = base();
    j["lambda"] = 0.25;
    EXPECT_THROW(cmd_limit(parse_experiment_config(j), RunContext{scratch("out"), 1}), NumericError);
}

TEST(Asymptotics, ReportAndTail) {
    auto j = base();
    j["limit"] = {{"pool_size", 20000}};
    j["asymptotics"] = {{"h_samples", 20000}, {"conditioned", true}};
    const auto dir = scratch("out");
    const auto r = cmd_asymptotics(parse_experiment_config(j), RunContext{dir, 1});
    EXPECT_TRUE(r["stable"].get<bool>());
    EXPECT_TRUE(r["valid"].get<bool>());
    EXPECT_GT(r["H"].get<double>(), 0.0);
    EXPECT_LT(r["H"].get<double>(), 1.0);
    std::ifstream f(dir / "tail.csv");
    std::string line;
    std::getline(f, line);
    EXPECT_EQ(line, "x,ccdf,cl_tail");
    int rows = 0;
    while (std::getline(f, line)) ++rows;
    EXPECT_EQ(rows, 200);
}

TEST(Boundary, Report) {
    const auto r = cmd_boundary(parse_experiment_config(base()), RunContext{scratch("out"), 1});
    EXPECT_NEAR(r["lambda_crit"].get<double>(), 0.2094, 1e-3);
    EXPECT_NEAR(r["arrival_rate_crit"].get<double>(), 10 * r["lambda_crit"].get<double>(), 1e-12);
    EXPECT_NEAR(r["margin"].get<double>(), 1.0, 1e-4);
}

TEST(Figures, SmokeRun) {
    FigureOptions opts;
    opts.scale.scale = 50;
    opts.scale.jobs = 100;
    opts.pool_size = 2000;
    opts.sojourn_samples = 2000;
    opts.eps = 1e-2;
    const auto dir = scratch("out");
    const auto r = cmd_figures(opts, RunContext{dir, 1});
    EXPECT_EQ(r.files.size(), 8u);
    for (const auto& p : r.files) {
        ASSERT_TRUE(fs::exists(p)) << p;
        if (p.filename().string().rfind("ccdf", 0) != 0) continue;
        std::ifstream f(p);
        std::string line;
        std::getline(f, line);
        ASSERT_EQ(line, "x,ccdf");
        double prev = 1.0;
        while (std::getline(f, line)) {
            const double v = std::stod(line.substr(line.find(',') + 1));
            ASSERT_LE(v, prev) << p;
            prev = v;
        }
    }
    const auto m = json::parse(slurp(dir / "manifest.json"));
    EXPECT_TRUE(m["settings"]["fig3_left"].contains("generations"));
    EXPECT_NEAR(m["settings"]["fig4"]["boundary_lambda"].get<double>(), 0.2094, 1e-3);
}
