#include "syncq/io.hpp"

#include <cstdio>
#include <fstream>

#include "syncq/errors.hpp"

#ifndef SYNCQ_VERSION
#define SYNCQ_VERSION "unknown"
#endif

namespace syncq {

namespace fs = std::filesystem;

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    return out;
}

std::string fmt9(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

void write_jobs_csv(const fs::path& path, const SimOutput& out) {
    auto f = open_out(path);
    f << "job_id,arrival,start,departure,waiting,sojourn\n";
    for (std::size_t j = 0; j < out.jobs.size(); ++j) {
        const auto& r = out.jobs[j];
        f << j << ',' << fmt9(r.arrival) << ',' << fmt9(r.start) << ',' << fmt9(r.departure) << ','
          << fmt9(r.waiting()) << ',' << fmt9(r.sojourn()) << '\n';
    }
}

void write_ccdf_csv(const fs::path& path, std::span<const CcdfPoint> ccdf) {
    auto f = open_out(path);
    f << "x,ccdf\n";
    for (const auto& p : ccdf) f << fmt9(p.x) << ',' << fmt9(p.ccdf) << '\n';
}

void write_running_mean_csv(const fs::path& path, std::span<const double> running) {
    auto f = open_out(path);
    f << "t,running_mean\n";
    for (std::size_t t = 0; t < running.size(); ++t) f << t + 1 << ',' << fmt9(running[t]) << '\n';
}

void write_values_csv(const fs::path& path, std::span<const double> values) {
    auto f = open_out(path);
    for (const double v : values) f << fmt9(v) << '\n';
}

std::vector<double> read_values_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::vector<double> values;
    double v;
    while (in >> v) values.push_back(v);
    if (!in.eof()) throw ConfigError(path.string() + ": expected one number per line");
    return values;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    auto f = open_out(path);
    f << j.dump(2) << '\n';
}

Manifest::Manifest(fs::path dir, std::string command, std::uint64_t seed, std::string config_hash)
    : dir_(std::move(dir)), command_(std::move(command)), seed_(seed), config_hash_(std::move(config_hash)) {}

fs::path Manifest::file(const std::string& name) {
    files_.push_back(name);
    return dir_ / name;
}

void Manifest::write() const {
    nlohmann::json j;
    j["command"] = command_;
    j["version"] = SYNCQ_VERSION;
    j["seed"] = seed_;
    j["config_hash"] = config_hash_;
    j["files"] = files_;
    j["settings"] = settings_;
    write_json(dir_ / "manifest.json", j);
}

}  // namespace syncq
