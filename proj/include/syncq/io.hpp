#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "syncq/engine.hpp"
#include "syncq/stats.hpp"

namespace syncq {

/// "%.9g"; every CSV number goes through here so outputs are byte-stable.
std::string fmt9(double x);

/// Opens a binary output file, creating parent directories.
std::ofstream open_out(const std::filesystem::path& path);

void write_jobs_csv(const std::filesystem::path& path, const SimOutput& out);
void write_ccdf_csv(const std::filesystem::path& path, std::span<const CcdfPoint> ccdf);
/// `t,running_mean` with t counted from 1.
void write_running_mean_csv(const std::filesystem::path& path, std::span<const double> running);
/// One value per line, no header.
void write_values_csv(const std::filesystem::path& path, std::span<const double> values);
std::vector<double> read_values_csv(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Collects the files a command writes and emits manifest.json next to them.
class Manifest {
public:
    Manifest(std::filesystem::path dir, std::string command, std::uint64_t seed, std::string config_hash);
    std::filesystem::path file(const std::string& name);
    nlohmann::json& settings() { return settings_; }
    void write() const;

private:
    std::filesystem::path dir_;
    std::string command_;
    std::uint64_t seed_;
    std::string config_hash_;
    std::vector<std::string> files_;
    nlohmann::json settings_ = nlohmann::json::object();
};

}  // namespace syncq
