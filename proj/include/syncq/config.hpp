#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "syncq/dists.hpp"
#include "syncq/engine.hpp"
#include "syncq/limit.hpp"

namespace syncq {

enum class DisciplineSelector { SyncB, SplitMerge, MGn, AllCrn };

struct LimitSettings {
    std::size_t pool_size = 100'000;
    std::optional<std::size_t> generations;  ///< default: recommended_generations(margin, eps)
    double eps = 1e-4;
    std::size_t sojourn_samples = 1'000'000;
};

struct AsymptoticsSettings {
    std::size_t h_samples = 1'000'000;
    bool conditioned = false;
};

struct ExperimentConfig {
    SimConfig sim;
    DisciplineSelector discipline = DisciplineSelector::AllCrn;
    std::size_t batches = 30;
    LimitSettings limit;
    AsymptoticsSettings asymptotics;
    nlohmann::json source;  ///< the parsed document, for hashing into manifests
};

JobSizeDistribution parse_job_size(const nlohmann::json& j);
TruncationMode parse_truncation(const nlohmann::json& j);
ServiceMarginal parse_service(const nlohmann::json& j);

/// Parses and validates a config document. Missing "truncation" defaults to
/// min_cap at n. Errors are ConfigError with the offending field in the message.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
/// Reads a JSON document; a syntax error becomes ConfigError with the parser diagnostic.
nlohmann::json load_config_json(const std::filesystem::path& path);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Limit-law parameters of a config: the untruncated job-size law, the
/// service model and the per-server intensity.
LimitParams limit_params(const ExperimentConfig& config);

std::string config_hash(const nlohmann::json& j);

}  // namespace syncq
