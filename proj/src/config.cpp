#include "syncq/config.hpp"

#include <cstdio>
#include <fstream>

#include "syncq/errors.hpp"

namespace syncq {

using nlohmann::json;

namespace {

const json& require(const json& j, const std::string& key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError(where + key + ": missing");
    return j.at(key);
}

double number(const json& j, const std::string& key, const std::string& where) {
    const auto& v = require(j, key, where);
    if (!v.is_number()) throw ConfigError(where + key + ": expected a number");
    return v.get<double>();
}

template <typename Int>
Int integer(const json& v, const std::string& field) {
    if (!v.is_number_integer() || (std::is_unsigned_v<Int> && v.get<long long>() < 0))
        throw ConfigError(field + ": expected a nonnegative integer");
    return v.get<Int>();
}

std::string kind_of(const json& j, const std::string& where) {
    const auto& v = require(j, "kind", where);
    if (!v.is_string()) throw ConfigError(where + "kind: expected a string");
    return v.get<std::string>();
}

}  // namespace

JobSizeDistribution parse_job_size(const json& j) {
    const std::string where = "job_size.";
    const auto kind = kind_of(j, where);
    JobSizeDistribution d;
    if (kind == "deterministic") {
        d = DeterministicSize{integer<int>(require(j, "k", where), where + "k")};
    } else if (kind == "mixed_poisson_pareto") {
        d = MixedPoissonPareto{number(j, "alpha", where), number(j, "beta", where)};
    } else if (kind == "empirical") {
        const auto& pmf = require(j, "pmf", where);
        if (!pmf.is_array()) throw ConfigError(where + "pmf: expected an array of [k, p] pairs");
        EmpiricalSize e;
        for (const auto& kp : pmf) {
            if (!kp.is_array() || kp.size() != 2 || !kp[1].is_number())
                throw ConfigError(where + "pmf: expected [k, p] pairs");
            e.pmf.emplace_back(integer<int>(kp[0], where + "pmf.k"), kp[1].get<double>());
        }
        d = std::move(e);
    } else {
        throw ConfigError(where + "kind: unknown job size law '" + kind + "'");
    }
    validate(d);
    return d;
}

TruncationMode parse_truncation(const json& j) {
    const std::string where = "truncation.";
    const auto kind = kind_of(j, where);
    TruncationMode t;
    if (kind == "none")
        t = NoTruncation{};
    else if (kind == "min_cap")
        t = MinWithCap{integer<int>(require(j, "m", where), where + "m")};
    else if (kind == "conditional_cap")
        t = ConditionalOnCap{integer<int>(require(j, "m", where), where + "m")};
    else
        throw ConfigError(where + "kind: unknown truncation '" + kind + "'");
    validate(t);
    return t;
}

ServiceMarginal parse_service(const json& j) {
    const std::string where = "service.";
    const auto kind = kind_of(j, where);
    ServiceMarginal b;
    if (kind == "uniform")
        b = UniformService{j.value("a", 0.0), j.value("b", 1.0)};
    else if (kind == "exponential")
        b = ExponentialService{number(j, "rate", where)};
    else if (kind == "deterministic")
        b = DeterministicService{number(j, "c", where)};
    else
        throw ConfigError(where + "kind: unknown service law '" + kind + "'");
    validate(b);
    return b;
}

ExperimentConfig parse_experiment_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    ExperimentConfig c;
    c.source = j;
    auto& sim = c.sim;
    sim.n = integer<int>(require(j, "n", ""), "n");
    if (j.contains("lambda") == j.contains("arrival_rate"))
        throw ConfigError("lambda: give exactly one of 'lambda' (per server) or 'arrival_rate' (total)");
    sim.lambda = j.contains("lambda") ? number(j, "lambda", "") : number(j, "arrival_rate", "") / sim.n;
    sim.horizon_jobs = integer<std::size_t>(require(j, "horizon_jobs", ""), "horizon_jobs");
    if (j.contains("warmup_jobs")) sim.warmup_jobs = integer<std::size_t>(j["warmup_jobs"], "warmup_jobs");
    if (j.contains("seed")) sim.seed = integer<std::uint64_t>(j["seed"], "seed");
    sim.job_size = parse_job_size(require(j, "job_size", ""));
    sim.truncation = j.contains("truncation") ? parse_truncation(j["truncation"]) : TruncationMode{MinWithCap{sim.n}};
    sim.service.marginal = parse_service(require(j, "service", ""));

    if (j.contains("discipline")) {
        const auto& v = j["discipline"];
        const std::string d = v.is_string() ? v.get<std::string>() : "";
        if (d == "syncb")
            c.discipline = DisciplineSelector::SyncB;
        else if (d == "splitmerge")
            c.discipline = DisciplineSelector::SplitMerge;
        else if (d == "mgn")
            c.discipline = DisciplineSelector::MGn;
        else if (d == "all-crn")
            c.discipline = DisciplineSelector::AllCrn;
        else
            throw ConfigError("discipline: expected one of syncb, splitmerge, mgn, all-crn");
    }
    if (j.contains("batches")) c.batches = integer<std::size_t>(j["batches"], "batches");
    if (c.batches < 2) throw ConfigError("batches: must be >= 2");

    if (j.contains("limit")) {
        const auto& l = j["limit"];
        if (l.contains("pool_size")) c.limit.pool_size = integer<std::size_t>(l["pool_size"], "limit.pool_size");
        if (l.contains("generations")) c.limit.generations = integer<std::size_t>(l["generations"], "limit.generations");
        if (l.contains("eps")) c.limit.eps = number(l, "eps", "limit.");
        if (l.contains("sojourn_samples"))
            c.limit.sojourn_samples = integer<std::size_t>(l["sojourn_samples"], "limit.sojourn_samples");
        if (c.limit.pool_size == 0) throw ConfigError("limit.pool_size: must be >= 1");
        if (!(c.limit.eps > 0.0 && c.limit.eps < 1.0)) throw ConfigError("limit.eps: must be in (0, 1)");
    }
    if (j.contains("asymptotics")) {
        const auto& a = j["asymptotics"];
        if (a.contains("h_samples")) c.asymptotics.h_samples = integer<std::size_t>(a["h_samples"], "asymptotics.h_samples");
        if (a.contains("conditioned")) {
            if (!a["conditioned"].is_boolean()) throw ConfigError("asymptotics.conditioned: expected a boolean");
            c.asymptotics.conditioned = a["conditioned"].get<bool>();
        }
    }
    validate(c.sim);
    return c;
}

json load_config_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: JSON parse error in " + path.string() + ": " + e.what());
    }
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    return parse_experiment_config(load_config_json(path));
}

LimitParams limit_params(const ExperimentConfig& config) {
    return make_limit_params(config.sim.job_size, config.sim.service, config.sim.lambda);
}

std::string config_hash(const json& j) {
    // FNV-1a over the canonical (key-sorted) dump.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char ch : j.dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace syncq
