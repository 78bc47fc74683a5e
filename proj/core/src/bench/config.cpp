#include "fpinv/bench/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fpinv::bench {

using nlohmann::json;

void ExperimentConfig::validate() const {
    require(!scenario.empty() && scenario.find(',') == std::string::npos, "scenario must be non-empty without commas");
    (void)schedule.build();
    codec.validate();
    require(codec.latent_dim == mixture.dimension(), "codec.latent_dim must match mixture dimension");
    (void)GuidanceConfig(guidance_scale);
    require(!guidance_sweep.empty(), "guidance.sweep must not be empty");
    for (double w : guidance_sweep) (void)GuidanceConfig(w);
    fixed_point.validate();
    adjust.validate(static_cast<std::size_t>(schedule.num_sampling_steps));
    require(num_trials >= 1, "num_trials must be positive");
    require(num_pairs >= 1, "num_pairs must be positive");
    require(max_sweep_iterations >= 1, "max_sweep_iterations must be positive");
    require(contraction_probes >= 2, "contraction_probes must be at least 2");
    require(contraction_threshold > 0.0, "contraction_threshold must be positive");
    require(threads >= 0, "threads must be non-negative");
}

namespace {

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    ExperimentConfig cfg;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("config: ") + e.what());
    }
    try {
        require(j.is_object(), "config must be a JSON object");
        read_opt(j, "scenario", cfg.scenario);
        if (j.contains("schedule")) {
            const auto& s = j.at("schedule");
            read_opt(s, "total_steps", cfg.schedule.total_steps);
            read_opt(s, "beta_start", cfg.schedule.beta_start);
            read_opt(s, "beta_end", cfg.schedule.beta_end);
            read_opt(s, "num_sampling_steps", cfg.schedule.num_sampling_steps);
        }
        if (j.contains("mixture")) cfg.mixture = GaussianMixtureModel::from_json(j.at("mixture").dump());
        cfg.codec.latent_dim = cfg.mixture.dimension();
        if (j.contains("codec")) {
            const auto& c = j.at("codec");
            read_opt(c, "latent_dim", cfg.codec.latent_dim);
            read_opt(c, "pixel_dim", cfg.codec.pixel_dim);
            read_opt(c, "rng_seed", cfg.codec.rng_seed);
            if (c.contains("quant_step")) {
                cfg.codec.quant_step = c.at("quant_step").get<double>();
                require(cfg.codec.quant_step >= 0.0, "codec.quant_step must be non-negative");
            }
            read_opt(c, "target_error_fraction", cfg.codec.target_error_fraction);
        }
        if (j.contains("guidance")) {
            const auto& g = j.at("guidance");
            read_opt(g, "scale", cfg.guidance_scale);
            read_opt(g, "sweep", cfg.guidance_sweep);
        }
        read_opt(j, "max_iterations", cfg.fixed_point.max_iterations);
        read_opt(j, "residual_tolerance", cfg.fixed_point.residual_tolerance);
        if (j.contains("adjust")) {
            const auto& a = j.at("adjust");
            read_opt(a, "num_cycles", cfg.adjust.num_cycles);
            read_opt(a, "steps_per_cycle", cfg.adjust.steps_per_cycle);
            read_opt(a, "guided", cfg.adjust.guided);
            if (a.contains("latent_drift_cap") && !a.at("latent_drift_cap").is_null())
                cfg.adjust.latent_drift_cap = a.at("latent_drift_cap").get<double>();
        }
        read_opt(j, "rng_seed", cfg.rng_seed);
        read_opt(j, "num_trials", cfg.num_trials);
        read_opt(j, "num_pairs", cfg.num_pairs);
        read_opt(j, "max_sweep_iterations", cfg.max_sweep_iterations);
        read_opt(j, "contraction_probes", cfg.contraction_probes);
        read_opt(j, "contraction_threshold", cfg.contraction_threshold);
        read_opt(j, "threads", cfg.threads);
        read_opt(j, "output_dir", cfg.output_dir);
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

namespace {

json semantic_json(const ExperimentConfig& c) {
    json j;
    j["scenario"] = c.scenario;
    j["schedule"] = {{"total_steps", c.schedule.total_steps},
                     {"beta_start", c.schedule.beta_start},
                     {"beta_end", c.schedule.beta_end},
                     {"num_sampling_steps", c.schedule.num_sampling_steps}};
    j["mixture"] = json::parse(c.mixture.to_json());
    json codec = {{"latent_dim", c.codec.latent_dim},
                  {"pixel_dim", c.codec.pixel_dim},
                  {"rng_seed", c.codec.rng_seed}};
    if (c.codec.has_fixed_step())
        codec["quant_step"] = c.codec.quant_step;
    else
        codec["target_error_fraction"] = c.codec.target_error_fraction;
    j["codec"] = codec;
    j["guidance"] = {{"scale", c.guidance_scale}, {"sweep", c.guidance_sweep}};
    j["max_iterations"] = c.fixed_point.max_iterations;
    j["residual_tolerance"] = c.fixed_point.residual_tolerance;
    j["adjust"] = {{"num_cycles", c.adjust.num_cycles},
                   {"steps_per_cycle", c.adjust.steps_per_cycle},
                   {"guided", c.adjust.guided},
                   {"latent_drift_cap", c.adjust.latent_drift_cap ? json(*c.adjust.latent_drift_cap) : json(nullptr)}};
    j["rng_seed"] = c.rng_seed;
    j["num_trials"] = c.num_trials;
    j["num_pairs"] = c.num_pairs;
    j["max_sweep_iterations"] = c.max_sweep_iterations;
    j["contraction_probes"] = c.contraction_probes;
    j["contraction_threshold"] = c.contraction_threshold;
    return j;
}

}  // namespace

std::string ExperimentConfig::to_json() const {
    json j = semantic_json(*this);
    j["threads"] = threads;
    j["output_dir"] = output_dir;
    return j.dump(2);
}

std::string ExperimentConfig::canonical_json() const { return semantic_json(*this).dump(); }

std::string ExperimentConfig::hash() const {
    const std::string text = canonical_json();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace fpinv::bench
