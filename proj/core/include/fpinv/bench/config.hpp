#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fpinv/codec.hpp"
#include "fpinv/denoiser.hpp"
#include "fpinv/inversion.hpp"
#include "fpinv/schedule.hpp"

namespace fpinv::bench {

/// Everything one experiment run depends on. A run is a pure function of
/// this config (wall times aside).
struct ExperimentConfig {
    std::string scenario = "default";
    ScheduleParams schedule;
    GaussianMixtureModel mixture = GaussianMixtureModel::default_scenario();
    CodecSpec codec;
    /// Guidance used by sweep-iters, consistency and interpolate.
    double guidance_scale = 4.0;
    /// Guidance values swept by reconstruct.
    std::vector<double> guidance_sweep = {1.0, 2.0, 4.0, 7.5};
    FixedPointConfig fixed_point;
    AdjustmentConfig adjust;
    std::uint64_t rng_seed = 20240;
    int num_trials = 200;
    int num_pairs = 50;
    int max_sweep_iterations = 8;
    int contraction_probes = 12;
    double contraction_threshold = 0.9;
    /// Worker threads for independent trials; 0 picks hardware concurrency.
    int threads = 0;
    std::string output_dir = "out";

    void validate() const;

    /// Missing keys keep their defaults. Throws InvalidArgument on bad input.
    static ExperimentConfig from_json(const std::string& text);
    static ExperimentConfig load(const std::string& path);
    std::string to_json() const;
    /// Result-affecting fields only (no output_dir, no threads); embedded in reports.
    std::string canonical_json() const;

    /// FNV-1a over the canonical JSON of every result-affecting field.
    std::string hash() const;
};

}  // namespace fpinv::bench
