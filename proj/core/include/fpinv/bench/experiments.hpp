#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fpinv/bench/config.hpp"
#include "fpinv/bench/report.hpp"
#include "fpinv/codec.hpp"
#include "fpinv/denoiser.hpp"

namespace fpinv::bench {

/// Model, schedule and calibrated codec shared by every experiment of a run.
struct BenchContext {
    std::shared_ptr<const NoiseSchedule> schedule;
    std::shared_ptr<const MixtureDenoiser> model;
    ToyCodec codec;

    static BenchContext build(const ExperimentConfig& cfg);
};

/// Independent 64-bit stream for (base seed, stream id, index), via SplitMix64.
std::uint64_t split_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index);

/// Standard normal vector drawn from `seed`.
Latent draw_seed(std::size_t dimension, std::uint64_t seed);

enum class Method { Ddim, Fpi, FpiAdjust };
const char* method_name(Method m);
inline constexpr Method kAllMethods[] = {Method::Ddim, Method::Fpi, Method::FpiAdjust};

struct MethodOutcome {
    Latent seed;
    int nfe = 0;
    double wall_time_s = 0.0;
    InversionTrace trace;
};

/// Runs one inversion method on `z0` (the prompt-aware adjustment included for FpiAdjust).
MethodOutcome run_method(Method method, const DenoiserModel& model, const Latent& z0, const Condition& cond,
                         const GuidanceConfig& guidance, const FixedPointConfig& fp, const AdjustmentConfig& adj);

struct ContractionAudit {
    int steps_checked = 0;
    int steps_exempt = 0;
    int violations = 0;
    std::vector<int> violating_timesteps;
    double max_checked_rho = 0.0;

    void merge(const ContractionAudit& other);
};

/// Inverts `z0` with a traced FPI and, for every step whose empirical
/// Lipschitz estimate over the iterates' neighbourhood is below `threshold`,
/// checks that the residual sequence never increases.
ContractionAudit audit_contraction(const DenoiserModel& model, const Latent& z0, const Condition& cond,
                                   const GuidanceConfig& guidance, const FixedPointConfig& fp, int probes,
                                   double threshold, std::uint64_t rng_seed);

ExperimentReport run_reconstruction_benchmark(const ExperimentConfig& cfg);
ExperimentReport run_iteration_sweep(const ExperimentConfig& cfg);
ExperimentReport run_consistency_experiment(const ExperimentConfig& cfg);
ExperimentReport run_interpolation_experiment(const ExperimentConfig& cfg);

/// Interpolation fractions used along each seed path.
std::vector<double> interpolation_fractions();

}  // namespace fpinv::bench
