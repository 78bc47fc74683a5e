#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fpinv/denoiser.hpp"
#include "fpinv/sampler.hpp"

namespace fpinv {

/// Fixed-point solver settings for one inversion step.
struct FixedPointConfig {
    int max_iterations = 5;
    /// Early stop once ||z^i - f(z^i)|| < residual_tolerance.
    double residual_tolerance = 1e-6;
    bool track_trace = false;

    void validate() const;
};

/// Result of solving z_t = f(z_t) for a single timestep.
struct FixedPointStep {
    Latent latent;
    /// residuals[i] = ||z^i - f(z^i)||, one per evaluation of f.
    std::vector<double> residuals;
    bool converged = false;
    /// z^0 .. z^n when tracing; empty otherwise.
    std::vector<Latent> iterates;

    int iterations() const { return static_cast<int>(residuals.size()); }
    double final_residual() const { return residuals.empty() ? 0.0 : residuals.back(); }
};

struct StepTrace {
    int timestep = 0;
    std::vector<double> residuals;
    bool converged = false;
    std::vector<Latent> iterates;
};

/// Per-timestep residual history of one inversion, ascending in t.
struct InversionTrace {
    std::vector<StepTrace> steps;

    bool all_converged() const;
    std::vector<int> non_converged_timesteps() const;
    /// Number of guided noise evaluations spent.
    int evaluations() const;
    /// [{"timestep", "residuals": [...], "converged"}, ...]
    std::string to_json() const;
};

struct InversionResult {
    Latent seed;
    InversionTrace trace;
};

/// Prompt-aware adjustment: num_cycles of (steps_per_cycle DDIM-inversion
/// steps, then steps_per_cycle DDIM steps back down), all with the prompt.
struct AdjustmentConfig {
    int num_cycles = 1;
    int steps_per_cycle = 2;
    /// Bound on ||z_adjusted - z_encoded||; unset means unbounded.
    std::optional<double> latent_drift_cap;
    /// Use the inversion's guidance inside the cycles; false uses w = 1.
    bool guided = true;

    void validate(std::size_t num_sampling_steps) const;
};

/// The implicit-equation map for the step t_prev -> t:
///   f(z) = sqrt(ab_t / ab_prev) z_prev + sqrt(ab_t) * dpsi * eps_hat(z, t).
class InversionStepMap {
public:
    /// Keeps a reference to `model`, which must outlive the map.
    InversionStepMap(const DenoiserModel& model, Latent z_prev, int t, int t_prev, Condition cond,
                     const GuidanceConfig& guidance);

    Latent operator()(const Latent& z) const;

    const StepCoefficients& coefficients() const { return coeffs_; }
    int timestep() const { return t_; }
    int previous_timestep() const { return t_prev_; }

private:
    const DenoiserModel& model_;
    Latent z_prev_;
    int t_;
    int t_prev_;
    Condition cond_;
    GuidanceConfig guidance_;
    StepCoefficients coeffs_;
};

/// One-shot DDIM inversion: f evaluated at z_prev.
Latent ddim_invert_step(const DenoiserModel& model, const Latent& z_prev, int t, int t_prev, const Condition& cond,
                        const GuidanceConfig& guidance);

/// Fixed-point iterations z^{i+1} = f(z^i) from z^0 = z_prev. Each iteration
/// costs one guided evaluation; the returned latent is f of the last iterate.
/// Non-convergence is reported through `converged`, never thrown.
FixedPointStep fp_invert_step(const DenoiserModel& model, const Latent& z_prev, int t, int t_prev,
                              const Condition& cond, const GuidanceConfig& guidance, const FixedPointConfig& cfg);

/// Inverts z_0 to a seed z_T by fixed-point steps over the ascending timesteps.
InversionResult invert(const DenoiserModel& model, const Latent& z0, const Condition& cond,
                       const GuidanceConfig& guidance, const FixedPointConfig& cfg);

/// Plain DDIM inversion loop (one evaluation per timestep).
Latent ddim_invert(const DenoiserModel& model, const Latent& z0, const Condition& cond, const GuidanceConfig& guidance);

/// Moves a prompt-agnostic encoding toward the prompt-consistent set by a
/// short backward-forward cycle.
Latent prompt_aware_adjust(const DenoiserModel& model, const Latent& z0_encoded, const Condition& cond,
                           const GuidanceConfig& guidance, const AdjustmentConfig& adj);

/// Guided evaluations spent by prompt_aware_adjust.
int adjustment_evaluations(const AdjustmentConfig& adj);

/// Empirical Lipschitz constant of f over a ball of `probe_radius` around
/// z_prev: max ||f(x) - f(y)|| / ||x - y|| over all pairs of `num_probes`
/// uniformly drawn points. Deterministic for a given `rng_seed`.
double estimate_contraction(const DenoiserModel& model, const Latent& z_prev, int t, int t_prev,
                            const Condition& cond, const GuidanceConfig& guidance, double probe_radius,
                            int num_probes, std::uint64_t rng_seed = 0x5eedULL);

}  // namespace fpinv
