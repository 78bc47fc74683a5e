#pragma once

#include <vector>

#include "fpinv/denoiser.hpp"

namespace fpinv {

/// One (timestep, latent) entry of a generation trajectory.
struct TrajectoryPoint {
    int timestep;
    Latent latent;
};

/// z_T down to z_0; timesteps strictly decreasing, length = sampling steps + 1.
struct Trajectory {
    std::vector<TrajectoryPoint> points;

    const Latent& seed() const { return points.front().latent; }
    const Latent& final_latent() const { return points.back().latent; }
    std::size_t size() const { return points.size(); }
};

/// Deterministic (eta = 0) DDIM update from t to the adjacent t_prev:
///   z_prev = sqrt(ab_prev / ab_t) z_t - sqrt(ab_prev) * dpsi * eps_hat(z_t, t).
Latent ddim_step(const DenoiserModel& model, const Latent& z_t, int t, int t_prev, const Condition& cond,
                 const GuidanceConfig& guidance);

/// The same update for a precomputed prediction; used by oracles and tests.
Latent ddim_update(const StepCoefficients& coeffs, const Latent& z_t, const Latent& eps_hat);

/// Walks the sampled timesteps from the largest down to 0.
Trajectory generate(const DenoiserModel& model, const Latent& seed, const Condition& cond,
                    const GuidanceConfig& guidance);

/// generate(...) without keeping intermediate latents.
Latent generate_final(const DenoiserModel& model, const Latent& seed, const Condition& cond,
                      const GuidanceConfig& guidance);

}  // namespace fpinv
