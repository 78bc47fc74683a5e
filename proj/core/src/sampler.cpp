#include "fpinv/sampler.hpp"

namespace fpinv {

Latent ddim_update(const StepCoefficients& coeffs, const Latent& z_t, const Latent& eps_hat) {
    return coeffs.denoise_scale * z_t - coeffs.denoise_noise * eps_hat;
}

Latent ddim_step(const DenoiserModel& model, const Latent& z_t, int t, int t_prev, const Condition& cond,
                 const GuidanceConfig& guidance) {
    const StepCoefficients coeffs = step_coefficients(model.schedule(), t, t_prev);
    return ddim_update(coeffs, z_t, guided_noise(model, z_t, t, cond, guidance));
}

namespace {

template <typename Visit>
Latent run_generation(const DenoiserModel& model, const Latent& seed, const Condition& cond,
                      const GuidanceConfig& guidance, Visit&& visit) {
    require(static_cast<std::size_t>(seed.size()) == model.dimension(), "seed dimension mismatch");
    require(seed.allFinite(), "seed has non-finite entries");
    const auto ts = model.schedule().timesteps();
    Latent z = seed;
    for (auto it = ts.rbegin(); it != ts.rend(); ++it) {
        const int t = *it;
        const int t_prev = std::next(it) == ts.rend() ? 0 : *std::next(it);
        z = ddim_step(model, z, t, t_prev, cond, guidance);
        visit(t_prev, z);
    }
    if (!z.allFinite()) throw NumericalError("generation produced non-finite latent");
    return z;
}

}  // namespace

Trajectory generate(const DenoiserModel& model, const Latent& seed, const Condition& cond,
                    const GuidanceConfig& guidance) {
    Trajectory traj;
    traj.points.reserve(model.schedule().num_sampling_steps() + 1);
    traj.points.push_back({model.schedule().timesteps().back(), seed});
    run_generation(model, seed, cond, guidance, [&](int t, const Latent& z) { traj.points.push_back({t, z}); });
    return traj;
}

Latent generate_final(const DenoiserModel& model, const Latent& seed, const Condition& cond,
                      const GuidanceConfig& guidance) {
    return run_generation(model, seed, cond, guidance, [](int, const Latent&) {});
}

}  // namespace fpinv
