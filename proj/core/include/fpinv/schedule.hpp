#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fpinv {

/// Diffusion noise schedule: beta_t, cumulative alpha-bar_t and the sampled
/// timestep subsequence. Timestep 0 is the clean end with alpha-bar_0 = 1.
///
/// Immutable after construction.
class NoiseSchedule {
public:
    /// `timesteps` must be strictly increasing, inside [1, betas.size()].
    NoiseSchedule(std::vector<double> betas, std::vector<int> timesteps);

    int total_steps() const { return static_cast<int>(betas_.size()); }
    std::size_t num_sampling_steps() const { return timesteps_.size(); }

    /// beta_t for t in [1, T].
    double beta(int t) const;
    /// alpha-bar_t for t in [0, T]; alpha-bar_0 == 1.
    double alpha_bar(int t) const;

    std::span<const double> betas() const { return betas_; }
    /// alpha-bar_1..alpha-bar_T (alpha-bar_0 is implicit).
    std::span<const double> alpha_bars() const { return {alpha_bars_.data() + 1, betas_.size()}; }
    /// Ascending sampled timesteps; generation walks them in reverse.
    std::span<const int> timesteps() const { return timesteps_; }

    /// Timestep preceding `t` in the subsequence, or 0 for the first one.
    int previous(int t) const;
    bool is_sampled(int t) const;
    /// True when (t_prev, t) is a consecutive pair of the subsequence, with
    /// t_prev == 0 standing for the clean end.
    bool is_adjacent(int t, int t_prev) const;

private:
    std::vector<double> betas_;
    std::vector<double> alpha_bars_;  // index 0 holds alpha-bar_0 = 1
    std::vector<int> timesteps_;
};

/// Linear beta schedule with an evenly strided subsequence of
/// `num_sampling_steps` timesteps {s, 2s, ..., N*s}, s = total_steps / N.
NoiseSchedule build_linear_schedule(int total_steps, double beta_start, double beta_end,
                                    int num_sampling_steps);

/// Parameters of the default experiment schedule (T = 1000, 50 steps, stride 20).
struct ScheduleParams {
    int total_steps = 1000;
    double beta_start = 8.5e-4;
    double beta_end = 1.2e-2;
    int num_sampling_steps = 50;

    NoiseSchedule build() const {
        return build_linear_schedule(total_steps, beta_start, beta_end, num_sampling_steps);
    }
};

/// psi(a) = sqrt(1/a - 1), the noise-to-signal ratio. Requires a in (0, 1].
double psi(double alpha_bar);

/// psi(alpha-bar_t) - psi(alpha-bar_prev) for raw alpha-bar values.
double delta_psi(double alpha_bar_t, double alpha_bar_prev);

/// psi difference across an adjacent pair of the schedule's subsequence.
double delta_psi(const NoiseSchedule& schedule, int t, int t_prev);

/// Coefficients of one deterministic step between adjacent timesteps.
///
/// Denoising:  z_prev = denoise_scale * z_t - denoise_noise * eps(z_t)
/// Inversion:  z_t    = invert_scale * z_prev + invert_noise * eps(z_t)
///
/// The inversion pair is the exact algebraic rearrangement of the denoising
/// pair: invert_scale = 1 / denoise_scale and invert_noise = sqrt(ab_t) * dpsi.
struct StepCoefficients {
    double alpha_bar_t;
    double alpha_bar_prev;
    double denoise_scale;  // sqrt(ab_prev / ab_t)
    double denoise_noise;  // sqrt(ab_prev) * dpsi
    double invert_scale;   // sqrt(ab_t / ab_prev)
    double invert_noise;   // sqrt(ab_t) * dpsi

    static StepCoefficients from_alpha_bars(double alpha_bar_t, double alpha_bar_prev);
};

StepCoefficients step_coefficients(const NoiseSchedule& schedule, int t, int t_prev);

}  // namespace fpinv
