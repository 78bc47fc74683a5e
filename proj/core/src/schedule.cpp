#include "fpinv/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fpinv/types.hpp"

namespace fpinv {

NoiseSchedule::NoiseSchedule(std::vector<double> betas, std::vector<int> timesteps)
    : betas_(std::move(betas)), timesteps_(std::move(timesteps)) {
    require(!betas_.empty(), "schedule needs at least one beta");
    alpha_bars_.resize(betas_.size() + 1);
    alpha_bars_[0] = 1.0;
    for (std::size_t i = 0; i < betas_.size(); ++i) {
        const double b = betas_[i];
        require(b > 0.0 && b < 1.0, "beta_" + std::to_string(i + 1) + " outside (0,1)");
        alpha_bars_[i + 1] = alpha_bars_[i] * (1.0 - b);
    }
    require(!timesteps_.empty(), "schedule needs at least one sampled timestep");
    for (std::size_t i = 0; i < timesteps_.size(); ++i) {
        require(timesteps_[i] >= 1 && timesteps_[i] <= total_steps(),
                "sampled timestep outside [1, T]");
        if (i > 0) require(timesteps_[i] > timesteps_[i - 1], "sampled timesteps must strictly increase");
    }
}

double NoiseSchedule::beta(int t) const {
    require(t >= 1 && t <= total_steps(), "timestep outside [1, T]");
    return betas_[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::alpha_bar(int t) const {
    require(t >= 0 && t <= total_steps(), "timestep outside [0, T]");
    return alpha_bars_[static_cast<std::size_t>(t)];
}

int NoiseSchedule::previous(int t) const {
    const auto it = std::lower_bound(timesteps_.begin(), timesteps_.end(), t);
    require(it != timesteps_.end() && *it == t, "timestep " + std::to_string(t) + " is not sampled");
    return it == timesteps_.begin() ? 0 : *(it - 1);
}

bool NoiseSchedule::is_sampled(int t) const {
    return std::binary_search(timesteps_.begin(), timesteps_.end(), t);
}

bool NoiseSchedule::is_adjacent(int t, int t_prev) const {
    return is_sampled(t) && previous(t) == t_prev;
}

NoiseSchedule build_linear_schedule(int total_steps, double beta_start, double beta_end,
                                    int num_sampling_steps) {
    require(total_steps > 0, "total_steps must be positive");
    require(num_sampling_steps > 0, "num_sampling_steps must be positive");
    require(num_sampling_steps <= total_steps, "num_sampling_steps exceeds total_steps");
    require(beta_start > 0.0 && beta_start < 1.0, "beta_start outside (0,1)");
    require(beta_end > 0.0 && beta_end < 1.0, "beta_end outside (0,1)");
    require(beta_start <= beta_end, "beta_start must not exceed beta_end");

    std::vector<double> betas(static_cast<std::size_t>(total_steps));
    for (int i = 0; i < total_steps; ++i) {
        const double u = total_steps == 1 ? 0.0 : static_cast<double>(i) / (total_steps - 1);
        betas[static_cast<std::size_t>(i)] = beta_start + (beta_end - beta_start) * u;
    }
    const int stride = total_steps / num_sampling_steps;
    std::vector<int> timesteps(static_cast<std::size_t>(num_sampling_steps));
    for (int k = 0; k < num_sampling_steps; ++k) timesteps[static_cast<std::size_t>(k)] = stride * (k + 1);
    return NoiseSchedule(std::move(betas), std::move(timesteps));
}

double psi(double alpha_bar) {
    require(alpha_bar > 0.0 && alpha_bar <= 1.0, "alpha_bar outside (0,1]");
    return std::sqrt(1.0 / alpha_bar - 1.0);
}

double delta_psi(double alpha_bar_t, double alpha_bar_prev) {
    return psi(alpha_bar_t) - psi(alpha_bar_prev);
}

double delta_psi(const NoiseSchedule& schedule, int t, int t_prev) {
    require(schedule.is_adjacent(t, t_prev),
            "(" + std::to_string(t_prev) + ", " + std::to_string(t) + ") is not an adjacent timestep pair");
    return delta_psi(schedule.alpha_bar(t), schedule.alpha_bar(t_prev));
}

StepCoefficients StepCoefficients::from_alpha_bars(double alpha_bar_t, double alpha_bar_prev) {
    const double dpsi = delta_psi(alpha_bar_t, alpha_bar_prev);
    return StepCoefficients{alpha_bar_t,
                            alpha_bar_prev,
                            std::sqrt(alpha_bar_prev / alpha_bar_t),
                            std::sqrt(alpha_bar_prev) * dpsi,
                            std::sqrt(alpha_bar_t / alpha_bar_prev),
                            std::sqrt(alpha_bar_t) * dpsi};
}

StepCoefficients step_coefficients(const NoiseSchedule& schedule, int t, int t_prev) {
    require(schedule.is_adjacent(t, t_prev),
            "(" + std::to_string(t_prev) + ", " + std::to_string(t) + ") is not an adjacent timestep pair");
    return StepCoefficients::from_alpha_bars(schedule.alpha_bar(t), schedule.alpha_bar(t_prev));
}

}  // namespace fpinv
