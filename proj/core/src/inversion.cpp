#include "fpinv/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "json.hpp"

namespace fpinv {

void FixedPointConfig::validate() const {
    require(max_iterations >= 1, "max_iterations must be at least 1");
    require(std::isfinite(residual_tolerance) && residual_tolerance >= 0.0,
            "residual_tolerance must be finite and non-negative");
}

void AdjustmentConfig::validate(std::size_t num_sampling_steps) const {
    require(num_cycles >= 1, "adjust.num_cycles must be positive");
    require(steps_per_cycle >= 1, "adjust.steps_per_cycle must be positive");
    require(static_cast<std::size_t>(steps_per_cycle) <= num_sampling_steps,
            "adjust.steps_per_cycle exceeds the number of sampling steps");
    if (latent_drift_cap) require(*latent_drift_cap >= 0.0, "adjust.latent_drift_cap must be non-negative");
}

bool InversionTrace::all_converged() const {
    return std::all_of(steps.begin(), steps.end(), [](const StepTrace& s) { return s.converged; });
}

std::vector<int> InversionTrace::non_converged_timesteps() const {
    std::vector<int> out;
    for (const auto& s : steps)
        if (!s.converged) out.push_back(s.timestep);
    return out;
}

int InversionTrace::evaluations() const {
    int n = 0;
    for (const auto& s : steps) n += static_cast<int>(s.residuals.size());
    return n;
}

std::string InversionTrace::to_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& s : steps) j.push_back({{"timestep", s.timestep}, {"residuals", s.residuals}, {"converged", s.converged}});
    return j.dump();
}

// ---------------------------------------------------------------------------

InversionStepMap::InversionStepMap(const DenoiserModel& model, Latent z_prev, int t, int t_prev, Condition cond,
                                   const GuidanceConfig& guidance)
    : model_(model),
      z_prev_(std::move(z_prev)),
      t_(t),
      t_prev_(t_prev),
      cond_(std::move(cond)),
      guidance_(guidance),
      coeffs_(step_coefficients(model.schedule(), t, t_prev)) {
    require(static_cast<std::size_t>(z_prev_.size()) == model.dimension(), "latent dimension mismatch");
}

Latent InversionStepMap::operator()(const Latent& z) const {
    return coeffs_.invert_scale * z_prev_ + coeffs_.invert_noise * guided_noise(model_, z, t_, cond_, guidance_);
}

Latent ddim_invert_step(const DenoiserModel& model, const Latent& z_prev, int t, int t_prev, const Condition& cond,
                        const GuidanceConfig& guidance) {
    const InversionStepMap f(model, z_prev, t, t_prev, cond, guidance);
    return f(z_prev);
}

FixedPointStep fp_invert_step(const DenoiserModel& model, const Latent& z_prev, int t, int t_prev,
                              const Condition& cond, const GuidanceConfig& guidance, const FixedPointConfig& cfg) {
    cfg.validate();
    const InversionStepMap f(model, z_prev, t, t_prev, cond, guidance);

    FixedPointStep out;
    out.residuals.reserve(static_cast<std::size_t>(cfg.max_iterations));
    if (cfg.track_trace) out.iterates.push_back(z_prev);

    Latent z = z_prev;
    for (int i = 0; i < cfg.max_iterations; ++i) {
        Latent next = f(z);
        const double residual = (next - z).norm();
        out.residuals.push_back(residual);
        z = std::move(next);
        if (cfg.track_trace) out.iterates.push_back(z);
        if (residual < cfg.residual_tolerance) break;
    }
    out.converged = out.final_residual() <= cfg.residual_tolerance;
    if (!z.allFinite()) throw NumericalError("fixed-point inversion diverged at t=" + std::to_string(t));
    out.latent = std::move(z);
    return out;
}

InversionResult invert(const DenoiserModel& model, const Latent& z0, const Condition& cond,
                       const GuidanceConfig& guidance, const FixedPointConfig& cfg) {
    cfg.validate();
    require(static_cast<std::size_t>(z0.size()) == model.dimension(), "latent dimension mismatch");
    require(z0.allFinite(), "latent has non-finite entries");

    InversionResult result;
    result.trace.steps.reserve(model.schedule().num_sampling_steps());
    Latent z = z0;
    int t_prev = 0;
    for (const int t : model.schedule().timesteps()) {
        FixedPointStep step = fp_invert_step(model, z, t, t_prev, cond, guidance, cfg);
        result.trace.steps.push_back({t, std::move(step.residuals), step.converged, std::move(step.iterates)});
        z = std::move(step.latent);
        t_prev = t;
    }
    result.seed = std::move(z);
    return result;
}

Latent ddim_invert(const DenoiserModel& model, const Latent& z0, const Condition& cond, const GuidanceConfig& guidance) {
    require(static_cast<std::size_t>(z0.size()) == model.dimension(), "latent dimension mismatch");
    Latent z = z0;
    int t_prev = 0;
    for (const int t : model.schedule().timesteps()) {
        z = ddim_invert_step(model, z, t, t_prev, cond, guidance);
        t_prev = t;
    }
    return z;
}

int adjustment_evaluations(const AdjustmentConfig& adj) {
    return 2 * adj.num_cycles * adj.steps_per_cycle;
}

Latent prompt_aware_adjust(const DenoiserModel& model, const Latent& z0_encoded, const Condition& cond,
                           const GuidanceConfig& guidance, const AdjustmentConfig& adj) {
    const auto ts = model.schedule().timesteps();
    adj.validate(ts.size());
    require(static_cast<std::size_t>(z0_encoded.size()) == model.dimension(), "latent dimension mismatch");
    const GuidanceConfig w = adj.guided ? guidance : GuidanceConfig{1.0};
    const auto n = static_cast<std::size_t>(adj.steps_per_cycle);

    Latent z = z0_encoded;
    for (int cycle = 0; cycle < adj.num_cycles; ++cycle) {
        for (std::size_t i = 0; i < n; ++i) z = ddim_invert_step(model, z, ts[i], i == 0 ? 0 : ts[i - 1], cond, w);
        for (std::size_t i = n; i-- > 0;) z = ddim_step(model, z, ts[i], i == 0 ? 0 : ts[i - 1], cond, w);
    }
    if (adj.latent_drift_cap) {
        const Latent drift = z - z0_encoded;
        const double norm = drift.norm();
        if (norm > *adj.latent_drift_cap) z = z0_encoded + drift * (*adj.latent_drift_cap / norm);
    }
    if (!z.allFinite()) throw NumericalError("prompt-aware adjustment produced non-finite latent");
    return z;
}

// ---------------------------------------------------------------------------

namespace {

Latent sample_in_ball(const Latent& center, double radius, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uniform;
    Latent dir(center.size());
    double n = 0.0;
    do {
        for (auto& x : dir) x = normal(rng);
        n = dir.norm();
    } while (n == 0.0);
    const double r = radius * std::pow(uniform(rng), 1.0 / static_cast<double>(center.size()));
    return center + dir * (r / n);
}

}  // namespace

double estimate_contraction(const DenoiserModel& model, const Latent& z_prev, int t, int t_prev,
                            const Condition& cond, const GuidanceConfig& guidance, double probe_radius,
                            int num_probes, std::uint64_t rng_seed) {
    require(probe_radius > 0.0 && std::isfinite(probe_radius), "probe_radius must be positive");
    require(num_probes >= 2, "num_probes must be at least 2");
    const InversionStepMap f(model, z_prev, t, t_prev, cond, guidance);

    std::mt19937_64 rng(rng_seed);
    std::vector<Latent> points;
    std::vector<Latent> images;
    points.reserve(static_cast<std::size_t>(num_probes));
    images.reserve(static_cast<std::size_t>(num_probes));
    while (points.size() < static_cast<std::size_t>(num_probes)) {
        Latent p = sample_in_ball(z_prev, probe_radius, rng);
        const bool duplicate = std::any_of(points.begin(), points.end(), [&](const Latent& q) { return q == p; });
        if (duplicate) continue;  // resample coincident probes
        images.push_back(f(p));
        points.push_back(std::move(p));
    }

    double rho = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            const double dx = (points[i] - points[j]).norm();
            if (dx == 0.0) continue;
            rho = std::max(rho, (images[i] - images[j]).norm() / dx);
        }
    }
    return rho;
}

}  // namespace fpinv
