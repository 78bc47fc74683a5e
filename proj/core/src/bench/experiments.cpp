#include "fpinv/bench/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <optional>
#include <random>
#include <thread>

#include "fpinv/bench/metrics.hpp"
#include "fpinv/sampler.hpp"
#include "fpinv/seedspace.hpp"

namespace fpinv::bench {

namespace {

enum Stream : std::uint64_t {
    kCalibration = 1,
    kReconstruct = 2,
    kSweep = 3,
    kConsistency = 4,
    kInterpolate = 5,
    kProbe = 6,
};

constexpr int kCalibrationSamples = 256;

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Each call writes only
/// its own slot, so the outcome does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                      : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    for (auto& t : pool) t.join();
}

/// Per-task result slot: rows on success, a message on failure.
struct Slot {
    std::vector<ReportRow> rows;
    std::vector<TraceRecord> traces;
    std::optional<std::string> failure;
};

ExperimentReport assemble(const std::string& name, const ExperimentConfig& cfg, std::vector<Slot>& slots) {
    ExperimentReport report;
    report.experiment = name;
    report.config_hash = cfg.hash();
    report.config_json = cfg.canonical_json();
    for (auto& s : slots) {
        if (s.failure) {
            report.failures.push_back(*s.failure);
            continue;
        }
        for (auto& r : s.rows) {
            r.scenario = cfg.scenario;
            r.config_hash = report.config_hash;
            report.rows.push_back(std::move(r));
        }
        for (auto& t : s.traces) report.traces.push_back(std::move(t));
    }
    report.sort_rows();
    return report;
}

ReportRow row(Method m, double guidance, std::string metric, double value, int trial, double wall = 0.0) {
    ReportRow r;
    r.method = method_name(m);
    r.guidance = guidance;
    r.metric = std::move(metric);
    r.value = value;
    r.trial = trial;
    r.wall_time_s = wall;
    return r;
}

Condition trial_prompt(const BenchContext& ctx, std::size_t index) {
    return ComponentPrompt{index % ctx.model->mixture().num_components()};
}

std::string failure_message(const std::string& what, int trial, double guidance, const std::exception& e) {
    return what + " trial " + std::to_string(trial) + " guidance " + std::to_string(guidance) + ": " + e.what();
}

}  // namespace

std::uint64_t split_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
    std::uint64_t s = base;
    std::uint64_t a = splitmix64(s);
    s = a ^ (stream * 0xd1b54a32d192ed03ULL);
    std::uint64_t b = splitmix64(s);
    s = b ^ (index * 0x8cb92ba72f3d8dd7ULL);
    return splitmix64(s);
}

Latent draw_seed(std::size_t dimension, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Latent z(static_cast<Eigen::Index>(dimension));
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
    return z;
}

BenchContext BenchContext::build(const ExperimentConfig& cfg) {
    cfg.validate();
    auto schedule = std::make_shared<const NoiseSchedule>(cfg.schedule.build());
    auto model = std::make_shared<const MixtureDenoiser>(cfg.mixture, schedule);
    ToyCodec codec = ToyCodec::random(cfg.codec.latent_dim, cfg.codec.pixel_dim, cfg.codec.rng_seed, 0.0);
    if (cfg.codec.has_fixed_step()) {
        codec = codec.with_quant_step(cfg.codec.quant_step);
    } else if (cfg.codec.target_error_fraction > 0.0) {
        const GuidanceConfig g(cfg.guidance_scale);
        std::vector<Latent> samples;
        samples.reserve(kCalibrationSamples);
        for (int i = 0; i < kCalibrationSamples; ++i) {
            const Latent seed = draw_seed(model->dimension(), split_seed(cfg.rng_seed, kCalibration, i));
            samples.push_back(generate_final(*model, seed,
                                             ComponentPrompt{static_cast<std::size_t>(i) %
                                                             model->mixture().num_components()},
                                             g));
        }
        codec = codec.with_quant_step(calibrate_quant_step(codec, samples, cfg.codec.target_error_fraction));
    }
    return BenchContext{std::move(schedule), std::move(model), std::move(codec)};
}

const char* method_name(Method m) {
    switch (m) {
        case Method::Ddim: return "ddim";
        case Method::Fpi: return "fpi";
        case Method::FpiAdjust: return "fpi+adjust";
    }
    return "?";
}

MethodOutcome run_method(Method method, const DenoiserModel& model, const Latent& z0, const Condition& cond,
                         const GuidanceConfig& guidance, const FixedPointConfig& fp, const AdjustmentConfig& adj) {
    MethodOutcome out;
    const auto start = std::chrono::steady_clock::now();
    const int steps = static_cast<int>(model.schedule().num_sampling_steps());
    switch (method) {
        case Method::Ddim:
            out.seed = ddim_invert(model, z0, cond, guidance);
            out.nfe = steps;
            break;
        case Method::Fpi: {
            auto r = invert(model, z0, cond, guidance, fp);
            out.seed = std::move(r.seed);
            out.nfe = r.trace.evaluations();
            out.trace = std::move(r.trace);
            break;
        }
        case Method::FpiAdjust: {
            const Latent adjusted = prompt_aware_adjust(model, z0, cond, guidance, adj);
            auto r = invert(model, adjusted, cond, guidance, fp);
            out.seed = std::move(r.seed);
            out.nfe = r.trace.evaluations() + adjustment_evaluations(adj);
            out.trace = std::move(r.trace);
            break;
        }
    }
    out.wall_time_s = seconds_since(start);
    return out;
}

void ContractionAudit::merge(const ContractionAudit& o) {
    steps_checked += o.steps_checked;
    steps_exempt += o.steps_exempt;
    violations += o.violations;
    violating_timesteps.insert(violating_timesteps.end(), o.violating_timesteps.begin(), o.violating_timesteps.end());
    max_checked_rho = std::max(max_checked_rho, o.max_checked_rho);
}

ContractionAudit audit_contraction(const DenoiserModel& model, const Latent& z0, const Condition& cond,
                                   const GuidanceConfig& guidance, const FixedPointConfig& fp, int probes,
                                   double threshold, std::uint64_t rng_seed) {
    FixedPointConfig traced = fp;
    traced.track_trace = true;
    const auto result = invert(model, z0, cond, guidance, traced);
    const auto& schedule = model.schedule();

    ContractionAudit audit;
    for (const auto& step : result.trace.steps) {
        if (step.residuals.size() < 2) continue;  // nothing to compare
        const Latent& z_prev = step.iterates.front();
        double radius = 0.0;
        for (const auto& z : step.iterates) radius = std::max(radius, (z - z_prev).norm());
        radius = std::max(radius, 1e-9 * (1.0 + z_prev.norm()));
        const int t_prev = schedule.previous(step.timestep);
        const double rho = estimate_contraction(model, z_prev, step.timestep, t_prev, cond, guidance, radius, probes,
                                                split_seed(rng_seed, kProbe, static_cast<std::uint64_t>(step.timestep)));
        if (!(rho < threshold)) {
            ++audit.steps_exempt;
            continue;
        }
        ++audit.steps_checked;
        audit.max_checked_rho = std::max(audit.max_checked_rho, rho);
        for (std::size_t i = 1; i < step.residuals.size(); ++i) {
            if (step.residuals[i] > step.residuals[i - 1]) {
                ++audit.violations;
                audit.violating_timesteps.push_back(step.timestep);
                break;
            }
        }
    }
    return audit;
}

ExperimentReport run_reconstruction_benchmark(const ExperimentConfig& cfg) {
    const BenchContext ctx = BenchContext::build(cfg);
    const auto& model = *ctx.model;
    const std::size_t trials = static_cast<std::size_t>(cfg.num_trials);
    std::vector<Slot> slots(cfg.guidance_sweep.size() * trials);

    parallel_for(slots.size(), cfg.threads, [&](std::size_t task) {
        const double w = cfg.guidance_sweep[task / trials];
        const int trial = static_cast<int>(task % trials);
        Slot& slot = slots[task];
        try {
            const GuidanceConfig g(w);
            const Condition cond = trial_prompt(ctx, static_cast<std::size_t>(trial));
            const Latent seed = draw_seed(model.dimension(), split_seed(cfg.rng_seed, kReconstruct, trial));
            const Latent z0 = generate_final(model, seed, cond, g);
            const Latent z0_enc = ctx.codec.roundtrip(z0);
            const Pixels reference = ctx.codec.decode(z0);
            const double peak = dynamic_range(reference);
            const double floor_l2 = metric_l2(z0, z0_enc);

            for (Method m : kAllMethods) {
                const auto clean = run_method(m, model, z0, cond, g, cfg.fixed_point, cfg.adjust);
                slot.rows.push_back(row(m, w, "seed_l2", metric_l2(clean.seed, seed), trial, clean.wall_time_s));

                const auto enc = run_method(m, model, z0_enc, cond, g, cfg.fixed_point, cfg.adjust);
                const Latent regen = generate_final(model, enc.seed, cond, g);
                slot.rows.push_back(row(m, w, "recon_l2", metric_l2(z0, regen), trial, enc.wall_time_s));
                slot.rows.push_back(row(m, w, "recon_psnr", metric_psnr(reference, ctx.codec.decode(regen), peak),
                                        trial, enc.wall_time_s));
                slot.rows.push_back(row(m, w, "nfe", enc.nfe, trial, enc.wall_time_s));
                slot.rows.push_back(row(m, w, "codec_floor_l2", floor_l2, trial, enc.wall_time_s));
                if (trial == 0 && m == Method::Fpi)
                    slot.traces.push_back({"reconstruct/fpi/guidance=" + std::to_string(w) + "/trial=0/encoded",
                                           enc.trace.to_json()});
            }
        } catch (const std::exception& e) {
            slot.failure = failure_message("reconstruct", trial, w, e);
        }
    });
    return assemble("reconstruct", cfg, slots);
}

ExperimentReport run_iteration_sweep(const ExperimentConfig& cfg) {
    const BenchContext ctx = BenchContext::build(cfg);
    const auto& model = *ctx.model;
    const double w = cfg.guidance_scale;
    std::vector<Slot> slots(static_cast<std::size_t>(cfg.num_trials));

    parallel_for(slots.size(), cfg.threads, [&](std::size_t task) {
        const int trial = static_cast<int>(task);
        Slot& slot = slots[task];
        try {
            const GuidanceConfig g(w);
            const Condition cond = trial_prompt(ctx, task);
            const Latent seed = draw_seed(model.dimension(), split_seed(cfg.rng_seed, kSweep, task));
            const Latent z0 = generate_final(model, seed, cond, g);
            const Latent z0_enc = ctx.codec.roundtrip(z0);
            const Pixels reference = ctx.codec.decode(z0);
            const double peak = dynamic_range(reference);

            auto record = [&](Method m, const std::string& suffix, const Latent& clean_seed, const Latent& enc_seed,
                              int nfe, double wall) {
                const Latent regen = generate_final(model, enc_seed, cond, g);
                slot.rows.push_back(row(m, w, "seed_l2" + suffix, metric_l2(clean_seed, seed), trial, wall));
                slot.rows.push_back(row(m, w, "recon_l2" + suffix, metric_l2(z0, regen), trial, wall));
                slot.rows.push_back(row(m, w, "recon_psnr" + suffix,
                                        metric_psnr(reference, ctx.codec.decode(regen), peak), trial, wall));
                slot.rows.push_back(row(m, w, "nfe" + suffix, nfe, trial, wall));
            };

            {
                const auto clean = run_method(Method::Ddim, model, z0, cond, g, cfg.fixed_point, cfg.adjust);
                const auto enc = run_method(Method::Ddim, model, z0_enc, cond, g, cfg.fixed_point, cfg.adjust);
                record(Method::Ddim, "", clean.seed, enc.seed, enc.nfe, enc.wall_time_s);
            }
            for (int n = 1; n <= cfg.max_sweep_iterations; ++n) {
                FixedPointConfig fp = cfg.fixed_point;
                fp.max_iterations = n;
                const auto clean = run_method(Method::Fpi, model, z0, cond, g, fp, cfg.adjust);
                const auto enc = run_method(Method::Fpi, model, z0_enc, cond, g, fp, cfg.adjust);
                record(Method::Fpi, "_it" + std::to_string(n), clean.seed, enc.seed, enc.nfe, enc.wall_time_s);
                const auto adj_clean = run_method(Method::FpiAdjust, model, z0, cond, g, fp, cfg.adjust);
                const auto adj_enc = run_method(Method::FpiAdjust, model, z0_enc, cond, g, fp, cfg.adjust);
                record(Method::FpiAdjust, "_it" + std::to_string(n), adj_clean.seed, adj_enc.seed, adj_enc.nfe,
                       adj_enc.wall_time_s);
            }

            // Per-iteration residual curve: median over timesteps that ran that many iterations.
            FixedPointConfig deep = cfg.fixed_point;
            deep.max_iterations = cfg.max_sweep_iterations;
            const auto traced = invert(model, z0, cond, g, deep);
            for (int i = 0; i < cfg.max_sweep_iterations; ++i) {
                std::vector<double> r;
                for (const auto& s : traced.trace.steps)
                    if (static_cast<int>(s.residuals.size()) > i) r.push_back(s.residuals[i]);
                if (!r.empty())
                    slot.rows.push_back(row(Method::Fpi, w, "residual_it" + std::to_string(i + 1), median(r), trial));
            }
            if (trial == 0) slot.traces.push_back({"sweep-iters/fpi/trial=0/clean", traced.trace.to_json()});

            const auto audit = audit_contraction(model, z0, cond, g, deep, cfg.contraction_probes,
                                                 cfg.contraction_threshold, split_seed(cfg.rng_seed, kProbe, task));
            slot.rows.push_back(row(Method::Fpi, w, "audit_steps_checked", audit.steps_checked, trial));
            slot.rows.push_back(row(Method::Fpi, w, "audit_steps_exempt", audit.steps_exempt, trial));
            slot.rows.push_back(row(Method::Fpi, w, "audit_violations", audit.violations, trial));
        } catch (const std::exception& e) {
            slot.failure = failure_message("sweep-iters", trial, w, e);
        }
    });
    return assemble("sweep-iters", cfg, slots);
}

ExperimentReport run_consistency_experiment(const ExperimentConfig& cfg) {
    const BenchContext ctx = BenchContext::build(cfg);
    const auto& model = *ctx.model;
    const double w = cfg.guidance_scale;
    std::vector<Slot> slots(static_cast<std::size_t>(cfg.num_trials));

    parallel_for(slots.size(), cfg.threads, [&](std::size_t task) {
        const int trial = static_cast<int>(task);
        Slot& slot = slots[task];
        try {
            const GuidanceConfig g(w);
            const Condition cond = trial_prompt(ctx, task);
            const Latent seed = draw_seed(model.dimension(), split_seed(cfg.rng_seed, kConsistency, task));
            const Latent z0 = generate_final(model, seed, cond, g);
            const Latent z0_enc = ctx.codec.roundtrip(z0);

            const auto raw = run_method(Method::Fpi, model, z0_enc, cond, g, cfg.fixed_point, cfg.adjust);
            const Latent regen_raw = generate_final(model, raw.seed, cond, g);

            const auto start = std::chrono::steady_clock::now();
            const Latent adjusted = prompt_aware_adjust(model, z0_enc, cond, g, cfg.adjust);
            const double adjust_wall = seconds_since(start);
            const auto adj = run_method(Method::Fpi, model, adjusted, cond, g, cfg.fixed_point, cfg.adjust);
            const Latent regen_adj = generate_final(model, adj.seed, cond, g);

            slot.rows.push_back(row(Method::Fpi, w, "encode_l2", metric_l2(z0, z0_enc), trial));
            slot.rows.push_back(row(Method::Fpi, w, "reinvert_l2", metric_l2(z0, regen_raw), trial, raw.wall_time_s));
            slot.rows.push_back(row(Method::FpiAdjust, w, "adjusted_l2", metric_l2(z0, adjusted), trial, adjust_wall));
            slot.rows.push_back(
                row(Method::FpiAdjust, w, "adjusted_reinvert_l2", metric_l2(z0, regen_adj), trial, adj.wall_time_s));
        } catch (const std::exception& e) {
            slot.failure = failure_message("consistency", trial, w, e);
        }
    });
    return assemble("consistency", cfg, slots);
}

std::vector<double> interpolation_fractions() {
    std::vector<double> u;
    for (int i = 0; i <= 8; ++i) u.push_back(i / 8.0);
    return u;
}

ExperimentReport run_interpolation_experiment(const ExperimentConfig& cfg) {
    const BenchContext ctx = BenchContext::build(cfg);
    const auto& model = *ctx.model;
    const double w = cfg.guidance_scale;
    const auto fractions = interpolation_fractions();
    std::vector<Slot> slots(static_cast<std::size_t>(cfg.num_pairs));

    parallel_for(slots.size(), cfg.threads, [&](std::size_t task) {
        const int pair = static_cast<int>(task);
        Slot& slot = slots[task];
        try {
            const GuidanceConfig g(w);
            const Condition cond = trial_prompt(ctx, task);
            // Two path endpoints plus a third member for the centroid, all under one prompt.
            std::vector<Latent> seeds, latents;
            for (std::uint64_t j = 0; j < 3; ++j) {
                seeds.push_back(draw_seed(model.dimension(), split_seed(cfg.rng_seed, kInterpolate, 3 * task + j)));
                latents.push_back(generate_final(model, seeds.back(), cond, g));
            }
            for (Method m : {Method::Ddim, Method::Fpi}) {
                std::vector<Latent> inverted;
                double wall = 0.0;
                for (const auto& z : latents) {
                    auto out = run_method(m, model, z, cond, g, cfg.fixed_point, cfg.adjust);
                    wall += out.wall_time_s;
                    inverted.push_back(std::move(out.seed));
                }
                double total = 0.0, endpoint = 0.0;
                int fallbacks = 0;
                for (double u : fractions) {
                    const auto s = slerp(inverted[0], inverted[1], u);
                    fallbacks += s.linear_fallback ? 1 : 0;
                    const Latent z = generate_final(model, s.point, cond, g);
                    total += model.log_marginal_density(z, 0, cond);
                    if (u == 0.0) endpoint = std::max(endpoint, metric_l2(z, latents[0]));
                    if (u == 1.0) endpoint = std::max(endpoint, metric_l2(z, latents[1]));
                }
                const Latent c = generate_final(model, centroid(SeedSet(inverted)), cond, g);
                slot.rows.push_back(
                    row(m, w, "path_logdensity", total / static_cast<double>(fractions.size()), pair, wall));
                slot.rows.push_back(row(m, w, "endpoint_l2", endpoint, pair, wall));
                slot.rows.push_back(row(m, w, "centroid_logdensity", model.log_marginal_density(c, 0, cond), pair, wall));
                slot.rows.push_back(row(m, w, "path_fallbacks", fallbacks, pair, wall));
            }
        } catch (const std::exception& e) {
            slot.failure = failure_message("interpolate", pair, w, e);
        }
    });
    return assemble("interpolate", cfg, slots);
}

}  // namespace fpinv::bench
