#include <benchmark/benchmark.h>

#include "fpinv/denoiser.hpp"
#include "fpinv/inversion.hpp"
#include "fpinv/sampler.hpp"

namespace {

struct Fixture {
    std::shared_ptr<const fpinv::NoiseSchedule> schedule =
        std::make_shared<const fpinv::NoiseSchedule>(fpinv::ScheduleParams{}.build());
    fpinv::MixtureDenoiser model{fpinv::GaussianMixtureModel::default_scenario(), schedule};
    fpinv::Condition cond = fpinv::ComponentPrompt{0};
    fpinv::GuidanceConfig guidance{4.0};
    fpinv::Latent z0 = fpinv::generate_final(model, fpinv::Latent::Constant(4, 0.3), cond, guidance);
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

void BM_MixturePredict(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(f.model.predict_noise(f.z0, 500, f.cond));
}
BENCHMARK(BM_MixturePredict);

void BM_DdimInvert(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(fpinv::ddim_invert(f.model, f.z0, f.cond, f.guidance));
}
BENCHMARK(BM_DdimInvert);

void BM_FpiInvert(benchmark::State& state) {
    const auto& f = fixture();
    fpinv::FixedPointConfig cfg;
    cfg.max_iterations = static_cast<int>(state.range(0));
    cfg.residual_tolerance = 0.0;
    for (auto _ : state) benchmark::DoNotOptimize(fpinv::invert(f.model, f.z0, f.cond, f.guidance, cfg).seed);
}
BENCHMARK(BM_FpiInvert)->Arg(1)->Arg(3)->Arg(5);

}  // namespace

BENCHMARK_MAIN();
