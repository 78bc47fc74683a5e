#include <cmath>
#include <random>

#include "doctest.h"
#include "fpinv/denoiser.hpp"
#include "oracles.hpp"

using namespace fpinv;

namespace {

std::shared_ptr<const NoiseSchedule> default_schedule() {
    static auto s = std::make_shared<const NoiseSchedule>(ScheduleParams{}.build());
    return s;
}

GaussianMixtureModel standard_normal(std::size_t d) {
    return GaussianMixtureModel({{1.0, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d)),
                                  Eigen::VectorXd::Ones(static_cast<Eigen::Index>(d))}});
}

}  // namespace

TEST_CASE("standard normal prior gives eps = sqrt(1 - ab) z") {
    MixtureDenoiser m(standard_normal(3), default_schedule());
    std::mt19937_64 rng(1);
    for (int t : {1, 20, 500, 1000}) {
        const Latent z = oracle::normal_vector(rng, 3);
        const double ab = default_schedule()->alpha_bar(t);
        const Latent eps = m.predict_noise(z, t, Unconditional{});
        CHECK((eps - std::sqrt(1.0 - ab) * z).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("noiseless point mass at the scaled mean predicts zero noise") {
    Eigen::VectorXd mu(2);
    mu << 0.7, -1.3;
    GaussianMixtureModel g({{0.5, mu, Eigen::VectorXd::Constant(2, 1e-14)},
                            {0.5, -mu, Eigen::VectorXd::Constant(2, 0.5)}});
    MixtureDenoiser m(g, default_schedule());
    for (int t : {20, 400, 1000}) {
        const double ab = default_schedule()->alpha_bar(t);
        const Latent eps = m.predict_noise(std::sqrt(ab) * mu, t, ComponentPrompt{0});
        CHECK(eps.norm() < 1e-12);
    }
}

TEST_CASE("1-D two-component mixture matches an importance-weighted Monte-Carlo estimate") {
    // One step with beta = 0.5, so alpha-bar_1 = 0.5.
    auto sched = std::make_shared<const NoiseSchedule>(std::vector<double>{0.5}, std::vector<int>{1});
    GaussianMixtureModel g({{0.3, Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Constant(1, 0.2)},
                            {0.7, Eigen::VectorXd::Constant(1, 1.5), Eigen::VectorXd::Constant(1, 0.6)}});
    MixtureDenoiser m(g, sched);
    const double ab = 0.5, sa = std::sqrt(ab), sn = std::sqrt(1 - ab);

    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> pick(0.0, 1.0);
    std::normal_distribution<double> n01(0.0, 1.0);
    const int N = 1000000;
    std::vector<double> x0(N);
    for (auto& x : x0) x = pick(rng) < 0.3 ? -1.0 + std::sqrt(0.2) * n01(rng) : 1.5 + std::sqrt(0.6) * n01(rng);

    for (double z : {-1.2, 0.1, 0.9, 2.0}) {
        // p(z0 | z) is proportional to p(z0) N(z; sa z0, 1 - ab); weight prior draws by the likelihood.
        double sw = 0.0, swe = 0.0;
        std::vector<double> w(N), e(N);
        for (int i = 0; i < N; ++i) {
            const double r = z - sa * x0[i];
            w[i] = std::exp(-0.5 * r * r / (1 - ab));
            e[i] = r / sn;
            sw += w[i];
            swe += w[i] * e[i];
        }
        const double est = swe / sw;
        double var = 0.0;
        for (int i = 0; i < N; ++i) var += w[i] * w[i] * (e[i] - est) * (e[i] - est);
        const double se = std::sqrt(var) / sw;
        const double exact = m.predict_noise(Latent::Constant(1, z), 1, Unconditional{})[0];
        INFO("z=" << z << " exact=" << exact << " mc=" << est << " se=" << se);
        CHECK(std::abs(exact - est) < 3.0 * se);
    }
}

TEST_CASE("noise prediction equals the scaled finite-difference score") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> pick_t(1, 1000);
    for (std::size_t d : {1, 3, 8}) {
        const auto g = oracle::random_mixture(rng, d, 3);
        MixtureDenoiser m(g, default_schedule());
        for (int rep = 0; rep < 20; ++rep) {
            const int t = pick_t(rng);
            const double ab = default_schedule()->alpha_bar(t);
            const Latent z = oracle::normal_vector(rng, static_cast<Eigen::Index>(d), 1.3);
            const auto grad = oracle::fd_gradient(
                [&](const Eigen::VectorXd& x) { return oracle::mixture_log_density(g, x, ab); }, z, 1e-4);
            const Latent eps = m.predict_noise(z, t, Unconditional{});
            CHECK((eps + std::sqrt(1.0 - ab) * grad).cwiseAbs().maxCoeff() < 1e-5);
        }
    }
}

TEST_CASE("log density agrees with an independent evaluation and reduces under a prompt") {
    std::mt19937_64 rng(5);
    const auto g = oracle::random_mixture(rng, 4, 3);
    MixtureDenoiser m(g, default_schedule());
    for (int t : {0, 1, 300, 1000}) {
        const double ab = default_schedule()->alpha_bar(t);
        const Latent z = oracle::normal_vector(rng, 4);
        CHECK(m.log_marginal_density(z, t, Unconditional{}) ==
              doctest::Approx(oracle::mixture_log_density(g, z, ab)).epsilon(1e-12));
        for (std::size_t k = 0; k < 3; ++k) {
            GaussianMixtureModel single({{1.0, g.component(k).mean, g.component(k).variance}});
            CHECK(log_marginal_density(m, z, t, ComponentPrompt{k}) ==
                  doctest::Approx(oracle::mixture_log_density(single, z, ab)).epsilon(1e-12));
        }
    }
}

TEST_CASE("standard normal log density at the origin") {
    MixtureDenoiser m(standard_normal(1), default_schedule());
    for (int t : {0, 10, 1000})
        CHECK(m.log_marginal_density(Latent::Zero(1), t, Unconditional{}) ==
              doctest::Approx(-0.5 * std::log(2 * M_PI)).epsilon(1e-14));
}

TEST_CASE("responsibilities are normalized, even far in the tails") {
    MixtureDenoiser m(GaussianMixtureModel::default_scenario(), default_schedule());
    std::mt19937_64 rng(9);
    for (int t : {1, 20, 100, 1000}) {
        for (double scale : {0.5, 5.0, 80.0}) {
            const Latent z = oracle::normal_vector(rng, 4, scale);
            const auto r = m.responsibilities(z, t, Unconditional{});
            CHECK(std::abs(r.sum() - 1.0) < 1e-12);
            CHECK((r.array() >= 0.0).all());
            CHECK(m.predict_noise(z, t, Unconditional{}).allFinite());
        }
        const auto one_hot = m.responsibilities(Latent::Zero(4), t, ComponentPrompt{1});
        CHECK(one_hot[1] == 1.0);
        CHECK(one_hot.sum() == 1.0);
    }
}

TEST_CASE("posterior mean and noise prediction are consistent") {
    MixtureDenoiser m(GaussianMixtureModel::default_scenario(), default_schedule());
    std::mt19937_64 rng(3);
    for (int t : {20, 260, 980}) {
        const double ab = default_schedule()->alpha_bar(t);
        const Latent z = oracle::normal_vector(rng, 4);
        for (Condition c : {Condition{Unconditional{}}, Condition{ComponentPrompt{2}}}) {
            const Latent x0 = m.posterior_mean(z, t, c);
            const Latent eps = (z - std::sqrt(ab) * x0) / std::sqrt(1 - ab);
            CHECK((eps - m.predict_noise(z, t, c)).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("classifier-free guidance identities") {
    MixtureDenoiser m(GaussianMixtureModel::default_scenario(), default_schedule());
    std::mt19937_64 rng(4);
    const Latent z = oracle::normal_vector(rng, 4);
    const Condition c = ComponentPrompt{0};
    const Latent eps_c = m.predict_noise(z, 200, c);
    const Latent eps_u = m.predict_noise(z, 200, Unconditional{});
    CHECK((guided_noise(m, z, 200, c, GuidanceConfig(1.0)) - eps_c).norm() < 1e-15);
    CHECK(guided_noise(m, z, 200, c, GuidanceConfig(0.0)) == eps_u);
    CHECK((guided_noise(m, z, 200, c, GuidanceConfig(4.0)) - (eps_u + 4.0 * (eps_c - eps_u))).norm() < 1e-14);

    MixtureDenoiser single(standard_normal(4), default_schedule());
    const Latent base = guided_noise(single, z, 200, ComponentPrompt{0}, GuidanceConfig(1.0));
    for (double w : {0.0, 2.0, 7.5}) CHECK(guided_noise(single, z, 200, ComponentPrompt{0}, GuidanceConfig(w)) == base);
}

TEST_CASE("invalid inputs are rejected") {
    MixtureDenoiser m(GaussianMixtureModel::default_scenario(), default_schedule());
    const Latent z = Latent::Zero(4);
    CHECK_THROWS_AS(m.predict_noise(z, 0, Unconditional{}), InvalidArgument);
    CHECK_THROWS_AS(m.predict_noise(z, 1001, Unconditional{}), InvalidArgument);
    CHECK_THROWS_AS(m.predict_noise(Latent::Zero(3), 10, Unconditional{}), InvalidArgument);
    CHECK_THROWS_AS(m.predict_noise(z, 10, ComponentPrompt{3}), InvalidArgument);
    CHECK_THROWS_AS(GuidanceConfig(-0.5), InvalidArgument);
    CHECK_THROWS_AS(GuidanceConfig(std::nan("")), InvalidArgument);

    const Eigen::VectorXd one = Eigen::VectorXd::Ones(2);
    CHECK_THROWS_AS(GaussianMixtureModel({{0.5, one, one}, {0.4, one, one}}), InvalidArgument);
    CHECK_THROWS_AS(GaussianMixtureModel({{1.0, one, -one}}), InvalidArgument);
    CHECK_THROWS_AS(GaussianMixtureModel({{0.5, one, one}, {0.5, Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(3)}}),
                    InvalidArgument);
    CHECK_THROWS_AS(GaussianMixtureModel({}), InvalidArgument);
}

TEST_CASE("mixture JSON round trip") {
    const auto g = GaussianMixtureModel::default_scenario();
    const auto back = GaussianMixtureModel::from_json(g.to_json());
    REQUIRE(back.num_components() == g.num_components());
    for (std::size_t k = 0; k < g.num_components(); ++k) {
        CHECK(back.component(k).weight == g.component(k).weight);
        CHECK(back.component(k).mean == g.component(k).mean);
        CHECK(back.component(k).variance == g.component(k).variance);
    }
    CHECK_THROWS_AS(GaussianMixtureModel::from_json("{\"dimension\": 2}"), InvalidArgument);
    CHECK_THROWS_AS(GaussianMixtureModel::from_json("not json"), InvalidArgument);
    CHECK_THROWS_AS(GaussianMixtureModel::from_json(
                        R"({"dimension": 3, "components": [{"weight": 1, "mean": [0, 0], "variance": [1, 1]}]})"),
                    InvalidArgument);
}

TEST_CASE("affine stub") {
    auto sched = default_schedule();
    Eigen::VectorXd off(2);
    off << 0.5, -0.25;
    AffineDenoiser a(2, 0.3, off, sched);
    Latent z(2);
    z << 1.0, 2.0;
    CHECK((a.predict_noise(z, 7, ComponentPrompt{99}) - (0.3 * z + off)).norm() == 0.0);
    AffineDenoiser zero(2, 0.0, sched);
    CHECK(zero.predict_noise(z, 7, Unconditional{}).norm() == 0.0);
}
