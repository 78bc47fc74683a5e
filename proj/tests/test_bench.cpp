#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <set>

#include "doctest.h"
#include "fpinv/bench/config.hpp"
#include "fpinv/bench/experiments.hpp"
#include "fpinv/bench/metrics.hpp"
#include "fpinv/bench/plot.hpp"
#include "fpinv/bench/report.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace fpinv;
using namespace fpinv::bench;

namespace {

ExperimentConfig small_config(int trials = 6) {
    ExperimentConfig cfg;
    cfg.num_trials = trials;
    cfg.num_pairs = 4;
    cfg.threads = 1;
    return cfg;
}

}  // namespace

TEST_CASE("metric_l2") {
    const Latent z = Latent::LinSpaced(3, 0.0, 2.0);
    CHECK(metric_l2(z, z) == 0.0);
    Latent a(2), b(2);
    a << 1, 0;
    b << 0, 1;
    CHECK(metric_l2(a, b) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) {
        const Latent x = oracle::normal_vector(rng, 7), y = oracle::normal_vector(rng, 7);
        double s = 0.0;
        for (int k = 0; k < 7; ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
        CHECK(metric_l2(x, y) == doctest::Approx(std::sqrt(s)).epsilon(1e-14));
    }
    CHECK_THROWS_AS(metric_l2(a, z), InvalidArgument);
}

TEST_CASE("metric_psnr") {
    const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(8, 0.0, 1.0);
    CHECK(std::isinf(metric_psnr(x, x, 1.0)));
    // Every entry off by the peak: MSE = peak^2, so 0 dB.
    CHECK(metric_psnr(x, (x.array() + 2.0).matrix(), 2.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
    std::mt19937_64 rng(2);
    const Eigen::VectorXd y = x + oracle::normal_vector(rng, 8, 0.1);
    double mse = 0.0;
    for (int i = 0; i < 8; ++i) mse += (x[i] - y[i]) * (x[i] - y[i]) / 8.0;
    CHECK(metric_psnr(x, y, 1.5) == doctest::Approx(10.0 * std::log10(2.25 / mse)).epsilon(1e-14));
    CHECK_THROWS_AS(metric_psnr(x, y, 0.0), InvalidArgument);
    CHECK_THROWS_AS(metric_psnr(x, Eigen::VectorXd::Zero(3), 1.0), InvalidArgument);
}

TEST_CASE("order statistics") {
    const std::vector<double> v = {5, 1, 4, 2, 3};
    CHECK(median(v) == 3.0);
    CHECK(mean(v) == 3.0);
    CHECK(quantile(v, 0.0) == 1.0);
    CHECK(quantile(v, 1.0) == 5.0);
    const std::vector<double> even = {1, 2, 3, 10};
    CHECK(median(even) == 2.5);
}

TEST_CASE("config parsing, defaults and hashing") {
    const auto cfg = ExperimentConfig::from_json("{}");
    CHECK(cfg.schedule.total_steps == 1000);
    CHECK(cfg.schedule.num_sampling_steps == 50);
    CHECK(cfg.guidance_scale == 4.0);
    CHECK(cfg.guidance_sweep == std::vector<double>{1.0, 2.0, 4.0, 7.5});
    CHECK(cfg.fixed_point.max_iterations == 5);
    CHECK(cfg.num_trials == 200);

    const auto back = ExperimentConfig::from_json(cfg.to_json());
    CHECK(back.hash() == cfg.hash());
    CHECK(back.to_json() == cfg.to_json());

    auto other = cfg;
    other.rng_seed += 1;
    CHECK(other.hash() != cfg.hash());
    auto relocated = cfg;
    relocated.output_dir = "elsewhere";
    relocated.threads = 3;
    CHECK(relocated.hash() == cfg.hash());

    const auto custom = ExperimentConfig::from_json(
        R"({"guidance": {"scale": 2, "sweep": [0, 3]}, "max_iterations": 7, "codec": {"quant_step": 0.01},
            "adjust": {"latent_drift_cap": 0.5, "guided": false}})");
    CHECK(custom.guidance_scale == 2.0);
    CHECK(custom.guidance_sweep == std::vector<double>{0.0, 3.0});
    CHECK(custom.fixed_point.max_iterations == 7);
    CHECK(custom.codec.has_fixed_step());
    CHECK(custom.adjust.latent_drift_cap.value() == 0.5);
    CHECK_FALSE(custom.adjust.guided);

    CHECK_THROWS_AS(ExperimentConfig::from_json("{"), InvalidArgument);
    CHECK_THROWS_AS(ExperimentConfig::from_json("[]"), InvalidArgument);
    CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"num_trials": 0})"), InvalidArgument);
    CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"num_trials": "many"})"), InvalidArgument);
    CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"schedule": {"beta_start": 0.5, "beta_end": 0.1}})"),
                    InvalidArgument);
    CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"guidance": {"sweep": [-1]}})"), InvalidArgument);
    CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"adjust": {"steps_per_cycle": 99}})"), InvalidArgument);
    CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"codec": {"latent_dim": 3}})"), InvalidArgument);
}

TEST_CASE("split seeds are distinct across streams and indices") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 8; ++s)
        for (std::uint64_t i = 0; i < 500; ++i) seen.insert(split_seed(42, s, i));
    CHECK(seen.size() == 8 * 500);
    CHECK(split_seed(1, 2, 3) == split_seed(1, 2, 3));
}

TEST_CASE("CSV round trip is lossless") {
    ExperimentReport r;
    r.experiment = "x";
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n;
    for (int i = 0; i < 40; ++i) {
        ReportRow row;
        row.scenario = "default";
        row.method = i % 3 == 0 ? "ddim" : (i % 3 == 1 ? "fpi" : "fpi+adjust");
        row.guidance = i % 2 ? 7.5 : 1.0 / 3.0;
        row.metric = "m" + std::to_string(i % 4);
        row.value = i == 5 ? std::numeric_limits<double>::infinity() : n(rng) * std::pow(10.0, i % 9 - 4);
        row.trial = i;
        row.wall_time_s = std::abs(n(rng)) * 1e-3;
        r.rows.push_back(row);
    }
    const std::string csv = to_csv(r);
    CHECK(csv.rfind("scenario,method,guidance,metric,value,trial,wall_time_s\n", 0) == 0);
    CHECK(csv.find("exact") != std::string::npos);
    const auto parsed = parse_csv(csv);
    REQUIRE(parsed.size() == r.rows.size());
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        CHECK(parsed[i].scenario == r.rows[i].scenario);
        CHECK(parsed[i].method == r.rows[i].method);
        CHECK(parsed[i].guidance == r.rows[i].guidance);
        CHECK(parsed[i].metric == r.rows[i].metric);
        CHECK(parsed[i].value == r.rows[i].value);
        CHECK(parsed[i].trial == r.rows[i].trial);
        CHECK(parsed[i].wall_time_s == r.rows[i].wall_time_s);
    }
    CHECK_THROWS_AS(parse_csv("a,b\n"), InvalidArgument);
    CHECK_THROWS_AS(parse_csv(std::string(kCsvHeader) + "\nx,y\n"), InvalidArgument);
}

TEST_CASE("reconstruction report structure and JSON schema") {
    auto cfg = small_config(6);
    cfg.guidance_sweep = {1.0, 4.0};
    const auto r = run_reconstruction_benchmark(cfg);
    CHECK(r.failures.empty());
    const std::vector<std::string> metrics = {"seed_l2", "recon_l2", "recon_psnr", "nfe", "codec_floor_l2"};
    for (const auto& m : metrics) {
        std::size_t count = 0;
        for (const auto& row : r.rows) count += row.metric == m ? 1 : 0;
        CHECK(count == 6u * 3u * 2u);  // trials x methods x guidance values
    }
    for (const auto& row : r.rows) {
        CHECK(row.config_hash == cfg.hash());
        CHECK(row.scenario == "default");
    }
    for (double w : {1.0, 4.0}) {
        for (double v : r.values("ddim", "nfe", w)) CHECK(v == 50.0);
        for (double v : r.values("fpi", "nfe", w)) CHECK((v >= 50.0 && v <= 250.0));
        for (double v : r.values("fpi+adjust", "nfe", w)) CHECK((v >= 54.0 && v <= 254.0));
    }

    const auto j = nlohmann::json::parse(to_json(r));
    CHECK(j["experiment"] == "reconstruct");
    CHECK(j["config_hash"] == cfg.hash());
    CHECK(j["config"].is_object());
    REQUIRE(j["rows"].is_array());
    CHECK(j["rows"].size() == r.rows.size());
    for (const char* key : {"scenario", "method", "guidance", "metric", "value", "trial", "wall_time_s", "config_hash"})
        CHECK(j["rows"][0].contains(key));
    REQUIRE(j["traces"].is_array());
    CHECK(j["traces"].size() == 2);
    CHECK(j["traces"][0]["steps"].size() == 50);
    CHECK(j["failures"].is_array());
}

TEST_CASE("results do not depend on the thread count") {
    auto one = small_config(5);
    auto many = one;
    many.threads = 4;
    const auto a = run_consistency_experiment(one);
    const auto b = run_consistency_experiment(many);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].metric == b.rows[i].metric);
        CHECK(a.rows[i].trial == b.rows[i].trial);
        CHECK(a.rows[i].value == b.rows[i].value);
    }
}

TEST_CASE("unguided single symmetric component inverts almost exactly by both methods") {
    auto cfg = small_config(6);
    cfg.mixture = GaussianMixtureModel({{1.0, Eigen::VectorXd::Zero(4), Eigen::VectorXd::Ones(4)}});
    cfg.guidance_sweep = {0.0};
    cfg.codec.quant_step = 0.0;
    const auto r = run_reconstruction_benchmark(cfg);
    for (const char* m : {"ddim", "fpi"}) {
        for (double v : r.values(m, "seed_l2", 0.0)) CHECK(v < 1e-2);
        for (double v : r.values(m, "recon_l2", 0.0)) CHECK(v < 1e-2);
    }
}

TEST_CASE("iteration sweep: one iteration reproduces DDIM, contraction audit is clean") {
    auto cfg = small_config(4);
    const auto r = run_iteration_sweep(cfg);
    CHECK(r.failures.empty());
    CHECK(r.values("fpi", "seed_l2_it1") == r.values("ddim", "seed_l2"));
    CHECK(r.values("fpi", "recon_psnr_it1") == r.values("ddim", "recon_psnr"));
    for (int n = 1; n <= 8; ++n) CHECK(r.values("fpi", "seed_l2_it" + std::to_string(n)).size() == 4);
    for (double v : r.values("fpi", "audit_violations")) CHECK(v == 0.0);
    double checked = 0.0;
    for (double v : r.values("fpi", "audit_steps_checked")) checked += v;
    CHECK(checked > 0.0);
    // Median residual shrinks over the first iterations.
    const double r1 = median(r.values("fpi", "residual_it1"));
    const double r3 = median(r.values("fpi", "residual_it3"));
    CHECK(r3 < r1);
}

TEST_CASE("lossless codec collapses the consistency distances") {
    auto cfg = small_config(6);
    cfg.codec.quant_step = 0.0;
    cfg.fixed_point.max_iterations = 200;
    cfg.fixed_point.residual_tolerance = 1e-10;
    const auto r = run_consistency_experiment(cfg);
    for (double v : r.values("fpi", "encode_l2")) CHECK(v < 1e-12);
    for (double v : r.values("fpi", "reinvert_l2")) CHECK(v < 1e-6);
}

TEST_CASE("consistency experiment is reproducible bit for bit") {
    const auto cfg = small_config(4);
    const auto a = run_consistency_experiment(cfg);
    const auto b = run_consistency_experiment(cfg);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(a.rows[i].value == b.rows[i].value);
}

TEST_CASE("interpolation endpoints reproduce the originals") {
    const auto cfg = small_config();
    const auto r = run_interpolation_experiment(cfg);
    CHECK(r.failures.empty());
    // Endpoint error is bounded by each method's own reconstruction error.
    for (double v : r.values("fpi", "endpoint_l2")) CHECK(v < 0.05);
    for (double v : r.values("ddim", "centroid_logdensity")) CHECK(std::isfinite(v));
    for (double v : r.values("fpi", "centroid_logdensity")) CHECK(std::isfinite(v));
    CHECK(interpolation_fractions().front() == 0.0);
    CHECK(interpolation_fractions().back() == 1.0);
}

TEST_CASE("SVG rendering") {
    PlotSpec spec{"t", "x", "y", true, {{"a", {1, 2, 3}, {1e-1, 1e-3, 0.0}}, {"b<c>", {1, 2}, {1, 2}}}};
    const std::string svg = render_svg(spec);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("b&lt;c&gt;") != std::string::npos);
    CHECK(svg.find("nan") == std::string::npos);
}

TEST_CASE("report files round trip through disk") {
    ExperimentReport r;
    r.rows.push_back({"s", "fpi", 4.0, "seed_l2", 0.125, 0, 0.5, "h"});
    const auto path = (std::filesystem::temp_directory_path() / "fpinv_report_test.csv").string();
    write_text_file(path, to_csv(r));
    const auto back = parse_csv(read_text_file(path));
    REQUIRE(back.size() == 1);
    CHECK(back[0].value == 0.125);
    std::filesystem::remove(path);
}
