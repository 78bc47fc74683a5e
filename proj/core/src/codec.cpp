#include "fpinv/codec.hpp"

#include <cmath>
#include <random>

namespace fpinv {

ToyCodec::ToyCodec(Eigen::MatrixXd decode_map, double quant_step)
    : decode_map_(std::move(decode_map)), quant_step_(quant_step) {
    require(decode_map_.cols() > 0, "codec latent_dim must be positive");
    require(decode_map_.rows() >= decode_map_.cols(), "codec needs pixel_dim >= latent_dim");
    require(decode_map_.allFinite(), "codec decode map must be finite");
    require(std::isfinite(quant_step_) && quant_step_ >= 0.0, "codec quant_step must be non-negative");

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(decode_map_, Eigen::ComputeThinU | Eigen::ComputeThinV);
    singular_values_ = svd.singularValues();
    const double smax = singular_values_[0];
    const double smin = singular_values_[singular_values_.size() - 1];
    require(smax > 0.0 && smin > 1e-10 * smax, "codec decode map must have full column rank");
    pseudo_inverse_ = svd.matrixV() * singular_values_.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
}

ToyCodec ToyCodec::random(std::size_t latent_dim, std::size_t pixel_dim, std::uint64_t rng_seed, double quant_step) {
    require(latent_dim > 0 && pixel_dim >= latent_dim, "codec needs 0 < latent_dim <= pixel_dim");
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(pixel_dim)));
    Eigen::MatrixXd d(static_cast<Eigen::Index>(pixel_dim), static_cast<Eigen::Index>(latent_dim));
    for (Eigen::Index c = 0; c < d.cols(); ++c)
        for (Eigen::Index r = 0; r < d.rows(); ++r) d(r, c) = normal(rng);
    return ToyCodec(std::move(d), quant_step);
}

Pixels ToyCodec::decode(const Latent& z) const {
    require(static_cast<std::size_t>(z.size()) == latent_dim(), "codec decode: latent dimension mismatch");
    return decode_map_ * z;
}

Latent ToyCodec::encode(const Pixels& x) const {
    require(static_cast<std::size_t>(x.size()) == pixel_dim(), "codec encode: pixel dimension mismatch");
    Latent z = pseudo_inverse_ * x;
    if (quant_step_ > 0.0) z = ((z / quant_step_).array().round() * quant_step_).matrix();
    return z;
}

ToyCodec ToyCodec::with_quant_step(double quant_step) const {
    return ToyCodec(decode_map_, quant_step);
}

double calibrate_quant_step(const ToyCodec& codec, std::span<const Latent> latents, double target_fraction) {
    require(!latents.empty(), "calibration needs latents");
    require(target_fraction > 0.0 && target_fraction < 1.0, "target_error_fraction must be in (0,1)");
    double mean_norm = 0.0;
    for (const auto& z : latents) mean_norm += z.norm();
    mean_norm /= static_cast<double>(latents.size());
    require(mean_norm > 0.0, "calibration latents are all zero");
    const double target = target_fraction * mean_norm;

    auto mean_error = [&](double q) {
        const ToyCodec c = codec.with_quant_step(q);
        double e = 0.0;
        for (const auto& z : latents) e += (c.roundtrip(z) - z).norm();
        return e / static_cast<double>(latents.size());
    };

    // Uniform rounding error has norm ~ q sqrt(d / 12); bracket around that.
    const double guess = target / std::sqrt(static_cast<double>(codec.latent_dim()) / 12.0);
    double lo = 0.0;
    double hi = 4.0 * guess;
    while (mean_error(hi) < target) hi *= 2.0;
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        (mean_error(mid) < target ? lo : hi) = mid;
    }
    return hi;
}

void CodecSpec::validate() const {
    require(latent_dim > 0, "codec.latent_dim must be positive");
    require(pixel_dim >= latent_dim, "codec.pixel_dim must be >= latent_dim");
    if (!has_fixed_step())
        require(target_error_fraction > 0.0 && target_error_fraction < 1.0,
                "codec.target_error_fraction must be in (0,1)");
}

}  // namespace fpinv
