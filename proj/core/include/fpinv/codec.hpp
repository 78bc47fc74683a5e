#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "fpinv/types.hpp"

#include <Eigen/Dense>

namespace fpinv {

/// Toy prompt-agnostic lossy autoencoder standing in for a VAE.
///
/// decode(z) = D z with a fixed full-column-rank m x d map D; encode(x) is the
/// least-squares latent pinv(D) x rounded to a uniform grid of step q. Neither
/// direction sees a Condition.
class ToyCodec {
public:
    ToyCodec(Eigen::MatrixXd decode_map, double quant_step);

    /// D with i.i.d. N(0, 1/m) entries drawn from `rng_seed`.
    static ToyCodec random(std::size_t latent_dim, std::size_t pixel_dim, std::uint64_t rng_seed,
                           double quant_step = 0.0);

    std::size_t latent_dim() const { return static_cast<std::size_t>(decode_map_.cols()); }
    std::size_t pixel_dim() const { return static_cast<std::size_t>(decode_map_.rows()); }
    double quant_step() const { return quant_step_; }
    const Eigen::MatrixXd& decode_map() const { return decode_map_; }
    /// Singular values of D, descending.
    const Eigen::VectorXd& singular_values() const { return singular_values_; }

    Pixels decode(const Latent& z) const;
    Latent encode(const Pixels& x) const;
    /// encode(decode(z)).
    Latent roundtrip(const Latent& z) const { return encode(decode(z)); }

    ToyCodec with_quant_step(double quant_step) const;

private:
    Eigen::MatrixXd decode_map_;
    Eigen::MatrixXd pseudo_inverse_;
    Eigen::VectorXd singular_values_;
    double quant_step_;
};

/// Smallest grid step whose mean round-trip error over `latents` reaches
/// `target_fraction` of their mean norm (bisection on the empirical error).
double calibrate_quant_step(const ToyCodec& codec, std::span<const Latent> latents, double target_fraction);

/// {latent_dim, pixel_dim, rng_seed, quant_step | target_error_fraction}
struct CodecSpec {
    std::size_t latent_dim = 4;
    std::size_t pixel_dim = 16;
    std::uint64_t rng_seed = 7;
    /// Exactly one of the two is used; quant_step wins when both are set.
    double quant_step = -1.0;
    double target_error_fraction = 0.05;

    bool has_fixed_step() const { return quant_step >= 0.0; }
    void validate() const;
};

}  // namespace fpinv
