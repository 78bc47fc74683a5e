#pragma once

#include <vector>

#include "fpinv/types.hpp"

namespace fpinv {

/// Non-empty collection of seeds sharing one dimension.
class SeedSet {
public:
    explicit SeedSet(std::vector<Latent> seeds);

    std::size_t size() const { return seeds_.size(); }
    std::size_t dimension() const { return static_cast<std::size_t>(seeds_.front().size()); }
    const std::vector<Latent>& seeds() const { return seeds_; }

private:
    std::vector<Latent> seeds_;
};

struct SlerpResult {
    Latent point;
    /// Set when a and b were (near-)antipodal and plain linear interpolation was used.
    bool linear_fallback = false;
};

/// Spherical interpolation of directions with linearly interpolated norms, so
/// ||slerp(a, b, u)|| = (1 - u) ||a|| + u ||b||.
SlerpResult slerp(const Latent& a, const Latent& b, double u);

/// Mean of the seeds rescaled to their mean norm. Throws NumericalError when
/// the mean direction cancels out.
Latent centroid(const SeedSet& seeds);

}  // namespace fpinv
