#include "fpinv/seedspace.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fpinv {

namespace {
constexpr double kAntipodalTolerance = 1e-6;
}

SeedSet::SeedSet(std::vector<Latent> seeds) : seeds_(std::move(seeds)) {
    require(!seeds_.empty(), "seed set must not be empty");
    const auto d = seeds_.front().size();
    require(d > 0, "seed dimension must be positive");
    for (const auto& s : seeds_) {
        require(s.size() == d, "seed set dimension mismatch");
        require(s.allFinite(), "seed has non-finite entries");
    }
}

SlerpResult slerp(const Latent& a, const Latent& b, double u) {
    require(a.size() == b.size(), "slerp: dimension mismatch");
    require(u >= 0.0 && u <= 1.0, "slerp: u outside [0,1]");
    const double na = a.norm();
    const double nb = b.norm();
    require(na > 0.0 && nb > 0.0, "slerp: zero vector");
    if (u == 0.0) return {a, false};
    if (u == 1.0) return {b, false};

    const Latent ua = a / na;
    const Latent ub = b / nb;
    const double cosine = std::clamp(ua.dot(ub), -1.0, 1.0);
    const double theta = std::acos(cosine);
    if (std::numbers::pi - theta < kAntipodalTolerance) return {(1.0 - u) * a + u * b, true};

    const double norm = (1.0 - u) * na + u * nb;
    if (theta < 1e-12) return {ua * norm, false};
    const double s = std::sin(theta);
    const Latent dir = (std::sin((1.0 - u) * theta) / s) * ua + (std::sin(u * theta) / s) * ub;
    return {dir * (norm / dir.norm()), false};
}

Latent centroid(const SeedSet& seeds) {
    Latent sum = Latent::Zero(static_cast<Eigen::Index>(seeds.dimension()));
    double mean_norm = 0.0;
    for (const auto& s : seeds.seeds()) {
        const double n = s.norm();
        require(n > 0.0, "centroid: zero seed");
        sum += s;
        mean_norm += n;
    }
    mean_norm /= static_cast<double>(seeds.size());
    const double sum_norm = sum.norm();
    if (sum_norm <= 1e-12 * mean_norm * static_cast<double>(seeds.size()))
        throw NumericalError("centroid: mean direction is degenerate");
    return sum * (mean_norm / sum_norm);
}

}  // namespace fpinv
