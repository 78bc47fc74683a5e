#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace fpinv {

/// A point in the latent / seed space (z_t for any t, including the seed z_T).
using Latent = Eigen::VectorXd;

/// Observation-space vector produced by a codec decoder.
using Pixels = Eigen::VectorXd;

/// Precondition or configuration violation.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation produced non-finite values or hit a degenerate geometry.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline bool all_finite(const Eigen::Ref<const Eigen::VectorXd>& v) {
    return v.allFinite();
}

inline void require(bool condition, const std::string& message) {
    if (!condition) throw InvalidArgument(message);
}

}  // namespace fpinv
