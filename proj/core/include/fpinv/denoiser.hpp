#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "fpinv/schedule.hpp"
#include "fpinv/types.hpp"

namespace fpinv {

/// No prompt: the denoiser models the full data distribution.
struct Unconditional {
    bool operator==(const Unconditional&) const = default;
};

/// Prompt analog: restricts the data distribution to one mixture component.
struct ComponentPrompt {
    std::size_t component = 0;
    bool operator==(const ComponentPrompt&) const = default;
};

using Condition = std::variant<Unconditional, ComponentPrompt>;

std::string to_string(const Condition& cond);

/// Classifier-free guidance scale; 1 is pure conditional, 0 pure unconditional.
struct GuidanceConfig {
    double scale = 1.0;

    explicit GuidanceConfig(double w = 1.0);
};

/// Conditional noise predictor eps(z_t, t, p) bound to a noise schedule.
///
/// Implementations must be pure: the same arguments always give the same
/// prediction, and concurrent calls need no synchronization.
class DenoiserModel {
public:
    explicit DenoiserModel(std::shared_ptr<const NoiseSchedule> schedule);
    virtual ~DenoiserModel() = default;

    virtual std::size_t dimension() const = 0;

    /// Predicted noise at latent `z`, timestep t in [1, T].
    Latent predict_noise(const Latent& z, int t, const Condition& cond) const;

    const NoiseSchedule& schedule() const { return *schedule_; }
    const std::shared_ptr<const NoiseSchedule>& schedule_ptr() const { return schedule_; }

protected:
    virtual Latent predict_noise_impl(const Latent& z, int t, const Condition& cond) const = 0;
    virtual void validate_condition(const Condition& cond) const;

private:
    std::shared_ptr<const NoiseSchedule> schedule_;
};

/// eps_u + w * (eps_c - eps_u). An Unconditional prompt yields eps_u.
Latent guided_noise(const DenoiserModel& model, const Latent& z, int t, const Condition& prompt,
                    const GuidanceConfig& guidance);

struct MixtureComponent {
    double weight = 0.0;
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;  // diagonal covariance
};

/// Diagonal-covariance Gaussian mixture: the toy data distribution of z_0.
class GaussianMixtureModel {
public:
    explicit GaussianMixtureModel(std::vector<MixtureComponent> components);

    std::size_t dimension() const { return dimension_; }
    std::size_t num_components() const { return components_.size(); }
    const MixtureComponent& component(std::size_t k) const { return components_.at(k); }
    const std::vector<MixtureComponent>& components() const { return components_; }

    /// {"dimension": d, "components": [{"weight", "mean", "variance"}]}
    static GaussianMixtureModel from_json(const std::string& text);
    std::string to_json() const;

    /// The built-in 4-D, 3-component scenario. Component 2 is a sharp concept
    /// (three dims with variance <= 0.01) embedded near broader components.
    static GaussianMixtureModel default_scenario();

private:
    std::size_t dimension_ = 0;
    std::vector<MixtureComponent> components_;
};

/// Exact posterior-mean noise predictor for a Gaussian-mixture data
/// distribution. At timestep t the marginal is
///   sum_k pi_k N(sqrt(ab_t) mu_k, ab_t sigma_k^2 + (1 - ab_t) I)
/// and eps*(z) = -sqrt(1 - ab_t) * grad log p_t(z). A ComponentPrompt(k)
/// restricts the marginal to component k.
class MixtureDenoiser final : public DenoiserModel {
public:
    MixtureDenoiser(GaussianMixtureModel mixture, std::shared_ptr<const NoiseSchedule> schedule);

    std::size_t dimension() const override { return mixture_.dimension(); }
    const GaussianMixtureModel& mixture() const { return mixture_; }

    /// Posterior component weights of the time-t marginal (log-sum-exp normalized).
    /// For a ComponentPrompt the result is one-hot.
    Eigen::VectorXd responsibilities(const Latent& z, int t, const Condition& cond) const;

    /// Exact log density of z under the time-t marginal; t = 0 is the data distribution.
    double log_marginal_density(const Latent& z, int t, const Condition& cond) const;

    /// Posterior mean E[z_0 | z_t = z, cond].
    Latent posterior_mean(const Latent& z, int t, const Condition& cond) const;

protected:
    Latent predict_noise_impl(const Latent& z, int t, const Condition& cond) const override;
    void validate_condition(const Condition& cond) const override;

private:
    Eigen::VectorXd log_joint(const Latent& z, double alpha_bar, const Condition& cond) const;

    GaussianMixtureModel mixture_;
};

/// Free-function form of MixtureDenoiser::log_marginal_density.
double log_marginal_density(const MixtureDenoiser& model, const Latent& z, int t, const Condition& cond);

/// eps(z) = slope * z + offset, ignoring t and the condition. Covers the zero
/// predictor (slope 0, offset 0), constant predictors and linear stubs whose
/// fixed points have closed forms.
class AffineDenoiser final : public DenoiserModel {
public:
    AffineDenoiser(std::size_t dimension, double slope, Eigen::VectorXd offset,
                   std::shared_ptr<const NoiseSchedule> schedule);
    AffineDenoiser(std::size_t dimension, double slope, std::shared_ptr<const NoiseSchedule> schedule);

    std::size_t dimension() const override { return dimension_; }
    double slope() const { return slope_; }
    const Eigen::VectorXd& offset() const { return offset_; }

protected:
    Latent predict_noise_impl(const Latent& z, int t, const Condition& cond) const override;
    void validate_condition(const Condition&) const override {}

private:
    std::size_t dimension_;
    double slope_;
    Eigen::VectorXd offset_;
};

}  // namespace fpinv
