#include "fpinv/denoiser.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "json.hpp"

namespace fpinv {

std::string to_string(const Condition& cond) {
    if (const auto* p = std::get_if<ComponentPrompt>(&cond)) return "component:" + std::to_string(p->component);
    return "unconditional";
}

GuidanceConfig::GuidanceConfig(double w) : scale(w) {
    require(std::isfinite(w) && w >= 0.0, "guidance scale must be finite and non-negative");
}

DenoiserModel::DenoiserModel(std::shared_ptr<const NoiseSchedule> schedule) : schedule_(std::move(schedule)) {
    require(schedule_ != nullptr, "denoiser needs a schedule");
}

Latent DenoiserModel::predict_noise(const Latent& z, int t, const Condition& cond) const {
    require(static_cast<std::size_t>(z.size()) == dimension(), "latent dimension mismatch");
    require(t >= 1 && t <= schedule_->total_steps(), "timestep " + std::to_string(t) + " outside [1, T]");
    validate_condition(cond);
    return predict_noise_impl(z, t, cond);
}

void DenoiserModel::validate_condition(const Condition&) const {}

Latent guided_noise(const DenoiserModel& model, const Latent& z, int t, const Condition& prompt,
                    const GuidanceConfig& guidance) {
    const Latent eps_u = model.predict_noise(z, t, Unconditional{});
    if (std::holds_alternative<Unconditional>(prompt)) return eps_u;
    const Latent eps_c = model.predict_noise(z, t, prompt);
    return eps_u + guidance.scale * (eps_c - eps_u);
}

// ---------------------------------------------------------------------------

GaussianMixtureModel::GaussianMixtureModel(std::vector<MixtureComponent> components)
    : components_(std::move(components)) {
    require(!components_.empty(), "mixture needs at least one component");
    dimension_ = static_cast<std::size_t>(components_.front().mean.size());
    require(dimension_ > 0, "mixture dimension must be positive");
    double total = 0.0;
    for (const auto& c : components_) {
        require(static_cast<std::size_t>(c.mean.size()) == dimension_ &&
                    static_cast<std::size_t>(c.variance.size()) == dimension_,
                "mixture component dimension mismatch");
        require(c.weight > 0.0, "mixture weights must be positive");
        require(c.mean.allFinite(), "mixture means must be finite");
        require(c.variance.allFinite() && (c.variance.array() > 0.0).all(), "mixture variances must be positive");
        total += c.weight;
    }
    require(std::abs(total - 1.0) <= 1e-12, "mixture weights must sum to 1");
}

GaussianMixtureModel GaussianMixtureModel::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("mixture json: ") + e.what());
    }
    try {
        const auto dim = j.at("dimension").get<std::size_t>();
        std::vector<MixtureComponent> comps;
        for (const auto& c : j.at("components")) {
            const auto mean = c.at("mean").get<std::vector<double>>();
            const auto var = c.at("variance").get<std::vector<double>>();
            require(mean.size() == dim && var.size() == dim, "mixture component length differs from dimension");
            comps.push_back({c.at("weight").get<double>(), Eigen::Map<const Eigen::VectorXd>(mean.data(), dim),
                             Eigen::Map<const Eigen::VectorXd>(var.data(), dim)});
        }
        return GaussianMixtureModel(std::move(comps));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("mixture json: ") + e.what());
    }
}

std::string GaussianMixtureModel::to_json() const {
    nlohmann::json j;
    j["dimension"] = dimension_;
    j["components"] = nlohmann::json::array();
    for (const auto& c : components_) {
        j["components"].push_back({{"weight", c.weight},
                                   {"mean", std::vector<double>(c.mean.begin(), c.mean.end())},
                                   {"variance", std::vector<double>(c.variance.begin(), c.variance.end())}});
    }
    return j.dump();
}

GaussianMixtureModel GaussianMixtureModel::default_scenario() {
    auto vec = [](std::initializer_list<double> v) {
        Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
        Eigen::Index i = 0;
        for (double x : v) out[i++] = x;
        return out;
    };
    return GaussianMixtureModel({
        {0.46, vec({0.4, 0.9, -0.7, -0.9}), vec({0.013, 0.045, 0.27, 0.03})},
        {0.405, vec({-0.3, -0.9, 0.3, 0.95}), vec({2.15, 0.5, 0.6, 0.63})},
        {0.135, vec({-0.35, -0.4, 1.5, 0.15}), vec({0.01, 0.006, 0.57, 0.001})},
    });
}

// ---------------------------------------------------------------------------

MixtureDenoiser::MixtureDenoiser(GaussianMixtureModel mixture, std::shared_ptr<const NoiseSchedule> schedule)
    : DenoiserModel(std::move(schedule)), mixture_(std::move(mixture)) {}

void MixtureDenoiser::validate_condition(const Condition& cond) const {
    if (const auto* p = std::get_if<ComponentPrompt>(&cond)) {
        require(p->component < mixture_.num_components(),
                "component prompt " + std::to_string(p->component) + " out of range");
    }
}

// Per-component log(pi_k) + log N(z; sqrt(ab) mu_k, ab sigma_k^2 + (1 - ab)).
// Components excluded by the condition get -inf.
Eigen::VectorXd MixtureDenoiser::log_joint(const Latent& z, double alpha_bar, const Condition& cond) const {
    const auto K = static_cast<Eigen::Index>(mixture_.num_components());
    const double sa = std::sqrt(alpha_bar);
    const double log_two_pi = std::log(2.0 * std::numbers::pi);
    const auto* prompt = std::get_if<ComponentPrompt>(&cond);

    Eigen::VectorXd out(K);
    for (Eigen::Index k = 0; k < K; ++k) {
        if (prompt && static_cast<std::size_t>(k) != prompt->component) {
            out[k] = -std::numeric_limits<double>::infinity();
            continue;
        }
        const auto& c = mixture_.component(static_cast<std::size_t>(k));
        const Eigen::ArrayXd s = alpha_bar * c.variance.array() + (1.0 - alpha_bar);
        const Eigen::ArrayXd diff = z.array() - sa * c.mean.array();
        const double log_w = prompt ? 0.0 : std::log(c.weight);
        out[k] = log_w - 0.5 * ((diff.square() / s).sum() + s.log().sum() + static_cast<double>(z.size()) * log_two_pi);
    }
    return out;
}

namespace {

double log_sum_exp(const Eigen::VectorXd& v) {
    const double m = v.maxCoeff();
    if (!std::isfinite(m)) return m;
    return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

Eigen::VectorXd MixtureDenoiser::responsibilities(const Latent& z, int t, const Condition& cond) const {
    require(static_cast<std::size_t>(z.size()) == dimension(), "latent dimension mismatch");
    require(t >= 0 && t <= schedule().total_steps(), "timestep outside [0, T]");
    validate_condition(cond);
    const Eigen::VectorXd lj = log_joint(z, schedule().alpha_bar(t), cond);
    return (lj.array() - log_sum_exp(lj)).exp().matrix();
}

double MixtureDenoiser::log_marginal_density(const Latent& z, int t, const Condition& cond) const {
    require(static_cast<std::size_t>(z.size()) == dimension(), "latent dimension mismatch");
    require(t >= 0 && t <= schedule().total_steps(), "timestep outside [0, T]");
    validate_condition(cond);
    return log_sum_exp(log_joint(z, schedule().alpha_bar(t), cond));
}

Latent MixtureDenoiser::posterior_mean(const Latent& z, int t, const Condition& cond) const {
    const Eigen::VectorXd r = responsibilities(z, t, cond);
    const double ab = schedule().alpha_bar(t);
    const double sa = std::sqrt(ab);
    Latent mean = Latent::Zero(z.size());
    for (Eigen::Index k = 0; k < r.size(); ++k) {
        if (r[k] == 0.0) continue;
        const auto& c = mixture_.component(static_cast<std::size_t>(k));
        const Eigen::ArrayXd s = ab * c.variance.array() + (1.0 - ab);
        const Eigen::ArrayXd gain = sa * c.variance.array() / s;
        mean += r[k] * (c.mean.array() + gain * (z.array() - sa * c.mean.array())).matrix();
    }
    return mean;
}

Latent MixtureDenoiser::predict_noise_impl(const Latent& z, int t, const Condition& cond) const {
    const double ab = schedule().alpha_bar(t);
    const double sa = std::sqrt(ab);
    const Eigen::VectorXd lj = log_joint(z, ab, cond);
    const Eigen::VectorXd r = (lj.array() - log_sum_exp(lj)).exp().matrix();

    // score = sum_k r_k * (sqrt(ab) mu_k - z) / s_k
    Eigen::ArrayXd score = Eigen::ArrayXd::Zero(z.size());
    for (Eigen::Index k = 0; k < r.size(); ++k) {
        if (r[k] == 0.0) continue;
        const auto& c = mixture_.component(static_cast<std::size_t>(k));
        const Eigen::ArrayXd s = ab * c.variance.array() + (1.0 - ab);
        score += r[k] * (sa * c.mean.array() - z.array()) / s;
    }
    return (-std::sqrt(1.0 - ab) * score).matrix();
}

double log_marginal_density(const MixtureDenoiser& model, const Latent& z, int t, const Condition& cond) {
    return model.log_marginal_density(z, t, cond);
}

// ---------------------------------------------------------------------------

AffineDenoiser::AffineDenoiser(std::size_t dimension, double slope, Eigen::VectorXd offset,
                               std::shared_ptr<const NoiseSchedule> schedule)
    : DenoiserModel(std::move(schedule)), dimension_(dimension), slope_(slope), offset_(std::move(offset)) {
    require(dimension_ > 0, "dimension must be positive");
    require(static_cast<std::size_t>(offset_.size()) == dimension_, "offset dimension mismatch");
    require(std::isfinite(slope_) && offset_.allFinite(), "affine stub coefficients must be finite");
}

AffineDenoiser::AffineDenoiser(std::size_t dimension, double slope, std::shared_ptr<const NoiseSchedule> schedule)
    : AffineDenoiser(dimension, slope, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension)),
                     std::move(schedule)) {}

Latent AffineDenoiser::predict_noise_impl(const Latent& z, int, const Condition&) const {
    return slope_ * z + offset_;
}

}  // namespace fpinv
