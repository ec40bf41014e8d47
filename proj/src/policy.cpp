#include "lpo/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace lpo {

namespace {

constexpr double kSquashEps = 1e-12;
constexpr double kHalfLog2Pi = 0.9189385332046727; // 0.5 * log(2*pi)

bool all_finite(const Mlp& net) {
    for (const auto& l : net.layers) {
        for (double w : l.w)
            if (!std::isfinite(w)) return false;
        for (double b : l.b)
            if (!std::isfinite(b)) return false;
    }
    return true;
}

} // namespace

GaussianPolicy::GaussianPolicy(int R, int hidden, double delta, double lr,
                               std::uint64_t seed)
    : delta_(delta) {
    Rng rng(derive_seed(seed, "gaussian-policy"));
    mean_net_ = Mlp::make({R, hidden, hidden, R}, {Act::Tanh, Act::Tanh, Act::Identity},
                          true, rng);
    log_std_.assign(static_cast<std::size_t>(R), 0.0);
    adam_ = AdamState::make(mean_net_, lr, 0.0);
    log_std_m_.assign(log_std_.size(), 0.0);
    log_std_v_.assign(log_std_.size(), 0.0);
    grad_acc_ = MlpGrads::zeros_like(mean_net_);
    log_std_grad_.assign(log_std_.size(), 0.0);
}

double GaussianPolicy::logp_from_mean(std::span<const double> mean,
                                      std::span<const double> raw) const {
    double lp = 0.0;
    for (std::size_t j = 0; j < raw.size(); ++j) {
        const double sigma = std::exp(log_std_[j]);
        const double z = (raw[j] - mean[j]) / sigma;
        const double t = std::tanh(raw[j]);
        lp += -0.5 * z * z - log_std_[j] - kHalfLog2Pi -
              std::log(delta_ * (1.0 - t * t) + kSquashEps);
    }
    return lp;
}

void GaussianPolicy::act(std::span<const double> state, Rng& rng,
                         std::vector<double>& action, std::vector<double>& raw,
                         double& logp) const {
    const auto mean = forward(mean_net_, state);
    raw.resize(mean.size());
    action.resize(mean.size());
    for (std::size_t j = 0; j < mean.size(); ++j) {
        raw[j] = mean[j] + std::exp(log_std_[j]) * rng.normal();
        action[j] = delta_ * std::tanh(raw[j]);
    }
    logp = logp_from_mean(mean, raw);
}

double GaussianPolicy::logp(std::span<const double> state,
                            std::span<const double> raw) const {
    return logp_from_mean(forward(mean_net_, state), raw);
}

void GaussianPolicy::begin_batch() {
    grad_acc_ = MlpGrads::zeros_like(mean_net_);
    std::fill(log_std_grad_.begin(), log_std_grad_.end(), 0.0);
}

double GaussianPolicy::accumulate(std::span<const double> state,
                                  std::span<const double> raw, double weight) {
    ForwardCache cache;
    const auto mean = forward(mean_net_, state, cache);
    std::vector<double> dmean(mean.size());
    for (std::size_t j = 0; j < mean.size(); ++j) {
        const double sigma = std::exp(log_std_[j]);
        const double z = (raw[j] - mean[j]) / sigma;
        dmean[j] = weight * z / sigma;
        log_std_grad_[j] += weight * (z * z - 1.0);
    }
    grad_acc_.add(backward(mean_net_, cache, dmean));
    return logp_from_mean(mean, raw);
}

void GaussianPolicy::accumulate_entropy(std::span<const double>, double weight) {
    // Pre-squash Gaussian entropy depends on log_std only; d(-H)/dlogsigma = -1.
    for (auto& g : log_std_grad_) g -= weight;
}

void GaussianPolicy::apply(double max_grad_norm) {
    double n2 = grad_acc_.squared_norm();
    for (double g : log_std_grad_) n2 += g * g;
    const double norm = std::sqrt(n2);
    if (norm > max_grad_norm && norm > 0.0) {
        const double s = max_grad_norm / norm;
        grad_acc_.scale(s);
        for (auto& g : log_std_grad_) g *= s;
    }
    adam_step(adam_, mean_net_, grad_acc_);
    const double bc1 = 1.0 - std::pow(adam_.beta1, static_cast<double>(adam_.step));
    const double bc2 = 1.0 - std::pow(adam_.beta2, static_cast<double>(adam_.step));
    for (std::size_t j = 0; j < log_std_.size(); ++j) {
        log_std_m_[j] = adam_.beta1 * log_std_m_[j] + (1.0 - adam_.beta1) * log_std_grad_[j];
        log_std_v_[j] = adam_.beta2 * log_std_v_[j] +
                        (1.0 - adam_.beta2) * log_std_grad_[j] * log_std_grad_[j];
        log_std_[j] -= adam_.lr * (log_std_m_[j] / bc1) /
                       (std::sqrt(log_std_v_[j] / bc2) + adam_.eps);
    }
}

nlohmann::json GaussianPolicy::to_json() const {
    return {{"format", "gaussian-policy-v1"},
            {"delta", delta_},
            {"log_std", log_std_},
            {"mean_net", mlp_to_json(mean_net_)}};
}

GaussianPolicy GaussianPolicy::from_json(const nlohmann::json& j, double lr) {
    if (j.value("format", "") != "gaussian-policy-v1") {
        throw std::invalid_argument("GaussianPolicy: unknown checkpoint format");
    }
    GaussianPolicy p(1, 1, j.at("delta").get<double>(), lr, 0);
    p.mean_net_ = mlp_from_json(j.at("mean_net"));
    p.log_std_ = j.at("log_std").get<std::vector<double>>();
    p.adam_ = AdamState::make(p.mean_net_, lr, 0.0);
    p.log_std_m_.assign(p.log_std_.size(), 0.0);
    p.log_std_v_.assign(p.log_std_.size(), 0.0);
    p.grad_acc_ = MlpGrads::zeros_like(p.mean_net_);
    p.log_std_grad_.assign(p.log_std_.size(), 0.0);
    return p;
}

bool GaussianPolicy::finite() const {
    if (!all_finite(mean_net_)) return false;
    for (double x : log_std_)
        if (!std::isfinite(x)) return false;
    return true;
}

std::vector<double> GaussianPolicy::mean_action(std::span<const double> state) const {
    auto mean = forward(mean_net_, state);
    for (auto& m : mean) m = delta_ * std::tanh(m);
    return mean;
}

double GaussianPolicy::action_log_density(std::span<const double> state,
                                          std::span<const double> action) const {
    std::vector<double> raw(action.size());
    for (std::size_t j = 0; j < action.size(); ++j) {
        const double y = std::clamp(action[j] / delta_, -1.0 + 1e-15, 1.0 - 1e-15);
        raw[j] = std::atanh(y);
    }
    return logp(state, raw);
}

DiscretePolicy::DiscretePolicy(int state_dim, int n_actions, int hidden, double lr,
                               std::uint64_t seed) {
    Rng rng(derive_seed(seed, "discrete-policy"));
    net_ = Mlp::make({state_dim, hidden, hidden, n_actions},
                     {Act::Tanh, Act::Tanh, Act::Identity}, true, rng);
    adam_ = AdamState::make(net_, lr, 0.0);
    grad_acc_ = MlpGrads::zeros_like(net_);
}

void DiscretePolicy::act(std::span<const double> state, Rng& rng,
                         std::vector<double>& action, std::vector<double>& raw,
                         double& logp) const {
    const auto logits = forward(net_, state);
    const auto p = softmax(logits);
    double r = rng.uniform();
    std::size_t idx = p.size() - 1;
    for (std::size_t i = 0; i < p.size(); ++i) {
        r -= p[i];
        if (r < 0.0) {
            idx = i;
            break;
        }
    }
    action.assign(1, static_cast<double>(idx));
    raw = action;
    logp = std::log(std::max(p[idx], 1e-300));
}

double DiscretePolicy::logp(std::span<const double> state,
                            std::span<const double> raw) const {
    const auto p = softmax(forward(net_, state));
    const auto idx = static_cast<std::size_t>(raw[0]);
    return std::log(std::max(p[idx], 1e-300));
}

void DiscretePolicy::begin_batch() { grad_acc_ = MlpGrads::zeros_like(net_); }

double DiscretePolicy::accumulate(std::span<const double> state,
                                  std::span<const double> raw, double weight) {
    ForwardCache cache;
    const auto logits = forward(net_, state, cache);
    const auto p = softmax(logits);
    const auto idx = static_cast<std::size_t>(raw[0]);
    std::vector<double> dlogits(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) {
        dlogits[j] = weight * ((j == idx ? 1.0 : 0.0) - p[j]);
    }
    grad_acc_.add(backward(net_, cache, dlogits));
    return std::log(std::max(p[idx], 1e-300));
}

void DiscretePolicy::accumulate_entropy(std::span<const double> state, double weight) {
    ForwardCache cache;
    const auto logits = forward(net_, state, cache);
    const auto p = softmax(logits);
    double entropy = 0.0;
    for (double pi : p) {
        if (pi > 0.0) entropy -= pi * std::log(pi);
    }
    std::vector<double> dlogits(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) {
        const double logp_j = std::log(std::max(p[j], 1e-300));
        dlogits[j] = weight * p[j] * (logp_j + entropy);
    }
    grad_acc_.add(backward(net_, cache, dlogits));
}

void DiscretePolicy::apply(double max_grad_norm) {
    clip_grad_norm(grad_acc_, max_grad_norm);
    adam_step(adam_, net_, grad_acc_);
}

nlohmann::json DiscretePolicy::to_json() const {
    return {{"format", "discrete-policy-v1"}, {"net", mlp_to_json(net_)}};
}

bool DiscretePolicy::finite() const { return all_finite(net_); }

ValueFn::ValueFn(int state_dim, int hidden, double lr, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "value-fn"));
    net_ = Mlp::make({state_dim, hidden, hidden, 1},
                     {Act::Tanh, Act::Tanh, Act::Identity}, true, rng);
    adam_ = AdamState::make(net_, lr, 0.0);
    grad_acc_ = MlpGrads::zeros_like(net_);
}

double ValueFn::value(std::span<const double> state) const {
    return forward(net_, state)[0];
}

void ValueFn::begin_batch() { grad_acc_ = MlpGrads::zeros_like(net_); }

void ValueFn::accumulate(std::span<const double> state, double weight) {
    ForwardCache cache;
    forward(net_, state, cache);
    const double dout[1] = {weight};
    grad_acc_.add(backward(net_, cache, dout));
}

void ValueFn::apply(double max_grad_norm) {
    clip_grad_norm(grad_acc_, max_grad_norm);
    adam_step(adam_, net_, grad_acc_);
}

nlohmann::json ValueFn::to_json() const {
    return {{"format", "value-fn-v1"}, {"net", mlp_to_json(net_)}};
}

bool ValueFn::finite() const { return all_finite(net_); }

} // namespace lpo
