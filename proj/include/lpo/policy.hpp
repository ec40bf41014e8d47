#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lpo/nn.hpp"
#include "lpo/rng.hpp"

namespace lpo {

// Stochastic policy with the gradient plumbing the PPO update needs. The
// `raw` vector is the policy-internal action representation stored in the
// transition (pre-squash Gaussian sample, or a category index); the env-facing
// action is derived from it.
class PolicyBase {
public:
    virtual ~PolicyBase() = default;

    virtual int state_dim() const = 0;

    // Samples an action; fills action (env-facing), raw, and logp.
    virtual void act(std::span<const double> state, Rng& rng,
                     std::vector<double>& action, std::vector<double>& raw,
                     double& logp) const = 0;

    virtual double logp(std::span<const double> state,
                        std::span<const double> raw) const = 0;

    // Gradient accumulation for one update step: begin_batch zeroes the
    // accumulator, accumulate adds weight * d(logp)/d(params), apply clips to
    // max_grad_norm and takes one Adam step.
    virtual void begin_batch() = 0;
    virtual double accumulate(std::span<const double> state,
                              std::span<const double> raw, double weight) = 0;
    // Adds weight * d(-entropy)/d(params); no-op where entropy has no simple form.
    virtual void accumulate_entropy(std::span<const double> state, double weight) = 0;
    virtual void apply(double max_grad_norm) = 0;

    virtual nlohmann::json to_json() const = 0;
    virtual bool finite() const = 0;
};

// Tanh-squashed diagonal Gaussian over [-delta, delta]^R with a state
// dependent mean and state-independent log standard deviations.
class GaussianPolicy : public PolicyBase {
public:
    GaussianPolicy(int R, int hidden, double delta, double lr, std::uint64_t seed);

    int state_dim() const override { return mean_net_.input_dim(); }
    void act(std::span<const double> state, Rng& rng, std::vector<double>& action,
             std::vector<double>& raw, double& logp) const override;
    double logp(std::span<const double> state,
                std::span<const double> raw) const override;

    void begin_batch() override;
    double accumulate(std::span<const double> state, std::span<const double> raw,
                      double weight) override;
    void accumulate_entropy(std::span<const double> state, double weight) override;
    void apply(double max_grad_norm) override;

    nlohmann::json to_json() const override;
    static GaussianPolicy from_json(const nlohmann::json& j, double lr);
    bool finite() const override;

    // Deterministic (mean) action, used for diagnostics.
    std::vector<double> mean_action(std::span<const double> state) const;
    double delta() const { return delta_; }

    // Log-density of an env-facing action under the squashed Gaussian; the
    // quadrature invariant test integrates this over the action range.
    double action_log_density(std::span<const double> state,
                              std::span<const double> action) const;

private:
    double logp_from_mean(std::span<const double> mean, std::span<const double> raw) const;

    Mlp mean_net_;
    std::vector<double> log_std_;
    double delta_;
    AdamState adam_;
    std::vector<double> log_std_m_, log_std_v_;
    MlpGrads grad_acc_;
    std::vector<double> log_std_grad_;
};

// Categorical policy over a fixed action set (used by the mutation-action
// ablation modes).
class DiscretePolicy : public PolicyBase {
public:
    DiscretePolicy(int state_dim, int n_actions, int hidden, double lr,
                   std::uint64_t seed);

    int state_dim() const override { return net_.input_dim(); }
    int n_actions() const { return net_.output_dim(); }

    void act(std::span<const double> state, Rng& rng, std::vector<double>& action,
             std::vector<double>& raw, double& logp) const override;
    double logp(std::span<const double> state,
                std::span<const double> raw) const override;

    void begin_batch() override;
    double accumulate(std::span<const double> state, std::span<const double> raw,
                      double weight) override;
    void accumulate_entropy(std::span<const double> state, double weight) override;
    void apply(double max_grad_norm) override;

    nlohmann::json to_json() const override;
    bool finite() const override;

private:
    Mlp net_;
    AdamState adam_;
    MlpGrads grad_acc_;
};

// State-value function V(s).
class ValueFn {
public:
    ValueFn(int state_dim, int hidden, double lr, std::uint64_t seed);

    double value(std::span<const double> state) const;

    void begin_batch();
    // Adds weight * dV/d(params) (weight = d(loss)/dV for the sample).
    void accumulate(std::span<const double> state, double weight);
    void apply(double max_grad_norm);

    nlohmann::json to_json() const;
    bool finite() const;

private:
    Mlp net_;
    AdamState adam_;
    MlpGrads grad_acc_;
};

} // namespace lpo
