#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lpo/env.hpp"
#include "lpo/policy.hpp"
#include "lpo/rng.hpp"

namespace lpo {

struct PpoConfig {
    double clip = 0.2;
    double gamma = 0.99;
    double lam = 0.95;
    int update_epochs = 10;
    int minibatch = 64;
    double lr = 3e-4;
    double vf_coef = 0.5;
    double ent_coef = 0.0;
    double max_grad_norm = 0.5;
    int rounds = 15;          // E
    int oracle_calls = 256;   // N_oracle_calls per round

    void validate() const;
};

// delta_t = r_t + gamma * V(s_{t+1}) * (1 - done_t) - V(s_t);
// A_t = sum_k (gamma*lam)^k delta_{t+k}; returns_t = A_t + V(s_t).
std::pair<std::vector<double>, std::vector<double>> compute_gae(
    const Trajectory& traj, const ValueFn& value, double gamma, double lam);

struct LossReport {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double approx_kl = 0.0;
    double clip_fraction = 0.0;
};

// Clipped-surrogate PPO update over all transitions of the trajectories.
// Advantages are normalized over the full batch before the epochs run.
LossReport ppo_update(PolicyBase& policy, ValueFn& value,
                      const std::vector<Trajectory>& trajectories,
                      const PpoConfig& cfg, Rng& rng);

// Supplies episode start sequences: the frontier buffer in the standard
// setup, a fixed pool in the no-buffer ablation.
class EpisodeSource {
public:
    virtual ~EpisodeSource() = default;
    virtual Sequence next_initial() = 0;
};

class BufferSource : public EpisodeSource {
public:
    explicit BufferSource(FrontierBuffer& buffer) : buffer_(&buffer) {}
    Sequence next_initial() override { return buffer_->top(); }

private:
    FrontierBuffer* buffer_;
};

class PoolSource : public EpisodeSource {
public:
    PoolSource(std::vector<Sequence> pool, std::uint64_t seed);
    Sequence next_initial() override;

private:
    std::vector<Sequence> pool_;
    Rng rng_;
};

struct CollectResult {
    std::vector<Trajectory> trajectories;
    int episodes = 0;
    int valid_terminal = 0;
    bool capped = false; // hit the 10x liveness guard
};

// Runs episodes until the valid-terminal count reaches target_episodes (or
// the 10x attempt cap trips). Rewards are not assigned here.
CollectResult collect_round(const PolicyBase& policy, const EnvBase& env,
                            EpisodeSource& source, int target_episodes, Rng& rng);

} // namespace lpo
