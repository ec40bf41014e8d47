#pragma once

#include <span>
#include <vector>

#include "lpo/core.hpp"
#include "lpo/frontier_buffer.hpp"
#include "lpo/landscape.hpp"
#include "lpo/ved.hpp"

namespace lpo {

struct EnvConfig {
    double delta = 0.3;  // per-component action bound
    int t_ep = 6;        // max episode timesteps
    int m_step = 3;      // max mutations per step before a step is invalid
    int m_total = 15;    // max mutations per episode
    int m_decode = 8;    // constrained-decoding cap
    int R = 16;
    bool force_valid = false; // ablation: disable calibrating steps

    void validate() const;
};

struct EpisodeState {
    int t = 0;
    std::vector<double> s;
    Sequence x;  // current decoded template
    Sequence x0; // initial sequence
    bool done = false;
};

struct Transition {
    std::vector<double> s, a, s_next;
    std::vector<double> raw; // policy-internal action representation
    double logp_old = 0.0;
    Sequence x_next;
    bool valid = false;
    bool done = false;
    double reward = 0.0;
    bool rewarded = false;
};

using Trajectory = std::vector<Transition>;

class EnvBase {
public:
    virtual ~EnvBase() = default;
    virtual EpisodeState reset_from(Sequence x0) const = 0;
    // Advances the state and returns the recorded transition. Throws if the
    // state is done.
    virtual Transition step(EpisodeState& state,
                            std::span<const double> action) const = 0;
    virtual int state_dim() const = 0;
    virtual const EnvConfig& config() const = 0;
};

// The latent-space MDP of the optimization loop: states are latent vectors,
// actions bounded perturbations, sequences evolve by constrained decoding.
// Actions outside [-delta, delta] are clamped and counted.
class LatentEnv : public EnvBase {
public:
    LatentEnv(EnvConfig cfg, const VedModel& ved);

    EpisodeState reset(FrontierBuffer& buffer) const;
    EpisodeState reset_from(Sequence x0) const override;
    Transition step(EpisodeState& state, std::span<const double> action) const override;
    int state_dim() const override { return cfg_.R; }
    const EnvConfig& config() const override { return cfg_; }
    long clamp_events() const { return clamp_events_; }

private:
    EnvConfig cfg_;
    const VedModel* ved_;
    mutable long clamp_events_ = 0;
};

// Ablation env: one action is one substitution (position * V + symbol).
// States are either the VED latent of the current sequence (re-encoded each
// step) or its one-hot encoding.
class MutationEnv : public EnvBase {
public:
    enum class StateMode { Latent, OneHot };

    // ved may be null in OneHot mode.
    MutationEnv(EnvConfig cfg, StateMode mode, const VedModel* ved,
                Vocabulary vocab, int length);

    EpisodeState reset_from(Sequence x0) const override;
    Transition step(EpisodeState& state, std::span<const double> action) const override;
    int state_dim() const override;
    const EnvConfig& config() const override { return cfg_; }
    int n_actions() const { return length_ * vocab_.size(); }

private:
    std::vector<double> observe(const Sequence& x) const;

    EnvConfig cfg_;
    StateMode mode_;
    const VedModel* ved_;
    Vocabulary vocab_;
    int length_;
};

// Sparse reward assignment: -1 for invalid transitions (no oracle call),
// oracle value for valid terminal transitions (one call each, buffer updated),
// 0 otherwise. All trajectories must be complete.
void assign_rewards(std::vector<Trajectory>& trajectories, const Oracle& oracle,
                    OracleBudget& budget, FrontierBuffer* buffer);

// Predictor-guided variant: reward at every timestep from the predictor,
// invalid steps still get -1; no budget accounting.
void assign_dense_rewards(std::vector<Trajectory>& trajectories,
                          const Oracle& predictor);

} // namespace lpo
