#include "lpo/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lpo {

void EnvConfig::validate() const {
    if (delta <= 0.0) throw std::invalid_argument("EnvConfig: delta must be > 0");
    if (t_ep < 1) throw std::invalid_argument("EnvConfig: t_ep must be >= 1");
    if (m_step < 1 || m_step > m_decode) {
        throw std::invalid_argument("EnvConfig: need 1 <= m_step <= m_decode");
    }
    if (m_total < m_step) {
        throw std::invalid_argument("EnvConfig: m_total must be >= m_step");
    }
    if (R < 1) throw std::invalid_argument("EnvConfig: R must be >= 1");
}

LatentEnv::LatentEnv(EnvConfig cfg, const VedModel& ved) : cfg_(cfg), ved_(&ved) {
    cfg_.validate();
    if (ved.R != cfg_.R) {
        throw std::invalid_argument("LatentEnv: VED latent dimension != EnvConfig.R");
    }
}

EpisodeState LatentEnv::reset(FrontierBuffer& buffer) const {
    return reset_from(buffer.top());
}

EpisodeState LatentEnv::reset_from(Sequence x0) const {
    EpisodeState st;
    st.s = encode(*ved_, x0);
    st.x = x0;
    st.x0 = std::move(x0);
    return st;
}

Transition LatentEnv::step(EpisodeState& state, std::span<const double> action) const {
    if (state.done) throw std::runtime_error("LatentEnv::step: episode is done");
    if (static_cast<int>(action.size()) != cfg_.R) {
        throw std::invalid_argument("LatentEnv::step: action dimension mismatch");
    }
    Transition tr;
    tr.s = state.s;
    tr.a.assign(action.begin(), action.end());
    bool clamped = false;
    for (auto& a : tr.a) {
        if (a > cfg_.delta) {
            a = cfg_.delta;
            clamped = true;
        } else if (a < -cfg_.delta) {
            a = -cfg_.delta;
            clamped = true;
        }
    }
    if (clamped) ++clamp_events_;

    tr.s_next.resize(tr.s.size());
    for (std::size_t j = 0; j < tr.s.size(); ++j) {
        // The decoder is only trained on the tanh range.
        tr.s_next[j] = std::clamp(tr.s[j] + tr.a[j], -1.0, 1.0);
    }
    tr.x_next = constrained_decode(*ved_, tr.s_next, state.x, cfg_.m_decode);
    tr.valid = cfg_.force_valid || hamming_distance(tr.x_next, state.x) <= cfg_.m_step;
    tr.done = hamming_distance(tr.x_next, state.x0) > cfg_.m_total ||
              state.t + 1 == cfg_.t_ep;

    state.s = tr.s_next;
    state.x = tr.x_next;
    state.t += 1;
    state.done = tr.done;
    return tr;
}

MutationEnv::MutationEnv(EnvConfig cfg, StateMode mode, const VedModel* ved,
                         Vocabulary vocab, int length)
    : cfg_(cfg), mode_(mode), ved_(ved), vocab_(std::move(vocab)), length_(length) {
    cfg_.validate();
    if (mode_ == StateMode::Latent && !ved_) {
        throw std::invalid_argument("MutationEnv: latent state mode needs a VED");
    }
}

int MutationEnv::state_dim() const {
    return mode_ == StateMode::Latent ? cfg_.R : length_ * vocab_.size();
}

std::vector<double> MutationEnv::observe(const Sequence& x) const {
    if (mode_ == StateMode::Latent) return encode(*ved_, x);
    return one_hot(x, vocab_.size());
}

EpisodeState MutationEnv::reset_from(Sequence x0) const {
    EpisodeState st;
    st.s = observe(x0);
    st.x = x0;
    st.x0 = std::move(x0);
    return st;
}

Transition MutationEnv::step(EpisodeState& state, std::span<const double> action) const {
    if (state.done) throw std::runtime_error("MutationEnv::step: episode is done");
    if (action.size() != 1) {
        throw std::invalid_argument("MutationEnv::step: expected one action index");
    }
    const auto idx = static_cast<long>(action[0]);
    if (idx < 0 || idx >= static_cast<long>(n_actions())) {
        throw std::invalid_argument("MutationEnv::step: action index out of range");
    }
    const int V = vocab_.size();
    Transition tr;
    tr.s = state.s;
    tr.a.assign(action.begin(), action.end());
    tr.x_next = state.x;
    tr.x_next[static_cast<std::size_t>(idx / V)] = static_cast<std::uint8_t>(idx % V);
    tr.s_next = observe(tr.x_next);
    tr.valid = true; // a single substitution never exceeds m_step
    tr.done = hamming_distance(tr.x_next, state.x0) > cfg_.m_total ||
              state.t + 1 == cfg_.t_ep;

    state.s = tr.s_next;
    state.x = tr.x_next;
    state.t += 1;
    state.done = tr.done;
    return tr;
}

void assign_rewards(std::vector<Trajectory>& trajectories, const Oracle& oracle,
                    OracleBudget& budget, FrontierBuffer* buffer) {
    std::vector<Sequence> batch;
    std::vector<Transition*> terminal;
    for (auto& traj : trajectories) {
        if (traj.empty() || !traj.back().done) {
            throw std::invalid_argument("assign_rewards: incomplete trajectory");
        }
        for (auto& tr : traj) {
            if (!tr.valid) {
                tr.reward = -1.0;
                tr.rewarded = true;
            } else if (tr.done) {
                batch.push_back(tr.x_next);
                terminal.push_back(&tr);
            } else {
                tr.reward = 0.0;
                tr.rewarded = true;
            }
        }
    }
    const auto values = oracle_query(oracle, batch, budget);
    for (std::size_t i = 0; i < terminal.size(); ++i) {
        terminal[i]->reward = values[i];
        terminal[i]->rewarded = true;
        if (buffer) buffer->update(terminal[i]->x_next, values[i]);
    }
}

void assign_dense_rewards(std::vector<Trajectory>& trajectories,
                          const Oracle& predictor) {
    for (auto& traj : trajectories) {
        for (auto& tr : traj) {
            tr.reward = tr.valid ? predictor.evaluate(tr.x_next) : -1.0;
            tr.rewarded = true;
        }
    }
}

} // namespace lpo
