#include "lpo/driver.hpp"

#include <algorithm>
#include <memory>
#include <stdexcept>
#include <unordered_map>

namespace lpo {

namespace {

// Deduplicate by sequence keeping the highest fitness, preserving order of
// first occurrence.
Dataset dedupe(const Dataset& data) {
    Dataset out;
    out.vocab = data.vocab;
    std::unordered_map<std::string, std::size_t> seen;
    for (const auto& e : data.entries) {
        const std::string key(reinterpret_cast<const char*>(e.seq.data()), e.seq.size());
        const auto it = seen.find(key);
        if (it == seen.end()) {
            seen.emplace(key, out.entries.size());
            out.entries.push_back(e);
        } else if (e.fitness > out.entries[it->second].fitness) {
            out.entries[it->second].fitness = e.fitness;
        }
    }
    return out;
}

// Cumulative set of everything scored so far, keyed by sequence with the
// best fitness kept. Insertion order breaks sort ties, so results stay
// deterministic.
struct Archive {
    std::vector<ScoredSequence> entries;
    std::unordered_map<std::string, std::size_t> index;

    void add(const Sequence& seq, double fitness) {
        const std::string key(reinterpret_cast<const char*>(seq.data()), seq.size());
        const auto [it, inserted] = index.emplace(key, entries.size());
        if (inserted) {
            entries.push_back({seq, fitness});
        } else if (fitness > entries[it->second].fitness) {
            entries[it->second].fitness = fitness;
        }
    }

    std::vector<ScoredSequence> top(std::size_t k) const {
        std::vector<ScoredSequence> all = entries;
        std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
            return a.fitness > b.fitness;
        });
        if (all.size() > k) all.resize(k);
        return all;
    }
};

struct RlSetup {
    std::unique_ptr<EnvBase> env;
    std::unique_ptr<PolicyBase> policy;
    std::unique_ptr<ValueFn> value;
};

RlSetup build_rl(const CampaignConfig& cfg, const VedModel* ved,
                 const Dataset& d_init) {
    RlSetup s;
    EnvConfig env_cfg = cfg.env;
    env_cfg.force_valid = cfg.no_calibration;
    const int L = static_cast<int>(d_init.length());
    const int V = d_init.vocab.size();
    if (cfg.state_action_mode == "lat/lat") {
        if (!ved) throw std::invalid_argument("latent mode needs a trained VED");
        s.env = std::make_unique<LatentEnv>(env_cfg, *ved);
        s.policy = std::make_unique<GaussianPolicy>(env_cfg.R, cfg.policy_hidden,
                                                    env_cfg.delta, cfg.ppo.lr,
                                                    derive_seed(cfg.seed, "policy"));
    } else if (cfg.state_action_mode == "lat/mut") {
        if (!ved) throw std::invalid_argument("latent mode needs a trained VED");
        s.env = std::make_unique<MutationEnv>(env_cfg, MutationEnv::StateMode::Latent,
                                              ved, d_init.vocab, L);
        s.policy = std::make_unique<DiscretePolicy>(env_cfg.R, L * V, cfg.policy_hidden,
                                                    cfg.ppo.lr,
                                                    derive_seed(cfg.seed, "policy"));
    } else if (cfg.state_action_mode == "seq/mut") {
        s.env = std::make_unique<MutationEnv>(env_cfg, MutationEnv::StateMode::OneHot,
                                              nullptr, d_init.vocab, L);
        s.policy = std::make_unique<DiscretePolicy>(L * V, L * V, cfg.policy_hidden,
                                                    cfg.ppo.lr,
                                                    derive_seed(cfg.seed, "policy"));
    } else {
        throw std::invalid_argument("unknown state_action_mode: " + cfg.state_action_mode);
    }
    s.value = std::make_unique<ValueFn>(s.env->state_dim(), cfg.policy_hidden,
                                        cfg.ppo.lr, derive_seed(cfg.seed, "value"));
    return s;
}

std::vector<ScoredSequence> buffer_set(const FrontierBuffer& buffer) {
    std::vector<ScoredSequence> out;
    for (const auto& e : buffer.entries()) out.push_back({e.seq, e.fitness});
    return out;
}

RoundRecord make_record(int round, char source,
                        const std::vector<ScoredSequence>& set, const Dataset& d_init,
                        const Dataset* d_star, const FrontierBuffer* buffer,
                        int oracle_calls, int episodes, bool capped) {
    RoundRecord rec;
    rec.round = round;
    rec.source = source;
    rec.metrics = compute_metrics(set, d_init, d_star);
    rec.oracle_calls = oracle_calls;
    rec.episodes = episodes;
    rec.capped = capped;
    if (buffer) {
        rec.epsilon = buffer->epsilon();
        rec.buffer_min = buffer->min_fitness();
        rec.buffer_max = buffer->max_fitness();
    }
    return rec;
}

// Shared driver: runs `rounds` RL rounds against the given reward oracle.
// When `budget` is null the reward source does not consume oracle budget
// (predictor rounds).
struct LoopState {
    RlSetup rl;
    FrontierBuffer buffer;
    std::unique_ptr<EpisodeSource> source;
    Archive archive;
    Rng env_rng;
    Rng update_rng;

    LoopState(const CampaignConfig& cfg, const VedModel* ved, const Dataset& d_init)
        : rl(build_rl(cfg, ved, d_init)),
          buffer(cfg.buffer, derive_seed(cfg.seed, "buffer")),
          env_rng(derive_seed(cfg.seed, "env")),
          update_rng(derive_seed(cfg.seed, "ppo")) {
        const Dataset unique = dedupe(d_init);
        const Dataset top = top_by_fitness(unique, cfg.buffer.capacity);
        if (top.size() < cfg.buffer.capacity) {
            throw std::invalid_argument(
                "campaign: fewer distinct initial sequences than buffer capacity");
        }
        buffer.initialize(top);
        for (const auto& e : top.entries) archive.add(e.seq, e.fitness);
        if (cfg.no_buffer) {
            std::vector<Sequence> pool;
            for (const auto& e : top.entries) pool.push_back(e.seq);
            source = std::make_unique<PoolSource>(std::move(pool),
                                                  derive_seed(cfg.seed, "pool"));
        } else {
            source = std::make_unique<BufferSource>(buffer);
        }
    }
};

} // namespace

CampaignResult run_active_learning(const CampaignConfig& cfg, const VedModel* ved,
                                   const Oracle& oracle, const Dataset& d_init,
                                   const Dataset* d_star) {
    cfg.ppo.validate();
    LoopState st(cfg, ved, d_init);
    CampaignResult result;
    OracleBudget budget;
    budget.calls_per_round = cfg.ppo.oracle_calls;

    auto current_set = [&]() {
        return cfg.no_buffer ? st.archive.top(cfg.buffer.capacity)
                             : buffer_set(st.buffer);
    };
    result.rounds.push_back(make_record(0, 'O', current_set(), d_init, d_star,
                                        cfg.no_buffer ? nullptr : &st.buffer, 0, 0,
                                        false));
    for (int round = 1; round <= cfg.ppo.rounds; ++round) {
        budget.next_round();
        auto collected = collect_round(*st.rl.policy, *st.rl.env, *st.source,
                                       cfg.ppo.oracle_calls, st.env_rng);
        assign_rewards(collected.trajectories, oracle, budget,
                       cfg.no_buffer ? nullptr : &st.buffer);
        for (const auto& traj : collected.trajectories) {
            const auto& last = traj.back();
            if (last.valid) st.archive.add(last.x_next, last.reward);
        }
        ppo_update(*st.rl.policy, *st.rl.value, collected.trajectories, cfg.ppo,
                   st.update_rng);
        result.rounds.push_back(make_record(
            round, 'O', current_set(), d_init, d_star,
            cfg.no_buffer ? nullptr : &st.buffer, budget.calls_used_this_round,
            collected.episodes, collected.capped));
        result.buffer_snapshots.push_back(st.buffer.entries());
        result.schedule.push_back('O');
    }
    result.final_set = current_set();
    result.total_oracle_calls = budget.total_calls;
    if (const auto* latent = dynamic_cast<const LatentEnv*>(st.rl.env.get())) {
        result.clamp_events = latent->clamp_events();
    }
    return result;
}

CampaignResult run_predictor_guided(const CampaignConfig& cfg, const VedModel* ved,
                                    const Oracle& predictor,
                                    const Oracle* eval_oracle, const Dataset& d_init,
                                    const Dataset* d_star) {
    cfg.ppo.validate();
    LoopState st(cfg, ved, d_init);
    CampaignResult result;
    auto current_set = [&]() {
        return cfg.no_buffer ? st.archive.top(cfg.buffer.capacity)
                             : buffer_set(st.buffer);
    };
    result.rounds.push_back(make_record(0, 'P', current_set(), d_init, d_star,
                                        cfg.no_buffer ? nullptr : &st.buffer, 0, 0,
                                        false));
    long timesteps = 0;
    int round = 0;
    while (timesteps < cfg.predictor_timesteps) {
        ++round;
        auto collected = collect_round(*st.rl.policy, *st.rl.env, *st.source,
                                       cfg.ppo.oracle_calls, st.env_rng);
        assign_dense_rewards(collected.trajectories, predictor);
        for (const auto& traj : collected.trajectories) {
            timesteps += static_cast<long>(traj.size());
            const auto& last = traj.back();
            if (last.valid) {
                if (!cfg.no_buffer) st.buffer.update(last.x_next, last.reward);
                st.archive.add(last.x_next, last.reward);
            }
        }
        ppo_update(*st.rl.policy, *st.rl.value, collected.trajectories, cfg.ppo,
                   st.update_rng);
        result.rounds.push_back(make_record(round, 'P', current_set(), d_init, d_star,
                                            cfg.no_buffer ? nullptr : &st.buffer, 0,
                                            collected.episodes, collected.capped));
        result.buffer_snapshots.push_back(st.buffer.entries());
        result.schedule.push_back('P');
    }
    result.final_set = current_set();
    if (eval_oracle) {
        for (auto& e : result.final_set) e.fitness = eval_oracle->evaluate(e.seq);
    }
    return result;
}

CampaignResult run_double_loop(const CampaignConfig& cfg, const VedModel* ved,
                               const Oracle& oracle, const Dataset& d_init,
                               const Dataset* d_star,
                               const PredictorConfig& predictor_cfg) {
    cfg.ppo.validate();
    LoopState st(cfg, ved, d_init);
    CampaignResult result;
    OracleBudget budget;
    budget.calls_per_round = cfg.ppo.oracle_calls;

    Dataset labeled; // cumulative oracle-labeled terminal sequences
    labeled.vocab = d_init.vocab;
    std::unique_ptr<SurrogatePredictor> predictor;

    auto current_set = [&]() {
        return cfg.no_buffer ? st.archive.top(cfg.buffer.capacity)
                             : buffer_set(st.buffer);
    };
    auto run_round = [&](int round, char source) {
        auto collected = collect_round(*st.rl.policy, *st.rl.env, *st.source,
                                       cfg.ppo.oracle_calls, st.env_rng);
        int used = 0;
        if (source == 'O') {
            budget.next_round();
            assign_rewards(collected.trajectories, oracle, budget,
                           cfg.no_buffer ? nullptr : &st.buffer);
            used = budget.calls_used_this_round;
            for (const auto& traj : collected.trajectories) {
                const auto& last = traj.back();
                if (last.valid) {
                    labeled.entries.push_back({last.x_next, last.reward});
                    st.archive.add(last.x_next, last.reward);
                }
            }
        } else {
            if (!predictor) throw std::logic_error("predictor round before training");
            // Predictor calls are free: reward through a throwaway budget that
            // never reaches the real oracle ledger.
            OracleBudget scratch;
            scratch.calls_per_round = collected.episodes + 1;
            assign_rewards(collected.trajectories, *predictor, scratch,
                           cfg.no_buffer ? nullptr : &st.buffer);
            for (const auto& traj : collected.trajectories) {
                const auto& last = traj.back();
                if (last.valid) st.archive.add(last.x_next, last.reward);
            }
        }
        ppo_update(*st.rl.policy, *st.rl.value, collected.trajectories, cfg.ppo,
                   st.update_rng);
        result.rounds.push_back(make_record(round, source, current_set(), d_init,
                                            d_star, cfg.no_buffer ? nullptr : &st.buffer,
                                            used, collected.episodes, collected.capped));
        result.buffer_snapshots.push_back(st.buffer.entries());
        result.schedule.push_back(source);
    };

    result.rounds.push_back(make_record(0, 'O', current_set(), d_init, d_star,
                                        cfg.no_buffer ? nullptr : &st.buffer, 0, 0,
                                        false));
    int round = 0;
    for (int outer = 0; outer < 5; ++outer) {
        run_round(++round, 'O');
        PredictorConfig pc = predictor_cfg;
        pc.seed = derive_seed(cfg.seed, "double-loop-predictor");
        predictor = std::make_unique<SurrogatePredictor>(train_predictor(dedupe(labeled), pc));
        run_round(++round, 'P');
        run_round(++round, 'P');
    }
    for (int k = 0; k < 10; ++k) run_round(++round, 'P');

    result.final_set = current_set();
    result.total_oracle_calls = budget.total_calls;
    return result;
}

} // namespace lpo
