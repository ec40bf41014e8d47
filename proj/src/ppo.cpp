#include "lpo/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lpo {

void PpoConfig::validate() const {
    if (!(clip > 0.0 && clip < 1.0)) throw std::invalid_argument("PpoConfig: clip in (0,1)");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("PpoConfig: gamma in (0,1]");
    if (!(lam > 0.0 && lam <= 1.0)) throw std::invalid_argument("PpoConfig: lam in (0,1]");
    if (update_epochs < 1 || minibatch < 1 || rounds < 0 || oracle_calls < 1) {
        throw std::invalid_argument("PpoConfig: bad counts");
    }
}

std::pair<std::vector<double>, std::vector<double>> compute_gae(
    const Trajectory& traj, const ValueFn& value, double gamma, double lam) {
    const std::size_t n = traj.size();
    std::vector<double> adv(n, 0.0), ret(n, 0.0);
    double running = 0.0;
    for (std::size_t k = n; k-- > 0;) {
        const auto& tr = traj[k];
        if (!tr.rewarded) throw std::invalid_argument("compute_gae: unrewarded transition");
        const double v = value.value(tr.s);
        const double v_next = tr.done ? 0.0 : value.value(tr.s_next);
        const double delta = tr.reward + gamma * v_next - v;
        running = delta + gamma * lam * (tr.done ? 0.0 : running);
        adv[k] = running;
        ret[k] = running + v;
    }
    return {std::move(adv), std::move(ret)};
}

LossReport ppo_update(PolicyBase& policy, ValueFn& value,
                      const std::vector<Trajectory>& trajectories,
                      const PpoConfig& cfg, Rng& rng) {
    cfg.validate();
    struct Sample {
        const Transition* tr;
        double adv;
        double ret;
    };
    std::vector<Sample> samples;
    for (const auto& traj : trajectories) {
        const auto [adv, ret] = compute_gae(traj, value, cfg.gamma, cfg.lam);
        for (std::size_t k = 0; k < traj.size(); ++k) {
            samples.push_back({&traj[k], adv[k], ret[k]});
        }
    }
    if (samples.empty()) return {};

    // Normalize advantages over the full batch.
    double mean = 0.0;
    for (const auto& s : samples) mean += s.adv;
    mean /= static_cast<double>(samples.size());
    double var = 0.0;
    for (const auto& s : samples) var += (s.adv - mean) * (s.adv - mean);
    const double std_dev = std::sqrt(var / static_cast<double>(samples.size()));
    const double denom = std_dev < 1e-8 ? 1.0 : std_dev;
    for (auto& s : samples) s.adv = (s.adv - mean) / denom;

    LossReport report;
    long stat_count = 0;
    double kl_sum = 0.0, clip_sum = 0.0, ploss_sum = 0.0, vloss_sum = 0.0;

    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < cfg.update_epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[rng.uniform_int(i)]);
        }
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.minibatch)) {
            const std::size_t end =
                std::min(start + static_cast<std::size_t>(cfg.minibatch), order.size());
            const std::size_t bs = end - start;
            const double inv_bs = 1.0 / static_cast<double>(bs);

            policy.begin_batch();
            value.begin_batch();
            for (std::size_t i = start; i < end; ++i) {
                const auto& s = samples[order[i]];
                const double logp_new = policy.logp(s.tr->s, s.tr->raw);
                const double ratio = std::exp(logp_new - s.tr->logp_old);
                const double unclipped = ratio * s.adv;
                const double clipped =
                    std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip) * s.adv;
                double dlogp = 0.0;
                if (unclipped <= clipped) {
                    dlogp = s.adv * ratio; // objective gradient wrt logp
                } // else: clip active, zero gradient from this sample
                if (dlogp != 0.0) {
                    policy.accumulate(s.tr->s, s.tr->raw, -dlogp * inv_bs);
                }
                if (cfg.ent_coef > 0.0) {
                    policy.accumulate_entropy(s.tr->s, cfg.ent_coef * inv_bs);
                }
                const double v = value.value(s.tr->s);
                const double verr = v - s.ret;
                value.accumulate(s.tr->s, cfg.vf_coef * 2.0 * verr * inv_bs);

                ploss_sum -= std::min(unclipped, clipped);
                vloss_sum += cfg.vf_coef * verr * verr;
                kl_sum += s.tr->logp_old - logp_new;
                clip_sum += std::abs(ratio - 1.0) > cfg.clip ? 1.0 : 0.0;
                ++stat_count;
                if (!std::isfinite(logp_new) || !std::isfinite(v)) {
                    throw std::runtime_error("ppo_update: non-finite loss term");
                }
            }
            policy.apply(cfg.max_grad_norm);
            value.apply(cfg.max_grad_norm);
            if (!policy.finite() || !value.finite()) {
                throw std::runtime_error("ppo_update: parameters became non-finite");
            }
        }
    }
    report.policy_loss = ploss_sum / static_cast<double>(stat_count);
    report.value_loss = vloss_sum / static_cast<double>(stat_count);
    report.approx_kl = kl_sum / static_cast<double>(stat_count);
    report.clip_fraction = clip_sum / static_cast<double>(stat_count);
    return report;
}

PoolSource::PoolSource(std::vector<Sequence> pool, std::uint64_t seed)
    : pool_(std::move(pool)), rng_(seed) {
    if (pool_.empty()) throw std::invalid_argument("PoolSource: empty pool");
}

Sequence PoolSource::next_initial() { return pool_[rng_.uniform_int(pool_.size())]; }

CollectResult collect_round(const PolicyBase& policy, const EnvBase& env,
                            EpisodeSource& source, int target_episodes, Rng& rng) {
    CollectResult result;
    const int cap = 10 * target_episodes;
    std::vector<double> action, raw;
    double logp = 0.0;
    while (result.valid_terminal < target_episodes) {
        if (result.episodes >= cap) {
            result.capped = true;
            break;
        }
        auto state = env.reset_from(source.next_initial());
        Trajectory traj;
        while (!state.done) {
            policy.act(state.s, rng, action, raw, logp);
            auto tr = env.step(state, action);
            tr.raw = raw;
            tr.logp_old = logp;
            traj.push_back(std::move(tr));
        }
        if (traj.back().valid) ++result.valid_terminal;
        ++result.episodes;
        result.trajectories.push_back(std::move(traj));
    }
    return result;
}

} // namespace lpo
