#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lpo/env.hpp"
#include "lpo/eval.hpp"
#include "lpo/frontier_buffer.hpp"
#include "lpo/landscape.hpp"
#include "lpo/ppo.hpp"
#include "lpo/ved.hpp"

namespace lpo {

struct CampaignConfig {
    std::string method = "latprotrl";
    EnvConfig env;
    PpoConfig ppo;
    FrontierBuffer::Params buffer;
    bool no_buffer = false;
    bool no_calibration = false;
    std::string state_action_mode = "lat/lat"; // lat/lat | lat/mut | seq/mut
    long predictor_timesteps = 20000;          // single-round predictor mode
    int policy_hidden = 64;
    std::uint64_t seed = 0;
};

struct RoundRecord {
    int round = 0;
    char source = 'O'; // 'O' oracle-rewarded, 'P' predictor-rewarded
    Metrics metrics;
    int oracle_calls = 0;
    double epsilon = 0.0;
    double buffer_min = 0.0;
    double buffer_max = 0.0;
    int episodes = 0;
    bool capped = false;
};

struct CampaignResult {
    std::vector<RoundRecord> rounds; // index 0 is the pre-optimization state
    std::vector<ScoredSequence> final_set;
    std::vector<std::vector<FrontierBuffer::Entry>> buffer_snapshots;
    long total_oracle_calls = 0;
    std::string schedule;
    long clamp_events = 0;
};

// Algorithm drivers for the RL method. d_init is the task subset (initial
// states, d_init metric); d_star, when present, supplies the d_high metric.
CampaignResult run_active_learning(const CampaignConfig& cfg, const VedModel* ved,
                                   const Oracle& oracle, const Dataset& d_init,
                                   const Dataset* d_star);

// Single-round mode: the predictor rewards every timestep and the oracle, if
// given, only scores the final set.
CampaignResult run_predictor_guided(const CampaignConfig& cfg, const VedModel* ved,
                                    const Oracle& predictor,
                                    const Oracle* eval_oracle, const Dataset& d_init,
                                    const Dataset* d_star);

// Double-loop schedule: 5x (one oracle round, retrain the predictor on the
// cumulative oracle-labeled set, two predictor rounds), then 10 predictor
// rounds.
CampaignResult run_double_loop(const CampaignConfig& cfg, const VedModel* ved,
                               const Oracle& oracle, const Dataset& d_init,
                               const Dataset* d_star,
                               const PredictorConfig& predictor_cfg);

} // namespace lpo
