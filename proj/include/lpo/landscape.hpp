#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lpo/core.hpp"
#include "lpo/nn.hpp"

namespace lpo {

// Black-box fitness oracle with a per-round call budget enforced by
// oracle_query.
class Oracle {
public:
    virtual ~Oracle() = default;
    virtual double evaluate(const Sequence& seq) const = 0;
    virtual std::size_t length() const = 0;
};

struct BudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OracleBudget {
    int calls_per_round = 256;
    int calls_used_this_round = 0;
    int round_index = 0;
    long total_calls = 0;

    void next_round() {
        ++round_index;
        calls_used_this_round = 0;
    }
    int remaining() const { return calls_per_round - calls_used_this_round; }
};

// Evaluates a batch against the budget; throws BudgetExceeded before touching
// the oracle if the batch does not fit in the current round.
std::vector<double> oracle_query(const Oracle& oracle,
                                 std::span<const Sequence> batch,
                                 OracleBudget& budget);

// NK landscape with random neighborhoods. Tables regenerate deterministically
// from (L, K, V, seed), so the serialized descriptor is just those four values.
class NkLandscape : public Oracle {
public:
    static NkLandscape generate(int L, int K, const Vocabulary& vocab,
                                std::uint64_t seed);

    double evaluate(const Sequence& seq) const override;
    std::size_t length() const override { return static_cast<std::size_t>(L_); }

    int positions() const { return L_; }
    int epistasis() const { return K_; }
    const Vocabulary& vocab() const { return vocab_; }
    std::uint64_t seed() const { return seed_; }
    const std::vector<int>& neighbors_of(int i) const {
        return neighbors_[static_cast<std::size_t>(i)];
    }

    // Exact maximizer by enumeration; guarded to V^L <= 1e7.
    std::pair<Sequence, double> global_optimum() const;

    nlohmann::json descriptor() const;
    static NkLandscape from_descriptor(const nlohmann::json& j);

    // Parallel batch evaluation; bit-identical to a serial loop because each
    // sequence writes its own output slot.
    std::vector<double> evaluate_batch(std::span<const Sequence> batch) const;

private:
    NkLandscape() = default;
    int L_ = 0;
    int K_ = 0;
    Vocabulary vocab_ = Vocabulary::protein();
    std::uint64_t seed_ = 0;
    std::vector<std::vector<int>> neighbors_;      // per position, K entries
    std::vector<std::vector<double>> tables_;      // per position, V^(K+1) entries
};

class TabularOracle : public Oracle {
public:
    enum class MissPolicy { Strict, NearestNeighbor };

    TabularOracle(const Dataset& data, MissPolicy policy);

    double evaluate(const Sequence& seq) const override;
    std::size_t length() const override { return length_; }

private:
    MissPolicy policy_;
    std::size_t length_ = 0;
    std::vector<ScoredSequence> entries_;
    // keyed by raw index bytes
    std::unordered_map<std::string, double> lookup_;
};

// CSV with header "sequence,fitness". Throws with the offending row number on
// parse problems. normalize applies min-max over the loaded file.
Dataset load_csv_dataset(const std::string& path, const Vocabulary& vocab,
                         bool normalize);
void save_csv_dataset(const Dataset& data, const std::string& path);

struct PredictorConfig {
    int hidden = 64;      // two hidden layers of this width
    int epochs = 50;
    int batch_size = 32;
    double lr = 1e-3;
    double weight_decay = 1e-5;
    double holdout_fraction = 0.1;
    std::uint64_t seed = 0;
};

struct PredictorTrainLog {
    std::vector<double> epoch_loss;
    std::optional<double> holdout_spearman; // absent for degenerate labels
};

// MLP over one-hot sequence encoding, trained by MSE.
class SurrogatePredictor : public Oracle {
public:
    SurrogatePredictor(Mlp net, Vocabulary vocab, std::size_t length);

    double evaluate(const Sequence& seq) const override;
    std::size_t length() const override { return length_; }

    const PredictorTrainLog& log() const { return log_; }
    PredictorTrainLog& log() { return log_; }
    const Mlp& net() const { return net_; }

private:
    Mlp net_;
    Vocabulary vocab_;
    std::size_t length_;
    PredictorTrainLog log_;
};

SurrogatePredictor train_predictor(const Dataset& data, const PredictorConfig& cfg);

// Rank correlation; nullopt when either side has zero rank variance.
std::optional<double> spearman(std::span<const double> a, std::span<const double> b);

std::vector<double> one_hot(const Sequence& seq, int vocab_size);

} // namespace lpo
