#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lpo/core.hpp"
#include "lpo/nn.hpp"

namespace lpo {

// R-dimensional latent representation, each component in (-1, 1).
using LatentRep = std::vector<double>;

struct VedArch {
    int R = 16;
    int enc_hidden = 64;
    int dec_hidden = 64;
};

// Variant encoder-decoder. The encoder maps mutation-indicator features
// (one-hot(x) - one-hot(reference)) through a bias-free tanh MLP, so the
// reference encodes to the exact zero vector. The decoder is a shared
// per-position MLP over (z ++ position one-hot ++ reference symbol one-hot)
// emitting V logits per position.
struct VedModel {
    Sequence reference;
    Vocabulary vocab = Vocabulary::protein();
    int R = 16;
    Mlp encoder;
    Mlp decoder;

    int length() const { return static_cast<int>(reference.size()); }

    static VedModel make(Sequence reference, Vocabulary vocab, const VedArch& arch,
                         Rng& rng);
};

// 16 for short sequences (L <= 40), 32 otherwise.
int default_latent_dim(int L);

std::vector<double> mutation_features(const VedModel& model, const Sequence& seq);

LatentRep encode(const VedModel& model, const Sequence& seq);

// L x V logits, row-major by position.
std::vector<double> decode_logits(const VedModel& model, const LatentRep& z);

// Applies the top m_decode mutations (positions where the argmax disagrees
// with the template, ranked by softmax probability of the argmax symbol,
// ties by position index) onto the template.
Sequence constrained_decode(const VedModel& model, const LatentRep& z,
                            const Sequence& templ, int m_decode);

struct VedTrainConfig {
    int augment = 4;
    double expected_mutations = 3.0;
    double holdout_fraction = 0.05;
    int epochs = 32;
    int batch_size = 32;
    double lr = 1e-3;
    double weight_decay = 1e-5;
    std::uint64_t seed = 0;
    VedArch arch;
};

struct VedTrainReport {
    std::vector<double> epoch_loss;
    std::vector<double> epoch_train_accuracy; // top-1 over all positions
    double holdout_mutated_accuracy = 0.0;     // positions differing from reference
    double holdout_non_mutated_accuracy = 0.0; // positions equal to reference
    std::size_t train_rows = 0;
    std::size_t holdout_rows = 0;
};

std::pair<VedModel, VedTrainReport> train_ved(const Dataset& data,
                                              const VedTrainConfig& cfg);

nlohmann::json ved_to_json(const VedModel& model);
VedModel ved_from_json(const nlohmann::json& j);

} // namespace lpo
