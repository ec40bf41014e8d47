#include "lpo/ved.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lpo/parallel.hpp"

namespace lpo {

int default_latent_dim(int L) { return L <= 40 ? 16 : 32; }

VedModel VedModel::make(Sequence reference, Vocabulary vocab, const VedArch& arch,
                        Rng& rng) {
    VedModel m;
    m.R = arch.R;
    const int L = static_cast<int>(reference.size());
    const int V = vocab.size();
    m.reference = std::move(reference);
    m.vocab = std::move(vocab);
    // Bias-free tanh encoder keeps encode(reference) at exactly zero.
    m.encoder = Mlp::make({L * V, arch.enc_hidden, arch.R}, {Act::Tanh, Act::Tanh},
                          false, rng);
    m.decoder = Mlp::make({arch.R + L + V, arch.dec_hidden, V},
                          {Act::Relu, Act::Identity}, true, rng);
    return m;
}

std::vector<double> mutation_features(const VedModel& model, const Sequence& seq) {
    if (seq.size() != model.reference.size()) {
        throw std::invalid_argument("mutation_features: sequence length mismatch");
    }
    const int V = model.vocab.size();
    std::vector<double> f(seq.size() * static_cast<std::size_t>(V), 0.0);
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (seq[i] != model.reference[i]) {
            f[i * static_cast<std::size_t>(V) + seq[i]] = 1.0;
            f[i * static_cast<std::size_t>(V) + model.reference[i]] = -1.0;
        }
    }
    return f;
}

LatentRep encode(const VedModel& model, const Sequence& seq) {
    return forward(model.encoder, mutation_features(model, seq));
}

namespace {

std::vector<double> decoder_input(const VedModel& model, const LatentRep& z, int pos) {
    const int L = model.length();
    const int V = model.vocab.size();
    std::vector<double> in(static_cast<std::size_t>(model.R + L + V), 0.0);
    std::copy(z.begin(), z.end(), in.begin());
    in[static_cast<std::size_t>(model.R + pos)] = 1.0;
    in[static_cast<std::size_t>(model.R + L + model.reference[static_cast<std::size_t>(pos)])] = 1.0;
    return in;
}

} // namespace

std::vector<double> decode_logits(const VedModel& model, const LatentRep& z) {
    if (static_cast<int>(z.size()) != model.R) {
        throw std::invalid_argument("decode_logits: latent dimension mismatch");
    }
    const int L = model.length();
    const int V = model.vocab.size();
    std::vector<double> logits(static_cast<std::size_t>(L) * V);
    for (int pos = 0; pos < L; ++pos) {
        const auto out = forward(model.decoder, decoder_input(model, z, pos));
        std::copy(out.begin(), out.end(),
                  logits.begin() + static_cast<std::ptrdiff_t>(pos) * V);
    }
    return logits;
}

Sequence constrained_decode(const VedModel& model, const LatentRep& z,
                            const Sequence& templ, int m_decode) {
    if (static_cast<int>(templ.size()) != model.length()) {
        throw std::invalid_argument("constrained_decode: template length mismatch");
    }
    if (m_decode < 0) {
        throw std::invalid_argument("constrained_decode: m_decode must be >= 0");
    }
    const auto logits = decode_logits(model, z);
    const int L = model.length();
    const int V = model.vocab.size();
    struct Candidate {
        int pos;
        std::uint8_t symbol;
        double prob;
    };
    std::vector<Candidate> candidates;
    for (int pos = 0; pos < L; ++pos) {
        const std::span<const double> row(&logits[static_cast<std::size_t>(pos) * V],
                                          static_cast<std::size_t>(V));
        int arg = 0;
        for (int v = 1; v < V; ++v) {
            if (row[static_cast<std::size_t>(v)] > row[static_cast<std::size_t>(arg)]) arg = v;
        }
        if (arg != templ[static_cast<std::size_t>(pos)]) {
            const auto p = softmax(row);
            candidates.push_back({pos, static_cast<std::uint8_t>(arg),
                                  p[static_cast<std::size_t>(arg)]});
        }
    }
    // Highest probability first; ties by position index ascending.
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.prob > b.prob; });
    Sequence out = templ;
    const int n = std::min<int>(m_decode, static_cast<int>(candidates.size()));
    for (int i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(candidates[static_cast<std::size_t>(i)].pos)] =
            candidates[static_cast<std::size_t>(i)].symbol;
    }
    return out;
}

namespace {

struct SampleGrad {
    MlpGrads enc;
    MlpGrads dec;
    double loss = 0.0;
};

// Forward + backward for one sequence; CE averaged over positions.
SampleGrad ved_sample_grads(const VedModel& model, const Sequence& x) {
    const int L = model.length();
    const int V = model.vocab.size();
    SampleGrad g;
    ForwardCache enc_cache;
    const auto z = forward(model.encoder, mutation_features(model, x), enc_cache);
    std::vector<double> dz(z.size(), 0.0);
    g.dec = MlpGrads::zeros_like(model.decoder);
    std::vector<double> dlogits(static_cast<std::size_t>(V));
    const double scale = 1.0 / static_cast<double>(L);
    for (int pos = 0; pos < L; ++pos) {
        ForwardCache dec_cache;
        const auto logits = forward(model.decoder, decoder_input(model, z, pos), dec_cache);
        g.loss += scale * softmax_cross_entropy(logits, x[static_cast<std::size_t>(pos)],
                                                dlogits);
        for (auto& d : dlogits) d *= scale;
        const auto dg = backward(model.decoder, dec_cache, dlogits);
        g.dec.add(dg);
        for (int j = 0; j < static_cast<int>(z.size()); ++j) {
            dz[static_cast<std::size_t>(j)] += dg.dinput[static_cast<std::size_t>(j)];
        }
    }
    g.enc = backward(model.encoder, enc_cache, dz);
    return g;
}

struct AccCount {
    long mut_hit = 0, mut_total = 0;
    long non_hit = 0, non_total = 0;
};

AccCount reconstruction_accuracy(const VedModel& model,
                                 std::span<const Sequence> seqs) {
    const int L = model.length();
    const int V = model.vocab.size();
    std::vector<AccCount> slot(seqs.size());
    parallel_for(seqs.size(), [&](std::size_t i) {
        const auto logits = decode_logits(model, encode(model, seqs[i]));
        AccCount c;
        for (int pos = 0; pos < L; ++pos) {
            const double* row = &logits[static_cast<std::size_t>(pos) * V];
            int arg = 0;
            for (int v = 1; v < V; ++v) {
                if (row[v] > row[arg]) arg = v;
            }
            const bool hit = arg == seqs[i][static_cast<std::size_t>(pos)];
            if (seqs[i][static_cast<std::size_t>(pos)] ==
                model.reference[static_cast<std::size_t>(pos)]) {
                ++c.non_total;
                if (hit) ++c.non_hit;
            } else {
                ++c.mut_total;
                if (hit) ++c.mut_hit;
            }
        }
        slot[i] = c;
    });
    AccCount total;
    for (const auto& c : slot) {
        total.mut_hit += c.mut_hit;
        total.mut_total += c.mut_total;
        total.non_hit += c.non_hit;
        total.non_total += c.non_total;
    }
    return total;
}

} // namespace

std::pair<VedModel, VedTrainReport> train_ved(const Dataset& data,
                                              const VedTrainConfig& cfg) {
    if (data.empty()) throw std::invalid_argument("train_ved: empty dataset");

    Rng rng(derive_seed(cfg.seed, "ved-train"));
    VedModel model = VedModel::make(select_reference(data), data.vocab, cfg.arch, rng);

    // Holdout split happens before augmentation.
    const std::size_t n = data.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = n - 1; i > 0; --i) {
        std::swap(order[i], order[rng.uniform_int(i + 1)]);
    }
    const auto n_holdout =
        static_cast<std::size_t>(static_cast<double>(n) * cfg.holdout_fraction);
    std::vector<Sequence> holdout;
    for (std::size_t i = 0; i < n_holdout; ++i) {
        holdout.push_back(data.entries[order[i]].seq);
    }
    std::vector<Sequence> train;
    for (std::size_t i = n_holdout; i < n; ++i) {
        train.push_back(data.entries[order[i]].seq);
    }
    // Augmentation: each original contributes `augment` random mutants.
    const std::size_t originals = train.size();
    for (int a = 0; a < cfg.augment; ++a) {
        for (std::size_t i = 0; i < originals; ++i) {
            train.push_back(
                random_mutate(train[i], cfg.expected_mutations, data.vocab, rng));
        }
    }

    AdamState enc_adam = AdamState::make(model.encoder, cfg.lr, cfg.weight_decay);
    AdamState dec_adam = AdamState::make(model.decoder, cfg.lr, cfg.weight_decay);

    VedTrainReport report;
    report.train_rows = train.size();
    report.holdout_rows = holdout.size();

    std::vector<std::size_t> idx(train.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<SampleGrad> slot(static_cast<std::size_t>(cfg.batch_size));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = idx.size(); i > 1; --i) {
            std::swap(idx[i - 1], idx[rng.uniform_int(i)]);
        }
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < idx.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(start + static_cast<std::size_t>(cfg.batch_size), idx.size());
            const std::size_t bs = end - start;
            parallel_for(bs, [&](std::size_t b) {
                slot[b] = ved_sample_grads(model, train[idx[start + b]]);
            });
            MlpGrads enc_total = std::move(slot[0].enc);
            MlpGrads dec_total = std::move(slot[0].dec);
            epoch_loss += slot[0].loss;
            const double inv = 1.0 / static_cast<double>(bs);
            for (std::size_t b = 1; b < bs; ++b) {
                enc_total.add(slot[b].enc);
                dec_total.add(slot[b].dec);
                epoch_loss += slot[b].loss;
            }
            enc_total.scale(inv);
            dec_total.scale(inv);
            adam_step(enc_adam, model.encoder, enc_total);
            adam_step(dec_adam, model.decoder, dec_total);
        }
        report.epoch_loss.push_back(epoch_loss / static_cast<double>(idx.size()));
        // Accuracy tracked on a fixed prefix to keep the per-epoch cost flat.
        const std::span<const Sequence> acc_set(train.data(),
                                                std::min<std::size_t>(train.size(), 512));
        const auto acc = reconstruction_accuracy(model, acc_set);
        report.epoch_train_accuracy.push_back(
            static_cast<double>(acc.mut_hit + acc.non_hit) /
            static_cast<double>(acc.mut_total + acc.non_total));
    }

    if (!holdout.empty()) {
        const auto acc = reconstruction_accuracy(model, holdout);
        report.holdout_mutated_accuracy =
            acc.mut_total > 0
                ? static_cast<double>(acc.mut_hit) / static_cast<double>(acc.mut_total)
                : 1.0;
        report.holdout_non_mutated_accuracy =
            acc.non_total > 0
                ? static_cast<double>(acc.non_hit) / static_cast<double>(acc.non_total)
                : 1.0;
    }
    return {std::move(model), std::move(report)};
}

nlohmann::json ved_to_json(const VedModel& model) {
    return {{"format", "ved-v1"},
            {"vocabulary", model.vocab.symbols},
            {"reference", to_string(model.reference, model.vocab)},
            {"R", model.R},
            {"encoder", mlp_to_json(model.encoder)},
            {"decoder", mlp_to_json(model.decoder)}};
}

VedModel ved_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "ved-v1") {
        throw std::invalid_argument("ved_from_json: unknown checkpoint format");
    }
    VedModel m;
    m.vocab = Vocabulary(j.at("vocabulary").get<std::string>());
    m.reference = from_string(j.at("reference").get<std::string>(), m.vocab);
    m.R = j.at("R").get<int>();
    m.encoder = mlp_from_json(j.at("encoder"));
    m.decoder = mlp_from_json(j.at("decoder"));
    return m;
}

} // namespace lpo
