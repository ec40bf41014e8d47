#include "lpo/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lpo/parallel.hpp"

namespace lpo {

std::vector<double> oracle_query(const Oracle& oracle,
                                 std::span<const Sequence> batch,
                                 OracleBudget& budget) {
    const int n = static_cast<int>(batch.size());
    if (budget.calls_used_this_round + n > budget.calls_per_round) {
        throw BudgetExceeded("oracle budget exceeded: " +
                             std::to_string(budget.calls_used_this_round) + "+" +
                             std::to_string(n) + " > " +
                             std::to_string(budget.calls_per_round));
    }
    std::vector<double> out(batch.size());
    parallel_for(batch.size(), [&](std::size_t i) { out[i] = oracle.evaluate(batch[i]); });
    budget.calls_used_this_round += n;
    budget.total_calls += n;
    return out;
}

NkLandscape NkLandscape::generate(int L, int K, const Vocabulary& vocab,
                                  std::uint64_t seed) {
    if (L < 1 || K < 0 || K > L - 1) {
        throw std::invalid_argument("NkLandscape: need 1 <= L and 0 <= K <= L-1");
    }
    NkLandscape land;
    land.L_ = L;
    land.K_ = K;
    land.vocab_ = vocab;
    land.seed_ = seed;
    const int V = vocab.size();
    std::size_t table_size = 1;
    for (int k = 0; k <= K; ++k) table_size *= static_cast<std::size_t>(V);

    Rng rng(derive_seed(seed, "nk-landscape"));
    land.neighbors_.resize(static_cast<std::size_t>(L));
    land.tables_.resize(static_cast<std::size_t>(L));
    for (int i = 0; i < L; ++i) {
        // K distinct positions != i, uniform without replacement.
        std::vector<int> pool;
        pool.reserve(static_cast<std::size_t>(L - 1));
        for (int j = 0; j < L; ++j)
            if (j != i) pool.push_back(j);
        auto& nb = land.neighbors_[static_cast<std::size_t>(i)];
        for (int k = 0; k < K; ++k) {
            const auto pick = rng.uniform_int(pool.size());
            nb.push_back(pool[pick]);
            pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
        }
        auto& tab = land.tables_[static_cast<std::size_t>(i)];
        tab.resize(table_size);
        for (auto& x : tab) x = rng.uniform();
    }
    return land;
}

double NkLandscape::evaluate(const Sequence& seq) const {
    if (static_cast<int>(seq.size()) != L_) {
        throw std::invalid_argument("nk_fitness: sequence length mismatch");
    }
    const int V = vocab_.size();
    double total = 0.0;
    for (int i = 0; i < L_; ++i) {
        std::size_t idx = seq[static_cast<std::size_t>(i)];
        for (int nb : neighbors_[static_cast<std::size_t>(i)]) {
            idx = idx * static_cast<std::size_t>(V) + seq[static_cast<std::size_t>(nb)];
        }
        total += tables_[static_cast<std::size_t>(i)][idx];
    }
    return total / static_cast<double>(L_);
}

std::vector<double> NkLandscape::evaluate_batch(std::span<const Sequence> batch) const {
    std::vector<double> out(batch.size());
    parallel_for(batch.size(), [&](std::size_t i) { out[i] = evaluate(batch[i]); });
    return out;
}

std::pair<Sequence, double> NkLandscape::global_optimum() const {
    const int V = vocab_.size();
    double count = 1.0;
    for (int i = 0; i < L_; ++i) {
        count *= V;
        if (count > 1e7) {
            throw std::invalid_argument("nk_global_optimum: V^L exceeds 1e7");
        }
    }
    Sequence cur(static_cast<std::size_t>(L_), 0);
    Sequence best = cur;
    double best_f = evaluate(cur);
    const auto n = static_cast<std::size_t>(count);
    for (std::size_t it = 1; it < n; ++it) {
        // odometer increment
        for (int i = 0; i < L_; ++i) {
            if (++cur[static_cast<std::size_t>(i)] < V) break;
            cur[static_cast<std::size_t>(i)] = 0;
        }
        const double f = evaluate(cur);
        if (f > best_f) {
            best_f = f;
            best = cur;
        }
    }
    return {best, best_f};
}

nlohmann::json NkLandscape::descriptor() const {
    return {{"format", "nk-v1"},
            {"L", L_},
            {"K", K_},
            {"vocabulary", vocab_.symbols},
            {"seed", seed_}};
}

NkLandscape NkLandscape::from_descriptor(const nlohmann::json& j) {
    if (j.value("format", "") != "nk-v1") {
        throw std::invalid_argument("NkLandscape: unknown descriptor format");
    }
    return generate(j.at("L").get<int>(), j.at("K").get<int>(),
                    Vocabulary(j.at("vocabulary").get<std::string>()),
                    j.at("seed").get<std::uint64_t>());
}

namespace {

std::string seq_key(const Sequence& s) {
    return std::string(reinterpret_cast<const char*>(s.data()), s.size());
}

} // namespace

TabularOracle::TabularOracle(const Dataset& data, MissPolicy policy)
    : policy_(policy) {
    if (data.empty()) throw std::invalid_argument("TabularOracle: empty dataset");
    length_ = data.length();
    for (const auto& e : data.entries) {
        if (e.seq.size() != length_) {
            throw std::invalid_argument("TabularOracle: ragged sequence lengths");
        }
        // Keep the highest fitness for repeated sequences.
        auto [it, inserted] = lookup_.emplace(seq_key(e.seq), e.fitness);
        if (!inserted) it->second = std::max(it->second, e.fitness);
    }
    // The nearest-neighbor scan works over the deduplicated table so repeated
    // rows cannot skew tie averages.
    entries_.reserve(lookup_.size());
    for (const auto& [key, fitness] : lookup_) {
        entries_.push_back({Sequence(key.begin(), key.end()), fitness});
    }
}

double TabularOracle::evaluate(const Sequence& seq) const {
    if (seq.size() != length_) {
        throw std::invalid_argument("TabularOracle: sequence length mismatch");
    }
    const auto it = lookup_.find(seq_key(seq));
    if (it != lookup_.end()) return it->second;
    if (policy_ == MissPolicy::Strict) {
        throw std::runtime_error("TabularOracle: sequence not in lookup table");
    }
    // 1-nearest-neighbor by Hamming distance, averaging ties.
    int best_d = static_cast<int>(length_) + 1;
    double sum = 0.0;
    int count = 0;
    for (const auto& e : entries_) {
        const int d = hamming_distance(seq, e.seq);
        if (d < best_d) {
            best_d = d;
            sum = e.fitness;
            count = 1;
        } else if (d == best_d) {
            sum += e.fitness;
            ++count;
        }
    }
    return sum / count;
}

Dataset load_csv_dataset(const std::string& path, const Vocabulary& vocab,
                         bool normalize) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read dataset file: " + path);
    Dataset out;
    out.vocab = vocab;
    std::string line;
    std::size_t row = 0;
    std::size_t length = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (row == 1) {
            if (line != "sequence,fitness") {
                throw std::runtime_error(path + ":1: expected header 'sequence,fitness'");
            }
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw std::runtime_error(path + ":" + std::to_string(row) +
                                     ": missing comma");
        }
        const std::string seq_str = line.substr(0, comma);
        const std::string fit_str = line.substr(comma + 1);
        Sequence seq;
        try {
            seq = from_string(seq_str, vocab);
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(row) + ": " + e.what());
        }
        if (length == 0) {
            length = seq.size();
        } else if (seq.size() != length) {
            throw std::runtime_error(path + ":" + std::to_string(row) +
                                     ": sequence length differs from previous rows");
        }
        double fitness = 0.0;
        std::size_t consumed = 0;
        try {
            fitness = std::stod(fit_str, &consumed);
        } catch (const std::exception&) {
            consumed = 0;
        }
        if (consumed == 0 || consumed != fit_str.size()) {
            throw std::runtime_error(path + ":" + std::to_string(row) +
                                     ": non-numeric fitness '" + fit_str + "'");
        }
        out.entries.push_back({std::move(seq), fitness});
    }
    if (normalize && !out.entries.empty()) {
        double lo = out.entries.front().fitness, hi = lo;
        for (const auto& e : out.entries) {
            lo = std::min(lo, e.fitness);
            hi = std::max(hi, e.fitness);
        }
        const double range = hi - lo;
        for (auto& e : out.entries) {
            // Zero-range files normalize to 0 by convention.
            e.fitness = range > 0.0 ? (e.fitness - lo) / range : 0.0;
        }
    }
    return out;
}

void save_csv_dataset(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset file: " + path);
    out << "sequence,fitness\n";
    out.precision(17);
    for (const auto& e : data.entries) {
        out << to_string(e.seq, data.vocab) << ',' << e.fitness << '\n';
    }
}

std::vector<double> one_hot(const Sequence& seq, int vocab_size) {
    std::vector<double> out(seq.size() * static_cast<std::size_t>(vocab_size), 0.0);
    for (std::size_t i = 0; i < seq.size(); ++i) {
        out[i * static_cast<std::size_t>(vocab_size) + seq[i]] = 1.0;
    }
    return out;
}

namespace {

std::vector<double> ranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j));
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}

} // namespace

std::optional<double> spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) return std::nullopt;
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va <= 0.0 || vb <= 0.0) return std::nullopt;
    return cov / std::sqrt(va * vb);
}

SurrogatePredictor::SurrogatePredictor(Mlp net, Vocabulary vocab, std::size_t length)
    : net_(std::move(net)), vocab_(std::move(vocab)), length_(length) {}

double SurrogatePredictor::evaluate(const Sequence& seq) const {
    if (seq.size() != length_) {
        throw std::invalid_argument("SurrogatePredictor: sequence length mismatch");
    }
    return forward(net_, one_hot(seq, vocab_.size()))[0];
}

SurrogatePredictor train_predictor(const Dataset& data, const PredictorConfig& cfg) {
    if (data.size() < 16) {
        throw std::invalid_argument("train_predictor: need at least 16 entries");
    }
    const int V = data.vocab.size();
    const int in_dim = static_cast<int>(data.length()) * V;
    Rng rng(derive_seed(cfg.seed, "predictor"));
    Mlp net = Mlp::make({in_dim, cfg.hidden, cfg.hidden, 1},
                        {Act::Relu, Act::Relu, Act::Identity}, true, rng);
    AdamState adam = AdamState::make(net, cfg.lr, cfg.weight_decay);

    // Train against standardized labels; raw fitness spans a narrow range and
    // the tiny residuals make the optimizer memorize instead of generalize.
    double label_mean = 0.0;
    for (const auto& e : data.entries) label_mean += e.fitness;
    label_mean /= static_cast<double>(data.size());
    double label_var = 0.0;
    for (const auto& e : data.entries) {
        label_var += (e.fitness - label_mean) * (e.fitness - label_mean);
    }
    const double label_sd =
        std::max(std::sqrt(label_var / static_cast<double>(data.size())), 1e-12);
    std::vector<double> labels(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        labels[i] = (data.entries[i].fitness - label_mean) / label_sd;
    }

    // Holdout split by shuffled index.
    const std::size_t n = data.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = n - 1; i > 0; --i) {
        std::swap(order[i], order[rng.uniform_int(i + 1)]);
    }
    const auto n_holdout =
        static_cast<std::size_t>(static_cast<double>(n) * cfg.holdout_fraction);
    std::vector<std::size_t> train_idx(order.begin(),
                                       order.end() - static_cast<std::ptrdiff_t>(n_holdout));
    std::vector<std::size_t> hold_idx(order.end() - static_cast<std::ptrdiff_t>(n_holdout),
                                      order.end());

    std::vector<std::vector<double>> inputs(n);
    for (std::size_t i = 0; i < n; ++i) inputs[i] = one_hot(data.entries[i].seq, V);

    PredictorTrainLog log;
    std::vector<MlpGrads> slot(static_cast<std::size_t>(cfg.batch_size));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = train_idx.size(); i > 1; --i) {
            std::swap(train_idx[i - 1], train_idx[rng.uniform_int(i)]);
        }
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < train_idx.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(start + static_cast<std::size_t>(cfg.batch_size), train_idx.size());
            const std::size_t bs = end - start;
            std::vector<double> losses(bs, 0.0);
            // Per-sample gradients land in private slots, reduced serially, so
            // results do not depend on the worker count.
            parallel_for(bs, [&](std::size_t b) {
                const std::size_t idx = train_idx[start + b];
                ForwardCache cache;
                const auto y = forward(net, inputs[idx], cache);
                const double err = y[0] - labels[idx];
                losses[b] = err * err;
                const double dout[1] = {2.0 * err / static_cast<double>(bs)};
                slot[b] = backward(net, cache, dout);
            });
            MlpGrads total = std::move(slot[0]);
            for (std::size_t b = 1; b < bs; ++b) total.add(slot[b]);
            adam_step(adam, net, total);
            for (double l : losses) epoch_loss += l;
        }
        log.epoch_loss.push_back(epoch_loss / static_cast<double>(train_idx.size()));
    }

    // Fold the label transform back into the final linear layer so evaluate()
    // and serialized checkpoints stay on the original fitness scale.
    Layer& last = net.layers.back();
    for (auto& w : last.w) w *= label_sd;
    for (auto& b : last.b) b = b * label_sd + label_mean;

    if (!hold_idx.empty()) {
        std::vector<double> pred(hold_idx.size()), truth(hold_idx.size());
        parallel_for(hold_idx.size(), [&](std::size_t i) {
            pred[i] = forward(net, inputs[hold_idx[i]])[0];
            truth[i] = data.entries[hold_idx[i]].fitness;
        });
        log.holdout_spearman = spearman(pred, truth);
    }

    SurrogatePredictor out(std::move(net), data.vocab, data.length());
    out.log() = std::move(log);
    return out;
}

} // namespace lpo
