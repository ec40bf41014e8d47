#include "lpo/frontier_buffer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

namespace lpo {

FrontierBuffer::FrontierBuffer(Params params, std::uint64_t seed)
    : params_(params), rng_(seed), epsilon_(params.epsilon_init) {}

void FrontierBuffer::initialize(const Dataset& data) {
    // Deduplicate by sequence, keeping the highest fitness.
    std::unordered_map<std::string, std::size_t> seen;
    std::vector<Entry> pool;
    for (const auto& e : data.entries) {
        const std::string key(reinterpret_cast<const char*>(e.seq.data()),
                              e.seq.size());
        const auto it = seen.find(key);
        if (it == seen.end()) {
            seen.emplace(key, pool.size());
            pool.push_back({e.seq, e.fitness, 1});
        } else if (e.fitness > pool[it->second].fitness) {
            pool[it->second].fitness = e.fitness;
        }
    }
    if (pool.size() < params_.capacity) {
        throw std::invalid_argument(
            "FrontierBuffer::initialize: fewer distinct sequences than capacity");
    }
    // Sample without replacement.
    entries_.clear();
    for (std::size_t k = 0; k < params_.capacity; ++k) {
        const auto pick = rng_.uniform_int(pool.size());
        entries_.push_back(std::move(pool[pick]));
        pool[pick] = std::move(pool.back());
        pool.pop_back();
    }
}

const Sequence& FrontierBuffer::top() {
    if (entries_.empty()) throw std::runtime_error("FrontierBuffer::top: empty buffer");
    ++calls_;
    // Closed form rather than compounding so the value is bit-exact at any T.
    epsilon_ = std::max(
        params_.epsilon_floor,
        params_.epsilon_init * std::pow(params_.epsilon_decay,
                                        static_cast<double>(calls_ / params_.update_period)));
    std::vector<double> weights(entries_.size());
    if (rng_.uniform() < epsilon_) {
        // Explore: favor rarely visited entries.
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            weights[i] = 1.0 / std::sqrt(static_cast<double>(entries_[i].visits));
        }
    } else {
        // Exploit: softmax over fitness.
        double mx = entries_.front().fitness;
        for (const auto& e : entries_) mx = std::max(mx, e.fitness);
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            weights[i] = std::exp(params_.softmax_temperature *
                                  (entries_[i].fitness - mx));
        }
    }
    double total = 0.0;
    for (double w : weights) total += w;
    double r = rng_.uniform() * total;
    std::size_t choice = entries_.size() - 1;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        r -= weights[i];
        if (r < 0.0) {
            choice = i;
            break;
        }
    }
    entries_[choice].visits += 1;
    return entries_[choice].seq;
}

bool FrontierBuffer::contains(const Sequence& seq) const {
    for (const auto& e : entries_) {
        if (e.seq == seq) return true;
    }
    return false;
}

void FrontierBuffer::update(const Sequence& seq, double fitness) {
    if (entries_.empty() || contains(seq)) return;
    std::size_t min_idx = 0;
    for (std::size_t i = 1; i < entries_.size(); ++i) {
        if (entries_[i].fitness < entries_[min_idx].fitness) min_idx = i;
    }
    if (fitness > entries_[min_idx].fitness) {
        entries_[min_idx] = {seq, fitness, 1};
    }
}

double FrontierBuffer::min_fitness() const {
    if (entries_.empty()) throw std::runtime_error("empty buffer");
    double m = entries_.front().fitness;
    for (const auto& e : entries_) m = std::min(m, e.fitness);
    return m;
}

double FrontierBuffer::max_fitness() const {
    if (entries_.empty()) throw std::runtime_error("empty buffer");
    double m = entries_.front().fitness;
    for (const auto& e : entries_) m = std::max(m, e.fitness);
    return m;
}

double FrontierBuffer::median_fitness() const {
    std::vector<double> f;
    f.reserve(entries_.size());
    for (const auto& e : entries_) f.push_back(e.fitness);
    return median(std::move(f));
}

void FrontierBuffer::save_csv(const std::string& path, const Vocabulary& vocab) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write buffer snapshot: " + path);
    out << "sequence,fitness,visits\n";
    out.precision(17);
    for (const auto& e : entries_) {
        out << to_string(e.seq, vocab) << ',' << e.fitness << ',' << e.visits << '\n';
    }
}

} // namespace lpo
