#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lpo/core.hpp"
#include "lpo/rng.hpp"

namespace lpo {

// Fixed-capacity archive of the best sequences found so far, with
// epsilon-greedy sampling of episode start states. Single-owner mutable
// object; the round driver serializes all calls.
class FrontierBuffer {
public:
    struct Entry {
        Sequence seq;
        double fitness = 0.0;
        long visits = 1;
    };

    struct Params {
        std::size_t capacity = 128;
        double epsilon_init = 1.0;
        double epsilon_floor = 0.05;
        double epsilon_decay = 0.96;
        long update_period = 50;
        double softmax_temperature = 10.0;
    };

    FrontierBuffer(Params params, std::uint64_t seed);

    // Samples capacity distinct sequences without replacement, deduplicating
    // by sequence and keeping the highest fitness per sequence.
    void initialize(const Dataset& data);

    // Epsilon-greedy sampling; increments the chosen entry's visit count.
    const Sequence& top();

    // Replaces the minimum-fitness entry iff fitness strictly exceeds it and
    // the sequence is not already present.
    void update(const Sequence& seq, double fitness);

    const std::vector<Entry>& entries() const { return entries_; }
    double epsilon() const { return epsilon_; }
    long calls() const { return calls_; }
    double min_fitness() const;
    double max_fitness() const;
    double median_fitness() const;

    void save_csv(const std::string& path, const Vocabulary& vocab) const;

private:
    bool contains(const Sequence& seq) const;

    Params params_;
    Rng rng_;
    std::vector<Entry> entries_;
    double epsilon_;
    long calls_ = 0; // T in the epsilon schedule
};

} // namespace lpo
