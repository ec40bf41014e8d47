#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lpo/rng.hpp"

namespace lpo {

// Ordered alphabet. The default protein vocabulary has 20 symbols.
struct Vocabulary {
    std::string symbols;

    explicit Vocabulary(std::string s);
    int size() const { return static_cast<int>(symbols.size()); }
    // -1 if the character is not in the vocabulary.
    int index_of(char c) const;
    char symbol(int i) const { return symbols[static_cast<std::size_t>(i)]; }

    static Vocabulary protein();
};

// A sequence is a list of symbol indices into some Vocabulary.
using Sequence = std::vector<std::uint8_t>;

std::string to_string(const Sequence& s, const Vocabulary& v);
Sequence from_string(const std::string& s, const Vocabulary& v);

struct ScoredSequence {
    Sequence seq;
    double fitness = 0.0;
};

struct Dataset {
    std::vector<ScoredSequence> entries;
    Vocabulary vocab = Vocabulary::protein();

    std::size_t size() const { return entries.size(); }
    bool empty() const { return entries.empty(); }
    // Shared sequence length; 0 for an empty dataset.
    std::size_t length() const { return entries.empty() ? 0 : entries.front().seq.size(); }
};

// Number of differing positions. Throws on length mismatch.
int hamming_distance(const Sequence& a, const Sequence& b);

// Index of the entry minimizing mean Hamming distance to all other entries,
// ties broken by lowest index. Throws on an empty dataset.
std::size_t select_reference_index(const Dataset& data);
const Sequence& select_reference(const Dataset& data);

// Entries whose ascending fitness rank r (0-based, ties by entry index)
// satisfies lo <= 100*r/N < hi.
Dataset percentile_subset(const Dataset& data, double lo, double hi);

// Each position independently mutates with probability expected/L; a mutated
// position takes a uniform symbol among the other V-1 symbols.
Sequence random_mutate(const Sequence& seq, double expected_mutations,
                       const Vocabulary& vocab, Rng& rng);

// The data.size() entries with the highest fitness (ties by entry index).
Dataset top_by_fitness(const Dataset& data, std::size_t k);

double median(std::vector<double> values);

} // namespace lpo
