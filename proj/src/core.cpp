#include "lpo/core.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace lpo {

Vocabulary::Vocabulary(std::string s) : symbols(std::move(s)) {
    if (symbols.size() < 2) {
        throw std::invalid_argument("Vocabulary needs at least 2 symbols");
    }
    std::unordered_set<char> seen;
    for (char c : symbols) {
        if (!seen.insert(c).second) {
            throw std::invalid_argument("Vocabulary symbols must be distinct");
        }
    }
}

int Vocabulary::index_of(char c) const {
    const auto pos = symbols.find(c);
    return pos == std::string::npos ? -1 : static_cast<int>(pos);
}

Vocabulary Vocabulary::protein() { return Vocabulary("ACDEFGHIKLMNPQRSTVWY"); }

std::string to_string(const Sequence& s, const Vocabulary& v) {
    std::string out;
    out.reserve(s.size());
    for (auto i : s) out.push_back(v.symbol(i));
    return out;
}

Sequence from_string(const std::string& s, const Vocabulary& v) {
    Sequence out;
    out.reserve(s.size());
    for (char c : s) {
        const int i = v.index_of(c);
        if (i < 0) {
            throw std::invalid_argument(std::string("symbol '") + c +
                                        "' not in vocabulary");
        }
        out.push_back(static_cast<std::uint8_t>(i));
    }
    return out;
}

int hamming_distance(const Sequence& a, const Sequence& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("hamming_distance: length mismatch");
    }
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) ++d;
    }
    return d;
}

std::size_t select_reference_index(const Dataset& data) {
    if (data.empty()) throw std::invalid_argument("select_reference: empty dataset");
    const std::size_t n = data.size();
    std::size_t best = 0;
    long long best_total = -1;
    for (std::size_t i = 0; i < n; ++i) {
        long long total = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            total += hamming_distance(data.entries[i].seq, data.entries[j].seq);
        }
        if (best_total < 0 || total < best_total) {
            best_total = total;
            best = i;
        }
    }
    return best;
}

const Sequence& select_reference(const Dataset& data) {
    return data.entries[select_reference_index(data)].seq;
}

Dataset percentile_subset(const Dataset& data, double lo, double hi) {
    if (data.empty()) throw std::invalid_argument("percentile_subset: empty dataset");
    if (!(lo >= 0.0 && lo < hi && hi <= 100.0)) {
        throw std::invalid_argument("percentile_subset: need 0 <= lo < hi <= 100");
    }
    const std::size_t n = data.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return data.entries[a].fitness < data.entries[b].fitness;
    });
    // Keep original entry order in the output.
    std::vector<bool> keep(n, false);
    for (std::size_t r = 0; r < n; ++r) {
        const double pct = 100.0 * static_cast<double>(r) / static_cast<double>(n);
        if (pct >= lo && pct < hi) keep[order[r]] = true;
    }
    Dataset out;
    out.vocab = data.vocab;
    for (std::size_t i = 0; i < n; ++i) {
        if (keep[i]) out.entries.push_back(data.entries[i]);
    }
    return out;
}

Sequence random_mutate(const Sequence& seq, double expected_mutations,
                       const Vocabulary& vocab, Rng& rng) {
    const double L = static_cast<double>(seq.size());
    if (expected_mutations < 0.0 || expected_mutations > L) {
        throw std::invalid_argument("random_mutate: expected_mutations out of [0, L]");
    }
    const double p = seq.empty() ? 0.0 : expected_mutations / L;
    const int v = vocab.size();
    Sequence out = seq;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (rng.uniform() < p) {
            // Uniform over the other V-1 symbols.
            auto r = rng.uniform_int(static_cast<std::uint64_t>(v - 1));
            if (r >= out[i]) ++r;
            out[i] = static_cast<std::uint8_t>(r);
        }
    }
    return out;
}

Dataset top_by_fitness(const Dataset& data, std::size_t k) {
    const std::size_t n = data.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return data.entries[a].fitness > data.entries[b].fitness;
    });
    if (k > n) k = n;
    Dataset out;
    out.vocab = data.vocab;
    out.entries.reserve(k);
    for (std::size_t r = 0; r < k; ++r) out.entries.push_back(data.entries[order[r]]);
    return out;
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median: empty input");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

} // namespace lpo
