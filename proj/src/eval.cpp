#include "lpo/eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lpo/parallel.hpp"

namespace lpo {

namespace {

double median_min_distance(const std::vector<ScoredSequence>& G, const Dataset& ref) {
    std::vector<double> mins(G.size());
    parallel_for(G.size(), [&](std::size_t i) {
        int best = hamming_distance(G[i].seq, ref.entries.front().seq);
        for (std::size_t j = 1; j < ref.size(); ++j) {
            best = std::min(best, hamming_distance(G[i].seq, ref.entries[j].seq));
        }
        mins[i] = static_cast<double>(best);
    });
    return median(std::move(mins));
}

} // namespace

Metrics compute_metrics(const std::vector<ScoredSequence>& G, const Dataset& init,
                        const Dataset* full) {
    if (G.empty()) throw std::invalid_argument("compute_metrics: empty generated set");
    if (init.empty()) throw std::invalid_argument("compute_metrics: empty initial set");
    Metrics m;

    std::vector<double> fitness;
    fitness.reserve(G.size());
    for (const auto& g : G) fitness.push_back(g.fitness);
    m.fitness = median(std::move(fitness));

    if (G.size() < 2) {
        m.diversity = 0.0;
    } else {
        const std::size_t n = G.size();
        std::vector<std::vector<double>> per_row(n);
        parallel_for(n, [&](std::size_t i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                per_row[i].push_back(
                    static_cast<double>(hamming_distance(G[i].seq, G[j].seq)));
            }
        });
        std::vector<double> dists;
        for (const auto& row : per_row) dists.insert(dists.end(), row.begin(), row.end());
        m.diversity = median(std::move(dists));
    }

    m.d_init = median_min_distance(G, init);
    if (full && !full->empty()) {
        const auto top = top_by_fitness(
            *full, std::max<std::size_t>(1, full->size() / 10));
        m.d_high = median_min_distance(G, top);
    }
    return m;
}

DatasetStats dataset_stats(const Dataset& data) {
    if (data.empty()) throw std::invalid_argument("dataset_stats: empty dataset");
    DatasetStats s;
    std::vector<double> f;
    f.reserve(data.size());
    for (const auto& e : data.entries) f.push_back(e.fitness);
    std::sort(f.begin(), f.end());
    s.median_fitness = f.size() % 2 == 1
                           ? f[f.size() / 2]
                           : 0.5 * (f[f.size() / 2 - 1] + f[f.size() / 2]);
    const auto top = top_by_fitness(data, 128);
    std::vector<double> tf;
    for (const auto& e : top.entries) tf.push_back(e.fitness);
    s.top128_median = median(std::move(tf));
    for (int p = 0; p <= 100; p += 10) {
        const auto idx = std::min<std::size_t>(
            f.size() - 1,
            static_cast<std::size_t>(static_cast<double>(f.size()) * p / 100.0));
        s.percentiles.emplace_back(static_cast<double>(p), f[idx]);
    }
    return s;
}

namespace {

// Leading eigenpair of a symmetric matrix by power iteration.
std::pair<double, std::vector<double>> power_iteration(
    const std::vector<std::vector<double>>& m, double tol, int max_iter) {
    const std::size_t n = m.size();
    std::vector<double> v(n, 0.0);
    // Deterministic start: unit vector along the largest-diagonal axis, then a
    // fixed perturbation so we are not orthogonal to the leading eigenvector.
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.001 * static_cast<double>(i);
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;

    double eig = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        std::vector<double> w(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += m[i][j] * v[j];
            w[i] = acc;
        }
        double wn = 0.0;
        for (double x : w) wn += x * x;
        wn = std::sqrt(wn);
        if (wn == 0.0) return {0.0, v};
        for (auto& x : w) x /= wn;
        double new_eig = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += m[i][j] * w[j];
            new_eig += w[i] * acc;
        }
        double diff = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            // eigenvectors are sign-ambiguous between iterations
            diff = std::max(diff, std::min(std::abs(w[i] - v[i]),
                                           std::abs(w[i] + v[i])));
        }
        v = std::move(w);
        eig = new_eig;
        if (diff < tol) break;
    }
    return {eig, v};
}

} // namespace

std::vector<std::vector<double>> mds_embed(const std::vector<std::vector<double>>& dist,
                                           int dims) {
    const std::size_t n = dist.size();
    if (n == 0) throw std::invalid_argument("mds_embed: empty matrix");
    for (std::size_t i = 0; i < n; ++i) {
        if (dist[i].size() != n) throw std::invalid_argument("mds_embed: not square");
        if (dist[i][i] != 0.0) throw std::invalid_argument("mds_embed: nonzero diagonal");
        for (std::size_t j = 0; j < n; ++j) {
            if (dist[i][j] < 0.0) throw std::invalid_argument("mds_embed: negative entry");
            if (dist[i][j] != dist[j][i]) {
                throw std::invalid_argument("mds_embed: asymmetric matrix");
            }
        }
    }
    std::vector<std::vector<double>> out(n, std::vector<double>(static_cast<std::size_t>(dims), 0.0));
    if (n == 1) return out;

    // B = -1/2 * J * D^2 * J (double centering)
    std::vector<std::vector<double>> b(n, std::vector<double>(n, 0.0));
    std::vector<double> row_mean(n, 0.0);
    double grand = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double d2 = dist[i][j] * dist[i][j];
            b[i][j] = d2;
            row_mean[i] += d2;
        }
        row_mean[i] /= static_cast<double>(n);
        grand += row_mean[i];
    }
    grand /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            b[i][j] = -0.5 * (b[i][j] - row_mean[i] - row_mean[j] + grand);
        }
    }

    const double tol = 1e-10;
    const int max_iter = 10000;
    for (int d = 0; d < dims; ++d) {
        auto [eig, vec] = power_iteration(b, tol, max_iter);
        if (eig <= 0.0) break; // remaining structure is not Euclidean
        // Sign convention: first nonzero coordinate positive.
        for (double x : vec) {
            if (x != 0.0) {
                if (x < 0.0)
                    for (auto& y : vec) y = -y;
                break;
            }
        }
        const double scale = std::sqrt(eig);
        for (std::size_t i = 0; i < n; ++i) out[i][static_cast<std::size_t>(d)] = vec[i] * scale;
        // Deflate.
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                b[i][j] -= eig * vec[i] * vec[j];
            }
        }
    }
    return out;
}

} // namespace lpo
