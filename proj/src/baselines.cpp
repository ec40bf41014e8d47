#include "lpo/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include <Eigen/Dense>

namespace lpo {

namespace {

constexpr double kSymTol = 1e-10;

std::string seq_key(const Sequence& s) {
    return {reinterpret_cast<const char*>(s.data()), s.size()};
}

// Evaluated-sequence ledger shared by the sequence baselines; insertion order
// breaks ties so results are deterministic.
struct Evaluated {
    std::vector<ScoredSequence> entries;
    std::unordered_set<std::string> seen;

    bool contains(const Sequence& s) const { return seen.count(seq_key(s)) > 0; }

    void add(const Sequence& s, double fitness) {
        if (seen.insert(seq_key(s)).second) entries.push_back({s, fitness});
    }

    std::vector<ScoredSequence> top(std::size_t k) const {
        auto out = entries;
        std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
            return a.fitness > b.fitness;
        });
        if (out.size() > k) out.resize(k);
        return out;
    }
};

void push_round(BaselineResult& result, int round, const Evaluated& archive,
                std::size_t top_k, int calls) {
    result.rounds.push_back({round, archive.top(top_k), calls});
    result.total_oracle_calls += calls;
}

Sequence mutate_exact(const Sequence& seq, int d, const Vocabulary& vocab, Rng& rng) {
    Sequence out = seq;
    const auto L = seq.size();
    std::vector<std::size_t> pos(L);
    std::iota(pos.begin(), pos.end(), 0);
    for (int k = 0; k < d && static_cast<std::size_t>(k) < L; ++k) {
        const auto j = k + rng.uniform_int(L - static_cast<std::size_t>(k));
        std::swap(pos[static_cast<std::size_t>(k)], pos[j]);
        const auto p = pos[static_cast<std::size_t>(k)];
        auto r = static_cast<std::uint8_t>(rng.uniform_int(vocab.size() - 1));
        if (r >= out[p]) ++r;
        out[p] = r;
    }
    return out;
}

} // namespace

// --- CMA-ES core ----------------------------------------------------------

CmaesState CmaesState::make(std::vector<double> mean0, double sigma0, int lambda) {
    if (mean0.empty()) throw std::invalid_argument("CmaesState: empty mean");
    if (sigma0 <= 0.0) throw std::invalid_argument("CmaesState: sigma0 must be > 0");
    CmaesState st;
    st.n = static_cast<int>(mean0.size());
    const double n = st.n;
    st.lambda = lambda > 0 ? lambda : 4 + static_cast<int>(std::floor(3.0 * std::log(n)));
    if (st.lambda < 2) st.lambda = 2;
    st.mu = st.lambda / 2;
    st.weights.resize(static_cast<std::size_t>(st.mu));
    double wsum = 0.0;
    for (int i = 0; i < st.mu; ++i) {
        st.weights[static_cast<std::size_t>(i)] =
            std::log(st.mu + 0.5) - std::log(i + 1.0);
        wsum += st.weights[static_cast<std::size_t>(i)];
    }
    double w2 = 0.0;
    for (auto& w : st.weights) {
        w /= wsum;
        w2 += w * w;
    }
    st.mueff = 1.0 / w2;
    st.cc = (4.0 + st.mueff / n) / (n + 4.0 + 2.0 * st.mueff / n);
    st.cs = (st.mueff + 2.0) / (n + st.mueff + 5.0);
    st.c1 = 2.0 / ((n + 1.3) * (n + 1.3) + st.mueff);
    st.cmu = std::min(1.0 - st.c1, 2.0 * (st.mueff - 2.0 + 1.0 / st.mueff) /
                                       ((n + 2.0) * (n + 2.0) + st.mueff));
    st.damps =
        1.0 + 2.0 * std::max(0.0, std::sqrt((st.mueff - 1.0) / (n + 1.0)) - 1.0) + st.cs;
    st.chi_n = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
    st.sigma = sigma0;
    st.mean = std::move(mean0);
    st.pc.assign(static_cast<std::size_t>(st.n), 0.0);
    st.ps.assign(static_cast<std::size_t>(st.n), 0.0);
    st.cov.assign(static_cast<std::size_t>(st.n) * st.n, 0.0);
    st.eigvecs.assign(static_cast<std::size_t>(st.n) * st.n, 0.0);
    st.eigvals_sqrt.assign(static_cast<std::size_t>(st.n), 1.0);
    for (int i = 0; i < st.n; ++i) {
        st.cov[static_cast<std::size_t>(i) * st.n + i] = 1.0;
        st.eigvecs[static_cast<std::size_t>(i) * st.n + i] = 1.0;
    }
    return st;
}

std::vector<std::vector<double>> cmaes_ask(const CmaesState& st, Rng& rng) {
    const int n = st.n;
    std::vector<std::vector<double>> out(static_cast<std::size_t>(st.lambda));
    std::vector<double> z(static_cast<std::size_t>(n));
    for (auto& x : out) {
        for (auto& zi : z) zi = rng.normal();
        x.assign(st.mean.begin(), st.mean.end());
        // x = mean + sigma * B * (D .* z)
        for (int i = 0; i < n; ++i) {
            double yi = 0.0;
            for (int j = 0; j < n; ++j) {
                yi += st.eigvecs[static_cast<std::size_t>(i) * n + j] *
                      st.eigvals_sqrt[static_cast<std::size_t>(j)] *
                      z[static_cast<std::size_t>(j)];
            }
            x[static_cast<std::size_t>(i)] += st.sigma * yi;
        }
    }
    return out;
}

void cmaes_tell(CmaesState& st, const std::vector<std::vector<double>>& candidates,
                const std::vector<double>& values) {
    const int n = st.n;
    if (candidates.size() != values.size() ||
        candidates.size() != static_cast<std::size_t>(st.lambda)) {
        throw std::invalid_argument("cmaes_tell: expected lambda candidates");
    }
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    const std::vector<double> old_mean = st.mean;
    std::fill(st.mean.begin(), st.mean.end(), 0.0);
    for (int i = 0; i < st.mu; ++i) {
        const auto& x = candidates[order[static_cast<std::size_t>(i)]];
        const double w = st.weights[static_cast<std::size_t>(i)];
        for (int j = 0; j < n; ++j) st.mean[static_cast<std::size_t>(j)] += w * x[static_cast<std::size_t>(j)];
    }

    std::vector<double> y_w(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        y_w[static_cast<std::size_t>(j)] =
            (st.mean[static_cast<std::size_t>(j)] - old_mean[static_cast<std::size_t>(j)]) / st.sigma;
    }

    // C^{-1/2} y = B D^{-1} B^T y
    std::vector<double> bty(static_cast<std::size_t>(n), 0.0);
    for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            acc += st.eigvecs[static_cast<std::size_t>(i) * n + j] * y_w[static_cast<std::size_t>(i)];
        }
        bty[static_cast<std::size_t>(j)] = acc / st.eigvals_sqrt[static_cast<std::size_t>(j)];
    }
    std::vector<double> cinv_y(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
            acc += st.eigvecs[static_cast<std::size_t>(i) * n + j] * bty[static_cast<std::size_t>(j)];
        }
        cinv_y[static_cast<std::size_t>(i)] = acc;
    }

    const double ps_coef = std::sqrt(st.cs * (2.0 - st.cs) * st.mueff);
    double ps_norm2 = 0.0;
    for (int i = 0; i < n; ++i) {
        auto& p = st.ps[static_cast<std::size_t>(i)];
        p = (1.0 - st.cs) * p + ps_coef * cinv_y[static_cast<std::size_t>(i)];
        ps_norm2 += p * p;
    }
    const double ps_norm = std::sqrt(ps_norm2);
    const int g1 = st.generation + 1;
    const double hsig_denom = std::sqrt(1.0 - std::pow(1.0 - st.cs, 2.0 * g1));
    const bool hsig = ps_norm / hsig_denom / st.chi_n < 1.4 + 2.0 / (n + 1.0);

    const double pc_coef = std::sqrt(st.cc * (2.0 - st.cc) * st.mueff);
    for (int i = 0; i < n; ++i) {
        auto& p = st.pc[static_cast<std::size_t>(i)];
        p = (1.0 - st.cc) * p + (hsig ? pc_coef * y_w[static_cast<std::size_t>(i)] : 0.0);
    }

    const double c_old = 1.0 - st.c1 - st.cmu +
                         (hsig ? 0.0 : st.c1 * st.cc * (2.0 - st.cc));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double v = c_old * st.cov[static_cast<std::size_t>(i) * n + j] +
                       st.c1 * st.pc[static_cast<std::size_t>(i)] * st.pc[static_cast<std::size_t>(j)];
            for (int k = 0; k < st.mu; ++k) {
                const auto& x = candidates[order[static_cast<std::size_t>(k)]];
                const double yi = (x[static_cast<std::size_t>(i)] - old_mean[static_cast<std::size_t>(i)]) / st.sigma;
                const double yj = (x[static_cast<std::size_t>(j)] - old_mean[static_cast<std::size_t>(j)]) / st.sigma;
                v += st.cmu * st.weights[static_cast<std::size_t>(k)] * yi * yj;
            }
            st.cov[static_cast<std::size_t>(i) * n + j] = v;
            st.cov[static_cast<std::size_t>(j) * n + i] = v;
        }
    }

    st.sigma *= std::exp((st.cs / st.damps) * (ps_norm / st.chi_n - 1.0));
    if (!(st.sigma > 0.0) || !std::isfinite(st.sigma)) {
        throw std::runtime_error("cmaes_tell: step size became invalid");
    }
    ++st.generation;

    Eigen::MatrixXd C(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            C(i, j) = st.cov[static_cast<std::size_t>(i) * n + j];
        }
    }
    const double asym = (C - C.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymTol) {
        throw std::runtime_error("cmaes_tell: covariance asymmetry " + std::to_string(asym));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(C);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("cmaes_tell: eigendecomposition failed");
    }
    const double min_eig = solver.eigenvalues().minCoeff();
    if (!(min_eig > 0.0)) {
        throw std::runtime_error("cmaes_tell: covariance lost positive-definiteness");
    }
    for (int j = 0; j < n; ++j) {
        st.eigvals_sqrt[static_cast<std::size_t>(j)] = std::sqrt(solver.eigenvalues()(j));
        for (int i = 0; i < n; ++i) {
            st.eigvecs[static_cast<std::size_t>(i) * n + j] = solver.eigenvectors()(i, j);
        }
    }
}

CmaesRunResult cmaes_minimize(const std::function<double(std::span<const double>)>& f,
                              std::vector<double> mean0, double sigma0, int max_evals,
                              std::uint64_t seed) {
    auto st = CmaesState::make(std::move(mean0), sigma0);
    Rng rng(derive_seed(seed, "cmaes"));
    CmaesRunResult result;
    result.best_value = std::numeric_limits<double>::infinity();
    while (result.evaluations + st.lambda <= max_evals) {
        const auto candidates = cmaes_ask(st, rng);
        std::vector<double> values(candidates.size());
        for (std::size_t k = 0; k < candidates.size(); ++k) {
            values[k] = f(candidates[k]);
            ++result.evaluations;
            if (values[k] < result.best_value) {
                result.best_value = values[k];
                result.best_x = candidates[k];
            }
        }
        cmaes_tell(st, candidates, values);
    }
    return result;
}

// --- Sequence-space baselines --------------------------------------------

Sequence argmax_decode(std::span<const double> x, int L, int V) {
    if (static_cast<int>(x.size()) != L * V) {
        throw std::invalid_argument("argmax_decode: size != L*V");
    }
    Sequence out(static_cast<std::size_t>(L));
    for (int p = 0; p < L; ++p) {
        int best = 0;
        for (int v = 1; v < V; ++v) {
            if (x[static_cast<std::size_t>(p * V + v)] > x[static_cast<std::size_t>(p * V + best)]) {
                best = v;
            }
        }
        out[static_cast<std::size_t>(p)] = static_cast<std::uint8_t>(best);
    }
    return out;
}

BaselineResult cmaes_sequence_optimize(const Oracle& oracle, OracleBudget& budget,
                                       const Dataset& seeds, CmaesEncoding encoding,
                                       const VedModel* ved, int m_decode,
                                       const BaselineConfig& cfg) {
    if (seeds.empty()) throw std::invalid_argument("cmaes_sequence_optimize: empty seeds");
    const int L = static_cast<int>(oracle.length());
    const int V = seeds.vocab.size();
    const Dataset best_seed = top_by_fitness(seeds, 1);
    const Sequence& x0 = best_seed.entries.front().seq;

    std::vector<double> mean0;
    if (encoding == CmaesEncoding::OneHot) {
        mean0 = one_hot(x0, V);
    } else {
        if (!ved) throw std::invalid_argument("cmaes_sequence_optimize: latent encoding needs a VED");
        mean0 = encode(*ved, x0);
    }
    auto decode = [&](const std::vector<double>& z) {
        if (encoding == CmaesEncoding::OneHot) return argmax_decode(z, L, V);
        LatentRep s(z.begin(), z.end());
        for (auto& v : s) v = std::clamp(v, -1.0, 1.0);
        return constrained_decode(*ved, s, ved->reference, m_decode);
    };

    auto st = CmaesState::make(std::move(mean0), cfg.sigma0);
    Rng rng(derive_seed(cfg.seed, "cmaes-seq"));
    Evaluated archive;
    for (const auto& e : seeds.entries) archive.add(e.seq, e.fitness);

    BaselineResult result;
    for (int round = 1; round <= cfg.rounds; ++round) {
        budget.next_round();
        while (budget.remaining() >= st.lambda) {
            const auto candidates = cmaes_ask(st, rng);
            std::vector<Sequence> batch;
            batch.reserve(candidates.size());
            for (const auto& z : candidates) batch.push_back(decode(z));
            const auto fitness = oracle_query(oracle, batch, budget);
            std::vector<double> values(fitness.size());
            for (std::size_t k = 0; k < fitness.size(); ++k) {
                values[k] = -fitness[k]; // the strategy minimizes
                archive.add(batch[k], fitness[k]);
            }
            cmaes_tell(st, candidates, values);
        }
        push_round(result, round, archive, cfg.top_k, budget.calls_used_this_round);
    }
    result.best = archive.top(cfg.top_k);
    return result;
}

BaselineResult greedy_evolution(const Oracle& oracle, OracleBudget& budget,
                                const Dataset& seeds, const BaselineConfig& cfg) {
    if (seeds.empty()) throw std::invalid_argument("greedy_evolution: empty seeds");
    const auto L = seeds.length();
    const double expected =
        cfg.mutation_rate > 0.0 ? cfg.mutation_rate * static_cast<double>(L) : 1.0;
    Rng rng(derive_seed(cfg.seed, "greedy"));

    Evaluated archive; // everything the budget paid for
    Evaluated pool;    // seeds plus accepted children: parent candidates
    for (const auto& e : seeds.entries) {
        archive.add(e.seq, e.fitness);
        pool.add(e.seq, e.fitness);
    }

    BaselineResult result;
    for (int round = 1; round <= cfg.rounds; ++round) {
        budget.next_round();
        const auto parents = pool.top(static_cast<std::size_t>(cfg.parents));
        bool any_new = false;
        while (budget.remaining() > 0) {
            std::vector<Sequence> batch;
            std::vector<const ScoredSequence*> from;
            for (const auto& parent : parents) {
                if (static_cast<int>(batch.size()) >= budget.remaining()) break;
                auto child = random_mutate(parent.seq, expected, seeds.vocab, rng);
                if (child != parent.seq) any_new = true;
                batch.push_back(std::move(child));
                from.push_back(&parent);
            }
            const auto fitness = oracle_query(oracle, batch, budget);
            for (std::size_t k = 0; k < batch.size(); ++k) {
                archive.add(batch[k], fitness[k]);
                const double threshold =
                    from[k]->fitness + cfg.kappa * std::abs(from[k]->fitness);
                if (fitness[k] >= threshold) pool.add(batch[k], fitness[k]);
            }
        }
        push_round(result, round, archive, cfg.top_k, budget.calls_used_this_round);
        if (!any_new) {
            result.stalled = true;
            break;
        }
    }
    result.best = archive.top(cfg.top_k);
    return result;
}

std::vector<std::size_t> pareto_non_dominated(
    std::span<const std::pair<int, double>> points) {
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (points[a].first != points[b].first) return points[a].first < points[b].first;
        return points[a].second > points[b].second;
    });
    std::vector<std::size_t> keep;
    double max_f_prev = -std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    while (i < order.size()) {
        const int d = points[order[i]].first;
        const double group_max = points[order[i]].second;
        std::size_t j = i;
        while (j < order.size() && points[order[j]].first == d) ++j;
        if (group_max > max_f_prev) {
            for (std::size_t k = i; k < j && points[order[k]].second == group_max; ++k) {
                keep.push_back(order[k]);
            }
            max_f_prev = group_max;
        }
        i = j;
    }
    std::sort(keep.begin(), keep.end());
    return keep;
}

BaselineResult distance_prioritized_search(const Oracle& oracle, OracleBudget& budget,
                                           const Sequence& reference,
                                           const Dataset& seeds,
                                           const BaselineConfig& cfg) {
    if (seeds.empty()) {
        throw std::invalid_argument("distance_prioritized_search: empty seeds");
    }
    Rng rng(derive_seed(cfg.seed, "distance-search"));
    Evaluated archive;
    for (const auto& e : seeds.entries) archive.add(e.seq, e.fitness);

    auto frontier_indices = [&]() {
        std::vector<std::pair<int, double>> points;
        points.reserve(archive.entries.size());
        for (const auto& e : archive.entries) {
            points.emplace_back(hamming_distance(e.seq, reference), e.fitness);
        }
        return pareto_non_dominated(points);
    };

    BaselineResult result;
    for (int round = 1; round <= cfg.rounds; ++round) {
        budget.next_round();
        if (round == 1 && !archive.contains(reference) && budget.remaining() > 0) {
            const std::vector<Sequence> ref_batch{reference};
            archive.add(reference, oracle_query(oracle, ref_batch, budget)[0]);
        }
        while (budget.remaining() > 0) {
            const auto frontier = frontier_indices();
            std::vector<Sequence> batch;
            for (const auto idx : frontier) {
                if (static_cast<int>(batch.size()) >= budget.remaining()) break;
                const auto& parent = archive.entries[idx].seq;
                // A few attempts to find an unseen single-mutation child.
                for (int attempt = 0; attempt < 16; ++attempt) {
                    auto child = mutate_exact(parent, 1, seeds.vocab, rng);
                    if (!archive.contains(child) &&
                        std::find(batch.begin(), batch.end(), child) == batch.end()) {
                        batch.push_back(std::move(child));
                        break;
                    }
                }
            }
            if (batch.empty()) break; // neighborhood exhausted
            const auto fitness = oracle_query(oracle, batch, budget);
            for (std::size_t k = 0; k < batch.size(); ++k) {
                archive.add(batch[k], fitness[k]);
            }
        }
        push_round(result, round, archive, cfg.top_k, budget.calls_used_this_round);
    }
    result.best = archive.top(cfg.top_k);
    return result;
}

BaselineResult random_search(const Oracle& oracle, OracleBudget& budget,
                             const Dataset& seeds, const BaselineConfig& cfg) {
    if (seeds.empty()) throw std::invalid_argument("random_search: empty seeds");
    Rng rng(derive_seed(cfg.seed, "random-search"));
    Evaluated archive;

    BaselineResult result;
    for (int round = 1; round <= cfg.rounds; ++round) {
        budget.next_round();
        if (round == 1) {
            std::vector<Sequence> batch;
            for (const auto& e : seeds.entries) {
                if (static_cast<int>(batch.size()) >= budget.remaining()) break;
                batch.push_back(e.seq);
            }
            const auto fitness = oracle_query(oracle, batch, budget);
            for (std::size_t k = 0; k < batch.size(); ++k) {
                archive.add(batch[k], fitness[k]);
            }
        }
        while (budget.remaining() > 0) {
            std::vector<Sequence> batch;
            const int wave = std::min(budget.remaining(), 64);
            for (int k = 0; k < wave; ++k) {
                const auto& seed = seeds.entries[rng.uniform_int(seeds.size())].seq;
                const int d = cfg.mutation_radius == 0
                                  ? 0
                                  : 1 + static_cast<int>(rng.uniform_int(
                                            static_cast<std::size_t>(cfg.mutation_radius)));
                batch.push_back(mutate_exact(seed, d, seeds.vocab, rng));
            }
            const auto fitness = oracle_query(oracle, batch, budget);
            for (std::size_t k = 0; k < batch.size(); ++k) {
                archive.add(batch[k], fitness[k]);
            }
        }
        push_round(result, round, archive, cfg.top_k, budget.calls_used_this_round);
    }
    result.best = archive.top(cfg.top_k);
    return result;
}

} // namespace lpo
