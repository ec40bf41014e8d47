#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "lpo/baselines.hpp"
#include "lpo/core.hpp"
#include "lpo/landscape.hpp"
#include "lpo/rng.hpp"

using namespace lpo;

namespace {

const Vocabulary kAcgt("ACGT");

Sequence random_seq(std::size_t L, int V, Rng& rng) {
    Sequence s(L);
    for (auto& c : s) c = static_cast<std::uint8_t>(rng.uniform_int(static_cast<std::uint64_t>(V)));
    return s;
}

Dataset scored_pool(const Oracle& oracle, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Dataset d;
    d.vocab = kAcgt;
    std::set<Sequence> seen;
    while (d.size() < n) {
        auto s = random_seq(oracle.length(), 4, rng);
        if (!seen.insert(s).second) continue;
        const double f = oracle.evaluate(s);
        d.entries.push_back({std::move(s), f});
    }
    return d;
}

double best_fitness(const BaselineResult& r) {
    double best = -1e300;
    for (const auto& e : r.best) best = std::max(best, e.fitness);
    return best;
}

// Brute-force dominance filter used as the oracle for the sweep version.
std::vector<std::size_t> brute_force_pareto(
    const std::vector<std::pair<int, double>>& pts) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
            if (j == i) continue;
            const bool leq = pts[j].first <= pts[i].first;
            const bool geq = pts[j].second >= pts[i].second;
            const bool strict = pts[j].first < pts[i].first ||
                                pts[j].second > pts[i].second;
            dominated = leq && geq && strict;
        }
        if (!dominated) keep.push_back(i);
    }
    return keep;
}

} // namespace

TEST_CASE("cmaes minimizes the sphere in 16 dimensions") {
    const auto sphere = [](std::span<const double> x) {
        double acc = 0.0;
        for (const double v : x) acc += v * v;
        return acc;
    };
    const auto result =
        cmaes_minimize(sphere, std::vector<double>(16, 1.0), 0.5, 2000, 1);
    CHECK(result.best_value < 1e-6);
    CHECK(result.evaluations <= 2000);
}

TEST_CASE("cmaes state stays consistent through generations") {
    auto state = CmaesState::make(std::vector<double>(6, 0.5), 0.4);
    CHECK(state.lambda == 4 + static_cast<int>(3 * std::log(6.0)));
    CHECK(state.mu == state.lambda / 2);
    double wsum = 0.0;
    for (const double w : state.weights) {
        CHECK(w > 0.0);
        wsum += w;
    }
    CHECK(wsum == doctest::Approx(1.0));

    Rng rng(2);
    const auto rosenbrock = [](const std::vector<double>& x) {
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < x.size(); ++i) {
            acc += 100.0 * std::pow(x[i + 1] - x[i] * x[i], 2) + std::pow(1.0 - x[i], 2);
        }
        return acc;
    };
    for (int g = 0; g < 60; ++g) {
        const auto pop = cmaes_ask(state, rng);
        REQUIRE(pop.size() == static_cast<std::size_t>(state.lambda));
        std::vector<double> vals;
        for (const auto& x : pop) vals.push_back(rosenbrock(x));
        // cmaes_tell internally verifies symmetry and positive-definiteness,
        // throwing on violation.
        REQUIRE_NOTHROW(cmaes_tell(state, pop, vals));
        REQUIRE(state.sigma > 0.0);
    }
    CHECK(state.generation == 60);
}

TEST_CASE("argmax_decode picks the max block index per position") {
    const std::vector<double> x{0.1, 0.9, 0.0, 0.2,   // -> symbol 1
                                -1.0, -2.0, -0.5, -3.0}; // -> symbol 2
    const auto seq = argmax_decode(x, 2, 4);
    REQUIRE(seq.size() == 2);
    CHECK(seq[0] == 1);
    CHECK(seq[1] == 2);
    CHECK_THROWS(argmax_decode(x, 3, 4)); // length mismatch
}

TEST_CASE("cmaes over one-hot encoding improves and books every call") {
    const auto land = NkLandscape::generate(10, 1, kAcgt, 3);
    const auto seeds = scored_pool(land, 20, 4);
    OracleBudget budget;
    budget.calls_per_round = 64;
    BaselineConfig cfg;
    cfg.rounds = 6;
    cfg.top_k = 8;
    cfg.seed = 5;
    const auto result = cmaes_sequence_optimize(land, budget, seeds,
                                                CmaesEncoding::OneHot, nullptr, 0, cfg);
    CHECK(result.total_oracle_calls == budget.total_calls);
    CHECK(result.total_oracle_calls <= 6L * 64L);
    CHECK(result.best.size() <= 8);
    // Best-so-far is non-decreasing across rounds.
    double prev = -1e300;
    for (const auto& round : result.rounds) {
        double round_best = -1e300;
        for (const auto& e : round.best) round_best = std::max(round_best, e.fitness);
        REQUIRE(round_best >= prev);
        prev = round_best;
    }
    // The seed set is part of the books, so the result can't be worse.
    double seed_best = -1e300;
    for (const auto& e : seeds.entries) seed_best = std::max(seed_best, e.fitness);
    CHECK(best_fitness(result) >= seed_best);
}

TEST_CASE("greedy with zero kappa hill-climbs") {
    const auto land = NkLandscape::generate(12, 0, kAcgt, 6);
    auto seeds = scored_pool(land, 4, 7);
    OracleBudget budget;
    budget.calls_per_round = 64;
    BaselineConfig cfg;
    cfg.rounds = 10;
    cfg.top_k = 4;
    cfg.kappa = 0.0;
    cfg.parents = 1;
    cfg.seed = 8;
    const auto result = greedy_evolution(land, budget, seeds, cfg);
    double seed_best = -1e300;
    for (const auto& e : seeds.entries) seed_best = std::max(seed_best, e.fitness);
    CHECK(best_fitness(result) >= seed_best);
    double prev = -1e300;
    for (const auto& round : result.rounds) {
        double round_best = -1e300;
        for (const auto& e : round.best) round_best = std::max(round_best, e.fitness);
        REQUIRE(round_best >= prev);
        prev = round_best;
    }
}

TEST_CASE("greedy stalls and reports it when mutation cannot move") {
    // A mutation rate so small every child equals its parent: the run must
    // detect that no new sequences appear and stop early.
    const auto land = NkLandscape::generate(8, 0, kAcgt, 9);
    const auto seeds = scored_pool(land, 4, 10);
    OracleBudget budget;
    budget.calls_per_round = 64;
    BaselineConfig cfg;
    cfg.rounds = 10;
    cfg.top_k = 4;
    cfg.seed = 11;
    cfg.mutation_rate = 1e-12;
    const auto result = greedy_evolution(land, budget, seeds, cfg);
    CHECK(result.stalled);
    CHECK(result.rounds.size() < 10); // ended early
}

TEST_CASE("greedy solves additive landscapes in most seeded runs") {
    const auto land = NkLandscape::generate(20, 0, kAcgt, 12);
    // With no epistasis the optimum factorizes per position.
    Sequence opt(20, 0);
    for (std::size_t p = 0; p < 20; ++p) {
        auto trial = opt;
        double best = -1e300;
        for (std::uint8_t v = 0; v < 4; ++v) {
            trial[p] = v;
            const double f = land.evaluate(trial);
            if (f > best) {
                best = f;
                opt[p] = v;
            }
        }
    }
    const double opt_fit = land.evaluate(opt);
    int solved = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto seeds = scored_pool(land, 8, 100 + seed);
        OracleBudget budget;
        budget.calls_per_round = 128;
        BaselineConfig cfg;
        cfg.rounds = 20;
        cfg.top_k = 8;
        cfg.seed = seed;
        cfg.kappa = 0.0;
        cfg.parents = 1; // pure hill-climb concentrates the budget
        const auto result = greedy_evolution(land, budget, seeds, cfg);
        solved += best_fitness(result) >= opt_fit - 1e-9;
    }
    CHECK(solved >= 4);
}

TEST_CASE("pareto filter examples") {
    // (d=1, f=0.5) dominates (d=2, f=0.4).
    const std::vector<std::pair<int, double>> pts{{1, 0.5}, {2, 0.4}};
    CHECK(pareto_non_dominated(pts) == std::vector<std::size_t>{0});

    // The reference at d=0 survives any frontier.
    const std::vector<std::pair<int, double>> with_ref{{0, 0.1}, {1, 0.5}, {2, 0.6}};
    const auto keep = pareto_non_dominated(with_ref);
    CHECK(std::find(keep.begin(), keep.end(), 0u) != keep.end());
    CHECK(keep == std::vector<std::size_t>{0, 1, 2});

    // Duplicates of a surviving point all survive.
    const std::vector<std::pair<int, double>> dup{{1, 0.5}, {1, 0.5}, {2, 0.4}};
    CHECK(pareto_non_dominated(dup) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("pareto filter matches brute force on random point sets") {
    Rng rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::pair<int, double>> pts;
        const std::size_t n = 1 + rng.uniform_int(50);
        for (std::size_t i = 0; i < n; ++i) {
            pts.push_back({static_cast<int>(rng.uniform_int(8)),
                           std::round(rng.uniform() * 4.0) / 4.0});
        }
        auto got = pareto_non_dominated(pts);
        auto want = brute_force_pareto(pts);
        std::sort(got.begin(), got.end());
        std::sort(want.begin(), want.end());
        REQUIRE(got == want);
    }
}

TEST_CASE("distance-prioritized search improves within budget") {
    const auto land = NkLandscape::generate(10, 1, kAcgt, 14);
    const auto seeds = scored_pool(land, 10, 15);
    const auto reference = select_reference(seeds);
    OracleBudget budget;
    budget.calls_per_round = 64;
    BaselineConfig cfg;
    cfg.rounds = 8;
    cfg.top_k = 8;
    cfg.seed = 16;
    const auto result =
        distance_prioritized_search(land, budget, reference, seeds, cfg);
    CHECK(result.total_oracle_calls == budget.total_calls);
    CHECK(result.total_oracle_calls <= 8L * 64L);
    double seed_best = -1e300;
    for (const auto& e : seeds.entries) seed_best = std::max(seed_best, e.fitness);
    CHECK(best_fitness(result) >= seed_best);
}

TEST_CASE("random search radius zero re-evaluates the seeds only") {
    const auto land = NkLandscape::generate(8, 1, kAcgt, 17);
    const auto seeds = scored_pool(land, 6, 18);
    OracleBudget budget;
    budget.calls_per_round = 32;
    BaselineConfig cfg;
    cfg.rounds = 3;
    cfg.top_k = 6;
    cfg.seed = 19;
    cfg.mutation_radius = 0;
    const auto result = random_search(land, budget, seeds, cfg);
    std::set<Sequence> seed_set;
    for (const auto& e : seeds.entries) seed_set.insert(e.seq);
    for (const auto& e : result.best) {
        REQUIRE(seed_set.count(e.seq) == 1);
    }
}

TEST_CASE("random search result dominates its seed set") {
    const auto land = NkLandscape::generate(10, 1, kAcgt, 20);
    const auto seeds = scored_pool(land, 6, 21);
    OracleBudget budget;
    budget.calls_per_round = 64;
    BaselineConfig cfg;
    cfg.rounds = 4;
    cfg.top_k = 8;
    cfg.seed = 22;
    const auto result = random_search(land, budget, seeds, cfg);
    double seed_best = -1e300;
    for (const auto& e : seeds.entries) seed_best = std::max(seed_best, e.fitness);
    CHECK(best_fitness(result) >= seed_best);
    CHECK(result.total_oracle_calls <= 4L * 64L);
}

TEST_CASE("greedy beats random search on a rugged landscape") {
    const auto land = NkLandscape::generate(20, 2, kAcgt, 40);
    std::vector<double> greedy_best, random_best;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto seeds = scored_pool(land, 8, 200 + seed);
        BaselineConfig cfg;
        cfg.rounds = 10;
        cfg.top_k = 8;
        cfg.seed = seed;
        OracleBudget gb;
        gb.calls_per_round = 128;
        greedy_best.push_back(best_fitness(greedy_evolution(land, gb, seeds, cfg)));
        OracleBudget rb;
        rb.calls_per_round = 128;
        random_best.push_back(best_fitness(random_search(land, rb, seeds, cfg)));
    }
    std::sort(greedy_best.begin(), greedy_best.end());
    std::sort(random_best.begin(), random_best.end());
    CHECK(random_best[2] < greedy_best[2]); // median over the five seeds
}

TEST_CASE("all baselines share the same budget ledger contract") {
    const auto land = NkLandscape::generate(10, 1, kAcgt, 23);
    const auto seeds = scored_pool(land, 12, 24);
    const auto reference = select_reference(seeds);
    BaselineConfig cfg;
    cfg.rounds = 4;
    cfg.top_k = 8;
    cfg.seed = 25;

    const auto check_ledger = [&](auto&& run) {
        OracleBudget budget;
        budget.calls_per_round = 48;
        const BaselineResult result = run(budget);
        REQUIRE(result.total_oracle_calls == budget.total_calls);
        long per_round = 0;
        for (const auto& round : result.rounds) {
            REQUIRE(round.oracle_calls <= 48);
            per_round += round.oracle_calls;
        }
        REQUIRE(per_round == result.total_oracle_calls);
    };

    check_ledger([&](OracleBudget& b) {
        return cmaes_sequence_optimize(land, b, seeds, CmaesEncoding::OneHot, nullptr,
                                       0, cfg);
    });
    check_ledger([&](OracleBudget& b) { return greedy_evolution(land, b, seeds, cfg); });
    check_ledger([&](OracleBudget& b) {
        return distance_prioritized_search(land, b, reference, seeds, cfg);
    });
    check_ledger([&](OracleBudget& b) { return random_search(land, b, seeds, cfg); });
}
