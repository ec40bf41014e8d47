#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "lpo/core.hpp"
#include "lpo/env.hpp"
#include "lpo/frontier_buffer.hpp"
#include "lpo/landscape.hpp"
#include "lpo/rng.hpp"
#include "lpo/ved.hpp"

using namespace lpo;

namespace {

const Vocabulary kAcgt("ACGT");

Sequence random_seq(std::size_t L, int V, Rng& rng) {
    Sequence s(L);
    for (auto& c : s) c = static_cast<std::uint8_t>(rng.uniform_int(static_cast<std::uint64_t>(V)));
    return s;
}

// Decoder reading only the position one-hot block: position p always decodes
// to the chosen logit row (see decoder input layout R ++ L ++ V).
void install_tabular_decoder(VedModel& model,
                             const std::vector<std::vector<double>>& rows) {
    const int L = model.length();
    const int V = model.vocab.size();
    Layer layer;
    layer.in = model.R + L + V;
    layer.out = V;
    layer.has_bias = true;
    layer.act = Act::Identity;
    layer.w.assign(static_cast<std::size_t>(layer.out * layer.in), 0.0);
    layer.b.assign(static_cast<std::size_t>(V), 0.0);
    for (int p = 0; p < L; ++p) {
        for (int v = 0; v < V; ++v) {
            layer.w[static_cast<std::size_t>(v * layer.in + model.R + p)] =
                rows[static_cast<std::size_t>(p)][static_cast<std::size_t>(v)];
        }
    }
    model.decoder.layers.assign(1, layer);
}

// VED over an all-zeros reference whose decoder mutates the first n_mut
// positions to symbol 1 and reproduces the template elsewhere.
VedModel fixed_mutation_ved(int L, int R, int n_mut, Rng& rng) {
    VedArch arch;
    arch.R = R;
    arch.enc_hidden = 8;
    arch.dec_hidden = 8;
    auto model = VedModel::make(Sequence(static_cast<std::size_t>(L), 0), kAcgt, arch, rng);
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(L),
                                          {5.0, 0.0, 0.0, 0.0});
    for (int p = 0; p < n_mut; ++p) rows[static_cast<std::size_t>(p)] = {0.0, 5.0, 0.0, 0.0};
    install_tabular_decoder(model, rows);
    return model;
}

EnvConfig small_cfg(int R) {
    EnvConfig cfg;
    cfg.R = R;
    cfg.t_ep = 4;
    cfg.m_step = 2;
    cfg.m_total = 4;
    cfg.m_decode = 3;
    return cfg;
}

class CountingOracle : public Oracle {
public:
    explicit CountingOracle(std::size_t length) : length_(length) {}
    double evaluate(const Sequence& seq) const override {
        ++calls;
        double acc = 0.0;
        for (const auto c : seq) acc += c;
        return acc / (4.0 * static_cast<double>(seq.size()));
    }
    std::size_t length() const override { return length_; }
    mutable long calls = 0;

private:
    std::size_t length_;
};

// Builds a synthetic complete trajectory from validity flags; the final
// transition is the terminal one.
Trajectory synthetic_trajectory(const std::vector<bool>& valid, Rng& rng) {
    Trajectory traj;
    for (std::size_t t = 0; t < valid.size(); ++t) {
        Transition tr;
        tr.x_next = random_seq(6, 4, rng);
        tr.valid = valid[t];
        tr.done = t + 1 == valid.size();
        traj.push_back(std::move(tr));
    }
    return traj;
}

} // namespace

TEST_CASE("config validation rejects inconsistent bounds") {
    EnvConfig ok = small_cfg(4);
    CHECK_NOTHROW(ok.validate());
    auto bad = ok;
    bad.delta = 0.0;
    CHECK_THROWS(bad.validate());
    bad = ok;
    bad.t_ep = 0;
    CHECK_THROWS(bad.validate());
    bad = ok;
    bad.m_step = 0;
    CHECK_THROWS(bad.validate());
    bad = ok;
    bad.m_step = bad.m_decode + 1;
    CHECK_THROWS(bad.validate());
    bad = ok;
    bad.m_total = bad.m_step - 1;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("reset starts at the encoded initial sequence") {
    Rng rng(1);
    auto ved = fixed_mutation_ved(6, 4, 0, rng);
    const LatentEnv env(small_cfg(4), ved);

    // From the reference the latent state is exactly zero.
    const auto st = env.reset_from(ved.reference);
    CHECK(st.t == 0);
    CHECK(!st.done);
    CHECK(st.x == ved.reference);
    CHECK(st.x0 == ved.reference);
    for (const double v : st.s) CHECK(v == 0.0);

    // Buffer-driven resets replay deterministically for equal seeds.
    Dataset d;
    d.vocab = kAcgt;
    for (int i = 0; i < 4; ++i) d.entries.push_back({random_seq(6, 4, rng), 0.1 * i});
    FrontierBuffer::Params p;
    p.capacity = 4;
    FrontierBuffer b1(p, 77), b2(p, 77);
    b1.initialize(d);
    b2.initialize(d);
    for (int i = 0; i < 10; ++i) {
        CHECK(env.reset(b1).x0 == env.reset(b2).x0);
    }
}

TEST_CASE("identity step keeps the template and stays valid") {
    Rng rng(2);
    auto ved = fixed_mutation_ved(6, 4, 0, rng);
    const LatentEnv env(small_cfg(4), ved);
    auto st = env.reset_from(ved.reference);
    const std::vector<double> zero(4, 0.0);
    const auto tr = env.step(st, zero);
    CHECK(tr.x_next == ved.reference);
    CHECK(tr.valid);
    CHECK(!tr.done);
    CHECK(st.t == 1);
    CHECK(tr.s_next == tr.s);
}

TEST_CASE("step is invalid when decoding exceeds m_step") {
    Rng rng(3);
    // Decoder forces 3 mutations; m_step = 2.
    auto ved = fixed_mutation_ved(6, 4, 3, rng);
    const LatentEnv env(small_cfg(4), ved);
    auto st = env.reset_from(ved.reference);
    const auto tr = env.step(st, std::vector<double>(4, 0.0));
    CHECK(hamming_distance(tr.x_next, ved.reference) == 3);
    CHECK(!tr.valid);

    // The calibration ablation forces validity on the same setup.
    auto cfg = small_cfg(4);
    cfg.force_valid = true;
    const LatentEnv forced(cfg, ved);
    auto st2 = forced.reset_from(ved.reference);
    CHECK(forced.step(st2, std::vector<double>(4, 0.0)).valid);
}

TEST_CASE("episodes end at the step horizon or the total-distance bound") {
    Rng rng(4);
    auto identity = fixed_mutation_ved(6, 4, 0, rng);
    const LatentEnv env(small_cfg(4), identity);
    auto st = env.reset_from(identity.reference);
    const std::vector<double> zero(4, 0.0);
    for (int t = 0; t < 3; ++t) CHECK(!env.step(st, zero).done);
    const auto last = env.step(st, zero);
    CHECK(last.done); // t+1 == t_ep regardless of distance
    CHECK(st.done);
    CHECK_THROWS(env.step(st, zero)); // acting on a done state

    // Distance bound: decoder jumps 3 mutations per step from the template,
    // so step 2 breaches m_total = 4 long before the horizon.
    auto jumper = fixed_mutation_ved(12, 4, 3, rng);
    EnvConfig cfg = small_cfg(4);
    cfg.m_step = 3;
    cfg.m_total = 4;
    cfg.m_decode = 3;
    cfg.t_ep = 10;
    const LatentEnv jump_env(cfg, jumper);
    auto st2 = jump_env.reset_from(random_seq(12, 4, rng));
    int steps = 0;
    while (!st2.done) {
        jump_env.step(st2, std::vector<double>(4, 0.0));
        ++steps;
        REQUIRE(steps <= 10);
    }
    CHECK(steps < 10);
    CHECK(hamming_distance(st2.x, st2.x0) > cfg.m_total);
}

TEST_CASE("latent dynamics clamp actions and states and log clamps") {
    Rng rng(5);
    auto ved = fixed_mutation_ved(6, 4, 0, rng);
    EnvConfig cfg = small_cfg(4);
    cfg.delta = 0.3;
    cfg.t_ep = 20;
    const LatentEnv env(cfg, ved);
    auto st = env.reset_from(ved.reference);

    // Oversized action component clamps to delta and is counted.
    CHECK(env.clamp_events() == 0);
    const auto tr = env.step(st, std::vector<double>{0.9, -0.9, 0.1, 0.0});
    CHECK(env.clamp_events() == 1);
    CHECK(tr.a[0] == 0.3);
    CHECK(tr.a[1] == -0.3);
    CHECK(tr.a[2] == 0.1);
    CHECK(tr.s_next[0] == doctest::Approx(0.3));

    // Repeated max actions saturate the latent state at 1.
    for (int i = 0; i < 10 && !st.done; ++i) {
        env.step(st, std::vector<double>(4, 0.3));
    }
    for (const double v : st.s) {
        CHECK(v <= 1.0);
        CHECK(v >= -1.0);
    }
    CHECK(st.s[0] == 1.0);

    // In-range actions do not add clamp events.
    const long before = env.clamp_events();
    auto st2 = env.reset_from(ved.reference);
    env.step(st2, std::vector<double>(4, 0.25));
    CHECK(env.clamp_events() == before);
}

TEST_CASE("action dimension mismatches error") {
    Rng rng(6);
    auto ved = fixed_mutation_ved(6, 4, 0, rng);
    const LatentEnv env(small_cfg(4), ved);
    auto st = env.reset_from(ved.reference);
    CHECK_THROWS(env.step(st, std::vector<double>(3, 0.0)));
}

TEST_CASE("mutation env applies one substitution per action") {
    EnvConfig cfg = small_cfg(4);
    cfg.t_ep = 3;
    cfg.m_total = 2;
    const MutationEnv env(cfg, MutationEnv::StateMode::OneHot, nullptr, kAcgt, 5);
    CHECK(env.state_dim() == 20);
    CHECK(env.n_actions() == 20);

    auto st = env.reset_from(Sequence(5, 0));
    // Action index 7 = position 1, symbol 3.
    const auto tr = env.step(st, std::vector<double>{7.0});
    CHECK(tr.x_next[1] == 3);
    CHECK(hamming_distance(tr.x_next, st.x0) == 1);
    CHECK(tr.valid);
    CHECK(tr.s_next == one_hot(st.x, 4));

    // Re-writing the current symbol is a no-op substitution.
    auto st2 = env.reset_from(Sequence(5, 2));
    const auto same = env.step(st2, std::vector<double>{2.0}); // pos 0, symbol 2
    CHECK(same.x_next == st2.x0);

    // The distance bound terminates after m_total distinct substitutions.
    auto st3 = env.reset_from(Sequence(5, 0));
    env.step(st3, std::vector<double>{1.0});  // pos 0 -> symbol 1
    env.step(st3, std::vector<double>{5.0});  // pos 1 -> symbol 1
    CHECK(!st3.done);

    auto st4 = env.reset_from(Sequence(5, 0));
    CHECK_THROWS(env.step(st4, std::vector<double>{20.0}));
    CHECK_THROWS(env.step(st4, std::vector<double>{-1.0}));
    CHECK_THROWS(env.step(st4, std::vector<double>{1.0, 2.0}));
}

TEST_CASE("mutation env latent mode re-encodes each step") {
    Rng rng(7);
    auto ved = fixed_mutation_ved(5, 4, 0, rng);
    const MutationEnv env(small_cfg(4), MutationEnv::StateMode::Latent, &ved, kAcgt, 5);
    CHECK(env.state_dim() == 4);
    auto st = env.reset_from(ved.reference);
    for (const double v : st.s) CHECK(v == 0.0); // encode(reference) = 0
    const auto tr = env.step(st, std::vector<double>{6.0}); // pos 1 -> symbol 2
    CHECK(tr.s_next == encode(ved, tr.x_next));

    CHECK_THROWS(MutationEnv(small_cfg(4), MutationEnv::StateMode::Latent, nullptr,
                             kAcgt, 5));
}

TEST_CASE("sparse rewards follow the validity/terminal contract exhaustively") {
    // All validity patterns for every episode length up to 4.
    for (int T = 1; T <= 4; ++T) {
        for (int mask = 0; mask < (1 << T); ++mask) {
            Rng rng(static_cast<std::uint64_t>(T * 100 + mask));
            std::vector<bool> valid(static_cast<std::size_t>(T));
            for (int t = 0; t < T; ++t) valid[static_cast<std::size_t>(t)] = mask >> t & 1;

            std::vector<Trajectory> trajs{synthetic_trajectory(valid, rng)};
            const CountingOracle oracle(6);
            OracleBudget budget;
            budget.calls_per_round = 8;
            FrontierBuffer::Params p;
            p.capacity = 2;
            FrontierBuffer buffer(p, 5);
            Dataset d;
            d.vocab = kAcgt;
            d.entries.push_back({from_string("AAAAAA", kAcgt), -10.0});
            d.entries.push_back({from_string("CCCCCC", kAcgt), -9.0});
            buffer.initialize(d);

            assign_rewards(trajs, oracle, budget, &buffer);

            const bool terminal_valid = valid.back();
            CHECK(oracle.calls == (terminal_valid ? 1 : 0));
            CHECK(budget.calls_used_this_round == (terminal_valid ? 1 : 0));
            for (int t = 0; t < T; ++t) {
                const auto& tr = trajs[0][static_cast<std::size_t>(t)];
                REQUIRE(tr.rewarded);
                if (!tr.valid) {
                    REQUIRE(tr.reward == -1.0);
                } else if (t + 1 == T) {
                    REQUIRE(tr.reward >= 0.0); // oracle range
                    // High-fitness terminals enter the low-fitness buffer.
                    bool present = false;
                    for (const auto& e : buffer.entries()) present |= e.seq == tr.x_next;
                    REQUIRE(present);
                } else {
                    REQUIRE(tr.reward == 0.0);
                }
            }
        }
    }
}

TEST_CASE("assign_rewards rejects incomplete trajectories and exhausted budgets") {
    Rng rng(9);
    const CountingOracle oracle(6);
    OracleBudget budget;
    budget.calls_per_round = 1;

    std::vector<Trajectory> incomplete{synthetic_trajectory({true, true}, rng)};
    incomplete[0].back().done = false;
    CHECK_THROWS(assign_rewards(incomplete, oracle, budget, nullptr));

    // Two valid-terminal episodes against a one-call budget.
    std::vector<Trajectory> two{synthetic_trajectory({true}, rng),
                                synthetic_trajectory({true}, rng)};
    CHECK_THROWS_AS(assign_rewards(two, oracle, budget, nullptr), BudgetExceeded);
}

TEST_CASE("dense rewards score every valid timestep with the predictor") {
    Rng rng(10);
    const CountingOracle predictor(6);
    std::vector<Trajectory> trajs{synthetic_trajectory({true, false, true}, rng)};
    assign_dense_rewards(trajs, predictor);
    CHECK(predictor.calls == 2); // invalid step skips the predictor
    CHECK(trajs[0][0].reward == predictor.evaluate(trajs[0][0].x_next));
    CHECK(trajs[0][1].reward == -1.0);
    CHECK(trajs[0][2].reward == predictor.evaluate(trajs[0][2].x_next));
}
