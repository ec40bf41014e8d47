// Compares the serial reference loops against the OpenMP slot-parallel
// kernels: batch NK evaluation, batched MLP forward passes, and pairwise
// Hamming distances. Also asserts the two paths agree bit-exactly.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "lpo/core.hpp"
#include "lpo/landscape.hpp"
#include "lpo/nn.hpp"
#include "lpo/parallel.hpp"
#include "lpo/rng.hpp"

using namespace lpo;

namespace {

double now_ms() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch())
        .count();
}

template <typename Fn>
double time_ms(Fn&& fn, int reps) {
    fn(); // warm-up
    const double t0 = now_ms();
    for (int r = 0; r < reps; ++r) fn();
    return (now_ms() - t0) / reps;
}

void report(const char* name, double serial_ms, double parallel_ms, bool equal) {
    std::printf("%-24s serial %8.2f ms   parallel %8.2f ms   speedup %5.2fx   %s\n",
                name, serial_ms, parallel_ms, serial_ms / parallel_ms,
                equal ? "bit-exact" : "MISMATCH");
}

} // namespace

int main(int argc, char** argv) {
    int workers = 4;
    int reps = 5;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--workers" && i + 1 < argc) workers = std::atoi(argv[++i]);
        if (arg == "--reps" && i + 1 < argc) reps = std::atoi(argv[++i]);
    }
    std::printf("workers=%d reps=%d\n", workers, reps);
    Rng rng(derive_seed(7, "bench"));

    // Batch NK evaluation.
    {
        const Vocabulary vocab("ACGT");
        const auto land = NkLandscape::generate(60, 4, vocab, 11);
        std::vector<Sequence> batch(4096);
        for (auto& s : batch) {
            s.resize(60);
            for (auto& c : s) c = static_cast<std::uint8_t>(rng.uniform_int(4));
        }
        std::vector<double> serial_out(batch.size()), parallel_out(batch.size());
        set_parallel_workers(1);
        const double ts = time_ms(
            [&] {
                serial_for(batch.size(),
                           [&](std::size_t i) { serial_out[i] = land.evaluate(batch[i]); });
            },
            reps);
        set_parallel_workers(workers);
        const double tp = time_ms(
            [&] { parallel_out = land.evaluate_batch(batch); }, reps);
        report("nk-batch-evaluate", ts, tp, serial_out == parallel_out);
    }

    // Batched MLP forward.
    {
        Rng init(derive_seed(7, "bench-mlp"));
        const auto net = Mlp::make({512, 256, 256, 64},
                                   {Act::Tanh, Act::Tanh, Act::Identity}, true, init);
        std::vector<std::vector<double>> inputs(2048, std::vector<double>(512));
        for (auto& x : inputs) {
            for (auto& v : x) v = rng.uniform() * 2.0 - 1.0;
        }
        std::vector<std::vector<double>> serial_out(inputs.size()), parallel_out(inputs.size());
        set_parallel_workers(1);
        const double ts = time_ms(
            [&] {
                serial_for(inputs.size(),
                           [&](std::size_t i) { serial_out[i] = forward(net, inputs[i]); });
            },
            reps);
        set_parallel_workers(workers);
        const double tp = time_ms(
            [&] {
                parallel_for(inputs.size(),
                             [&](std::size_t i) { parallel_out[i] = forward(net, inputs[i]); });
            },
            reps);
        report("mlp-batch-forward", ts, tp, serial_out == parallel_out);
    }

    // Pairwise Hamming distances (per-row slots).
    {
        std::vector<Sequence> seqs(768);
        for (auto& s : seqs) {
            s.resize(237);
            for (auto& c : s) c = static_cast<std::uint8_t>(rng.uniform_int(20));
        }
        const std::size_t n = seqs.size();
        std::vector<std::vector<int>> serial_out(n), parallel_out(n);
        auto row = [&](std::vector<std::vector<int>>& out, std::size_t i) {
            out[i].resize(n);
            for (std::size_t j = 0; j < n; ++j) {
                out[i][j] = hamming_distance(seqs[i], seqs[j]);
            }
        };
        set_parallel_workers(1);
        const double ts =
            time_ms([&] { serial_for(n, [&](std::size_t i) { row(serial_out, i); }); }, reps);
        set_parallel_workers(workers);
        const double tp =
            time_ms([&] { parallel_for(n, [&](std::size_t i) { row(parallel_out, i); }); }, reps);
        report("pairwise-hamming", ts, tp, serial_out == parallel_out);
    }
    return 0;
}
