#pragma once

#include <cstdint>
#include <string_view>

namespace lpo {

// Deterministic RNG with portable output. All randomness in a run flows from
// one root seed through named sub-streams so individual modules can be
// replayed in isolation.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform in [0, 1).
    double uniform();

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_int(std::uint64_t n);

    // Standard normal via Box-Muller.
    double normal();

private:
    std::uint64_t state_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Derives a child seed for a named sub-stream (buffer, env, policy, ...).
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream);

} // namespace lpo
