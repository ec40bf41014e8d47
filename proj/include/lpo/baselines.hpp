#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "lpo/core.hpp"
#include "lpo/landscape.hpp"
#include "lpo/rng.hpp"
#include "lpo/ved.hpp"

namespace lpo {

// --- CMA-ES core (minimization over R^n) ---------------------------------

// Standard (mu/mu_w, lambda) strategy state. Covariance is kept symmetric
// positive-definite; the update re-checks both after every generation.
struct CmaesState {
    int n = 0;
    int lambda = 0;
    int mu = 0;
    int generation = 0;
    double sigma = 0.5;
    double mueff = 0.0, cc = 0.0, cs = 0.0, c1 = 0.0, cmu = 0.0, damps = 0.0;
    double chi_n = 0.0;
    std::vector<double> weights;      // mu recombination weights, sum 1
    std::vector<double> mean;         // n
    std::vector<double> pc, ps;       // evolution paths, n each
    std::vector<double> cov;          // n x n row-major
    std::vector<double> eigvecs;      // B, n x n row-major (columns = eigenvectors)
    std::vector<double> eigvals_sqrt; // D, n

    // lambda = 0 picks the default 4 + floor(3 ln n).
    static CmaesState make(std::vector<double> mean0, double sigma0, int lambda = 0);
};

// Samples lambda candidates mean + sigma * B D z.
std::vector<std::vector<double>> cmaes_ask(const CmaesState& state, Rng& rng);

// Rank-based mean/path/covariance/sigma update (lower value is better).
// Throws if the covariance loses symmetry (1e-10) or positive-definiteness.
void cmaes_tell(CmaesState& state, const std::vector<std::vector<double>>& candidates,
                const std::vector<double>& values);

struct CmaesRunResult {
    std::vector<double> best_x;
    double best_value = 0.0;
    int evaluations = 0;
};

CmaesRunResult cmaes_minimize(const std::function<double(std::span<const double>)>& f,
                              std::vector<double> mean0, double sigma0, int max_evals,
                              std::uint64_t seed);

// --- Sequence-space baselines --------------------------------------------

struct BaselineConfig {
    int rounds = 15;
    std::size_t top_k = 128;
    std::uint64_t seed = 0;
    double mutation_rate = 0.0; // greedy per-position rate; 0 means 1/L
    double kappa = 0.05;        // greedy acceptance threshold fraction
    int parents = 16;           // greedy parent pool size
    int mutation_radius = 3;    // random search
    double sigma0 = 0.5;        // CMA-ES initial step size
};

struct BaselineRound {
    int round = 0;
    std::vector<ScoredSequence> best; // top-k so far
    int oracle_calls = 0;
};

struct BaselineResult {
    std::vector<ScoredSequence> best; // final top-k
    std::vector<BaselineRound> rounds;
    long total_oracle_calls = 0;
    bool stalled = false; // greedy search stopped producing new sequences
};

// Per-position argmax over V-sized blocks of x (length must be L*V).
Sequence argmax_decode(std::span<const double> x, int L, int V);

enum class CmaesEncoding { OneHot, Latent };

// CMA-ES maximizing oracle fitness through a decode step. Latent encoding
// decodes through the VED with constrained_decode against its reference.
BaselineResult cmaes_sequence_optimize(const Oracle& oracle, OracleBudget& budget,
                                       const Dataset& seeds, CmaesEncoding encoding,
                                       const VedModel* ved, int m_decode,
                                       const BaselineConfig& cfg);

// Threshold-greedy mutate-and-select rollout ("greedy (AdaLead-style)"):
// children of top parents are kept when they beat the parent by the fraction
// kappa. mutation_rate 0 falls back to 1/L. A round producing no new
// sequences sets `stalled` and ends the run.
BaselineResult greedy_evolution(const Oracle& oracle, OracleBudget& budget,
                                const Dataset& seeds, const BaselineConfig& cfg);

// Indices of points not dominated under (distance ascending, fitness
// descending); j dominates i when d_j <= d_i, f_j >= f_i, and one is strict.
std::vector<std::size_t> pareto_non_dominated(
    std::span<const std::pair<int, double>> points);

// Distance-prioritized evolutionary search ("distance-prioritized
// (PEX-style)"): keeps the Pareto frontier of (mutations from reference,
// fitness) and expands it with single-mutation children.
BaselineResult distance_prioritized_search(const Oracle& oracle, OracleBudget& budget,
                                           const Sequence& reference,
                                           const Dataset& seeds,
                                           const BaselineConfig& cfg);

// Uniform control: mutates random seeds at up to mutation_radius positions.
// Seeds themselves are evaluated first.
BaselineResult random_search(const Oracle& oracle, OracleBudget& budget,
                             const Dataset& seeds, const BaselineConfig& cfg);

} // namespace lpo
