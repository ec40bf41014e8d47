#pragma once

#include <optional>
#include <vector>

#include "lpo/core.hpp"

namespace lpo {

struct Metrics {
    double fitness = 0.0;   // median fitness of the generated set
    double diversity = 0.0; // median pairwise Hamming distance
    double d_init = 0.0;    // median of min distance to the initial dataset
    std::optional<double> d_high; // same against top-10% of the full dataset
};

// G: generated scored sequences; d_init against init; d_high against the
// top-10%-by-fitness subset of full (absent when full is null).
Metrics compute_metrics(const std::vector<ScoredSequence>& G, const Dataset& init,
                        const Dataset* full);

struct DatasetStats {
    double median_fitness = 0.0;
    double top128_median = 0.0;
    // (percent, fitness value at that ascending rank)
    std::vector<std::pair<double, double>> percentiles;
};

DatasetStats dataset_stats(const Dataset& data);

// Classical (Torgerson) MDS into `dims` coordinates via power iteration with
// deflation. dist is a dense symmetric n x n matrix with zero diagonal.
// Sign convention: first nonzero coordinate of each axis is positive.
std::vector<std::vector<double>> mds_embed(const std::vector<std::vector<double>>& dist,
                                           int dims = 2);

} // namespace lpo
