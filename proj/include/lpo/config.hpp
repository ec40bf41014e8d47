#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "lpo/baselines.hpp"
#include "lpo/driver.hpp"
#include "lpo/landscape.hpp"
#include "lpo/ved.hpp"

namespace lpo {

// Config/validation problem; the CLI maps it to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OracleSpec {
    std::string kind = "nk"; // nk | csv | predictor
    std::string path;
    bool normalize = true;              // csv
    std::string miss_policy = "nearest"; // csv: strict | nearest
    PredictorConfig predictor;           // predictor: trained on `path`
};

struct DatasetSpec {
    std::string path;
    bool normalize = true;
};

// Fitness-percentile band selecting the initial dataset from the pool.
struct BandSpec {
    std::string name = "medium"; // medium [20,40) | hard [10,30) | custom
    double lo = 20.0;
    double hi = 40.0;

    // Percentile bounds after resolving the named bands.
    std::pair<double, double> range() const;
};

struct LandscapeSpec {
    int L = 20;
    int K = 2;
    std::string vocab = "ACGT";
    std::uint64_t seed = 1;
    int samples = 0; // optional random pool CSV emitted alongside the descriptor
};

struct TaskConfig {
    std::string method = "latprotrl"; // latprotrl | cmaes-onehot | cmaes-ved |
                                      // greedy | pex-style | random
    std::uint64_t seed = 0;
    int workers = 1;
    std::string out = "run";
    OracleSpec oracle;
    DatasetSpec dataset;
    BandSpec band;
    std::string ved_checkpoint;
    VedTrainConfig ved_train;
    CampaignConfig campaign;
    BaselineConfig baseline;
    LandscapeSpec landscape;
};

inline constexpr const char* kTaskConfigSchema = "task-config-v1";

TaskConfig parse_task_config(const nlohmann::json& j);
TaskConfig load_task_config(const std::string& path);

// Fully resolved round-trippable form; parse_task_config(task_config_to_json(c))
// reproduces c. Written into run_meta so a run can be replayed from it.
nlohmann::json task_config_to_json(const TaskConfig& cfg);

} // namespace lpo
