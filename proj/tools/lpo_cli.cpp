#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lpo/baselines.hpp"
#include "lpo/config.hpp"
#include "lpo/driver.hpp"
#include "lpo/eval.hpp"
#include "lpo/parallel.hpp"
#include "lpo/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> out;
};

lpo::TaskConfig load_config(const std::string& path, const Overrides& ov) {
    if (path.empty()) throw lpo::ConfigError("config: --config is required");
    auto cfg = lpo::load_task_config(path);
    if (ov.seed) {
        cfg.seed = *ov.seed;
        cfg.campaign.seed = *ov.seed;
        cfg.baseline.seed = *ov.seed;
    }
    if (ov.workers) cfg.workers = *ov.workers;
    if (ov.out) cfg.out = *ov.out;
    if (cfg.workers < 1) throw lpo::ConfigError("config: workers must be >= 1");
    return cfg;
}

lpo::Dataset load_dataset_checked(const std::string& path, const lpo::Vocabulary& vocab,
                                  bool normalize) {
    if (path.empty()) throw lpo::ConfigError("config: dataset path is empty");
    if (!fs::exists(path)) throw lpo::ConfigError("config: dataset file not found: " + path);
    try {
        return lpo::load_csv_dataset(path, vocab, normalize);
    } catch (const std::exception& e) {
        throw lpo::ConfigError(std::string("config: ") + e.what());
    }
}

std::unique_ptr<lpo::Oracle> build_oracle(const lpo::TaskConfig& cfg,
                                          const lpo::Vocabulary& vocab) {
    const auto& spec = cfg.oracle;
    if (spec.kind == "nk") {
        if (spec.path.empty()) throw lpo::ConfigError("config: oracle.path is empty");
        if (!fs::exists(spec.path)) {
            throw lpo::ConfigError("config: landscape file not found: " + spec.path);
        }
        std::ifstream in(spec.path);
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw lpo::ConfigError("config: " + spec.path + ": " + e.what());
        }
        return std::make_unique<lpo::NkLandscape>(lpo::NkLandscape::from_descriptor(j));
    }
    if (spec.kind == "csv") {
        const auto data = load_dataset_checked(spec.path, vocab, spec.normalize);
        const auto policy = spec.miss_policy == "strict"
                                ? lpo::TabularOracle::MissPolicy::Strict
                                : lpo::TabularOracle::MissPolicy::NearestNeighbor;
        return std::make_unique<lpo::TabularOracle>(data, policy);
    }
    // predictor
    const auto data = load_dataset_checked(spec.path, vocab, spec.normalize);
    auto pc = spec.predictor;
    pc.seed = lpo::derive_seed(cfg.seed, "oracle-predictor");
    return std::make_unique<lpo::SurrogatePredictor>(lpo::train_predictor(data, pc));
}

lpo::VedModel load_ved_checked(const lpo::TaskConfig& cfg) {
    if (cfg.ved_checkpoint.empty()) {
        throw lpo::ConfigError("config: ved.checkpoint is required for latent methods");
    }
    if (!fs::exists(cfg.ved_checkpoint)) {
        throw lpo::ConfigError("config: VED checkpoint not found: " + cfg.ved_checkpoint);
    }
    std::ifstream in(cfg.ved_checkpoint);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw lpo::ConfigError("config: " + cfg.ved_checkpoint + ": " + e.what());
    }
    return lpo::ved_from_json(j);
}

bool needs_latent(const lpo::TaskConfig& cfg) {
    if (cfg.method == "cmaes-ved") return true;
    if (cfg.method != "latprotrl") return false;
    return cfg.campaign.state_action_mode != "seq/mut";
}

void write_run_meta(const lpo::TaskConfig& cfg, const json& result_extra) {
    json meta = lpo::task_config_to_json(cfg);
    meta["result"] = result_extra;
    std::ofstream out(cfg.out + "/run_meta.json");
    out << meta.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + cfg.out + "/run_meta.json");
}

void save_scored_set(const std::string& path, const std::vector<lpo::ScoredSequence>& set,
                     const lpo::Vocabulary& vocab) {
    lpo::Dataset d;
    d.vocab = vocab;
    d.entries = set;
    lpo::save_csv_dataset(d, path);
}

std::vector<lpo::RoundRecord> baseline_rounds(const lpo::BaselineResult& result,
                                              const std::vector<lpo::ScoredSequence>& seed_top,
                                              const lpo::Dataset& d_init,
                                              const lpo::Dataset* d_star) {
    std::vector<lpo::RoundRecord> rounds;
    auto make = [&](int round, const std::vector<lpo::ScoredSequence>& set, int calls) {
        lpo::RoundRecord rec;
        rec.round = round;
        rec.metrics = lpo::compute_metrics(set, d_init, d_star);
        rec.oracle_calls = calls;
        rec.epsilon = kNaN; // baselines have no sampling schedule
        double lo = set.front().fitness, hi = set.front().fitness;
        for (const auto& e : set) {
            lo = std::min(lo, e.fitness);
            hi = std::max(hi, e.fitness);
        }
        rec.buffer_min = lo;
        rec.buffer_max = hi;
        return rec;
    };
    rounds.push_back(make(0, seed_top, 0));
    for (const auto& r : result.rounds) rounds.push_back(make(r.round, r.best, r.oracle_calls));
    return rounds;
}

int cmd_gen_landscape(const lpo::TaskConfig& cfg) {
    const lpo::Vocabulary vocab(cfg.landscape.vocab);
    const auto land = lpo::NkLandscape::generate(cfg.landscape.L, cfg.landscape.K, vocab,
                                                 cfg.landscape.seed);
    fs::create_directories(cfg.out);
    const std::string path = cfg.out + "/landscape.json";
    std::ofstream out(path);
    out << land.descriptor().dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + path);
    std::cout << "landscape: L=" << land.positions() << " K=" << land.epistasis()
              << " -> " << path << '\n';
    if (cfg.landscape.samples > 0) {
        lpo::Rng rng(lpo::derive_seed(cfg.landscape.seed, "pool"));
        lpo::Dataset pool;
        pool.vocab = vocab;
        for (int i = 0; i < cfg.landscape.samples; ++i) {
            lpo::Sequence s(static_cast<std::size_t>(land.positions()));
            for (auto& c : s) c = static_cast<std::uint8_t>(rng.uniform_int(vocab.size()));
            pool.entries.push_back({s, land.evaluate(s)});
        }
        const std::string pool_path = cfg.out + "/pool.csv";
        lpo::save_csv_dataset(pool, pool_path);
        std::cout << "pool: " << cfg.landscape.samples << " samples -> " << pool_path << '\n';
    }
    return 0;
}

// Dataset is loaded with the vocabulary matching the oracle: NK landscapes use
// their own alphabet, everything else the protein alphabet.
lpo::Vocabulary task_vocab(const lpo::TaskConfig& cfg) {
    if (cfg.oracle.kind == "nk") {
        if (!cfg.oracle.path.empty() && fs::exists(cfg.oracle.path)) {
            std::ifstream in(cfg.oracle.path);
            json j;
            in >> j;
            if (j.contains("vocabulary")) {
                return lpo::Vocabulary(j.at("vocabulary").get<std::string>());
            }
        }
    }
    return lpo::Vocabulary::protein();
}

int cmd_train_ved(const lpo::TaskConfig& cfg) {
    const auto data =
        load_dataset_checked(cfg.dataset.path, task_vocab(cfg), cfg.dataset.normalize);
    auto tc = cfg.ved_train;
    tc.seed = cfg.seed;
    const auto [model, report] = lpo::train_ved(data, tc);
    fs::create_directories(cfg.out);
    const std::string ckpt = cfg.out + "/ved.json";
    {
        std::ofstream out(ckpt);
        out << lpo::ved_to_json(model).dump() << '\n';
        if (!out) throw std::runtime_error("cannot write " + ckpt);
    }
    json rep{{"epoch_loss", report.epoch_loss},
             {"epoch_train_accuracy", report.epoch_train_accuracy},
             {"holdout_mutated_accuracy", report.holdout_mutated_accuracy},
             {"holdout_non_mutated_accuracy", report.holdout_non_mutated_accuracy},
             {"train_rows", report.train_rows},
             {"holdout_rows", report.holdout_rows}};
    {
        std::ofstream out(cfg.out + "/ved_report.json");
        out << rep.dump(2) << '\n';
    }
    std::cout << "checkpoint: " << ckpt << '\n';
    std::cout << "rows: train=" << report.train_rows << " holdout=" << report.holdout_rows
              << '\n';
    std::cout << "accuracy mutated=" << report.holdout_mutated_accuracy
              << " non_mutated=" << report.holdout_non_mutated_accuracy << '\n';
    return 0;
}

int cmd_optimize(const lpo::TaskConfig& cfg, bool double_loop) {
    lpo::set_parallel_workers(cfg.workers);
    const auto vocab = task_vocab(cfg);
    const auto pool = load_dataset_checked(cfg.dataset.path, vocab, cfg.dataset.normalize);
    const auto [lo, hi] = cfg.band.range();
    const auto d_init = lpo::percentile_subset(pool, lo, hi);
    if (d_init.empty()) throw lpo::ConfigError("config: percentile band selects no sequences");
    const auto oracle = build_oracle(cfg, vocab);

    std::optional<lpo::VedModel> ved;
    if (needs_latent(cfg)) ved = load_ved_checked(cfg);

    fs::create_directories(cfg.out);
    std::vector<lpo::RoundRecord> rounds;
    json extra;

    if (cfg.method == "latprotrl") {
        lpo::CampaignResult result;
        if (double_loop) {
            auto pc = cfg.oracle.predictor;
            result = lpo::run_double_loop(cfg.campaign, ved ? &*ved : nullptr, *oracle,
                                          d_init, &pool, pc);
        } else {
            result = lpo::run_active_learning(cfg.campaign, ved ? &*ved : nullptr, *oracle,
                                              d_init, &pool);
        }
        rounds = result.rounds;
        lpo::write_buffer_snapshots(cfg.out, result.buffer_snapshots, vocab);
        save_scored_set(cfg.out + "/final_set.csv", result.final_set, vocab);
        extra = {{"total_oracle_calls", result.total_oracle_calls},
                 {"schedule", result.schedule},
                 {"clamp_events", result.clamp_events}};
    } else {
        if (double_loop) {
            throw lpo::ConfigError("config: double-loop requires method latprotrl");
        }
        lpo::OracleBudget budget;
        budget.calls_per_round = cfg.campaign.ppo.oracle_calls;
        lpo::BaselineResult result;
        if (cfg.method == "cmaes-onehot") {
            result = lpo::cmaes_sequence_optimize(*oracle, budget, d_init,
                                                  lpo::CmaesEncoding::OneHot, nullptr,
                                                  cfg.campaign.env.m_decode, cfg.baseline);
        } else if (cfg.method == "cmaes-ved") {
            result = lpo::cmaes_sequence_optimize(*oracle, budget, d_init,
                                                  lpo::CmaesEncoding::Latent, &*ved,
                                                  cfg.campaign.env.m_decode, cfg.baseline);
        } else if (cfg.method == "greedy") {
            result = lpo::greedy_evolution(*oracle, budget, d_init, cfg.baseline);
        } else if (cfg.method == "pex-style") {
            result = lpo::distance_prioritized_search(*oracle, budget,
                                                      lpo::select_reference(d_init),
                                                      d_init, cfg.baseline);
        } else { // random
            result = lpo::random_search(*oracle, budget, d_init, cfg.baseline);
        }
        const auto seed_top = lpo::top_by_fitness(d_init, cfg.baseline.top_k).entries;
        rounds = baseline_rounds(result, seed_top, d_init, &pool);
        save_scored_set(cfg.out + "/final_set.csv", result.best, vocab);
        extra = {{"total_oracle_calls", result.total_oracle_calls},
                 {"stalled", result.stalled}};
    }
    lpo::write_metrics_csv(cfg.out + "/metrics.csv", rounds);
    write_run_meta(cfg, extra);
    std::cout << "run complete: " << cfg.out << "/metrics.csv (" << rounds.size()
              << " rows)\n";
    return 0;
}

int cmd_evaluate(const lpo::TaskConfig& cfg) {
    const auto vocab = task_vocab(cfg);
    const auto pool = load_dataset_checked(cfg.dataset.path, vocab, cfg.dataset.normalize);
    const auto stats = lpo::dataset_stats(pool);
    json out{{"median_fitness", stats.median_fitness},
             {"top128_median", stats.top128_median}};
    json pct = json::array();
    for (const auto& [p, v] : stats.percentiles) pct.push_back({{"percent", p}, {"fitness", v}});
    out["percentiles"] = pct;

    const std::string final_path = cfg.out + "/final_set.csv";
    if (fs::exists(final_path)) {
        const auto final_set = lpo::load_csv_dataset(final_path, vocab, false);
        const auto [lo, hi] = cfg.band.range();
        const auto d_init = lpo::percentile_subset(pool, lo, hi);
        const auto m = lpo::compute_metrics(final_set.entries, d_init, &pool);
        out["final_set"] = {{"fitness", m.fitness},
                            {"diversity", m.diversity},
                            {"d_init", m.d_init}};
        if (m.d_high) out["final_set"]["d_high"] = *m.d_high;

        const auto n = final_set.size();
        std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                dist[i][j] = dist[j][i] = lpo::hamming_distance(
                    final_set.entries[i].seq, final_set.entries[j].seq);
            }
        }
        const auto coords = lpo::mds_embed(dist, 2);
        std::vector<std::string> ids(n);
        std::vector<double> fitness(n);
        std::vector<int> round_col(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            ids[i] = lpo::to_string(final_set.entries[i].seq, vocab);
            fitness[i] = final_set.entries[i].fitness;
        }
        lpo::write_mds_csv(cfg.out + "/mds.csv", ids, coords, fitness, round_col);
        out["mds_csv"] = cfg.out + "/mds.csv";
    }
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
    if (run_dirs.empty()) throw lpo::ConfigError("report: no run directories given");
    std::vector<std::pair<std::string, lpo::CsvTable>> runs;
    for (const auto& dir : run_dirs) {
        const std::string path = dir + "/metrics.csv";
        if (!fs::exists(path)) throw lpo::ConfigError("report: missing " + path);
        runs.emplace_back(fs::path(dir).filename().string(), lpo::read_csv_table(path));
    }
    fs::create_directories(out_dir);
    lpo::write_combined_csv(out_dir + "/combined.csv", runs);

    static const char* kMetricCols[] = {"fitness",      "diversity", "d_init",
                                        "d_high",       "oracle_calls", "epsilon",
                                        "buffer_min",   "buffer_max"};
    const auto& schema = runs.front().second.columns;
    auto col_index = [&](const std::string& name) -> int {
        for (std::size_t i = 0; i < schema.size(); ++i) {
            if (schema[i] == name) return static_cast<int>(i);
        }
        return -1;
    };
    const int round_col = col_index("round");
    if (round_col < 0) throw lpo::ConfigError("report: metrics schema lacks 'round'");
    for (const auto* metric : kMetricCols) {
        const int c = col_index(metric);
        if (c < 0) continue;
        std::vector<lpo::SvgSeries> series;
        for (const auto& [name, table] : runs) {
            lpo::SvgSeries s{name, {}};
            for (const auto& row : table.rows) {
                const auto& cell = row[static_cast<std::size_t>(c)];
                if (cell.empty()) continue;
                s.points.emplace_back(std::stod(row[static_cast<std::size_t>(round_col)]),
                                      std::stod(cell));
            }
            if (!s.points.empty()) series.push_back(std::move(s));
        }
        if (series.empty()) continue;
        lpo::write_svg_chart(out_dir + "/" + metric + ".svg",
                             std::string(metric) + " by round", series);
    }
    std::cout << "report: " << out_dir << "/combined.csv (" << runs.size() << " runs)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Latent-space RL optimization over sequence fitness landscapes"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides ov;

    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* c = sub->add_option("--config", config_path, "task config JSON path");
        if (config_required) c->required();
        sub->add_option("--seed", ov.seed, "root seed override");
        sub->add_option("--workers", ov.workers, "worker threads (1 = serial)");
        sub->add_option("--out", ov.out, "output directory override");
    };

    auto* train = app.add_subcommand("train-ved", "train the variant encoder-decoder");
    add_common(train, true);
    auto* optimize = app.add_subcommand("optimize", "run an optimization campaign");
    add_common(optimize, true);
    auto* dloop = app.add_subcommand("double-loop", "oracle/predictor alternating schedule");
    add_common(dloop, true);
    auto* evaluate = app.add_subcommand("evaluate", "dataset stats and final-set metrics");
    add_common(evaluate, true);
    auto* gen = app.add_subcommand("gen-landscape", "generate an NK landscape");
    add_common(gen, true);
    auto* report = app.add_subcommand("report", "combined CSV and SVG charts");
    std::vector<std::string> run_dirs;
    std::string report_out = "report";
    report->add_option("runs", run_dirs, "run directories with metrics.csv");
    report->add_option("--out", report_out, "report output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error: usage: " << e.what() << '\n';
        return 2;
    }

    try {
        if (report->parsed()) return cmd_report(run_dirs, report_out);
        const auto cfg = load_config(config_path, ov);
        if (train->parsed()) return cmd_train_ved(cfg);
        if (optimize->parsed()) return cmd_optimize(cfg, false);
        if (dloop->parsed()) return cmd_optimize(cfg, true);
        if (evaluate->parsed()) return cmd_evaluate(cfg);
        if (gen->parsed()) return cmd_gen_landscape(cfg);
        std::cerr << "error: usage: no subcommand\n";
        return 2;
    } catch (const lpo::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
