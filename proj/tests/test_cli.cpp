#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string g_cli; // path to the command-line binary under test

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run_cli(const std::string& args, const fs::path& dir) {
    const auto out_path = dir / "stdout.txt";
    const auto err_path = dir / "stderr.txt";
    const std::string cmd = g_cli + " " + args + " >" + out_path.string() + " 2>" +
                            err_path.string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
}

fs::path temp_dir(const std::string& tag) {
    auto dir = fs::temp_directory_path() /
               ("cli_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    out << j.dump(2) << '\n';
    REQUIRE(out.good());
}

// Shared fixture: a small generated landscape plus a sampled pool that every
// optimization test reuses.
struct Workspace {
    fs::path dir;
    fs::path landscape;
    fs::path pool;

    Workspace() {
        dir = temp_dir("ws");
        json cfg{{"schema", "task-config-v1"},
                 {"out", (dir / "gen").string()},
                 {"landscape",
                  {{"L", 10}, {"K", 1}, {"vocab", "ACGT"}, {"seed", 3}, {"samples", 400}}}};
        write_json(dir / "gen.json", cfg);
        const auto r = run_cli("gen-landscape --config " + (dir / "gen.json").string(), dir);
        REQUIRE(r.exit_code == 0);
        landscape = dir / "gen" / "landscape.json";
        pool = dir / "gen" / "pool.csv";
        REQUIRE(fs::exists(landscape));
        REQUIRE(fs::exists(pool));
    }
    ~Workspace() { fs::remove_all(dir); }

    json base_config(const std::string& method, const fs::path& out) const {
        return json{{"schema", "task-config-v1"},
                    {"method", method},
                    {"seed", 7},
                    {"out", out.string()},
                    {"oracle", {{"kind", "nk"}, {"path", landscape.string()}}},
                    {"dataset", {{"path", pool.string()}}},
                    {"band", {{"name", "medium"}}},
                    {"ppo", {{"rounds", 2}, {"oracle_calls", 32}}},
                    {"buffer", {{"capacity", 8}}},
                    {"env", {{"t_ep", 2}, {"m_step", 2}, {"m_decode", 2}, {"m_total", 6}}},
                    {"baseline", {{"top_k", 8}}},
                    {"ablation", {{"state_action_mode", "seq/mut"}}}};
    }
};

} // namespace

TEST_CASE("help and usage errors use the documented exit codes") {
    const auto dir = temp_dir("usage");
    CHECK(run_cli("--help", dir).exit_code == 0);
    CHECK(run_cli("optimize --help", dir).exit_code == 0);
    CHECK(run_cli("", dir).exit_code == 2);               // subcommand required
    CHECK(run_cli("optimize", dir).exit_code == 2);       // --config required
    CHECK(run_cli("report", dir).exit_code == 2);         // no run directories
    const auto r = run_cli("optimize --config /nonexistent.json", dir);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("error:") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("config validation failures exit with code 2") {
    const auto dir = temp_dir("badcfg");
    std::ofstream(dir / "broken.json") << "{ not json";
    CHECK(run_cli("optimize --config " + (dir / "broken.json").string(), dir).exit_code == 2);

    write_json(dir / "badmethod.json",
               {{"schema", "task-config-v1"}, {"method", "annealing"}});
    CHECK(run_cli("optimize --config " + (dir / "badmethod.json").string(), dir).exit_code == 2);

    write_json(dir / "badschema.json", {{"schema", "other"}});
    CHECK(run_cli("optimize --config " + (dir / "badschema.json").string(), dir).exit_code == 2);

    // A valid config pointing at a missing dataset also fails cleanly.
    write_json(dir / "nodata.json",
               {{"schema", "task-config-v1"},
                {"method", "random"},
                {"out", (dir / "run").string()},
                {"oracle", {{"kind", "csv"}, {"path", (dir / "absent.csv").string()}}},
                {"dataset", {{"path", (dir / "absent.csv").string()}}}});
    const auto r = run_cli("optimize --config " + (dir / "nodata.json").string(), dir);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("not found") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("random-method campaign writes its artifacts and books the budget") {
    Workspace ws;
    const auto out = ws.dir / "random_run";
    write_json(ws.dir / "run.json", ws.base_config("random", out));
    const auto r = run_cli("optimize --config " + (ws.dir / "run.json").string(), ws.dir);
    REQUIRE(r.exit_code == 0);
    REQUIRE(fs::exists(out / "metrics.csv"));
    REQUIRE(fs::exists(out / "final_set.csv"));
    REQUIRE(fs::exists(out / "run_meta.json"));

    json meta;
    std::ifstream(out / "run_meta.json") >> meta;
    const long calls = meta.at("result").at("total_oracle_calls").get<long>();
    CHECK(calls >= 1);
    CHECK(calls <= 64); // rounds * oracle_calls
    CHECK(meta.at("method") == "random");

    // metrics.csv has a header plus the seed row and two optimization rounds.
    std::istringstream lines(slurp(out / "metrics.csv"));
    std::string line;
    int n = 0;
    while (std::getline(lines, line)) ++n;
    CHECK(n == 4);
}

TEST_CASE("same seed reproduces metrics byte for byte, another seed diverges") {
    Workspace ws;
    for (const std::string name : {"a", "b"}) {
        auto cfg = ws.base_config("random", ws.dir / name);
        write_json(ws.dir / (name + ".json"), cfg);
        REQUIRE(run_cli("optimize --config " + (ws.dir / (name + ".json")).string(),
                        ws.dir).exit_code == 0);
    }
    const auto a = slurp(ws.dir / "a" / "metrics.csv");
    CHECK(a == slurp(ws.dir / "b" / "metrics.csv"));

    auto other = ws.base_config("random", ws.dir / "c");
    other["seed"] = 8;
    write_json(ws.dir / "c.json", other);
    REQUIRE(run_cli("optimize --config " + (ws.dir / "c.json").string(), ws.dir).exit_code == 0);
    CHECK(a != slurp(ws.dir / "c" / "metrics.csv"));
}

TEST_CASE("a run replays bit-exactly from its own run_meta") {
    Workspace ws;
    const auto out = ws.dir / "orig";
    write_json(ws.dir / "orig.json", ws.base_config("latprotrl", out));
    REQUIRE(run_cli("optimize --config " + (ws.dir / "orig.json").string(), ws.dir)
                .exit_code == 0);
    REQUIRE(fs::exists(out / "run_meta.json"));
    REQUIRE(fs::exists(out / "buffer_round_1.csv"));

    const auto r = run_cli("optimize --config " + (out / "run_meta.json").string() +
                               " --out " + (ws.dir / "replay").string(),
                           ws.dir);
    REQUIRE(r.exit_code == 0);
    CHECK(slurp(out / "metrics.csv") == slurp(ws.dir / "replay" / "metrics.csv"));
    CHECK(slurp(out / "final_set.csv") == slurp(ws.dir / "replay" / "final_set.csv"));
}

TEST_CASE("report joins runs and draws charts") {
    Workspace ws;
    for (const std::string name : {"latent", "control"}) {
        auto cfg = ws.base_config(name == "latent" ? "latprotrl" : "random",
                                  ws.dir / name);
        write_json(ws.dir / (name + ".json"), cfg);
        REQUIRE(run_cli("optimize --config " + (ws.dir / (name + ".json")).string(),
                        ws.dir).exit_code == 0);
    }
    const auto rep = ws.dir / "report";
    const auto r = run_cli("report " + (ws.dir / "latent").string() + " " +
                               (ws.dir / "control").string() + " --out " + rep.string(),
                           ws.dir);
    REQUIRE(r.exit_code == 0);
    REQUIRE(fs::exists(rep / "combined.csv"));
    CHECK(fs::exists(rep / "fitness.svg"));
    CHECK(fs::exists(rep / "oracle_calls.svg"));

    // Both run names appear in the joined table.
    const auto combined = slurp(rep / "combined.csv");
    CHECK(combined.find("latent,") != std::string::npos);
    CHECK(combined.find("control,") != std::string::npos);
    CHECK(combined.rfind("run,round,", 0) == 0);

    // A directory without metrics is rejected.
    CHECK(run_cli("report " + (ws.dir / "gen").string(), ws.dir).exit_code == 2);
}

TEST_CASE("evaluate reports pool statistics and embeds the final set") {
    Workspace ws;
    const auto out = ws.dir / "eval_run";
    write_json(ws.dir / "run.json", ws.base_config("random", out));
    REQUIRE(run_cli("optimize --config " + (ws.dir / "run.json").string(), ws.dir)
                .exit_code == 0);

    const auto r = run_cli("evaluate --config " + (ws.dir / "run.json").string(), ws.dir);
    REQUIRE(r.exit_code == 0);
    const json stats = json::parse(r.out);
    CHECK(stats.at("median_fitness").is_number());
    CHECK(stats.at("top128_median").is_number());
    CHECK(stats.contains("final_set"));
    CHECK(fs::exists(out / "mds.csv"));
}

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: test_cli <path-to-cli-binary> [doctest args]\n");
        return 1;
    }
    g_cli = argv[1];
    doctest::Context context;
    context.applyCommandLine(argc - 1, argv + 1);
    return context.run();
}
