#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "lpo/config.hpp"
#include "lpo/report.hpp"
#include "lpo/rng.hpp"

using namespace lpo;
namespace fs = std::filesystem;

namespace {

const Vocabulary kAcgt("ACGT");

fs::path temp_dir() {
    auto dir = fs::temp_directory_path() /
               ("report_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos;
         pos = text.find(needle, pos + needle.size())) {
        ++n;
    }
    return n;
}

// Extracts the points="..." payloads of every polyline, in order.
std::vector<std::string> polyline_points(const std::string& svg) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
        const auto start = svg.find("points=\"", pos);
        REQUIRE(start != std::string::npos);
        const auto end = svg.find('"', start + 8);
        REQUIRE(end != std::string::npos);
        out.push_back(svg.substr(start + 8, end - start - 8));
        pos = end;
    }
    return out;
}

std::size_t count_pairs(const std::string& points) {
    if (points.empty()) return 0;
    return count_occurrences(points, " ") + 1;
}

} // namespace

TEST_CASE("format_double emits the shortest exact decimal") {
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(-2.5) == "-2.5");
    CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");

    Rng rng(1);
    for (int i = 0; i < 2000; ++i) {
        double v = (rng.uniform() - 0.5) * std::pow(10.0, rng.uniform() * 20.0 - 10.0);
        const auto text = format_double(v);
        CHECK(std::stod(text) == v);
    }
    CHECK(std::stod(format_double(std::numeric_limits<double>::min())) ==
          std::numeric_limits<double>::min());
    CHECK(std::stod(format_double(std::numeric_limits<double>::max())) ==
          std::numeric_limits<double>::max());
}

TEST_CASE("metrics csv round-trips through the table reader") {
    const auto dir = temp_dir();
    const auto path = (dir / "metrics.csv").string();

    RoundRecord r0;
    r0.round = 0;
    r0.metrics.fitness = 0.25;
    r0.metrics.diversity = 1.5;
    r0.metrics.d_init = 3.0;
    r0.oracle_calls = 0;
    r0.epsilon = 1.0;
    r0.buffer_min = 0.1;
    r0.buffer_max = 0.9;
    RoundRecord r1 = r0;
    r1.round = 1;
    r1.metrics.fitness = 1.0 / 3.0;
    r1.metrics.d_high = 2.0;
    r1.oracle_calls = 17;
    // Absent buffer quantities are written as empty fields.
    r1.epsilon = std::numeric_limits<double>::quiet_NaN();
    r1.buffer_min = std::numeric_limits<double>::quiet_NaN();
    r1.buffer_max = std::numeric_limits<double>::quiet_NaN();

    write_metrics_csv(path, {r0, r1});
    const auto table = read_csv_table(path);
    REQUIRE(table.columns ==
            std::vector<std::string>{"round", "fitness", "diversity", "d_init",
                                     "d_high", "oracle_calls", "epsilon",
                                     "buffer_min", "buffer_max"});
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0][0] == "0");
    CHECK(std::stod(table.rows[0][1]) == 0.25);
    CHECK(table.rows[0][4].empty()); // no d_high reference set
    CHECK(table.rows[0][6] == "1");
    CHECK(std::stod(table.rows[1][1]) == 1.0 / 3.0); // exact round-trip
    CHECK(table.rows[1][4] == "2");
    CHECK(table.rows[1][5] == "17");
    CHECK(table.rows[1][6].empty());
    CHECK(table.rows[1][7].empty());
    CHECK(table.rows[1][8].empty());
    fs::remove_all(dir);
}

TEST_CASE("buffer snapshots write one numbered file per round") {
    const auto dir = temp_dir();
    std::vector<std::vector<FrontierBuffer::Entry>> snaps(2);
    snaps[0].push_back({from_string("ACGT", kAcgt), 0.5, 3});
    snaps[0].push_back({from_string("AAAA", kAcgt), 0.25, 1});
    snaps[1].push_back({from_string("GGGG", kAcgt), 0.75, 2});

    write_buffer_snapshots(dir.string(), snaps, kAcgt);
    const auto t1 = read_csv_table((dir / "buffer_round_1.csv").string());
    REQUIRE(t1.columns == std::vector<std::string>{"sequence", "fitness", "visits"});
    REQUIRE(t1.rows.size() == 2);
    CHECK(t1.rows[0] == std::vector<std::string>{"ACGT", "0.5", "3"});
    CHECK(t1.rows[1] == std::vector<std::string>{"AAAA", "0.25", "1"});
    const auto t2 = read_csv_table((dir / "buffer_round_2.csv").string());
    REQUIRE(t2.rows.size() == 1);
    CHECK(t2.rows[0][0] == "GGGG");
    fs::remove_all(dir);
}

TEST_CASE("csv reader flags ragged rows with their location") {
    const auto dir = temp_dir();
    const auto path = (dir / "ragged.csv").string();
    std::ofstream(path) << "a,b\n1,2\n1,2,3\n";
    CHECK_THROWS_WITH_AS(read_csv_table(path),
                         doctest::Contains(":3: expected 2 fields, got 3"),
                         std::runtime_error);

    std::ofstream(dir / "empty.csv") << "";
    CHECK_THROWS(read_csv_table((dir / "empty.csv").string()));
    CHECK_THROWS(read_csv_table((dir / "missing.csv").string()));

    // CRLF line endings and trailing empty fields parse cleanly.
    std::ofstream(dir / "crlf.csv") << "a,b\r\n1,\r\n";
    const auto table = read_csv_table((dir / "crlf.csv").string());
    REQUIRE(table.rows.size() == 1);
    CHECK(table.rows[0] == std::vector<std::string>{"1", ""});
    fs::remove_all(dir);
}

TEST_CASE("combined csv prefixes rows with the run name") {
    const auto dir = temp_dir();
    CsvTable a;
    a.columns = {"round", "fitness"};
    a.rows = {{"0", "0.1"}, {"1", "0.2"}};
    CsvTable b = a;
    b.rows = {{"0", "0.3"}};

    const auto path = (dir / "combined.csv").string();
    write_combined_csv(path, {{"latent", a}, {"random", b}});
    const auto table = read_csv_table(path);
    REQUIRE(table.columns == std::vector<std::string>{"run", "round", "fitness"});
    REQUIRE(table.rows.size() == 3);
    CHECK(table.rows[0][0] == "latent");
    CHECK(table.rows[2] == std::vector<std::string>{"random", "0", "0.3"});

    CsvTable odd;
    odd.columns = {"round", "score"};
    CHECK_THROWS_WITH_AS(
        write_combined_csv(path, {{"latent", a}, {"odd", odd}}),
        doctest::Contains("columns [round,score] do not match [round,fitness]"),
        ConfigError);
    CHECK_THROWS_AS(write_combined_csv(path, {}), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("svg chart draws one polyline per series with every point") {
    const auto dir = temp_dir();
    const auto path = (dir / "chart.svg").string();
    SvgSeries s1{"buffered", {{0, 0.1}, {1, 0.4}, {2, 0.5}, {3, 0.55}}};
    SvgSeries s2{"random", {{0, 0.1}, {1, 0.15}, {2, 0.2}, {3, 0.2}, {4, 0.21}, {5, 0.22}}};
    write_svg_chart(path, "median fitness by round", {s1, s2});

    const auto svg = slurp(path);
    CHECK(svg.find("median fitness by round") != std::string::npos);
    CHECK(svg.find(">buffered<") != std::string::npos);
    CHECK(svg.find(">random<") != std::string::npos);
    const auto lines = polyline_points(svg);
    REQUIRE(lines.size() == 2);
    CHECK(count_pairs(lines[0]) == 4);
    CHECK(count_pairs(lines[1]) == 6);

    // Degenerate input still yields a valid document.
    write_svg_chart(path, "empty", {});
    CHECK(slurp(path).find("</svg>") != std::string::npos);
    write_svg_chart(path, "flat", {SvgSeries{"flat", {{0, 0.5}, {1, 0.5}}}});
    CHECK(count_pairs(polyline_points(slurp(path)).at(0)) == 2);
    fs::remove_all(dir);
}

TEST_CASE("mds csv pairs ids with planar coordinates") {
    const auto dir = temp_dir();
    const auto path = (dir / "mds.csv").string();
    write_mds_csv(path, {"a", "b"}, {{0.5, -0.5}, {1.0, 2.0}}, {0.1, 0.9}, {0, 3});
    const auto table = read_csv_table(path);
    REQUIRE(table.columns ==
            std::vector<std::string>{"id", "x", "y", "fitness", "round"});
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0] == std::vector<std::string>{"a", "0.5", "-0.5", "0.1", "0"});
    CHECK(table.rows[1] == std::vector<std::string>{"b", "1", "2", "0.9", "3"});

    CHECK_THROWS(write_mds_csv(path, {"a"}, {{0, 0}, {1, 1}}, {0.1, 0.2}, {0, 1}));
    fs::remove_all(dir);
}
