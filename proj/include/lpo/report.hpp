#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lpo/core.hpp"
#include "lpo/driver.hpp"
#include "lpo/frontier_buffer.hpp"

namespace lpo {

// Shortest decimal text that round-trips the double exactly, so reruns of a
// deterministic campaign reproduce output files byte for byte.
std::string format_double(double v);

inline constexpr const char* kMetricsHeader =
    "round,fitness,diversity,d_init,d_high,oracle_calls,epsilon,buffer_min,buffer_max";

// One row per round in the fixed column order; absent values (no d_high
// reference set, no epsilon for non-buffer methods) emit as empty fields.
void write_metrics_csv(const std::string& path, const std::vector<RoundRecord>& rounds);

// buffer_round_<k>.csv per snapshot (sequence,fitness,visits).
void write_buffer_snapshots(const std::string& dir,
                            const std::vector<std::vector<FrontierBuffer::Entry>>& snapshots,
                            const Vocabulary& vocab);

// Generic CSV reader for report joining; throws on ragged rows.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv_table(const std::string& path);

// Joins per-run metrics tables, prefixing each row with the run name. Throws
// ConfigError naming the differing columns when schemas mismatch.
void write_combined_csv(const std::string& path,
                        const std::vector<std::pair<std::string, CsvTable>>& runs);

struct SvgSeries {
    std::string name;
    std::vector<std::pair<double, double>> points; // (x, y)
};

// Line chart with one polyline per series; each polyline carries exactly the
// series' point count.
void write_svg_chart(const std::string& path, const std::string& title,
                     const std::vector<SvgSeries>& series);

// id,x,y,fitness,round rows for external plotting of an MDS embedding.
void write_mds_csv(const std::string& path, const std::vector<std::string>& ids,
                   const std::vector<std::vector<double>>& coords,
                   const std::vector<double>& fitness, const std::vector<int>& rounds);

} // namespace lpo
