#include "lpo/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "lpo/config.hpp"

namespace lpo {

namespace {

void check_stream(const std::ofstream& out, const std::string& path) {
    if (!out) throw std::runtime_error("report: cannot write '" + path + "'");
}

std::string field_or_empty(double v) { return std::isnan(v) ? "" : format_double(v); }

} // namespace

std::string format_double(double v) {
    for (int precision = 1; precision <= 17; ++precision) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
        double back = 0.0;
        std::sscanf(buf, "%lf", &back);
        if (back == v) return buf;
    }
    return "0";
}

void write_metrics_csv(const std::string& path, const std::vector<RoundRecord>& rounds) {
    std::ofstream out(path);
    check_stream(out, path);
    out << kMetricsHeader << '\n';
    for (const auto& r : rounds) {
        out << r.round << ',' << format_double(r.metrics.fitness) << ','
            << format_double(r.metrics.diversity) << ','
            << format_double(r.metrics.d_init) << ','
            << (r.metrics.d_high ? format_double(*r.metrics.d_high) : "") << ','
            << r.oracle_calls << ',' << field_or_empty(r.epsilon) << ','
            << field_or_empty(r.buffer_min) << ',' << field_or_empty(r.buffer_max)
            << '\n';
    }
    check_stream(out, path);
}

void write_buffer_snapshots(const std::string& dir,
                            const std::vector<std::vector<FrontierBuffer::Entry>>& snapshots,
                            const Vocabulary& vocab) {
    for (std::size_t k = 0; k < snapshots.size(); ++k) {
        const std::string path = dir + "/buffer_round_" + std::to_string(k + 1) + ".csv";
        std::ofstream out(path);
        check_stream(out, path);
        out << "sequence,fitness,visits\n";
        for (const auto& e : snapshots[k]) {
            out << to_string(e.seq, vocab) << ',' << format_double(e.fitness) << ','
                << e.visits << '\n';
        }
        check_stream(out, path);
    }
}

CsvTable read_csv_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("report: cannot open '" + path + "'");
    CsvTable table;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<std::string> fields;
        std::string field;
        std::stringstream ss(line);
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (!line.empty() && line.back() == ',') fields.emplace_back();
        if (row == 1) {
            table.columns = std::move(fields);
        } else {
            if (fields.size() != table.columns.size()) {
                throw std::runtime_error(path + ":" + std::to_string(row) +
                                         ": expected " +
                                         std::to_string(table.columns.size()) +
                                         " fields, got " + std::to_string(fields.size()));
            }
            table.rows.push_back(std::move(fields));
        }
    }
    if (table.columns.empty()) {
        throw std::runtime_error("report: '" + path + "' is empty");
    }
    return table;
}

void write_combined_csv(const std::string& path,
                        const std::vector<std::pair<std::string, CsvTable>>& runs) {
    if (runs.empty()) throw ConfigError("report: no runs given");
    const auto& schema = runs.front().second.columns;
    for (const auto& [name, table] : runs) {
        if (table.columns != schema) {
            std::string have, want;
            for (const auto& c : table.columns) have += (have.empty() ? "" : ",") + c;
            for (const auto& c : schema) want += (want.empty() ? "" : ",") + c;
            throw ConfigError("report: run '" + name + "' columns [" + have +
                              "] do not match [" + want + "]");
        }
    }
    std::ofstream out(path);
    check_stream(out, path);
    out << "run";
    for (const auto& c : schema) out << ',' << c;
    out << '\n';
    for (const auto& [name, table] : runs) {
        for (const auto& row : table.rows) {
            out << name;
            for (const auto& f : row) out << ',' << f;
            out << '\n';
        }
    }
    check_stream(out, path);
}

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::vector<SvgSeries>& series) {
    constexpr double W = 720, H = 440;
    constexpr double ml = 60, mr = 150, mt = 40, mb = 50;
    static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                     "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
    double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
    double y_min = x_min, y_max = -x_min;
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) {
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
            y_min = std::min(y_min, y);
            y_max = std::max(y_max, y);
        }
    }
    if (!(x_min <= x_max)) { x_min = 0; x_max = 1; y_min = 0; y_max = 1; }
    if (x_min == x_max) { x_min -= 0.5; x_max += 0.5; }
    if (y_min == y_max) { y_min -= 0.5; y_max += 0.5; }
    const auto sx = [&](double x) {
        return ml + (x - x_min) / (x_max - x_min) * (W - ml - mr);
    };
    const auto sy = [&](double y) {
        return H - mb - (y - y_min) / (y_max - y_min) * (H - mt - mb);
    };

    std::ofstream out(path);
    check_stream(out, path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\""
        << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    out << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr
        << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
        << H - mb << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << ml << "\" y=\"" << H - mb + 20
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << format_double(x_min)
        << "</text>\n";
    out << "<text x=\"" << W - mr << "\" y=\"" << H - mb + 20
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << format_double(x_max) << "</text>\n";
    out << "<text x=\"" << ml - 6 << "\" y=\"" << H - mb
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << format_double(y_min) << "</text>\n";
    out << "<text x=\"" << ml - 6 << "\" y=\"" << mt + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << format_double(y_max) << "</text>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        for (const auto& [x, y] : series[i].points) {
            if (!first) out << ' ';
            first = false;
            out << format_double(sx(x)) << ',' << format_double(sy(y));
        }
        out << "\"/>\n";
        const double ly = mt + 16.0 * static_cast<double>(i);
        out << "<line x1=\"" << W - mr + 10 << "\" y1=\"" << ly << "\" x2=\""
            << W - mr + 30 << "\" y2=\"" << ly << "\" stroke=\"" << color
            << "\" stroke-width=\"1.5\"/>\n";
        out << "<text x=\"" << W - mr + 36 << "\" y=\"" << ly + 4
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << series[i].name
            << "</text>\n";
    }
    out << "</svg>\n";
    check_stream(out, path);
}

void write_mds_csv(const std::string& path, const std::vector<std::string>& ids,
                   const std::vector<std::vector<double>>& coords,
                   const std::vector<double>& fitness, const std::vector<int>& rounds) {
    if (ids.size() != coords.size() || ids.size() != fitness.size() ||
        ids.size() != rounds.size()) {
        throw std::invalid_argument("write_mds_csv: column length mismatch");
    }
    std::ofstream out(path);
    check_stream(out, path);
    out << "id,x,y,fitness,round\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const double x = coords[i].empty() ? 0.0 : coords[i][0];
        const double y = coords[i].size() > 1 ? coords[i][1] : 0.0;
        out << ids[i] << ',' << format_double(x) << ',' << format_double(y) << ','
            << format_double(fitness[i]) << ',' << rounds[i] << '\n';
    }
    check_stream(out, path);
}

} // namespace lpo
