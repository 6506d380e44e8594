#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gausstin/errors.hpp"
#include "gausstin/metrics.hpp"
#include "gausstin/serialize.hpp"

namespace gausstin {

struct ReportFiles {
    std::string csv_path;
    std::string markdown_path;
};

namespace detail {

inline std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Percentage points to 2 decimals, the scale the transfer tables use.
inline std::string format_pp(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.2f", v * 100.0);
    return buf;
}

inline const std::vector<std::string>& strategy_display_order() {
    static const std::vector<std::string> order = {"seq-finetune", "gauss-tin",
                                                   "gauss-tin-no-prompt", "gauss-tin-no-gmm",
                                                   "joint"};
    return order;
}

inline std::vector<std::string> ordered_strategies(const Summary& summary) {
    std::set<std::string> present;
    for (const auto& [key, cell] : summary) present.insert(key.strategy);
    std::vector<std::string> out;
    for (const std::string& name : strategy_display_order())
        if (present.erase(name)) out.push_back(name);
    out.insert(out.end(), present.begin(), present.end());
    return out;
}

inline int metric_rank(const std::string& metric) {
    if (metric == "fwt") return 0;
    if (metric == "bwt") return 1;
    return 2;
}

}  // namespace detail

/// results.csv: strategy,k,metric,mean,std,n_seeds with raw [0, 1] values at
/// full precision. Parsing the file back reproduces the summary exactly.
inline std::string render_csv(const Summary& summary) {
    if (summary.empty()) throw EmptySummary("render_csv: empty summary");

    std::vector<SummaryKey> keys;
    for (const auto& [key, cell] : summary) keys.push_back(key);
    const std::vector<std::string> strategies = detail::ordered_strategies(summary);
    const auto strategy_rank = [&](const std::string& s) {
        return std::find(strategies.begin(), strategies.end(), s) - strategies.begin();
    };
    std::sort(keys.begin(), keys.end(), [&](const SummaryKey& a, const SummaryKey& b) {
        if (a.strategy != b.strategy) return strategy_rank(a.strategy) < strategy_rank(b.strategy);
        if (a.k != b.k) return a.k < b.k;
        return detail::metric_rank(a.metric) < detail::metric_rank(b.metric);
    });

    std::string out = "strategy,k,metric,mean,std,n_seeds\n";
    for (const SummaryKey& key : keys) {
        const SummaryCell& cell = summary.at(key);
        out += key.strategy + "," + std::to_string(key.k) + "," + key.metric + "," +
               detail::format_full(cell.mean) + "," + detail::format_full(cell.stddev) + "," +
               std::to_string(cell.n_seeds) + "\n";
    }
    return out;
}

inline Summary parse_results_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    Summary summary;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 || line.empty()) continue;
        std::istringstream row(line);
        std::string strategy, k, metric, mean, stddev, n;
        if (!std::getline(row, strategy, ',') || !std::getline(row, k, ',') ||
            !std::getline(row, metric, ',') || !std::getline(row, mean, ',') ||
            !std::getline(row, stddev, ',') || !std::getline(row, n))
            throw ParseError(line_no, "results.csv: expected 6 columns");
        SummaryCell cell;
        cell.mean = std::stod(mean);
        cell.stddev = std::stod(stddev);
        cell.n_seeds = std::stoul(n);
        summary[{strategy, std::stoul(k), metric}] = cell;
    }
    if (summary.empty()) throw EmptySummary("results.csv has no data rows");
    return summary;
}

/// Markdown transfer table in the FWT-then-BWT column arrangement over the
/// present k values, cells in percentage points to 2 decimals. Joint training
/// contributes a single accuracy cell spanning the row.
inline std::string render_markdown(const Summary& summary) {
    if (summary.empty()) throw EmptySummary("render_markdown: empty summary");

    std::set<std::size_t> kset;
    for (const auto& [key, cell] : summary)
        if (key.metric != "acc" || key.strategy == "joint") kset.insert(key.k);
    std::vector<std::size_t> ks(kset.begin(), kset.end());
    if (ks.empty())
        for (const auto& [key, cell] : summary) ks.push_back(key.k);

    std::string out = "| Method |";
    for (const char* metric : {"FWT", "BWT"})
        for (std::size_t k : ks) out += std::string(" ") + metric + " D_k" + std::to_string(k) + " |";
    out += "\n|---|";
    for (std::size_t i = 0; i < 2 * ks.size(); ++i) out += "---:|";
    out += "\n";

    for (const std::string& strategy : detail::ordered_strategies(summary)) {
        out += "| " + strategy + " |";
        if (strategy == "joint") {
            // one accuracy figure across the row, echoing the upper-bound layout
            std::vector<double> means;
            SummaryCell cell;
            for (const auto& [key, c] : summary)
                if (key.strategy == "joint" && key.metric == "acc") cell = c;
            out += " " + detail::format_pp(cell.mean) + " ± " + detail::format_pp(cell.stddev) +
                   " (accuracy) |";
            for (std::size_t i = 1; i < 2 * ks.size(); ++i) out += " |";
            out += "\n";
            continue;
        }
        for (const char* metric : {"fwt", "bwt"}) {
            for (std::size_t k : ks) {
                const auto it = summary.find({strategy, k, metric});
                out += it == summary.end() ? " - |" : " " + detail::format_pp(it->second.mean) + " |";
            }
        }
        out += "\n";
    }
    return out;
}

/// Write results.csv and report.md into out_dir. Byte-identical for equal
/// summaries.
inline ReportFiles render_tables(const Summary& summary, const std::string& out_dir) {
    if (summary.empty()) throw EmptySummary("render_tables: empty summary");
    ReportFiles files;
    files.csv_path = out_dir + "/results.csv";
    files.markdown_path = out_dir + "/report.md";
    detail::write_file(files.csv_path, render_csv(summary));
    detail::write_file(files.markdown_path, "# Transfer summary\n\n" + render_markdown(summary));
    return files;
}

}  // namespace gausstin
