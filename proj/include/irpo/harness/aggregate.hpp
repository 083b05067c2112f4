#pragma once

// Merges per-seed metrics files into one mean curve with a 95% confidence
// band, interpolating every seed onto a shared grid of sample counts.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "irpo/errors.hpp"
#include "irpo/harness/metrics.hpp"

namespace irpo {

/// Splits one CSV line; double-quoted fields may contain commas.
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out(1);
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') quoted = !quoted;
        else if (ch == ',' && !quoted) out.emplace_back();
        else out.back() += ch;
    }
    return out;
}

struct Curve {
    std::vector<double> samples;
    std::vector<double> values;
};

/// Reads one column of a metrics CSV as a function of samples.
inline Curve read_metrics_curve(std::istream& in, const std::string& column, const std::string& source) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(source + ": empty metrics file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kMetricsHeader)
        throw ConfigError(source + ": metrics schema mismatch (header '" + line + "', expected '" + kMetricsHeader +
                          "')");
    const auto names = split_csv_line(line);
    const auto it = std::find(names.begin(), names.end(), column);
    if (it == names.end() || column == "omega_json") throw ConfigError("cannot aggregate column '" + column + "'");
    const auto col = static_cast<std::size_t>(it - names.begin());
    Curve c;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != names.size())
            throw ConfigError(source + ":" + std::to_string(lineno) + ": expected " + std::to_string(names.size()) +
                              " fields, found " + std::to_string(fields.size()));
        try {
            c.samples.push_back(std::stod(fields[0]));
            c.values.push_back(std::stod(fields[col]));
        } catch (const std::exception&) {
            throw ConfigError(source + ":" + std::to_string(lineno) + ": unreadable number");
        }
        if (c.samples.size() > 1 && c.samples.back() < c.samples[c.samples.size() - 2])
            throw ConfigError(source + ":" + std::to_string(lineno) + ": samples decrease");
    }
    return c;
}

inline Curve read_metrics_file(const std::string& path, const std::string& column) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path);
    return read_metrics_curve(in, column, path);
}

/// Linear interpolation; constant beyond the ends.
inline double interpolate(const Curve& c, double x) {
    expects(!c.samples.empty(), "interpolate: empty curve");
    if (x <= c.samples.front()) return c.values.front();
    if (x >= c.samples.back()) return c.values.back();
    const auto hi = static_cast<std::size_t>(std::upper_bound(c.samples.begin(), c.samples.end(), x) - c.samples.begin());
    const std::size_t lo = hi - 1;
    const double span = c.samples[hi] - c.samples[lo];
    if (span <= 0.0) return c.values[hi];
    const double w = (x - c.samples[lo]) / span;
    return (1.0 - w) * c.values[lo] + w * c.values[hi];
}

struct AggregateRow {
    double samples = 0.0;
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

inline constexpr const char* kAggregateHeader = "samples,mean,ci_low,ci_high";

/// Mean +- 1.96 sd / sqrt(n) at `points` evenly spaced checkpoints covering
/// the sample range shared by every curve.
inline std::vector<AggregateRow> aggregate_curves(const std::vector<Curve>& curves, int points = 100) {
    if (curves.empty()) throw ConfigError("aggregate: no input curves");
    if (points < 2) throw ConfigError("aggregate: need at least two checkpoints");
    double lo = -INFINITY;
    double hi = INFINITY;
    for (const auto& c : curves) {
        if (c.samples.empty()) throw ConfigError("aggregate: a metrics file has no rows");
        lo = std::max(lo, c.samples.front());
        hi = std::min(hi, c.samples.back());
    }
    if (hi < lo) throw ConfigError("aggregate: the runs share no common sample range");
    std::vector<AggregateRow> out;
    const double n = static_cast<double>(curves.size());
    for (int i = 0; i < points; ++i) {
        AggregateRow row;
        row.samples = hi == lo ? lo : lo + (hi - lo) * i / (points - 1);
        std::vector<double> y;
        for (const auto& c : curves) y.push_back(interpolate(c, row.samples));
        double mean = 0.0;
        for (double v : y) mean += v;
        mean /= n;
        double var = 0.0;
        for (double v : y) var += (v - mean) * (v - mean);
        const double sd = curves.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
        const double half = 1.96 * sd / std::sqrt(n);
        row.mean = mean;
        row.ci_low = mean - half;
        row.ci_high = mean + half;
        out.push_back(row);
        if (hi == lo) break;
    }
    return out;
}

inline void write_aggregate_csv(const std::vector<AggregateRow>& rows, std::ostream& out) {
    out << kAggregateHeader << '\n';
    for (const auto& r : rows)
        out << format_double(r.samples) << ',' << format_double(r.mean) << ',' << format_double(r.ci_low) << ','
            << format_double(r.ci_high) << '\n';
}

}  // namespace irpo
