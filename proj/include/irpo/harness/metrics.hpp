#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "irpo/errors.hpp"
#include "irpo/numerics/linalg.hpp"

namespace irpo {

inline constexpr const char* kMetricsHeader = "samples,iteration,eval_return,success,kl_step,tau,omega_json,wall_s";

struct MetricsRow {
    std::uint64_t samples = 0;
    int iteration = 0;
    double eval_return = 0.0;
    double success = 0.0;
    double kl_step = 0.0;
    double tau = 0.0;
    std::vector<double> omega;
    double wall_seconds = 0.0;
};

using MetricsSink = std::function<void(const MetricsRow&)>;
using ParamsSink =
    std::function<void(int iteration, std::uint64_t samples, const ParamVector& base, const ParamVector& output)>;

/// Per-iteration outputs of a training loop. `base_metrics` receives rows
/// evaluating the base policy when it differs from the reported output policy.
struct TrainSinks {
    MetricsSink metrics;
    MetricsSink base_metrics;
    ParamsSink params;

    TrainSinks() = default;
    template <class F>
        requires std::is_invocable_v<F, const MetricsRow&>
    TrainSinks(F f) : metrics(std::move(f)) {}
};

inline std::string format_double(double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

inline std::string omega_json(const std::vector<double>& omega) {
    std::string s = "[";
    for (std::size_t i = 0; i < omega.size(); ++i) s += (i ? "," : "") + format_double(omega[i]);
    return s + "]";
}

/// One CSV line; the JSON array is quoted because it contains commas.
inline std::string format_metrics_row(const MetricsRow& r) {
    std::ostringstream s;
    s << r.samples << ',' << r.iteration << ',' << format_double(r.eval_return) << ',' << format_double(r.success)
      << ',' << format_double(r.kl_step) << ',' << format_double(r.tau) << ",\"" << omega_json(r.omega) << "\","
      << format_double(r.wall_seconds);
    return s.str();
}

/// Appends rows to a metrics CSV as they arrive; the header is written on open.
class MetricsWriter {
public:
    explicit MetricsWriter(const std::string& path) : out_(path) {
        if (!out_) throw ConfigError("cannot open metrics file " + path);
        out_ << kMetricsHeader << '\n';
        out_.flush();
    }
    void write(const MetricsRow& r) {
        out_ << format_metrics_row(r) << '\n';
        out_.flush();
    }

private:
    std::ofstream out_;
};

}  // namespace irpo
