#pragma once

// Output files: MSE tables as CSV, static SVG line plots and a JSON metadata
// sidecar. CSV and SVG contents depend only on the results, so identical
// runs produce identical bytes; the wall-clock time lives in the sidecar.

#include "drls/config.hpp"
#include "drls/monte_carlo.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace drls {

class IoError : public Error {
public:
    IoError(const std::string& path, const std::string& what) : Error(path + ": " + what), path_(path) {}
    [[nodiscard]] const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// "%.17g" formatting with '.' as the decimal separator.
[[nodiscard]] std::string format_double(double v);

/// Header `k,node,mse,mse_db`, one row per step per node (nodes 1-based), LF endings.
[[nodiscard]] std::string mse_csv(const McResult& result);

/// Header `estimator,k,node,mse,mse_db` for several runs of the same scenario.
[[nodiscard]] std::string compare_csv(const std::vector<const McResult*>& results);

struct MseRow {
    long k = 0;
    std::size_t node = 0;  // 1-based, as written
    double mse = 0.0;
    double mse_db = 0.0;
};

/// Parses text produced by mse_csv; throws ConfigError on malformed input.
[[nodiscard]] std::vector<MseRow> parse_mse_csv(const std::string& text);

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool dashed = false;
};

struct PlotPanel {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<PlotSeries> series;
};

/// Panels laid out in a grid, one polyline per series, with axes and legend.
[[nodiscard]] std::string render_svg(const std::string& title, const std::vector<PlotPanel>& panels);

/// One panel per node: mse_db against k.
[[nodiscard]] std::string mse_svg(const McResult& result);

/// One panel per node and state component: true state and estimate of a
/// recorded trial against k.
[[nodiscard]] std::string states_svg(const TrialRecord& trial, const std::string& title);

[[nodiscard]] nlohmann::json metadata_json(const McResult& result, const ScenarioConfig& config);

/// Writes `contents` to `path` in binary mode; throws IoError.
void write_file(const std::string& path, const std::string& contents);
[[nodiscard]] std::string read_file(const std::string& path);

}  // namespace drls
