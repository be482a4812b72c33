#include "drls/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <charconv>
#include <sstream>

namespace drls {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string mse_csv(const McResult& result) {
    std::string out = "k,node,mse,mse_db\n";
    for (std::size_t k = 0; k < result.mse.size(); ++k) {
        for (std::size_t i = 0; i < result.nodes; ++i) {
            out += std::to_string(k) + "," + std::to_string(i + 1) + "," + format_double(result.mse[k][i]) + "," +
                   format_double(result.mse_db[k][i]) + "\n";
        }
    }
    return out;
}

std::string compare_csv(const std::vector<const McResult*>& results) {
    std::string out = "estimator,k,node,mse,mse_db\n";
    for (const McResult* r : results) {
        const std::string name(to_string(r->estimator));
        for (std::size_t k = 0; k < r->mse.size(); ++k) {
            for (std::size_t i = 0; i < r->nodes; ++i) {
                out += name + "," + std::to_string(k) + "," + std::to_string(i + 1) + "," +
                       format_double(r->mse[k][i]) + "," + format_double(r->mse_db[k][i]) + "\n";
            }
        }
    }
    return out;
}

namespace {

template <class T>
T parse_field(const std::string& f, const std::string& where) {
    T v{};
    const auto [end, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc() || end != f.data() + f.size()) {
        throw ConfigError(where, "malformed number '" + f + "'");
    }
    return v;
}

}  // namespace

std::vector<MseRow> parse_mse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "k,node,mse,mse_db") {
        throw ConfigError("csv", "missing header k,node,mse,mse_db");
    }
    std::vector<MseRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string f[4];
        for (auto& field : f) {
            if (!std::getline(ls, field, ',')) {
                throw ConfigError("csv line " + std::to_string(lineno), "expected 4 fields");
            }
        }
        const std::string where = "csv line " + std::to_string(lineno);
        MseRow r;
        r.k = parse_field<long>(f[0], where);
        r.node = parse_field<std::size_t>(f[1], where);
        r.mse = parse_field<double>(f[2], where);
        r.mse_db = parse_field<double>(f[3], where);
        rows.push_back(r);
    }
    return rows;
}

namespace {

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&':
            out += "&amp;";
            break;
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '"':
            out += "&quot;";
            break;
        default:
            out += c;
        }
    }
    return out;
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

}  // namespace

std::string render_svg(const std::string& title, const std::vector<PlotPanel>& panels) {
    const int cols = panels.size() > 1 ? 2 : 1;
    const int rows = static_cast<int>((panels.size() + static_cast<std::size_t>(cols) - 1) / static_cast<std::size_t>(cols));
    const double pw = 460.0;
    const double ph = 320.0;
    const double top = 40.0;
    const double width = pw * cols;
    const double height = top + ph * rows;

    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
       << escape_xml(title) << "</text>\n";

    for (std::size_t p = 0; p < panels.size(); ++p) {
        const auto& panel = panels[p];
        const double ox = pw * static_cast<double>(p % static_cast<std::size_t>(cols));
        const double oy = top + ph * static_cast<double>(p / static_cast<std::size_t>(cols));
        const double left = ox + 64.0;
        const double right = ox + pw - 16.0;
        const double ptop = oy + 28.0;
        const double bottom = oy + ph - 48.0;

        double xmin = std::numeric_limits<double>::infinity();
        double xmax = -xmin;
        double ymin = xmin;
        double ymax = -xmin;
        for (const auto& s : panel.series) {
            for (std::size_t t = 0; t < s.x.size() && t < s.y.size(); ++t) {
                if (std::isfinite(s.x[t]) && std::isfinite(s.y[t])) {
                    xmin = std::min(xmin, s.x[t]);
                    xmax = std::max(xmax, s.x[t]);
                    ymin = std::min(ymin, s.y[t]);
                    ymax = std::max(ymax, s.y[t]);
                }
            }
        }
        if (!std::isfinite(xmin)) {
            xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
        }
        if (xmax == xmin) {
            xmax = xmin + 1.0;
        }
        if (ymax == ymin) {
            ymin -= 0.5;
            ymax += 0.5;
        }
        const double pad = 0.05 * (ymax - ymin);
        ymin -= pad;
        ymax += pad;
        auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (right - left); };
        auto sy = [&](double y) { return bottom - (y - ymin) / (ymax - ymin) * (bottom - ptop); };

        os << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
        os << "<text x=\"" << (left + right) / 2 << "\" y=\"" << oy + 18 << "\" text-anchor=\"middle\" font-size=\"13\">"
           << escape_xml(panel.title) << "</text>\n";
        os << "<rect x=\"" << left << "\" y=\"" << ptop << "\" width=\"" << right - left << "\" height=\""
           << bottom - ptop << "\" fill=\"none\" stroke=\"#444\"/>\n";
        for (int t = 0; t <= 4; ++t) {
            const double xv = xmin + (xmax - xmin) * t / 4.0;
            const double yv = ymin + (ymax - ymin) * t / 4.0;
            os << "<line x1=\"" << sx(xv) << "\" y1=\"" << bottom << "\" x2=\"" << sx(xv) << "\" y2=\"" << bottom + 4
               << "\" stroke=\"#444\"/>\n";
            os << "<text x=\"" << sx(xv) << "\" y=\"" << bottom + 16 << "\" text-anchor=\"middle\">"
               << fmt("%.4g", xv) << "</text>\n";
            os << "<line x1=\"" << left - 4 << "\" y1=\"" << sy(yv) << "\" x2=\"" << left << "\" y2=\"" << sy(yv)
               << "\" stroke=\"#444\"/>\n";
            os << "<text x=\"" << left - 6 << "\" y=\"" << sy(yv) + 4 << "\" text-anchor=\"end\">" << fmt("%.4g", yv)
               << "</text>\n";
        }
        os << "<text x=\"" << (left + right) / 2 << "\" y=\"" << bottom + 34 << "\" text-anchor=\"middle\">"
           << escape_xml(panel.x_label) << "</text>\n";
        os << "<text transform=\"translate(" << ox + 14 << "," << (ptop + bottom) / 2
           << ") rotate(-90)\" text-anchor=\"middle\">" << escape_xml(panel.y_label) << "</text>\n";

        for (std::size_t s = 0; s < panel.series.size(); ++s) {
            const auto& series = panel.series[s];
            const char* color = kPalette[s % (sizeof kPalette / sizeof kPalette[0])];
            os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.4\"";
            if (series.dashed) {
                os << " stroke-dasharray=\"5,3\"";
            }
            os << " points=\"";
            for (std::size_t t = 0; t < series.x.size() && t < series.y.size(); ++t) {
                if (std::isfinite(series.x[t]) && std::isfinite(series.y[t])) {
                    os << fmt("%.2f", sx(series.x[t])) << "," << fmt("%.2f", sy(series.y[t])) << " ";
                }
            }
            os << "\"/>\n";
            const double ly = ptop + 12.0 + 14.0 * static_cast<double>(s);
            os << "<line x1=\"" << right - 110 << "\" y1=\"" << ly - 4 << "\" x2=\"" << right - 92 << "\" y2=\""
               << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"" << (series.dashed ? " stroke-dasharray=\"5,3\"" : "")
               << "/>\n";
            os << "<text x=\"" << right - 88 << "\" y=\"" << ly << "\">" << escape_xml(series.label) << "</text>\n";
        }
        os << "</g>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string mse_svg(const McResult& result) {
    std::vector<PlotPanel> panels;
    for (std::size_t i = 0; i < result.nodes; ++i) {
        PlotPanel p;
        p.title = "node " + std::to_string(i + 1);
        p.x_label = "k";
        p.y_label = "MSE (dB, -10 log10)";
        PlotSeries s;
        s.label = std::string(to_string(result.estimator));
        for (std::size_t k = 0; k < result.mse_db.size(); ++k) {
            s.x.push_back(static_cast<double>(k));
            s.y.push_back(result.mse_db[k][i]);
        }
        p.series.push_back(std::move(s));
        panels.push_back(std::move(p));
    }
    return render_svg(result.scenario + ": mean-square error per node", panels);
}

std::string states_svg(const TrialRecord& trial, const std::string& title) {
    std::vector<PlotPanel> panels;
    if (trial.states.empty()) {
        return render_svg(title, panels);
    }
    const std::size_t N = trial.states.front().size();
    const auto n = trial.states.front().front().size();
    for (std::size_t i = 0; i < N; ++i) {
        PlotPanel p;
        p.title = "node " + std::to_string(i + 1);
        p.x_label = "k";
        p.y_label = "state";
        for (Eigen::Index c = 0; c < n; ++c) {
            PlotSeries xs;
            PlotSeries es;
            xs.label = "x(" + std::to_string(c + 1) + ")";
            es.label = "estimate(" + std::to_string(c + 1) + ")";
            es.dashed = true;
            for (std::size_t k = 0; k < trial.states.size(); ++k) {
                xs.x.push_back(static_cast<double>(k));
                xs.y.push_back(trial.states[k][i](c));
                es.x.push_back(static_cast<double>(k));
                es.y.push_back(trial.estimates[k][i](c));
            }
            p.series.push_back(std::move(xs));
            p.series.push_back(std::move(es));
        }
        panels.push_back(std::move(p));
    }
    return render_svg(title, panels);
}

nlohmann::json metadata_json(const McResult& result, const ScenarioConfig& config) {
    nlohmann::json j;
    j["scenario"] = result.scenario;
    j["estimator"] = std::string(to_string(result.estimator));
    j["config_hash"] = result.config_hash;
    j["seed"] = result.seed;
    j["trials_requested"] = config.trials;
    j["trials_completed"] = result.trials.size();
    j["horizon"] = result.horizon;
    j["nodes"] = result.nodes;
    j["wall_seconds"] = result.wall_seconds;
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    j["generated_at"] = stamp;
    j["failures"] = nlohmann::json::array();
    for (const auto& f : result.failures) {
        j["failures"].push_back({{"trial", f.trial}, {"step", f.step}, {"kind", f.kind}, {"message", f.message}});
    }
    j["config"] = config.source;
    return j;
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError(path, "cannot open for writing");
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) {
        throw IoError(path, "write failed");
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(path, "cannot open for reading");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace drls
