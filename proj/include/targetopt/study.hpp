#ifndef TARGETOPT_STUDY_HPP
#define TARGETOPT_STUDY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include <targetopt/io.hpp>
#include <targetopt/simbench.hpp>

namespace targetopt {

inline constexpr int kStudyVersion = 1;

/// Cross of methods x models x noise levels x replicate counts.
struct StudyConfig {
    std::vector<Method> methods;
    std::vector<int> models;
    std::vector<double> sigmas{0.0};
    std::vector<int> replicates{1};
    int iterations = 40;
    int paths = 100;
    std::uint64_t seed = 1;
    std::string output = "results";
    int threads = 1;
    Vector anchor = default_anchor();
    double halfwidth = 0.1;
    int initialPoints = 4;
    double quantileLevel = 0.95;
    Nsga2Config nsga2;

    friend bool operator==(const StudyConfig& a, const StudyConfig& b)
    {
        auto nsga = [](const Nsga2Config& c) {
            return std::tie(c.populationSize, c.crossoverProb, c.crossoverDistribution, c.mutationProb,
                            c.mutationDistribution);
        };
        return a.methods == b.methods && a.models == b.models && a.sigmas == b.sigmas && a.replicates == b.replicates
               && a.iterations == b.iterations && a.paths == b.paths && a.seed == b.seed && a.output == b.output
               && a.threads == b.threads && a.anchor == b.anchor && a.halfwidth == b.halfwidth
               && a.initialPoints == b.initialPoints && a.quantileLevel == b.quantileLevel
               && nsga(a.nsga2) == nsga(b.nsga2);
    }
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& field, const std::string& what)
{
    throw Error(ErrorCode::ConfigError, "field '" + field + "': " + what);
}

template <class T>
T config_value(const nlohmann::json& j, const std::string& field, T fallback)
{
    if (!j.contains(field))
        return fallback;
    try {
        return j.at(field).get<T>();
    } catch (const nlohmann::json::exception&) {
        config_error(field, "has the wrong type");
    }
}

} // namespace detail

inline void validate(const StudyConfig& c)
{
    if (c.methods.empty())
        detail::config_error("methods", "must list at least one method");
    if (c.models.empty())
        detail::config_error("models", "must list at least one model");
    for (int m : c.models)
        try {
            model_from_int(m);
        } catch (const Error&) {
            detail::config_error("models", "unknown model id " + std::to_string(m));
        }
    if (c.sigmas.empty())
        detail::config_error("sigmas", "must list at least one noise level");
    for (double s : c.sigmas)
        if (!(s >= 0.0))
            detail::config_error("sigmas", "noise levels must be non-negative");
    if (c.replicates.empty())
        detail::config_error("replicates", "must list at least one replicate count");
    for (int l : c.replicates)
        if (l < 1)
            detail::config_error("replicates", "replicate counts must be at least 1");
    if (c.iterations < 0)
        detail::config_error("iterations", "must be non-negative");
    if (c.paths < 1)
        detail::config_error("paths", "must be at least 1");
    if (c.threads < 1)
        detail::config_error("threads", "must be at least 1");
    if (c.anchor.size() != 2 || !study_space().contains(c.anchor))
        detail::config_error("anchor", "must be a point of [-5, 5]^2");
    if (!(c.halfwidth > 0.0))
        detail::config_error("halfwidth", "must be positive");
    if (c.initialPoints < 2)
        detail::config_error("initial_points", "must be at least 2");
    if (!(c.quantileLevel >= 0.0 && c.quantileLevel <= 1.0))
        detail::config_error("quantile", "must lie in [0, 1]");
    try {
        c.nsga2.validate();
    } catch (const Error& e) {
        detail::config_error("nsga2", e.what());
    }
    if (c.output.empty())
        detail::config_error("output", "must not be empty");
}

inline StudyConfig parse_study_config(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ConfigError, std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object())
        throw Error(ErrorCode::ConfigError, "config must be a JSON object");
    const int version = detail::config_value(j, "version", -1);
    if (version != kStudyVersion)
        detail::config_error("version", "expected " + std::to_string(kStudyVersion));

    StudyConfig c;
    for (const auto& name : detail::config_value(j, "methods", std::vector<std::string>{}))
        try {
            c.methods.push_back(Method::parse(name));
        } catch (const Error&) {
            detail::config_error("methods", "unknown method '" + name + "'");
        }
    c.models = detail::config_value(j, "models", c.models);
    c.sigmas = detail::config_value(j, "sigmas", c.sigmas);
    c.replicates = detail::config_value(j, "replicates", c.replicates);
    c.iterations = detail::config_value(j, "iterations", c.iterations);
    c.paths = detail::config_value(j, "paths", c.paths);
    c.seed = detail::config_value(j, "seed", c.seed);
    c.output = detail::config_value(j, "output", c.output);
    c.threads = detail::config_value(j, "threads", c.threads);
    const auto anchor = detail::config_value(j, "anchor", std::vector<double>{c.anchor[0], c.anchor[1]});
    c.anchor = Eigen::Map<const Vector>(anchor.data(), static_cast<Eigen::Index>(anchor.size()));
    c.halfwidth = detail::config_value(j, "halfwidth", c.halfwidth);
    c.initialPoints = detail::config_value(j, "initial_points", c.initialPoints);
    c.quantileLevel = detail::config_value(j, "quantile", c.quantileLevel);
    if (j.contains("nsga2")) {
        const auto& n = j.at("nsga2");
        if (!n.is_object())
            detail::config_error("nsga2", "must be an object");
        c.nsga2.populationSize = detail::config_value(n, "population", c.nsga2.populationSize);
        c.nsga2.crossoverProb = detail::config_value(n, "crossover_prob", c.nsga2.crossoverProb);
        c.nsga2.crossoverDistribution = detail::config_value(n, "eta_c", c.nsga2.crossoverDistribution);
        c.nsga2.mutationProb = detail::config_value(n, "mutation_prob", c.nsga2.mutationProb);
        c.nsga2.mutationDistribution = detail::config_value(n, "eta_m", c.nsga2.mutationDistribution);
    }
    validate(c);
    return c;
}

inline std::string serialize_study_config(const StudyConfig& c)
{
    nlohmann::ordered_json j;
    j["version"] = kStudyVersion;
    std::vector<std::string> methods;
    for (const auto& m : c.methods)
        methods.push_back(m.name());
    j["methods"] = methods;
    j["models"] = c.models;
    j["sigmas"] = c.sigmas;
    j["replicates"] = c.replicates;
    j["iterations"] = c.iterations;
    j["paths"] = c.paths;
    j["seed"] = c.seed;
    j["output"] = c.output;
    j["threads"] = c.threads;
    j["anchor"] = std::vector<double>(c.anchor.data(), c.anchor.data() + c.anchor.size());
    j["halfwidth"] = c.halfwidth;
    j["initial_points"] = c.initialPoints;
    j["quantile"] = c.quantileLevel;
    j["nsga2"] = {{"population", c.nsga2.populationSize},
                  {"crossover_prob", c.nsga2.crossoverProb},
                  {"eta_c", c.nsga2.crossoverDistribution},
                  {"mutation_prob", c.nsga2.mutationProb},
                  {"eta_m", c.nsga2.mutationDistribution}};
    return j.dump(2) + "\n";
}

struct CellKey {
    std::string method;
    int model = 1;
    double sigma = 0.0;
    int replicates = 1;

    friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

struct CellResult {
    CellKey key;
    std::vector<RunTrace> traces;
    std::vector<std::pair<std::size_t, std::string>> errors;
    double seconds = 0.0;
};

inline SimulationSpec cell_spec(const StudyConfig& c, const Method& method, int model, double sigma, int replicates)
{
    SimulationSpec s;
    s.model = model_from_int(model);
    s.method = method;
    s.sigma = sigma;
    s.replicates = replicates;
    s.iterations = c.iterations;
    s.paths = c.paths;
    s.seed = c.seed;
    s.anchor = c.anchor;
    s.halfwidth = c.halfwidth;
    s.initialPoints = static_cast<std::size_t>(c.initialPoints);
    s.nsga2 = c.nsga2;
    s.threads = c.threads;
    return s;
}

/// Runs every cell of the study in a fixed order.
inline std::vector<CellResult> run_study(const StudyConfig& c)
{
    validate(c);
    std::vector<CellResult> out;
    for (int model : c.models)
        for (double sigma : c.sigmas)
            for (int l : c.replicates)
                for (const auto& method : c.methods) {
                    const auto timed = timing_capture(cell_spec(c, method, model, sigma, l));
                    CellResult cell{{method.name(), model, sigma, l}, {}, {}, timed.seconds};
                    for (std::size_t p = 0; p < timed.paths.size(); ++p) {
                        if (timed.paths[p].error)
                            cell.errors.emplace_back(p, *timed.paths[p].error);
                        else
                            cell.traces.push_back(timed.paths[p].trace);
                    }
                    out.push_back(std::move(cell));
                }
    return out;
}

inline std::string cell_prefix(const CellKey& k)
{
    return k.method + "," + std::to_string(k.model) + "," + format_double(k.sigma) + "," + std::to_string(k.replicates);
}

/// method,model,sigma,replicates,path,eval_index,observed_min,actual_min
inline std::string raw_results_csv(const std::vector<CellResult>& cells)
{
    std::string out = "method,model,sigma,replicates,path,eval_index,observed_min,actual_min\n";
    for (const auto& cell : cells) {
        const std::string prefix = cell_prefix(cell.key);
        std::size_t path = 0, errorIdx = 0;
        for (const auto& trace : cell.traces) {
            while (errorIdx < cell.errors.size() && cell.errors[errorIdx].first == path) {
                ++path;
                ++errorIdx;
            }
            const auto observed = performance_sequence(trace, DistanceKind::Observed);
            const auto actual = performance_sequence(trace, DistanceKind::Actual);
            for (std::size_t i = 0; i < observed.size(); ++i)
                out += prefix + "," + std::to_string(path) + "," + std::to_string(i + 1) + "," + format_double(observed[i])
                       + "," + format_double(actual[i]) + "\n";
            ++path;
        }
    }
    return out;
}

inline std::string quantile_curves_csv(const std::vector<CellResult>& cells, double q)
{
    std::string out = "method,model,sigma,replicates,eval_index,observed_q,actual_q,best_actual_q\n";
    for (const auto& cell : cells) {
        if (cell.traces.empty())
            continue;
        const auto obs = performance_quantiles(cell.traces, q, DistanceKind::Observed);
        const auto act = performance_quantiles(cell.traces, q, DistanceKind::Actual);
        const auto best = performance_quantiles(cell.traces, q, DistanceKind::BestActual);
        for (std::size_t i = 0; i < obs.values.size(); ++i)
            out += cell_prefix(cell.key) + "," + std::to_string(i + 1) + "," + format_double(obs.values[i]) + ","
                   + format_double(act.values[i]) + "," + format_double(best.values[i]) + "\n";
    }
    return out;
}

inline std::string bias_csv(const std::vector<CellResult>& cells)
{
    std::string out = "method,model,sigma,replicates,eval_index,mean_gap\n";
    for (const auto& cell : cells) {
        if (cell.traces.empty())
            continue;
        const auto gap = bias_summary(cell.traces);
        for (std::size_t i = 0; i < gap.size(); ++i)
            out += cell_prefix(cell.key) + "," + std::to_string(i + 1) + "," + format_double(gap[i]) + "\n";
    }
    return out;
}

/// Rows model x sigma x replicates, one column of seconds per method.
inline std::string timing_table_csv(const std::vector<CellResult>& cells, const std::vector<Method>& methods)
{
    std::string out = "model,sigma,replicates";
    for (const auto& m : methods)
        out += "," + m.name();
    out += "\n";
    std::map<std::tuple<int, double, int>, std::map<std::string, double>> rows;
    std::vector<std::tuple<int, double, int>> order;
    for (const auto& cell : cells) {
        const auto key = std::make_tuple(cell.key.model, cell.key.sigma, cell.key.replicates);
        if (!rows.count(key))
            order.push_back(key);
        rows[key][cell.key.method] = cell.seconds;
    }
    for (const auto& key : order) {
        out += std::to_string(std::get<0>(key)) + "," + format_double(std::get<1>(key)) + "," + std::to_string(std::get<2>(key));
        for (const auto& m : methods) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.6f", rows[key][m.name()]);
            out += std::string(",") + buf;
        }
        out += "\n";
    }
    return out;
}

inline std::string errors_csv(const std::vector<CellResult>& cells)
{
    std::string out = "method,model,sigma,replicates,path,error\n";
    for (const auto& cell : cells)
        for (const auto& [path, what] : cell.errors) {
            std::string clean = what;
            std::replace(clean.begin(), clean.end(), ',', ';');
            std::replace(clean.begin(), clean.end(), '\n', ' ');
            out += cell_prefix(cell.key) + "," + std::to_string(path) + "," + clean + "\n";
        }
    return out;
}

struct StudyFiles {
    std::filesystem::path raw, curves, bias, timing, errors;
};

inline StudyFiles study_files(const std::filesystem::path& dir)
{
    return {dir / "raw_results.csv", dir / "quantile_curves.csv", dir / "bias.csv", dir / "timing.csv", dir / "errors.csv"};
}

inline StudyFiles write_study(const std::vector<CellResult>& cells, const StudyConfig& c, const std::filesystem::path& dir)
{
    const auto files = study_files(dir);
    write_file_atomic(files.raw, raw_results_csv(cells));
    write_file_atomic(files.curves, quantile_curves_csv(cells, c.quantileLevel));
    write_file_atomic(files.bias, bias_csv(cells));
    write_file_atomic(files.timing, timing_table_csv(cells, c.methods));
    write_file_atomic(files.errors, errors_csv(cells));
    return files;
}

// Plotting ------------------------------------------------------------------

struct CurveSeries {
    std::string method;
    std::vector<double> values; ///< indexed by evaluation point - 1
};

struct ChartData {
    int model = 1;
    double sigma = 0.0;
    int replicates = 1;
    std::vector<CurveSeries> series;
};

/// Groups a quantile-curves file into one chart per (model, sigma, replicates).
/// `column` selects observed_q, actual_q or best_actual_q.
inline std::vector<ChartData> read_quantile_curves(const std::string& text, const std::string& column = "actual_q")
{
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line))
        throw Error(ErrorCode::SchemaMismatch, "results file is empty");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    const auto header = split_line(line);
    const std::vector<std::string> expected{"method", "model", "sigma", "replicates", "eval_index", "observed_q", "actual_q",
                                            "best_actual_q"};
    if (header != expected)
        throw Error(ErrorCode::SchemaMismatch, "line 1: not a quantile-curves header");
    const auto col = std::find(expected.begin(), expected.end(), column) - expected.begin();
    if (col < 5 || col >= static_cast<long>(expected.size()))
        throw Error(ErrorCode::InvalidArgument, "unknown curve column '" + column + "'");

    std::vector<ChartData> charts;
    std::size_t lineNo = 1;
    while (std::getline(is, line)) {
        ++lineNo;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        const auto cells = split_line(line);
        if (cells.size() != expected.size())
            throw Error(ErrorCode::SchemaMismatch, "line " + std::to_string(lineNo) + ": wrong number of fields");
        const int model = parse_int(cells[1]);
        const double sigma = parse_double(cells[2]);
        const int l = parse_int(cells[3]);
        const int idx = parse_int(cells[4]);
        const double v = parse_double(cells[static_cast<std::size_t>(col)]);
        if (idx < 1)
            throw Error(ErrorCode::SchemaMismatch, "line " + std::to_string(lineNo) + ": eval_index must be positive");
        auto chart = std::find_if(charts.begin(), charts.end(),
                                  [&](const ChartData& c) { return c.model == model && c.sigma == sigma && c.replicates == l; });
        if (chart == charts.end()) {
            charts.push_back({model, sigma, l, {}});
            chart = charts.end() - 1;
        }
        auto series = std::find_if(chart->series.begin(), chart->series.end(),
                                   [&](const CurveSeries& s) { return s.method == cells[0]; });
        if (series == chart->series.end()) {
            chart->series.push_back({cells[0], {}});
            series = chart->series.end() - 1;
        }
        if (series->values.size() < static_cast<std::size_t>(idx))
            series->values.resize(static_cast<std::size_t>(idx), std::numeric_limits<double>::quiet_NaN());
        series->values[static_cast<std::size_t>(idx - 1)] = v;
    }
    if (charts.empty())
        throw Error(ErrorCode::SchemaMismatch, "results file holds no curves");
    return charts;
}

inline std::string chart_file_name(const ChartData& c)
{
    return "model" + std::to_string(c.model) + "_sigma" + format_double(c.sigma) + "_l" + std::to_string(c.replicates) + ".svg";
}

/// Standalone SVG line chart: x = evaluation point, y = quantile distance.
inline std::string render_svg(const ChartData& chart, const std::string& yLabel = "95% quantile of distance")
{
    static const char* palette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d"};
    const double W = 640, H = 420, left = 70, right = 150, top = 40, bottom = 55;
    const double pw = W - left - right, ph = H - top - bottom;

    std::size_t xmax = 1;
    double ymax = 0.0;
    for (const auto& s : chart.series) {
        xmax = std::max(xmax, s.values.size());
        for (double v : s.values)
            if (std::isfinite(v))
                ymax = std::max(ymax, v);
    }
    if (!(ymax > 0.0))
        ymax = 1.0;
    auto px = [&](double x) { return left + pw * (xmax > 1 ? (x - 1.0) / static_cast<double>(xmax - 1) : 0.5); };
    auto py = [&](double y) { return top + ph * (1.0 - y / ymax); };
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };
    auto tick = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", v);
        return std::string(buf);
    };

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" viewBox=\"0 0 640 420\" "
                      "font-family=\"sans-serif\" font-size=\"12\">\n";
    svg += "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
    svg += "<text x=\"" + num(left + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">model "
           + std::to_string(chart.model) + ", sigma " + format_double(chart.sigma) + ", l = " + std::to_string(chart.replicates)
           + "</text>\n";
    svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(top + ph) + "\" x2=\"" + num(left + pw) + "\" y2=\"" + num(top + ph)
           + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(top) + "\" x2=\"" + num(left) + "\" y2=\"" + num(top + ph)
           + "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double y = ymax * t / 4.0;
        svg += "<text x=\"" + num(left - 6) + "\" y=\"" + num(py(y) + 4) + "\" text-anchor=\"end\">" + tick(y) + "</text>\n";
        const double x = 1.0 + static_cast<double>(xmax - 1) * t / 4.0;
        svg += "<text x=\"" + num(px(x)) + "\" y=\"" + num(top + ph + 18) + "\" text-anchor=\"middle\">" + tick(std::round(x))
               + "</text>\n";
    }
    svg += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(H - 12) + "\" text-anchor=\"middle\">evaluation points</text>\n";
    svg += "<text x=\"18\" y=\"" + num(top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " + num(top + ph / 2)
           + ")\">" + yLabel + "</text>\n";

    for (std::size_t k = 0; k < chart.series.size(); ++k) {
        const auto& s = chart.series[k];
        const char* colour = palette[k % (sizeof palette / sizeof palette[0])];
        std::string pts;
        for (std::size_t i = 0; i < s.values.size(); ++i)
            if (std::isfinite(s.values[i]))
                pts += (pts.empty() ? "" : " ") + num(px(static_cast<double>(i + 1))) + "," + num(py(s.values[i]));
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
        const double ly = top + 10 + 18.0 * static_cast<double>(k);
        svg += "<line x1=\"" + num(left + pw + 15) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(left + pw + 35) + "\" y2=\"" + num(ly)
               + "\" stroke=\"" + colour + "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + num(left + pw + 40) + "\" y=\"" + num(ly + 4) + "\">" + s.method + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

/// Writes one chart per (model, sigma, replicates). Nothing is written when
/// the input does not parse.
inline std::vector<std::filesystem::path> write_plots(const std::string& curvesText, const std::filesystem::path& dir,
                                                      const std::string& column = "actual_q")
{
    const auto charts = read_quantile_curves(curvesText, column);
    std::vector<std::filesystem::path> files;
    for (const auto& c : charts) {
        files.push_back(dir / chart_file_name(c));
        write_file_atomic(files.back(), render_svg(c));
    }
    return files;
}

} // namespace targetopt

#endif
