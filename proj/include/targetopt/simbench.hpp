#ifndef TARGETOPT_SIMBENCH_HPP
#define TARGETOPT_SIMBENCH_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <targetopt/baselines.hpp>
#include <targetopt/optimizer.hpp>
#include <targetopt/rng.hpp>

namespace targetopt {

/// Test models with two process parameters:
///   1: 0.8 p1 - 1.2 p2
///   2: 0.5 p1^2 + 0.5 p2^2
///   3: 0.5 p1^2 - 0.5 p2^2
///   4: 0.8 p1 - 1.2 sqrt(|p2|)
///   12: (model 1, model 2), 123: (model 1, model 2, model 3)
enum class ModelId { M1 = 1, M2 = 2, M3 = 3, M4 = 4, M12 = 12, M123 = 123 };

inline ModelId model_from_int(int id)
{
    switch (id) {
    case 1: return ModelId::M1;
    case 2: return ModelId::M2;
    case 3: return ModelId::M3;
    case 4: return ModelId::M4;
    case 12: return ModelId::M12;
    case 123: return ModelId::M123;
    }
    throw Error(ErrorCode::UnknownModelId, "unknown test model id " + std::to_string(id));
}

inline int descriptor_dim(ModelId id)
{
    switch (id) {
    case ModelId::M12: return 2;
    case ModelId::M123: return 3;
    default: return 1;
    }
}

/// Noise-free response of a test model.
inline Vector model_value(ModelId id, const Vector& p)
{
    if (p.size() != 2)
        throw Error(ErrorCode::InvalidArgument, "test models take two process parameters");
    const double m1 = 0.8 * p[0] - 1.2 * p[1];
    const double m2 = 0.5 * p[0] * p[0] + 0.5 * p[1] * p[1];
    const double m3 = 0.5 * p[0] * p[0] - 0.5 * p[1] * p[1];
    switch (id) {
    case ModelId::M1: return Vector::Constant(1, m1);
    case ModelId::M2: return Vector::Constant(1, m2);
    case ModelId::M3: return Vector::Constant(1, m3);
    case ModelId::M4: return Vector::Constant(1, 0.8 * p[0] - 1.2 * std::sqrt(std::abs(p[1])));
    case ModelId::M12: return (Vector(2) << m1, m2).finished();
    case ModelId::M123: return (Vector(3) << m1, m2, m3).finished();
    }
    throw Error(ErrorCode::UnknownModelId, "unknown test model");
}

/// Model response plus i.i.d. N(0, sigma^2) noise per component and replicate.
class NoisyModel {
public:
    NoisyModel(ModelId id, double sigma, std::uint64_t seed) : id_(id), sigma_(sigma), rng_(seed)
    {
        if (sigma < 0.0)
            throw Error(ErrorCode::InvalidArgument, "noise sd must be non-negative");
    }

    Vector measure(const Vector& p)
    {
        Vector d = model_value(id_, p);
        if (sigma_ > 0.0)
            for (Eigen::Index j = 0; j < d.size(); ++j)
                d[j] += sigma_ * rng_.normal();
        return d;
    }

    Vector truth(const Vector& p) const { return model_value(id_, p); }

    ModelId id() const { return id_; }

private:
    ModelId id_;
    double sigma_;
    Rng rng_;
};

/// Target built from the model value at an anchor, so an exact solution exists.
inline TargetSpec make_target(ModelId id, const Vector& anchor, double halfwidth = 0.1)
{
    const Vector t = model_value(id, anchor);
    return TargetSpec(t, Vector::Constant(t.size(), halfwidth));
}

inline Vector default_anchor() { return (Vector(2) << 1.0, 1.0).finished(); }

inline ParameterSpace study_space() { return {Vector::Constant(2, -5.0), Vector::Constant(2, 5.0)}; }
inline ParameterSpace initial_point_box() { return {Vector::Constant(2, -4.0), Vector::Constant(2, 4.0)}; }

struct Method {
    enum class Kind { Approach, Nsga2, Random } kind = Kind::Approach;
    int approach = 3;

    static Method approach_id(int id) { return {Kind::Approach, id}; }
    static Method nsga2() { return {Kind::Nsga2, 0}; }
    static Method random() { return {Kind::Random, 0}; }

    std::string name() const
    {
        switch (kind) {
        case Kind::Approach: return "approach" + std::to_string(approach);
        case Kind::Nsga2: return "nsga2";
        case Kind::Random: return "random";
        }
        return "unknown";
    }

    static Method parse(const std::string& name)
    {
        if (name == "nsga2")
            return nsga2();
        if (name == "random")
            return random();
        if (name.size() == 9 && name.rfind("approach", 0) == 0 && name[8] >= '1' && name[8] <= '5')
            return approach_id(name[8] - '0');
        throw Error(ErrorCode::InvalidArgument, "unknown method '" + name + "'");
    }

    friend bool operator==(const Method&, const Method&) = default;
};

struct SimulationSpec {
    ModelId model = ModelId::M1;
    Method method;
    double sigma = 0.0;
    int replicates = 1;
    int iterations = 40; ///< evaluation points after the initial design
    int paths = 100;
    std::uint64_t seed = 1;
    Vector anchor = default_anchor();
    double halfwidth = 0.1;
    std::size_t initialPoints = 4;
    Nsga2Config nsga2;
    int threads = 1;
};

struct PathResult {
    RunTrace trace;
    std::optional<std::string> error;
};

/// Per-path generator seeds. The initial design stream depends only on
/// (seed, path), so every method sees the same initial points for a path.
struct PathSeeds {
    std::uint64_t design;
    std::uint64_t noise;
    std::uint64_t method;

    static PathSeeds make(std::uint64_t master, std::size_t path)
    {
        const std::uint64_t base = derive_seed(master, path);
        return {derive_seed(base, 0), derive_seed(base, 1), derive_seed(base, 2)};
    }
};

inline std::vector<Vector> common_initial_points(const SimulationSpec& spec, std::size_t path)
{
    Rng rng(PathSeeds::make(spec.seed, path).design);
    const ParameterSpace box = initial_point_box();
    std::vector<Vector> pts;
    for (std::size_t i = 0; i < spec.initialPoints; ++i) {
        Vector p(2);
        for (Eigen::Index k = 0; k < 2; ++k)
            p[k] = rng.uniform(box.lower[k], box.upper[k]);
        pts.push_back(p);
    }
    return pts;
}

/// One simulation path. All methods evaluate the common initial points first
/// and stop after `iterations` further evaluation points.
inline RunTrace simulate_path(const SimulationSpec& spec, std::size_t path)
{
    const PathSeeds seeds = PathSeeds::make(spec.seed, path);
    const TargetSpec target = make_target(spec.model, spec.anchor, spec.halfwidth);
    const ParameterSpace space = study_space();
    const std::vector<Vector> initial = common_initial_points(spec, path);
    NoisyModel source(spec.model, spec.sigma, seeds.noise);
    const std::size_t budget = initial.size() + static_cast<std::size_t>(spec.iterations);

    switch (spec.method.kind) {
    case Method::Kind::Approach: {
        RunConfig cfg;
        cfg.maxIterations = spec.iterations;
        cfg.replicates = spec.replicates;
        cfg.seed = seeds.method;
        cfg.initialPoints = initial;
        cfg.maxEvaluations = static_cast<std::size_t>(spec.iterations);
        return run(source, target, space, ApproachConfig::approach(spec.method.approach), cfg);
    }
    case Method::Kind::Nsga2: {
        Nsga2Config cfg = spec.nsga2;
        cfg.seed = seeds.method;
        const ParameterSpace box = initial_point_box();
        return nsga2_run(source, target, space, budget, cfg, spec.replicates, initial, &box);
    }
    case Method::Kind::Random:
        return random_search_run(source, target, space, budget, seeds.method, spec.replicates, initial);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown method kind");
}

/// Runs all paths, in parallel when threads > 1. Results are ordered by path
/// index and independent of the thread count. A failing path records its error
/// without stopping the batch.
inline std::vector<PathResult> simulate(const SimulationSpec& spec)
{
    if (spec.paths < 1)
        throw Error(ErrorCode::InvalidArgument, "at least one simulation path is required");
    const auto paths = static_cast<std::size_t>(spec.paths);
    std::vector<PathResult> results(paths);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < paths; i = next++) {
            try {
                results[i].trace = simulate_path(spec, i);
            } catch (const std::exception& e) {
                results[i].error = e.what();
            }
        }
    };
    const auto threads = static_cast<std::size_t>(std::clamp(spec.threads, 1, spec.paths));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }
    return results;
}

/// Running minimum of a sequence.
inline std::vector<double> running_min(const std::vector<double>& values)
{
    std::vector<double> out(values.size());
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < values.size(); ++i) {
        best = std::min(best, values[i]);
        out[i] = best;
    }
    return out;
}

/// Quantile with linear interpolation between order statistics at h = (n-1) q + 1.
inline double quantile(std::vector<double> values, double q)
{
    if (values.empty())
        throw Error(ErrorCode::InvalidArgument, "quantile of an empty sample");
    if (q < 0.0 || q > 1.0)
        throw Error(ErrorCode::InvalidArgument, "quantile level must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = static_cast<double>(values.size() - 1) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

/// Observed: running minimum of the observed distances.
/// Actual: true distance of the incumbent, the point with the lowest observed
/// distance so far (earliest on ties).
/// BestActual: running minimum of the true distances.
enum class DistanceKind { Observed, Actual, BestActual };

/// True distance of the incumbent after each point.
inline std::vector<double> incumbent_actual(const RunTrace& trace)
{
    const auto observed = trace.observed_distances();
    const auto actual = trace.actual_distances();
    std::vector<double> out(observed.size());
    double best = std::numeric_limits<double>::infinity();
    double current = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (observed[i] < best || i == 0) {
            best = observed[i];
            current = actual[i];
        }
        out[i] = current;
    }
    return out;
}

struct PerformanceCurve {
    double level = 0.95;
    DistanceKind kind = DistanceKind::Actual;
    std::vector<double> values; ///< values[i]: quantile of the running minimum over the first i+1 points
};

/// Per-point performance sequence of one trace.
inline std::vector<double> performance_sequence(const RunTrace& trace, DistanceKind kind)
{
    switch (kind) {
    case DistanceKind::Observed:
        return running_min(trace.observed_distances());
    case DistanceKind::Actual:
        return incumbent_actual(trace);
    case DistanceKind::BestActual:
        return running_min(trace.actual_distances());
    }
    return {};
}

inline PerformanceCurve performance_quantiles(const std::vector<RunTrace>& traces, double q = 0.95,
                                              DistanceKind kind = DistanceKind::Actual)
{
    if (traces.empty())
        throw Error(ErrorCode::InvalidArgument, "no traces to summarize");
    const std::size_t len = traces.front().points.size();
    std::vector<std::vector<double>> mins;
    for (const auto& t : traces) {
        if (t.points.size() != len)
            throw Error(ErrorCode::LengthMismatch, "traces differ in length");
        mins.push_back(performance_sequence(t, kind));
    }
    PerformanceCurve curve{q, kind, std::vector<double>(len)};
    std::vector<double> column(traces.size());
    for (std::size_t i = 0; i < len; ++i) {
        for (std::size_t p = 0; p < mins.size(); ++p)
            column[p] = mins[p][i];
        curve.values[i] = quantile(column, q);
    }
    return curve;
}

/// Mean over paths of (incumbent true distance - observed running minimum).
inline std::vector<double> bias_summary(const std::vector<RunTrace>& traces)
{
    if (traces.empty())
        throw Error(ErrorCode::InvalidArgument, "no traces to summarize");
    const std::size_t len = traces.front().points.size();
    std::vector<double> gap(len, 0.0);
    for (const auto& t : traces) {
        if (t.points.size() != len)
            throw Error(ErrorCode::LengthMismatch, "traces differ in length");
        const auto actual = incumbent_actual(t);
        const auto observed = running_min(t.observed_distances());
        for (std::size_t i = 0; i < len; ++i)
            gap[i] += actual[i] - observed[i];
    }
    for (auto& g : gap)
        g /= static_cast<double>(traces.size());
    return gap;
}

struct TimedResult {
    std::vector<PathResult> paths;
    double seconds = 0.0;
};

/// Wall-clock duration of a complete simulate() call.
inline TimedResult timing_capture(const SimulationSpec& spec)
{
    const auto start = std::chrono::steady_clock::now();
    TimedResult out{simulate(spec), 0.0};
    const auto stop = std::chrono::steady_clock::now();
    out.seconds = std::chrono::duration<double>(stop - start).count();
    if (!(out.seconds > 0.0))
        out.seconds = std::numeric_limits<double>::min();
    return out;
}

inline std::vector<RunTrace> traces_of(const std::vector<PathResult>& results)
{
    std::vector<RunTrace> out;
    for (const auto& r : results)
        if (!r.error)
            out.push_back(r.trace);
    return out;
}

} // namespace targetopt

#endif
