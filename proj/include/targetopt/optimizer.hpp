#ifndef TARGETOPT_OPTIMIZER_HPP
#define TARGETOPT_OPTIMIZER_HPP

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <targetopt/dataspace.hpp>
#include <targetopt/reduction.hpp>
#include <targetopt/regression.hpp>
#include <targetopt/rootsearch.hpp>

namespace targetopt {

/// Variants of the sequential loop.
///   1: d = 1, unweighted first-level fit
///   2: d = 1, first-level fit weighted by descriptor-score distances
///   3: d = min(configured, P) components (default P)
///   4: as 3, modelling restricted to the nearest `neighborCount` unique points
///      around the previous iteration's point
///   5: as 3, descriptor PCA fitted on the last `pcaWindow` evaluation points
struct ApproachConfig {
    int id = 3;
    ComponentPolicy components = ComponentPolicy::fixed(0);
    int neighborCount = 15;
    int pcaWindow = 5;

    static ApproachConfig approach(int id)
    {
        if (id < 1 || id > 5)
            throw Error(ErrorCode::InvalidArgument, "approach id must be 1..5");
        ApproachConfig cfg;
        cfg.id = id;
        return cfg;
    }

    bool weighted_first_level() const { return id == 2; }

    int component_count(const Vector& predictorSpectrum, int P) const
    {
        if (id == 1 || id == 2)
            return 1;
        return select_component_count(predictorSpectrum, components, P);
    }
};

enum class Provenance { Initial, Root, Fallback };

inline const char* to_string(Provenance p)
{
    switch (p) {
    case Provenance::Initial: return "initial";
    case Provenance::Root: return "root";
    case Provenance::Fallback: return "fallback";
    }
    return "unknown";
}

struct Candidate {
    Vector predictors;
    Provenance provenance = Provenance::Root;
};

struct IterateOptions {
    int branchCap = 16;
    /// Point ids evaluated in the previous iteration (approach 4 anchor).
    std::vector<int> previousBatch;
};

struct RunConfig {
    int maxIterations = 40;
    int replicates = 1;
    std::uint64_t seed = 0;
    DesignKind designKind = DesignKind::LatinHypercube;
    std::size_t designSize = 4;
    /// Explicit initial design; overrides designKind/designSize when set.
    std::optional<std::vector<Vector>> initialPoints;
    /// Cap on evaluation points after the initial design. The last iteration
    /// is truncated when its branches would exceed it.
    std::optional<std::size_t> maxEvaluations;
    int branchCap = 16;
    bool stopOnHit = false;

    void validate() const
    {
        if (maxIterations < 0 || replicates < 1 || branchCap < 1)
            throw Error(ErrorCode::InvalidArgument, "run config needs r >= 0, l >= 1 and branchCap >= 1");
    }
};

struct TracePoint {
    int pointId = 0;
    int iteration = 0; ///< 0 for the initial design
    Vector predictors;
    std::vector<Vector> replicates;
    double observedDistance = 0.0;
    std::optional<double> actualDistance;
    Provenance provenance = Provenance::Initial;
    bool inTarget = false;

    friend bool operator==(const TracePoint&, const TracePoint&) = default;
};

struct RunTrace {
    std::vector<TracePoint> points;
    bool aborted = false;
    std::string abortReason;

    std::vector<double> observed_distances() const
    {
        std::vector<double> out;
        for (const auto& p : points)
            out.push_back(p.observedDistance);
        return out;
    }

    std::vector<double> actual_distances() const
    {
        std::vector<double> out;
        for (const auto& p : points)
            out.push_back(p.actualDistance.value_or(std::numeric_limits<double>::quiet_NaN()));
        return out;
    }

    friend bool operator==(const RunTrace&, const RunTrace&) = default;
};

namespace detail {

inline std::vector<std::size_t> all_rows(std::size_t n)
{
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i)
        rows[i] = i;
    return rows;
}

inline Matrix select_rows(const Matrix& m, const std::vector<std::size_t>& rows)
{
    Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t r = 0; r < rows.size(); ++r)
        out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(rows[r]));
    return out;
}

/// Reference point for the neighbourhood restriction: the best observed point of
/// the previous batch, or the most recent point when no batch is known.
inline int neighbourhood_anchor(const Dataset& data, const TargetSpec& target, const std::vector<int>& batch)
{
    int anchor = data.points().back().id;
    double best = std::numeric_limits<double>::infinity();
    for (int id : batch) {
        if (!data.has_point(id))
            continue;
        const Vector mean = data.mean_descriptor(id);
        if (mean.size() == 0)
            continue;
        const double dist = (mean - target.target).norm();
        if (dist < best) {
            best = dist;
            anchor = id;
        }
    }
    return anchor;
}

/// Measurement rows belonging to the `count` unique standardized predictor
/// vectors closest to the anchor point.
inline std::vector<std::size_t> neighbourhood_rows(const Dataset& data, const StandardizationStats& stats, int anchorId,
                                                   int count)
{
    const Vector anchor = stats.standardize_predictors(data.point(anchorId).predictors);
    struct Entry {
        Vector z;
        double dist;
    };
    std::vector<Entry> unique;
    for (const auto& p : data.points()) {
        const Vector z = stats.standardize_predictors(p.predictors);
        const bool seen = std::any_of(unique.begin(), unique.end(), [&](const Entry& e) { return e.z == z; });
        if (!seen && data.replicate_count(p.id) > 0)
            unique.push_back({z, (z - anchor).norm()});
    }
    std::stable_sort(unique.begin(), unique.end(), [](const Entry& a, const Entry& b) { return a.dist < b.dist; });
    if (unique.size() > static_cast<std::size_t>(count))
        unique.resize(static_cast<std::size_t>(count));

    std::vector<std::size_t> rows;
    const auto& ms = data.measurements();
    for (std::size_t r = 0; r < ms.size(); ++r) {
        const Vector z = stats.standardize_predictors(data.point(ms[r].pointId).predictors);
        if (std::any_of(unique.begin(), unique.end(), [&](const Entry& e) { return e.z == z; }))
            rows.push_back(r);
    }
    return rows;
}

/// Interval endpoints used by the fallback when the feasible set is unbounded.
inline Interval bounded(Interval in, const Vector& observed)
{
    if (in.empty || (std::isfinite(in.lo) && std::isfinite(in.hi)))
        return in;
    const double span = std::max(1.0, observed.size() ? observed.maxCoeff() - observed.minCoeff() : 1.0);
    const double lo = observed.size() ? observed.minCoeff() - span : -span;
    const double hi = observed.size() ? observed.maxCoeff() + span : span;
    return Interval::make(std::isfinite(in.lo) ? in.lo : std::min(lo, in.hi),
                          std::isfinite(in.hi) ? in.hi : std::max(hi, in.lo));
}

/// Space-filling point in the original coordinates, used only when all observed
/// predictor vectors coincide and no reduction can be fitted.
inline Vector coordinatewise_maximin(const Dataset& data, const ParameterSpace& space)
{
    Vector out(space.dim());
    for (Eigen::Index i = 0; i < space.dim(); ++i) {
        std::vector<double> coords;
        for (const auto& p : data.points())
            coords.push_back(p.predictors[i]);
        out[i] = fallback_maximin(coords, Interval::make(space.lower[i], space.upper[i]));
    }
    return out;
}

struct Branch {
    Vector prefix;
    Provenance provenance = Provenance::Root;
};

} // namespace detail

/// One pass of the sequential pipeline: descriptor standardization and
/// target-centred PCA, PLS1 reduction of the predictors, per-level conditional
/// polynomial fits with root search (maximin fallback when no feasible root
/// exists), back-transformation, clamping, and proximity filtering. Never
/// returns an empty list.
inline std::vector<Candidate> iterate(const Dataset& data, const TargetSpec& target, const ParameterSpace& space,
                                      const ApproachConfig& approach, const IterateOptions& options = {})
{
    if (data.size() < 3)
        throw Error(ErrorCode::InsufficientData, "iteration needs at least three measurements");
    if (target.dim() != data.descriptor_dim() || space.dim() != data.predictor_dim())
        throw Error(ErrorCode::InvalidArgument, "target or parameter space does not match the dataset");

    const Matrix allPredictors = data.predictor_matrix();
    const Matrix allDescriptors = data.descriptor_matrix();
    const auto P = static_cast<int>(data.predictor_dim());

    std::vector<std::size_t> rows = detail::all_rows(data.size());
    if (approach.id == 4) {
        const auto full = standardize(allPredictors, allDescriptors, target, true);
        const int anchor = detail::neighbourhood_anchor(data, target, options.previousBatch);
        auto near = detail::neighbourhood_rows(data, full.stats, anchor, approach.neighborCount);
        if (near.size() >= 3)
            rows = std::move(near);
    }
    const Matrix predictors = detail::select_rows(allPredictors, rows);
    const auto scaled = standardize(predictors, detail::select_rows(allDescriptors, rows), target, true);

    // Descriptor reduction: approach 5 picks the axis from the latest points only.
    Matrix pcaInput = scaled.descriptors;
    if (approach.id == 5) {
        const auto& pts = data.points();
        const std::size_t first = pts.size() > static_cast<std::size_t>(approach.pcaWindow)
                                      ? pts.size() - static_cast<std::size_t>(approach.pcaWindow)
                                      : 0;
        std::vector<int> window;
        for (std::size_t i = first; i < pts.size(); ++i)
            window.push_back(pts[i].id);
        std::vector<std::size_t> windowRows;
        for (std::size_t r = 0; r < rows.size(); ++r)
            if (std::find(window.begin(), window.end(), data.measurements()[rows[r]].pointId) != window.end())
                windowRows.push_back(r);
        if (windowRows.size() >= 2)
            pcaInput = detail::select_rows(scaled.descriptors, windowRows);
    }
    const PcaModel pca = pca_target_centered(pcaInput).model;
    const Matrix yScores = scaled.descriptors * pca.loadings;
    const Vector y = yScores.col(0);

    if (scaled.predictors.isZero(0.0))
        return {{space.clamp(detail::coordinatewise_maximin(data, space)), Provenance::Fallback}};

    const int d = approach.component_count(predictor_correlation_spectrum(scaled.predictors), P);
    PlsModel pls = pls1_fit(scaled.predictors, y, d);
    if (pls.componentCount == 0)
        pls = principal_axis_model(scaled.predictors);

    std::vector<detail::Branch> branches{{Vector(0), Provenance::Root}};
    for (int level = 0; level < pls.componentCount; ++level) {
        const Vector x = pls.scores.col(level);
        std::vector<detail::Branch> next;
        for (const auto& branch : branches) {
            const Interval feasible = detail::bounded(feasible_interval(branch.prefix, pls, scaled.stats, space), x);

            std::optional<Vector> weights;
            if (level > 0 || approach.weighted_first_level()) {
                try {
                    weights = distance_weights(branch.prefix, pls.scores, yScores);
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::AllWeightsDegenerate)
                        throw;
                }
            }

            std::vector<double> roots;
            try {
                roots = real_roots(fit_polynomial(x, y, weights), feasible).roots;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::InsufficientData && e.code() != ErrorCode::SingularNormalEquations
                    && e.code() != ErrorCode::IdenticallyZero)
                    throw;
            }
            std::stable_sort(roots.begin(), roots.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });

            auto extend = [&](double value, Provenance prov) {
                detail::Branch b{Vector(branch.prefix.size() + 1), prov};
                b.prefix.head(branch.prefix.size()) = branch.prefix;
                b.prefix[branch.prefix.size()] = value;
                next.push_back(std::move(b));
            };
            if (!roots.empty()) {
                for (double r : roots)
                    extend(r, branch.provenance);
            } else if (!feasible.empty) {
                extend(fallback_maximin(x, feasible), Provenance::Fallback);
            } else {
                // Prefix already leaves the box; the final clamp restores feasibility.
                extend(0.0, Provenance::Fallback);
            }
        }
        if (next.size() > static_cast<std::size_t>(options.branchCap)) {
            std::stable_sort(next.begin(), next.end(), [level](const detail::Branch& a, const detail::Branch& b) {
                return std::abs(a.prefix[level]) < std::abs(b.prefix[level]);
            });
            next.resize(static_cast<std::size_t>(options.branchCap));
        }
        branches = std::move(next);
    }

    std::vector<Vector> taken;
    for (const auto& p : data.points())
        taken.push_back(p.predictors);
    std::vector<Candidate> out;
    for (const auto& branch : branches) {
        Vector p = space.clamp(back_transform(branch.prefix, pls, scaled.stats));
        if (proximity_conflict(p, taken, space))
            continue;
        const bool duplicate = std::any_of(out.begin(), out.end(), [&](const Candidate& c) {
            return c.predictors == p || proximity_conflict(p, std::vector<Vector>{c.predictors}, space);
        });
        if (!duplicate)
            out.push_back({p, branch.provenance});
    }
    if (out.empty()) {
        const Vector x = pls.scores.col(0);
        const Interval feasible = detail::bounded(feasible_interval(Vector(0), pls, scaled.stats, space), x);
        Vector prefix(1);
        prefix[0] = feasible.empty ? 0.0 : fallback_maximin(x, feasible);
        out.push_back({space.clamp(back_transform(prefix, pls, scaled.stats)), Provenance::Fallback});
    }
    return out;
}

/// Anything that can be measured at a predictor vector. A source may also expose
/// `truth(p)`, the noise-free response, which enables actual-distance tracking.
template <class S>
concept MeasurementSource = requires(S& s, const Vector& p) {
    { s.measure(p) } -> std::convertible_to<Vector>;
};

template <class S>
concept TruthSource = requires(const S& s, const Vector& p) {
    { s.truth(p) } -> std::convertible_to<Vector>;
};

/// Measures a point l times and appends it to both dataset and trace.
template <MeasurementSource Source>
void evaluate_point(Source& source, Dataset& data, RunTrace& trace, const TargetSpec& target, const Vector& p,
                    int replicates, int iteration, Provenance provenance)
{
    const int id = data.add_point(p);
    TracePoint tp;
    tp.pointId = id;
    tp.iteration = iteration;
    tp.predictors = p;
    tp.provenance = provenance;
    Vector sum = Vector::Zero(target.dim());
    for (int r = 0; r < replicates; ++r) {
        Vector d;
        try {
            d = source.measure(p);
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            throw Error(ErrorCode::OracleFailure, e.what());
        }
        if (d.size() != target.dim() || !d.allFinite())
            throw Error(ErrorCode::OracleFailure, "measurement source returned an invalid descriptor");
        data.add_measurement(id, r, d);
        sum += d;
        tp.replicates.push_back(std::move(d));
    }
    const Vector mean = sum / static_cast<double>(replicates);
    tp.observedDistance = (mean - target.target).norm();
    tp.inTarget = in_target(mean, target);
    if constexpr (TruthSource<Source>)
        tp.actualDistance = (Vector(source.truth(p)) - target.target).norm();
    trace.points.push_back(std::move(tp));
}

/// Full sequential run: initial design, then up to r iterations. Every
/// candidate is measured l times. Validation is recorded per point and only
/// ends the run when stopOnHit is set. A failing measurement source aborts the
/// run and returns the partial trace.
template <MeasurementSource Source>
RunTrace run(Source& source, const TargetSpec& target, const ParameterSpace& space, const ApproachConfig& approach,
             const RunConfig& cfg)
{
    cfg.validate();
    Dataset data(space.dim(), target.dim());
    RunTrace trace;
    const std::vector<Vector> design
        = cfg.initialPoints ? *cfg.initialPoints : initial_design(cfg.designKind, cfg.designSize, space, cfg.seed);

    std::vector<int> batch;
    std::size_t evaluations = 0;
    try {
        for (const auto& p : design) {
            evaluate_point(source, data, trace, target, p, cfg.replicates, 0, Provenance::Initial);
            batch.push_back(trace.points.back().pointId);
        }
        for (int it = 1; it <= cfg.maxIterations; ++it) {
            if (cfg.maxEvaluations && evaluations >= *cfg.maxEvaluations)
                break;
            if (cfg.stopOnHit && std::any_of(trace.points.begin(), trace.points.end(), [](const TracePoint& t) { return t.inTarget; }))
                break;
            IterateOptions opts;
            opts.branchCap = cfg.branchCap;
            opts.previousBatch = batch;
            const auto candidates = iterate(data, target, space, approach, opts);
            batch.clear();
            for (const auto& c : candidates) {
                if (cfg.maxEvaluations && evaluations >= *cfg.maxEvaluations)
                    break;
                evaluate_point(source, data, trace, target, c.predictors, cfg.replicates, it, c.provenance);
                batch.push_back(trace.points.back().pointId);
                ++evaluations;
            }
        }
    } catch (const Error& e) {
        if (e.code() != ErrorCode::OracleFailure)
            throw;
        trace.aborted = true;
        trace.abortReason = e.what();
    }
    return trace;
}

} // namespace targetopt

#endif
