#ifndef TARGETOPT_DATASPACE_HPP
#define TARGETOPT_DATASPACE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include <targetopt/error.hpp>
#include <targetopt/rng.hpp>

namespace targetopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Target descriptor vector with per-component acceptance half-widths. The
/// acceptance region is the closed box [target - halfwidths, target + halfwidths].
struct TargetSpec {
    Vector target;
    Vector halfwidths;

    TargetSpec() = default;
    TargetSpec(Vector t, Vector h) : target(std::move(t)), halfwidths(std::move(h)) { validate(); }

    Eigen::Index dim() const { return target.size(); }

    void validate() const
    {
        if (target.size() == 0 || target.size() != halfwidths.size())
            throw Error(ErrorCode::InvalidArgument, "target and halfwidths must be non-empty and of equal length");
        for (Eigen::Index j = 0; j < halfwidths.size(); ++j)
            if (!(halfwidths[j] > 0.0))
                throw Error(ErrorCode::InvalidArgument, "acceptance halfwidths must be strictly positive");
    }
};

/// Box bounds for the process parameters, optionally with the smallest
/// distinguishable unit per parameter.
struct ParameterSpace {
    Vector lower;
    Vector upper;
    std::optional<Vector> resolution;

    ParameterSpace() = default;
    ParameterSpace(Vector lo, Vector hi, std::optional<Vector> res = std::nullopt)
        : lower(std::move(lo)), upper(std::move(hi)), resolution(std::move(res))
    {
        validate();
    }

    Eigen::Index dim() const { return lower.size(); }

    bool contains(const Vector& p) const
    {
        for (Eigen::Index i = 0; i < p.size(); ++i)
            if (p[i] < lower[i] || p[i] > upper[i])
                return false;
        return true;
    }

    Vector clamp(Vector p) const
    {
        for (Eigen::Index i = 0; i < p.size(); ++i)
            p[i] = std::clamp(p[i], lower[i], upper[i]);
        return p;
    }

    void validate() const
    {
        if (lower.size() == 0 || lower.size() != upper.size())
            throw Error(ErrorCode::InvalidArgument, "bounds must be non-empty and of equal length");
        for (Eigen::Index i = 0; i < lower.size(); ++i)
            if (!(lower[i] < upper[i]))
                throw Error(ErrorCode::InvalidArgument, "lower bound must be below upper bound");
        if (resolution) {
            if (resolution->size() != lower.size())
                throw Error(ErrorCode::InvalidArgument, "resolution length differs from bounds");
            for (Eigen::Index i = 0; i < lower.size(); ++i)
                if (!((*resolution)[i] > 0.0) || (*resolution)[i] > upper[i] - lower[i])
                    throw Error(ErrorCode::InvalidArgument, "resolution must lie in (0, upper - lower]");
        }
    }
};

struct EvaluationPoint {
    int id = 0;
    Vector predictors;
};

struct Measurement {
    int pointId = 0;
    int replicate = 0;
    Vector descriptors;
};

/// Replicate-aware store of (predictor, descriptor) observations. Each
/// replicate is a separate measurement row; model fitting treats rows as
/// independent observations.
class Dataset {
public:
    Dataset() = default;
    Dataset(Eigen::Index predictorDim, Eigen::Index descriptorDim)
        : predictorDim_(predictorDim), descriptorDim_(descriptorDim)
    {
    }

    Eigen::Index predictor_dim() const { return predictorDim_; }
    Eigen::Index descriptor_dim() const { return descriptorDim_; }

    const std::vector<EvaluationPoint>& points() const { return points_; }
    const std::vector<Measurement>& measurements() const { return measurements_; }
    std::size_t size() const { return measurements_.size(); }

    int add_point(const Vector& predictors)
    {
        return add_point(next_id(), predictors);
    }

    int add_point(int id, const Vector& predictors)
    {
        if (predictors.size() != predictorDim_)
            throw Error(ErrorCode::InvalidArgument, "predictor vector has wrong length");
        if (index_.count(id))
            throw Error(ErrorCode::InvalidArgument, "duplicate point id " + std::to_string(id));
        index_[id] = points_.size();
        points_.push_back({id, predictors});
        return id;
    }

    void add_measurement(int pointId, int replicate, const Vector& descriptors)
    {
        if (!index_.count(pointId))
            throw Error(ErrorCode::InvalidArgument, "measurement references unknown point id " + std::to_string(pointId));
        if (descriptors.size() != descriptorDim_)
            throw Error(ErrorCode::InvalidArgument, "descriptor vector has wrong length");
        measurements_.push_back({pointId, replicate, descriptors});
    }

    bool has_point(int id) const { return index_.count(id) != 0; }

    const EvaluationPoint& point(int id) const { return points_.at(index_.at(id)); }

    int next_id() const
    {
        int id = 0;
        for (const auto& p : points_)
            id = std::max(id, p.id + 1);
        return id;
    }

    std::size_t replicate_count(int pointId) const
    {
        return static_cast<std::size_t>(std::count_if(measurements_.begin(), measurements_.end(),
                                                      [&](const Measurement& m) { return m.pointId == pointId; }));
    }

    /// Mean of the replicate descriptors at a point; empty vector when unmeasured.
    Vector mean_descriptor(int pointId) const
    {
        Vector sum = Vector::Zero(descriptorDim_);
        std::size_t count = 0;
        for (const auto& m : measurements_)
            if (m.pointId == pointId) {
                sum += m.descriptors;
                ++count;
            }
        if (count == 0)
            return {};
        return sum / static_cast<double>(count);
    }

    /// One row per measurement.
    Matrix predictor_matrix() const
    {
        Matrix out(static_cast<Eigen::Index>(measurements_.size()), predictorDim_);
        for (std::size_t r = 0; r < measurements_.size(); ++r)
            out.row(static_cast<Eigen::Index>(r)) = point(measurements_[r].pointId).predictors.transpose();
        return out;
    }

    Matrix descriptor_matrix() const
    {
        Matrix out(static_cast<Eigen::Index>(measurements_.size()), descriptorDim_);
        for (std::size_t r = 0; r < measurements_.size(); ++r)
            out.row(static_cast<Eigen::Index>(r)) = measurements_[r].descriptors.transpose();
        return out;
    }

private:
    Eigen::Index predictorDim_ = 0;
    Eigen::Index descriptorDim_ = 0;
    std::vector<EvaluationPoint> points_;
    std::vector<Measurement> measurements_;
    std::map<int, std::size_t> index_;
};

struct StandardizationStats {
    Vector predictorMeans;
    Vector predictorSds;
    Vector descriptorSds;
    std::vector<bool> predictorDegenerate;
    std::vector<bool> descriptorDegenerate;

    /// Divisor actually applied to predictor i; a constant column is left unscaled.
    double predictor_scale(Eigen::Index i) const { return predictorDegenerate[static_cast<std::size_t>(i)] ? 1.0 : predictorSds[i]; }
    double descriptor_scale(Eigen::Index j) const { return descriptorDegenerate[static_cast<std::size_t>(j)] ? 1.0 : descriptorSds[j]; }

    Vector destandardize_predictors(const Vector& z) const
    {
        Vector p(z.size());
        for (Eigen::Index i = 0; i < z.size(); ++i)
            p[i] = z[i] * predictor_scale(i) + predictorMeans[i];
        return p;
    }

    Vector standardize_predictors(const Vector& p) const
    {
        Vector z(p.size());
        for (Eigen::Index i = 0; i < p.size(); ++i)
            z[i] = (p[i] - predictorMeans[i]) / predictor_scale(i);
        return z;
    }
};

struct StandardizedData {
    StandardizationStats stats;
    Matrix predictors;  ///< n x P, mean-centred and sd-scaled
    Matrix descriptors; ///< n x D, target-centred and sd-scaled
};

namespace detail {

inline double sample_sd(const Eigen::Ref<const Vector>& column, double mean)
{
    const auto n = column.size();
    double ss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        ss += (column[i] - mean) * (column[i] - mean);
    return std::sqrt(ss / static_cast<double>(n - 1));
}

} // namespace detail

/// Standardizes predictors to zero mean and unit sample sd, and shifts the
/// descriptors so the target becomes the origin before scaling by the column
/// sample sd (taken about the column mean). With allowDegenerate a constant
/// descriptor column is left unscaled instead of raising DegenerateColumn.
inline StandardizedData standardize(const Matrix& predictors, const Matrix& descriptors, const TargetSpec& target,
                                    bool allowDegenerate = false)
{
    const Eigen::Index n = predictors.rows();
    if (n < 2)
        throw Error(ErrorCode::InsufficientData, "standardization needs at least two measurements");
    if (descriptors.rows() != n || descriptors.cols() != target.dim())
        throw Error(ErrorCode::InvalidArgument, "descriptor matrix does not match the data or the target");

    StandardizedData out;
    auto& st = out.stats;
    const Eigen::Index P = predictors.cols();
    const Eigen::Index D = descriptors.cols();
    st.predictorMeans = predictors.colwise().mean().transpose();
    st.predictorSds.resize(P);
    st.predictorDegenerate.assign(static_cast<std::size_t>(P), false);
    for (Eigen::Index i = 0; i < P; ++i) {
        st.predictorSds[i] = detail::sample_sd(predictors.col(i), st.predictorMeans[i]);
        st.predictorDegenerate[static_cast<std::size_t>(i)] = st.predictorSds[i] == 0.0;
    }
    st.descriptorSds.resize(D);
    st.descriptorDegenerate.assign(static_cast<std::size_t>(D), false);
    for (Eigen::Index j = 0; j < D; ++j) {
        const double mean = descriptors.col(j).mean();
        st.descriptorSds[j] = detail::sample_sd(descriptors.col(j), mean);
        if (st.descriptorSds[j] == 0.0) {
            if (!allowDegenerate)
                throw Error(ErrorCode::DegenerateColumn, "descriptor column " + std::to_string(j + 1) + " is constant");
            st.descriptorDegenerate[static_cast<std::size_t>(j)] = true;
        }
    }

    out.predictors.resize(n, P);
    for (Eigen::Index i = 0; i < P; ++i)
        out.predictors.col(i) = (predictors.col(i).array() - st.predictorMeans[i]) / st.predictor_scale(i);
    out.descriptors.resize(n, D);
    for (Eigen::Index j = 0; j < D; ++j)
        out.descriptors.col(j) = (descriptors.col(j).array() - target.target[j]) / st.descriptor_scale(j);
    return out;
}

inline StandardizedData standardize(const Dataset& dataset, const TargetSpec& target)
{
    return standardize(dataset.predictor_matrix(), dataset.descriptor_matrix(), target);
}

enum class DesignKind { LatinHypercube, UniformRandom };

/// Initial experimental design of k points inside the parameter box.
inline std::vector<Vector> initial_design(DesignKind kind, std::size_t k, const ParameterSpace& space, Rng& rng)
{
    if (k < 2)
        throw Error(ErrorCode::InvalidArgument, "initial design needs at least two points");
    const Eigen::Index P = space.dim();
    std::vector<Vector> points(k, Vector(P));
    if (kind == DesignKind::UniformRandom) {
        for (auto& p : points)
            for (Eigen::Index i = 0; i < P; ++i)
                p[i] = rng.uniform(space.lower[i], space.upper[i]);
        return points;
    }
    std::vector<std::size_t> strata(k);
    for (Eigen::Index i = 0; i < P; ++i) {
        std::iota(strata.begin(), strata.end(), std::size_t{0});
        for (std::size_t a = k - 1; a > 0; --a)
            std::swap(strata[a], strata[rng.below(a + 1)]);
        const double width = (space.upper[i] - space.lower[i]) / static_cast<double>(k);
        for (std::size_t a = 0; a < k; ++a) {
            const double v = space.lower[i] + (static_cast<double>(strata[a]) + rng.uniform()) * width;
            points[a][i] = std::min(v, space.upper[i]);
        }
    }
    return points;
}

inline std::vector<Vector> initial_design(DesignKind kind, std::size_t k, const ParameterSpace& space, std::uint64_t seed)
{
    Rng rng(seed);
    return initial_design(kind, k, space, rng);
}

/// True when some already observed point is within the resolution of the
/// candidate in every coordinate. Always false without a configured resolution.
inline bool proximity_conflict(const Vector& candidate, const std::vector<Vector>& observed, const ParameterSpace& space)
{
    if (!space.resolution)
        return false;
    const Vector& delta = *space.resolution;
    for (const auto& p : observed) {
        bool identical = true;
        for (Eigen::Index i = 0; i < candidate.size() && identical; ++i)
            identical = std::abs(candidate[i] - p[i]) < delta[i];
        if (identical)
            return true;
    }
    return false;
}

inline bool proximity_conflict(const Vector& candidate, const Dataset& dataset, const ParameterSpace& space)
{
    std::vector<Vector> observed;
    observed.reserve(dataset.points().size());
    for (const auto& p : dataset.points())
        observed.push_back(p.predictors);
    return proximity_conflict(candidate, observed, space);
}

inline bool in_target(const Vector& meanDescriptor, const TargetSpec& target)
{
    for (Eigen::Index j = 0; j < meanDescriptor.size(); ++j)
        if (meanDescriptor[j] < target.target[j] - target.halfwidths[j]
            || meanDescriptor[j] > target.target[j] + target.halfwidths[j])
            return false;
    return true;
}

} // namespace targetopt

#endif
