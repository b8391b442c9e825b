#ifndef TARGETOPT_REDUCTION_HPP
#define TARGETOPT_REDUCTION_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <targetopt/dataspace.hpp>
#include <targetopt/error.hpp>

namespace targetopt {

/// Orthonormal descriptor rotation. Columns of `loadings` are principal axes
/// ordered by non-increasing second moment about the target.
struct PcaModel {
    Matrix loadings;
    Vector eigenvalues;
    Vector sourceDescriptorSds;
    Vector target;
};

struct PcaResult {
    PcaModel model;
    Matrix scores; ///< n x D, scores = z * loadings
};

namespace detail {

/// Flips each column so that its largest-magnitude entry is positive.
inline void canonical_signs(Matrix& columns)
{
    for (Eigen::Index c = 0; c < columns.cols(); ++c) {
        Eigen::Index arg = 0;
        columns.col(c).cwiseAbs().maxCoeff(&arg);
        if (columns(arg, c) < 0.0)
            columns.col(c) = -columns.col(c);
    }
}

/// Eigenpairs of a symmetric matrix in non-increasing eigenvalue order.
inline std::pair<Vector, Matrix> sorted_symmetric_eigen(const Matrix& m)
{
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
    if (solver.info() != Eigen::Success)
        throw Error(ErrorCode::InvalidArgument, "symmetric eigendecomposition failed");
    const Eigen::Index k = m.rows();
    Vector values(k);
    Matrix vectors(k, k);
    for (Eigen::Index c = 0; c < k; ++c) {
        values[c] = solver.eigenvalues()[k - 1 - c];
        vectors.col(c) = solver.eigenvectors().col(k - 1 - c);
    }
    return {values, vectors};
}

} // namespace detail

/// PCA of descriptors already shifted so that the target is the origin. The
/// second-moment matrix z'z is decomposed without re-centring, so the first
/// axis maximizes the sum of squared deviations from the target.
inline PcaResult pca_target_centered(const Matrix& z)
{
    if (z.rows() < 2)
        throw Error(ErrorCode::InsufficientData, "PCA needs at least two rows");
    const Matrix moment = z.transpose() * z;
    auto [values, vectors] = detail::sorted_symmetric_eigen(moment);
    detail::canonical_signs(vectors);
    PcaResult out;
    out.model.loadings = vectors;
    out.model.eigenvalues = values.cwiseMax(0.0);
    out.scores = z * vectors;
    return out;
}

inline PcaResult pca_target_centered(const Matrix& z, const StandardizationStats& stats, const TargetSpec& target)
{
    auto out = pca_target_centered(z);
    out.model.sourceDescriptorSds = stats.descriptorSds;
    out.model.target = target.target;
    return out;
}

/// First principal coordinate of a scaled, target-centred descriptor row.
inline double pseudo_descriptor(const PcaModel& pca, const Vector& zRow)
{
    return zRow.dot(pca.loadings.col(0));
}

/// PLS1 decomposition of the standardized predictors against the pseudo
/// descriptor. Rows of `backTransform` are the x-loadings, so that
/// predictors ~= scores * backTransform (exact when all P components exist).
struct PlsModel {
    int componentCount = 0;
    Matrix scores;        ///< n x d
    Matrix backTransform; ///< d x P
    Matrix weights;       ///< P x d, unit columns
    bool truncated = false; ///< fewer components than requested (no residual covariance)
};

inline PlsModel pls1_fit(const Matrix& predictors, const Vector& response, int components)
{
    const Eigen::Index n = predictors.rows();
    const Eigen::Index P = predictors.cols();
    if (components < 1 || components > P)
        throw Error(ErrorCode::InvalidArgument, "PLS component count must lie in [1, P]");
    if (n < 2)
        throw Error(ErrorCode::InsufficientData, "PLS needs at least two rows");
    if (response.size() != n)
        throw Error(ErrorCode::InvalidArgument, "response length differs from predictor rows");
    if (predictors.isZero(0.0))
        throw Error(ErrorCode::InvalidArgument, "predictor matrix is identically zero");

    Matrix e = predictors;
    Vector f = response;
    const double covScale = predictors.norm() * std::max(response.norm(), std::numeric_limits<double>::min());

    PlsModel model;
    std::vector<Vector> scores, loadings, weights;
    for (int a = 0; a < components; ++a) {
        Vector w = e.transpose() * f;
        const double wn = w.norm();
        if (!(wn > 1e-12 * covScale)) {
            model.truncated = true;
            break;
        }
        w /= wn;
        Vector t = e * w;
        const double tt = t.squaredNorm();
        if (!(tt > 0.0)) {
            model.truncated = true;
            break;
        }
        Vector p = e.transpose() * t / tt;
        e -= t * p.transpose();
        f -= (f.dot(t) / tt) * t;
        scores.push_back(std::move(t));
        loadings.push_back(std::move(p));
        weights.push_back(std::move(w));
    }

    const auto d = static_cast<Eigen::Index>(scores.size());
    model.componentCount = static_cast<int>(d);
    model.scores.resize(n, d);
    model.backTransform.resize(d, P);
    model.weights.resize(P, d);
    for (Eigen::Index a = 0; a < d; ++a) {
        model.scores.col(a) = scores[static_cast<std::size_t>(a)];
        model.backTransform.row(a) = loadings[static_cast<std::size_t>(a)].transpose();
        model.weights.col(a) = weights[static_cast<std::size_t>(a)];
    }
    return model;
}

/// One-component model along the leading principal axis of the predictors.
/// Used when the response carries no linear covariance with any predictor.
inline PlsModel principal_axis_model(const Matrix& predictors)
{
    const Matrix moment = predictors.transpose() * predictors;
    auto [values, vectors] = detail::sorted_symmetric_eigen(moment);
    detail::canonical_signs(vectors);
    PlsModel model;
    const Vector w = vectors.col(0);
    const Vector t = predictors * w;
    const double tt = t.squaredNorm();
    if (!(tt > 0.0))
        throw Error(ErrorCode::InsufficientData, "predictors carry no spread");
    model.componentCount = 1;
    model.scores = t;
    model.backTransform = (predictors.transpose() * t / tt).transpose();
    model.weights = w;
    model.truncated = true;
    return model;
}

/// Eigenvalues of the predictor correlation matrix, largest first. Constant
/// columns contribute zero rows/columns.
inline Vector predictor_correlation_spectrum(const Matrix& standardizedPredictors)
{
    const auto n = static_cast<double>(standardizedPredictors.rows());
    const Matrix corr = standardizedPredictors.transpose() * standardizedPredictors / (n - 1.0);
    return detail::sorted_symmetric_eigen(corr).first.cwiseMax(0.0);
}

struct ComponentPolicy {
    enum class Kind { Fixed, Kaiser } kind = Kind::Fixed;
    int count = 0; ///< Fixed: requested d; values <= 0 mean "use P"

    static ComponentPolicy fixed(int d) { return {Kind::Fixed, d}; }
    static ComponentPolicy kaiser() { return {Kind::Kaiser, 0}; }
};

/// Number of components to keep. Fixed counts are clamped to [1, maxCount];
/// Kaiser's rule keeps the values strictly above the spectrum mean (at least one).
inline int select_component_count(const Vector& spectrum, ComponentPolicy policy, int maxCount)
{
    if (spectrum.size() == 0)
        throw Error(ErrorCode::InvalidArgument, "spectrum must be non-empty");
    if (policy.kind == ComponentPolicy::Kind::Fixed) {
        const int requested = policy.count <= 0 ? maxCount : policy.count;
        return std::clamp(requested, 1, std::max(1, maxCount));
    }
    const double mean = spectrum.mean();
    int count = 0;
    for (Eigen::Index i = 0; i < spectrum.size(); ++i)
        if (spectrum[i] > mean)
            ++count;
    return std::clamp(count, 1, std::max(1, maxCount));
}

/// Maps a pseudo-predictor prefix back to the original parameter space.
inline Vector back_transform(const Vector& prefix, const PlsModel& pls, const StandardizationStats& stats)
{
    if (prefix.size() < 1 || prefix.size() > pls.componentCount)
        throw Error(ErrorCode::InvalidArgument, "prefix length must lie in [1, d]");
    const Vector z = pls.backTransform.topRows(prefix.size()).transpose() * prefix;
    return stats.destandardize_predictors(z);
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool empty = true;

    static Interval make(double lo, double hi) { return lo <= hi ? Interval{lo, hi, false} : Interval{}; }
    bool contains(double x) const { return !empty && x >= lo && x <= hi; }
    double width() const { return empty ? 0.0 : hi - lo; }
};

/// Values of the next pseudo-predictor coordinate whose back-transform (with the
/// given fixed prefix) stays inside the parameter box. The map is affine in the
/// free coordinate, so the feasible set is an interval.
inline Interval feasible_interval(const Vector& prefix, const PlsModel& pls, const StandardizationStats& stats,
                                  const ParameterSpace& space)
{
    const Eigen::Index level = prefix.size();
    if (level >= pls.componentCount)
        throw Error(ErrorCode::InvalidArgument, "level exceeds the number of PLS components");
    const Eigen::Index P = pls.backTransform.cols();
    Vector base = Vector::Zero(P);
    if (level > 0)
        base = pls.backTransform.topRows(level).transpose() * prefix;
    const auto direction = pls.backTransform.row(level);

    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < P; ++i) {
        const double scale = stats.predictor_scale(i);
        const double zlo = (space.lower[i] - stats.predictorMeans[i]) / scale;
        const double zhi = (space.upper[i] - stats.predictorMeans[i]) / scale;
        const double v = direction[i];
        if (v == 0.0) {
            const double p = base[i] * scale + stats.predictorMeans[i];
            if (p < space.lower[i] || p > space.upper[i])
                return {};
            continue;
        }
        double a = (zlo - base[i]) / v;
        double b = (zhi - base[i]) / v;
        if (a > b)
            std::swap(a, b);
        lo = std::max(lo, a);
        hi = std::min(hi, b);
    }
    if (!std::isfinite(lo) || !std::isfinite(hi))
        return lo <= hi ? Interval{lo, hi, false} : Interval{};
    return Interval::make(lo, hi);
}

} // namespace targetopt

#endif
