#ifndef TARGETOPT_REGRESSION_HPP
#define TARGETOPT_REGRESSION_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>
#include <Eigen/Cholesky>

#include <targetopt/dataspace.hpp>
#include <targetopt/error.hpp>

namespace targetopt {

inline constexpr int kMaxPolynomialDegree = 5;
inline constexpr double kWeightFloor = 1e-8;
inline constexpr double kVarianceFloor = 1e-12;
inline constexpr double kRidgeJitter = 1e-10;

struct PolynomialModel {
    int degree = 0;
    Vector coefficients; ///< constant term first
    double weightedRss = 0.0;
    double logLikelihood = 0.0;
    double bic = 0.0;
    bool weighted = false;

    double operator()(double x) const
    {
        double acc = 0.0;
        for (Eigen::Index k = coefficients.size() - 1; k >= 0; --k)
            acc = acc * x + coefficients[k];
        return acc;
    }
};

/// Bayesian information criterion, ln(n) k - 2 ln(L).
inline double bic(std::size_t n, int parameterCount, double logLikelihood)
{
    return std::log(static_cast<double>(n)) * parameterCount - 2.0 * logLikelihood;
}

/// Conditional-regression weights for level `prefix.size() + 1`:
///   w_i = sum_k (x_ik - xhat_k)^2 + sum_{l>=2} y_il^2,
/// floored at kWeightFloor. Observations enter the fit with multiplier 1/w_i.
/// `xScores` needs at least prefix.size() columns; all descriptor score
/// columns after the first enter the second sum.
inline Vector distance_weights(const Vector& prefix, const Matrix& xScores, const Matrix& yScores)
{
    const Eigen::Index n = yScores.rows();
    if (xScores.rows() != n || xScores.cols() < prefix.size())
        throw Error(ErrorCode::InvalidArgument, "score matrices do not match the prefix");
    Vector w = Vector::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double s = 0.0;
        for (Eigen::Index k = 0; k < prefix.size(); ++k)
            s += (xScores(i, k) - prefix[k]) * (xScores(i, k) - prefix[k]);
        for (Eigen::Index l = 1; l < yScores.cols(); ++l)
            s += yScores(i, l) * yScores(i, l);
        w[i] = s;
    }
    bool allClamped = true;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (w[i] < kWeightFloor)
            w[i] = kWeightFloor;
        else
            allClamped = false;
    }
    if (allClamped)
        throw Error(ErrorCode::AllWeightsDegenerate, "every Eq. weight is below the floor; use an unweighted fit");
    return w;
}

namespace detail {

inline std::size_t distinct_count(const Vector& x)
{
    std::vector<double> v(x.data(), x.data() + x.size());
    std::sort(v.begin(), v.end());
    return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
}

inline Matrix vandermonde(const Vector& x, int degree)
{
    Matrix out(x.size(), degree + 1);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double v = 1.0;
        for (int k = 0; k <= degree; ++k) {
            out(i, k) = v;
            v *= x[i];
        }
    }
    return out;
}

/// Minimizer of sum_i m_i (y_i - X_i beta)^2 with multipliers m_i.
inline Vector solve_weighted_least_squares(const Matrix& design, const Vector& y, const Vector& multipliers)
{
    const Vector root = multipliers.cwiseSqrt();
    const Matrix a = root.asDiagonal() * design;
    const Vector b = root.cwiseProduct(y);
    Eigen::ColPivHouseholderQR<Matrix> qr(a);
    if (qr.rank() == design.cols())
        return qr.solve(b);
    // Rank deficient: ridge-regularized normal equations.
    Matrix normal = a.transpose() * a;
    const double scale = std::max(normal.diagonal().maxCoeff(), 1.0);
    normal.diagonal().array() += kRidgeJitter * scale;
    Eigen::LDLT<Matrix> ldlt(normal);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        throw Error(ErrorCode::SingularNormalEquations, "normal equations are singular after ridge retry");
    Vector beta = ldlt.solve(a.transpose() * b);
    if (!beta.allFinite())
        throw Error(ErrorCode::SingularNormalEquations, "normal equations are singular after ridge retry");
    return beta;
}

} // namespace detail

/// Fits polynomials of degree 1..maxDegree by (weighted) least squares and
/// returns the one with the lowest BIC, smaller degrees winning ties. `weights`
/// are the w_i of the conditional regression; observations get multiplier 1/w_i.
inline PolynomialModel fit_polynomial(const Vector& x, const Vector& y, const std::optional<Vector>& weights = std::nullopt,
                                      int maxDegree = kMaxPolynomialDegree)
{
    const Eigen::Index n = x.size();
    if (y.size() != n || (weights && weights->size() != n))
        throw Error(ErrorCode::InvalidArgument, "regression inputs differ in length");
    if (n < 3)
        throw Error(ErrorCode::InsufficientData, "polynomial regression needs at least three observations");
    const Vector multipliers = weights ? Vector(weights->cwiseInverse()) : Vector(Vector::Ones(n));
    const std::size_t support = detail::distinct_count(x);

    std::optional<PolynomialModel> best;
    for (int m = 1; m <= std::min(maxDegree, kMaxPolynomialDegree); ++m) {
        if (support < static_cast<std::size_t>(m) + 1)
            break;
        const Matrix design = detail::vandermonde(x, m);
        PolynomialModel model;
        model.degree = m;
        model.weighted = weights.has_value();
        model.coefficients = detail::solve_weighted_least_squares(design, y, multipliers);
        const Vector residual = y - design * model.coefficients;
        model.weightedRss = multipliers.dot(residual.cwiseAbs2());
        const double variance = std::max(model.weightedRss / static_cast<double>(n), kVarianceFloor);
        model.logLikelihood = -0.5 * static_cast<double>(n) * (std::log(2.0 * std::numbers::pi * variance) + 1.0);
        model.bic = bic(static_cast<std::size_t>(n), m + 2, model.logLikelihood);
        if (!best || model.bic < best->bic)
            best = std::move(model);
    }
    if (!best)
        throw Error(ErrorCode::InsufficientData, "fewer than two distinct regressor values");
    return *best;
}

} // namespace targetopt

#endif
