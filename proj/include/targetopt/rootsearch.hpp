#ifndef TARGETOPT_ROOTSEARCH_HPP
#define TARGETOPT_ROOTSEARCH_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <targetopt/reduction.hpp>
#include <targetopt/regression.hpp>

namespace targetopt {

enum class RootMethod { Roots, Fallback };

struct RootSet {
    std::vector<double> roots; ///< sorted, inside the query interval
    RootMethod method = RootMethod::Roots;
};

namespace detail {

inline double horner(const Vector& c, double x)
{
    double acc = 0.0;
    for (Eigen::Index k = c.size() - 1; k >= 0; --k)
        acc = acc * x + c[k];
    return acc;
}

inline double horner_derivative(const Vector& c, double x)
{
    double acc = 0.0;
    for (Eigen::Index k = c.size() - 1; k >= 1; --k)
        acc = acc * x + static_cast<double>(k) * c[k];
    return acc;
}

/// Newton iterations that only accept steps reducing |f|.
inline double polish_root(const Vector& c, double x)
{
    double fx = std::abs(horner(c, x));
    for (int it = 0; it < 60 && fx > 0.0; ++it) {
        const double df = horner_derivative(c, x);
        if (df == 0.0 || !std::isfinite(df))
            break;
        const double next = x - horner(c, x) / df;
        const double fn = std::abs(horner(c, next));
        if (!(fn < fx))
            break;
        x = next;
        fx = fn;
    }
    return x;
}

/// Bisection on a bracketing interval [a, b] with f(a) f(b) <= 0.
inline double bisect(const Vector& c, double a, double b)
{
    double fa = horner(c, a);
    for (int it = 0; it < 200 && b - a > 0.0; ++it) {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b)
            break;
        const double fm = horner(c, mid);
        if (fm == 0.0)
            return mid;
        if ((fm < 0.0) == (fa < 0.0)) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    return 0.5 * (a + b);
}

} // namespace detail

/// Real roots of sum_k c_k x^k inside [interval.lo, interval.hi]. Roots come
/// from companion-matrix eigenvalues, are polished by Newton/bisection and
/// deduplicated at 1e-9 times the interval width.
inline RootSet real_roots(const Vector& coefficients, const Interval& interval)
{
    RootSet out;
    if (interval.empty)
        return out;
    const double maxAbs = coefficients.cwiseAbs().maxCoeff();
    if (maxAbs == 0.0)
        throw Error(ErrorCode::IdenticallyZero, "polynomial is identically zero");

    Eigen::Index degree = coefficients.size() - 1;
    while (degree >= 1 && std::abs(coefficients[degree]) <= 1e-12 * maxAbs)
        --degree;
    if (degree < 1) {
        if (coefficients[0] == 0.0)
            throw Error(ErrorCode::IdenticallyZero, "polynomial degenerates to zero");
        return out;
    }
    const Vector c = coefficients.head(degree + 1);
    const double residualTol = 1e-8 * (1.0 + maxAbs);

    std::vector<double> candidates;
    if (degree == 1) {
        candidates.push_back(-c[0] / c[1]);
    } else {
        Matrix companion = Matrix::Zero(degree, degree);
        for (Eigen::Index i = 1; i < degree; ++i)
            companion(i, i - 1) = 1.0;
        for (Eigen::Index i = 0; i < degree; ++i)
            companion(i, degree - 1) = -c[i] / c[degree];
        Eigen::EigenSolver<Matrix> solver(companion, false);
        for (Eigen::Index i = 0; i < degree; ++i) {
            const std::complex<double> z = solver.eigenvalues()[i];
            if (std::abs(z.imag()) <= 1e-9 * (1.0 + std::abs(z.real()))) {
                candidates.push_back(z.real());
            } else if (std::abs(z.imag()) <= 1e-6 * (1.0 + std::abs(z.real()))) {
                // Near-tangent pair: keep the real part when it is numerically a root.
                const double x = detail::polish_root(c, z.real());
                if (std::abs(detail::horner(c, x)) <= residualTol)
                    candidates.push_back(x);
            }
        }
    }

    const double span = interval.hi - interval.lo;
    const double edgeTol = 1e-12 * std::max(1.0, std::max(std::abs(interval.lo), std::abs(interval.hi)));
    std::vector<double> roots;
    for (double x : candidates) {
        x = detail::polish_root(c, x);
        // Bracket-based refinement when a sign change is visible close by.
        const double h = 1e-7 * (1.0 + std::abs(x));
        const double fl = detail::horner(c, x - h), fr = detail::horner(c, x + h);
        if (fl * fr < 0.0)
            x = detail::bisect(c, x - h, x + h);
        if (!(std::abs(detail::horner(c, x)) <= residualTol))
            continue;
        if (x < interval.lo - edgeTol || x > interval.hi + edgeTol)
            continue;
        roots.push_back(std::clamp(x, interval.lo, interval.hi));
    }
    std::sort(roots.begin(), roots.end());
    const double dedup = 1e-9 * (span > 0.0 ? span : 1.0);
    for (double x : roots)
        if (out.roots.empty() || x - out.roots.back() > dedup)
            out.roots.push_back(x);
    return out;
}

inline RootSet real_roots(const PolynomialModel& poly, const Interval& interval)
{
    return real_roots(poly.coefficients, interval);
}

/// Point of the interval farthest from its nearest observed coordinate. The
/// optimum is an endpoint or a midpoint between neighbouring observations;
/// ties go to the smallest coordinate. An empty observation set yields the midpoint.
inline double fallback_maximin(std::vector<double> observed, const Interval& interval)
{
    if (interval.empty)
        throw Error(ErrorCode::EmptyInterval, "maximin fallback over an empty interval");
    if (observed.empty())
        return 0.5 * (interval.lo + interval.hi);
    std::sort(observed.begin(), observed.end());
    observed.erase(std::unique(observed.begin(), observed.end()), observed.end());

    auto nearest = [&](double x) {
        auto it = std::lower_bound(observed.begin(), observed.end(), x);
        double best = std::numeric_limits<double>::infinity();
        if (it != observed.end())
            best = *it - x;
        if (it != observed.begin())
            best = std::min(best, x - *std::prev(it));
        return best;
    };

    std::vector<double> candidates{interval.lo, interval.hi};
    for (std::size_t i = 0; i + 1 < observed.size(); ++i) {
        const double mid = 0.5 * (observed[i] + observed[i + 1]);
        if (mid >= interval.lo && mid <= interval.hi)
            candidates.push_back(mid);
    }
    std::sort(candidates.begin(), candidates.end());
    double best = candidates.front();
    double bestDistance = nearest(best);
    for (double x : candidates) {
        const double dist = nearest(x);
        if (dist > bestDistance) {
            best = x;
            bestDistance = dist;
        }
    }
    return best;
}

inline double fallback_maximin(const Vector& observed, const Interval& interval)
{
    return fallback_maximin(std::vector<double>(observed.data(), observed.data() + observed.size()), interval);
}

} // namespace targetopt

#endif
