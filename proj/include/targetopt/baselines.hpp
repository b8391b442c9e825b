#ifndef TARGETOPT_BASELINES_HPP
#define TARGETOPT_BASELINES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include <targetopt/dataspace.hpp>
#include <targetopt/optimizer.hpp>
#include <targetopt/rng.hpp>

namespace targetopt {

struct Nsga2Config {
    int populationSize = 20;
    double crossoverProb = 0.9;
    double crossoverDistribution = 15.0; ///< SBX eta_c
    double mutationProb = -1.0;          ///< per variable; negative means 1/P
    double mutationDistribution = 20.0;  ///< polynomial mutation eta_m
    std::uint64_t seed = 0;

    void validate() const
    {
        if (populationSize < 4 || populationSize % 2 != 0)
            throw Error(ErrorCode::InvalidArgument, "NSGA-II population size must be even and at least 4");
        if (crossoverProb < 0.0 || crossoverProb > 1.0 || mutationProb > 1.0)
            throw Error(ErrorCode::InvalidArgument, "NSGA-II probabilities must lie in [0, 1]");
    }
};

/// a dominates b under minimization.
inline bool dominates(const Vector& a, const Vector& b)
{
    bool strictly = false;
    for (Eigen::Index m = 0; m < a.size(); ++m) {
        if (a[m] > b[m])
            return false;
        if (a[m] < b[m])
            strictly = true;
    }
    return strictly;
}

/// Fast non-dominated sorting. Returns fronts of indices, best front first;
/// indices inside a front are ascending.
inline std::vector<std::vector<std::size_t>> nondominated_sort(const std::vector<Vector>& objectives)
{
    const std::size_t n = objectives.size();
    std::vector<std::vector<std::size_t>> dominatedBy(n);
    std::vector<std::size_t> counter(n, 0);
    std::vector<std::vector<std::size_t>> fronts;
    std::vector<std::size_t> current;
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
            if (p == q)
                continue;
            if (dominates(objectives[p], objectives[q]))
                dominatedBy[p].push_back(q);
            else if (dominates(objectives[q], objectives[p]))
                ++counter[p];
        }
        if (counter[p] == 0)
            current.push_back(p);
    }
    while (!current.empty()) {
        std::vector<std::size_t> next;
        for (std::size_t p : current)
            for (std::size_t q : dominatedBy[p])
                if (--counter[q] == 0)
                    next.push_back(q);
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(current));
        current = std::move(next);
    }
    return fronts;
}

/// Crowding distance of each member of a front (same order as `front`).
/// Boundary members of every objective get +infinity.
inline std::vector<double> crowding_distance(const std::vector<Vector>& objectives, const std::vector<std::size_t>& front)
{
    const std::size_t k = front.size();
    std::vector<double> dist(k, 0.0);
    if (k == 0)
        return dist;
    if (k <= 2) {
        std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
        return dist;
    }
    const Eigen::Index M = objectives[front[0]].size();
    std::vector<std::size_t> order(k);
    for (Eigen::Index m = 0; m < M; ++m) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return objectives[front[a]][m] < objectives[front[b]][m]; });
        const double lo = objectives[front[order.front()]][m];
        const double hi = objectives[front[order.back()]][m];
        dist[order.front()] = std::numeric_limits<double>::infinity();
        dist[order.back()] = std::numeric_limits<double>::infinity();
        if (hi - lo <= 0.0)
            continue;
        for (std::size_t i = 1; i + 1 < k; ++i)
            dist[order[i]] += (objectives[front[order[i + 1]]][m] - objectives[front[order[i - 1]]][m]) / (hi - lo);
    }
    return dist;
}

namespace detail {

/// Simulated binary crossover with bound handling (Deb and Agrawal).
inline void sbx_crossover(Vector& c1, Vector& c2, const ParameterSpace& space, double eta, Rng& rng)
{
    for (Eigen::Index i = 0; i < c1.size(); ++i) {
        if (rng.uniform() > 0.5)
            continue;
        double y1 = std::min(c1[i], c2[i]);
        double y2 = std::max(c1[i], c2[i]);
        if (y2 - y1 <= 1e-14)
            continue;
        const double lo = space.lower[i], hi = space.upper[i];
        const double u = rng.uniform();

        auto spread = [&](double beta) {
            const double alpha = 2.0 - std::pow(beta, -(eta + 1.0));
            return u <= 1.0 / alpha ? std::pow(u * alpha, 1.0 / (eta + 1.0))
                                    : std::pow(1.0 / (2.0 - u * alpha), 1.0 / (eta + 1.0));
        };
        const double b1 = spread(1.0 + 2.0 * (y1 - lo) / (y2 - y1));
        const double b2 = spread(1.0 + 2.0 * (hi - y2) / (y2 - y1));
        double o1 = std::clamp(0.5 * ((y1 + y2) - b1 * (y2 - y1)), lo, hi);
        double o2 = std::clamp(0.5 * ((y1 + y2) + b2 * (y2 - y1)), lo, hi);
        if (rng.uniform() <= 0.5)
            std::swap(o1, o2);
        c1[i] = o1;
        c2[i] = o2;
    }
}

/// Polynomial mutation with bound handling.
inline void polynomial_mutation(Vector& x, const ParameterSpace& space, double prob, double eta, Rng& rng)
{
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (rng.uniform() > prob)
            continue;
        const double lo = space.lower[i], hi = space.upper[i];
        const double width = hi - lo;
        const double d1 = (x[i] - lo) / width;
        const double d2 = (hi - x[i]) / width;
        const double u = rng.uniform();
        const double power = 1.0 / (eta + 1.0);
        double dq;
        if (u < 0.5) {
            const double v = 2.0 * u + (1.0 - 2.0 * u) * std::pow(1.0 - d1, eta + 1.0);
            dq = std::pow(v, power) - 1.0;
        } else {
            const double v = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(1.0 - d2, eta + 1.0);
            dq = 1.0 - std::pow(v, power);
        }
        x[i] = std::clamp(x[i] + dq * width, lo, hi);
    }
}

} // namespace detail

/// NSGA-II minimizing the absolute per-component deviations from the target.
/// Every evaluation point (measured `replicates` times) is appended to the
/// trace until `budget` points have been evaluated. `seedPoints` fill the start
/// of the initial population; the rest is drawn uniformly from `initialBox`
/// (the parameter space when not given). A budget below the population size
/// truncates the initial population.
template <MeasurementSource Source>
RunTrace nsga2_run(Source& source, const TargetSpec& target, const ParameterSpace& space, std::size_t budget,
                   const Nsga2Config& cfg, int replicates = 1, const std::vector<Vector>& seedPoints = {},
                   const ParameterSpace* initialBox = nullptr)
{
    cfg.validate();
    Rng rng(cfg.seed);
    const ParameterSpace& box = initialBox ? *initialBox : space;
    const double mutationProb = cfg.mutationProb < 0.0 ? 1.0 / static_cast<double>(space.dim()) : cfg.mutationProb;
    const auto N = static_cast<std::size_t>(cfg.populationSize);

    Dataset data(space.dim(), target.dim());
    RunTrace trace;
    std::vector<Vector> population, objectives;

    auto evaluate = [&](const Vector& p, int generation) {
        evaluate_point(source, data, trace, target, p, replicates, generation,
                       generation == 0 ? Provenance::Initial : Provenance::Root);
        const Vector mean = data.mean_descriptor(trace.points.back().pointId);
        return Vector((mean - target.target).cwiseAbs());
    };

    if (budget == 0)
        return trace;
    try {
        for (std::size_t i = 0; i < N; ++i) {
            Vector p(space.dim());
            if (i < seedPoints.size()) {
                p = seedPoints[i];
            } else {
                for (Eigen::Index k = 0; k < p.size(); ++k)
                    p[k] = rng.uniform(box.lower[k], box.upper[k]);
            }
            objectives.push_back(evaluate(p, 0));
            population.push_back(std::move(p));
            if (trace.points.size() >= budget)
                return trace;
        }

        std::vector<std::size_t> rank(N);
        std::vector<double> crowd(N);
        auto assign_rank = [&](const std::vector<Vector>& objs) {
            rank.assign(objs.size(), 0);
            crowd.assign(objs.size(), 0.0);
            const auto fronts = nondominated_sort(objs);
            for (std::size_t f = 0; f < fronts.size(); ++f) {
                const auto cd = crowding_distance(objs, fronts[f]);
                for (std::size_t i = 0; i < fronts[f].size(); ++i) {
                    rank[fronts[f][i]] = f;
                    crowd[fronts[f][i]] = cd[i];
                }
            }
        };
        assign_rank(objectives);

        auto tournament = [&]() {
            const std::size_t a = rng.below(N), b = rng.below(N);
            if (rank[a] != rank[b])
                return rank[a] < rank[b] ? a : b;
            if (crowd[a] != crowd[b])
                return crowd[a] > crowd[b] ? a : b;
            return rng.uniform() < 0.5 ? a : b;
        };

        for (int generation = 1; trace.points.size() < budget; ++generation) {
            std::vector<Vector> offspring;
            while (offspring.size() < N) {
                Vector c1 = population[tournament()];
                Vector c2 = population[tournament()];
                if (rng.uniform() <= cfg.crossoverProb)
                    detail::sbx_crossover(c1, c2, space, cfg.crossoverDistribution, rng);
                detail::polynomial_mutation(c1, space, mutationProb, cfg.mutationDistribution, rng);
                detail::polynomial_mutation(c2, space, mutationProb, cfg.mutationDistribution, rng);
                offspring.push_back(std::move(c1));
                offspring.push_back(std::move(c2));
            }
            std::vector<Vector> combined = population;
            std::vector<Vector> combinedObj = objectives;
            for (auto& child : offspring) {
                if (trace.points.size() >= budget)
                    break;
                combinedObj.push_back(evaluate(child, generation));
                combined.push_back(std::move(child));
            }

            // Elitist environmental selection by front, then crowding distance.
            const auto fronts = nondominated_sort(combinedObj);
            std::vector<std::size_t> chosen;
            for (const auto& front : fronts) {
                if (chosen.size() + front.size() <= N) {
                    chosen.insert(chosen.end(), front.begin(), front.end());
                    continue;
                }
                const auto cd = crowding_distance(combinedObj, front);
                std::vector<std::size_t> order(front.size());
                std::iota(order.begin(), order.end(), std::size_t{0});
                std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cd[a] > cd[b]; });
                for (std::size_t i = 0; chosen.size() < N; ++i)
                    chosen.push_back(front[order[i]]);
                break;
            }
            std::vector<Vector> nextPop, nextObj;
            for (std::size_t idx : chosen) {
                nextPop.push_back(combined[idx]);
                nextObj.push_back(combinedObj[idx]);
            }
            population = std::move(nextPop);
            objectives = std::move(nextObj);
            assign_rank(objectives);
        }
    } catch (const Error& e) {
        if (e.code() != ErrorCode::OracleFailure)
            throw;
        trace.aborted = true;
        trace.abortReason = e.what();
    }
    return trace;
}

/// Uniform i.i.d. search inside the parameter box. `seedPoints` are evaluated
/// first and count towards the budget.
template <MeasurementSource Source>
RunTrace random_search_run(Source& source, const TargetSpec& target, const ParameterSpace& space, std::size_t budget,
                           std::uint64_t seed, int replicates = 1, const std::vector<Vector>& seedPoints = {})
{
    if (budget < 1)
        throw Error(ErrorCode::InvalidArgument, "random search needs a budget of at least one point");
    Rng rng(seed);
    Dataset data(space.dim(), target.dim());
    RunTrace trace;
    try {
        for (std::size_t i = 0; i < budget; ++i) {
            Vector p(space.dim());
            if (i < seedPoints.size()) {
                p = seedPoints[i];
            } else {
                for (Eigen::Index k = 0; k < p.size(); ++k)
                    p[k] = rng.uniform(space.lower[k], space.upper[k]);
            }
            evaluate_point(source, data, trace, target, p, replicates, i < seedPoints.size() ? 0 : static_cast<int>(i),
                           i < seedPoints.size() ? Provenance::Initial : Provenance::Root);
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
