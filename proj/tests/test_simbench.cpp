#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include <targetopt/simbench.hpp>

#include "criteria.hpp"
#include "helpers.hpp"

using namespace targetopt;
using namespace testing_helpers;

namespace {

RunTrace trace_of(const std::vector<double>& observed, const std::vector<double>& actual)
{
    RunTrace t;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        TracePoint p;
        p.pointId = static_cast<int>(i);
        p.observedDistance = observed[i];
        p.actualDistance = actual[i];
        t.points.push_back(p);
    }
    return t;
}

} // namespace

TEST(Models, Examples)
{
    EXPECT_DOUBLE_EQ(model_value(ModelId::M1, vec({1, 1}))[0], -0.4);
    EXPECT_DOUBLE_EQ(model_value(ModelId::M2, vec({1, 1}))[0], 1.0);
    EXPECT_DOUBLE_EQ(model_value(ModelId::M3, vec({1, 1}))[0], 0.0);
    EXPECT_DOUBLE_EQ(model_value(ModelId::M4, vec({1, 4}))[0], 0.8 - 1.2 * 2);
    EXPECT_EQ(model_value(ModelId::M123, vec({2, 1})).size(), 3);
    try {
        model_from_int(7);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnknownModelId);
    }
}

TEST(Models, NoiseFreeIsPure)
{
    NoisyModel m(ModelId::M123, 0.0, 3);
    const Vector p = vec({0.3, -1.7});
    const Vector first = m.measure(p);
    for (int i = 0; i < 10; ++i)
        EXPECT_EQ(m.measure(p), first);
    EXPECT_EQ(m.truth(p), first);
}

TEST(Models, NoiseStatistics)
{
    const double sigma = 0.2;
    NoisyModel m(ModelId::M1, sigma, 12345);
    const Vector p = vec({1, 1});
    const double base = model_value(ModelId::M1, p)[0];
    const int n = 100000;
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
        const double e = m.measure(p)[0] - base;
        sum += e;
        sq += e * e;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    EXPECT_LE(std::abs(mean), 3 * sigma / std::sqrt(static_cast<double>(n)) * 1.1);
    EXPECT_LE(std::abs(var - sigma * sigma), 0.05 * sigma * sigma);
}

TEST(Targets, Examples)
{
    EXPECT_DOUBLE_EQ(make_target(ModelId::M1, vec({0, 0})).target[0], 0.0);
    const auto t12 = make_target(ModelId::M12, vec({1, 1}));
    EXPECT_DOUBLE_EQ(t12.target[0], -0.4);
    EXPECT_DOUBLE_EQ(t12.target[1], 1.0);
    EXPECT_DOUBLE_EQ(t12.halfwidths[0], 0.1);
}

TEST(Targets, ModelTwelveHasTwoExactSolutions)
{
    // Substitute the line 0.8 p1 - 1.2 p2 = t1 into 0.5 (p1^2 + p2^2) = t2 and
    // inspect the discriminant of the resulting quadratic in p2.
    Rng rng(61);
    int checked = 0;
    while (checked < 50) {
        const Vector anchor = vec({rng.uniform(-5, 5), rng.uniform(-5, 5)});
        const auto t = make_target(ModelId::M12, anchor).target;
        const double lineDist2 = t[0] * t[0] / (0.8 * 0.8 + 1.2 * 1.2);
        if (!(t[1] > lineDist2))
            continue;
        ++checked;
        // p1 = (t1 + 1.2 p2) / 0.8
        const double a = 0.5 * (1.2 * 1.2 / 0.64 + 1.0);
        const double b = 0.5 * 2 * t[0] * 1.2 / 0.64;
        const double c = 0.5 * t[0] * t[0] / 0.64 - t[1];
        const double disc = b * b - 4 * a * c;
        ASSERT_GT(disc, 0.0);
        for (double sgn : {-1.0, 1.0}) {
            const double p2 = (-b + sgn * std::sqrt(disc)) / (2 * a);
            const Vector p = vec({(t[0] + 1.2 * p2) / 0.8, p2});
            EXPECT_LE((model_value(ModelId::M12, p) - t).cwiseAbs().maxCoeff(), 1e-9);
        }
    }
}

TEST(Simulate, ZeroIterationsGivesDesignOnly)
{
    auto spec = criteria::study(ModelId::M2, Method::approach_id(3), 0.2, 3, 0, 1);
    const auto res = simulate(spec);
    ASSERT_EQ(res.size(), 1u);
    ASSERT_FALSE(res[0].error);
    std::size_t measurements = 0;
    for (const auto& p : res[0].trace.points)
        measurements += p.replicates.size();
    EXPECT_EQ(measurements, 4u * 3u);
}

TEST(Simulate, CommonInitialPoints)
{
    for (const Method m : {Method::approach_id(1), Method::approach_id(5), Method::nsga2(), Method::random()}) {
        const auto a = simulate(criteria::study(ModelId::M12, Method::approach_id(3), 0.0, 1, 5, 3));
        const auto b = simulate(criteria::study(ModelId::M12, m, 0.0, 1, 5, 3));
        for (std::size_t path = 0; path < 3; ++path)
            for (std::size_t i = 0; i < 4; ++i)
                EXPECT_EQ(a[path].trace.points[i].predictors, b[path].trace.points[i].predictors);
    }
}

TEST(Simulate, EqualLengthsAcrossMethods)
{
    for (const Method m : {Method::approach_id(2), Method::approach_id(4), Method::nsga2(), Method::random()})
        for (const auto& r : simulate(criteria::study(ModelId::M123, m, 0.2, 1, 30, 4))) {
            ASSERT_FALSE(r.error) << *r.error;
            EXPECT_EQ(r.trace.points.size(), 34u) << m.name();
        }
}

TEST(Simulate, ThreadCountDoesNotMatter)
{
    auto spec = criteria::study(ModelId::M12, Method::approach_id(5), 0.2, 2, 12, 9);
    const auto one = simulate(spec);
    spec.threads = 4;
    const auto four = simulate(spec);
    ASSERT_EQ(one.size(), four.size());
    for (std::size_t i = 0; i < one.size(); ++i)
        EXPECT_EQ(one[i].trace, four[i].trace);
}

TEST(Simulate, NoiseFreeLinearQuantile)
{
    const auto [q, failed] = criteria::final_quantile(criteria::study(ModelId::M1, Method::approach_id(3), 0.0, 1, 40),
                                                      DistanceKind::Actual);
    EXPECT_EQ(failed, 0u);
    EXPECT_LE(q, 0.1);
}

TEST(Quantile, LinearInterpolation)
{
    std::vector<double> v(100);
    std::iota(v.begin(), v.end(), 1.0);
    EXPECT_NEAR(quantile(v, 0.95), 95.05, 1e-12);
    EXPECT_DOUBLE_EQ(quantile(v, 1.0), 100.0);
    EXPECT_DOUBLE_EQ(quantile(v, 0.0), 1.0);
    EXPECT_THROW(quantile({}, 0.5), Error);
}

TEST(PerformanceQuantiles, SinglePathAndMaximum)
{
    const auto t = trace_of({3, 1, 2, 0.5}, {3, 1, 2, 0.5});
    const auto single = performance_quantiles({t}, 0.95, DistanceKind::Observed);
    EXPECT_EQ(single.values, (std::vector<double>{3, 1, 1, 0.5}));
    const auto u = trace_of({1, 5, 5, 5}, {1, 5, 5, 5});
    const auto top = performance_quantiles({t, u}, 1.0, DistanceKind::Observed);
    EXPECT_EQ(top.values, (std::vector<double>{3, 1, 1, 1}));
}

TEST(PerformanceQuantiles, LengthMismatch)
{
    try {
        performance_quantiles({trace_of({1, 2}, {1, 2}), trace_of({1}, {1})});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
    }
}

TEST(PerformanceQuantiles, NonIncreasing)
{
    const auto traces = traces_of(simulate(criteria::study(ModelId::M2, Method::approach_id(4), 0.2, 1, 25, 20)));
    for (DistanceKind kind : {DistanceKind::Observed, DistanceKind::BestActual}) {
        const auto c = performance_quantiles(traces, 0.95, kind);
        for (std::size_t i = 1; i < c.values.size(); ++i)
            EXPECT_LE(c.values[i], c.values[i - 1]);
    }
}

TEST(Incumbent, FollowsBestObservedPoint)
{
    // Point 2 looks best but is truly worse than point 1.
    const auto t = trace_of({1.0, 0.5, 0.2, 0.4}, {1.0, 0.3, 0.6, 0.1});
    EXPECT_EQ(incumbent_actual(t), (std::vector<double>{1.0, 0.3, 0.6, 0.6}));
    EXPECT_EQ(performance_sequence(t, DistanceKind::BestActual), (std::vector<double>{1.0, 0.3, 0.3, 0.1}));
    const auto gap = bias_summary({t});
    EXPECT_NEAR(gap[2], 0.6 - 0.2, 1e-15);
}

TEST(Bias, ZeroWithoutNoise)
{
    const auto gap = bias_summary(traces_of(simulate(criteria::study(ModelId::M1, Method::approach_id(3), 0.0, 1, 20, 10))));
    for (double g : gap)
        EXPECT_EQ(g, 0.0);
}

TEST(Timing, PositiveAndSeparate)
{
    const auto spec = criteria::study(ModelId::M1, Method::random(), 0.0, 1, 5, 2);
    const auto a = timing_capture(spec);
    const auto b = timing_capture(spec);
    EXPECT_GT(a.seconds, 0.0);
    EXPECT_GT(b.seconds, 0.0);
    EXPECT_EQ(a.paths.size(), 2u);
    EXPECT_EQ(b.paths.size(), 2u);
}

TEST(Methods, NamesRoundTrip)
{
    for (const Method m : {Method::approach_id(1), Method::approach_id(5), Method::nsga2(), Method::random()})
        EXPECT_EQ(Method::parse(m.name()), m);
    EXPECT_THROW(Method::parse("approach9"), Error);
}
