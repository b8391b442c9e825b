#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>

#include <targetopt/optimizer.hpp>
#include <targetopt/simbench.hpp>
#include <targetopt/state.hpp>

#include "helpers.hpp"

using namespace targetopt;
using namespace testing_helpers;

namespace {

struct Fn {
    std::function<Vector(const Vector&)> f;
    Vector measure(const Vector& p) { return f(p); }
    Vector truth(const Vector& p) const { return f(p); }
};

Dataset one_dim_dataset(std::initializer_list<double> ps, const std::function<double(double)>& f)
{
    Dataset data(1, 1);
    for (double p : ps) {
        const int id = data.add_point(vec({p}));
        data.add_measurement(id, 0, vec({f(p)}));
    }
    return data;
}

std::vector<Vector> general_position()
{
    return {vec({-3.1, 2.2}), vec({2.7, 3.4}), vec({0.4, -2.9}), vec({-1.8, -0.7})};
}

RunConfig config(int r, std::uint64_t seed = 1)
{
    RunConfig cfg;
    cfg.maxIterations = r;
    cfg.seed = seed;
    cfg.initialPoints = general_position();
    return cfg;
}

} // namespace

TEST(Iterate, LinearModelHitsTargetQuickly)
{
    NoisyModel model(ModelId::M1, 0.0, 1);
    const TargetSpec target = make_target(ModelId::M1, default_anchor());
    const auto trace = run(model, target, study_space(), ApproachConfig::approach(3), config(3));
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : trace.points)
        if (p.iteration >= 1)
            best = std::min(best, *p.actualDistance);
    EXPECT_LE(best, 0.1);
}

TEST(Iterate, NoRootUsesFallback)
{
    const Dataset data = one_dim_dataset({-2, -1, 0, 1, 2}, [](double p) { return p * p + 1; });
    const TargetSpec target(vec({0}), vec({0.1}));
    const auto c = iterate(data, target, box(-5, 5, 1), ApproachConfig::approach(1));
    ASSERT_FALSE(c.empty());
    EXPECT_EQ(c.front().provenance, Provenance::Fallback);
}

TEST(Iterate, TwoRootsBranch)
{
    const Dataset data = one_dim_dataset({-2, -1.5, 0, 0.5, 2}, [](double p) { return p * p; });
    const TargetSpec target(vec({1}), vec({0.1}));
    const auto c = iterate(data, target, box(-5, 5, 1), ApproachConfig::approach(3));
    ASSERT_EQ(c.size(), 2u);
    std::vector<double> ps{c[0].predictors[0], c[1].predictors[0]};
    std::sort(ps.begin(), ps.end());
    EXPECT_NEAR(ps[0], -1.0, 1e-8);
    EXPECT_NEAR(ps[1], 1.0, 1e-8);
    EXPECT_EQ(c[0].provenance, Provenance::Root);

    IterateOptions capped;
    capped.branchCap = 1;
    EXPECT_EQ(iterate(data, target, box(-5, 5, 1), ApproachConfig::approach(3), capped).size(), 1u);
}

TEST(Iterate, NeedsThreeMeasurements)
{
    const Dataset data = one_dim_dataset({-1, 1}, [](double p) { return p; });
    try {
        iterate(data, TargetSpec(vec({0}), vec({0.1})), box(-5, 5, 1), ApproachConfig::approach(3));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InsufficientData);
    }
}

TEST(Iterate, ApproachOneAndThreeAgreeWithoutSecondComponent)
{
    // Orthogonal design and a linear descriptor: no covariance is left after
    // the first PLS component.
    Dataset data(2, 1);
    for (const auto& p : {vec({-1, -1}), vec({1, -1}), vec({-1, 1}), vec({1, 1})}) {
        const int id = data.add_point(p);
        data.add_measurement(id, 0, vec({0.8 * p[0] - 1.2 * p[1]}));
    }
    const TargetSpec target(vec({0.3}), vec({0.1}));
    const auto a = iterate(data, target, study_space(), ApproachConfig::approach(1));
    const auto b = iterate(data, target, study_space(), ApproachConfig::approach(3));
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        EXPECT_LE((a[i].predictors - b[i].predictors).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Run, ZeroIterationsKeepsDesign)
{
    NoisyModel model(ModelId::M2, 0.0, 1);
    const auto trace = run(model, make_target(ModelId::M2, default_anchor()), study_space(), ApproachConfig::approach(3), config(0));
    ASSERT_EQ(trace.points.size(), 4u);
    for (const auto& p : trace.points)
        EXPECT_EQ(p.provenance, Provenance::Initial);
}

TEST(Run, DesignFromSeed)
{
    NoisyModel model(ModelId::M1, 0.0, 1);
    RunConfig cfg;
    cfg.maxIterations = 0;
    cfg.designSize = 6;
    cfg.replicates = 3;
    const auto trace = run(model, make_target(ModelId::M1, default_anchor()), study_space(), ApproachConfig::approach(3), cfg);
    ASSERT_EQ(trace.points.size(), 6u);
    for (const auto& p : trace.points)
        EXPECT_EQ(p.replicates.size(), 3u);
}

TEST(Run, Deterministic)
{
    for (int approach = 1; approach <= 5; ++approach) {
        NoisyModel m1(ModelId::M12, 0.2, 9), m2(ModelId::M12, 0.2, 9);
        const TargetSpec target = make_target(ModelId::M12, default_anchor());
        const auto a = run(m1, target, study_space(), ApproachConfig::approach(approach), config(15));
        const auto b = run(m2, target, study_space(), ApproachConfig::approach(approach), config(15));
        EXPECT_EQ(a, b) << "approach " << approach;
    }
}

TEST(Run, NoiseFreeLinearConverges)
{
    NoisyModel model(ModelId::M1, 0.0, 1);
    const auto trace = run(model, make_target(ModelId::M1, default_anchor()), study_space(), ApproachConfig::approach(3), config(40));
    const auto actual = trace.actual_distances();
    EXPECT_LE(*std::min_element(actual.begin(), actual.end()), 1e-3);
}

TEST(Run, CandidatesInsideBoundsAndBranchCap)
{
    for (int approach = 1; approach <= 5; ++approach)
        for (ModelId id : {ModelId::M2, ModelId::M3, ModelId::M4, ModelId::M123}) {
            NoisyModel model(id, 0.2, 3);
            RunConfig cfg = config(20);
            cfg.branchCap = 3;
            const auto trace = run(model, make_target(id, default_anchor()), study_space(), ApproachConfig::approach(approach), cfg);
            std::map<int, int> perIteration;
            for (const auto& p : trace.points) {
                EXPECT_TRUE(study_space().contains(p.predictors));
                EXPECT_GE(p.observedDistance, 0.0);
                ++perIteration[p.iteration];
            }
            for (const auto& [it, count] : perIteration)
                if (it > 0) {
                    EXPECT_LE(count, 3);
                }
        }
}

TEST(Run, ResolutionKeepsPointsApart)
{
    ParameterSpace space = study_space();
    space.resolution = vec({0.05, 0.05});
    for (int approach : {3, 4, 5}) {
        NoisyModel model(ModelId::M2, 0.0, 1);
        const auto trace = run(model, make_target(ModelId::M2, default_anchor()), space, ApproachConfig::approach(approach), config(40));
        for (std::size_t i = 0; i < trace.points.size(); ++i)
            for (std::size_t j = 0; j < i; ++j) {
                const Vector gap = (trace.points[i].predictors - trace.points[j].predictors).cwiseAbs();
                EXPECT_FALSE(gap[0] < 0.05 && gap[1] < 0.05) << "points " << j << " and " << i;
            }
    }
}

TEST(Run, OracleFailureReturnsPartialTrace)
{
    struct Flaky {
        int calls = 0;
        Vector measure(const Vector& p)
        {
            if (++calls > 6)
                throw std::runtime_error("instrument offline");
            return vec({p[0] + p[1]});
        }
    } source;
    const auto trace = run(source, TargetSpec(vec({0.5}), vec({0.1})), study_space(), ApproachConfig::approach(3), config(10));
    EXPECT_TRUE(trace.aborted);
    EXPECT_EQ(trace.points.size(), 6u);
    EXPECT_NE(trace.abortReason.find("instrument offline"), std::string::npos);
}

TEST(Run, StopOnHit)
{
    NoisyModel model(ModelId::M1, 0.0, 1);
    RunConfig cfg = config(40);
    cfg.stopOnHit = true;
    const auto trace = run(model, make_target(ModelId::M1, default_anchor()), study_space(), ApproachConfig::approach(3), cfg);
    // The batch holding the first hit is completed, then the run stops.
    const int last = trace.points.back().iteration;
    EXPECT_TRUE(std::any_of(trace.points.begin(), trace.points.end(),
                            [&](const TracePoint& p) { return p.iteration == last && p.inTarget; }));
    EXPECT_FALSE(std::any_of(trace.points.begin(), trace.points.end(),
                             [&](const TracePoint& p) { return p.iteration < last && p.inTarget; }));
    EXPECT_LT(trace.points.size(), 44u);
}

TEST(Run, EvaluationCap)
{
    NoisyModel model(ModelId::M2, 0.0, 1);
    RunConfig cfg = config(40);
    cfg.maxEvaluations = 7;
    const auto trace = run(model, make_target(ModelId::M2, default_anchor()), study_space(), ApproachConfig::approach(3), cfg);
    EXPECT_EQ(trace.points.size(), 11u);
}

// State-file loop ---------------------------------------------------------

namespace {

LoopConfig loop_config()
{
    LoopConfig c;
    c.target = make_target(ModelId::M1, default_anchor());
    c.space = study_space();
    c.replicates = 2;
    c.seed = 5;
    return c;
}

std::vector<MeasurementRow> measure_all(const std::vector<SuggestionRow>& rows)
{
    std::vector<MeasurementRow> out;
    for (const auto& r : rows)
        out.push_back({r.predictors, model_value(ModelId::M1, r.predictors), r.pointId, r.replicate});
    return out;
}

} // namespace

TEST(Step, InitThenEmptyMeasurementsRepeatsDesign)
{
    const LoopState s = init_state(loop_config());
    const auto step = suggest_observe_step(s, {});
    ASSERT_EQ(step.suggestions.size(), 8u);
    const auto design = initial_design(DesignKind::LatinHypercube, 4, study_space(), std::uint64_t{5});
    for (std::size_t i = 0; i < 4; ++i)
        EXPECT_EQ(step.suggestions[2 * i].predictors, design[i]);
    EXPECT_EQ(step.state.iteration, 0);
}

TEST(Step, MeasuredDesignGivesIterationOne)
{
    const LoopState s = init_state(loop_config());
    const auto rows = measure_all(outstanding(s));
    const auto step = suggest_observe_step(s, rows);
    EXPECT_EQ(step.state.iteration, 1);
    ASSERT_FALSE(step.suggestions.empty());

    Dataset data(2, 1);
    for (const auto& p : s.data.points())
        data.add_point(p.id, p.predictors);
    for (const auto& r : rows)
        data.add_measurement(r.pointId, r.replicate, r.descriptors);
    IterateOptions opts;
    opts.previousBatch = s.pending;
    const auto expected = iterate(data, s.config.target, s.config.space, s.config.approach, opts);
    ASSERT_EQ(step.suggestions.size(), expected.size() * 2);
    EXPECT_EQ(step.suggestions[0].predictors, expected[0].predictors);
}

TEST(Step, ReplayIsIdempotent)
{
    const LoopState s = init_state(loop_config());
    const auto rows = measure_all(outstanding(s));
    const auto a = suggest_observe_step(s, rows);
    const auto b = suggest_observe_step(deserialize_state(serialize_state(s)), rows);
    EXPECT_EQ(serialize_state(a.state), serialize_state(b.state));
    EXPECT_EQ(write_suggestions_csv(a.suggestions, 2), write_suggestions_csv(b.suggestions, 2));
    // Suggesting again before new measurements repeats the open requests.
    const auto again = suggest(a.state);
    EXPECT_EQ(write_suggestions_csv(again.suggestions, 2), write_suggestions_csv(a.suggestions, 2));
    EXPECT_EQ(serialize_state(again.state), serialize_state(a.state));
}

TEST(Step, StateRoundTrip)
{
    LoopState s = init_state(loop_config());
    s = suggest_observe_step(s, measure_all(outstanding(s))).state;
    const std::string text = serialize_state(s);
    EXPECT_EQ(serialize_state(deserialize_state(text)), text);
}

TEST(Step, CorruptAndMismatchedInputs)
{
    try {
        deserialize_state("{not json");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::StateCorrupt);
    }
    try {
        deserialize_state("{\"version\": 99}");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SchemaMismatch);
    }
    try {
        deserialize_state("{\"version\": 1, \"config\": {}}");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::StateCorrupt);
    }
    const LoopState s = init_state(loop_config());
    auto rows = measure_all(outstanding(s));
    rows[0].pointId = 999;
    try {
        suggest_observe_step(s, rows);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SchemaMismatch);
    }
    rows = measure_all(outstanding(s));
    rows[1].predictors[0] += 0.5;
    EXPECT_THROW(suggest_observe_step(s, rows), Error);
}
