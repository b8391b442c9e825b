#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include <targetopt/dataspace.hpp>

#include "helpers.hpp"

using namespace targetopt;
using namespace testing_helpers;

TEST(Standardize, SymmetricDescriptorsCentreAtTarget)
{
    const Matrix d = rows({{2, 0}, {-2, 0}, {0, 0}});
    const Matrix p = rows({{0, 0}, {1, 1}, {2, 5}});
    const TargetSpec target(vec({0, 0}), vec({0.1, 0.1}));
    const auto out = standardize(p, d, target, true);
    EXPECT_DOUBLE_EQ(out.stats.descriptorSds[0], 2.0);
    EXPECT_DOUBLE_EQ(out.descriptors(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(out.descriptors(1, 0), -1.0);
    EXPECT_DOUBLE_EQ(out.descriptors(2, 0), 0.0);
}

TEST(Standardize, ConstantDescriptorColumnIsRejected)
{
    const Matrix d = rows({{1}, {1}, {1}});
    const Matrix p = rows({{0}, {1}, {2}});
    const TargetSpec target(vec({1}), vec({0.1}));
    try {
        standardize(p, d, target);
        FAIL() << "expected DegenerateColumn";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateColumn);
    }
}

TEST(Standardize, PredictorsUseSampleSd)
{
    const Matrix p = rows({{1, 1}, {3, 3}});
    const Matrix d = rows({{0}, {1}});
    const auto out = standardize(p, d, TargetSpec(vec({0}), vec({1})));
    const double s = std::sqrt(2.0);
    EXPECT_DOUBLE_EQ(out.stats.predictorMeans[0], 2.0);
    EXPECT_NEAR(out.stats.predictorSds[0], s, 1e-15);
    EXPECT_NEAR(out.stats.predictorSds[1], s, 1e-15);
    EXPECT_NEAR(out.predictors(0, 0), -1 / s, 1e-15);
    EXPECT_NEAR(out.predictors(1, 1), 1 / s, 1e-15);
}

TEST(Standardize, NeedsTwoRows)
{
    try {
        standardize(rows({{1}}), rows({{1}}), TargetSpec(vec({0}), vec({1})));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InsufficientData);
    }
}

TEST(Standardize, RoundTripAndTargetMapsToZero)
{
    Rng rng(3);
    Matrix p(20, 3), d(20, 2);
    for (Eigen::Index i = 0; i < 20; ++i) {
        for (Eigen::Index j = 0; j < 3; ++j)
            p(i, j) = rng.uniform(-100, 100);
        d(i, 0) = rng.normal();
        d(i, 1) = 5 + rng.normal();
    }
    const TargetSpec target(vec({0.3, 4.0}), vec({0.1, 0.1}));
    const auto out = standardize(p, d, target);
    for (Eigen::Index i = 0; i < 20; ++i) {
        const Vector back = out.stats.destandardize_predictors(out.predictors.row(i).transpose());
        for (Eigen::Index j = 0; j < 3; ++j)
            EXPECT_NEAR(back[j], p(i, j), 1e-12 * std::abs(p(i, j)) + 1e-13);
    }
    // Descriptor rows equal to the target land on zero.
    const Matrix withTarget = (Matrix(21, 2) << d, target.target.transpose()).finished();
    const Matrix pp = (Matrix(21, 3) << p, p.row(0)).finished();
    const auto z = standardize(pp, withTarget, target);
    EXPECT_EQ(z.descriptors.row(20).norm(), 0.0);
}

TEST(InitialDesign, LatinHypercubeStratifies)
{
    const ParameterSpace space = box(0, 4);
    const auto pts = initial_design(DesignKind::LatinHypercube, 4, space, std::uint64_t{7});
    ASSERT_EQ(pts.size(), 4u);
    for (Eigen::Index dim = 0; dim < 2; ++dim) {
        std::vector<int> strata;
        for (const auto& p : pts)
            strata.push_back(std::min(3, static_cast<int>(std::floor(p[dim]))));
        std::sort(strata.begin(), strata.end());
        EXPECT_EQ(strata, (std::vector<int>{0, 1, 2, 3}));
    }
}

TEST(InitialDesign, LatinHypercubeMarginalsArePermutations)
{
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const std::size_t k = 2 + seed % 9;
        const ParameterSpace space(vec({-3, 10, 0}), vec({5, 11, 1}));
        const auto pts = initial_design(DesignKind::LatinHypercube, k, space, seed);
        for (Eigen::Index dim = 0; dim < 3; ++dim) {
            std::vector<std::size_t> idx;
            for (const auto& p : pts) {
                ASSERT_TRUE(space.contains(p));
                const double u = (p[dim] - space.lower[dim]) / (space.upper[dim] - space.lower[dim]);
                idx.push_back(std::min(k - 1, static_cast<std::size_t>(u * static_cast<double>(k))));
            }
            std::sort(idx.begin(), idx.end());
            for (std::size_t i = 0; i < k; ++i)
                EXPECT_EQ(idx[i], i);
        }
    }
}

TEST(InitialDesign, UniformIsDeterministic)
{
    const ParameterSpace space = box(-4, 4);
    const auto a = initial_design(DesignKind::UniformRandom, 4, space, std::uint64_t{99});
    const auto b = initial_design(DesignKind::UniformRandom, 4, space, std::uint64_t{99});
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i], b[i]);
        EXPECT_TRUE(space.contains(a[i]));
    }
}

TEST(InitialDesign, RejectsSinglePoint)
{
    EXPECT_THROW(initial_design(DesignKind::LatinHypercube, 1, box(0, 1), std::uint64_t{1}), Error);
}

TEST(Proximity, AllCoordinatesCloserThanResolution)
{
    ParameterSpace space = box(-5, 5);
    space.resolution = vec({0.1, 0.1});
    const std::vector<Vector> seen{vec({1, 2})};
    EXPECT_TRUE(proximity_conflict(vec({1.05, 2.05}), seen, space));
    EXPECT_FALSE(proximity_conflict(vec({1.05, 2.5}), seen, space));
}

TEST(Proximity, DisabledWithoutResolution)
{
    const std::vector<Vector> seen{vec({1, 2})};
    EXPECT_FALSE(proximity_conflict(vec({1, 2}), seen, box(-5, 5)));
}

TEST(Proximity, SymmetricAndMonotone)
{
    Rng rng(5);
    for (int k = 0; k < 2000; ++k) {
        const Vector a = vec({rng.uniform(-1, 1), rng.uniform(-1, 1)});
        const Vector b = vec({rng.uniform(-1, 1), rng.uniform(-1, 1)});
        ParameterSpace small = box(-5, 5), large = box(-5, 5);
        small.resolution = vec({rng.uniform(0.01, 1), rng.uniform(0.01, 1)});
        large.resolution = Vector(*small.resolution + vec({rng.uniform(0, 1), rng.uniform(0, 1)}));
        const bool ab = proximity_conflict(a, std::vector<Vector>{b}, small);
        EXPECT_EQ(ab, proximity_conflict(b, std::vector<Vector>{a}, small));
        if (ab) {
            EXPECT_TRUE(proximity_conflict(a, std::vector<Vector>{b}, large));
        }
    }
}

TEST(Proximity, UsesDatasetPoints)
{
    ParameterSpace space = box(-5, 5);
    space.resolution = vec({0.1, 0.1});
    Dataset data(2, 1);
    data.add_point(vec({1, 2}));
    EXPECT_TRUE(proximity_conflict(vec({1.01, 1.99}), data, space));
}

TEST(InTarget, ClosedBox)
{
    const TargetSpec t(vec({1.0, -2.0}), vec({0.1, 0.25}));
    EXPECT_TRUE(in_target(t.target, t));
    EXPECT_TRUE(in_target(vec({1.0 + 0.1, -2.0}), t));
    EXPECT_TRUE(in_target(vec({1.0, -2.0 - 0.25}), t));
    EXPECT_FALSE(in_target(vec({1.0 + 0.2, -2.0}), t));
}

TEST(Dataset, ReplicatesShareAPoint)
{
    Dataset data(2, 1);
    const int id = data.add_point(vec({0.5, 0.5}));
    data.add_measurement(id, 0, vec({1.0}));
    data.add_measurement(id, 1, vec({3.0}));
    EXPECT_EQ(data.size(), 2u);
    EXPECT_EQ(data.replicate_count(id), 2u);
    EXPECT_DOUBLE_EQ(data.mean_descriptor(id)[0], 2.0);
    EXPECT_EQ(data.predictor_matrix().rows(), 2);
    EXPECT_THROW(data.add_measurement(id + 1, 0, vec({1.0})), Error);
}

TEST(Spaces, ValidateBoundsAndHalfwidths)
{
    EXPECT_THROW(TargetSpec(vec({0}), vec({0})), Error);
    EXPECT_THROW(ParameterSpace(vec({1}), vec({1})), Error);
    EXPECT_THROW(ParameterSpace(vec({0}), vec({1}), vec({2})), Error);
}
