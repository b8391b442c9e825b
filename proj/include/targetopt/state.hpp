#ifndef TARGETOPT_STATE_HPP
#define TARGETOPT_STATE_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include <targetopt/dataspace.hpp>
#include <targetopt/io.hpp>
#include <targetopt/optimizer.hpp>
#include <targetopt/rng.hpp>

namespace targetopt {

inline constexpr int kStateVersion = 1;

/// Settings of a measurement loop driven through state files.
struct LoopConfig {
    TargetSpec target;
    ParameterSpace space;
    ApproachConfig approach = ApproachConfig::approach(3);
    int replicates = 1;
    DesignKind designKind = DesignKind::LatinHypercube;
    std::size_t designSize = 4;
    int branchCap = 16;
    std::uint64_t seed = 1;

    void validate() const
    {
        target.validate();
        space.validate();
        if (replicates < 1 || branchCap < 1 || designSize < 2)
            throw Error(ErrorCode::ConfigError, "loop config needs replicates >= 1, branch_cap >= 1, design_size >= 2");
    }
};

struct LoopState {
    LoopConfig config;
    Dataset data;
    int iteration = 0;
    Rng rng;
    std::vector<int> pending;       ///< points suggested and awaiting measurements
    std::vector<int> previousBatch; ///< points suggested one step earlier
};

namespace detail {

inline nlohmann::json to_json(const Vector& v)
{
    auto out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out.push_back(v[i]);
    return out;
}

inline Vector vector_from_json(const nlohmann::json& j)
{
    if (!j.is_array())
        throw Error(ErrorCode::StateCorrupt, "expected a numeric array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number())
            throw Error(ErrorCode::StateCorrupt, "expected a numeric array");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

inline bool same_predictors(const Vector& a, const Vector& b)
{
    if (a.size() != b.size())
        return false;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        if (std::abs(a[i] - b[i]) > 1e-12 * (1.0 + std::abs(a[i])))
            return false;
    return true;
}

} // namespace detail

inline nlohmann::json loop_config_to_json(const LoopConfig& c)
{
    nlohmann::json j;
    j["target"] = detail::to_json(c.target.target);
    j["halfwidths"] = detail::to_json(c.target.halfwidths);
    j["lower"] = detail::to_json(c.space.lower);
    j["upper"] = detail::to_json(c.space.upper);
    if (c.space.resolution)
        j["resolution"] = detail::to_json(*c.space.resolution);
    j["approach"] = c.approach.id;
    if (c.approach.components.kind == ComponentPolicy::Kind::Kaiser)
        j["components"] = "kaiser";
    else
        j["components"] = c.approach.components.count;
    j["neighbor_count"] = c.approach.neighborCount;
    j["pca_window"] = c.approach.pcaWindow;
    j["replicates"] = c.replicates;
    j["design"] = c.designKind == DesignKind::LatinHypercube ? "lhs" : "uniform";
    j["design_size"] = c.designSize;
    j["branch_cap"] = c.branchCap;
    j["seed"] = c.seed;
    return j;
}

inline LoopConfig loop_config_from_json(const nlohmann::json& j)
{
    auto field = [&](const char* name) -> const nlohmann::json& {
        if (!j.contains(name))
            throw Error(ErrorCode::ConfigError, std::string("missing field '") + name + "'");
        return j.at(name);
    };
    try {
        LoopConfig c;
        c.target = TargetSpec(detail::vector_from_json(field("target")), detail::vector_from_json(field("halfwidths")));
        std::optional<Vector> res;
        if (j.contains("resolution"))
            res = detail::vector_from_json(j.at("resolution"));
        c.space = ParameterSpace(detail::vector_from_json(field("lower")), detail::vector_from_json(field("upper")), res);
        c.approach = ApproachConfig::approach(j.value("approach", 3));
        if (j.contains("components")) {
            const auto& comp = j.at("components");
            if (comp.is_string()) {
                if (comp.get<std::string>() != "kaiser")
                    throw Error(ErrorCode::ConfigError, "field 'components' must be an integer or \"kaiser\"");
                c.approach.components = ComponentPolicy::kaiser();
            } else {
                c.approach.components = ComponentPolicy::fixed(comp.get<int>());
            }
        }
        c.approach.neighborCount = j.value("neighbor_count", 15);
        c.approach.pcaWindow = j.value("pca_window", 5);
        c.replicates = j.value("replicates", 1);
        const std::string design = j.value("design", std::string("lhs"));
        if (design == "lhs")
            c.designKind = DesignKind::LatinHypercube;
        else if (design == "uniform")
            c.designKind = DesignKind::UniformRandom;
        else
            throw Error(ErrorCode::ConfigError, "field 'design' must be \"lhs\" or \"uniform\"");
        c.designSize = j.value("design_size", std::size_t{4});
        c.branchCap = j.value("branch_cap", 16);
        c.seed = j.value("seed", std::uint64_t{1});
        if (c.target.dim() == 0 || c.space.dim() == 0)
            throw Error(ErrorCode::ConfigError, "target and bounds must be non-empty");
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("malformed loop config: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidArgument)
            throw Error(ErrorCode::ConfigError, e.what());
        throw;
    }
}

inline std::string serialize_state(const LoopState& s)
{
    nlohmann::json j;
    j["version"] = kStateVersion;
    j["config"] = loop_config_to_json(s.config);
    j["iteration"] = s.iteration;
    j["rng"] = s.rng.serialize();
    auto points = nlohmann::json::array();
    for (const auto& p : s.data.points())
        points.push_back({{"id", p.id}, {"p", detail::to_json(p.predictors)}});
    j["points"] = points;
    auto meas = nlohmann::json::array();
    for (const auto& m : s.data.measurements())
        meas.push_back({{"point_id", m.pointId}, {"replicate", m.replicate}, {"d", detail::to_json(m.descriptors)}});
    j["measurements"] = meas;
    j["pending"] = s.pending;
    j["previous_batch"] = s.previousBatch;
    return j.dump(2) + "\n";
}

inline LoopState deserialize_state(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::StateCorrupt, std::string("state is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("version"))
        throw Error(ErrorCode::StateCorrupt, "state has no version field");
    if (j.at("version") != kStateVersion)
        throw Error(ErrorCode::SchemaMismatch, "unsupported state version " + j.at("version").dump());
    try {
        LoopState s;
        try {
            s.config = loop_config_from_json(j.at("config"));
        } catch (const Error& e) {
            throw Error(ErrorCode::StateCorrupt, e.what());
        }
        const auto P = s.config.space.dim(), D = s.config.target.dim();
        s.data = Dataset(P, D);
        for (const auto& p : j.at("points"))
            s.data.add_point(p.at("id").get<int>(), detail::vector_from_json(p.at("p")));
        for (const auto& m : j.at("measurements"))
            s.data.add_measurement(m.at("point_id").get<int>(), m.at("replicate").get<int>(),
                                   detail::vector_from_json(m.at("d")));
        s.iteration = j.at("iteration").get<int>();
        s.rng = Rng::deserialize(j.at("rng").get<std::string>());
        s.pending = j.at("pending").get<std::vector<int>>();
        s.previousBatch = j.at("previous_batch").get<std::vector<int>>();
        for (int id : s.pending)
            if (!s.data.has_point(id))
                throw Error(ErrorCode::StateCorrupt, "pending point " + std::to_string(id) + " does not exist");
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::StateCorrupt, std::string("state is malformed: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw Error(ErrorCode::StateCorrupt, e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidArgument)
            throw Error(ErrorCode::StateCorrupt, e.what());
        throw;
    }
}

/// Fresh state whose pending points are the initial design.
inline LoopState init_state(const LoopConfig& config)
{
    config.validate();
    LoopState s;
    s.config = config;
    s.data = Dataset(config.space.dim(), config.target.dim());
    s.rng = Rng(config.seed);
    for (const auto& p : initial_design(config.designKind, config.designSize, config.space, s.rng))
        s.pending.push_back(s.data.add_point(p));
    return s;
}

/// Replicate rows still owed for the pending points.
inline std::vector<SuggestionRow> outstanding(const LoopState& s)
{
    std::vector<SuggestionRow> out;
    for (int id : s.pending) {
        std::vector<bool> seen(static_cast<std::size_t>(s.config.replicates), false);
        for (const auto& m : s.data.measurements())
            if (m.pointId == id && m.replicate >= 0 && m.replicate < s.config.replicates)
                seen[static_cast<std::size_t>(m.replicate)] = true;
        for (int r = 0; r < s.config.replicates; ++r)
            if (!seen[static_cast<std::size_t>(r)])
                out.push_back({s.data.point(id).predictors, id, r});
    }
    return out;
}

struct StepResult {
    LoopState state;
    std::vector<SuggestionRow> suggestions;
};

/// Adds measurements of known points. Rows already present with identical
/// values are skipped, so repeated ingestion is harmless.
inline LoopState ingest(LoopState s, const std::vector<MeasurementRow>& rows)
{
    for (const auto& row : rows) {
        if (!s.data.has_point(row.pointId))
            throw Error(ErrorCode::SchemaMismatch, "measurement for unknown point id " + std::to_string(row.pointId));
        if (!detail::same_predictors(row.predictors, s.data.point(row.pointId).predictors))
            throw Error(ErrorCode::SchemaMismatch, "predictors of point " + std::to_string(row.pointId) + " do not match the suggestion");
        if (row.replicate < 0)
            throw Error(ErrorCode::SchemaMismatch, "negative replicate index");
        bool known = false;
        for (const auto& m : s.data.measurements())
            if (m.pointId == row.pointId && m.replicate == row.replicate) {
                if (m.descriptors != row.descriptors)
                    throw Error(ErrorCode::SchemaMismatch, "conflicting values for point " + std::to_string(row.pointId)
                                                               + " replicate " + std::to_string(row.replicate));
                known = true;
            }
        if (!known)
            s.data.add_measurement(row.pointId, row.replicate, row.descriptors);
    }
    return s;
}

/// Repeats the outstanding requests or, when every pending point is fully
/// measured, runs one iteration and requests its candidates.
inline StepResult suggest(LoopState s)
{
    auto owed = outstanding(s);
    if (!owed.empty())
        return {std::move(s), std::move(owed)};

    IterateOptions options;
    options.branchCap = s.config.branchCap;
    options.previousBatch = s.pending;
    const auto candidates = iterate(s.data, s.config.target, s.config.space, s.config.approach, options);
    s.previousBatch = s.pending;
    s.pending.clear();
    for (const auto& c : candidates)
        s.pending.push_back(s.data.add_point(c.predictors));
    ++s.iteration;
    auto next = outstanding(s);
    return {std::move(s), std::move(next)};
}

/// ingest() followed by suggest(). Pure in its inputs.
inline StepResult suggest_observe_step(LoopState s, const std::vector<MeasurementRow>& rows)
{
    return suggest(ingest(std::move(s), rows));
}

} // namespace targetopt

#endif
