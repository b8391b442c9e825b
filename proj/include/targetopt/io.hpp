#ifndef TARGETOPT_IO_HPP
#define TARGETOPT_IO_HPP

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <targetopt/dataspace.hpp>
#include <targetopt/error.hpp>

namespace targetopt {

/// Shortest text that reads back to the same double.
inline std::string format_double(double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::vector<std::string> split_line(const std::string& line, char sep = ',')
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, sep)) {
        if (!cell.empty() && cell.back() == '\r')
            cell.pop_back();
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == sep)
        out.emplace_back();
    return out;
}

inline double parse_double(const std::string& s)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw Error(ErrorCode::SchemaMismatch, "not a number: '" + s + "'");
    }
    if (used != s.size())
        throw Error(ErrorCode::SchemaMismatch, "not a number: '" + s + "'");
    return v;
}

inline int parse_int(const std::string& s)
{
    const double v = parse_double(s);
    if (v != static_cast<double>(static_cast<int>(v)))
        throw Error(ErrorCode::SchemaMismatch, "not an integer: '" + s + "'");
    return static_cast<int>(v);
}

inline std::string dataset_header(Eigen::Index P, Eigen::Index D)
{
    std::string h;
    for (Eigen::Index i = 0; i < P; ++i)
        h += "p" + std::to_string(i + 1) + ",";
    for (Eigen::Index j = 0; j < D; ++j)
        h += "d" + std::to_string(j + 1) + ",";
    return h + "point_id,replicate";
}

inline std::string suggestion_header(Eigen::Index P)
{
    std::string h;
    for (Eigen::Index i = 0; i < P; ++i)
        h += "p" + std::to_string(i + 1) + ",";
    return h + "point_id,replicate";
}

/// One row per measurement: p1..pP,d1..dD,point_id,replicate.
inline std::string write_dataset_csv(const Dataset& data)
{
    std::string out = dataset_header(data.predictor_dim(), data.descriptor_dim()) + "\n";
    for (const auto& m : data.measurements()) {
        const auto& p = data.point(m.pointId).predictors;
        for (Eigen::Index i = 0; i < p.size(); ++i)
            out += format_double(p[i]) + ",";
        for (Eigen::Index j = 0; j < m.descriptors.size(); ++j)
            out += format_double(m.descriptors[j]) + ",";
        out += std::to_string(m.pointId) + "," + std::to_string(m.replicate) + "\n";
    }
    return out;
}

struct MeasurementRow {
    Vector predictors;
    Vector descriptors;
    int pointId = 0;
    int replicate = 0;
};

/// Parses a dataset file. An empty text (or header only) yields no rows.
inline std::vector<MeasurementRow> read_dataset_csv(const std::string& text, Eigen::Index P, Eigen::Index D)
{
    std::vector<MeasurementRow> rows;
    std::istringstream is(text);
    std::string line;
    bool header = true;
    std::size_t lineNo = 0;
    while (std::getline(is, line)) {
        ++lineNo;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (header) {
            if (line != dataset_header(P, D))
                throw Error(ErrorCode::SchemaMismatch, "line 1: expected header '" + dataset_header(P, D) + "'");
            header = false;
            continue;
        }
        const auto cells = split_line(line);
        if (cells.size() != static_cast<std::size_t>(P + D + 2))
            throw Error(ErrorCode::SchemaMismatch, "line " + std::to_string(lineNo) + ": wrong number of fields");
        MeasurementRow row{Vector(P), Vector(D), 0, 0};
        for (Eigen::Index i = 0; i < P; ++i)
            row.predictors[i] = parse_double(cells[i]);
        for (Eigen::Index j = 0; j < D; ++j)
            row.descriptors[j] = parse_double(cells[P + j]);
        row.pointId = parse_int(cells[P + D]);
        row.replicate = parse_int(cells[P + D + 1]);
        rows.push_back(std::move(row));
    }
    return rows;
}

struct SuggestionRow {
    Vector predictors;
    int pointId = 0;
    int replicate = 0;
};

inline std::string write_suggestions_csv(const std::vector<SuggestionRow>& rows, Eigen::Index P)
{
    std::string out = suggestion_header(P) + "\n";
    for (const auto& r : rows) {
        for (Eigen::Index i = 0; i < r.predictors.size(); ++i)
            out += format_double(r.predictors[i]) + ",";
        out += std::to_string(r.pointId) + "," + std::to_string(r.replicate) + "\n";
    }
    return out;
}

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

/// Writes through a sibling temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error(ErrorCode::InvalidArgument, "cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out)
            throw Error(ErrorCode::InvalidArgument, "write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

} // namespace targetopt

#endif
