#include "vfphase/path_io.hpp"

#include "vfphase/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace vfphase::io {
namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ','))
        out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

bool parse_number(const std::string& s, double& v)
{
    if (s.empty())
        return false;
    const char* first = s.data();
    if (*first == '+')
        ++first;
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    return ec == std::errc() && ptr == s.data() + s.size();
}

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

[[noreturn]] void parse_fail(const std::string& source, int line, const std::string& msg)
{
    std::ostringstream os;
    os << source << ":" << line << ": " << msg;
    throw Error(ErrorCode::parse_error, os.str());
}

int column_index(const CsvTable& t, const std::string& name)
{
    const auto it = std::find(t.columns.begin(), t.columns.end(), name);
    return it == t.columns.end() ? -1 : static_cast<int>(it - t.columns.begin());
}

}  // namespace

std::string read_text_file(const std::string& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::io_error, "cannot open '" + file + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& file, const std::string& text)
{
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorCode::io_error, "cannot open '" + file + "' for writing");
    out << text;
    if (!out)
        throw Error(ErrorCode::io_error, "write to '" + file + "' failed");
}

std::string format_double(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc())
        return "nan";
    return std::string(buf, ptr);
}

CsvTable parse_csv(const std::string& text, const std::string& source)
{
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#')
            continue;
        auto cells = split(t);
        std::vector<double> row(cells.size());
        bool numeric = true;
        for (std::size_t i = 0; i < cells.size(); ++i)
            numeric = numeric && parse_number(cells[i], row[i]);
        if (!numeric) {
            if (table.rows.empty() && table.columns.empty()) {
                for (auto& c : cells)
                    table.columns.push_back(lower(c));
                width = cells.size();
                continue;
            }
            parse_fail(source, lineno, "non-numeric value in '" + t + "'");
        }
        if (width == 0)
            width = row.size();
        if (row.size() != width)
            parse_fail(source, lineno, "expected " + std::to_string(width) + " columns, found " +
                                           std::to_string(row.size()));
        for (double v : row)
            if (!std::isfinite(v))
                parse_fail(source, lineno, "non-finite value");
        table.rows.push_back(std::move(row));
        table.line_numbers.push_back(lineno);
    }
    return table;
}

CsvTable read_csv(const std::string& file)
{
    return parse_csv(read_text_file(file), file);
}

path::RawTrajectory trajectory_from_csv(const CsvTable& table, const std::string& source)
{
    int it = -1, ix = 0, iy = 1, iz = 2;
    std::size_t width = table.columns.size();
    if (!table.columns.empty()) {
        it = column_index(table, "t");
        ix = column_index(table, "x");
        iy = column_index(table, "y");
        iz = column_index(table, "z");
        if (ix < 0 || iy < 0 || iz < 0)
            parse_fail(source, 1, "header must name columns x, y, z (and optionally t)");
    } else if (!table.rows.empty()) {
        width = table.rows.front().size();
        if (width == 4) {
            it = 0;
            ix = 1;
            iy = 2;
            iz = 3;
        } else if (width != 3) {
            parse_fail(source, table.line_numbers.front(), "expected columns x,y,z or t,x,y,z");
        }
    }
    path::RawTrajectory traj;
    for (const auto& r : table.rows) {
        traj.samples.emplace_back(r[ix], r[iy], r[iz]);
        if (it >= 0)
            traj.timestamps.push_back(r[it]);
    }
    if (traj.samples.size() < 2)
        throw Error(ErrorCode::degenerate_input, source + ": need at least 2 samples");
    return traj;
}

path::RawTrajectory read_trajectory_csv(const std::string& file)
{
    return trajectory_from_csv(read_csv(file), file);
}

std::string trajectory_to_csv(const path::RawTrajectory& traj)
{
    const bool timed = traj.timestamps.size() == traj.samples.size() && !traj.samples.empty();
    std::string out = timed ? "t,x,y,z\n" : "x,y,z\n";
    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
        if (timed)
            out += format_double(traj.timestamps[i]) + ",";
        const auto& p = traj.samples[i];
        out += format_double(p.x()) + "," + format_double(p.y()) + "," + format_double(p.z()) + "\n";
    }
    return out;
}

ForceTrace force_trace_from_csv(const CsvTable& table, const std::string& source)
{
    int it = 0, ix = 1, iy = 2, iz = 3;
    if (!table.columns.empty()) {
        it = column_index(table, "t");
        ix = column_index(table, "fx");
        iy = column_index(table, "fy");
        iz = column_index(table, "fz");
        if (it < 0 || ix < 0 || iy < 0 || iz < 0)
            parse_fail(source, 1, "header must name columns t, Fx, Fy, Fz");
    } else if (!table.rows.empty() && table.rows.front().size() != 4) {
        parse_fail(source, table.line_numbers.front(), "expected columns t,Fx,Fy,Fz");
    }
    ForceTrace ft;
    for (std::size_t k = 0; k < table.rows.size(); ++k) {
        const auto& r = table.rows[k];
        if (!ft.t.empty() && !(r[it] > ft.t.back()))
            parse_fail(source, table.line_numbers[k], "time stamps must be strictly increasing");
        ft.t.push_back(r[it]);
        ft.force.emplace_back(r[ix], r[iy], r[iz]);
    }
    if (ft.t.empty())
        throw Error(ErrorCode::invalid_input, source + ": force trace is empty");
    return ft;
}

ForceTrace read_force_csv(const std::string& file)
{
    return force_trace_from_csv(read_csv(file), file);
}

Json path_to_json(const path::ConstraintPath& p)
{
    Json w = Json::array();
    const auto& W = p.weights();
    for (Eigen::Index i = 0; i < W.rows(); ++i)
        w.push_back({W(i, 0), W(i, 1), W(i, 2)});
    return {
        {"format", kPathFormat},
        {"version", kPathVersion},
        {"delta", p.delta()},
        {"length", p.length()},
        {"degree", p.degree()},
        {"weights", std::move(w)},
    };
}

path::ConstraintPath path_from_json(const Json& j)
{
    auto bad = [](const std::string& msg) { throw Error(ErrorCode::validation_error, "constraint path: " + msg); };
    if (!j.is_object())
        bad("document must be an object");
    if (!j.contains("format") || j["format"] != kPathFormat)
        bad(std::string("\"format\" must be \"") + kPathFormat + "\"");
    if (!j.contains("version") || !j["version"].is_number_integer() || j["version"].get<int>() != kPathVersion)
        bad("unsupported \"version\" (expected " + std::to_string(kPathVersion) + ")");
    for (const char* key : {"delta", "length"})
        if (!j.contains(key) || !j[key].is_number())
            bad(std::string("\"") + key + "\" must be a number");
    if (!j.contains("weights") || !j["weights"].is_array())
        bad("\"weights\" must be an array of [x, y, z]");
    const auto& w = j["weights"];
    Eigen::MatrixX3d W(static_cast<Eigen::Index>(w.size()), 3);
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!w[i].is_array() || w[i].size() != 3)
            bad("weights[" + std::to_string(i) + "] must have 3 entries");
        for (int c = 0; c < 3; ++c) {
            if (!w[i][c].is_number())
                bad("weights[" + std::to_string(i) + "] must be numeric");
            W(static_cast<Eigen::Index>(i), c) = w[i][c].get<double>();
        }
    }
    if (j.contains("degree") && (!j["degree"].is_number_integer() || j["degree"].get<long>() != W.rows() - 1))
        bad("\"degree\" does not match the number of weights");
    try {
        return path::ConstraintPath(std::move(W), j["length"].get<double>(), j["delta"].get<double>());
    } catch (const Error& e) {
        throw Error(ErrorCode::validation_error, std::string("constraint path: ") + e.what());
    }
}

std::string path_to_string(const path::ConstraintPath& p)
{
    return path_to_json(p).dump(2) + "\n";
}

void save_path(const path::ConstraintPath& p, const std::string& file)
{
    write_text_file(file, path_to_string(p));
}

path::ConstraintPath load_path(const std::string& file)
{
    const std::string text = read_text_file(file);
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::parse_error, file + ": " + e.what());
    }
    return path_from_json(j);
}

}  // namespace vfphase::io
