#include "vfphase/eds_field.hpp"

#include "vfphase/error.hpp"
#include "vfphase/path_io.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vfphase::field {

void GridSpec::validate() const
{
    if (!(x_max > x_min) || !(y_max > y_min) || !std::isfinite(x_min) || !std::isfinite(x_max) ||
        !std::isfinite(y_min) || !std::isfinite(y_max) || !std::isfinite(z))
        throw Error(ErrorCode::invalid_parameter, "grid: need finite bounds with min < max");
    if (nx < 2 || ny < 2)
        throw Error(ErrorCode::invalid_parameter, "grid: need at least 2 points per axis");
}

GridSpec default_grid(const path::ConstraintPath& path, int nx, int ny, double margin)
{
    Vec3 lo = Vec3::Constant(1e300), hi = Vec3::Constant(-1e300);
    const int n = 400;
    for (int i = 0; i <= n; ++i) {
        const Vec3 p = path.position(path.length() * i / n);
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double side = std::max({hi.x() - lo.x(), hi.y() - lo.y(), 1e-3});
    GridSpec g;
    g.x_min = lo.x() - margin * side;
    g.x_max = hi.x() + margin * side;
    g.y_min = lo.y() - margin * side;
    g.y_max = hi.y() + margin * side;
    g.nx = nx;
    g.ny = ny;
    g.z = 0.5 * (lo.z() + hi.z());
    return g;
}

GridSpec parse_grid(const std::string& spec)
{
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ','))
        parts.push_back(item);
    if (parts.size() != 6 && parts.size() != 7)
        throw Error(ErrorCode::validation_error, "grid spec must be xmin,xmax,ymin,ymax,nx,ny[,z]");
    GridSpec g;
    try {
        std::size_t used = 0;
        auto num = [&](const std::string& s) {
            const double v = std::stod(s, &used);
            if (used != s.size())
                throw std::invalid_argument(s);
            return v;
        };
        auto integer = [&](const std::string& s) {
            const int v = std::stoi(s, &used);
            if (used != s.size())
                throw std::invalid_argument(s);
            return v;
        };
        g.x_min = num(parts[0]);
        g.x_max = num(parts[1]);
        g.y_min = num(parts[2]);
        g.y_max = num(parts[3]);
        g.nx = integer(parts[4]);
        g.ny = integer(parts[5]);
        if (parts.size() == 7)
            g.z = num(parts[6]);
    } catch (const std::exception&) {
        throw Error(ErrorCode::validation_error, "grid spec '" + spec + "': malformed number");
    }
    try {
        g.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::validation_error, e.what());
    }
    return g;
}

std::vector<Cell> eds_field(const path::ConstraintPath& path, const GridSpec& grid)
{
    grid.validate();
    std::vector<Cell> out;
    out.reserve(static_cast<std::size_t>(grid.nx) * static_cast<std::size_t>(grid.ny));
    for (int j = 0; j < grid.ny; ++j) {
        const double y = grid.y_min + (grid.y_max - grid.y_min) * j / (grid.ny - 1);
        for (int i = 0; i < grid.nx; ++i) {
            const double x = grid.x_min + (grid.x_max - grid.x_min) * i / (grid.nx - 1);
            Cell c;
            c.x = Vec3(x, y, grid.z);
            const auto rep = path::eds_analyze(path, c.x);
            c.nearest_s = rep.nearest_s;
            c.distance = std::sqrt(std::max(0.0, rep.nearest_cost));
            c.is_eds = rep.is_eds;
            c.num_stationary = static_cast<int>(rep.stationary_points.size());
            c.num_global_minimizers = rep.num_global_minimizers;
            out.push_back(c);
        }
    }
    return out;
}

std::string field_to_csv(const std::vector<Cell>& cells)
{
    std::string out = "x,y,z,nearest_s,distance,is_eds,num_stationary,num_global_minimizers\n";
    for (const auto& c : cells) {
        out += io::format_double(c.x.x()) + "," + io::format_double(c.x.y()) + "," + io::format_double(c.x.z()) +
               "," + io::format_double(c.nearest_s) + "," + io::format_double(c.distance) + "," +
               (c.is_eds ? "1" : "0") + "," + std::to_string(c.num_stationary) + "," +
               std::to_string(c.num_global_minimizers) + "\n";
    }
    return out;
}

}  // namespace vfphase::field
