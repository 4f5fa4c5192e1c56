#pragma once
/**
 * @file  eds_field.hpp
 * @brief Projection cost and singularity flags sampled on a planar grid.
 */

#include "vfphase/path_model.hpp"

#include <string>
#include <vector>

namespace vfphase::field {

/// Axis-aligned grid in the plane z = const.
struct GridSpec {
    double x_min = -1.0, x_max = 1.0;
    double y_min = -1.0, y_max = 1.0;
    int nx = 200, ny = 200;
    double z = 0.0;

    void validate() const;
};

/// Bounding box of the curve in x/y, padded by `margin` times its larger side.
GridSpec default_grid(const path::ConstraintPath& path, int nx = 200, int ny = 200, double margin = 0.2);

/// Parse "xmin,xmax,ymin,ymax,nx,ny[,z]".
GridSpec parse_grid(const std::string& spec);

struct Cell {
    Vec3 x = Vec3::Zero();
    double nearest_s = 0.0;
    double distance = 0.0;       ///< sqrt of the nearest cost
    bool is_eds = false;
    int num_stationary = 0;
    int num_global_minimizers = 1;
};

/// Row-major (y outer, x inner).
std::vector<Cell> eds_field(const path::ConstraintPath& path, const GridSpec& grid);

std::string field_to_csv(const std::vector<Cell>& cells);

}  // namespace vfphase::field
