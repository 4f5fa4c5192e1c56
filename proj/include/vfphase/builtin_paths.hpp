#pragma once
/**
 * @file  builtin_paths.hpp
 * @brief Analytic demonstration shapes, always routed through resampling and fitting.
 */

#include "vfphase/path_model.hpp"

#include <string>
#include <vector>

namespace vfphase::shapes {

enum class ShapeKind { line, circle_arc, circle, ellipse, parabola };

/// Planar shapes live in the xy plane through `center` (z = center.z).
struct ShapeSpec {
    ShapeKind kind = ShapeKind::circle_arc;
    Vec3 center = Vec3::Zero();
    Vec3 start = Vec3::Zero();            ///< line only
    Vec3 end = Vec3(0.5, 0.0, 0.0);       ///< line only
    double radius = 0.1;                  ///< circle_arc, circle; vertex radius of parabola [m]
    double start_deg = 0.0;               ///< polar angle of the first point
    double sweep_deg = 240.0;             ///< circle_arc, ellipse
    double semi_a = 0.7;                  ///< ellipse x semi-axis [m]
    double semi_b = 0.5;                  ///< ellipse y semi-axis [m]
    double half_width = 0.2;              ///< parabola x extent on each side of the vertex [m]
    double delta = 0.01;                  ///< resampling spacing [m]
    int num_basis = 30;
    double ridge = 0.0;
    int samples = 4000;                   ///< density of the analytic polyline
};

ShapeKind parse_kind(const std::string& name);
std::string kind_name(ShapeKind k);
std::vector<std::string> kind_names();

/// Dense polyline of the analytic shape.
path::RawTrajectory shape_samples(const ShapeSpec& spec);

/// shape_samples -> resample_spatial -> fit_path.
path::FitResult make_path(const ShapeSpec& spec);

}  // namespace vfphase::shapes
