#include "vfphase/builtin_paths.hpp"

#include "vfphase/error.hpp"

#include <cmath>
#include <numbers>

namespace vfphase::shapes {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct NamedKind {
    const char* name;
    ShapeKind kind;
};
constexpr NamedKind kKinds[] = {
    {"line", ShapeKind::line},       {"circle_arc", ShapeKind::circle_arc},
    {"circle", ShapeKind::circle},   {"ellipse", ShapeKind::ellipse},
    {"parabola", ShapeKind::parabola},
};


}  // namespace

ShapeKind parse_kind(const std::string& name)
{
    for (const auto& k : kKinds)
        if (name == k.name)
            return k.kind;
    throw Error(ErrorCode::validation_error, "unknown shape '" + name + "'");
}

std::string kind_name(ShapeKind kind)
{
    for (const auto& k : kKinds)
        if (kind == k.kind)
            return k.name;
    return "unknown";
}

std::vector<std::string> kind_names()
{
    std::vector<std::string> out;
    for (const auto& k : kKinds)
        out.emplace_back(k.name);
    return out;
}

path::RawTrajectory shape_samples(const ShapeSpec& spec)
{
    if (spec.samples < 2)
        throw Error(ErrorCode::invalid_parameter, "shape needs at least 2 samples");
    path::RawTrajectory t;
    auto& pts = t.samples;
    const int n = spec.samples;
    const double a0 = spec.start_deg * kDeg;
    switch (spec.kind) {
    case ShapeKind::line:
        pts = {spec.start, spec.end};
        break;
    case ShapeKind::circle_arc:
    case ShapeKind::circle: {
        if (!(spec.radius > 0.0))
            throw Error(ErrorCode::invalid_parameter, "radius must be positive");
        const double sweep = spec.kind == ShapeKind::circle ? 2.0 * std::numbers::pi : spec.sweep_deg * kDeg;
        for (int i = 0; i <= n; ++i) {
            const double a = a0 + sweep * i / n;
            pts.push_back(spec.center + spec.radius * Vec3(std::cos(a), std::sin(a), 0.0));
        }
        break;
    }
    case ShapeKind::ellipse: {
        if (!(spec.semi_a > 0.0 && spec.semi_b > 0.0))
            throw Error(ErrorCode::invalid_parameter, "ellipse semi-axes must be positive");
        const double sweep = spec.sweep_deg * kDeg;
        for (int i = 0; i <= n; ++i) {
            const double a = a0 + sweep * i / n;
            pts.push_back(spec.center + Vec3(spec.semi_a * std::cos(a), spec.semi_b * std::sin(a), 0.0));
        }
        break;
    }
    case ShapeKind::parabola: {
        // y = x^2 / (2 r): osculating radius r at the vertex (= center)
        if (!(spec.radius > 0.0) || !(spec.half_width > 0.0))
            throw Error(ErrorCode::invalid_parameter, "parabola needs radius > 0 and half_width > 0");
        for (int i = 0; i <= n; ++i) {
            const double x = -spec.half_width + 2.0 * spec.half_width * i / n;
            pts.push_back(spec.center + Vec3(x, x * x / (2.0 * spec.radius), 0.0));
        }
        break;
    }
    }
    return t;
}

path::FitResult make_path(const ShapeSpec& spec)
{
    return path::fit_path(path::resample_spatial(shape_samples(spec), spec.delta), spec.num_basis, spec.ridge);
}

}  // namespace vfphase::shapes
