#pragma once

#include "vfphase/error.hpp"
#include "vfphase/path_model.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

namespace testutil {

using vfphase::Vec3;
namespace vp = vfphase::path;

// Code of the vfphase::Error thrown by fn; fails the test when nothing is thrown.
inline vfphase::ErrorCode code_of(auto&& fn)
{
    try {
        fn();
    } catch (const vfphase::Error& e) {
        return e.code();
    }
    FAIL("expected vfphase::Error");
    return vfphase::ErrorCode::protocol_error;
}

// Dense polyline on a circle of radius r centred at c in the xy plane.
inline vp::RawTrajectory circle_samples(double r, double sweep, Vec3 c = Vec3::Zero(),
                                        int n = 20000, double phase0 = 0.0)
{
    vp::RawTrajectory t;
    for (int i = 0; i <= n; ++i) {
        const double a = phase0 + sweep * i / n;
        t.samples.push_back(c + Vec3(r * std::cos(a), r * std::sin(a), 0.0));
    }
    return t;
}

inline vp::ConstraintPath fit_circle(double r, double sweep, double delta = 0.01, int nb = 30,
                                     Vec3 c = Vec3::Zero(), double phase0 = 0.0)
{
    auto sp = vp::resample_spatial(circle_samples(r, sweep, c, 20000, phase0), delta);
    return vp::fit_path(sp, nb).path;
}

inline vp::ConstraintPath fit_line(Vec3 a, Vec3 b, double delta = 0.01, int nb = 2)
{
    vp::RawTrajectory t;
    t.samples = {a, b};
    return vp::fit_path(vp::resample_spatial(t, delta), nb).path;
}

}  // namespace testutil
