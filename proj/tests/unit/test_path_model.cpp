#include "helpers.hpp"

#include "vfphase/error.hpp"

#include <doctest.h>

#include <random>

using namespace testutil;
using vfphase::Error;
using vfphase::ErrorCode;

namespace {

// Independent arc-length walk over a polyline: point at arc length a.
Vec3 polyline_at(const std::vector<Vec3>& poly, double a)
{
    for (std::size_t i = 0; i + 1 < poly.size(); ++i) {
        const double seg = (poly[i + 1] - poly[i]).norm();
        if (a <= seg)
            return poly[i] + (poly[i + 1] - poly[i]) * (a / seg);
        a -= seg;
    }
    return poly.back();
}

}  // namespace

TEST_CASE("resample: straight segment")
{
    vp::RawTrajectory t;
    t.samples = {Vec3(0, 0, 0), Vec3(2, 0, 0)};
    auto sp = vp::resample_spatial(t, 1.0);
    REQUIRE(sp.points.size() == 3);
    CHECK((sp.points[1] - Vec3(1, 0, 0)).norm() < 1e-12);
    CHECK((sp.points[2] - Vec3(2, 0, 0)).norm() < 1e-12);
    CHECK(sp.length() == doctest::Approx(2.0));
}

TEST_CASE("resample: L-shaped polyline hits the corner")
{
    vp::RawTrajectory t;
    t.samples = {Vec3(0, 0, 0), Vec3(0, 3, 0), Vec3(4, 3, 0)};
    auto sp = vp::resample_spatial(t, 1.0);
    REQUIRE(sp.points.size() == 8);
    for (int k = 0; k < 8; ++k) {
        CHECK((sp.points[k] - polyline_at(t.samples, k)).norm() < 1e-12);
        CHECK(sp.knots[k] == doctest::Approx(k));
    }
    CHECK((sp.points[3] - Vec3(0, 3, 0)).norm() < 1e-12);
}

TEST_CASE("resample: dense unit circle keeps chord spacing")
{
    auto sp = vp::resample_spatial(circle_samples(1.0, 2 * std::numbers::pi), 0.1);
    // 2*asin(0.05) per step on the unit circle
    const double step_angle = 2 * std::asin(0.05);
    const auto expected = static_cast<std::size_t>(std::floor(2 * std::numbers::pi / step_angle)) + 1;
    CHECK(std::abs(static_cast<long>(sp.points.size()) - static_cast<long>(expected)) <= 1);
    CHECK(sp.points.size() >= 62);
    for (std::size_t k = 0; k + 1 < sp.points.size(); ++k) {
        CHECK(std::abs((sp.points[k + 1] - sp.points[k]).norm() - 0.1) < 1e-9 * 0.1);
        CHECK(std::abs(sp.points[k].norm() - 1.0) < 1e-6);
    }
    CHECK((sp.points.front() - Vec3(1, 0, 0)).norm() == 0.0);
}

TEST_CASE("resample: error cases")
{
    vp::RawTrajectory t;
    t.samples = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
    CHECK(code_of([&] { (void)vp::resample_spatial(t, 0.0); }) == ErrorCode::invalid_parameter);
    CHECK(code_of([&] { (void)vp::resample_spatial(t, -1.0); }) == ErrorCode::invalid_parameter);
    CHECK(code_of([&] { (void)vp::resample_spatial(t, 2.0); }) == ErrorCode::invalid_parameter);
    vp::RawTrajectory same;
    same.samples = {Vec3(1, 1, 1), Vec3(1, 1, 1), Vec3(1, 1, 1)};
    CHECK(code_of([&] { (void)vp::resample_spatial(same, 0.1); }) == ErrorCode::degenerate_input);
}

TEST_CASE("bernstein basis: partition of unity and non-negativity")
{
    for (int deg : {0, 1, 5, 29, 60}) {
        for (int i = 0; i <= 50; ++i) {
            const auto b = vp::bernstein_basis(deg, i / 50.0);
            CHECK(std::abs(b.sum() - 1.0) < 1e-12);
            CHECK(b.minCoeff() >= 0.0);
        }
    }
}

TEST_CASE("fit: straight segment with two basis functions is exact")
{
    vp::RawTrajectory t;
    t.samples = {Vec3(0.1, -0.2, 0.3), Vec3(0.9, 0.4, 0.3)};
    auto fr = vp::fit_path(vp::resample_spatial(t, 0.01), 2);
    CHECK(fr.report.residual_rms < 1e-12);
    const auto& p = fr.path;
    for (int i = 0; i <= 20; ++i) {
        const double s = p.length() * i / 20.0;
        auto cp = p.eval(s);
        CHECK(std::abs(cp.m_prime.norm() - 1.0) < 1e-12);
        CHECK(cp.kappa == 0.0);
        CHECK(std::isinf(cp.osc_radius));
        CHECK_FALSE(cp.normal_defined);
        const Vec3 expect = Vec3(0.1, -0.2, 0.3) + s * Vec3(0.8, 0.6, 0.0);
        CHECK((cp.m - expect).norm() < 1e-12);
    }
}

TEST_CASE("fit: circle radius 0.5")
{
    auto fr = vp::fit_path(vp::resample_spatial(circle_samples(0.5, 2 * std::numbers::pi), 0.01), 20);
    CHECK(fr.report.residual_rms < 1e-4);
    CHECK(fr.report.max_speed_deviation <= 0.02);
    CHECK(fr.report.unit_speed_ok);
    CHECK(vp::max_speed_deviation(fr.path) <= 0.02);

    auto p = vp::fit_path(vp::resample_spatial(circle_samples(0.5, 1.5 * std::numbers::pi), 0.01), 30).path;
    for (int i = 1; i < 20; ++i) {
        auto cp = p.eval(p.length() * i / 20.0);
        CHECK(cp.kappa == doctest::Approx(2.0).epsilon(0.02));
        REQUIRE(cp.normal_defined);
        // n points at the centre (origin)
        CHECK(cp.normal.dot(-cp.m.normalized()) > 0.999);
        CHECK(cp.osc_radius * cp.kappa == doctest::Approx(1.0));
    }
}

TEST_CASE("fit: underdetermined and invalid configurations")
{
    vp::RawTrajectory t;
    t.samples = {Vec3(0, 0, 0), Vec3(0.05, 0, 0)};
    auto sp = vp::resample_spatial(t, 0.01);  // 6 points
    CHECK(code_of([&] { (void)vp::fit_path(sp, 10); }) == ErrorCode::ill_conditioned_fit);
    CHECK(code_of([&] { (void)vp::fit_path(sp, 1); }) == ErrorCode::invalid_parameter);
    CHECK(code_of([&] { (void)vp::fit_path(sp, 3, -1.0); }) == ErrorCode::invalid_parameter);
    // ridge makes the underdetermined problem solvable
    auto fr = vp::fit_path(sp, 10, 1e-6);
    CHECK(fr.report.residual_rms < 1e-3);
}

TEST_CASE("eval: clamping outside the domain")
{
    auto p = fit_line(Vec3(0, 0, 0), Vec3(1, 0, 0));
    auto lo = p.eval(-0.5);
    CHECK(lo.clamped);
    CHECK(lo.s == 0.0);
    auto hi = p.eval(p.length() + 1.0);
    CHECK(hi.clamped);
    CHECK(hi.s == p.length());
    CHECK_FALSE(p.eval(0.5).clamped);
}

TEST_CASE("eval: derivatives match central differences")
{
    auto p = fit_circle(0.3, 1.7 * std::numbers::pi);
    std::mt19937_64 rng(7);
    const double h = 1e-5;
    std::uniform_real_distribution<double> us(h, p.length() - h);
    for (int i = 0; i < 100; ++i) {
        const double s = us(rng);
        auto cp = p.eval(s);
        Vec3 mp, mm, d1p, d1m, tmp;
        p.derivatives(s + h, mp, d1p, tmp);
        p.derivatives(s - h, mm, d1m, tmp);
        const Vec3 fd1 = (mp - mm) / (2 * h);
        const Vec3 fd2 = (d1p - d1m) / (2 * h);
        CHECK((fd1 - cp.m_prime).norm() / cp.m_prime.norm() < 1e-5);
        CHECK((fd2 - cp.m_second).norm() / cp.m_second.norm() < 1e-5);
        // Frenet consistency
        CHECK((cp.m_second - cp.kappa * cp.normal).norm() < 1e-9);
        // bounded by the fit residual, not by round-off
        CHECK(std::abs(cp.m_prime.dot(cp.normal)) < 5e-5);
    }
}

TEST_CASE("nearest point oracle")
{
    SUBCASE("point on the curve")
    {
        auto p = fit_circle(0.5, 1.5 * std::numbers::pi);
        const double step = 0.005;
        auto np = vp::nearest_point_bruteforce(p, p.position(1.0), step);
        CHECK(std::abs(np.s - 1.0) <= step / 2);
        CHECK(np.cost < 1e-12);
    }
    SUBCASE("circle centre: equal costs and smallest-s tie break")
    {
        auto p = fit_circle(0.5, 1.5 * std::numbers::pi);
        const double step = 0.01;
        double cmin = 1e9, cmax = 0;
        for (double s = 0; s <= p.length(); s += step) {
            cmin = std::min(cmin, p.cost(Vec3::Zero(), s));
            cmax = std::max(cmax, p.cost(Vec3::Zero(), s));
        }
        CHECK(cmin == doctest::Approx(0.25).epsilon(1e-4));
        // symmetric parabola, query far up its axis: both ends are global minimisers
        vp::ConstraintPath parabola(
            (Eigen::MatrixX3d(3, 3) << -1, 1, 0, 0, -1, 0, 1, 1, 0).finished(), 2.0, 0.01);
        auto tie = vp::nearest_point_bruteforce(parabola, Vec3(0.0, 10.0, 0.0), 0.01);
        CHECK(parabola.cost(Vec3(0, 10, 0), 0.0) == parabola.cost(Vec3(0, 10, 0), 2.0));
        CHECK(tie.s == 0.0);
    }
    SUBCASE("line: orthogonal projection")
    {
        auto p = fit_line(Vec3(0, 0, 0), Vec3(2, 0, 0));
        auto np = vp::nearest_point_bruteforce(p, Vec3(1.234, 0.5, -0.2), 0.01);
        CHECK(np.s == doctest::Approx(1.234).epsilon(1e-8));
        CHECK(np.cost == doctest::Approx(0.29).epsilon(1e-8));
    }
    SUBCASE("first-order optimality at interior minimisers")
    {
        auto p = fit_circle(0.4, 1.2 * std::numbers::pi, 0.01, 30, Vec3(0.1, 0.2, 0.0));
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> ux(-0.6, 0.8);
        int interior = 0;
        for (int i = 0; i < 100; ++i) {
            const Vec3 x(ux(rng), ux(rng), 0.1 * ux(rng));
            auto np = vp::nearest_point_bruteforce(p, x, 0.005);
            if (np.s > 1e-9 && np.s < p.length() - 1e-9) {
                ++interior;
                CHECK(std::abs(p.stationarity(x, np.s)) < 1e-6);
            }
        }
        CHECK(interior > 20);
    }
}

TEST_CASE("eds: circle centre is singular")
{
    const double r = 0.5;
    auto p = fit_circle(r, 1.8 * std::numbers::pi);
    auto rep = vp::eds_analyze(p, Vec3::Zero());
    CHECK(rep.is_eds);
    CHECK(rep.normal_offset == doctest::Approx(r).epsilon(1e-3));
    CHECK(rep.osc_radius_at_nearest == doctest::Approx(r).epsilon(0.02));
}

TEST_CASE("eds: half-radius offset is regular")
{
    const double r = 0.5;
    auto p = fit_circle(r, 1.8 * std::numbers::pi);
    const auto cp = p.eval(p.length() / 2);
    auto rep = vp::eds_analyze(p, cp.m + 0.5 * r * cp.normal);
    CHECK_FALSE(rep.is_eds);
    CHECK(rep.normal_offset == doctest::Approx(0.5 * r).epsilon(1e-3));
    CHECK(rep.num_global_minimizers == 1);
}

TEST_CASE("eds: line path has a single stationary point")
{
    auto p = fit_line(Vec3(0, 0, 0), Vec3(1, 1, 0));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.1, 0.6);
    for (int i = 0; i < 20; ++i) {
        auto rep = vp::eds_analyze(p, Vec3(u(rng), u(rng), u(rng) - 0.3));
        CHECK_FALSE(rep.is_eds);
        CHECK(rep.stationary_points.size() == 1);
        CHECK(rep.stationary_points[0].is_local_min);
    }
}

TEST_CASE("eds: sweep along the normal flips at the osculating radius")
{
    const double r = 0.25;
    auto p = fit_circle(r, 5.0 / 3.0 * std::numbers::pi);
    const double step = p.delta() / 2;
    const auto cp = p.eval(p.length() / 2);
    double first_flag = -1;
    bool monotone = true;
    for (int i = 0; i <= 150; ++i) {
        const double d = i * step * 0.5;
        const bool flag = vp::eds_analyze(p, cp.m + d * cp.normal).is_eds;
        if (flag && first_flag < 0)
            first_flag = d;
        if (!flag && first_flag >= 0)
            monotone = false;
    }
    CHECK(monotone);
    CHECK(std::abs(first_flag - cp.osc_radius) <= 2 * step);
}

TEST_CASE("eds: report invariant")
{
    auto p = fit_circle(0.3, 1.5 * std::numbers::pi);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int i = 0; i < 200; ++i) {
        const Vec3 x(u(rng), u(rng), 0.0);
        auto rep = vp::eds_analyze(p, x);
        if (!rep.is_eds)
            continue;
        const bool first_order = std::abs(p.stationarity(x, rep.stationary_s)) < 1e-6;
        const bool beyond = rep.normal_offset >= rep.osc_radius_at_nearest - 1e-6 * p.length();
        CHECK(((first_order && beyond) || rep.num_global_minimizers >= 2));
    }
}
