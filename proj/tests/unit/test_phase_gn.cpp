#include "helpers.hpp"

#include "vfphase/phase_gn.hpp"

#include <random>

using namespace testutil;
using vfphase::ErrorCode;
namespace gn = vfphase::gn;

TEST_CASE("gn: line path converges in one inner step")
{
    const auto path = fit_line(Vec3(0, 0, 0), Vec3(1, 0, 0));
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.1, 0.9), off(-0.2, 0.2);
    for (int i = 0; i < 20; ++i) {
        const Vec3 x(u(rng), off(rng), off(rng));
        gn::GnState st;
        st.s = u(rng);
        const auto out = gn::gn_step(path, x, st, 10);
        CHECK(out.s == doctest::Approx(x.x()).epsilon(1e-12));
        // the second iteration only confirms a zero step
        CHECK(out.iterations <= 2);
        const auto one = gn::gn_step(path, x, st, 1);
        CHECK(one.s == doctest::Approx(x.x()).epsilon(1e-12));
    }
}

TEST_CASE("gn: circle centre gives a zero update everywhere")
{
    const double r = 0.5;
    const auto path = fit_circle(r, 1.5 * std::numbers::pi);
    for (double s0 : {0.2, 0.7, 1.3, 2.0}) {
        gn::GnState st;
        st.s = s0;
        const auto out = gn::gn_step(path, Vec3::Zero(), st, 10);
        // the fitted circle is not exactly a circle, so the gradient is tiny rather than zero
        CHECK(std::abs(out.s - s0) < 2e-3);
    }
}

TEST_CASE("gn: centre perturbation jumps a quarter turn")
{
    const double r = 0.5;
    const auto path = fit_circle(r, 1.9 * std::numbers::pi);
    const double s0 = 1.0;
    const Vec3 dir = path.position(s0 + std::numbers::pi * r / 2.0).normalized();
    const Vec3 x = 1e-2 * dir;
    gn::GnState st;
    st.s = s0;
    double s = s0;
    for (int k = 0; k < 200; ++k) {
        st = gn::gn_step(path, x, st, 10);
        s = st.s;
    }
    const auto oracle = vp::nearest_point_bruteforce(path, x, 1e-3);
    CHECK(std::abs(s - oracle.s) < 0.02);
    CHECK(std::abs(s - s0) > 0.4 * std::numbers::pi * r);
}

TEST_CASE("gn: boundary clamp stops the iteration")
{
    const auto path = fit_line(Vec3(0, 0, 0), Vec3(1, 0, 0));
    gn::GnState st;
    st.s = 0.5;
    const auto out = gn::gn_step(path, Vec3(2.0, 0.1, 0.0), st, 10);
    CHECK(out.s == doctest::Approx(path.length()));
    CHECK(out.iterations == 1);
    CHECK_FALSE(out.stalled);
}

TEST_CASE("gn: invalid arguments")
{
    const auto path = fit_line(Vec3(0, 0, 0), Vec3(1, 0, 0));
    CHECK(code_of([&] { (void)gn::gn_step(path, Vec3::Zero(), {}, 0); }) == ErrorCode::invalid_parameter);
    CHECK(code_of([&] { (void)gn::gn_step(path, Vec3(NAN, 0, 0), {}, 1); }) == ErrorCode::invalid_input);
}

TEST_CASE("optimal phase velocity")
{
    const double r = 0.5;
    const auto path = fit_circle(r, 1.5 * std::numbers::pi);
    const double s = 1.2;
    const auto cp = path.eval(s);
    const double v = 0.3;

    SUBCASE("on the curve")
    {
        CHECK(gn::optimal_phase_velocity(path, s, cp.m, v * cp.m_prime) ==
              doctest::Approx(v * cp.m_prime.squaredNorm()).epsilon(1e-12));
        CHECK(gn::optimal_phase_velocity(path, s, cp.m, v * cp.m_prime) == doctest::Approx(v).epsilon(1e-3));
    }
    SUBCASE("inward offset")
    {
        for (double d : {0.1 * r, 0.5 * r, 0.8 * r}) {
            const Vec3 x = cp.m + d * cp.normal;
            // closed form uses the fitted curvature at s
            const double expected = v * cp.m_prime.squaredNorm() / (1.0 - d * cp.kappa);
            CHECK(gn::optimal_phase_velocity(path, s, x, v * cp.m_prime) == doctest::Approx(expected).epsilon(1e-9));
            CHECK(gn::optimal_phase_velocity(path, s, x, v * cp.m_prime) ==
                  doctest::Approx(v / (1.0 - d / r)).epsilon(0.02));
        }
    }
    SUBCASE("osculating centre is singular")
    {
        const Vec3 x = cp.m + cp.osc_radius * cp.normal;
        CHECK(code_of([&] { (void)gn::optimal_phase_velocity(path, s, x, cp.m_prime); }) ==
              ErrorCode::singular_phase_velocity);
    }
}
