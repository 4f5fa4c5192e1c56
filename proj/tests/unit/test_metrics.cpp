#include "helpers.hpp"

#include "vfphase/metrics.hpp"

#include <random>

using namespace testutil;
using vfphase::ErrorCode;
namespace mt = vfphase::metrics;

TEST_CASE("dsj scalar")
{
    mt::MetricsConfig cfg;
    cfg.T = 2.0;
    cfg.L = 0.5;
    CHECK(cfg.tau() == doctest::Approx(32.0 / 0.25));
    CHECK(mt::dsj_scalar(std::vector<double>(10, 0.0), cfg) == 0.0);
    CHECK(mt::dsj_scalar(std::vector<double>(10, 3.0), cfg) == doctest::Approx(cfg.tau() * 10 * 9.0));
    auto cfg2 = cfg;
    cfg2.L = 1.0;
    CHECK(mt::dsj_scalar(std::vector<double>(10, 3.0), cfg2) ==
          doctest::Approx(mt::dsj_scalar(std::vector<double>(10, 3.0), cfg) / 4.0));
    CHECK(code_of([&] { (void)mt::dsj_scalar({}, cfg); }) == ErrorCode::invalid_input);
    cfg.T = 0.0;
    CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::invalid_parameter);
}

TEST_CASE("third difference recovers a cubic exactly")
{
    const double dt = 1e-2;
    std::vector<double> y;
    for (int i = 0; i < 50; ++i) {
        const double t = i * dt;
        y.push_back(2.0 * t * t * t - t * t + 0.3);
    }
    for (double j : mt::third_difference(y, dt))
        CHECK(j == doctest::Approx(12.0).epsilon(1e-6));
}

TEST_CASE("dsj position")
{
    mt::MetricsConfig cfg;
    cfg.T = 1.0;
    cfg.L = 1.0;
    cfg.dt = 1e-3;
    SUBCASE("constant position")
    {
        CHECK(mt::dsj_position(std::vector<Vec3>(100, Vec3(1, 2, 3)), cfg) == 0.0);
    }
    SUBCASE("cubic position keeps its jerk after smoothing")
    {
        std::vector<Vec3> x;
        for (int i = 0; i < 1000; ++i) {
            const double t = i * cfg.dt;
            x.push_back(Vec3(t * t * t, 0.0, 0.0));
        }
        const auto j = mt::third_difference(mt::moving_average(x, cfg.w), cfg.dt);
        for (std::size_t i = 10; i + 10 < j.size(); ++i)
            CHECK(j[i].x() == doctest::Approx(6.0).epsilon(0.01));
    }
    SUBCASE("offset invariance")
    {
        std::vector<Vec3> a, b;
        for (int i = 0; i < 200; ++i) {
            const double t = i * cfg.dt;
            a.push_back(Vec3(std::sin(5 * t), t * t, 0));
            b.push_back(a.back() + Vec3(3, -2, 1));
        }
        CHECK(mt::dsj_position(a, cfg) == doctest::Approx(mt::dsj_position(b, cfg)).epsilon(1e-6));
    }
    SUBCASE("smoothing reduces noise jerk monotonically")
    {
        std::mt19937 rng(4);
        std::normal_distribution<double> n(0.0, 1e-4);
        std::vector<Vec3> x;
        for (int i = 0; i < 2000; ++i)
            x.push_back(Vec3(i * 1e-4 + n(rng), n(rng), n(rng)));
        double prev = 1e300;
        for (int w : {1, 5, 20}) {
            cfg.w = w;
            const double d = mt::dsj_position(x, cfg);
            CHECK(d < prev);
            prev = d;
        }
    }
    SUBCASE("too short")
    {
        CHECK(code_of([&] { (void)mt::dsj_position(std::vector<Vec3>(22, Vec3::Zero()), cfg); }) ==
              ErrorCode::invalid_input);
    }
}

TEST_CASE("tracking error statistics")
{
    std::vector<Vec3> x(10, Vec3::Zero()), r(10, Vec3::Zero());
    auto st = mt::tracking_error_stats(x, r);
    CHECK(st.mean == 0.0);
    CHECK(st.std == 0.0);
    for (auto& p : r)
        p = Vec3(0.02, 0, 0);
    st = mt::tracking_error_stats(x, r);
    CHECK(st.mean == doctest::Approx(2.0));
    CHECK(st.std == doctest::Approx(0.0));

    std::mt19937 rng(1);
    std::normal_distribution<double> n(0.0, 0.01);
    for (auto& p : x)
        p = Vec3(n(rng), n(rng), n(rng));
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        sum += 100.0 * (x[i] - r[i]).norm();
    CHECK(mt::tracking_error_stats(x, r).mean == doctest::Approx(sum / 10.0));
    CHECK(code_of([&] { (void)mt::tracking_error_stats(x, {}); }) == ErrorCode::invalid_input);
}

TEST_CASE("force decomposition")
{
    const Vec3 t(0.6, 0.8, 0.0);
    auto d = mt::force_decomposition({2.0 * t, Vec3(0.8, -0.6, 0) * 3.0}, {t, t});
    CHECK(d[0].residual == doctest::Approx(0.0));
    CHECK(d[1].residual == doctest::Approx(3.0));
    std::mt19937 rng(2);
    std::normal_distribution<double> n;
    for (int i = 0; i < 50; ++i) {
        const Vec3 F(n(rng), n(rng), n(rng)), m(n(rng), n(rng), n(rng));
        const auto s = mt::force_decomposition({F}, {m})[0];
        CHECK(s.residual >= 0.0);
        CHECK(s.norm * s.norm >= s.tangent * s.tangent);
    }
}

TEST_CASE("rate of change and force argument")
{
    CHECK(mt::rate_of_change(std::vector<double>(5, 2.0), 0.1) == std::vector<double>(5, 0.0));
    std::vector<double> ramp;
    for (int i = 0; i < 5; ++i)
        ramp.push_back(3.0 * i * 0.1);
    for (double r : mt::rate_of_change(ramp, 0.1))
        CHECK(r == doctest::Approx(3.0));

    const double w = 7.0, dt = 1e-3;
    std::vector<Vec3> F;
    for (int i = 0; i < 3000; ++i)
        F.push_back(2.0 * Vec3(std::cos(w * i * dt), std::sin(w * i * dt), 0));
    const auto plane = std::make_pair(Vec3::UnitX().eval(), Vec3::UnitY().eval());
    for (double r : mt::rate_of_change(mt::force_argument(F, plane), dt))
        CHECK(r == doctest::Approx(w).epsilon(1e-6));
}

TEST_CASE("task plane of a planar path")
{
    const auto path = fit_circle(0.5, 1.5 * std::numbers::pi, 0.01, 30, Vec3(0, 0, 0.3));
    const auto [e1, e2] = mt::task_plane(path);
    CHECK(std::abs(e1.z()) < 1e-9);
    CHECK(std::abs(e2.z()) < 1e-9);
    CHECK(e1.cross(e2).z() == doctest::Approx(1.0));
}

TEST_CASE("quantile")
{
    CHECK(mt::quantile({1, 2, 3, 4, 5}, 0.5) == 3.0);
    CHECK(mt::quantile({1, 2, 3, 4, 5}, 1.0) == 5.0);
    CHECK(mt::quantile({0, 10}, 0.25) == doctest::Approx(2.5));
}
