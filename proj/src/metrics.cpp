#include "vfphase/metrics.hpp"

#include "vfphase/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace vfphase::metrics {

void MetricsConfig::validate() const
{
    if (!(T > t0) || !(t0 >= 0.0))
        throw Error(ErrorCode::invalid_parameter, "metrics: need T > t0 >= 0");
    if (!(L > 0.0))
        throw Error(ErrorCode::invalid_parameter, "metrics: path length must be positive");
    if (w < 1)
        throw Error(ErrorCode::invalid_parameter, "metrics: window must be >= 1");
    if (!(dt > 0.0))
        throw Error(ErrorCode::invalid_parameter, "metrics: dt must be positive");
}

double MetricsConfig::tau() const
{
    return std::pow(T - t0, 5) / (L * L);
}

double dsj_scalar(const std::vector<double>& jerk, const MetricsConfig& cfg)
{
    cfg.validate();
    if (jerk.empty())
        throw Error(ErrorCode::invalid_input, "dsj: empty jerk series");
    double sum = 0.0;
    for (double j : jerk)
        sum += j * j;
    return cfg.tau() * sum;
}

double dsj_vector(const std::vector<Vec3>& jerk, const MetricsConfig& cfg)
{
    cfg.validate();
    if (jerk.empty())
        throw Error(ErrorCode::invalid_input, "dsj: empty jerk series");
    double sum = 0.0;
    for (const auto& j : jerk)
        sum += j.squaredNorm();
    return cfg.tau() * sum;
}

template <typename T>
static std::vector<T> third_difference_impl(const std::vector<T>& y, double dt)
{
    std::vector<T> out;
    if (y.size() < 4)
        return out;
    const double inv = 1.0 / (dt * dt * dt);
    out.reserve(y.size() - 3);
    for (std::size_t i = 0; i + 3 < y.size(); ++i)
        out.push_back(T((y[i + 3] - 3.0 * y[i + 2] + 3.0 * y[i + 1] - y[i]) * inv));
    return out;
}

std::vector<double> third_difference(const std::vector<double>& y, double dt)
{
    return third_difference_impl(y, dt);
}

std::vector<Vec3> third_difference(const std::vector<Vec3>& y, double dt)
{
    return third_difference_impl(y, dt);
}

std::vector<Vec3> moving_average(const std::vector<Vec3>& y, int w)
{
    if (w < 1)
        throw Error(ErrorCode::invalid_parameter, "moving_average: window must be >= 1");
    const auto n = y.size();
    const auto W = static_cast<std::size_t>(w);
    std::vector<Vec3> out;
    if (n < W)
        return out;
    out.reserve(n - W + 1);
    // direct sums keep the result independent of accumulated round-off
    for (std::size_t i = 0; i + W <= n; ++i) {
        Vec3 acc = Vec3::Zero();
        for (std::size_t k = 0; k < W; ++k)
            acc += y[i + k];
        out.push_back(acc / static_cast<double>(W));
    }
    return out;
}

double dsj_phase(const std::vector<double>& s, const MetricsConfig& cfg)
{
    if (s.size() < 4)
        throw Error(ErrorCode::invalid_input, "dsj_phase: need at least 4 samples");
    return dsj_scalar(third_difference(s, cfg.dt), cfg);
}

double dsj_position(const std::vector<Vec3>& x, const MetricsConfig& cfg)
{
    cfg.validate();
    if (x.size() < static_cast<std::size_t>(cfg.w) + 3)
        throw Error(ErrorCode::invalid_input, "dsj_position: need at least w + 3 samples");
    return dsj_vector(third_difference(moving_average(x, cfg.w), cfg.dt), cfg);
}

MeanStd mean_std(const std::vector<double>& v)
{
    MeanStd r;
    if (v.empty())
        return r;
    double sum = 0.0;
    for (double x : v)
        sum += x;
    r.mean = sum / static_cast<double>(v.size());
    double sq = 0.0;
    for (double x : v)
        sq += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(sq / static_cast<double>(v.size()));
    return r;
}

MeanStd tracking_error_stats(const std::vector<Vec3>& x, const std::vector<Vec3>& ref)
{
    if (x.size() != ref.size())
        throw Error(ErrorCode::invalid_input, "tracking_error_stats: series differ in length");
    std::vector<double> e(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        e[i] = 100.0 * (x[i] - ref[i]).norm();
    return mean_std(e);
}

std::vector<ForceSplit> force_decomposition(const std::vector<Vec3>& F, const std::vector<Vec3>& m_prime)
{
    if (F.size() != m_prime.size())
        throw Error(ErrorCode::invalid_input, "force_decomposition: series differ in length");
    std::vector<ForceSplit> out(F.size());
    for (std::size_t i = 0; i < F.size(); ++i) {
        const double tn = m_prime[i].norm();
        out[i].norm = F[i].norm();
        out[i].tangent = tn > 0.0 ? std::abs(F[i].dot(m_prime[i])) / tn : 0.0;
        out[i].tangent = std::min(out[i].tangent, out[i].norm);
        out[i].residual = out[i].norm - out[i].tangent;
    }
    return out;
}

std::vector<double> rate_of_change(const std::vector<double>& y, double dt)
{
    const auto n = y.size();
    std::vector<double> d(n, 0.0);
    if (n < 2)
        return d;
    d.front() = (y[1] - y[0]) / dt;
    d.back() = (y[n - 1] - y[n - 2]) / dt;
    for (std::size_t i = 1; i + 1 < n; ++i)
        d[i] = (y[i + 1] - y[i - 1]) / (2.0 * dt);
    return d;
}

std::pair<Vec3, Vec3> task_plane(const path::ConstraintPath& path, int samples)
{
    samples = std::max(samples, 3);
    Vec3 mean = Vec3::Zero();
    std::vector<Vec3> pts(static_cast<std::size_t>(samples));
    for (int i = 0; i < samples; ++i) {
        pts[static_cast<std::size_t>(i)] = path.position(path.length() * i / (samples - 1));
        mean += pts[static_cast<std::size_t>(i)];
    }
    mean /= samples;
    Eigen::Matrix3d C = Eigen::Matrix3d::Zero();
    for (const auto& p : pts)
        C += (p - mean) * (p - mean).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(C);
    // eigenvalues ascending: columns 2 and 1 span the dominant plane
    Vec3 e1 = es.eigenvectors().col(2);
    Vec3 e2 = es.eigenvectors().col(1);
    if (es.eigenvalues()[1] <= 1e-12 * std::max(1.0, es.eigenvalues()[2])) {
        // straight path: any plane containing it
        Vec3 helper = std::abs(e1.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
        e2 = helper.cross(e1).cross(e1).normalized();
    }
    // fix the sign so the basis does not depend on the eigen solver's choice
    const Vec3 normal = e1.cross(e2);
    if (normal.z() < 0.0 || (normal.z() == 0.0 && normal.y() < 0.0))
        e2 = -e2;
    return {e1.normalized(), e2.normalized()};
}

std::vector<double> force_argument(const std::vector<Vec3>& F, const std::pair<Vec3, Vec3>& plane)
{
    std::vector<double> a(F.size());
    double offset = 0.0;
    double prev = 0.0;
    for (std::size_t i = 0; i < F.size(); ++i) {
        const double raw = std::atan2(F[i].dot(plane.second), F[i].dot(plane.first));
        if (i > 0) {
            double d = raw - prev;
            if (d > std::numbers::pi)
                offset -= 2.0 * std::numbers::pi;
            else if (d < -std::numbers::pi)
                offset += 2.0 * std::numbers::pi;
        }
        prev = raw;
        a[i] = raw + offset;
    }
    return a;
}

double quantile(std::vector<double> v, double q)
{
    if (v.empty())
        return 0.0;
    std::sort(v.begin(), v.end());
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return (1.0 - w) * v[lo] + w * v[hi];
}

}  // namespace vfphase::metrics
