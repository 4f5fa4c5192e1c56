#pragma once
/**
 * @file  path_model.hpp
 * @brief Arc-length parametrized constraint curve: resampling, Bernstein fit,
 *        differential geometry and nearest-point / singularity analysis.
 */

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace vfphase {

using Vec3 = Eigen::Vector3d;

namespace path {

/// Curvature below which the normal is undefined and the osculating radius infinite [1/m].
inline constexpr double kCurvatureFloor = 1e-9;
/// Allowed deviation of |m'(s_k)| from one at the knots.
inline constexpr double kUnitSpeedTolerance = 0.02;

/// Demonstrated positions [m], optionally time stamped [s].
struct RawTrajectory {
    std::vector<Vec3> samples;
    std::vector<double> timestamps;  ///< empty, or one per sample
};

/// Output of spatial sampling: points spaced exactly `delta` apart (chord length).
struct SpatialPath {
    double delta = 0.0;
    std::vector<Vec3> points;
    std::vector<double> knots;  ///< s_k = k * delta

    [[nodiscard]] double length() const noexcept { return knots.empty() ? 0.0 : knots.back(); }
};

/// Local differential geometry of the curve at one phase value.
struct CurvePoint {
    double s = 0.0;
    Vec3 m = Vec3::Zero();
    Vec3 m_prime = Vec3::Zero();
    Vec3 m_second = Vec3::Zero();
    Vec3 normal = Vec3::Zero();  ///< zero when !normal_defined
    double kappa = 0.0;
    double osc_radius = std::numeric_limits<double>::infinity();
    bool normal_defined = false;
    bool clamped = false;  ///< requested s was outside [0, L]

    [[nodiscard]] Vec3 osc_center() const { return m + osc_radius * normal; }
};

/**
 * @brief Curve m(s) = sum_i w_i B_{i,N-1}(s / L), s in [0, L].
 *
 * Immutable after construction; every query is const and thread safe.
 */
class ConstraintPath {
public:
    ConstraintPath(Eigen::MatrixX3d weights, double length, double delta);

    [[nodiscard]] double length() const noexcept { return length_; }
    [[nodiscard]] double delta() const noexcept { return delta_; }
    [[nodiscard]] int degree() const noexcept { return static_cast<int>(weights_.rows()) - 1; }
    [[nodiscard]] int num_basis() const noexcept { return static_cast<int>(weights_.rows()); }
    [[nodiscard]] const Eigen::MatrixX3d& weights() const noexcept { return weights_; }

    [[nodiscard]] double clamp(double s) const noexcept;

    /// Position only (clamped).
    [[nodiscard]] Vec3 position(double s) const;
    /// Position, first and second arc-length derivatives (clamped).
    void derivatives(double s, Vec3& m, Vec3& m_prime, Vec3& m_second) const;
    /// Full local geometry at s.
    [[nodiscard]] CurvePoint eval(double s) const;

    /// g(s) = (x - m(s))^T m'(s); zero at stationary points of |x - m(s)|^2.
    [[nodiscard]] double stationarity(const Vec3& x, double s) const;
    /// |x - m(s)|^2.
    [[nodiscard]] double cost(const Vec3& x, double s) const;

private:
    Eigen::MatrixX3d weights_;
    Eigen::MatrixX3d d1_;  // control points of m' (already scaled by 1/L)
    Eigen::MatrixX3d d2_;  // control points of m'' (scaled by 1/L^2)
    double length_;
    double delta_;
};

/// Values of all Bernstein polynomials of the given degree at u in [0, 1].
Eigen::VectorXd bernstein_basis(int degree, double u);

/// Resample a polyline so consecutive points lie exactly `delta` apart.
SpatialPath resample_spatial(const RawTrajectory& traj, double delta);

struct FitReport {
    double residual_rms = 0.0;          ///< [m] over the knots
    double max_speed_deviation = 0.0;   ///< max_k | |m'(s_k)| - 1 |
    bool unit_speed_ok = true;          ///< max_speed_deviation <= kUnitSpeedTolerance
};

struct FitResult {
    ConstraintPath path;
    FitReport report;
};

/// Least-squares (optionally ridge-regularised) Bernstein fit over the knots.
FitResult fit_path(const SpatialPath& sp, int num_basis, double ridge = 0.0);

/// Unit-speed diagnostic of an existing path against its knots.
double max_speed_deviation(const ConstraintPath& path);

struct NearestPoint {
    double s = 0.0;
    double cost = 0.0;
};

/**
 * @brief Global minimiser of |x - m(s)|^2 over [0, L].
 *
 * Dense scan with spacing `grid_step`, then golden-section refinement on the
 * two cells around the best sample. Equal-cost ties (within 1e-9) go to the smallest s.
 */
NearestPoint nearest_point_bruteforce(const ConstraintPath& path, const Vec3& x, double grid_step);

struct StationaryPoint {
    double s = 0.0;
    double cost = 0.0;
    bool is_local_min = false;
};

struct EdsReport {
    Vec3 query = Vec3::Zero();
    std::vector<StationaryPoint> stationary_points;
    bool is_eds = false;
    double nearest_s = 0.0;      ///< global minimiser (stationary points and both ends)
    double nearest_cost = 0.0;
    double stationary_s = 0.0;   ///< s̄: lowest-cost stationary point, or nearest_s if none
    double normal_offset = 0.0;  ///< (x - m(s̄))^T n(s̄); zero when n is undefined
    double osc_radius_at_nearest = std::numeric_limits<double>::infinity();
    int num_global_minimizers = 1;
};

struct EdsOptions {
    std::optional<double> grid_step;       ///< default delta / 2
    std::optional<double> tie_tolerance;   ///< default 1e-6 * L^2
};

/// Enumerate stationary points of the projection cost and test the singularity condition.
EdsReport eds_analyze(const ConstraintPath& path, const Vec3& x, const EdsOptions& opts = {});

}  // namespace path
}  // namespace vfphase
