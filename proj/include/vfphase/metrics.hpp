#pragma once
/**
 * @file  metrics.hpp
 * @brief Tracking error, force decomposition and dimensionless squared jerk.
 */

#include "vfphase/path_model.hpp"

#include <utility>
#include <vector>

namespace vfphase::metrics {

struct MetricsConfig {
    double T = 50.0;   ///< task end [s]
    double t0 = 0.0;   ///< task start [s]
    double L = 3.5;    ///< path length [m]
    int w = 20;        ///< moving-average window [samples]
    double dt = 1e-3;  ///< sample period [s]

    void validate() const;
    /// (T - t0)^5 / L^2
    [[nodiscard]] double tau() const;
};

/// tau * sum j_t^2. The sum carries no dt factor.
double dsj_scalar(const std::vector<double>& jerk, const MetricsConfig& cfg);
/// tau * sum |j_t|^2.
double dsj_vector(const std::vector<Vec3>& jerk, const MetricsConfig& cfg);

/// Third difference (y[i+3] - 3 y[i+2] + 3 y[i+1] - y[i]) / dt^3, centred between samples.
std::vector<double> third_difference(const std::vector<double>& y, double dt);
std::vector<Vec3> third_difference(const std::vector<Vec3>& y, double dt);

/// Centred moving average; only full windows are kept (n - w + 1 outputs).
std::vector<Vec3> moving_average(const std::vector<Vec3>& y, int w);

/// DSJ of a sampled phase trace (no smoothing).
double dsj_phase(const std::vector<double>& s, const MetricsConfig& cfg);
/// DSJ of a sampled position trace: moving average (cfg.w), third difference, weighted sum.
double dsj_position(const std::vector<Vec3>& x, const MetricsConfig& cfg);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

/// Mean and population standard deviation.
MeanStd mean_std(const std::vector<double>& v);

/// Statistics of |x_t - r_t| in centimetres.
MeanStd tracking_error_stats(const std::vector<Vec3>& x, const std::vector<Vec3>& ref);

struct ForceSplit {
    double norm = 0.0;      ///< |F|
    double tangent = 0.0;   ///< |F_tau|, tangent normalised to unit length
    double residual = 0.0;  ///< |F| - |F_tau| >= 0
};
std::vector<ForceSplit> force_decomposition(const std::vector<Vec3>& F, const std::vector<Vec3>& m_prime);

/// Central differences inside, one-sided at the ends.
std::vector<double> rate_of_change(const std::vector<double>& y, double dt);

/// Orthonormal basis (e1, e2) of the plane of maximal variance of the path.
std::pair<Vec3, Vec3> task_plane(const path::ConstraintPath& path, int samples = 400);
/// Unwrapped atan2 angle of each force projected on the plane (e1, e2).
std::vector<double> force_argument(const std::vector<Vec3>& F, const std::pair<Vec3, Vec3>& plane);

/// Empirical quantile with linear interpolation, q in [0, 1].
double quantile(std::vector<double> v, double q);

}  // namespace vfphase::metrics
