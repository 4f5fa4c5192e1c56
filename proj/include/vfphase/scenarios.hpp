#pragma once
/**
 * @file  scenarios.hpp
 * @brief Desk-scale closed-loop experiments: center reaching, target
 *        following and the fixed-goal reaching demo.
 */

#include "vfphase/builtin_paths.hpp"
#include "vfphase/closed_loop.hpp"
#include "vfphase/json_fwd.hpp"
#include "vfphase/metrics.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace vfphase::scenario {

enum class Kind { center_reaching, target_following, reaching_demo };

Kind parse_kind(const std::string& name);
std::string kind_name(Kind k);

/// Either a built-in analytic shape, a stored ConstraintPath, or a demonstration CSV to fit.
struct PathSource {
    enum class Type { shape, path_file, csv_file } type = Type::shape;
    shapes::ShapeSpec shape;
    std::string file;
};

std::shared_ptr<const path::ConstraintPath> load_path_source(const PathSource& src);

struct TargetFollowingParams {
    double speed = 0.07;   ///< target speed along the curve [m/s]
    double s_start = 0.0;  ///< [m]
};

struct CenterReachingParams {
    double s_hat = -1.0;          ///< phase of the osculating circle; < 0 selects L/2
    double hold = 0.5;            ///< initial hold on the curve [s]
    double approach = 1.5;        ///< minimum-jerk approach duration [s]
    double dwell = 1.5;           ///< time spent around the centre [s]
    double reach = 0.0;           ///< target offset in osculating radii; 0 selects (k_h + k) / k_h
    double wobble_radius = 0.0;   ///< circular hand tremor around the dwell point [m]
    double wobble_hz = 0.5;
    double line_offset = 0.05;    ///< normal excursion used when the curve is straight at s_hat [m]
};

struct ReachingDemoParams {
    double goal_distance = 0.3;                    ///< goal ahead of the start, along the curve [m]
    double s_start = 0.0;
    std::vector<double> c2_values{2.0, 0.2, 0.02};
};

struct MetricsParams {
    std::optional<double> length;  ///< L in the DSJ normalisation; default path length
    double t0 = 0.0;
    int window = 20;
    double force_floor = 0.5;      ///< force direction statistics skip samples with |F| below this [N]
};

struct ScenarioConfig {
    std::string name = "scenario";
    Kind kind = Kind::target_following;
    std::vector<loop::Algorithm> algorithms{loop::Algorithm::lqt};
    PathSource path;
    loop::TrackerParams tracker;   ///< algorithm field is overridden per run
    bool vm_from_admittance = true;
    plant::AdmittanceParams admittance;
    plant::HumanParams human;
    std::string force_csv;         ///< scripted-force human when non-empty
    plant::NoiseParams noise;
    TargetFollowingParams target_following;
    CenterReachingParams center_reaching;
    ReachingDemoParams reaching_demo;
    MetricsParams metrics;
    double duration = 50.0;
    double dt = 1e-3;
    std::uint64_t seed = 1;

    void validate() const;
    /// Tracker parameters actually used for `algo` (VM gains copied from the admittance if requested).
    [[nodiscard]] loop::TrackerParams tracker_for(loop::Algorithm algo) const;
};

/// Per-sample record of one run.
struct SimTrace {
    std::string algorithm;
    std::string label;             ///< e.g. "c2=0.2" in the reaching demo
    double dt = 1e-3;
    std::vector<loop::LoopSample> samples;
    std::vector<Vec3> target;      ///< operator target per sample (NaN when none)
};

/// Summary statistics of one run.
struct RunMetrics {
    std::string algorithm;
    std::string label;
    metrics::MeanStd error_target_cm;  ///< |x - target|
    metrics::MeanStd error_path_cm;    ///< |x - m(s)|
    std::optional<double> dsj_s;       ///< absent in gc mode
    double dsj_x = 0.0;
    metrics::MeanStd force_norm;
    metrics::MeanStd force_normal;     ///< |F| - |F_tau|
    double dforce_norm_p95 = 0.0;      ///< |d|F|/dt|, 95th percentile
    double dforce_arg_p95 = 0.0;       ///< |d angle(F)/dt|, 95th percentile
    double dforce_arg_max = 0.0;
    double max_abs_s_dot = 0.0;
    double max_abs_ds_rate = 0.0;      ///< max |s_t - s_t-1| / dt
    double max_error_m = 0.0;          ///< max |x - m(s)|
    double final_s = 0.0;
};

RunMetrics evaluate(const SimTrace& trace, const ScenarioConfig& cfg, const path::ConstraintPath& path);
Json metrics_to_json(const RunMetrics& m);

SimTrace run_center_reaching(const ScenarioConfig& cfg, std::shared_ptr<const path::ConstraintPath> path,
                             loop::Algorithm algo);
SimTrace run_target_following(const ScenarioConfig& cfg, std::shared_ptr<const path::ConstraintPath> path,
                              loop::Algorithm algo);
/// One LQT trace per c2 value; the end effector is held at the goal.
std::vector<SimTrace> run_reaching_demo(const ScenarioConfig& cfg, std::shared_ptr<const path::ConstraintPath> path);

/// Dispatch on cfg.kind; one trace per algorithm (or per c2 value for the demo).
std::vector<SimTrace> run_all(const ScenarioConfig& cfg, std::shared_ptr<const path::ConstraintPath> path);

/// One row per sample.
std::string trace_to_csv(const SimTrace& trace);
/// Long format (run, t, quantity, value), decimated by `every` samples.
std::string traces_to_long_csv(const std::vector<SimTrace>& traces, int every = 10);

/// Table of error / DSJ columns, human readable and CSV.
std::string metrics_table_text(const std::vector<RunMetrics>& rows);
std::string metrics_table_csv(const std::vector<RunMetrics>& rows);

}  // namespace vfphase::scenario
