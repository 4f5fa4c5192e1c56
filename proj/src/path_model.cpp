#include "vfphase/path_model.hpp"

#include "vfphase/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vfphase::path {
namespace {

// Bernstein form evaluated with a Horner-like scheme in t = u / (1 - u)
// (or its mirror for u >= 0.5). O(n) and free of cancellation for u in [0, 1].
Vec3 eval_bernstein(const Eigen::MatrixX3d& ctrl, double u)
{
    const Eigen::Index rows = ctrl.rows();
    if (rows == 0)
        return Vec3::Zero();
    const int n = static_cast<int>(rows) - 1;
    if (n == 0)
        return ctrl.row(0).transpose();

    if (u < 0.5) {
        const double t = u / (1.0 - u);
        Vec3 p = ctrl.row(n).transpose();
        double binom = 1.0;  // C(n, i), walking i downward from n
        for (int i = n - 1; i >= 0; --i) {
            binom = binom * (i + 1) / (n - i);
            p = p * t + binom * ctrl.row(i).transpose();
        }
        return p * std::pow(1.0 - u, n);
    }
    const double t = (1.0 - u) / u;
    Vec3 p = ctrl.row(0).transpose();
    double binom = 1.0;  // C(n, i), walking i upward from 0
    for (int i = 1; i <= n; ++i) {
        binom = binom * (n - i + 1) / i;
        p = p * t + binom * ctrl.row(i).transpose();
    }
    return p * std::pow(u, n);
}

double golden_section(const ConstraintPath& path, const Vec3& x, double lo, double hi)
{
    constexpr double inv_phi = 0.6180339887498949;
    const double tol = 1e-13 * std::max(1.0, path.length());
    double a = lo;
    double b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = path.cost(x, c);
    double fd = path.cost(x, d);
    for (int it = 0; it < 200 && (b - a) > tol; ++it) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = path.cost(x, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = path.cost(x, d);
        }
    }
    return fc <= fd ? c : d;
}

std::vector<double> uniform_grid(double length, double step)
{
    const auto cells = static_cast<std::size_t>(std::ceil(length / step - 1e-12));
    std::vector<double> grid(cells + 1);
    for (std::size_t i = 0; i <= cells; ++i)
        grid[i] = std::min(static_cast<double>(i) * step, length);
    grid.back() = length;
    return grid;
}

}  // namespace

Eigen::VectorXd bernstein_basis(int degree, double u)
{
    if (degree < 0)
        throw Error(ErrorCode::invalid_parameter, "bernstein_basis: negative degree");
    Eigen::VectorXd b = Eigen::VectorXd::Zero(degree + 1);
    b[0] = 1.0;
    const double v = 1.0 - u;
    for (int k = 1; k <= degree; ++k) {
        for (int j = k; j >= 1; --j)
            b[j] = v * b[j] + u * b[j - 1];
        b[0] *= v;
    }
    return b;
}

// ---------------------------------------------------------------------------
// ConstraintPath

ConstraintPath::ConstraintPath(Eigen::MatrixX3d weights, double length, double delta)
    : weights_(std::move(weights)), length_(length), delta_(delta)
{
    if (weights_.rows() < 2)
        throw Error(ErrorCode::invalid_parameter, "constraint path needs at least 2 basis weights");
    if (!(length_ > 0.0) || !std::isfinite(length_))
        throw Error(ErrorCode::invalid_parameter, "constraint path length must be positive");
    if (!(delta_ > 0.0) || !std::isfinite(delta_))
        throw Error(ErrorCode::invalid_parameter, "constraint path delta must be positive");
    if (!weights_.allFinite())
        throw Error(ErrorCode::invalid_parameter, "constraint path weights must be finite");

    const Eigen::Index n = weights_.rows() - 1;
    d1_ = (weights_.bottomRows(n) - weights_.topRows(n)) * (static_cast<double>(n) / length_);
    if (n >= 2) {
        d2_ = (d1_.bottomRows(n - 1) - d1_.topRows(n - 1)) * (static_cast<double>(n - 1) / length_);
    } else {
        d2_ = Eigen::MatrixX3d::Zero(1, 3);
    }
}

double ConstraintPath::clamp(double s) const noexcept
{
    return std::clamp(s, 0.0, length_);
}

Vec3 ConstraintPath::position(double s) const
{
    return eval_bernstein(weights_, clamp(s) / length_);
}

void ConstraintPath::derivatives(double s, Vec3& m, Vec3& m_prime, Vec3& m_second) const
{
    const double u = clamp(s) / length_;
    m = eval_bernstein(weights_, u);
    m_prime = eval_bernstein(d1_, u);
    m_second = eval_bernstein(d2_, u);
}

CurvePoint ConstraintPath::eval(double s) const
{
    CurvePoint cp;
    cp.clamped = s < 0.0 || s > length_;
    cp.s = clamp(s);
    derivatives(cp.s, cp.m, cp.m_prime, cp.m_second);
    cp.kappa = cp.m_second.norm();
    if (cp.kappa > kCurvatureFloor) {
        cp.normal = cp.m_second / cp.kappa;
        cp.osc_radius = 1.0 / cp.kappa;
        cp.normal_defined = true;
    } else {
        cp.kappa = 0.0;
    }
    return cp;
}

double ConstraintPath::stationarity(const Vec3& x, double s) const
{
    const double u = clamp(s) / length_;
    return (x - eval_bernstein(weights_, u)).dot(eval_bernstein(d1_, u));
}

double ConstraintPath::cost(const Vec3& x, double s) const
{
    return (x - position(s)).squaredNorm();
}

// ---------------------------------------------------------------------------
// Spatial sampling

SpatialPath resample_spatial(const RawTrajectory& traj, double delta)
{
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw Error(ErrorCode::invalid_parameter, "resample_spatial: delta must be positive");
    const auto& pts = traj.samples;
    if (pts.size() < 2)
        throw Error(ErrorCode::degenerate_input, "resample_spatial: need at least 2 samples");
    if (!traj.timestamps.empty() && traj.timestamps.size() != pts.size())
        throw Error(ErrorCode::invalid_input, "resample_spatial: timestamps and samples differ in count");

    double total = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (!pts[i].allFinite())
            throw Error(ErrorCode::invalid_input, "resample_spatial: non-finite sample");
        total += (pts[i] - pts[i - 1]).norm();
    }
    if (total == 0.0)
        throw Error(ErrorCode::degenerate_input, "resample_spatial: all samples coincide");
    if (total < delta) {
        std::ostringstream os;
        os << "resample_spatial: polyline length " << total << " is shorter than delta " << delta;
        throw Error(ErrorCode::invalid_parameter, os.str());
    }

    SpatialPath out;
    out.delta = delta;
    out.points.push_back(pts.front());

    // Walk forward from the last emitted point and emit the first polyline point
    // at chord distance delta. `a` is the current search position on segment i.
    Vec3 current = pts.front();
    Vec3 a = pts.front();
    std::size_t i = 0;
    const double snap = delta * (1.0 - 1e-10);
    while (i + 1 < pts.size()) {
        const Vec3& b = pts[i + 1];
        if ((b - current).norm() < delta) {
            a = b;
            ++i;
            continue;
        }
        // |a + t d - current| = delta, a inside the sphere, b outside: one root in [0, 1].
        const Vec3 d = b - a;
        const Vec3 w = a - current;
        const double qa = d.squaredNorm();
        const double qb = d.dot(w);
        const double qc = w.squaredNorm() - delta * delta;
        const double disc = std::sqrt(std::max(0.0, qb * qb - qa * qc));
        double t = qb > 0.0 ? -qc / (qb + disc) : (disc - qb) / qa;
        t = std::clamp(t, 0.0, 1.0);
        const Vec3 q = a + t * d;
        out.points.push_back(q);
        current = q;
        a = q;
    }
    // Snap the final vertex when it lies within round-off of one more step.
    const double tail = (pts.back() - current).norm();
    if (tail >= snap && tail < delta)
        out.points.push_back(pts.back());

    out.knots.resize(out.points.size());
    for (std::size_t k = 0; k < out.knots.size(); ++k)
        out.knots[k] = static_cast<double>(k) * delta;
    return out;
}

// ---------------------------------------------------------------------------
// Fitting

FitResult fit_path(const SpatialPath& sp, int num_basis, double ridge)
{
    if (num_basis < 2)
        throw Error(ErrorCode::invalid_parameter, "fit_path: num_basis must be >= 2");
    if (!(ridge >= 0.0) || !std::isfinite(ridge))
        throw Error(ErrorCode::invalid_parameter, "fit_path: ridge must be a finite non-negative number");
    if (sp.points.size() != sp.knots.size())
        throw Error(ErrorCode::invalid_input, "fit_path: points and knots differ in count");
    const double length = sp.length();
    if (sp.points.size() < 2 || !(length > 0.0))
        throw Error(ErrorCode::degenerate_input, "fit_path: spatial path has zero length");

    const auto rows = static_cast<Eigen::Index>(sp.points.size());
    const Eigen::Index cols = num_basis;
    if (rows < cols && ridge == 0.0) {
        std::ostringstream os;
        os << "fit_path: " << rows << " samples cannot determine " << cols << " basis weights";
        throw Error(ErrorCode::ill_conditioned_fit, os.str());
    }

    const Eigen::Index extra = ridge > 0.0 ? cols : 0;
    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(rows + extra, cols);
    Eigen::MatrixX3d target = Eigen::MatrixX3d::Zero(rows + extra, 3);
    for (Eigen::Index k = 0; k < rows; ++k) {
        design.row(k) = bernstein_basis(num_basis - 1, sp.knots[k] / length).transpose();
        target.row(k) = sp.points[k].transpose();
    }
    if (extra > 0)
        design.bottomRows(extra) = std::sqrt(ridge) * Eigen::MatrixXd::Identity(cols, cols);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < cols)
        throw Error(ErrorCode::ill_conditioned_fit, "fit_path: design matrix is rank deficient");
    Eigen::MatrixX3d weights = qr.solve(target);
    if (!weights.allFinite())
        throw Error(ErrorCode::ill_conditioned_fit, "fit_path: least-squares solution is not finite");

    FitResult result{ConstraintPath(std::move(weights), length, sp.delta), {}};
    double sq = 0.0;
    double dev = 0.0;
    for (Eigen::Index k = 0; k < rows; ++k) {
        Vec3 m, mp, mpp;
        result.path.derivatives(sp.knots[k], m, mp, mpp);
        sq += (sp.points[k] - m).squaredNorm();
        dev = std::max(dev, std::abs(mp.norm() - 1.0));
    }
    result.report.residual_rms = std::sqrt(sq / static_cast<double>(rows));
    result.report.max_speed_deviation = dev;
    result.report.unit_speed_ok = dev <= kUnitSpeedTolerance;
    return result;
}

double max_speed_deviation(const ConstraintPath& path)
{
    double dev = 0.0;
    const auto steps = static_cast<long>(std::floor(path.length() / path.delta() + 1e-9));
    for (long k = 0; k <= steps; ++k) {
        Vec3 m, mp, mpp;
        path.derivatives(static_cast<double>(k) * path.delta(), m, mp, mpp);
        dev = std::max(dev, std::abs(mp.norm() - 1.0));
    }
    return dev;
}

// ---------------------------------------------------------------------------
// Nearest point and singularity analysis

NearestPoint nearest_point_bruteforce(const ConstraintPath& path, const Vec3& x, double grid_step)
{
    if (!(grid_step > 0.0))
        throw Error(ErrorCode::invalid_parameter, "nearest_point_bruteforce: grid_step must be positive");
    const auto grid = uniform_grid(path.length(), grid_step);
    std::vector<double> costs(grid.size());
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        costs[i] = path.cost(x, grid[i]);
        best = std::min(best, costs[i]);
    }
    constexpr double tie = 1e-9;
    std::size_t idx = 0;
    while (costs[idx] > best + tie)
        ++idx;

    const double lo = idx > 0 ? grid[idx - 1] : grid[idx];
    const double hi = idx + 1 < grid.size() ? grid[idx + 1] : grid[idx];
    NearestPoint np{grid[idx], costs[idx]};
    if (hi > lo) {
        const double s = golden_section(path, x, lo, hi);
        const double c = path.cost(x, s);
        if (c <= np.cost)
            np = {s, c};
    }
    return np;
}

EdsReport eds_analyze(const ConstraintPath& path, const Vec3& x, const EdsOptions& opts)
{
    const double step = opts.grid_step.value_or(0.5 * path.delta());
    const double L = path.length();
    const double tie = opts.tie_tolerance.value_or(1e-6 * L * L);
    if (!(step > 0.0))
        throw Error(ErrorCode::invalid_parameter, "eds_analyze: grid step must be positive");

    EdsReport rep;
    rep.query = x;

    const auto grid = uniform_grid(L, step);
    std::vector<double> g(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        g[i] = path.stationarity(x, grid[i]);

    auto classify = [&](double s) {
        Vec3 m, mp, mpp;
        path.derivatives(s, m, mp, mpp);
        const Vec3 e = x - m;
        return StationaryPoint{s, e.squaredNorm(), mp.squaredNorm() - e.dot(mpp) > 0.0};
    };

    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (g[i] == 0.0) {
            rep.stationary_points.push_back(classify(grid[i]));
            continue;
        }
        if (i + 1 < grid.size() && g[i] * g[i + 1] < 0.0) {
            double a = grid[i];
            double b = grid[i + 1];
            double ga = g[i];
            for (int it = 0; it < 80 && (b - a) > 1e-15 * std::max(1.0, L); ++it) {
                const double mid = 0.5 * (a + b);
                const double gm = path.stationarity(x, mid);
                if (gm == 0.0) {
                    a = b = mid;
                    break;
                }
                if ((gm < 0.0) == (ga < 0.0)) {
                    a = mid;
                    ga = gm;
                } else {
                    b = mid;
                }
            }
            rep.stationary_points.push_back(classify(0.5 * (a + b)));
        }
    }

    // Global minimiser over interior stationary points and the two box ends.
    std::vector<std::pair<double, double>> candidates;  // (s, cost)
    candidates.reserve(rep.stationary_points.size() + 2);
    candidates.emplace_back(0.0, path.cost(x, 0.0));
    for (const auto& sp : rep.stationary_points)
        candidates.emplace_back(sp.s, sp.cost);
    candidates.emplace_back(L, path.cost(x, L));
    std::sort(candidates.begin(), candidates.end());

    double best = std::numeric_limits<double>::infinity();
    for (const auto& [s, c] : candidates) {
        if (c < best) {
            best = c;
            rep.nearest_s = s;
        }
    }
    rep.nearest_cost = best;

    // Count well-separated global minimisers.
    int clusters = 0;
    double last = -std::numeric_limits<double>::infinity();
    for (const auto& [s, c] : candidates) {
        if (c > best + tie)
            continue;
        if (s - last > 2.0 * step)
            ++clusters;
        last = s;
    }
    rep.num_global_minimizers = clusters;

    // Singularity test at the lowest-cost stationary point (or the minimiser when none).
    double s_bar = rep.nearest_s;
    bool has_stationary = false;
    double best_stat = std::numeric_limits<double>::infinity();
    for (const auto& sp : rep.stationary_points) {
        if (sp.cost < best_stat) {
            best_stat = sp.cost;
            s_bar = sp.s;
            has_stationary = true;
        }
    }
    rep.stationary_s = s_bar;
    const CurvePoint cp = path.eval(s_bar);
    rep.osc_radius_at_nearest = cp.osc_radius;
    rep.normal_offset = cp.normal_defined ? (x - cp.m).dot(cp.normal) : 0.0;

    const double offset_tol = 1e-6 * L;
    const bool beyond_center = has_stationary && cp.normal_defined &&
                               rep.normal_offset >= cp.osc_radius - offset_tol;
    rep.is_eds = beyond_center || clusters >= 2;
    return rep;
}

}  // namespace vfphase::path
