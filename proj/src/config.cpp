#include "vfphase/config.hpp"

#include "vfphase/error.hpp"
#include "vfphase/path_io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

namespace vfphase::config {
namespace {

enum class Range { any, positive, nonneg };

/// Raw document text, used only to map key paths back to line numbers.
struct Doc {
    std::string text;
    std::string source;

    [[nodiscard]] int line_of(const std::vector<std::string>& keys) const
    {
        if (text.empty())
            return 0;
        std::size_t pos = 0;
        bool found_any = false;
        for (const auto& k : keys) {
            const std::string quoted = "\"" + k + "\"";
            std::size_t at = pos;
            bool hit = false;
            while ((at = text.find(quoted, at)) != std::string::npos) {
                auto after = text.find_first_not_of(" \t\r\n", at + quoted.size());
                if (after != std::string::npos && text[after] == ':') {
                    hit = true;
                    break;
                }
                at += quoted.size();
            }
            if (!hit)
                break;
            pos = at;
            found_any = true;
        }
        if (!found_any)
            return 0;
        return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
    }
};

std::string dotted(const std::vector<std::string>& keys)
{
    std::string out;
    for (const auto& k : keys)
        out += (out.empty() ? "" : ".") + k;
    return out;
}

/// Typed view of one JSON object; remembers which keys were consumed.
class Node {
public:
    Node(const Json& j, std::vector<std::string> keys, const Doc& doc) : j_(j), keys_(std::move(keys)), doc_(doc)
    {
        if (!j_.is_object())
            fail_here("expected an object");
    }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const
    {
        auto keys = keys_;
        if (!key.empty())
            keys.push_back(key);
        std::string where = doc_.source;
        if (const int line = doc_.line_of(keys); line > 0)
            where += ":" + std::to_string(line);
        throw Error(ErrorCode::validation_error, where + ": " + (keys.empty() ? "" : dotted(keys) + ": ") + msg);
    }
    [[noreturn]] void fail_here(const std::string& msg) const { fail("", msg); }

    bool has(const std::string& key)
    {
        if (!j_.contains(key))
            return false;
        seen_.insert(key);
        return true;
    }

    Node child(const std::string& key)
    {
        seen_.insert(key);
        auto keys = keys_;
        keys.push_back(key);
        return Node(j_.at(key), keys, doc_);
    }

    bool get(const std::string& key, double& out, Range r = Range::any)
    {
        if (!has(key))
            return false;
        const auto& v = j_.at(key);
        if (!v.is_number())
            fail(key, "expected a number");
        out = v.get<double>();
        check(key, out, r);
        return true;
    }

    bool get(const std::string& key, int& out, Range r = Range::any)
    {
        if (!has(key))
            return false;
        const auto& v = j_.at(key);
        if (!v.is_number_integer())
            fail(key, "expected an integer");
        const auto raw = v.get<long long>();
        if (raw < -2147483647LL || raw > 2147483647LL)
            fail(key, "integer out of range");
        out = static_cast<int>(raw);
        check(key, out, r);
        return true;
    }

    bool get(const std::string& key, std::uint64_t& out)
    {
        if (!has(key))
            return false;
        const auto& v = j_.at(key);
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
            fail(key, "expected a non-negative integer");
        out = v.get<std::uint64_t>();
        return true;
    }

    bool get(const std::string& key, bool& out)
    {
        if (!has(key))
            return false;
        const auto& v = j_.at(key);
        if (!v.is_boolean())
            fail(key, "expected true or false");
        out = v.get<bool>();
        return true;
    }

    bool get(const std::string& key, std::string& out)
    {
        if (!has(key))
            return false;
        const auto& v = j_.at(key);
        if (!v.is_string())
            fail(key, "expected a string");
        out = v.get<std::string>();
        return true;
    }

    /// A 3-vector, or a scalar broadcast to all three components.
    bool get(const std::string& key, Vec3& out, Range r = Range::any, bool allow_scalar = false)
    {
        if (!has(key))
            return false;
        const auto& v = j_.at(key);
        if (allow_scalar && v.is_number()) {
            out = Vec3::Constant(v.get<double>());
        } else if (v.is_array() && v.size() == 3 && std::all_of(v.begin(), v.end(), [](const Json& e) {
                       return e.is_number();
                   })) {
            out = Vec3(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
        } else {
            fail(key, allow_scalar ? "expected a number or an array of 3 numbers" : "expected an array of 3 numbers");
        }
        for (int i = 0; i < 3; ++i)
            check(key, out[i], r);
        return true;
    }

    bool get(const std::string& key, std::vector<double>& out, Range r = Range::any)
    {
        if (!has(key))
            return false;
        const auto& v = j_.at(key);
        if (!v.is_array())
            fail(key, "expected an array of numbers");
        out.clear();
        for (const auto& e : v) {
            if (!e.is_number())
                fail(key, "expected an array of numbers");
            out.push_back(e.get<double>());
            check(key, out.back(), r);
        }
        return true;
    }

    /// Reject keys nobody asked for; catches misspelt options.
    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                fail(it.key(), "unknown key");
    }

    [[nodiscard]] const Json& json() const { return j_; }

private:
    void check(const std::string& key, double v, Range r) const
    {
        if (!std::isfinite(v))
            fail(key, "must be finite");
        if (r == Range::positive && !(v > 0.0))
            fail(key, "must be positive");
        if (r == Range::nonneg && !(v >= 0.0))
            fail(key, "must be >= 0");
    }

    const Json& j_;
    std::vector<std::string> keys_;
    const Doc& doc_;
    std::set<std::string> seen_;
};

std::string resolve(const std::string& base_dir, const std::string& file)
{
    const std::filesystem::path p(file);
    if (p.is_absolute() || base_dir.empty())
        return file;
    return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

template <typename Fn>
void guarded(Node& n, const std::string& key, Fn&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        n.fail(key, e.what());
    }
}

void read_lqt(Node n, lqt::LqtConfig& c)
{
    n.get("c1", c.c1, Range::positive, true);
    n.get("c2", c.c2, Range::nonneg, true);
    n.get("c3", c.c3, Range::nonneg);
    n.get("R", c.R, Range::nonneg);
    n.get("window", c.window);
    n.get("delta_min", c.delta_min, Range::nonneg);
    n.get("max_iter", c.max_iter);
    n.get("dt", c.dt, Range::positive);
    n.get("strict", c.strict);
    n.finish();
    guarded(n, "", [&] { c.validate(); });
}

void read_vm(Node n, vm::VmParams& p)
{
    n.get("k", p.k, Range::positive);
    n.get("b", p.b, Range::positive);
    n.finish();
}

void read_admittance(Node n, plant::AdmittanceParams& p)
{
    n.get("m", p.m, Range::positive);
    n.get("b", p.b, Range::positive);
    n.get("k", p.k, Range::positive);
    n.finish();
}

void read_shape_fields(Node& n, shapes::ShapeSpec& s)
{
    n.get("center", s.center);
    n.get("start", s.start);
    n.get("end", s.end);
    n.get("radius", s.radius, Range::positive);
    n.get("start_deg", s.start_deg);
    n.get("sweep_deg", s.sweep_deg, Range::positive);
    n.get("semi_a", s.semi_a, Range::positive);
    n.get("semi_b", s.semi_b, Range::positive);
    n.get("half_width", s.half_width, Range::positive);
    n.get("samples", s.samples);
}

void read_path(Node n, scenario::PathSource& src, const std::string& base_dir)
{
    auto& s = src.shape;
    std::string name;
    int sources = 0;
    if (n.get("shape", name)) {
        ++sources;
        src.type = scenario::PathSource::Type::shape;
        guarded(n, "shape", [&] { s.kind = shapes::parse_kind(name); });
    }
    if (n.get("file", src.file)) {
        ++sources;
        src.type = scenario::PathSource::Type::path_file;
        src.file = resolve(base_dir, src.file);
    }
    if (n.get("csv", src.file)) {
        ++sources;
        src.type = scenario::PathSource::Type::csv_file;
        src.file = resolve(base_dir, src.file);
    }
    if (sources != 1)
        n.fail_here("exactly one of 'shape', 'file' or 'csv' is required");
    n.get("delta", s.delta, Range::positive);
    n.get("num_basis", s.num_basis);
    n.get("ridge", s.ridge, Range::nonneg);
    if (s.num_basis < 2)
        n.fail("num_basis", "must be >= 2");
    if (src.type == scenario::PathSource::Type::shape)
        read_shape_fields(n, s);
    n.finish();
}

Json vec_json(const Vec3& v)
{
    return Json::array({v.x(), v.y(), v.z()});
}

}  // namespace

scenario::ScenarioConfig parse_scenario(const std::string& text, const std::string& source,
                                        const std::string& base_dir)
{
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        // byte offsets are 1-based and point just past the offending character
        const auto off = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(off), '\n'));
        throw Error(ErrorCode::parse_error, source + ":" + std::to_string(line) + ": invalid JSON: " + e.what());
    }
    const Doc doc{text, source};
    Node root(j, {}, doc);
    scenario::ScenarioConfig c;

    std::string format;
    if (!root.get("format", format))
        root.fail_here("missing 'format' (expected \"" + std::string(kScenarioFormat) + "\")");
    if (format != kScenarioFormat)
        root.fail("format", "expected \"" + std::string(kScenarioFormat) + "\", got \"" + format + "\"");
    int version = 0;
    if (!root.get("version", version))
        root.fail_here("missing 'version'");
    if (version != kScenarioVersion)
        root.fail("version", "unsupported version " + std::to_string(version) + " (this build reads " +
                                 std::to_string(kScenarioVersion) + ")");

    root.get("name", c.name);
    std::string kind;
    if (!root.get("scenario", kind))
        root.fail_here("missing 'scenario'");
    guarded(root, "scenario", [&] { c.kind = scenario::parse_kind(kind); });

    if (root.has("algorithms") && root.has("algorithm"))
        root.fail("algorithm", "give either 'algorithm' or 'algorithms', not both");
    if (root.has("algorithm")) {
        std::string a;
        root.get("algorithm", a);
        guarded(root, "algorithm", [&] { c.algorithms = {loop::parse_algorithm(a)}; });
    } else if (root.has("algorithms")) {
        const auto& arr = root.json().at("algorithms");
        if (!arr.is_array() || arr.empty())
            root.fail("algorithms", "expected a non-empty array of algorithm names");
        c.algorithms.clear();
        for (const auto& e : arr) {
            if (!e.is_string())
                root.fail("algorithms", "expected algorithm names");
            guarded(root, "algorithms", [&] { c.algorithms.push_back(loop::parse_algorithm(e.get<std::string>())); });
        }
    }

    root.get("duration", c.duration, Range::positive);
    root.get("dt", c.dt, Range::positive);
    root.get("seed", c.seed);

    if (!root.has("path"))
        root.fail_here("missing 'path'");
    read_path(root.child("path"), c.path, base_dir);

    if (root.has("lqt"))
        read_lqt(root.child("lqt"), c.tracker.lqt);
    if (root.has("vm")) {
        read_vm(root.child("vm"), c.tracker.vm);
        c.vm_from_admittance = false;
    }
    if (root.has("gn")) {
        auto n = root.child("gn");
        n.get("max_inner", c.tracker.gn_max_inner);
        if (c.tracker.gn_max_inner < 1)
            n.fail("max_inner", "must be >= 1");
        n.finish();
    }
    if (root.get("velocity_alpha", c.tracker.velocity_alpha, Range::positive) && c.tracker.velocity_alpha > 1.0)
        root.fail("velocity_alpha", "must lie in (0, 1]");
    if (root.has("admittance"))
        read_admittance(root.child("admittance"), c.admittance);
    if (root.has("human")) {
        auto n = root.child("human");
        n.get("k_h", c.human.k_h, Range::positive);
        n.get("f_max", c.human.f_max, Range::positive);
        if (n.get("force_csv", c.force_csv))
            c.force_csv = resolve(base_dir, c.force_csv);
        n.finish();
    }
    if (root.has("noise")) {
        auto n = root.child("noise");
        n.get("force_sigma", c.noise.force_sigma, Range::nonneg);
        n.get("gc_bias", c.noise.gc_bias);
        n.get("gc_ou_sigma", c.noise.gc_ou_sigma, Range::nonneg);
        n.get("gc_ou_tau", c.noise.gc_ou_tau, Range::positive);
        n.finish();
    }
    if (root.has("target_following")) {
        auto n = root.child("target_following");
        n.get("speed", c.target_following.speed, Range::nonneg);
        n.get("s_start", c.target_following.s_start, Range::nonneg);
        n.finish();
    }
    if (root.has("center_reaching")) {
        auto n = root.child("center_reaching");
        auto& p = c.center_reaching;
        n.get("s_hat", p.s_hat);
        n.get("hold", p.hold, Range::nonneg);
        n.get("approach", p.approach, Range::positive);
        n.get("dwell", p.dwell, Range::nonneg);
        n.get("reach", p.reach, Range::nonneg);
        n.get("wobble_radius", p.wobble_radius, Range::nonneg);
        n.get("wobble_hz", p.wobble_hz, Range::nonneg);
        n.get("line_offset", p.line_offset, Range::positive);
        n.finish();
    }
    if (root.has("reaching_demo")) {
        auto n = root.child("reaching_demo");
        auto& p = c.reaching_demo;
        n.get("goal_distance", p.goal_distance, Range::nonneg);
        n.get("s_start", p.s_start, Range::nonneg);
        if (n.get("c2_values", p.c2_values, Range::nonneg) && p.c2_values.empty())
            n.fail("c2_values", "must not be empty");
        n.finish();
    }
    if (root.has("metrics")) {
        auto n = root.child("metrics");
        double L = 0.0;
        if (n.get("length", L, Range::positive))
            c.metrics.length = L;
        n.get("t0", c.metrics.t0, Range::nonneg);
        n.get("window", c.metrics.window);
        if (c.metrics.window < 1)
            n.fail("window", "must be >= 1");
        n.get("force_floor", c.metrics.force_floor, Range::nonneg);
        n.finish();
    }
    root.finish();

    try {
        c.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::validation_error, source + ": " + e.what());
    }
    return c;
}

scenario::ScenarioConfig load_scenario(const std::string& file)
{
    const auto text = io::read_text_file(file);
    return parse_scenario(text, file, std::filesystem::path(file).parent_path().string());
}

Json lqt_to_json(const lqt::LqtConfig& c)
{
    Json j;
    j["c1"] = vec_json(c.c1);
    j["c2"] = vec_json(c.c2);
    j["c3"] = c.c3;
    j["R"] = c.R;
    j["window"] = c.window;
    j["delta_min"] = c.delta_min;
    j["max_iter"] = c.max_iter;
    j["dt"] = c.dt;
    j["strict"] = c.strict;
    return j;
}

Json scenario_to_json(const scenario::ScenarioConfig& c)
{
    Json j;
    j["format"] = kScenarioFormat;
    j["version"] = kScenarioVersion;
    j["name"] = c.name;
    j["scenario"] = scenario::kind_name(c.kind);
    Json algos = Json::array();
    for (auto a : c.algorithms)
        algos.push_back(loop::algorithm_name(a));
    j["algorithms"] = algos;
    j["duration"] = c.duration;
    j["dt"] = c.dt;
    j["seed"] = c.seed;

    Json p;
    const auto& s = c.path.shape;
    switch (c.path.type) {
    case scenario::PathSource::Type::shape:
        p["shape"] = shapes::kind_name(s.kind);
        p["center"] = vec_json(s.center);
        p["start"] = vec_json(s.start);
        p["end"] = vec_json(s.end);
        p["radius"] = s.radius;
        p["start_deg"] = s.start_deg;
        p["sweep_deg"] = s.sweep_deg;
        p["semi_a"] = s.semi_a;
        p["semi_b"] = s.semi_b;
        p["half_width"] = s.half_width;
        p["samples"] = s.samples;
        break;
    case scenario::PathSource::Type::path_file: p["file"] = c.path.file; break;
    case scenario::PathSource::Type::csv_file: p["csv"] = c.path.file; break;
    }
    p["delta"] = s.delta;
    p["num_basis"] = s.num_basis;
    p["ridge"] = s.ridge;
    j["path"] = p;

    j["lqt"] = lqt_to_json(c.tracker.lqt);
    if (!c.vm_from_admittance)
        j["vm"] = {{"k", c.tracker.vm.k}, {"b", c.tracker.vm.b}};
    j["gn"] = {{"max_inner", c.tracker.gn_max_inner}};
    j["velocity_alpha"] = c.tracker.velocity_alpha;
    j["admittance"] = {{"m", c.admittance.m}, {"b", c.admittance.b}, {"k", c.admittance.k}};
    Json h = {{"k_h", c.human.k_h}, {"f_max", c.human.f_max}};
    if (!c.force_csv.empty())
        h["force_csv"] = c.force_csv;
    j["human"] = h;
    j["noise"] = {{"force_sigma", c.noise.force_sigma},
                  {"gc_bias", vec_json(c.noise.gc_bias)},
                  {"gc_ou_sigma", c.noise.gc_ou_sigma},
                  {"gc_ou_tau", c.noise.gc_ou_tau}};
    j["target_following"] = {{"speed", c.target_following.speed}, {"s_start", c.target_following.s_start}};
    const auto& cr = c.center_reaching;
    j["center_reaching"] = {{"s_hat", cr.s_hat},         {"hold", cr.hold},
                            {"approach", cr.approach},   {"dwell", cr.dwell},
                            {"reach", cr.reach},         {"wobble_radius", cr.wobble_radius},
                            {"wobble_hz", cr.wobble_hz}, {"line_offset", cr.line_offset}};
    j["reaching_demo"] = {{"goal_distance", c.reaching_demo.goal_distance},
                          {"s_start", c.reaching_demo.s_start},
                          {"c2_values", c.reaching_demo.c2_values}};
    Json m = {{"t0", c.metrics.t0}, {"window", c.metrics.window}, {"force_floor", c.metrics.force_floor}};
    if (c.metrics.length)
        m["length"] = *c.metrics.length;
    j["metrics"] = m;
    return j;
}

void apply_lqt(const Json& j, lqt::LqtConfig& cfg)
{
    const Doc doc{"", "lqt"};
    auto copy = cfg;
    read_lqt(Node(j, {}, doc), copy);
    cfg = copy;
}

void apply_vm(const Json& j, vm::VmParams& p)
{
    const Doc doc{"", "vm"};
    auto copy = p;
    read_vm(Node(j, {}, doc), copy);
    p = copy;
}

void apply_admittance(const Json& j, plant::AdmittanceParams& p)
{
    const Doc doc{"", "admittance"};
    auto copy = p;
    read_admittance(Node(j, {}, doc), copy);
    p = copy;
}

}  // namespace vfphase::config
