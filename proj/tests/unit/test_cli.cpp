#include "helpers.hpp"

#include "vfphase/builtin_paths.hpp"
#include "vfphase/cli.hpp"
#include "vfphase/path_io.hpp"
#include "vfphase/server.hpp"

#include <filesystem>
#include <sstream>

using namespace testutil;
namespace cli = vfphase::cli;
namespace io = vfphase::io;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(const std::vector<std::string>& args)
{
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string fresh_dir(const std::string& name)
{
    const auto d = fs::temp_directory_path() / ("vfphase_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d.string();
}

std::string config(const std::string& name)
{
    return std::string(VFPHASE_CONFIG_DIR) + "/" + name + ".json";
}

std::vector<std::string> files_in(const std::string& dir)
{
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir))
        names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
}

}  // namespace

TEST_CASE("cli: fit a straight line")
{
    const auto dir = fresh_dir("fit_line");
    io::write_text_file(dir + "/line.csv", "x,y,z\n0,0,0\n0.25,0,0\n0.5,0,0\n");
    const auto r = run({"fit", dir + "/line.csv", "--basis", "2", "--delta", "0.01", "--out", dir + "/p.json"});
    REQUIRE(r.code == 0);
    const auto p = io::load_path(dir + "/p.json");
    CHECK(p.num_basis() == 2);
    CHECK(p.length() == doctest::Approx(0.5));
    const auto pos = r.out.find("residual_rms: ");
    REQUIRE(pos != std::string::npos);
    CHECK(std::stod(r.out.substr(pos + 14)) < 1e-12);
}

TEST_CASE("cli: fit a circle keeps unit speed")
{
    const auto dir = fresh_dir("fit_circle");
    vfphase::shapes::ShapeSpec spec;
    spec.kind = vfphase::shapes::ShapeKind::circle;
    spec.radius = 0.5;
    io::write_text_file(dir + "/c.csv", io::trajectory_to_csv(vfphase::shapes::shape_samples(spec)));
    const auto r = run({"fit", dir + "/c.csv", "--basis", "30", "--out", dir + "/p.json"});
    REQUIRE(r.code == 0);
    CHECK(vp::max_speed_deviation(io::load_path(dir + "/p.json")) <= 0.02);
}

TEST_CASE("cli: input errors map to exit code 2")
{
    CHECK(run({"fit", "/nonexistent/x.csv"}).code == 2);
    CHECK(run({"run", "/nonexistent/s.json"}).code == 2);
    CHECK(run({}).code == 2);
    CHECK(run({"bogus"}).code == 2);
    CHECK(run({"fit", "a.csv", "--basis", "1"}).code == 2);
    const auto dir = fresh_dir("bad_algo");
    const auto r = run({"run", config("center_reaching"), "--algorithm", "newton", "--out", dir});
    CHECK(r.code == 2);
    CHECK(r.err.find("newton") != std::string::npos);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("cli: config errors name the line")
{
    const auto dir = fresh_dir("bad_cfg");
    io::write_text_file(dir + "/s.json", "{\n  \"format\": \"vfphase.scenario\",\n  \"version\": 1,\n"
                                         "  \"scenario\": \"center_reaching\",\n  \"duration\": -1\n}\n");
    const auto r = run({"run", dir + "/s.json"});
    CHECK(r.code == 2);
    CHECK(r.err.find("s.json:5: duration") != std::string::npos);
}

TEST_CASE("cli: eds-field")
{
    const auto dir = fresh_dir("eds");
    io::save_path(fit_line(Vec3(0, 0, 0), Vec3(0.5, 0, 0)), dir + "/line.json");
    auto r = run({"eds-field", dir + "/line.json", "--nx", "20", "--ny", "10", "--out", dir + "/f.csv"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("eds cells: 0") != std::string::npos);
    io::save_path(fit_circle(0.3, 5.0), dir + "/circle.json");
    r = run({"eds-field", dir + "/circle.json", "--grid", "-0.4,0.4,-0.4,0.4,5,5", "--out", dir + "/g.csv"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("eds cells: 0") == std::string::npos);
    CHECK(run({"eds-field", dir + "/circle.json", "--grid", "1,2,3"}).code == 2);
}

TEST_CASE("cli: run writes traces, metrics and tables; overrides apply")
{
    const auto dir = fresh_dir("run");
    const auto r = run({"run", config("center_reaching"), "--duration", "0.5", "--algorithm", "lqt", "--out", dir});
    REQUIRE(r.code == 0);
    CHECK(files_in(dir) == std::vector<std::string>{"metrics.json", "plot_long.csv", "table.csv", "table.txt",
                                                    "trace_lqt.csv"});
    const auto metrics = vfphase::Json::parse(io::read_text_file(dir + "/metrics.json"));
    CHECK(metrics["format"] == "vfphase.metrics");
    CHECK(metrics["runs"].size() == 1);
    CHECK(metrics["scenario"]["duration"] == 0.5);
    const auto trace = io::read_csv(dir + "/trace_lqt.csv");
    CHECK(trace.rows.size() == 500);
    CHECK(r.out == io::read_text_file(dir + "/table.txt"));
}

TEST_CASE("cli: repeated runs are byte-identical")
{
    const auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
    REQUIRE(run({"run", config("target_following"), "--duration", "1", "--out", a}).code == 0);
    REQUIRE(run({"run", config("target_following"), "--duration", "1", "--out", b}).code == 0);
    REQUIRE(files_in(a) == files_in(b));
    for (const auto& f : files_in(a))
        CHECK(io::read_text_file(a + "/" + f) == io::read_text_file(b + "/" + f));
    const auto c = fresh_dir("det_c");
    REQUIRE(run({"run", config("target_following"), "--duration", "1", "--seed", "8", "--out", c}).code == 0);
    CHECK(io::read_text_file(a + "/trace_gn.csv") != io::read_text_file(c + "/trace_gn.csv"));
}

TEST_CASE("cli: demo-reaching")
{
    const auto dir = fresh_dir("demo");
    const auto r = run({"demo-reaching", "--c2", "2", "0.2", "--duration", "0.5", "--out", dir});
    REQUIRE(r.code == 0);
    CHECK(files_in(dir) == std::vector<std::string>{"demo_reaching.csv", "summary.json"});
    const auto s = vfphase::Json::parse(io::read_text_file(dir + "/summary.json"));
    CHECK(s["runs"].size() == 2);
    CHECK(s["runs"][0]["peak_s_dot"].get<double>() > 0.0);
    CHECK(run({"demo-reaching", config("center_reaching")}).code == 2);
}

TEST_CASE("cli: serve reports a bind failure with exit code 3")
{
    vfphase::session::SessionConfig sc;
    sc.path = std::make_shared<const vp::ConstraintPath>(fit_circle(0.2, 4.0));
    vfphase::server::ServerOptions so;
    so.port = 0;
    vfphase::server::Server holder(sc, so);
    REQUIRE(holder.start());
    const auto r = run({"serve", "--port", std::to_string(holder.port())});
    CHECK(r.code == 3);
    CHECK(run({"serve", "--bind", "256.1.1.1", "--port", "0"}).code == 3);
}
