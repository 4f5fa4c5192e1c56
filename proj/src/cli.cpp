#include "vfphase/cli.hpp"

#include "vfphase/builtin_paths.hpp"
#include "vfphase/config.hpp"
#include "vfphase/eds_field.hpp"
#include "vfphase/path_io.hpp"
#include "vfphase/scenarios.hpp"
#include "vfphase/server.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>

namespace vfphase::cli {
namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int)
{
    g_stop = true;
}

void setup_logging()
{
    static bool done = false;
    if (done)
        return;
    done = true;
    auto logger = spdlog::stderr_color_mt("vfphase");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("VFPHASE_LOG")) {
        const auto lvl = spdlog::level::from_str(env);
        // from_str maps unknown names to off; only honour real names
        if (lvl != spdlog::level::off || std::string(env) == "off")
            spdlog::set_level(lvl);
        else
            spdlog::warn("VFPHASE_LOG='{}' is not a log level; keeping warn", env);
    }
}

void write_or_print(const std::string& file, const std::string& text, std::ostream& out)
{
    if (file.empty())
        out << text;
    else
        io::write_text_file(file, text);
}

void ensure_dir(const std::string& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw Error(ErrorCode::io_error, "cannot create output directory '" + dir + "'");
}

std::string file_label(const scenario::SimTrace& t)
{
    std::string s = t.algorithm;
    if (!t.label.empty())
        s += "_" + t.label;
    for (auto& c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_'))
            c = '_';
    return s;
}

void apply_overrides(scenario::ScenarioConfig& cfg, const Overrides& o)
{
    if (o.algorithm) {
        cfg.algorithms.clear();
        std::stringstream ss(*o.algorithm);
        std::string item;
        while (std::getline(ss, item, ','))
            cfg.algorithms.push_back(loop::parse_algorithm(item));
        if (cfg.algorithms.empty())
            throw Error(ErrorCode::validation_error, "--algorithm: empty list");
    }
    if (o.seed)
        cfg.seed = *o.seed;
    if (o.duration)
        cfg.duration = *o.duration;
    if (o.delta)
        cfg.path.shape.delta = *o.delta;
    if (o.basis)
        cfg.path.shape.num_basis = *o.basis;
    cfg.validate();
}

scenario::ScenarioConfig builtin_demo_config()
{
    scenario::ScenarioConfig c;
    c.name = "reaching_demo";
    c.kind = scenario::Kind::reaching_demo;
    c.duration = 1.5;
    c.path.shape.kind = shapes::ShapeKind::line;
    c.path.shape.num_basis = 2;
    c.tracker.lqt.dt = 0.01;
    c.tracker.lqt.strict = true;
    return c;
}

Json run_metadata(const scenario::ScenarioConfig& cfg, const path::ConstraintPath& path,
                  const std::vector<scenario::RunMetrics>& rows)
{
    Json j;
    j["format"] = "vfphase.metrics";
    j["version"] = 1;
    j["scenario"] = config::scenario_to_json(cfg);
    j["path"] = {{"length", path.length()}, {"degree", path.degree()}, {"delta", path.delta()}};
    Json runs = Json::array();
    for (const auto& r : rows)
        runs.push_back(scenario::metrics_to_json(r));
    j["runs"] = runs;
    return j;
}

}  // namespace

int exit_code_for(ErrorCode code)
{
    switch (code) {
    case ErrorCode::io_error:
    case ErrorCode::parse_error:
    case ErrorCode::validation_error:
    case ErrorCode::invalid_input:
        return kInput;
    default:
        return kRuntime;
    }
}

int cmd_fit(const FitOptions& o, std::ostream& out)
{
    const auto traj = io::read_trajectory_csv(o.csv_in);
    const auto sp = path::resample_spatial(traj, o.delta);
    const auto fit = path::fit_path(sp, o.basis, o.ridge);
    const auto text = io::path_to_string(fit.path);
    if (!o.out.empty())
        io::write_text_file(o.out, text);
    std::ostream& report = o.out.empty() ? std::cerr : out;
    report << "knots: " << sp.knots.size() << "\n"
           << "length: " << io::format_double(fit.path.length()) << " m\n"
           << "residual_rms: " << io::format_double(fit.report.residual_rms) << " m\n"
           << "max_speed_deviation: " << io::format_double(fit.report.max_speed_deviation) << "\n";
    if (o.out.empty())
        out << text;
    return kOk;
}

int cmd_eds_field(const EdsFieldOptions& o, std::ostream& out)
{
    const auto path = io::load_path(o.path_file);
    const auto grid = o.grid.empty() ? field::default_grid(path, o.nx, o.ny) : field::parse_grid(o.grid);
    const auto cells = field::eds_field(path, grid);
    write_or_print(o.out, field::field_to_csv(cells), out);
    std::size_t eds = 0;
    for (const auto& c : cells)
        eds += c.is_eds ? 1 : 0;
    std::ostream& report = o.out.empty() ? std::cerr : out;
    report << "cells: " << cells.size() << ", eds cells: " << eds << "\n";
    return kOk;
}

int cmd_run(const RunOptions& o, std::ostream& out)
{
    auto cfg = config::load_scenario(o.config);
    apply_overrides(cfg, o.overrides);
    const std::string dir = o.out_dir.empty() ? "out/" + cfg.name : o.out_dir;
    ensure_dir(dir);

    const auto path = scenario::load_path_source(cfg.path);
    spdlog::info("scenario {} ({}), path length {:.4f} m", cfg.name, scenario::kind_name(cfg.kind), path->length());
    const auto traces = scenario::run_all(cfg, path);

    std::vector<scenario::RunMetrics> rows;
    for (const auto& t : traces) {
        io::write_text_file(dir + "/trace_" + file_label(t) + ".csv", scenario::trace_to_csv(t));
        rows.push_back(scenario::evaluate(t, cfg, *path));
    }
    io::write_text_file(dir + "/plot_long.csv", scenario::traces_to_long_csv(traces));
    io::write_text_file(dir + "/metrics.json", run_metadata(cfg, *path, rows).dump(2) + "\n");
    const auto table = scenario::metrics_table_text(rows);
    io::write_text_file(dir + "/table.txt", table);
    io::write_text_file(dir + "/table.csv", scenario::metrics_table_csv(rows));
    out << table;
    return kOk;
}

int cmd_demo_reaching(const DemoOptions& o, std::ostream& out)
{
    auto cfg = o.config.empty() ? builtin_demo_config() : config::load_scenario(o.config);
    if (cfg.kind != scenario::Kind::reaching_demo)
        throw Error(ErrorCode::validation_error, o.config + ": scenario must be reaching_demo");
    if (!o.c2.empty())
        cfg.reaching_demo.c2_values = o.c2;
    apply_overrides(cfg, o.overrides);
    const std::string dir = o.out_dir.empty() ? "out/" + cfg.name : o.out_dir;
    ensure_dir(dir);

    const auto path = scenario::load_path_source(cfg.path);
    const auto traces = scenario::run_reaching_demo(cfg, path);
    std::string csv = "c2,t,s,s_dot,s_ddot\n";
    Json summary = Json::array();
    for (std::size_t k = 0; k < traces.size(); ++k) {
        const auto& t = traces[k];
        const double c2 = cfg.reaching_demo.c2_values[k];
        double peak = -1e300, t_peak = 0.0, lowest = 1e300;
        for (const auto& s : t.samples) {
            csv += io::format_double(c2) + "," + io::format_double(s.t) + "," + io::format_double(s.phase.s) + "," +
                   io::format_double(s.phase.s_dot) + "," + io::format_double(s.phase.s_ddot) + "\n";
            if (s.phase.s_dot > peak) {
                peak = s.phase.s_dot;
                t_peak = s.t;
            }
            lowest = std::min(lowest, s.phase.s_dot);
        }
        summary.push_back({{"c2", c2},
                           {"peak_s_dot", peak},
                           {"peak_time", t_peak},
                           {"min_s_dot", lowest},
                           {"final_s", t.samples.back().phase.s}});
        char line[160];
        std::snprintf(line, sizeof line, "c2=%-8g peak s_dot %.4f m/s at %.3f s, min s_dot %.4f m/s\n", c2, peak,
                      t_peak, lowest);
        out << line;
    }
    io::write_text_file(dir + "/demo_reaching.csv", csv);
    io::write_text_file(dir + "/summary.json",
                        Json{{"format", "vfphase.demo_reaching"}, {"version", 1}, {"runs", summary}}.dump(2) + "\n");
    return kOk;
}

int cmd_serve(const ServeOptions& o, std::ostream& out)
{
    session::SessionConfig sc;
    if (!o.config.empty()) {
        const auto cfg = config::load_scenario(o.config);
        sc.tracker = cfg.tracker_for(loop::Algorithm::lqt);
        sc.admittance = cfg.admittance;
        sc.dt = cfg.dt;
        if (o.path_file.empty())
            sc.path = scenario::load_path_source(cfg.path);
    }
    if (!o.path_file.empty()) {
        sc.path = std::make_shared<const path::ConstraintPath>(io::load_path(o.path_file));
    } else if (!sc.path) {
        shapes::ShapeSpec spec;
        spec.kind = shapes::parse_kind(o.shape);
        sc.path = std::make_shared<const path::ConstraintPath>(shapes::make_path(spec).path);
    }
    sc.tracker.algorithm = loop::parse_algorithm(o.algorithm);
    if (o.config.empty()) {
        sc.tracker.lqt.dt = 0.01;
        sc.tracker.lqt.strict = true;
    }

    server::ServerOptions so;
    so.bind = o.bind;
    so.port = o.port;
    so.broadcast_hz = o.broadcast_hz;
    server::Server srv(sc, so);
    std::string err;
    if (!srv.start(&err)) {
        spdlog::error("{}", err);
        std::cerr << "error: " << err << "\n";
        return kBind;
    }
    out << "listening on " << o.bind << ":" << srv.port() << std::endl;
    g_stop = false;
    auto prev_int = std::signal(SIGINT, on_signal);
    auto prev_term = std::signal(SIGTERM, on_signal);
    while (!g_stop)
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    srv.stop();
    std::signal(SIGINT, prev_int);
    std::signal(SIGTERM, prev_term);
    out << "stopped" << std::endl;
    return kOk;
}

// ---------------------------------------------------------------------------

int run(int argc, char** argv, std::ostream& out, std::ostream& err)
{
    setup_logging();
    CLI::App app{"Virtual-fixture phase planning toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "vfphase 1.0");

    auto add_overrides = [](CLI::App* sub, Overrides& ov) {
        sub->add_option("--algorithm", ov.algorithm, "Algorithm(s), comma separated: gn, lqt, vm, gc");
        sub->add_option("--seed", ov.seed, "Random seed");
        sub->add_option("--duration", ov.duration, "Scenario duration [s]")->check(CLI::PositiveNumber);
        sub->add_option("--delta", ov.delta, "Resampling spacing [m]")->check(CLI::PositiveNumber);
        sub->add_option("--basis", ov.basis, "Number of Bernstein basis functions")->check(CLI::Range(2, 200));
    };

    FitOptions fit;
    auto* fit_cmd = app.add_subcommand("fit", "Resample a demonstration CSV and fit a constraint path");
    fit_cmd->add_option("csv", fit.csv_in, "Demonstration CSV (x,y,z per row)")->required();
    fit_cmd->add_option("--delta", fit.delta, "Resampling spacing [m]")->check(CLI::PositiveNumber);
    fit_cmd->add_option("--basis", fit.basis, "Number of Bernstein basis functions")->check(CLI::Range(2, 200));
    fit_cmd->add_option("--ridge", fit.ridge, "Ridge weight")->check(CLI::NonNegativeNumber);
    fit_cmd->add_option("--out", fit.out, "Output path file (JSON)");

    EdsFieldOptions eds;
    auto* eds_cmd = app.add_subcommand("eds-field", "Sample projection distance and singularity flags on a grid");
    eds_cmd->add_option("path", eds.path_file, "Constraint path file (JSON)")->required();
    eds_cmd->add_option("--grid", eds.grid, "xmin,xmax,ymin,ymax,nx,ny[,z]");
    eds_cmd->add_option("--nx", eds.nx, "Grid columns when --grid is absent")->check(CLI::Range(2, 5000));
    eds_cmd->add_option("--ny", eds.ny, "Grid rows when --grid is absent")->check(CLI::Range(2, 5000));
    eds_cmd->add_option("--out", eds.out, "Output CSV");

    RunOptions runo;
    auto* run_cmd = app.add_subcommand("run", "Run a scenario document and write traces and metrics");
    run_cmd->add_option("config", runo.config, "Scenario document (JSON)")->required();
    run_cmd->add_option("--out", runo.out_dir, "Output directory");
    add_overrides(run_cmd, runo.overrides);

    DemoOptions demo;
    auto* demo_cmd = app.add_subcommand("demo-reaching", "Phase velocity profiles for a fixed goal and several c2");
    demo_cmd->add_option("config", demo.config, "Scenario document (reaching_demo)");
    demo_cmd->add_option("--c2", demo.c2, "Velocity weights to sweep");
    demo_cmd->add_option("--out", demo.out_dir, "Output directory");
    add_overrides(demo_cmd, demo.overrides);

    ServeOptions serve;
    auto* serve_cmd = app.add_subcommand("serve", "Start the interactive stepping service");
    serve_cmd->add_option("--path", serve.path_file, "Constraint path file (JSON)");
    serve_cmd->add_option("--shape", serve.shape, "Built-in shape when no path file is given");
    serve_cmd->add_option("--config", serve.config, "Scenario document for tracker and plant parameters");
    serve_cmd->add_option("--bind", serve.bind, "Bind address");
    serve_cmd->add_option("--port", serve.port, "TCP port (0 picks one)")->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--algorithm", serve.algorithm, "Initial algorithm");
    serve_cmd->add_option("--broadcast-hz", serve.broadcast_hz, "State broadcast rate")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? kOk : kInput;
    }

    try {
        if (*fit_cmd)
            return cmd_fit(fit, out);
        if (*eds_cmd)
            return cmd_eds_field(eds, out);
        if (*run_cmd)
            return cmd_run(runo, out);
        if (*demo_cmd)
            return cmd_demo_reaching(demo, out);
        if (*serve_cmd)
            return cmd_serve(serve, out);
    } catch (const Error& e) {
        err << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kRuntime;
    }
    return kRuntime;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    std::vector<std::string> storage;
    storage.reserve(args.size() + 1);
    storage.emplace_back("vfphase");
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : storage)
        argv.push_back(s.data());
    argv.push_back(nullptr);
    return run(static_cast<int>(storage.size()), argv.data(), out, err);
}

}  // namespace vfphase::cli
