#pragma once
/**
 * @file  cli.hpp
 * @brief Subcommands of the `vfphase` executable.
 *
 * Exit codes: 0 success, 1 runtime failure, 2 bad input or configuration,
 * 3 the server could not bind its address.
 */

#include "vfphase/error.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace vfphase::cli {

enum ExitCode : int { kOk = 0, kRuntime = 1, kInput = 2, kBind = 3 };

int exit_code_for(ErrorCode code);

struct FitOptions {
    std::string csv_in;
    std::string out;        ///< empty: print the path document
    double delta = 0.01;
    int basis = 30;
    double ridge = 0.0;
};

struct EdsFieldOptions {
    std::string path_file;
    std::string out;        ///< empty: print CSV
    std::string grid;       ///< "xmin,xmax,ymin,ymax,nx,ny[,z]"; empty: padded bounding box
    int nx = 200;
    int ny = 200;
};

/// Overrides applied on top of a scenario document.
struct Overrides {
    std::optional<std::string> algorithm;  ///< comma separated list
    std::optional<std::uint64_t> seed;
    std::optional<double> duration;
    std::optional<double> delta;
    std::optional<int> basis;
};

struct RunOptions {
    std::string config;
    std::string out_dir;    ///< empty: out/<scenario name>
    Overrides overrides;
};

struct DemoOptions {
    std::string config;     ///< empty: built-in straight-line demo
    std::string out_dir;    ///< empty: out/reaching_demo
    std::vector<double> c2;
    Overrides overrides;
};

struct ServeOptions {
    std::string path_file;  ///< empty: built-in shape
    std::string shape = "circle";
    std::string config;     ///< optional scenario document for tracker and plant parameters
    std::string bind = "127.0.0.1";
    int port = 8765;
    std::string algorithm = "lqt";
    double broadcast_hz = 50.0;
};

int cmd_fit(const FitOptions& o, std::ostream& out);
int cmd_eds_field(const EdsFieldOptions& o, std::ostream& out);
int cmd_run(const RunOptions& o, std::ostream& out);
int cmd_demo_reaching(const DemoOptions& o, std::ostream& out);
/// Blocks until SIGINT or SIGTERM.
int cmd_serve(const ServeOptions& o, std::ostream& out);

/// Full command line. Errors are reported on `err` and mapped to exit codes.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vfphase::cli
