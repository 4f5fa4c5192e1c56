#pragma once
/**
 * @file  path_io.hpp
 * @brief CSV ingestion of demonstrations / force traces and the versioned
 *        ConstraintPath JSON document.
 */

#include "vfphase/path_model.hpp"

#include "vfphase/json_fwd.hpp"

#include <string>
#include <vector>

namespace vfphase::io {

inline constexpr const char* kPathFormat = "vfphase.constraint_path";
inline constexpr int kPathVersion = 1;

/// Numeric CSV table. `columns` holds the header names (lower case) or is empty.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<int> line_numbers;  ///< 1-based source line of each row
};

/// Parse numeric CSV text. An optional first non-comment line of names is taken as header.
CsvTable parse_csv(const std::string& text, const std::string& source = "<csv>");
CsvTable read_csv(const std::string& file);

/// Shortest text that parses back to the same double.
std::string format_double(double v);

/// Columns (t,)x,y,z; header names in any order, or 3 / 4 anonymous columns.
path::RawTrajectory trajectory_from_csv(const CsvTable& table, const std::string& source = "<csv>");
path::RawTrajectory read_trajectory_csv(const std::string& file);
std::string trajectory_to_csv(const path::RawTrajectory& traj);

/// Recorded interaction force, columns t,Fx,Fy,Fz.
struct ForceTrace {
    std::vector<double> t;
    std::vector<Vec3> force;
};
ForceTrace force_trace_from_csv(const CsvTable& table, const std::string& source = "<csv>");
ForceTrace read_force_csv(const std::string& file);

Json path_to_json(const path::ConstraintPath& p);
path::ConstraintPath path_from_json(const Json& j);
/// Pretty-printed document with a trailing newline; stable for identical inputs.
std::string path_to_string(const path::ConstraintPath& p);
void save_path(const path::ConstraintPath& p, const std::string& file);
path::ConstraintPath load_path(const std::string& file);

/// Whole-file read / write with io_error on failure.
std::string read_text_file(const std::string& file);
void write_text_file(const std::string& file, const std::string& text);

}  // namespace vfphase::io
