#pragma once
/**
 * @file  config.hpp
 * @brief Versioned JSON scenario documents.
 *
 * Validation errors carry "source:line: key: message" so a typo in a config
 * file can be found without reading the parser.
 */

#include "vfphase/json_fwd.hpp"
#include "vfphase/scenarios.hpp"

#include <string>

namespace vfphase::config {

inline constexpr const char* kScenarioFormat = "vfphase.scenario";
inline constexpr int kScenarioVersion = 1;

/// Parse a scenario document. Relative file references are resolved against `base_dir`.
scenario::ScenarioConfig parse_scenario(const std::string& text, const std::string& source = "<config>",
                                        const std::string& base_dir = "");
scenario::ScenarioConfig load_scenario(const std::string& file);

/// Canonical document for a config; parse_scenario(dump(to_json(c))) reproduces c.
Json scenario_to_json(const scenario::ScenarioConfig& c);

/// Partial updates used by the interactive session (no line information).
void apply_lqt(const Json& j, lqt::LqtConfig& cfg);
void apply_vm(const Json& j, vm::VmParams& p);
void apply_admittance(const Json& j, plant::AdmittanceParams& p);
Json lqt_to_json(const lqt::LqtConfig& cfg);

}  // namespace vfphase::config
