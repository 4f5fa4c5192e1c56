#pragma once

#include <json.hpp>

namespace vfphase {
/// Insertion-ordered JSON so written documents keep a readable key order.
using Json = nlohmann::ordered_json;
}  // namespace vfphase
