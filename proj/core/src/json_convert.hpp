#pragma once

// nlohmann/json adapters shared by the library's text formats. Private to
// the core library.

#include <nlohmann/json.hpp>

#include "dreamhone/dream.hpp"

namespace dreamhone::detail {

nlohmann::json to_json(const DreamConfig& cfg);
/// Throws InputError on unknown keys or wrongly typed values.
DreamConfig dream_config_from(const nlohmann::json& j, const DreamConfig& defaults);
Schedule schedule_from(const nlohmann::json& j, const DreamConfig& defaults);
nlohmann::json to_json(const Schedule& schedule);
nlohmann::json to_json(const ConfigPatch& patch);
ConfigPatch config_patch_from(const nlohmann::json& j);

}  // namespace dreamhone::detail
