#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dreamhone/dream.hpp"

namespace dreamhone {

// Text formats for dream configuration and trajectories. JSON keys are
// snake_case and mirror the DreamConfig fields.

std::string dream_config_to_json(const DreamConfig& cfg);
/// Missing keys keep the values from `defaults`; unknown keys are rejected.
DreamConfig dream_config_from_json(const std::string& text, const DreamConfig& defaults = {});

/// A schedule file is a JSON list of phase objects.
std::string schedule_to_json(const Schedule& schedule);
Schedule schedule_from_json(const std::string& text, const DreamConfig& defaults = {});
Schedule load_schedule(const std::filesystem::path& path, const DreamConfig& defaults = {});

std::string config_patch_to_json(const ConfigPatch& patch);
/// Rejects unknown keys and the run-fixed fields (iterations, seed).
ConfigPatch config_patch_from_json(const std::string& text);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// "iteration,loss,phase" header plus one row per entry.
std::string trajectory_to_csv(const std::vector<TrajectoryEntry>& rows);
std::vector<TrajectoryEntry> trajectory_from_csv(const std::string& text);

}  // namespace dreamhone
