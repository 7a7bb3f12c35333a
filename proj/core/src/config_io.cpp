#include "dreamhone/config_io.hpp"

#include <charconv>
#include <set>
#include <sstream>

#include "dreamhone/image_io.hpp"
#include "json_convert.hpp"

namespace dreamhone {

using nlohmann::json;

namespace detail {

namespace {

template <typename T>
T field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError(std::string("field '") + key + "' has the wrong type");
  }
}

std::size_t count_field(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw InputError(std::string("field '") + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

double real_field(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number()) throw InputError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

void reject_unknown(const json& j, const std::set<std::string>& known, const char* what) {
  if (!j.is_object()) throw InputError(std::string(what) + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw InputError(std::string("unknown ") + what + " field '" + it.key() + "'");
}

const std::set<std::string> kConfigKeys = {"layer_name", "mode",  "step_size", "iterations", "patch_size",
                                           "jitter",     "clamp", "seed",      "guide_blend"};

}  // namespace

json to_json(const DreamConfig& cfg) {
  return {{"layer_name", cfg.layer_name}, {"mode", loss_mode_name(cfg.mode)},
          {"step_size", cfg.step_size},   {"iterations", cfg.iterations},
          {"patch_size", cfg.patch_size}, {"jitter", cfg.jitter},
          {"clamp", cfg.clamp},           {"seed", cfg.seed},
          {"guide_blend", cfg.guide_blend}};
}

DreamConfig dream_config_from(const json& j, const DreamConfig& defaults) {
  reject_unknown(j, kConfigKeys, "config");
  DreamConfig cfg = defaults;
  if (j.contains("layer_name")) cfg.layer_name = field<std::string>(j, "layer_name");
  if (j.contains("mode")) cfg.mode = parse_loss_mode(field<std::string>(j, "mode"));
  if (j.contains("step_size")) cfg.step_size = real_field(j, "step_size");
  if (j.contains("iterations")) cfg.iterations = count_field(j, "iterations");
  if (j.contains("patch_size")) cfg.patch_size = count_field(j, "patch_size");
  if (j.contains("jitter")) cfg.jitter = count_field(j, "jitter");
  if (j.contains("clamp")) cfg.clamp = field<bool>(j, "clamp");
  if (j.contains("seed")) cfg.seed = count_field(j, "seed");
  if (j.contains("guide_blend")) cfg.guide_blend = real_field(j, "guide_blend");
  cfg.validate();
  return cfg;
}

json to_json(const Schedule& schedule) {
  json arr = json::array();
  for (const auto& p : schedule.phases) arr.push_back(to_json(p));
  return arr;
}

Schedule schedule_from(const json& j, const DreamConfig& defaults) {
  if (!j.is_array()) throw InputError("schedule must be a JSON list of phases");
  Schedule s;
  for (const auto& p : j) s.phases.push_back(dream_config_from(p, defaults));
  if (s.phases.empty()) throw InputError("schedule has no phases");
  return s;
}

json to_json(const ConfigPatch& patch) {
  json j = json::object();
  if (patch.layer_name) j["layer_name"] = *patch.layer_name;
  if (patch.mode) j["mode"] = loss_mode_name(*patch.mode);
  if (patch.step_size) j["step_size"] = *patch.step_size;
  if (patch.patch_size) j["patch_size"] = *patch.patch_size;
  if (patch.jitter) j["jitter"] = *patch.jitter;
  if (patch.clamp) j["clamp"] = *patch.clamp;
  if (patch.guide_blend) j["guide_blend"] = *patch.guide_blend;
  return j;
}

ConfigPatch config_patch_from(const json& j) {
  if (j.is_object() && (j.contains("iterations") || j.contains("seed")))
    throw InputError("iterations and seed cannot be changed on a running dream");
  reject_unknown(j, {"layer_name", "mode", "step_size", "patch_size", "jitter", "clamp", "guide_blend"}, "patch");
  ConfigPatch p;
  if (j.contains("layer_name")) p.layer_name = field<std::string>(j, "layer_name");
  if (j.contains("mode")) p.mode = parse_loss_mode(field<std::string>(j, "mode"));
  if (j.contains("step_size")) p.step_size = real_field(j, "step_size");
  if (j.contains("patch_size")) p.patch_size = count_field(j, "patch_size");
  if (j.contains("jitter")) p.jitter = count_field(j, "jitter");
  if (j.contains("clamp")) p.clamp = field<bool>(j, "clamp");
  if (j.contains("guide_blend")) p.guide_blend = real_field(j, "guide_blend");
  return p;
}

}  // namespace detail

namespace {

json parse(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("invalid ") + what + " JSON: " + e.what());
  }
}

}  // namespace

std::string dream_config_to_json(const DreamConfig& cfg) { return detail::to_json(cfg).dump(); }

DreamConfig dream_config_from_json(const std::string& text, const DreamConfig& defaults) {
  return detail::dream_config_from(parse(text, "config"), defaults);
}

std::string schedule_to_json(const Schedule& schedule) { return detail::to_json(schedule).dump(2); }

Schedule schedule_from_json(const std::string& text, const DreamConfig& defaults) {
  return detail::schedule_from(parse(text, "schedule"), defaults);
}

Schedule load_schedule(const std::filesystem::path& path, const DreamConfig& defaults) {
  return schedule_from_json(read_file(path), defaults);
}

std::string config_patch_to_json(const ConfigPatch& patch) { return detail::to_json(patch).dump(); }

ConfigPatch config_patch_from_json(const std::string& text) {
  return detail::config_patch_from(parse(text, "patch"));
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string trajectory_to_csv(const std::vector<TrajectoryEntry>& rows) {
  std::string out = "iteration,loss,phase\n";
  for (const auto& r : rows)
    out += std::to_string(r.iteration) + "," + format_double(r.loss) + "," + std::to_string(r.phase) + "\n";
  return out;
}

std::vector<TrajectoryEntry> trajectory_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::vector<TrajectoryEntry> rows;
  if (!std::getline(is, line) || line != "iteration,loss,phase")
    throw FormatError("trajectory CSV header missing", 0);
  std::uint64_t offset = line.size() + 1;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    TrajectoryEntry e;
    const auto a = line.find(',');
    const auto b = line.find(',', a == std::string::npos ? a : a + 1);
    if (a == std::string::npos || b == std::string::npos) throw FormatError("malformed trajectory row", offset);
    const char* s = line.data();
    const auto r1 = std::from_chars(s, s + a, e.iteration);
    const auto r2 = std::from_chars(s + a + 1, s + b, e.loss);
    const auto r3 = std::from_chars(s + b + 1, s + line.size(), e.phase);
    if (r1.ec != std::errc{} || r2.ec != std::errc{} || r3.ec != std::errc{})
      throw FormatError("malformed trajectory row", offset);
    rows.push_back(e);
    offset += line.size() + 1;
  }
  return rows;
}

}  // namespace dreamhone
