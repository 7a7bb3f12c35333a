#include "dreamhone/run_store.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <memory>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

#include "dreamhone/config_io.hpp"
#include "dreamhone/image_io.hpp"

namespace dreamhone {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(const std::string& bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw Error("sha256 failed");
  std::string hex;
  hex.reserve(2 * len);
  static constexpr char kDigits[] = "0123456789abcdef";
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kDigits[digest[i] >> 4]);
    hex.push_back(kDigits[digest[i] & 0xF]);
  }
  return hex;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string run_record_to_json(const RunRecord& r) {
  json j = {{"run_id", r.run_id},
            {"config", json::parse(r.config_json)},
            {"input_hashes", r.input_hashes},
            {"outputs", r.outputs},
            {"trajectory_path", r.trajectory_path},
            {"created_at", r.created_at},
            {"finished_at", r.finished_at}};
  return j.dump();
}

RunRecord run_record_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    RunRecord r;
    r.run_id = j.at("run_id").get<std::string>();
    r.config_json = j.at("config").dump();
    r.input_hashes = j.at("input_hashes").get<std::map<std::string, std::string>>();
    r.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
    r.trajectory_path = j.at("trajectory_path").get<std::string>();
    r.created_at = j.at("created_at").get<std::string>();
    r.finished_at = j.at("finished_at").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("run record: ") + e.what(), 0);
  }
}

RunStore::RunStore(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

fs::path RunStore::default_root() {
  if (const char* env = std::getenv("DREAMHONE_DATA_DIR"); env && *env) return env;
  return fs::current_path() / "dreamhone-data";
}

std::string RunStore::next_id() {
  static thread_local std::mt19937_64 gen{std::random_device{}()};
  for (;;) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(gen()));
    std::string id = "run-" + std::string(buf);
    if (!fs::exists(root_ / id)) return id;
  }
}

RunRecord RunStore::save(const Schedule& schedule, const std::map<std::string, std::string>& inputs,
                         const Tensor& final_canvas, const std::vector<TrajectoryEntry>& trajectory,
                         const std::string& created_at) {
  std::lock_guard lock(mu_);
  RunRecord r;
  r.run_id = next_id();
  const fs::path dir = root_ / r.run_id;
  fs::create_directories(dir);

  r.config_json = schedule_to_json(schedule);
  write_file(dir / "config.json", r.config_json);
  for (const auto& [name, bytes] : inputs) {
    write_file(dir / (name + ".png"), bytes);
    r.input_hashes[name] = sha256_hex(bytes);
  }
  const fs::path final_path = dir / "final.png";
  save_png(final_canvas, final_path);
  r.outputs["final"] = final_path.string();
  const fs::path traj_path = dir / "trajectory.csv";
  write_file(traj_path, trajectory_to_csv(trajectory));
  r.trajectory_path = traj_path.string();
  r.created_at = created_at;
  r.finished_at = utc_timestamp();

  std::ofstream index(root_ / "index.jsonl", std::ios::app | std::ios::binary);
  if (!index) throw Error("cannot open run index in " + root_.string());
  index << run_record_to_json(r) << '\n';
  if (!index.flush()) throw Error("cannot append to run index in " + root_.string());
  return r;
}

std::vector<RunRecord> RunStore::list() const {
  std::lock_guard lock(mu_);
  std::vector<RunRecord> out;
  std::ifstream index(root_ / "index.jsonl", std::ios::binary);
  std::string line;
  while (std::getline(index, line))
    if (!line.empty()) out.push_back(run_record_from_json(line));
  return out;
}

std::optional<RunRecord> RunStore::find(const std::string& run_id) const {
  for (auto& r : list())
    if (r.run_id == run_id) return r;
  return std::nullopt;
}

}  // namespace dreamhone
