#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "dreamhone/dream.hpp"

namespace dreamhone {

std::string sha256_hex(const std::string& bytes);

/// Persisted description of one completed dream run.
struct RunRecord {
  std::string run_id;
  std::string config_json;                         // schedule snapshot
  std::map<std::string, std::string> input_hashes;  // input name -> sha256 hex
  std::map<std::string, std::string> outputs;       // output name -> path
  std::string trajectory_path;
  std::string created_at;   // ISO 8601, UTC
  std::string finished_at;  // ISO 8601, UTC

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

std::string run_record_to_json(const RunRecord& record);
RunRecord run_record_from_json(const std::string& text);

/// Directory-per-run store with an append-only index.jsonl at the root.
///
///   <root>/index.jsonl
///   <root>/<run_id>/config.json, source.png, guide.png, final.png, trajectory.csv
class RunStore {
 public:
  explicit RunStore(std::filesystem::path root);

  /// Root from DREAMHONE_DATA_DIR, falling back to ./dreamhone-data.
  static std::filesystem::path default_root();

  const std::filesystem::path& root() const noexcept { return root_; }

  /// Writes the run directory and appends the record to the index.
  /// `inputs` maps names such as "source" and "guide" to PNG bytes.
  RunRecord save(const Schedule& schedule, const std::map<std::string, std::string>& inputs,
                 const Tensor& final_canvas, const std::vector<TrajectoryEntry>& trajectory,
                 const std::string& created_at);

  /// Records from the index in insertion order.
  std::vector<RunRecord> list() const;
  std::optional<RunRecord> find(const std::string& run_id) const;

 private:
  std::string next_id();

  std::filesystem::path root_;
  mutable std::mutex mu_;
};

std::string utc_timestamp();

}  // namespace dreamhone
