#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dreamhone/dream.hpp"
#include "dreamhone/run_store.hpp"

namespace dreamhone {

struct SessionMessage {
  enum class Kind { Frame, PatchAck, Error, Done };

  Kind kind = Kind::Frame;
  std::size_t iteration = 0;
  double loss = 0.0;
  std::size_t phase = 0;
  std::shared_ptr<const std::string> png;  // frame image, 8-bit RGB PNG
  std::size_t applied_at = 0;
  std::string error;
};

const char* session_message_kind_name(SessionMessage::Kind kind);

struct SessionRequest {
  Schedule schedule;
  Tensor source;
  std::optional<Tensor> guide;
  std::size_t stride = 1;  // default decimation for streams of this session
};

struct SessionStatus {
  std::string session_id;
  std::size_t total_iterations = 0;
  std::size_t iterations_started = 0;
  std::optional<std::size_t> latest_frame;
  bool done = false;
  std::string error;
  std::string run_id;
};

/// Batch of messages for a stream cursor.
struct FeedBatch {
  std::vector<SessionMessage> messages;
  bool done = false;  // the last message is Done; nothing further will come
  long long cursor = -1;  // pass as `since` to continue after this batch
};

/// Owns live dream sessions. Each session runs on its own worker thread;
/// control calls may come from any thread.
class SessionManager {
 public:
  /// `store` may be null, in which case finished runs are not persisted.
  SessionManager(Network net, RunStore* store = nullptr);
  ~SessionManager();

  SessionManager(const SessionManager&) = delete;
  SessionManager& operator=(const SessionManager&) = delete;

  const Network& network() const noexcept { return net_; }

  /// Validates the request and starts the iteration loop. Throws on an
  /// invalid config; no session is created in that case.
  std::string start_session(SessionRequest request);

  /// Queues a partial config for the next iteration boundary.
  PatchAck patch_session(const std::string& id, const ConfigPatch& patch);

  SessionStatus status(const std::string& id) const;
  std::vector<std::string> session_ids() const;

  /// Frames with iteration > since that pass the stride filter (every
  /// stride-th iteration plus the final one), then Done once the run has
  /// finished. Waits up to `timeout` when nothing new is available.
  /// stride 0 uses the session's default.
  FeedBatch poll(const std::string& id, long long since, std::size_t stride = 0,
                 std::chrono::milliseconds timeout = std::chrono::milliseconds(0)) const;

  /// Blocking feed. Calls `on_message` in order until Done or until it
  /// returns false.
  void stream_frames(const std::string& id, long long since, const std::function<bool(const SessionMessage&)>& on_message,
                     std::size_t stride = 0) const;

  /// Blocks until the session has finished.
  void wait(const std::string& id) const;

 private:
  struct Session;

  std::shared_ptr<Session> get(const std::string& id) const;
  void run(const std::shared_ptr<Session>& s);

  Network net_;
  RunStore* store_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t counter_ = 0;
};

}  // namespace dreamhone
