#pragma once

#include <memory>
#include <string>

#include "dreamhone/run_store.hpp"
#include "dreamhone/session_manager.hpp"

namespace dreamhone {

std::string base64_encode(const std::string& bytes);
/// Throws InputError on malformed input.
std::string base64_decode(const std::string& text);

/// JSON description of the live-patchable fields and their ranges.
std::string capabilities_json(const Network& net);

/// One server-sent event, "event: <kind>\nid: <n>\ndata: <json>\n\n".
std::string sse_event(const SessionMessage& message);

/// HTTP + JSON control plane over a SessionManager:
///
///   GET   /capabilities
///   POST  /sessions
///   GET   /sessions/{id}
///   PATCH /sessions/{id}
///   GET   /sessions/{id}/frames?since=&stride=   (text/event-stream)
///   GET   /runs
class HttpService {
 public:
  HttpService(SessionManager& sessions, RunStore* store);
  ~HttpService();

  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Binds and serves until stop(). Returns false if binding failed.
  bool listen(const std::string& host, int port);
  /// Binds to an ephemeral port; serve with listen_after_bind().
  int bind_any_port(const std::string& host);
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dreamhone
