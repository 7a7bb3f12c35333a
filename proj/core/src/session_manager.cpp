#include "dreamhone/session_manager.hpp"

#include <cstdio>

#include "dreamhone/image_io.hpp"

namespace dreamhone {

const char* session_message_kind_name(SessionMessage::Kind kind) {
  switch (kind) {
    case SessionMessage::Kind::Frame: return "frame";
    case SessionMessage::Kind::PatchAck: return "patch_ack";
    case SessionMessage::Kind::Error: return "error";
    case SessionMessage::Kind::Done: return "done";
  }
  return "unknown";
}

struct SessionManager::Session {
  std::string id;
  std::unique_ptr<DreamSession> dream;
  std::size_t stride = 1;
  std::map<std::string, std::string> inputs;  // PNG bytes for the run record
  std::string created_at;

  mutable std::mutex mu;
  mutable std::condition_variable cv;
  std::vector<SessionMessage> frames;
  bool done = false;
  bool stop = false;
  std::string error;
  std::string run_id;

  std::thread worker;
};

SessionManager::SessionManager(Network net, RunStore* store) : net_(std::move(net)), store_(store) {}

SessionManager::~SessionManager() {
  std::map<std::string, std::shared_ptr<Session>> sessions;
  {
    std::lock_guard lock(mu_);
    sessions.swap(sessions_);
  }
  for (auto& [id, s] : sessions) {
    {
      std::lock_guard lock(s->mu);
      s->stop = true;
    }
    if (s->worker.joinable()) s->worker.join();
  }
}

std::string SessionManager::start_session(SessionRequest request) {
  if (request.stride == 0) throw InputError("stride must be at least 1");
  auto s = std::make_shared<Session>();
  s->inputs["source"] = encode_png(request.source);
  if (request.guide) s->inputs["guide"] = encode_png(*request.guide);
  s->dream = std::make_unique<DreamSession>(net_, std::move(request.source), std::move(request.guide),
                                            std::move(request.schedule));
  s->stride = request.stride;
  s->created_at = utc_timestamp();
  {
    std::lock_guard lock(mu_);
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%llu", static_cast<unsigned long long>(++counter_));
    s->id = buf;
    sessions_[s->id] = s;
  }
  s->worker = std::thread([this, s] { run(s); });
  return s->id;
}

void SessionManager::run(const std::shared_ptr<Session>& s) {
  auto publish = [&](const Frame& f) {
    SessionMessage m;
    m.kind = SessionMessage::Kind::Frame;
    m.iteration = f.iteration;
    m.loss = f.loss;
    m.phase = f.phase;
    m.png = std::make_shared<const std::string>(encode_png(*f.canvas));
    std::lock_guard lock(s->mu);
    s->frames.push_back(std::move(m));
    s->cv.notify_all();
  };
  std::string error;
  std::string run_id;
  try {
    while (s->dream->has_next()) {
      {
        std::lock_guard lock(s->mu);
        if (s->stop) throw Error("session stopped");
      }
      publish(s->dream->advance());
    }
    const Frame last = s->dream->final_frame();
    publish(last);
    if (store_) {
      auto rows = s->dream->trajectory();
      rows.push_back({last.iteration, last.loss, last.phase});
      run_id = store_->save(s->dream->schedule(), s->inputs, *last.canvas, rows, s->created_at).run_id;
    }
  } catch (const std::exception& e) {
    error = e.what();
  }
  std::lock_guard lock(s->mu);
  s->error = error;
  s->run_id = run_id;
  s->done = true;
  s->cv.notify_all();
}

std::shared_ptr<SessionManager::Session> SessionManager::get(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw LookupError("unknown session '" + id + "'");
  return it->second;
}

PatchAck SessionManager::patch_session(const std::string& id, const ConfigPatch& patch) {
  auto s = get(id);
  {
    std::lock_guard lock(s->mu);
    if (s->done) throw SessionFinishedError();
  }
  return s->dream->submit_patch(patch);
}

SessionStatus SessionManager::status(const std::string& id) const {
  auto s = get(id);
  SessionStatus st;
  st.session_id = s->id;
  st.total_iterations = s->dream->total_iterations();
  st.iterations_started = s->dream->started();
  std::lock_guard lock(s->mu);
  if (!s->frames.empty()) st.latest_frame = s->frames.back().iteration;
  st.done = s->done;
  st.error = s->error;
  st.run_id = s->run_id;
  return st;
}

std::vector<std::string> SessionManager::session_ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> ids;
  for (const auto& [id, s] : sessions_) ids.push_back(id);
  return ids;
}

FeedBatch SessionManager::poll(const std::string& id, long long since, std::size_t stride,
                               std::chrono::milliseconds timeout) const {
  auto s = get(id);
  if (stride == 0) stride = s->stride;
  const std::size_t final_iteration = s->dream->total_iterations();
  auto fresh = [&] {
    return s->done || (!s->frames.empty() && static_cast<long long>(s->frames.back().iteration) > since);
  };
  std::unique_lock lock(s->mu);
  if (timeout.count() > 0) s->cv.wait_for(lock, timeout, fresh);

  FeedBatch batch;
  batch.cursor = since;
  for (const auto& f : s->frames) {
    if (static_cast<long long>(f.iteration) <= since) continue;
    batch.cursor = static_cast<long long>(f.iteration);
    if (f.iteration % stride != 0 && f.iteration != final_iteration) continue;
    batch.messages.push_back(f);
  }
  if (s->done) {
    if (!s->error.empty()) {
      SessionMessage e;
      e.kind = SessionMessage::Kind::Error;
      e.error = s->error;
      batch.messages.push_back(std::move(e));
    }
    SessionMessage d;
    d.kind = SessionMessage::Kind::Done;
    batch.messages.push_back(std::move(d));
    batch.done = true;
  }
  return batch;
}

void SessionManager::stream_frames(const std::string& id, long long since,
                                   const std::function<bool(const SessionMessage&)>& on_message,
                                   std::size_t stride) const {
  for (;;) {
    const FeedBatch batch = poll(id, since, stride, std::chrono::milliseconds(200));
    for (const auto& m : batch.messages)
      if (!on_message(m)) return;
    if (batch.done) return;
    since = batch.cursor;
  }
}

void SessionManager::wait(const std::string& id) const {
  auto s = get(id);
  std::unique_lock lock(s->mu);
  s->cv.wait(lock, [&] { return s->done; });
}

}  // namespace dreamhone
