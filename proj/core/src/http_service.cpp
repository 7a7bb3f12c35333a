#include "dreamhone/http_service.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "dreamhone/config_io.hpp"
#include "dreamhone/image_io.hpp"
#include "json_convert.hpp"

namespace dreamhone {

using nlohmann::json;

std::string base64_encode(const std::string& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_decode(const std::string& text) {
  std::string clean;
  clean.reserve(text.size());
  for (char c : text)
    if (c != '\n' && c != '\r' && c != ' ') clean.push_back(c);
  if (clean.size() % 4 != 0) throw InputError("base64 length is not a multiple of 4");
  std::string out(3 * clean.size() / 4, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(clean.data()), static_cast<int>(clean.size()));
  if (n < 0) throw InputError("malformed base64");
  std::size_t pad = 0;
  if (!clean.empty() && clean.back() == '=') ++pad;
  if (clean.size() > 1 && clean[clean.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

std::string capabilities_json(const Network& net) {
  json layers = json::array();
  std::vector<std::string> spatial;
  for (const auto& name : net.layer_names()) {
    const Shape& d = net.layer_dims(name);
    layers.push_back({{"name", name}, {"dims", d}, {"spatial", d.size() == 3}});
    if (d.size() == 3) spatial.push_back(name);
  }
  const Shape& in = net.input_dims();
  const DreamConfig defaults;
  json j = {
      {"input_dims", in},
      {"layers", layers},
      {"loss_modes", {loss_mode_name(LossMode::DotMax), loss_mode_name(LossMode::DistMin)}},
      {"patchable_fields", {"layer_name", "mode", "step_size", "patch_size", "jitter", "clamp", "guide_blend"}},
      {"sliders",
       {{"layer_name", {{"options", spatial}, {"default", defaults.layer_name}}},
        {"step_size", {{"min", 1e-5}, {"max", 1.0}, {"default", defaults.step_size}}},
        {"guide_blend", {{"min", 0.0}, {"max", 1.0}, {"default", defaults.guide_blend}}},
        {"jitter", {{"min", 0}, {"max", std::min<std::size_t>(16, in[1] / 2)}, {"default", defaults.jitter}}}}}};
  return j.dump();
}

std::string sse_event(const SessionMessage& m) {
  json data;
  std::string out = std::string("event: ") + session_message_kind_name(m.kind) + "\n";
  switch (m.kind) {
    case SessionMessage::Kind::Frame:
      out += "id: " + std::to_string(m.iteration) + "\n";
      data = {{"iteration", m.iteration},
              {"loss", m.loss},
              {"phase", m.phase},
              {"image_png_base64", m.png ? base64_encode(*m.png) : std::string()}};
      break;
    case SessionMessage::Kind::PatchAck:
      data = {{"applied_at", m.applied_at}};
      break;
    case SessionMessage::Kind::Error:
      data = {{"error", m.error}};
      break;
    case SessionMessage::Kind::Done:
      data = json::object();
      break;
  }
  out += "data: " + data.dump() + "\n\n";
  return out;
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

/// Runs `fn`, mapping library errors to HTTP status codes.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const SessionFinishedError& e) {
    send_error(res, 409, e.what());
  } catch (const LookupError& e) {
    send_error(res, 404, e.what());
  } catch (const json::exception& e) {
    send_error(res, 400, std::string("malformed JSON: ") + e.what());
  } catch (const Error& e) {
    send_error(res, 400, e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

Tensor image_field(const json& body, const std::string& name) {
  if (body.contains(name + "_png_base64"))
    return decode_png(base64_decode(body.at(name + "_png_base64").get<std::string>()), name);
  if (body.contains(name + "_path")) return load_png(body.at(name + "_path").get<std::string>());
  throw InputError("missing " + name + "_png_base64 or " + name + "_path");
}

long long parse_integer(const std::string& text, const char* what) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw InputError(std::string("invalid ") + what + " '" + text + "'");
  return v;
}

json status_json(const SessionStatus& st) {
  json j = {{"session_id", st.session_id},
            {"total_iterations", st.total_iterations},
            {"iterations_started", st.iterations_started},
            {"latest_frame", st.latest_frame ? json(*st.latest_frame) : json(nullptr)},
            {"done", st.done},
            {"error", st.error.empty() ? json(nullptr) : json(st.error)},
            {"run_id", st.run_id.empty() ? json(nullptr) : json(st.run_id)}};
  return j;
}

}  // namespace

struct HttpService::Impl {
  SessionManager& sessions;
  RunStore* store;
  httplib::Server server;

  Impl(SessionManager& s, RunStore* r) : sessions(s), store(r) { routes(); }

  void routes() {
    server.Get("/capabilities", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(capabilities_json(sessions.network()), "application/json");
    });

    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const json body = json::parse(req.body);
        if (!body.is_object()) throw InputError("request body must be a JSON object");
        SessionRequest r;
        r.source = image_field(body, "source");
        if (body.contains("guide_png_base64") || body.contains("guide_path")) r.guide = image_field(body, "guide");
        if (body.contains("schedule"))
          r.schedule = detail::schedule_from(body.at("schedule"), DreamConfig{});
        else if (body.contains("config"))
          r.schedule = Schedule::single(detail::dream_config_from(body.at("config"), DreamConfig{}));
        else
          r.schedule = Schedule::single(DreamConfig{});
        if (body.contains("stride")) {
          const long long stride = body.at("stride").get<long long>();
          if (stride < 1) throw InputError("stride must be at least 1");
          r.stride = static_cast<std::size_t>(stride);
        }
        const std::size_t total = r.schedule.total_iterations();
        const std::string id = sessions.start_session(std::move(r));
        send_json(res, 201, {{"session_id", id}, {"total_iterations", total}});
      });
    });

    server.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, status_json(sessions.status(req.matches[1]))); });
    });

    server.Patch(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const ConfigPatch patch = config_patch_from_json(req.body);
        const PatchAck ack = sessions.patch_session(req.matches[1], patch);
        send_json(res, 200, {{"kind", "patch_ack"}, {"applied_at", ack.applied_at}});
      });
    });

    server.Get(R"(/sessions/([^/]+)/frames)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string id = req.matches[1];
        long long since = -1;
        if (req.has_param("since"))
          since = parse_integer(req.get_param_value("since"), "since");
        else if (req.has_header("Last-Event-ID"))
          since = parse_integer(req.get_header_value("Last-Event-ID"), "Last-Event-ID");
        std::size_t stride = 0;
        if (req.has_param("stride")) {
          const long long s = parse_integer(req.get_param_value("stride"), "stride");
          if (s < 1) throw InputError("stride must be at least 1");
          stride = static_cast<std::size_t>(s);
        }
        sessions.status(id);  // unknown session -> 404 before streaming starts
        auto cursor = std::make_shared<long long>(since);
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(
            "text/event-stream", [this, id, stride, cursor](std::size_t, httplib::DataSink& sink) {
              FeedBatch batch;
              try {
                batch = sessions.poll(id, *cursor, stride, std::chrono::milliseconds(250));
              } catch (const std::exception&) {
                return false;
              }
              for (const auto& m : batch.messages) {
                const std::string ev = sse_event(m);
                if (!sink.write(ev.data(), ev.size())) return false;
              }
              *cursor = batch.cursor;
              if (batch.done) sink.done();
              return true;
            });
      });
    });

    server.Get("/runs", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] {
        json runs = json::array();
        if (store)
          for (const auto& r : store->list()) runs.push_back(json::parse(run_record_to_json(r)));
        send_json(res, 200, runs);
      });
    });
  }
};

HttpService::HttpService(SessionManager& sessions, RunStore* store)
    : impl_(std::make_unique<Impl>(sessions, store)) {}

HttpService::~HttpService() { stop(); }

bool HttpService::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int HttpService::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool HttpService::listen_after_bind() { return impl_->server.listen_after_bind(); }

void HttpService::stop() { impl_->server.stop(); }

void HttpService::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace dreamhone
