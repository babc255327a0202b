#include "persona_eval/annotation_server.hpp"

#include <atomic>

#include "httplib.h"
#include "json.hpp"
#include "json_io.hpp"
#include "persona_eval/errors.hpp"

namespace persona_eval {

using nlohmann::json;

namespace {

constexpr const char* kPlaceholder =
    "<!doctype html>\n<html><head><meta charset=\"utf-8\"><title>Persona annotation</title></head>\n"
    "<body><p>The annotation UI bundle is not installed. The JSON API is available under /api.</p></body></html>\n";

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view message) {
  send_json(res, status, {{"error", message}});
}

std::string required_annotator(const httplib::Request& req) {
  const auto a = req.get_param_value("annotator");
  if (a.empty()) throw InvalidArgument("missing 'annotator' query parameter");
  return a;
}

json task_to_json(const std::string& session, const AnnotationTask& t, std::pair<std::size_t, std::size_t> progress) {
  return {{"session_id", session},
          {"task_id", t.task_id},
          {"dialogue_id", t.dialogue_id},
          {"participant", to_string(t.participant)},
          {"dialogue", t.dialogue_text},
          {"extracted", t.extracted},
          {"target", t.target},
          {"progress", {{"done", progress.first}, {"total", progress.second}}}};
}

json correlation_to_json(const CorrelationReport& rep) {
  json series = json::array();
  for (const auto& s : rep.series) {
    series.push_back({{"name", s.name},
                      {"manual", s.manual},
                      {"automatic", s.automatic},
                      {"r", s.r ? json(*s.r) : json(nullptr)}});
  }
  return {{"sample_size", rep.sample_size},
          {"series", std::move(series)},
          {"manual", detail::report_to_json(rep.manual)},
          {"automatic", detail::report_to_json(rep.automatic)}};
}

template <class F>
void guarded(httplib::Response& res, F&& body) {
  try {
    body();
  } catch (const UnknownSession& e) {
    send_error(res, 404, e.what());
  } catch (const UnknownTask& e) {
    send_error(res, 404, e.what());
  } catch (const NoDecisions& e) {
    send_error(res, 409, e.what());
  } catch (const SampleTooLarge& e) {
    send_error(res, 409, e.what());
  } catch (const BackendError& e) {
    send_error(res, 502, e.what());
  } catch (const Error& e) {
    send_error(res, 400, e.what());
  } catch (const json::exception& e) {
    send_error(res, 400, std::string("malformed request: ") + e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

json parse_body(const httplib::Request& req) {
  auto body = json::parse(req.body);
  if (!body.is_object()) throw InvalidArgument("request body must be a JSON object");
  return body;
}

}  // namespace

struct AnnotationServer::Impl {
  AnnotationStore& store;
  AnnotationServerOptions options;
  httplib::Server server;
  std::atomic<bool> bound{false};

  Impl(AnnotationStore& s, AnnotationServerOptions o) : store(s), options(std::move(o)) {
    // httplib defaults to SO_REUSEPORT, which lets a second server share a
    // busy port instead of failing to bind.
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    routes();
  }

  void routes() {
    server.Post("/api/session", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto body = parse_body(req);
        const auto dialogues = load_dialogues(body.at("dialogues").get<std::string>());
        const auto records = load_extractions(body.at("extractions").get<std::string>());
        check_references(records, dialogues);
        const auto id = store.create_session(dialogues, records, body.at("sample_size").get<std::size_t>(),
                                             body.value("seed", std::uint64_t{0}), options.evaluator);
        send_json(res, 201, {{"session_id", id}, {"tasks", store.tasks(id).size()}});
      });
    });

    server.Get(R"(/api/session/([^/]+)/next)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string session = req.matches[1];
        const auto annotator = required_annotator(req);
        const auto task = store.next_task(session, annotator);
        if (!task) {
          send_json(res, 200, {{"session_id", session}, {"done", true}});
          return;
        }
        auto out = task_to_json(session, *task, store.progress(session, annotator));
        out["done"] = false;
        if (req.get_param_value("show_auto") == "1") {
          const auto a = store.auto_result(session, task->task_id);
          out["auto_outcome"] = a ? detail::outcome_to_json(a->outcome) : json(nullptr);
        }
        send_json(res, 200, out);
      });
    });

    server.Post(R"(/api/session/([^/]+)/decision)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto body = parse_body(req);
        AnnotationDecision d;
        d.session_id = req.matches[1];
        d.task_id = body.at("task_id").get<std::size_t>();
        d.annotator_id = body.at("annotator").get<std::string>();
        for (const auto& p : body.at("pairs")) {
          d.pairs.emplace_back(p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>());
        }
        d.notes = body.value("notes", std::string());
        const auto annotator = d.annotator_id;
        const auto session = d.session_id;
        store.submit_decision(std::move(d));
        const auto [done, total] = store.progress(session, annotator);
        send_json(res, 200, {{"ok", true}, {"progress", {{"done", done}, {"total", total}}}});
      });
    });

    server.Get(R"(/api/session/([^/]+)/metrics)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string session = req.matches[1];
        send_json(res, 200, detail::report_to_json(store.manual_metrics(session, required_annotator(req))));
      });
    });

    server.Get(R"(/api/session/([^/]+)/correlation)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string session = req.matches[1];
        send_json(res, 200, correlation_to_json(store.correlation(session, required_annotator(req))));
      });
    });

    server.Get("/api/sessions", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, {{"sessions", store.sessions()}}); });
    });

    const bool mounted = options.ui_dir && server.set_mount_point("/", options.ui_dir->string());
    if (!mounted) {
      server.Get("/", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(kPlaceholder, "text/html; charset=utf-8");
      });
    }
  }
};

AnnotationServer::AnnotationServer(AnnotationStore& store, AnnotationServerOptions options)
    : impl_(std::make_unique<Impl>(store, std::move(options))) {}

AnnotationServer::~AnnotationServer() { stop(); }

std::optional<int> AnnotationServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = impl_->server.bind_to_any_port(host);
    if (p < 0) return std::nullopt;
    impl_->bound = true;
    return p;
  }
  if (!impl_->server.bind_to_port(host, port)) return std::nullopt;
  impl_->bound = true;
  return port;
}

void AnnotationServer::serve() {
  if (!impl_->bound) throw InvalidArgument("server is not bound");
  impl_->server.listen_after_bind();
}

void AnnotationServer::stop() {
  if (impl_->bound) impl_->server.stop();
}

bool AnnotationServer::running() const { return impl_->server.is_running(); }

}  // namespace persona_eval
