#include "ragmt/http_service.hpp"

#include <httplib.h>

#include <sstream>

#include "ragmt/text.hpp"

namespace ragmt {

using json = nlohmann::json;

struct HttpService::Impl {
  Workbench& wb;
  httplib::Server server;

  explicit Impl(Workbench& w) : wb(w) {}
};

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  send_json(res, status, {{"code", code}, {"message", message}});
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json j = json::parse(req.body);
  if (!j.is_object()) throw WorkbenchError(400, "invalid_input", "request body must be a JSON object");
  return j;
}

template <typename T>
T field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw WorkbenchError(400, "invalid_input", std::string("missing field '") + name + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw WorkbenchError(400, "invalid_input", std::string("bad type for field '") + name + "'");
  }
}

template <typename T>
T field_or(const json& j, const char* name, T fallback) {
  return j.contains(name) ? field<T>(j, name) : fallback;
}

SelectionChange selection_from(const json& j) {
  if (!j.is_object()) throw WorkbenchError(400, "invalid_input", "selection must be an object");
  return SelectionChange{field<std::size_t>(j, "rank"), field_or<bool>(j, "selected", true),
                         field_or<std::string>(j, "justification", "")};
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const WorkbenchError& e) {
      send_json(res, e.status(), e.to_json());
    } catch (const json::exception& e) {
      send_error(res, 400, "invalid_json", e.what());
    } catch (const InvalidArgument& e) {
      send_error(res, 400, "invalid_input", e.what());
    } catch (const RetriesExhausted& e) {
      send_error(res, 502, "backend_failed", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

}  // namespace

HttpService::HttpService(Workbench& workbench, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(workbench)) {
  auto& srv = impl_->server;
  Workbench& wb = workbench;

  if (static_dir && std::filesystem::is_directory(*static_dir)) {
    srv.set_mount_point("/", static_dir->string());
  }

  srv.Post("/sessions", guarded([&wb](const httplib::Request& req, httplib::Response& res) {
    json b = body_of(req);
    send_json(res, 201, wb.create_session(field<std::string>(b, "sl")).to_json());
  }));
  srv.Get("/sessions", guarded([&wb](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"sessions", wb.list()}});
  }));
  srv.Get(R"(/sessions/([^/]+))", guarded([&wb](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, wb.get(req.matches[1]).to_json());
  }));
  srv.Get(R"(/sessions/([^/]+)/export)", guarded([&wb](const httplib::Request& req, httplib::Response& res) {
    std::string format = req.has_param("format") ? req.get_param_value("format") : "json";
    if (format == "md" || format == "markdown") {
      res.status = 200;
      res.set_content(wb.export_worksheet_markdown(req.matches[1]), "text/markdown; charset=utf-8");
    } else if (format == "json") {
      send_json(res, 200, wb.export_worksheet(req.matches[1]));
    } else {
      throw WorkbenchError(400, "invalid_input", "format must be 'json' or 'md'");
    }
  }));
  srv.Post(R"(/sessions/([^/]+)/(analyze|retrieve|select|compose|generate|postedit|score|archive))",
           guarded([&wb](const httplib::Request& req, httplib::Response& res) {
             const std::string id = req.matches[1];
             const std::string op = req.matches[2];
             json b = body_of(req);
             Session s;
             if (op == "analyze") {
               s = wb.analyze(id);
             } else if (op == "retrieve") {
               std::optional<std::size_t> k;
               if (b.contains("k")) k = field<std::size_t>(b, "k");
               s = wb.retrieve(id, k);
             } else if (op == "select") {
               s = wb.select(id, selection_from(b));
             } else if (op == "compose") {
               std::vector<SelectionChange> changes;
               if (b.contains("selections")) {
                 const json& list = b["selections"];
                 if (!list.is_array()) throw WorkbenchError(400, "invalid_input", "selections must be an array");
                 for (const auto& c : list) changes.push_back(selection_from(c));
               }
               s = wb.compose(id, changes, field_or<std::string>(b, "note", ""));
             } else if (op == "generate") {
               s = wb.generate(id);
             } else if (op == "postedit") {
               s = wb.post_edit(id, field<std::string>(b, "text"), field_or<std::string>(b, "note", ""));
             } else if (op == "score") {
               std::optional<std::string> target;
               if (b.contains("target")) target = field<std::string>(b, "target");
               s = wb.score(id, field<std::string>(b, "reference"), target);
             } else {
               s = wb.archive(id);
             }
             send_json(res, 200, s.to_json());
           }));
  srv.Get("/kb/status", guarded([&wb](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, wb.kb_status());
  }));
  srv.Post("/kb/candidates", guarded([&wb](const httplib::Request& req, httplib::Response& res) {
    json b = body_of(req);
    auto ids = field_or<std::vector<std::string>>(b, "session_ids", {});
    std::ostringstream out;
    write_jsonl(out, wb.export_kb_candidates(ids));
    res.status = 200;
    res.set_content(out.str(), "application/x-ndjson; charset=utf-8");
  }));
  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      send_error(res, res.status, res.status == 404 ? "not_found" : "http_error",
                 "HTTP " + std::to_string(res.status));
    }
  });
}

HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpService::listen() { impl_->server.listen_after_bind(); }

void HttpService::stop() {
  if (impl_) impl_->server.stop();
}

bool HttpService::running() const { return impl_->server.is_running(); }

}  // namespace ragmt
