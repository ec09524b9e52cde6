#include "ragmt/chat_client.hpp"

#include <httplib.h>

#include <cstdlib>

#include "ragmt/error.hpp"

namespace ragmt {

using json = nlohmann::json;

json EndpointConfig::to_json() const {
  return {{"base_url", base_url},
          {"model", model},
          {"api_key_env", api_key_env},
          {"timeout_seconds", timeout_seconds}};
}

EndpointConfig EndpointConfig::from_json(const json& j) { return from_json(j, EndpointConfig{}); }

EndpointConfig EndpointConfig::from_json(const json& j, EndpointConfig defaults) {
  EndpointConfig c = std::move(defaults);
  c.base_url = j.value("base_url", c.base_url);
  c.model = j.value("model", c.model);
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
  return c;
}

ChatClient::ChatClient(EndpointConfig config) : config_(std::move(config)) {
  const auto scheme_end = config_.base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw InvalidArgument("endpoint base_url needs a scheme: " + config_.base_url);
  }
  const auto path_start = config_.base_url.find('/', scheme_end + 3);
  scheme_host_ = config_.base_url.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? "" : config_.base_url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

json ChatClient::post(const std::string& path, const json& body) const {
  httplib::Client cli(scheme_host_);
  cli.set_connection_timeout(config_.timeout_seconds);
  cli.set_read_timeout(config_.timeout_seconds);
  cli.set_write_timeout(config_.timeout_seconds);

  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  auto res = cli.Post(path_prefix_ + path, headers, body.dump(), "application/json");
  if (!res) {
    throw TransportError("request to " + scheme_host_ + path_prefix_ + path +
                         " failed: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    const bool retriable = res->status == 429 || res->status >= 500;
    throw TransportError("HTTP " + std::to_string(res->status) + " from " + path_prefix_ +
                             path + ": " + res->body.substr(0, 512),
                         retriable);
  }
  try {
    return json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw TransportError(std::string("unparseable response body: ") + e.what());
  }
}

std::string ChatClient::complete(const std::string& prompt, const json& params) const {
  json body = params.is_object() ? params : json::object();
  body["model"] = config_.model;
  body["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});
  const json reply = post("/chat/completions", body);
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("chat completion without content: ") + e.what());
  }
}

std::vector<double> ChatClient::embed(const std::string& text) const {
  const json reply = post("/embeddings", {{"model", config_.model}, {"input", text}});
  try {
    return reply.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("embedding response without vector: ") + e.what());
  }
}

}  // namespace ragmt
