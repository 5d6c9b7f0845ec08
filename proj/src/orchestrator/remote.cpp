#include <cstdlib>

#include "httplib.h"

#include "ces/core/error.hpp"
#include "ces/core/log.hpp"
#include "ces/core/serialize.hpp"
#include "ces/orchestrator/backend.hpp"

namespace ces {

namespace {

struct Url {
  std::string base;  // scheme://host:port
  std::string path;
};

Url split_url(const std::string& endpoint) {
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) {
    throw Error(Errc::ConfigError, "remote endpoint must look like http://host:port/path");
  }
  const auto slash = endpoint.find('/', scheme + 3);
  if (slash == std::string::npos) return {endpoint, "/"};
  return {endpoint.substr(0, slash), endpoint.substr(slash)};
}

}  // namespace

RemoteBackend::RemoteBackend(AgentRole role, RemoteConfig cfg)
    : PolicyBackend(role), cfg_(std::move(cfg)) {
  split_url(cfg_.endpoint);
  if (cfg_.timeout_ms <= 0) throw Error(Errc::ConfigError, "remote timeout_ms must be > 0");
  if (cfg_.retries < 0) throw Error(Errc::ConfigError, "remote retries must be >= 0");
}

BackendResponse RemoteBackend::attempt(const BackendRequest& req) const {
  const Url url = split_url(cfg_.endpoint);
  httplib::Client client(url.base);
  const time_t sec = cfg_.timeout_ms / 1000;
  const time_t usec = (cfg_.timeout_ms % 1000) * 1000;
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);

  httplib::Headers headers;
  for (const auto& [k, v] : cfg_.headers) headers.emplace(k, v);
  if (!cfg_.api_key_env.empty()) {
    if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  Json messages = Json::array();
  for (const auto& m : req.messages) messages.push_back(Json{{"role", m.role}, {"content", m.content}});
  const Json body{{"model", cfg_.model},
                  {"messages", std::move(messages)},
                  {"temperature", cfg_.temperature},
                  {"max_tokens", cfg_.max_tokens}};

  auto res = client.Post(url.path, headers, body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    const std::string what = httplib::to_string(err);
    if (err == httplib::Error::Read || err == httplib::Error::Write) {
      throw Error(Errc::Timeout, "remote call timed out: " + what);
    }
    throw Error(Errc::BackendUnreachable, "remote endpoint unreachable: " + what);
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(Errc::MalformedResponse, "remote status " + std::to_string(res->status));
  }
  Json reply;
  try {
    reply = Json::parse(res->body);
  } catch (const Json::parse_error&) {
    throw Error(Errc::MalformedResponse, "remote reply is not JSON");
  }
  try {
    if (reply.contains("choices")) {
      return {reply.at("choices").at(0).at("message").at("content").get<std::string>(), {}};
    }
    if (reply.contains("content")) return {reply.at("content").get<std::string>(), {}};
  } catch (const Json::exception&) {
  }
  throw Error(Errc::MalformedResponse, "remote reply lacks generated text");
}

BackendResponse RemoteBackend::generate(const BackendRequest& req, Rng&) const {
  for (int attempt_no = 0;; ++attempt_no) {
    try {
      return attempt(req);
    } catch (const Error& e) {
      const bool retryable = e.code() == Errc::Timeout || e.code() == Errc::BackendUnreachable ||
                             e.code() == Errc::MalformedResponse;
      if (!retryable || attempt_no >= cfg_.retries) throw;
      log::warn(std::string("remote retry after: ") + e.what());
    }
  }
}

}  // namespace ces
