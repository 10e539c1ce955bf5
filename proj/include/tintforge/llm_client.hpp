#pragma once

// HTTP transport for OpenAI-compatible chat-completion endpoints. HTTPS needs
// the build to define CPPHTTPLIB_OPENSSL_SUPPORT and link OpenSSL.

#include <cstdlib>
#include <string>
#include <string_view>

#include "httplib.h"
#include "json.hpp"
#include "tintforge/disambiguation.hpp"

namespace tintforge {

struct ParsedUrl {
  std::string scheme;       // http or https
  std::string host_port;    // scheme://host[:port], as httplib::Client expects
  std::string path_prefix;  // no trailing slash
};

inline ParsedUrl parse_endpoint(std::string_view url) {
  const auto sep = url.find("://");
  if (sep == std::string_view::npos) throw input_error("endpoint must start with http:// or https://");
  ParsedUrl p;
  p.scheme = to_lower(url.substr(0, sep));
  if (p.scheme != "http" && p.scheme != "https") throw input_error("unsupported endpoint scheme '" + p.scheme + "'");
  const auto rest = url.substr(sep + 3);
  const auto slash = rest.find('/');
  const auto authority = rest.substr(0, slash);
  if (authority.empty()) throw input_error("endpoint has no host");
  p.host_port = p.scheme + "://" + std::string(authority);
  if (slash != std::string_view::npos) p.path_prefix = std::string(rest.substr(slash));
  while (!p.path_prefix.empty() && p.path_prefix.back() == '/') p.path_prefix.pop_back();
  return p;
}

/// API key from TINTFORGE_API_KEY, else OPENAI_API_KEY, else empty.
inline std::string api_key_from_env() {
  for (const char* name : {"TINTFORGE_API_KEY", "OPENAI_API_KEY"})
    if (const char* v = std::getenv(name); v != nullptr && *v != '\0') return v;
  return {};
}

class HttpChatTransport final : public ChatTransport {
 public:
  explicit HttpChatTransport(LlmConfig config) : config_(std::move(config)), url_(parse_endpoint(config_.endpoint)) {
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (url_.scheme == "https") throw input_error("this build has no TLS support; use an http:// endpoint");
#endif
  }

  nlohmann::json post(const nlohmann::json& request) override {
    httplib::Client client(url_.host_port);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_write_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
    const std::string path = url_.path_prefix + "/chat/completions";
    auto res = client.Post(path, headers, request.dump(), "application/json");
    if (!res) throw NetworkError("request to " + url_.host_port + path + " failed: " + httplib::to_string(res.error()), true);
    if (res->status == 429 || res->status >= 500)
      throw NetworkError("endpoint returned HTTP " + std::to_string(res->status), true, res->status);
    if (res->status < 200 || res->status >= 300)
      throw NetworkError("endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200),
                         false, res->status);
    auto body = nlohmann::json::parse(res->body, nullptr, false);
    if (body.is_discarded()) throw schema_error("endpoint response body is not JSON");
    return body;
  }

 private:
  LlmConfig config_;
  ParsedUrl url_;
};

}  // namespace tintforge
