#include "leakscan/llm_client.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "leakscan/util.hpp"

namespace leakscan {

using nlohmann::json;

std::string completion_cache_key(const std::string& model_id, const std::string& prompt) {
  // The cache entry stores both inputs, so a colliding key degrades to a
  // miss, never to a wrong replay.
  return content_digest(model_id + '\x1f' + prompt);
}

namespace {

struct Endpoint {
  bool https = false;
  std::string host;
  int port = 80;
  std::string path = "/";
};

Endpoint parse_endpoint(const std::string& url) {
  Endpoint ep;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw LlmError(LlmErrorKind::Permanent, "malformed endpoint url: " + url);
  std::string scheme = url.substr(0, scheme_end);
  if (scheme == "https")
    ep.https = true;
  else if (scheme != "http")
    throw LlmError(LlmErrorKind::Permanent, "unsupported endpoint scheme: " + scheme);
  std::string rest = url.substr(scheme_end + 3);
  auto slash = rest.find('/');
  std::string authority = slash == std::string::npos ? rest : rest.substr(0, slash);
  ep.path = slash == std::string::npos ? "/" : rest.substr(slash);
  auto colon = authority.rfind(':');
  if (colon != std::string::npos) {
    ep.host = authority.substr(0, colon);
    ep.port = std::atoi(authority.c_str() + colon + 1);
  } else {
    ep.host = authority;
    ep.port = ep.https ? 443 : 80;
  }
  if (ep.host.empty() || ep.port <= 0)
    throw LlmError(LlmErrorKind::Permanent, "malformed endpoint url: " + url);
  return ep;
}

std::string extract_completion_text(const std::string& body, const std::string& url) {
  json doc = json::parse(body, nullptr, false);
  if (!doc.is_discarded() && doc.is_object()) {
    // chat-completions shape
    if (doc.contains("choices") && doc["choices"].is_array() && !doc["choices"].empty()) {
      const auto& first = doc["choices"][0];
      if (first.is_object() && first.contains("message") && first["message"].is_object() &&
          first["message"].contains("content") && first["message"]["content"].is_string())
        return first["message"]["content"].get<std::string>();
    }
    // plain {"response": "..."} stubs
    if (doc.contains("response") && doc["response"].is_string())
      return doc["response"].get<std::string>();
  }
  throw LlmError(LlmErrorKind::Permanent, "unrecognized completion payload from " + url);
}

}  // namespace

LlmClient::LlmClient(ClientConfig config) : config_(std::move(config)) {}

std::optional<CompletionExchange> LlmClient::cache_lookup(const std::string& prompt) const {
  if (config_.cache_dir.empty()) return std::nullopt;
  std::string key = completion_cache_key(config_.model_id, prompt);
  auto path = std::filesystem::path(config_.cache_dir) / (key + ".json");
  auto content = read_file_if_exists(path.string());
  if (!content) return std::nullopt;
  json doc = json::parse(*content, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
  CompletionExchange e;
  e.cache_key = doc.value("cache_key", "");
  e.model_id = doc.value("model_id", "");
  e.prompt = doc.value("prompt", "");
  e.response = doc.value("response", "");
  // stale or colliding entries count as misses
  if (e.model_id != config_.model_id || e.prompt != prompt) return std::nullopt;
  e.cache_key = key;
  return e;
}

void LlmClient::cache_store(const CompletionExchange& e) const {
  if (config_.cache_dir.empty())
    throw LlmError(LlmErrorKind::Permanent, "cannot record completions without a cache_dir");
  json doc;
  doc["cache_key"] = e.cache_key;
  doc["model_id"] = e.model_id;
  doc["prompt"] = e.prompt;
  doc["response"] = e.response;
  auto path = std::filesystem::path(config_.cache_dir) / (e.cache_key + ".json");
  write_file_if_changed(path.string(), doc.dump(2) + "\n");
}

std::string LlmClient::call_endpoint(const std::string& prompt) const {
  if (config_.endpoint.empty())
    throw LlmError(LlmErrorKind::Permanent,
                   "no endpoint configured and the completion is not cached");
  Endpoint ep = parse_endpoint(config_.endpoint);
  if (ep.https)
    throw LlmError(LlmErrorKind::Permanent,
                   "https endpoints need a TLS-enabled build; use http or a prerecorded cache");

  httplib::Client cli(ep.host, ep.port);
  auto sec = static_cast<time_t>(config_.timeout_seconds);
  auto usec = static_cast<time_t>((config_.timeout_seconds - static_cast<double>(sec)) * 1e6);
  cli.set_connection_timeout(sec, usec);
  cli.set_read_timeout(sec, usec);
  cli.set_write_timeout(sec, usec);

  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key && *key) headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  json req;
  req["model"] = config_.model_id;
  req["temperature"] = config_.temperature;
  req["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});

  auto res = cli.Post(ep.path, headers, req.dump(), "application/json");
  if (!res)
    throw LlmError(LlmErrorKind::Transient,
                   "cannot reach " + config_.endpoint + ": " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500)
    throw LlmError(LlmErrorKind::Transient,
                   config_.endpoint + " returned HTTP " + std::to_string(res->status));
  if (res->status != 200)
    throw LlmError(LlmErrorKind::Permanent,
                   config_.endpoint + " returned HTTP " + std::to_string(res->status) + ": " +
                       res->body);
  return extract_completion_text(res->body, config_.endpoint);
}

std::string LlmClient::complete(const std::string& prompt) {
  if (config_.mode != CacheMode::Record) {
    if (auto hit = cache_lookup(prompt)) return hit->response;
    if (config_.mode == CacheMode::Replay)
      throw LlmError(LlmErrorKind::CacheMiss,
                     "no cached completion for model " + config_.model_id + " (key " +
                         completion_cache_key(config_.model_id, prompt) + ") under " +
                         (config_.cache_dir.empty() ? "<no cache_dir>" : config_.cache_dir));
  }

  std::string response;
  int attempt = 0;
  for (;;) {
    try {
      response = call_endpoint(prompt);
      break;
    } catch (const LlmError& e) {
      if (e.kind != LlmErrorKind::Transient || attempt >= config_.max_retries) throw;
      ++attempt;
      std::this_thread::sleep_for(std::chrono::milliseconds(50 * attempt));
    }
  }

  CompletionExchange e;
  e.cache_key = completion_cache_key(config_.model_id, prompt);
  e.model_id = config_.model_id;
  e.prompt = prompt;
  e.response = response;
  cache_store(e);
  return response;
}

}  // namespace leakscan
