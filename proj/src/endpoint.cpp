#include "selfpref/endpoint.hpp"

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdlib>
#include <json.hpp>
#include <random>
#include <thread>

namespace selfpref {
namespace {

using json = nlohmann::json;

bool transient_status(int status) { return status == 408 || status == 429 || status >= 500; }

double jitter_factor(double jitter) {
  thread_local std::mt19937_64 engine{std::random_device{}()};
  std::uniform_real_distribution<double> dist(-jitter, jitter);
  return 1.0 + dist(engine);
}

}  // namespace

std::string ChatRequest::to_json() const {
  json body;
  body["model"] = model;
  body["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = temperature;
  body["max_tokens"] = max_tokens;
  body["logprobs"] = logprobs;
  if (logprobs) body["top_logprobs"] = top_logprobs;
  return body.dump();
}

ChatResponse parse_chat_response(const std::string& body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kCollection, fmt::format("endpoint returned invalid JSON: {}", e.what()));
  }
  if (!doc.is_object() || !doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty())
    throw Error(ErrorCode::kCollection, "endpoint response has no choices");
  const auto& choice = doc["choices"][0];

  ChatResponse out;
  if (auto msg = choice.find("message"); msg != choice.end() && msg->is_object()) {
    if (auto content = msg->find("content"); content != msg->end() && content->is_string())
      out.content = content->get<std::string>();
  }
  auto logprobs = choice.find("logprobs");
  if (logprobs == choice.end() || !logprobs->is_object()) return out;
  auto content = logprobs->find("content");
  if (content == logprobs->end() || !content->is_array() || content->empty()) return out;
  const auto& first = (*content)[0];
  auto top = first.find("top_logprobs");
  if (top == first.end() || !top->is_array()) return out;
  out.has_logprobs = true;
  for (const auto& entry : *top) {
    if (!entry.is_object() || !entry.contains("token") || !entry.contains("logprob")) continue;
    if (!entry["token"].is_string() || !entry["logprob"].is_number()) continue;
    out.first_token_top_logprobs.push_back({entry["token"].get<std::string>(), entry["logprob"].get<double>()});
  }
  return out;
}

HttpChatEndpoint::HttpChatEndpoint(EndpointConfig config) : config_(std::move(config)) {
  const auto scheme_end = config_.url.find("://");
  if (scheme_end == std::string::npos)
    throw Error(ErrorCode::kConfig, fmt::format("endpoint url '{}' has no scheme", config_.url));
  const auto path_start = config_.url.find('/', scheme_end + 3);
  scheme_host_port_ = config_.url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : config_.url.substr(path_start);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (config_.url.starts_with("https://"))
    throw Error(ErrorCode::kConfig, "this build has no TLS support; https endpoints are unavailable");
#endif
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) api_key_ = key;
  }
}

ChatResponse HttpChatEndpoint::complete(const ChatRequest& request) {
  httplib::Client client(scheme_host_port_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (api_key_) headers.emplace("Authorization", "Bearer " + *api_key_);

  auto res = client.Post(path_, headers, request.to_json(), "application/json");
  if (!res)
    throw EndpointError(fmt::format("request to {} failed: {}", config_.url, httplib::to_string(res.error())), true);
  if (res->status != 200)
    throw EndpointError(fmt::format("endpoint returned HTTP {}", res->status), transient_status(res->status),
                        res->status);
  return parse_chat_response(res->body);
}

ChatResponse complete_with_retry(ChatEndpoint& endpoint, const ChatRequest& request, const RetryPolicy& policy,
                                 const SleepFn& sleep) {
  for (int attempt = 0;; ++attempt) {
    try {
      return endpoint.complete(request);
    } catch (const EndpointError& e) {
      if (!e.transient() || attempt >= policy.max_retries) throw;
      const double scale = std::ldexp(1.0, attempt) * jitter_factor(policy.jitter);
      const auto delay = std::chrono::milliseconds(
          static_cast<std::int64_t>(std::llround(static_cast<double>(policy.base_delay.count()) * scale)));
      spdlog::debug("transient endpoint failure ({}); retry {} in {} ms", e.what(), attempt + 1, delay.count());
      if (sleep) {
        sleep(delay);
      } else {
        std::this_thread::sleep_for(delay);
      }
    }
  }
}

}  // namespace selfpref
