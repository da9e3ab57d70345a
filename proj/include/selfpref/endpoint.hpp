#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "selfpref/error.hpp"
#include "selfpref/votes.hpp"

namespace selfpref {

struct ChatRequest {
  std::string model;
  std::string prompt;
  double temperature = 0.0;
  bool logprobs = true;
  int top_logprobs = 20;
  int max_tokens = 1;

  std::string to_json() const;
};

struct ChatResponse {
  std::string content;
  // Top alternatives for the first generated token; empty without logprobs.
  std::vector<TokenLogprob> first_token_top_logprobs;
  bool has_logprobs = false;
};

/// Parses an OpenAI-style chat completion body. Throws Error(kCollection).
ChatResponse parse_chat_response(const std::string& body);

class EndpointError : public Error {
 public:
  EndpointError(const std::string& message, bool transient, int status = 0)
      : Error(ErrorCode::kCollection, message), transient_(transient), status_(status) {}

  bool transient() const noexcept { return transient_; }
  int status() const noexcept { return status_; }

 private:
  bool transient_;
  int status_;
};

class ChatEndpoint {
 public:
  virtual ~ChatEndpoint() = default;
  /// Must be safe to call concurrently. Throws EndpointError.
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

struct RetryPolicy {
  int max_retries = 5;
  std::chrono::milliseconds base_delay{1000};
  double jitter = 0.25;
};

struct EndpointConfig {
  std::string url;  // e.g. https://host/v1/chat/completions
  std::string api_key_env = "SELFPREF_API_KEY";
  std::chrono::milliseconds timeout{60000};
};

class HttpChatEndpoint : public ChatEndpoint {
 public:
  explicit HttpChatEndpoint(EndpointConfig config);

  ChatResponse complete(const ChatRequest& request) override;

 private:
  EndpointConfig config_;
  std::string scheme_host_port_;
  std::string path_;
  std::optional<std::string> api_key_;
};

using SleepFn = std::function<void(std::chrono::milliseconds)>;

/// Calls the endpoint, retrying transient failures with jittered exponential
/// backoff (base * 2^attempt). Rethrows the last error once retries run out.
ChatResponse complete_with_retry(ChatEndpoint& endpoint, const ChatRequest& request, const RetryPolicy& policy,
                                 const SleepFn& sleep = {});

}  // namespace selfpref
