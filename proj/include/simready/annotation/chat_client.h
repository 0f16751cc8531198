#pragma once

#include <chrono>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "simready/annotation/prompts.h"

namespace simready::annotation {

// Chat-completion interface. Implementations must be callable from several
// sessions at once. Throws TransportError on delivery failure.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
};

enum class RequestKind { kFineMaterial, kParameters, kFeedback };
std::string_view to_string(RequestKind k);
RequestKind classify_request(const std::vector<ChatMessage>& messages);

// Canned responses per request kind, consumed in order; the last one repeats.
// A response equal to kTransportFailure throws TransportError instead.
class MockChatClient : public ChatClient {
 public:
  static constexpr std::string_view kTransportFailure = "<transport-failure>";

  MockChatClient() = default;
  // Queues <kind>*.txt files (fine_material, parameters, feedback) in name order.
  void load_directory(const std::filesystem::path& dir);

  void push(RequestKind kind, std::string response);
  std::string complete(const std::vector<ChatMessage>& messages) override;

  // Every request received, in order.
  std::vector<std::vector<ChatMessage>> requests() const;

 private:
  mutable std::mutex mutex_;
  std::map<RequestKind, std::deque<std::string>> responses_;
  std::vector<std::vector<ChatMessage>> requests_;
};

struct HttpClientOptions {
  std::string url;  // full chat-completions endpoint, http or https
  std::string api_key;
  std::string model = "gpt-4o";
  std::chrono::seconds timeout{120};
};

// SIMREADY_VLM_URL / SIMREADY_VLM_KEY. Throws ConfigError when the URL is unset.
HttpClientOptions http_options_from_env();

// OpenAI-style chat-completions client. Local image paths are sent as base64
// data URLs.
class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(HttpClientOptions options);
  std::string complete(const std::vector<ChatMessage>& messages) override;

  // Request body for `messages`; exposed for inspection.
  std::string request_body(const std::vector<ChatMessage>& messages) const;

 private:
  HttpClientOptions options_;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};  // doubled after each failure
  std::function<void(std::chrono::milliseconds)> sleep;  // default: this_thread::sleep_for
};

// Calls client.complete up to policy.attempts times. Rethrows the last
// TransportError when every attempt fails.
std::string complete_with_retry(ChatClient& client, const std::vector<ChatMessage>& messages,
                                const RetryPolicy& policy);

}  // namespace simready::annotation
