#include "simready/annotation/chat_client.h"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "simready/common/error.h"

namespace simready::annotation {

using nlohmann::json;

std::string_view to_string(RequestKind k) {
  switch (k) {
    case RequestKind::kFineMaterial: return "fine_material";
    case RequestKind::kParameters: return "parameters";
    case RequestKind::kFeedback: return "feedback";
  }
  return "unknown";
}

RequestKind classify_request(const std::vector<ChatMessage>& messages) {
  if (messages.size() >= 3) return RequestKind::kFeedback;
  if (!messages.empty() &&
      messages.back().text.find("identify the most likely fine-grained material type") !=
          std::string::npos) {
    return RequestKind::kFineMaterial;
  }
  return RequestKind::kParameters;
}

void MockChatClient::load_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError("mock fixtures directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const std::string stem = f.stem().string();
    for (RequestKind k : {RequestKind::kFineMaterial, RequestKind::kParameters, RequestKind::kFeedback}) {
      if (stem.starts_with(to_string(k))) {
        std::ifstream in(f, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        push(k, ss.str());
        break;
      }
    }
  }
}

void MockChatClient::push(RequestKind kind, std::string response) {
  std::lock_guard lock(mutex_);
  responses_[kind].push_back(std::move(response));
}

std::string MockChatClient::complete(const std::vector<ChatMessage>& messages) {
  std::lock_guard lock(mutex_);
  requests_.push_back(messages);
  const RequestKind kind = classify_request(messages);
  auto& queue = responses_[kind];
  if (queue.empty()) {
    throw TransportError("mock client has no " + std::string(to_string(kind)) + " response");
  }
  std::string response = queue.front();
  if (queue.size() > 1) queue.pop_front();
  if (response == kTransportFailure) throw TransportError("mock transport failure");
  return response;
}

std::vector<std::vector<ChatMessage>> MockChatClient::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

HttpClientOptions http_options_from_env() {
  HttpClientOptions options;
  const char* url = std::getenv("SIMREADY_VLM_URL");
  if (url == nullptr || *url == '\0') throw ConfigError("SIMREADY_VLM_URL is not set");
  options.url = url;
  if (const char* key = std::getenv("SIMREADY_VLM_KEY")) options.api_key = key;
  return options;
}

namespace {

std::string image_url(const std::string& ref) {
  if (ref.starts_with("http://") || ref.starts_with("https://") || ref.starts_with("data:")) {
    return ref;
  }
  std::ifstream in(ref, std::ios::binary);
  if (!in) throw ConfigError("cannot read image " + ref);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::string encoded(4 * ((bytes.size() + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(encoded.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  encoded.resize(static_cast<std::size_t>(n));
  std::string ext = std::filesystem::path(ref).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  const std::string mime = ext == ".jpg" || ext == ".jpeg" ? "image/jpeg"
                           : ext == ".webp"                 ? "image/webp"
                                                            : "image/png";
  return "data:" + mime + ";base64," + encoded;
}

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("malformed VLM URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpChatClient::HttpChatClient(HttpClientOptions options) : options_(std::move(options)) {
  split_url(options_.url);
}

std::string HttpChatClient::request_body(const std::vector<ChatMessage>& messages) const {
  json msgs = json::array();
  for (const auto& m : messages) {
    if (m.images.empty()) {
      msgs.push_back({{"role", m.role}, {"content", m.text}});
      continue;
    }
    json content = json::array({{{"type", "text"}, {"text", m.text}}});
    for (const auto& im : m.images) {
      content.push_back({{"type", "image_url"}, {"image_url", {{"url", image_url(im)}}}});
    }
    msgs.push_back({{"role", m.role}, {"content", std::move(content)}});
  }
  return json{{"model", options_.model}, {"messages", std::move(msgs)}}.dump();
}

std::string HttpChatClient::complete(const std::vector<ChatMessage>& messages) {
  const SplitUrl url = split_url(options_.url);
  httplib::Client client(url.origin);
  const auto timeout = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout).count();
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);

  auto res = client.Post(url.path, headers, request_body(messages), "application/json");
  if (!res) throw TransportError("VLM request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw TransportError("VLM returned HTTP " + std::to_string(res->status) + ": " +
                         res->body.substr(0, 200));
  }
  const json body = json::parse(res->body, nullptr, false);
  if (body.is_discarded()) throw TransportError("VLM returned a non-JSON body");
  try {
    return body.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("unexpected VLM response shape: ") + e.what());
  }
}

std::string complete_with_retry(ChatClient& client, const std::vector<ChatMessage>& messages,
                                const RetryPolicy& policy) {
  auto backoff = policy.initial_backoff;
  const int attempts = std::max(1, policy.attempts);
  for (int attempt = 1;; ++attempt) {
    try {
      return client.complete(messages);
    } catch (const TransportError&) {
      if (attempt >= attempts) throw;
    }
    if (policy.sleep) {
      policy.sleep(backoff);
    } else {
      std::this_thread::sleep_for(backoff);
    }
    backoff *= 2;
  }
}

}  // namespace simready::annotation
