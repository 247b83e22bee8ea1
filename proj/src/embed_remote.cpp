#include <chrono>
#include <cmath>
#include <thread>

#include "httplib.h"
#include "humorfuse/embed.hpp"
#include "humorfuse/error.hpp"

namespace humorfuse {

using nlohmann::json;

namespace {

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;  // request path ending in /embed
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCategory::Validation, "embedding endpoint '" + url + "' lacks a scheme");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint e;
  e.base = url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  constexpr std::string_view kSuffix = "/embed";
  if (path.size() < kSuffix.size() || path.compare(path.size() - kSuffix.size(), kSuffix.size(), kSuffix) != 0) {
    path += kSuffix;
  }
  e.path = path;
  return e;
}

std::vector<EmbeddingVector> post_batch(const Endpoint& endpoint,
                                        std::span<const std::string> texts,
                                        const RemoteOptions& options) {
  const std::string body = json{{"texts", std::vector<std::string>(texts.begin(), texts.end())}}.dump();
  std::string last_failure;
  const std::size_t attempts = options.max_retries + 1;
  for (std::size_t attempt = 1; attempt <= attempts; ++attempt) {
    httplib::Client client(endpoint.base);
    client.set_connection_timeout(static_cast<time_t>(options.timeout_s), 0);
    client.set_read_timeout(static_cast<time_t>(options.timeout_s), 0);
    auto res = client.Post(endpoint.path, body, "application/json");
    if (res && res->status == 200) {
      json parsed;
      try {
        parsed = json::parse(res->body);
      } catch (const json::parse_error& e) {
        throw Error(ErrorCategory::Parse, std::string("embedding service: bad JSON: ") + e.what());
      }
      if (!parsed.is_object() || !parsed.contains("vectors") || !parsed["vectors"].is_array()) {
        throw Error(ErrorCategory::Parse, "embedding service: response lacks a 'vectors' array");
      }
      const auto& rows = parsed["vectors"];
      if (rows.size() != texts.size()) {
        throw Error(ErrorCategory::Validation,
                    "embedding service: returned " + std::to_string(rows.size()) +
                        " vectors for " + std::to_string(texts.size()) + " texts");
      }
      std::vector<EmbeddingVector> out;
      out.reserve(rows.size());
      for (const auto& row : rows) {
        if (!row.is_array()) throw Error(ErrorCategory::Parse, "embedding service: vector is not an array");
        EmbeddingVector v;
        v.values.reserve(row.size());
        for (const auto& x : row) {
          if (!x.is_number()) {
            throw Error(ErrorCategory::Numeric, "embedding service: non-numeric value in response");
          }
          const double value = x.get<double>();
          if (!std::isfinite(value)) {
            throw Error(ErrorCategory::Numeric, "embedding service: non-finite value in response");
          }
          v.values.push_back(value);
        }
        if (v.dim() != options.dim) {
          throw Error(ErrorCategory::Validation,
                      "embedding service: vector has dim " + std::to_string(v.dim()) +
                          ", expected " + std::to_string(options.dim));
        }
        out.push_back(std::move(v));
      }
      return out;
    }
    last_failure = res ? "HTTP status " + std::to_string(res->status)
                       : "transport error: " + httplib::to_string(res.error());
    if (attempt < attempts && options.backoff_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(options.backoff_ms << (attempt - 1)));
    }
  }
  throw Error(ErrorCategory::Transport, "embedding service at " + endpoint.base + endpoint.path +
                                            " failed after " + std::to_string(attempts) +
                                            " attempts (" + last_failure + ")");
}

}  // namespace

std::vector<EmbeddingVector> remote_embed(const std::string& endpoint,
                                          std::span<const std::string> texts,
                                          const RemoteOptions& options) {
  if (texts.empty()) throw Error(ErrorCategory::Validation, "remote_embed: empty batch");
  if (options.batch_size == 0) throw Error(ErrorCategory::Validation, "remote_embed: batch_size is 0");
  const Endpoint e = split_endpoint(endpoint);
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); i += options.batch_size) {
    const std::size_t n = std::min(options.batch_size, texts.size() - i);
    auto batch = post_batch(e, texts.subspan(i, n), options);
    for (auto& v : batch) out.push_back(std::move(v));
  }
  return out;
}

RemoteEmbedder::RemoteEmbedder(std::string endpoint, RemoteOptions options)
    : endpoint_(std::move(endpoint)), options_(options) {
  split_endpoint(endpoint_);
}

std::vector<EmbeddingVector> RemoteEmbedder::embed(std::span<const EmbedRequest> requests) const {
  if (requests.empty()) return {};
  std::vector<std::string> texts;
  texts.reserve(requests.size());
  for (const auto& r : requests) texts.emplace_back(r.content);
  return remote_embed(endpoint_, texts, options_);
}

}  // namespace humorfuse
