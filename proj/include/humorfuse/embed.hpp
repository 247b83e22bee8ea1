#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "humorfuse/corpus.hpp"

namespace humorfuse {

inline constexpr std::size_t kDefaultHashDim = 256;
inline constexpr std::size_t kDefaultStoreDim = 768;

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dim() const noexcept { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

// What a provider may need to embed one string: the store keys by id, the
// others embed the content.
struct EmbedRequest {
  std::string key;
  std::string_view content;
};

// Store key of a text's secondary (edited) content.
std::string secondary_key(std::string_view text_id);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dim() const = 0;
  // Recorded in run manifests, e.g. "hash:256".
  virtual std::string describe() const = 0;
  // One vector per request, order preserved.
  virtual std::vector<EmbeddingVector> embed(std::span<const EmbedRequest> requests) const = 0;
};

// Signed character-trigram counts hashed into dim buckets, L2-normalized.
// Texts shorter than three code points hash as a single gram; "" maps to zeros.
EmbeddingVector hash_featurize(std::string_view text, std::size_t dim);

class HashFeaturizer final : public EmbeddingProvider {
 public:
  explicit HashFeaturizer(std::size_t dim = kDefaultHashDim);
  std::size_t dim() const override { return dim_; }
  std::string describe() const override;
  std::vector<EmbeddingVector> embed(std::span<const EmbedRequest> requests) const override;

 private:
  std::size_t dim_;
};

// Precomputed vectors. File format: "dim=<d>" then "<text_id>\t<v1>,...,<vd>".
class EmbeddingStore final : public EmbeddingProvider {
 public:
  static EmbeddingStore load(std::istream& in, std::string origin = "<stream>");
  static EmbeddingStore load_file(const std::string& path);

  std::size_t dim() const override { return dim_; }
  std::string describe() const override { return "file:" + origin_; }
  std::vector<EmbeddingVector> embed(std::span<const EmbedRequest> requests) const override;

  // Throws a reference error for unknown ids.
  const EmbeddingVector& lookup(const std::string& text_id) const;
  std::size_t size() const noexcept { return vectors_.size(); }

 private:
  EmbeddingStore(std::size_t dim, std::string origin) : dim_(dim), origin_(std::move(origin)) {}

  std::size_t dim_;
  std::string origin_;
  std::unordered_map<std::string, EmbeddingVector> vectors_;
};

struct RemoteOptions {
  std::size_t dim = kDefaultStoreDim;
  std::size_t max_retries = 3;
  std::size_t backoff_ms = 200;  // doubled after every failed attempt
  std::size_t batch_size = 64;
  std::size_t timeout_s = 30;
};

// POST <endpoint>/embed {"texts": [...]} -> {"vectors": [[...]]}.
std::vector<EmbeddingVector> remote_embed(const std::string& endpoint,
                                          std::span<const std::string> texts,
                                          const RemoteOptions& options = {});

class RemoteEmbedder final : public EmbeddingProvider {
 public:
  RemoteEmbedder(std::string endpoint, RemoteOptions options = {});
  std::size_t dim() const override { return options_.dim; }
  std::string describe() const override { return "http:" + endpoint_; }
  std::vector<EmbeddingVector> embed(std::span<const EmbedRequest> requests) const override;

 private:
  std::string endpoint_;
  RemoteOptions options_;
};

// "hash", "hash:<dim>", "file:<path>" or "http:<url>".
std::unique_ptr<EmbeddingProvider> make_provider(const std::string& spec);

// Primary and secondary embedding; the secondary slot is zero when the text
// has no secondary content.
struct ModelInput {
  EmbeddingVector primary;
  EmbeddingVector secondary;

  std::size_t width() const noexcept { return primary.dim() + secondary.dim(); }
  std::vector<double> concatenated() const;
};

ModelInput build_model_input(const TextUnit& text, const EmbeddingProvider& provider);

// Batched variant; one provider call for all texts.
std::vector<ModelInput> build_model_inputs(std::span<const TextUnit> texts,
                                           const EmbeddingProvider& provider);

}  // namespace humorfuse
