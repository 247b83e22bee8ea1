#include "humorfuse/embed.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <cmath>
#include <fstream>
#include <istream>

#include "humorfuse/error.hpp"
#include "humorfuse/prng.hpp"

namespace humorfuse {

std::string secondary_key(std::string_view text_id) {
  return std::string(text_id) + "#secondary";
}

namespace {

// Byte offsets where UTF-8 code points start. Continuation bytes never start
// one; invalid sequences degrade to byte-wise splitting.
std::vector<std::size_t> code_point_starts(std::string_view text) {
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if ((c & 0xC0) != 0x80) starts.push_back(i);
  }
  if (!text.empty() && (starts.empty() || starts.front() != 0)) starts.insert(starts.begin(), 0);
  return starts;
}

void add_gram(std::vector<double>& acc, std::string_view gram) {
  const std::uint64_t h = mix64(fnv1a64(gram));
  const std::size_t bucket = static_cast<std::size_t>(h % acc.size());
  acc[bucket] += (h >> 63) ? -1.0 : 1.0;
}

}  // namespace

EmbeddingVector hash_featurize(std::string_view text, std::size_t dim) {
  if (dim < 8) throw Error(ErrorCategory::Validation, "hash featurizer dim must be at least 8");
  std::vector<double> acc(dim, 0.0);
  const auto starts = code_point_starts(text);
  if (starts.size() < 3) {
    if (!text.empty()) add_gram(acc, text);
  } else {
    for (std::size_t i = 0; i + 2 < starts.size(); ++i) {
      const std::size_t end = i + 3 < starts.size() ? starts[i + 3] : text.size();
      add_gram(acc, text.substr(starts[i], end - starts[i]));
    }
  }
  double norm2 = 0.0;
  for (double v : acc) norm2 += v * v;
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& v : acc) v *= inv;
  }
  return EmbeddingVector{std::move(acc)};
}

HashFeaturizer::HashFeaturizer(std::size_t dim) : dim_(dim) {
  if (dim < 8) throw Error(ErrorCategory::Validation, "hash featurizer dim must be at least 8");
}

std::string HashFeaturizer::describe() const { return "hash:" + std::to_string(dim_); }

std::vector<EmbeddingVector> HashFeaturizer::embed(std::span<const EmbedRequest> requests) const {
  std::vector<EmbeddingVector> out;
  out.reserve(requests.size());
  for (const auto& r : requests) out.push_back(hash_featurize(r.content, dim_));
  return out;
}

EmbeddingStore EmbeddingStore::load(std::istream& in, std::string origin) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw Error(ErrorCategory::Parse, "embedding store: empty input");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::size_t dim = 0;
  if (line.rfind("dim=", 0) != 0 ||
      std::from_chars(line.data() + 4, line.data() + line.size(), dim).ec != std::errc{} ||
      dim == 0) {
    throw Error(ErrorCategory::Parse, "embedding store: expected 'dim=<d>' header", line_no);
  }

  EmbeddingStore store(dim, std::move(origin));
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw Error(ErrorCategory::Parse, "embedding store: expected '<text_id>\\t<values>'", line_no);
    }
    EmbeddingVector v;
    v.values.reserve(dim);
    const char* p = line.data() + tab + 1;
    const char* end = line.data() + line.size();
    while (p < end) {
      const char* comma = std::find(p, end, ',');
      // strtod accepts the same decimal syntax as the writer emits.
      std::string token(p, comma);
      char* parsed_end = nullptr;
      const double value = std::strtod(token.c_str(), &parsed_end);
      if (token.empty() || parsed_end != token.c_str() + token.size()) {
        throw Error(ErrorCategory::Parse, "embedding store: bad number '" + token + "'", line_no);
      }
      if (!std::isfinite(value)) {
        throw Error(ErrorCategory::Numeric, "embedding store: non-finite value", line_no);
      }
      v.values.push_back(value);
      p = comma == end ? end : comma + 1;
    }
    if (v.dim() != dim) {
      throw Error(ErrorCategory::Validation,
                  "embedding store: row has " + std::to_string(v.dim()) + " values, header says " +
                      std::to_string(dim),
                  line_no);
    }
    std::string id = line.substr(0, tab);
    if (!store.vectors_.emplace(id, std::move(v)).second) {
      throw Error(ErrorCategory::Duplicate, "embedding store: duplicate id '" + id + "'", line_no);
    }
  }
  return store;
}

EmbeddingStore EmbeddingStore::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::Io, "cannot open embedding store '" + path + "'");
  return load(in, path);
}

const EmbeddingVector& EmbeddingStore::lookup(const std::string& text_id) const {
  auto it = vectors_.find(text_id);
  if (it == vectors_.end()) {
    throw Error(ErrorCategory::Reference, "embedding store: no vector for '" + text_id + "'");
  }
  return it->second;
}

std::vector<EmbeddingVector> EmbeddingStore::embed(std::span<const EmbedRequest> requests) const {
  std::vector<EmbeddingVector> out;
  out.reserve(requests.size());
  for (const auto& r : requests) out.push_back(lookup(r.key));
  return out;
}

std::unique_ptr<EmbeddingProvider> make_provider(const std::string& spec) {
  if (spec == "hash") return std::make_unique<HashFeaturizer>();
  if (spec.rfind("hash:", 0) == 0) {
    std::size_t dim = 0;
    const char* b = spec.data() + 5;
    const char* e = spec.data() + spec.size();
    if (std::from_chars(b, e, dim).ec != std::errc{}) {
      throw Error(ErrorCategory::Validation, "bad hash provider dimension in '" + spec + "'");
    }
    return std::make_unique<HashFeaturizer>(dim);
  }
  if (spec.rfind("file:", 0) == 0) {
    return std::make_unique<EmbeddingStore>(EmbeddingStore::load_file(spec.substr(5)));
  }
  if (spec.rfind("http:", 0) == 0) {
    // Both "http:http://host:port" and "http://host:port" are accepted.
    const std::string rest = spec.substr(5);
    return std::make_unique<RemoteEmbedder>(rest.rfind("//", 0) == 0 ? "http:" + rest : rest);
  }
  throw Error(ErrorCategory::Validation,
              "unknown embedding provider '" + spec + "' (allowed: hash, hash:<dim>, file:<path>, http:<url>)");
}

std::vector<double> ModelInput::concatenated() const {
  std::vector<double> out(primary.values);
  out.insert(out.end(), secondary.values.begin(), secondary.values.end());
  return out;
}

std::vector<ModelInput> build_model_inputs(std::span<const TextUnit> texts,
                                           const EmbeddingProvider& provider) {
  std::vector<EmbedRequest> requests;
  requests.reserve(texts.size() * 2);
  for (const auto& t : texts) {
    requests.push_back({t.text_id, t.content});
    if (t.secondary_content) requests.push_back({secondary_key(t.text_id), *t.secondary_content});
  }
  auto vectors = provider.embed(requests);
  if (vectors.size() != requests.size()) {
    throw Error(ErrorCategory::Validation, "embedding provider returned the wrong number of vectors");
  }

  const std::size_t dim = provider.dim();
  std::vector<ModelInput> inputs;
  inputs.reserve(texts.size());
  std::size_t next = 0;
  for (const auto& t : texts) {
    ModelInput in;
    in.primary = std::move(vectors[next++]);
    if (t.secondary_content) {
      in.secondary = std::move(vectors[next++]);
    } else {
      in.secondary.values.assign(dim, 0.0);
    }
    for (const auto* v : {&in.primary, &in.secondary}) {
      if (v->dim() != dim) {
        throw Error(ErrorCategory::Validation, "embedding for '" + t.text_id + "' has dim " +
                                                   std::to_string(v->dim()) + ", expected " +
                                                   std::to_string(dim));
      }
      for (double x : v->values) {
        if (!std::isfinite(x)) {
          throw Error(ErrorCategory::Numeric, "non-finite embedding for '" + t.text_id + "'");
        }
      }
    }
    inputs.push_back(std::move(in));
  }
  return inputs;
}

ModelInput build_model_input(const TextUnit& text, const EmbeddingProvider& provider) {
  return std::move(build_model_inputs(std::span<const TextUnit>(&text, 1), provider).front());
}

}  // namespace humorfuse
