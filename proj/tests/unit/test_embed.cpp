#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "humorfuse/embed.hpp"
#include "humorfuse/error.hpp"
#include "json.hpp"

using namespace humorfuse;
using nlohmann::json;

namespace {

double norm(const EmbeddingVector& v) {
  return std::sqrt(std::inner_product(v.values.begin(), v.values.end(), v.values.begin(), 0.0));
}

std::string store_text(std::size_t dim, std::size_t row_len) {
  std::string s = "dim=" + std::to_string(dim) + "\n";
  for (const char* id : {"a", "b"}) {
    s += id;
    s += '\t';
    for (std::size_t i = 0; i < row_len; ++i) s += (i ? "," : "") + std::to_string(0.001 * static_cast<double>(i));
    s += '\n';
  }
  return s;
}

// Local embedding service. Replies with `vectors_per_request(n)` vectors of
// width dim, or fails the first `failures` requests with HTTP 503.
class FakeService {
 public:
  FakeService(std::size_t dim, int failures = 0, int drop = 0) {
    server_.Post("/embed", [=, this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      if (requests_ <= failures) {
        res.status = 503;
        return;
      }
      const auto texts = json::parse(req.body).at("texts");
      json vectors = json::array();
      for (std::size_t i = 0; i + static_cast<std::size_t>(drop) < texts.size(); ++i) {
        json v = json::array();
        const double len = static_cast<double>(texts[i].get<std::string>().size());
        for (std::size_t j = 0; j < dim; ++j) v.push_back(len + static_cast<double>(j));
        vectors.push_back(v);
      }
      res.set_content(json{{"vectors", vectors}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeService() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int requests() const { return requests_; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
};

RemoteOptions fast(std::size_t dim) {
  RemoteOptions o;
  o.dim = dim;
  o.backoff_ms = 1;
  o.timeout_s = 2;
  return o;
}

}  // namespace

TEST_SUITE("embed") {

TEST_CASE("hash featurizer basics") {
  CHECK(hash_featurize("a pun", 256) == hash_featurize("a pun", 256));
  for (const char* s : {"x", "ab", "a longer sentence", "zażółć"}) CHECK(norm(hash_featurize(s, 256)) == doctest::Approx(1.0).epsilon(1e-9));
  const auto empty = hash_featurize("", 256);
  CHECK(empty.dim() == 256);
  CHECK(norm(empty) == 0.0);
  CHECK_THROWS_AS(hash_featurize("abc", 4), Error);
}

TEST_CASE("hash featurizer matches the frozen fixture") {
  std::ifstream in(std::string(HUMORFUSE_TEST_DATA) + "/hash_fixture_strings.json");
  REQUIRE(in);
  const auto strings = json::parse(in);
  const EmbeddingStore pinned = EmbeddingStore::load_file(std::string(HUMORFUSE_TEST_DATA) + "/hash_fixture_dim32.tsv");
  REQUIRE(pinned.size() == strings.size());
  for (std::size_t i = 0; i < strings.size(); ++i) {
    char key[8];
    std::snprintf(key, sizeof key, "s%02zu", i);
    CHECK_MESSAGE(hash_featurize(strings[i].get<std::string>(), 32) == pinned.lookup(key), key);
  }
}

TEST_CASE("embedding store") {
  std::istringstream good(store_text(768, 768));
  const EmbeddingStore store = EmbeddingStore::load(good);
  CHECK(store.lookup("a").dim() == 768);
  CHECK(store.lookup("b").values[767] == doctest::Approx(0.767));
  try {
    store.lookup("absent");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::Reference);
  }

  std::istringstream short_row(store_text(768, 767));
  try {
    EmbeddingStore::load(short_row);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::Validation);
    CHECK(e.line() == 2);
  }

  std::istringstream no_header("a\t1,2\n");
  CHECK_THROWS_AS(EmbeddingStore::load(no_header), Error);
}

TEST_CASE("model inputs") {
  const HashFeaturizer hash(256);
  const TextUnit tweet{"t1", "a plain tweet", std::nullopt, "en"};
  const ModelInput in = build_model_input(tweet, hash);
  const auto flat = in.concatenated();
  REQUIRE(flat.size() == 512);
  CHECK(std::all_of(flat.begin() + 256, flat.end(), [](double x) { return x == 0.0; }));

  const TextUnit headline{"h1", "Mayor opens new bridge", std::string("Mayor opens new cake"), "en"};
  const ModelInput paired = build_model_input(headline, hash);
  CHECK(norm(paired.primary) > 0.0);
  CHECK(norm(paired.secondary) > 0.0);

  const TextUnit same{"h2", "identical", std::string("identical"), "en"};
  const ModelInput twin = build_model_input(same, hash);
  CHECK(twin.primary == twin.secondary);
}

TEST_CASE("provider specs") {
  CHECK(make_provider("hash")->dim() == kDefaultHashDim);
  CHECK(make_provider("hash:64")->describe() == "hash:64");
  CHECK_THROWS_AS(make_provider("hash:abc"), Error);
  CHECK_THROWS_AS(make_provider("bert"), Error);
  CHECK_THROWS_AS(make_provider("file:/nonexistent/store.tsv"), Error);
}

TEST_CASE("remote embedding preserves order") {
  FakeService service(4);
  const std::vector<std::string> texts{"a", "bbb", "cc"};
  const auto v = remote_embed(service.url(), texts, fast(4));
  REQUIRE(v.size() == 3);
  CHECK(v[0].values[0] == 1.0);
  CHECK(v[1].values[0] == 3.0);
  CHECK(v[2].values[0] == 2.0);

  auto batched = fast(4);
  batched.batch_size = 2;
  const auto w = remote_embed(service.url(), texts, batched);
  CHECK(w == v);
}

TEST_CASE("remote embedding through the provider interface") {
  FakeService service(8);
  const RemoteEmbedder remote(service.url(), fast(8));
  const TextUnit t{"t", "four", std::nullopt, "en"};
  const ModelInput in = build_model_input(t, remote);
  CHECK(in.width() == 16);
  CHECK(in.primary.values[0] == 4.0);
}

TEST_CASE("remote embedding length mismatch") {
  FakeService service(4, 0, 1);
  const std::vector<std::string> texts{"a", "b", "c"};
  try {
    remote_embed(service.url(), texts, fast(4));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::Validation);
  }
}

TEST_CASE("remote embedding retries transient failures") {
  FakeService service(4, 2);
  const std::vector<std::string> texts{"a"};
  CHECK(remote_embed(service.url(), texts, fast(4)).size() == 1);
  CHECK(service.requests() == 3);
}

TEST_CASE("remote embedding gives up with the attempt count") {
  // Bind and release a port so nothing listens there.
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  const std::vector<std::string> texts{"a"};
  auto options = fast(4);
  options.max_retries = 2;
  try {
    remote_embed("http://127.0.0.1:" + std::to_string(port), texts, options);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::Transport);
    CHECK(std::string(e.what()).find("3 attempts") != std::string::npos);
  }
}

}  // TEST_SUITE
