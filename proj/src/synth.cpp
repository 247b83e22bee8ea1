#include "humorfuse/synth.hpp"

#include <array>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "humorfuse/error.hpp"
#include "humorfuse/prng.hpp"

namespace humorfuse {

using nlohmann::json;

void validate(const SyntheticSpec& s) {
  auto fail = [](const std::string& why) { throw Error(ErrorCategory::Validation, "synthetic spec: " + why); };
  if (s.n_users == 0 || s.n_texts == 0 || s.annotations_per_text == 0 || s.split_count == 0) {
    fail("counts must be positive");
  }
  if (s.annotations_per_text > s.n_users) fail("annotations_per_text exceeds n_users");
  if (s.n_texts < s.split_count) fail("fewer texts than splits");
  if (!(s.subjectivity >= 0.0 && s.subjectivity <= 1.0)) fail("subjectivity outside [0,1]");
  if (!(s.noise >= 0.0 && s.noise <= 1.0)) fail("noise outside [0,1]");
  if (s.dataset_prefix.empty()) fail("empty dataset prefix");
}

json to_json(const SyntheticSpec& s) {
  return json{{"n_users", s.n_users},
              {"n_texts", s.n_texts},
              {"annotations_per_text", s.annotations_per_text},
              {"subjectivity", s.subjectivity},
              {"noise", s.noise},
              {"seed", s.seed},
              {"paired_content", s.paired_content},
              {"split_count", s.split_count},
              {"dataset_prefix", s.dataset_prefix}};
}

SyntheticSpec synthetic_spec_from_json(const json& j) {
  SyntheticSpec s;
  try {
    s.n_users = j.value("n_users", s.n_users);
    s.n_texts = j.value("n_texts", s.n_texts);
    s.annotations_per_text = j.value("annotations_per_text", s.annotations_per_text);
    s.subjectivity = j.value("subjectivity", s.subjectivity);
    s.noise = j.value("noise", s.noise);
    s.seed = j.value("seed", s.seed);
    s.paired_content = j.value("paired_content", s.paired_content);
    s.split_count = j.value("split_count", s.split_count);
    s.dataset_prefix = j.value("dataset_prefix", s.dataset_prefix);
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::Parse, std::string("synthetic spec: ") + e.what());
  }
  return s;
}

namespace {

constexpr std::size_t kTokensPerText = 10;
constexpr double kOwnPoolShare = 0.55;
constexpr double kOppositePoolShare = 0.10;

// Disjoint syllable inventories give each pool its own character trigrams.
constexpr std::array<const char*, 8> kFunnySyllables = {"ka", "zu", "mi", "po", "le", "ri", "ta", "no"};
constexpr std::array<const char*, 8> kDullSyllables = {"gro", "vak", "dul", "bes", "tor", "fen", "mur", "shi"};
constexpr std::array<const char*, 8> kNeutralSyllables = {"the", "and", "was", "for", "with", "his", "are", "one"};

std::vector<std::string> make_pool(const std::array<const char*, 8>& syllables) {
  std::vector<std::string> pool;
  for (std::size_t i = 0; i < 40; ++i) {
    std::string w = syllables[i % 8];
    w += syllables[(i / 8 + i) % 8];
    if (i % 3 == 0) w += syllables[(i * 5 + 3) % 8];
    pool.push_back(std::move(w));
  }
  return pool;
}

struct Pools {
  std::vector<std::string> funny = make_pool(kFunnySyllables);
  std::vector<std::string> dull = make_pool(kDullSyllables);
  std::vector<std::string> neutral = make_pool(kNeutralSyllables);
};

std::string make_content(bool funny, const Pools& pools, SplitMix64& rng) {
  const auto& own = funny ? pools.funny : pools.dull;
  const auto& opposite = funny ? pools.dull : pools.funny;
  std::string out;
  for (std::size_t i = 0; i < kTokensPerText; ++i) {
    const double r = rng.uniform01();
    const auto& pool = r < kOwnPoolShare ? own
                       : r < kOwnPoolShare + kOppositePoolShare ? opposite
                                                                 : pools.neutral;
    if (!out.empty()) out += ' ';
    out += pool[rng.uniform_below(pool.size())];
  }
  return out;
}

std::string padded(const char* prefix, std::size_t i, std::size_t width) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, static_cast<int>(width), i);
  return buf;
}

std::size_t digits(std::size_t n) {
  std::size_t d = 1;
  while (n >= 10) {
    n /= 10;
    ++d;
  }
  return d;
}

}  // namespace

SyntheticData generate(const SyntheticSpec& spec) {
  validate(spec);
  const Pools pools;

  SyntheticData data;

  // Users: exactly balanced signs, shuffled.
  SplitMix64 user_rng(derive_seed(spec.seed, "users"));
  std::vector<int> signs(spec.n_users);
  for (std::size_t u = 0; u < spec.n_users; ++u) signs[u] = u < (spec.n_users + 1) / 2 ? 1 : -1;
  user_rng.shuffle(std::span<int>(signs));
  std::vector<std::string> user_ids;
  for (std::size_t u = 0; u < spec.n_users; ++u) {
    user_ids.push_back(padded("u", u, digits(spec.n_users)));
    data.truth.user_signs.emplace_back(user_ids.back(), signs[u]);
  }

  // Texts, dealt round-robin into splits.
  SplitMix64 text_rng(derive_seed(spec.seed, "texts"));
  SplitMix64 label_rng(derive_seed(spec.seed, "labels"));
  std::vector<std::vector<TextUnit>> texts(spec.split_count);
  std::vector<std::vector<Annotation>> annotations(spec.split_count);
  std::vector<std::vector<char>> user_seen(spec.split_count, std::vector<char>(spec.n_users, 0));
  std::vector<std::vector<std::uint32_t>> annotation_users(spec.split_count);
  std::vector<std::size_t> candidates(spec.n_users);

  for (std::size_t t = 0; t < spec.n_texts; ++t) {
    double f = 0.0;
    while (f == 0.0) f = text_rng.uniform(-1.0, 1.0);
    const bool funny = f > 0.0;

    TextUnit unit;
    unit.text_id = padded("t", t, digits(spec.n_texts));
    unit.content = make_content(funny, pools, text_rng);
    unit.language = "xx";
    if (spec.paired_content) {
      // An edited variant: one word swapped for a word of the same pool.
      const auto& own = funny ? pools.funny : pools.dull;
      std::string edited = unit.content.substr(0, unit.content.rfind(' ') + 1);
      edited += own[text_rng.uniform_below(own.size())];
      unit.secondary_content = std::move(edited);
    }
    data.truth.text_f.emplace_back(unit.text_id, f);

    const std::size_t split = t % spec.split_count;
    const auto text_index = static_cast<std::uint32_t>(texts[split].size());
    texts[split].push_back(std::move(unit));

    // Partial Fisher-Yates draw of distinct annotators.
    std::iota(candidates.begin(), candidates.end(), std::size_t{0});
    for (std::size_t k = 0; k < spec.annotations_per_text; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(label_rng.uniform_below(spec.n_users - k));
      std::swap(candidates[k], candidates[j]);
      const std::size_t u = candidates[k];

      std::uint8_t label = 0;
      if (label_rng.bernoulli(spec.subjectivity)) {
        label = signs[u] * f > 0.0 ? 1 : 0;
      } else {
        label = funny ? 1 : 0;
      }
      if (label_rng.bernoulli(spec.noise)) label = 1 - label;

      user_seen[split][u] = 1;
      annotation_users[split].push_back(static_cast<std::uint32_t>(u));
      annotations[split].push_back(Annotation{text_index, 0, static_cast<double>(label), label});
    }
  }

  for (std::size_t s = 0; s < spec.split_count; ++s) {
    // Annotator table per split: users that annotated something, in id order.
    std::vector<std::int64_t> local(spec.n_users, -1);
    std::vector<std::string> annotators;
    for (std::size_t u = 0; u < spec.n_users; ++u) {
      if (user_seen[s][u]) {
        local[u] = static_cast<std::int64_t>(annotators.size());
        annotators.push_back(user_ids[u]);
      }
    }
    for (std::size_t i = 0; i < annotations[s].size(); ++i) {
      annotations[s][i].annotator = static_cast<std::uint32_t>(local[annotation_users[s][i]]);
    }

    DatasetDescriptor d;
    d.dataset_id = spec.split_count == 1 ? spec.dataset_prefix
                                         : spec.dataset_prefix + "_" + std::to_string(s);
    d.kind = DatasetKind::Personalized;
    d.language = "xx";
    d.content_profile = spec.paired_content ? "synthetic paired texts" : "synthetic texts";
    d.paired = spec.paired_content;
    data.corpora.push_back(Corpus::create(std::move(d), std::move(texts[s]), std::move(annotators),
                                          std::move(annotations[s])));
  }
  return data;
}

void write_ground_truth(const GroundTruth& truth, std::ostream& out) {
  for (const auto& [user, sign] : truth.user_signs) {
    out << json{{"user_id", user}, {"sign", sign}}.dump() << '\n';
  }
  for (const auto& [text, f] : truth.text_f) {
    out << json{{"text_id", text}, {"f", f}}.dump() << '\n';
  }
}

}  // namespace humorfuse
