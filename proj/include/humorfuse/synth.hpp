#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "humorfuse/corpus.hpp"

namespace humorfuse {

// Generative process for a personalized population with a controllable share
// of user-driven (subjective) labels.
struct SyntheticSpec {
  std::size_t n_users = 50;
  std::size_t n_texts = 2000;  // total across all splits
  std::size_t annotations_per_text = 5;
  double subjectivity = 1.0;   // P(label follows the user's preference sign)
  double noise = 0.0;          // P(label flipped)
  std::uint64_t seed = 0;
  bool paired_content = false;
  std::size_t split_count = 1;  // datasets sharing users and generative process
  std::string dataset_prefix = "synth";
};

void validate(const SyntheticSpec& spec);
nlohmann::json to_json(const SyntheticSpec& spec);
SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);

struct GroundTruth {
  std::vector<std::pair<std::string, int>> user_signs;   // +1 / -1
  std::vector<std::pair<std::string, double>> text_f;    // latent text funniness
};

struct SyntheticData {
  std::vector<Corpus> corpora;  // one per split
  GroundTruth truth;
};

// Users get balanced preference signs; each text a latent f in (-1, 1) and a
// content string drawn mostly from the token pool of sign(f). The label of
// (u, t) is 1[f > 0] with probability 1 - subjectivity, else 1[s_u f > 0],
// then flipped with probability noise.
SyntheticData generate(const SyntheticSpec& spec);

// {"user_id","sign"} rows followed by {"text_id","f"} rows.
void write_ground_truth(const GroundTruth& truth, std::ostream& out);

}  // namespace humorfuse
