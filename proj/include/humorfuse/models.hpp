#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "humorfuse/embed.hpp"
#include "humorfuse/fusion.hpp"
#include "json.hpp"

namespace humorfuse {

enum class Architecture { TxtBaseline, OneHot, SheepFormula, SheepSimple, SheepMedium };

inline constexpr Architecture kAllArchitectures[] = {
    Architecture::TxtBaseline, Architecture::OneHot, Architecture::SheepFormula,
    Architecture::SheepSimple, Architecture::SheepMedium};

std::string_view to_string(Architecture architecture);
Architecture parse_architecture(std::string_view name);

struct ModelConfig {
  Architecture architecture = Architecture::TxtBaseline;
  std::size_t input_dim = 2 * kDefaultHashDim;
  std::size_t hidden_dim = 128;
  std::size_t user_embedding_dim = 32;  // SheepMedium only
  double learning_rate = 1e-3;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
};

void validate(const ModelConfig& config);
nlohmann::json to_json(const ModelConfig& config);
// Missing keys keep their defaults.
ModelConfig model_config_from_json(const nlohmann::json& j);

// Featurized rows. Several rows (annotations) share one input row (text).
struct Example {
  std::uint32_t input = 0;
  std::optional<std::uint32_t> user;
  std::uint8_t label = 0;
};

struct ExampleSet {
  Eigen::MatrixXd inputs;  // one row per distinct text, width = input_dim
  std::vector<Example> rows;

  std::size_t size() const noexcept { return rows.size(); }
  std::vector<std::uint8_t> labels() const;
};

// Human Sense of Humor: z-score of each user's mean binary label among all
// users' means (sample std). This is this project's pinned definition.
struct HshTable {
  std::vector<double> scores;  // by registry index; 0 for users without rows
  double population_mean = 0.0;
  double population_std = 0.0;

  double score(std::optional<std::uint32_t> user) const;
};

HshTable compute_hsh(const ExampleSet& train, const UserRegistry& registry);

enum Tensor : std::size_t {
  kTextWeights,     // hidden x input_dim
  kUserWeights,     // hidden x user features (one-hot width, 1, or embedding dim)
  kHiddenBias,      // hidden x 1
  kOutputWeights,   // hidden x 1
  kOutputBias,      // 1 x 1
  kUserBias,        // users x 1 (SheepSimple)
  kUserEmbeddings,  // embedding dim x users (SheepMedium)
  kTensorCount,
};

std::string_view tensor_name(Tensor t);

using Parameters = std::array<Eigen::MatrixXd, kTensorCount>;

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_macro_f1 = 0.0;  // NaN without a validation set
};

class TrainedModel {
 public:
  // Seeded fan-in-scaled uniform initialization.
  static TrainedModel initialize(const ModelConfig& config, UserRegistry registry,
                                 HshTable hsh = {});

  const ModelConfig& config() const noexcept { return config_; }
  Architecture architecture() const noexcept { return config_.architecture; }
  const UserRegistry& registry() const noexcept { return registry_; }
  const HshTable& hsh() const noexcept { return hsh_; }

  const Parameters& parameters() const noexcept { return params_; }
  Parameters& parameters() noexcept { return params_; }

  std::span<const EpochLog> log() const noexcept { return log_; }
  std::size_t best_epoch() const noexcept { return best_epoch_; }

  // Width of the user feature block fed next to the text input.
  std::size_t user_feature_dim() const noexcept;

  // Probabilities for the given rows of an example set.
  Eigen::VectorXd forward(const ExampleSet& set) const;
  double forward(std::span<const double> input, std::optional<std::uint32_t> user) const;

  // Summed binary cross-entropy over the rows; fills gradient if non-null.
  double loss(const Eigen::MatrixXd& inputs, std::span<const Example> rows,
              Parameters* gradient = nullptr) const;

  nlohmann::json to_json() const;
  static TrainedModel from_json(const nlohmann::json& j);

 private:
  friend TrainedModel train(const ModelConfig&, const ExampleSet&, const ExampleSet&,
                            const UserRegistry&);

  TrainedModel() = default;

  ModelConfig config_;
  UserRegistry registry_;
  HshTable hsh_;
  Parameters params_;
  std::vector<EpochLog> log_;
  std::size_t best_epoch_ = 0;
};

// Architecture-specific probability; unknown or absent users take the
// fallback path (zero one-hot, zero bias, mean embedding, zero HSH).
double forward(const TrainedModel& model, const ModelInput& input,
               const std::optional<GlobalUserId>& user);
// 1 iff forward(...) >= 0.5.
std::uint8_t predict(const TrainedModel& model, const ModelInput& input,
                     const std::optional<GlobalUserId>& user);
std::vector<std::uint8_t> predict(const TrainedModel& model, const ExampleSet& set);

// Mini-batch Adam on mean binary cross-entropy with early stopping on
// validation macro F1 (best epoch restored).
TrainedModel train(const ModelConfig& config, const ExampleSet& train_set,
                   const ExampleSet& val_set, const UserRegistry& registry);

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  // Coordinates whose finite difference straddles a ReLU kink.
  std::size_t skipped_kinks = 0;
  Tensor worst_tensor = kTextWeights;
};

inline constexpr double kGradientCheckStep = 1e-4;

// Analytic gradient of the summed loss against central differences over every
// parameter, per-user tables included.
GradientCheckResult gradient_check(const TrainedModel& model, const Eigen::MatrixXd& inputs,
                                   std::span<const Example> rows,
                                   double step = kGradientCheckStep);

}  // namespace humorfuse
