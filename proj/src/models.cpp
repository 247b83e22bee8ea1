#include "humorfuse/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "humorfuse/error.hpp"
#include "humorfuse/metrics.hpp"
#include "humorfuse/prng.hpp"

namespace humorfuse {

using nlohmann::json;

std::string_view to_string(Architecture architecture) {
  switch (architecture) {
    case Architecture::TxtBaseline: return "txt_baseline";
    case Architecture::OneHot: return "onehot";
    case Architecture::SheepFormula: return "sheep_formula";
    case Architecture::SheepSimple: return "sheep_simple";
    case Architecture::SheepMedium: return "sheep_medium";
  }
  return "unknown";
}

Architecture parse_architecture(std::string_view name) {
  std::string allowed;
  for (Architecture a : kAllArchitectures) {
    if (to_string(a) == name) return a;
    if (!allowed.empty()) allowed += ", ";
    allowed += to_string(a);
  }
  throw Error(ErrorCategory::Validation,
              "unknown architecture '" + std::string(name) + "' (allowed: " + allowed + ")");
}

void validate(const ModelConfig& c) {
  auto fail = [](const std::string& why) {
    throw Error(ErrorCategory::Validation, "model config: " + why);
  };
  if (c.input_dim == 0) fail("input_dim must be positive");
  if (c.hidden_dim == 0) fail("hidden_dim must be positive");
  if (c.user_embedding_dim == 0) fail("user_embedding_dim must be positive");
  if (!(c.learning_rate > 0) || !std::isfinite(c.learning_rate)) fail("learning_rate must be positive");
  if (c.batch_size == 0) fail("batch_size must be positive");
  if (c.patience == 0) fail("patience must be positive");
  // max_epochs = 0 is the degenerate "initialization only" configuration.
  if (c.max_epochs > 0 && c.patience > c.max_epochs) fail("patience exceeds max_epochs");
}

json to_json(const ModelConfig& c) {
  return json{{"architecture", to_string(c.architecture)},
              {"input_dim", c.input_dim},
              {"hidden_dim", c.hidden_dim},
              {"user_embedding_dim", c.user_embedding_dim},
              {"learning_rate", c.learning_rate},
              {"max_epochs", c.max_epochs},
              {"patience", c.patience},
              {"batch_size", c.batch_size},
              {"seed", c.seed}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  try {
    if (j.contains("architecture")) c.architecture = parse_architecture(j.at("architecture").get<std::string>());
    c.input_dim = j.value("input_dim", c.input_dim);
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.user_embedding_dim = j.value("user_embedding_dim", c.user_embedding_dim);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.patience = j.value("patience", c.patience);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::Parse, std::string("model config: ") + e.what());
  }
  return c;
}

std::vector<std::uint8_t> ExampleSet::labels() const {
  std::vector<std::uint8_t> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.label);
  return out;
}

double HshTable::score(std::optional<std::uint32_t> user) const {
  if (!user || *user >= scores.size()) return 0.0;
  return scores[*user];
}

HshTable compute_hsh(const ExampleSet& train, const UserRegistry& registry) {
  if (train.rows.empty()) throw Error(ErrorCategory::Validation, "HSH: empty training set");
  std::vector<double> sums(registry.size(), 0.0);
  std::vector<std::size_t> counts(registry.size(), 0);
  for (const auto& r : train.rows) {
    if (!r.user) continue;
    if (*r.user >= registry.size()) throw Error(ErrorCategory::Reference, "HSH: user outside registry");
    sums[*r.user] += r.label;
    ++counts[*r.user];
  }
  std::vector<double> means;
  for (std::size_t u = 0; u < sums.size(); ++u) {
    if (counts[u]) means.push_back(sums[u] / static_cast<double>(counts[u]));
  }

  HshTable table;
  table.scores.assign(registry.size(), 0.0);
  table.population_mean = mean(means);
  table.population_std = sample_std(means);
  if (means.size() < 2 || table.population_std == 0.0) return table;
  for (std::size_t u = 0; u < sums.size(); ++u) {
    if (counts[u]) {
      table.scores[u] =
          (sums[u] / static_cast<double>(counts[u]) - table.population_mean) / table.population_std;
    }
  }
  return table;
}

std::string_view tensor_name(Tensor t) {
  switch (t) {
    case kTextWeights: return "text_weights";
    case kUserWeights: return "user_weights";
    case kHiddenBias: return "hidden_bias";
    case kOutputWeights: return "output_weights";
    case kOutputBias: return "output_bias";
    case kUserBias: return "user_bias";
    case kUserEmbeddings: return "user_embeddings";
    case kTensorCount: break;
  }
  return "unknown";
}

namespace {

std::size_t user_feature_width(Architecture a, std::size_t n_users, std::size_t embedding_dim) {
  switch (a) {
    case Architecture::OneHot: return n_users;
    case Architecture::SheepFormula: return 1;
    case Architecture::SheepMedium: return embedding_dim;
    default: return 0;
  }
}

void fill_uniform(Eigen::MatrixXd& m, SplitMix64& rng, double bound) {
  // Column-major fill order is part of the determinism contract.
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-bound, bound);
  }
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Intermediate values of one forward pass over a set of rows.
struct Pass {
  Eigen::MatrixXd user_features;  // rows x user feature width
  Eigen::MatrixXd pre;            // rows x hidden
  Eigen::VectorXd logits;
};

class Network {
 public:
  Network(const ModelConfig& config, const Parameters& params, const HshTable& hsh,
          std::size_t n_users)
      : config_(config), p_(params), hsh_(hsh), n_users_(n_users) {}

  Pass run(const Eigen::MatrixXd& inputs, std::span<const Example> rows) const {
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto width = p_[kUserWeights].cols();
    if (inputs.cols() != static_cast<Eigen::Index>(config_.input_dim)) {
      throw Error(ErrorCategory::Validation,
                  "input width " + std::to_string(inputs.cols()) + " does not match model input_dim " +
                      std::to_string(config_.input_dim));
    }

    Eigen::MatrixXd x(n, inputs.cols());
    for (Eigen::Index r = 0; r < n; ++r) x.row(r) = inputs.row(rows[r].input);

    Pass pass;
    pass.user_features = Eigen::MatrixXd::Zero(n, width);
    const Architecture a = config_.architecture;
    if (a == Architecture::OneHot) {
      for (Eigen::Index r = 0; r < n; ++r) {
        if (const auto u = known(rows[r].user)) pass.user_features(r, *u) = 1.0;
      }
    } else if (a == Architecture::SheepFormula) {
      for (Eigen::Index r = 0; r < n; ++r) pass.user_features(r, 0) = hsh_.score(known(rows[r].user));
    } else if (a == Architecture::SheepMedium) {
      const Eigen::MatrixXd& emb = p_[kUserEmbeddings];
      Eigen::VectorXd fallback = Eigen::VectorXd::Zero(width);
      if (emb.cols() > 0) fallback = emb.rowwise().mean();
      for (Eigen::Index r = 0; r < n; ++r) {
        if (const auto u = known(rows[r].user)) {
          pass.user_features.row(r) = emb.col(*u).transpose();
        } else {
          pass.user_features.row(r) = fallback.transpose();
        }
      }
    }

    pass.pre.noalias() = x * p_[kTextWeights].transpose();
    if (width > 0) pass.pre.noalias() += pass.user_features * p_[kUserWeights].transpose();
    pass.pre.rowwise() += p_[kHiddenBias].col(0).transpose();

    pass.logits = pass.pre.cwiseMax(0.0) * p_[kOutputWeights].col(0);
    pass.logits.array() += p_[kOutputBias](0, 0);
    if (a == Architecture::SheepSimple) {
      for (Eigen::Index r = 0; r < n; ++r) {
        if (const auto u = known(rows[r].user)) pass.logits(r) += p_[kUserBias](*u, 0);
      }
    }
    last_x_ = std::move(x);
    return pass;
  }

  double loss(const Pass& pass, std::span<const Example> rows) const {
    double total = 0.0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const double z = pass.logits(static_cast<Eigen::Index>(r));
      total += softplus(z) - rows[r].label * z;
    }
    return total;
  }

  // Gradient of the summed loss; run() must have been called on the same rows.
  void backward(const Pass& pass, std::span<const Example> rows, Parameters& g) const {
    const auto n = static_cast<Eigen::Index>(rows.size());
    for (std::size_t t = 0; t < kTensorCount; ++t) g[t] = Eigen::MatrixXd::Zero(p_[t].rows(), p_[t].cols());

    Eigen::VectorXd dlogit(n);
    for (Eigen::Index r = 0; r < n; ++r) dlogit(r) = sigmoid(pass.logits(r)) - rows[r].label;

    const Eigen::MatrixXd act = pass.pre.cwiseMax(0.0);
    g[kOutputWeights].col(0) = act.transpose() * dlogit;
    g[kOutputBias](0, 0) = dlogit.sum();

    Eigen::MatrixXd dpre = dlogit * p_[kOutputWeights].col(0).transpose();
    dpre = (pass.pre.array() > 0.0).select(dpre, 0.0);

    g[kTextWeights].noalias() = dpre.transpose() * last_x_;
    g[kHiddenBias].col(0) = dpre.colwise().sum().transpose();

    const Architecture a = config_.architecture;
    if (p_[kUserWeights].cols() > 0) {
      g[kUserWeights].noalias() = dpre.transpose() * pass.user_features;
    }
    if (a == Architecture::SheepSimple) {
      for (Eigen::Index r = 0; r < n; ++r) {
        if (const auto u = known(rows[r].user)) g[kUserBias](*u, 0) += dlogit(r);
      }
    }
    if (a == Architecture::SheepMedium && p_[kUserEmbeddings].cols() > 0) {
      const Eigen::MatrixXd dfeat = dpre * p_[kUserWeights];  // rows x embedding dim
      const auto n_users = p_[kUserEmbeddings].cols();
      Eigen::VectorXd fallback_grad = Eigen::VectorXd::Zero(dfeat.cols());
      for (Eigen::Index r = 0; r < n; ++r) {
        if (const auto u = known(rows[r].user)) {
          g[kUserEmbeddings].col(*u) += dfeat.row(r).transpose();
        } else {
          fallback_grad += dfeat.row(r).transpose();
        }
      }
      // The fallback embedding is the mean of all user embeddings.
      g[kUserEmbeddings].colwise() += fallback_grad / static_cast<double>(n_users);
    }
  }

 private:
  std::optional<std::uint32_t> known(std::optional<std::uint32_t> user) const {
    if (user && *user < n_users_) return user;
    return std::nullopt;
  }

  const ModelConfig& config_;
  const Parameters& p_;
  const HshTable& hsh_;
  std::size_t n_users_;
  mutable Eigen::MatrixXd last_x_;
};

bool all_finite(const Parameters& p) {
  for (const auto& t : p) {
    if (!t.allFinite()) return false;
  }
  return true;
}

json tensor_to_json(const Eigen::MatrixXd& m) {
  return json{{"rows", m.rows()},
              {"cols", m.cols()},
              {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Eigen::MatrixXd tensor_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<std::size_t>(rows * cols) != data.size()) {
    throw Error(ErrorCategory::Validation, "model: tensor shape does not match its data");
  }
  Eigen::MatrixXd m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

}  // namespace

TrainedModel TrainedModel::initialize(const ModelConfig& config, UserRegistry registry, HshTable hsh) {
  validate(config);
  TrainedModel m;
  m.config_ = config;
  m.registry_ = std::move(registry);
  m.hsh_ = std::move(hsh);

  const std::size_t users = m.registry_.size();
  const auto h = static_cast<Eigen::Index>(config.hidden_dim);
  const auto width = static_cast<Eigen::Index>(
      user_feature_width(config.architecture, users, config.user_embedding_dim));
  const auto d = static_cast<Eigen::Index>(config.input_dim);
  const bool simple = config.architecture == Architecture::SheepSimple;
  const bool medium = config.architecture == Architecture::SheepMedium;

  Parameters& p = m.params_;
  p[kTextWeights].resize(h, d);
  p[kUserWeights].resize(h, width);
  p[kHiddenBias].resize(h, 1);
  p[kOutputWeights].resize(h, 1);
  p[kOutputBias].resize(1, 1);
  p[kUserBias].resize(simple ? static_cast<Eigen::Index>(users) : 0, 1);
  p[kUserEmbeddings].resize(medium ? static_cast<Eigen::Index>(config.user_embedding_dim) : 0,
                            medium ? static_cast<Eigen::Index>(users) : 0);

  SplitMix64 rng(derive_seed(config.seed, "init"));
  const double hidden_bound = 1.0 / std::sqrt(static_cast<double>(d + width));
  const double output_bound = 1.0 / std::sqrt(static_cast<double>(h));
  fill_uniform(p[kTextWeights], rng, hidden_bound);
  fill_uniform(p[kUserWeights], rng, hidden_bound);
  fill_uniform(p[kHiddenBias], rng, hidden_bound);
  fill_uniform(p[kOutputWeights], rng, output_bound);
  fill_uniform(p[kOutputBias], rng, output_bound);
  fill_uniform(p[kUserBias], rng, 0.01);
  fill_uniform(p[kUserEmbeddings], rng, 0.1);
  return m;
}

std::size_t TrainedModel::user_feature_dim() const noexcept {
  return static_cast<std::size_t>(params_[kUserWeights].cols());
}

Eigen::VectorXd TrainedModel::forward(const ExampleSet& set) const {
  Network net(config_, params_, hsh_, registry_.size());
  const Pass pass = net.run(set.inputs, set.rows);
  return pass.logits.unaryExpr([](double z) { return sigmoid(z); });
}

double TrainedModel::forward(std::span<const double> input, std::optional<std::uint32_t> user) const {
  if (input.size() != config_.input_dim) {
    throw Error(ErrorCategory::Validation, "input width " + std::to_string(input.size()) +
                                               " does not match model input_dim " +
                                               std::to_string(config_.input_dim));
  }
  Eigen::MatrixXd x(1, static_cast<Eigen::Index>(input.size()));
  for (std::size_t i = 0; i < input.size(); ++i) x(0, static_cast<Eigen::Index>(i)) = input[i];
  const Example row{0, user, 0};
  Network net(config_, params_, hsh_, registry_.size());
  return sigmoid(net.run(x, std::span<const Example>(&row, 1)).logits(0));
}

double TrainedModel::loss(const Eigen::MatrixXd& inputs, std::span<const Example> rows,
                          Parameters* gradient) const {
  Network net(config_, params_, hsh_, registry_.size());
  const Pass pass = net.run(inputs, rows);
  if (gradient) net.backward(pass, rows, *gradient);
  return net.loss(pass, rows);
}

json TrainedModel::to_json() const {
  json users = json::array();
  for (const auto& u : registry_.users()) users.push_back({u.dataset_id, u.local_id});
  json tensors = json::object();
  for (std::size_t t = 0; t < kTensorCount; ++t) {
    tensors[std::string(tensor_name(static_cast<Tensor>(t)))] = tensor_to_json(params_[t]);
  }
  json log = json::array();
  for (const auto& e : log_) {
    log.push_back({{"epoch", e.epoch},
                   {"train_loss", e.train_loss},
                   {"val_macro_f1", std::isnan(e.val_macro_f1) ? json(nullptr) : json(e.val_macro_f1)}});
  }
  return json{{"format", "humorfuse-model"},
              {"version", 1},
              {"config", humorfuse::to_json(config_)},
              {"registry", users},
              {"hsh", {{"scores", hsh_.scores}, {"mean", hsh_.population_mean}, {"std", hsh_.population_std}}},
              {"tensors", tensors},
              {"log", log},
              {"best_epoch", best_epoch_}};
}

TrainedModel TrainedModel::from_json(const json& j) {
  TrainedModel m;
  try {
    if (j.at("format") != "humorfuse-model" || j.at("version") != 1) {
      throw Error(ErrorCategory::Validation, "model: unsupported container format or version");
    }
    m.config_ = model_config_from_json(j.at("config"));
    validate(m.config_);
    for (const auto& u : j.at("registry")) {
      m.registry_.add({u.at(0).get<std::string>(), u.at(1).get<std::string>()});
    }
    const auto& hsh = j.at("hsh");
    m.hsh_.scores = hsh.at("scores").get<std::vector<double>>();
    m.hsh_.population_mean = hsh.at("mean").get<double>();
    m.hsh_.population_std = hsh.at("std").get<double>();
    for (std::size_t t = 0; t < kTensorCount; ++t) {
      m.params_[t] = tensor_from_json(j.at("tensors").at(std::string(tensor_name(static_cast<Tensor>(t)))));
    }
    for (const auto& e : j.at("log")) {
      const auto& f1 = e.at("val_macro_f1");
      m.log_.push_back({e.at("epoch").get<std::size_t>(), e.at("train_loss").get<double>(),
                        f1.is_null() ? std::numeric_limits<double>::quiet_NaN() : f1.get<double>()});
    }
    m.best_epoch_ = j.at("best_epoch").get<std::size_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::Parse, std::string("model: ") + e.what());
  }
  // Shape consistency with the config and registry.
  const TrainedModel shape = initialize(m.config_, m.registry_, {});
  for (std::size_t t = 0; t < kTensorCount; ++t) {
    if (shape.params_[t].rows() != m.params_[t].rows() || shape.params_[t].cols() != m.params_[t].cols()) {
      throw Error(ErrorCategory::Validation,
                  "model: tensor '" + std::string(tensor_name(static_cast<Tensor>(t))) + "' has the wrong shape");
    }
  }
  if (!all_finite(m.params_)) throw Error(ErrorCategory::Numeric, "model: non-finite weights");
  return m;
}

namespace {

std::optional<std::uint32_t> resolve(const TrainedModel& model, const std::optional<GlobalUserId>& user) {
  if (!user) return std::nullopt;
  return model.registry().find(*user);
}

}  // namespace

double forward(const TrainedModel& model, const ModelInput& input, const std::optional<GlobalUserId>& user) {
  const auto x = input.concatenated();
  return model.forward(x, resolve(model, user));
}

std::uint8_t predict(const TrainedModel& model, const ModelInput& input,
                     const std::optional<GlobalUserId>& user) {
  return forward(model, input, user) >= 0.5 ? 1 : 0;
}

std::vector<std::uint8_t> predict(const TrainedModel& model, const ExampleSet& set) {
  const Eigen::VectorXd p = model.forward(set);
  std::vector<std::uint8_t> out(static_cast<std::size_t>(p.size()));
  for (Eigen::Index i = 0; i < p.size(); ++i) out[static_cast<std::size_t>(i)] = p(i) >= 0.5 ? 1 : 0;
  return out;
}

TrainedModel train(const ModelConfig& config, const ExampleSet& train_set, const ExampleSet& val_set,
                   const UserRegistry& registry) {
  validate(config);
  if (train_set.rows.empty()) throw Error(ErrorCategory::Validation, "train: empty training set");

  HshTable hsh;
  if (config.architecture == Architecture::SheepFormula) hsh = compute_hsh(train_set, registry);
  TrainedModel model = TrainedModel::initialize(config, registry, std::move(hsh));
  if (config.max_epochs == 0) return model;

  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEpsilon = 1e-8;
  Parameters m1, m2, grad;
  for (std::size_t t = 0; t < kTensorCount; ++t) {
    m1[t] = Eigen::MatrixXd::Zero(model.params_[t].rows(), model.params_[t].cols());
    m2[t] = m1[t];
  }

  SplitMix64 rng(derive_seed(config.seed, "shuffle"));
  std::vector<Example> order(train_set.rows);
  const std::vector<std::uint8_t> val_labels = val_set.labels();

  Parameters best = model.params_;
  double best_f1 = -1.0;
  std::size_t since_best = 0;
  std::uint64_t step = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.shuffle(std::span<Example>(order));
    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::size_t n = std::min(config.batch_size, order.size() - start);
      const std::span<const Example> batch(order.data() + start, n);
      const double batch_loss = model.loss(train_set.inputs, batch, &grad);
      if (!std::isfinite(batch_loss)) {
        throw Error(ErrorCategory::Numeric, "non-finite loss at epoch " + std::to_string(epoch) +
                                                ", batch " + std::to_string(batch_index));
      }
      epoch_loss += batch_loss;

      ++step;
      const double scale = 1.0 / static_cast<double>(n);
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (std::size_t t = 0; t < kTensorCount; ++t) {
        if (grad[t].size() == 0) continue;
        const Eigen::ArrayXXd g = grad[t].array() * scale;
        m1[t].array() = kBeta1 * m1[t].array() + (1.0 - kBeta1) * g;
        m2[t].array() = kBeta2 * m2[t].array() + (1.0 - kBeta2) * g.square();
        model.params_[t].array() -=
            config.learning_rate * (m1[t].array() / c1) / ((m2[t].array() / c2).sqrt() + kEpsilon);
      }
    }

    EpochLog entry{epoch, epoch_loss / static_cast<double>(order.size()),
                   std::numeric_limits<double>::quiet_NaN()};
    if (!val_set.rows.empty()) entry.val_macro_f1 = macro_f1(val_labels, predict(model, val_set));
    model.log_.push_back(entry);

    if (val_set.rows.empty()) {
      best = model.params_;
      model.best_epoch_ = epoch;
      continue;
    }
    if (entry.val_macro_f1 > best_f1) {
      best_f1 = entry.val_macro_f1;
      best = model.params_;
      model.best_epoch_ = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  model.params_ = std::move(best);
  if (!all_finite(model.params_)) throw Error(ErrorCategory::Numeric, "train: non-finite weights");
  return model;
}

GradientCheckResult gradient_check(const TrainedModel& model, const Eigen::MatrixXd& inputs,
                                   std::span<const Example> rows, double step) {
  Parameters analytic;
  model.loss(inputs, rows, &analytic);

  auto activation_pattern = [&](const Parameters& p) {
    Network net(model.config(), p, model.hsh(), model.registry().size());
    const Pass pass = net.run(inputs, rows);
    return std::pair{net.loss(pass, rows), Eigen::MatrixXi((pass.pre.array() > 0.0).cast<int>())};
  };

  GradientCheckResult result;
  Parameters probe = model.parameters();
  for (std::size_t t = 0; t < kTensorCount; ++t) {
    for (Eigen::Index i = 0; i < probe[t].size(); ++i) {
      const double original = probe[t].data()[i];
      probe[t].data()[i] = original + step;
      const auto [plus, plus_pattern] = activation_pattern(probe);
      probe[t].data()[i] = original - step;
      const auto [minus, minus_pattern] = activation_pattern(probe);
      probe[t].data()[i] = original;

      if (plus_pattern != minus_pattern) {
        ++result.skipped_kinks;
        continue;
      }
      const double numeric = (plus - minus) / (2.0 * step);
      const double a = analytic[t].data()[i];
      // Floor keeps round-off in near-zero gradients from reading as relative error.
      const double scale = std::max({std::abs(a), std::abs(numeric), 1e-6});
      const double rel = std::abs(a - numeric) / scale;
      ++result.checked;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_tensor = static_cast<Tensor>(t);
      }
    }
  }
  return result;
}

}  // namespace humorfuse
