#include <cmath>
#include <random>

#include "doctest.h"
#include "humorfuse/error.hpp"
#include "humorfuse/metrics.hpp"
#include "humorfuse/models.hpp"

using namespace humorfuse;

namespace {

UserRegistry users(std::size_t n) {
  UserRegistry r;
  for (std::size_t u = 0; u < n; ++u) r.add({"d", "u" + std::to_string(u)});
  return r;
}

ModelConfig small(Architecture a, std::size_t input_dim = 6) {
  ModelConfig c;
  c.architecture = a;
  c.input_dim = input_dim;
  c.hidden_dim = 5;
  c.user_embedding_dim = 3;
  c.max_epochs = 20;
  c.patience = 5;
  c.batch_size = 8;
  c.seed = 7;
  return c;
}

// Random inputs, users (some unknown) and labels.
ExampleSet random_set(std::mt19937_64& rng, std::size_t n_inputs, std::size_t width, std::size_t rows,
                      std::size_t n_users) {
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<std::size_t> pick_input(0, n_inputs - 1), pick_user(0, n_users);
  std::bernoulli_distribution coin(0.5);
  ExampleSet s;
  s.inputs.resize(static_cast<Eigen::Index>(n_inputs), static_cast<Eigen::Index>(width));
  for (Eigen::Index i = 0; i < s.inputs.size(); ++i) s.inputs.data()[i] = normal(rng);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t u = pick_user(rng);
    s.rows.push_back(Example{static_cast<std::uint32_t>(pick_input(rng)),
                             u < n_users ? std::optional<std::uint32_t>(static_cast<std::uint32_t>(u)) : std::nullopt,
                             static_cast<std::uint8_t>(coin(rng))});
  }
  return s;
}

HshTable some_hsh(std::size_t n) {
  HshTable h;
  for (std::size_t u = 0; u < n; ++u) h.scores.push_back(0.3 * static_cast<double>(u) - 0.5);
  return h;
}

}  // namespace

TEST_SUITE("models") {

TEST_CASE("HSH z-scores") {
  // Users 0 and 1 with label means 0.2 and 0.8 (5 rows each).
  ExampleSet s;
  s.inputs = Eigen::MatrixXd::Zero(1, 2);
  for (int i = 0; i < 5; ++i) s.rows.push_back({0, 0u, static_cast<std::uint8_t>(i == 0)});
  for (int i = 0; i < 5; ++i) s.rows.push_back({0, 1u, static_cast<std::uint8_t>(i != 0)});
  const HshTable h = compute_hsh(s, users(2));
  // Independent arithmetic: mean 0.5, sample std sqrt(((-.3)^2 + .3^2) / 1).
  const double sigma = std::sqrt(0.09 + 0.09);
  CHECK(h.population_mean == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(h.population_std == doctest::Approx(0.424264).epsilon(1e-6));
  CHECK(h.population_std == doctest::Approx(sigma).epsilon(1e-12));
  CHECK(h.scores[0] == doctest::Approx(-0.70711).epsilon(1e-5));
  CHECK(h.scores[1] == doctest::Approx(0.70711).epsilon(1e-5));
  CHECK(h.score(std::nullopt) == 0.0);
}

TEST_CASE("HSH degenerate cases") {
  ExampleSet same;
  same.inputs = Eigen::MatrixXd::Zero(1, 2);
  for (std::uint32_t u = 0; u < 3; ++u) {
    same.rows.push_back({0, u, 1});
    same.rows.push_back({0, u, 0});
  }
  for (double z : compute_hsh(same, users(3)).scores) CHECK(z == 0.0);

  ExampleSet one;
  one.inputs = Eigen::MatrixXd::Zero(1, 2);
  one.rows.push_back({0, 0u, 1});
  CHECK(compute_hsh(one, users(1)).scores[0] == 0.0);
}

TEST_CASE("outputs lie strictly inside (0, 1) and are reproducible") {
  std::mt19937_64 rng(1);
  for (Architecture a : kAllArchitectures) {
    const ModelConfig c = small(a);
    const TrainedModel m = TrainedModel::initialize(c, users(4), some_hsh(4));
    const ExampleSet s = random_set(rng, 10, 6, 30, 4);
    const Eigen::VectorXd p = m.forward(s);
    CHECK((p.array() > 0.0).all());
    CHECK((p.array() < 1.0).all());
    const Eigen::VectorXd again = m.forward(s);
    CHECK(p == again);
    std::vector<double> big(6, 1e6);
    const double extreme = m.forward(big, 0u);
    CHECK(extreme >= 0.0);
    CHECK(extreme <= 1.0);
  }
}

TEST_CASE("SheepSimple with zero user biases equals the text baseline") {
  std::mt19937_64 rng(2);
  TrainedModel simple = TrainedModel::initialize(small(Architecture::SheepSimple), users(5));
  TrainedModel base = TrainedModel::initialize(small(Architecture::TxtBaseline), users(5));
  simple.parameters()[kUserBias].setZero();
  for (Tensor t : {kTextWeights, kHiddenBias, kOutputWeights, kOutputBias}) {
    base.parameters()[t] = simple.parameters()[t];
  }
  const ExampleSet s = random_set(rng, 20, 6, 60, 5);
  CHECK(simple.forward(s) == base.forward(s));
}

TEST_CASE("unknown users take the fallback path") {
  TrainedModel onehot = TrainedModel::initialize(small(Architecture::OneHot), users(3));
  std::vector<double> x(6, 0.25);
  // A registry index past the end behaves like no user at all.
  CHECK(onehot.forward(x, 99u) == onehot.forward(x, std::nullopt));

  TrainedModel medium = TrainedModel::initialize(small(Architecture::SheepMedium), users(3));
  auto& emb = medium.parameters()[kUserEmbeddings];
  emb.col(0).setConstant(1.0);
  emb.col(1).setConstant(2.0);
  emb.col(2).setConstant(3.0);
  TrainedModel twin = medium;
  twin.parameters()[kUserEmbeddings].col(0).setConstant(2.0);  // the mean embedding
  CHECK(medium.forward(x, std::nullopt) == doctest::Approx(twin.forward(x, 0u)).epsilon(1e-14));

  const ModelInput in{EmbeddingVector{std::vector<double>(3, 0.25)}, EmbeddingVector{std::vector<double>(3, 0.25)}};
  CHECK(forward(onehot, in, GlobalUserId{"elsewhere", "u0"}) == onehot.forward(x, std::nullopt));
  CHECK(forward(onehot, in, GlobalUserId{"d", "u1"}) == onehot.forward(x, 1u));
}

TEST_CASE("prediction threshold") {
  TrainedModel m = TrainedModel::initialize(small(Architecture::TxtBaseline, 2), users(0));
  for (auto& t : m.parameters()) t.setZero();
  const ModelInput in{EmbeddingVector{{0.3}}, EmbeddingVector{{-0.1}}};
  CHECK(forward(m, in, std::nullopt) == 0.5);
  CHECK(predict(m, in, std::nullopt) == 1);
  m.parameters()[kOutputBias](0, 0) = std::log(0.49 / 0.51);
  CHECK(forward(m, in, std::nullopt) == doctest::Approx(0.49));
  CHECK(predict(m, in, std::nullopt) == 0);
  m.parameters()[kOutputBias](0, 0) = std::log(0.51 / 0.49);
  CHECK(predict(m, in, std::nullopt) == 1);
}

TEST_CASE("gradient check for every architecture") {
  std::mt19937_64 rng(0);
  for (Architecture a : kAllArchitectures) {
    CAPTURE(to_string(a));
    const TrainedModel m = TrainedModel::initialize(small(a), users(4), some_hsh(4));
    const ExampleSet s = random_set(rng, 8, 6, 16, 4);
    const GradientCheckResult r = gradient_check(m, s.inputs, s.rows);
    CHECK(r.checked > 0);
    CHECK(r.max_relative_error < 1e-4);
  }
}

TEST_CASE("zero network has zero hidden-layer gradients") {
  for (Architecture a : kAllArchitectures) {
    TrainedModel m = TrainedModel::initialize(small(a), users(3), some_hsh(3));
    for (auto& t : m.parameters()) t.setZero();
    ExampleSet s;
    s.inputs = Eigen::MatrixXd::Zero(2, 6);
    s.rows = {{0, 0u, 1}, {1, 1u, 0}, {0, std::nullopt, 1}};
    Parameters g;
    m.loss(s.inputs, s.rows, &g);
    CHECK(g[kTextWeights].isZero());
    CHECK(g[kHiddenBias].isZero());
    CHECK(g[kUserWeights].isZero());
    CHECK(g[kOutputWeights].isZero());
    CHECK(g[kUserEmbeddings].isZero());
  }
}

TEST_CASE("SheepSimple bias gradient is the summed residual of the user's rows") {
  std::mt19937_64 rng(4);
  const TrainedModel m = TrainedModel::initialize(small(Architecture::SheepSimple), users(4));
  const ExampleSet s = random_set(rng, 12, 6, 40, 4);
  Parameters g;
  m.loss(s.inputs, s.rows, &g);
  const Eigen::VectorXd p = m.forward(s);
  std::vector<double> expected(4, 0.0);
  for (std::size_t r = 0; r < s.rows.size(); ++r) {
    if (s.rows[r].user) expected[*s.rows[r].user] += p(static_cast<Eigen::Index>(r)) - s.rows[r].label;
  }
  for (std::size_t u = 0; u < 4; ++u) {
    CHECK(g[kUserBias](static_cast<Eigen::Index>(u), 0) == doctest::Approx(expected[u]).epsilon(1e-12));
  }
}

TEST_CASE("training separates a linearly separable set") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  ExampleSet s;
  s.inputs.resize(400, 6);
  for (Eigen::Index i = 0; i < s.inputs.size(); ++i) s.inputs.data()[i] = normal(rng);
  for (std::uint32_t r = 0; r < 400; ++r) {
    s.rows.push_back({r, std::nullopt, static_cast<std::uint8_t>(s.inputs(r, 2) > 0.0)});
  }
  ModelConfig c = small(Architecture::TxtBaseline);
  c.max_epochs = 60;
  c.patience = 60;
  c.learning_rate = 1e-2;
  const TrainedModel m = train(c, s, ExampleSet{}, users(0));
  CHECK(macro_f1(s.labels(), predict(m, s)) >= 0.95);
  CHECK(m.log().size() == 60);
}

TEST_CASE("max_epochs = 0 returns the initialization") {
  std::mt19937_64 rng(6);
  const ExampleSet s = random_set(rng, 5, 6, 10, 2);
  ModelConfig c = small(Architecture::OneHot);
  c.max_epochs = 0;
  const TrainedModel m = train(c, s, s, users(2));
  CHECK(m.log().empty());
  const TrainedModel init = TrainedModel::initialize(c, users(2));
  for (std::size_t t = 0; t < kTensorCount; ++t) CHECK(m.parameters()[t] == init.parameters()[t]);
}

TEST_CASE("training is deterministic and early stopping restores the best epoch") {
  std::mt19937_64 rng(9);
  const ExampleSet tr = random_set(rng, 30, 6, 120, 4);
  const ExampleSet va = random_set(rng, 10, 6, 40, 4);
  for (Architecture a : kAllArchitectures) {
    const ModelConfig c = small(a);
    const TrainedModel x = train(c, tr, va, users(4));
    const TrainedModel y = train(c, tr, va, users(4));
    for (std::size_t t = 0; t < kTensorCount; ++t) CHECK(x.parameters()[t] == y.parameters()[t]);
    REQUIRE_FALSE(x.log().empty());
    double best = -1.0;
    for (const auto& e : x.log()) best = std::max(best, e.val_macro_f1);
    CHECK(x.log()[x.best_epoch() - 1].val_macro_f1 == best);
    CHECK(macro_f1(va.labels(), predict(x, va)) == best);
  }
}

TEST_CASE("model JSON round trip is bit-exact") {
  std::mt19937_64 rng(10);
  const ExampleSet tr = random_set(rng, 10, 6, 40, 3);
  for (Architecture a : kAllArchitectures) {
    ModelConfig c = small(a);
    c.max_epochs = 3;
    c.patience = 3;
    const TrainedModel m = train(c, tr, tr, users(3));
    const TrainedModel back = TrainedModel::from_json(nlohmann::json::parse(m.to_json().dump()));
    for (std::size_t t = 0; t < kTensorCount; ++t) CHECK(back.parameters()[t] == m.parameters()[t]);
    CHECK(back.forward(tr) == m.forward(tr));
    CHECK(back.registry() == m.registry());
    CHECK(back.best_epoch() == m.best_epoch());
  }
  auto j = TrainedModel::initialize(small(Architecture::OneHot), users(2)).to_json();
  j["tensors"]["user_weights"]["cols"] = 3;
  CHECK_THROWS_AS(TrainedModel::from_json(j), Error);
}

TEST_CASE("config validation and parsing") {
  ModelConfig c;
  CHECK_NOTHROW(validate(c));
  c.patience = 100;
  CHECK_THROWS_AS(validate(c), Error);
  c = ModelConfig{};
  c.learning_rate = 0.0;
  CHECK_THROWS_AS(validate(c), Error);
  CHECK_THROWS_AS(parse_architecture("SHEEP-Medium"), Error);
  for (Architecture a : kAllArchitectures) CHECK(parse_architecture(to_string(a)) == a);
  const ModelConfig parsed = model_config_from_json({{"architecture", "sheep_simple"}, {"hidden_dim", 7}});
  CHECK(parsed.architecture == Architecture::SheepSimple);
  CHECK(parsed.hidden_dim == 7);
  CHECK(parsed.input_dim == ModelConfig{}.input_dim);
}

}  // TEST_SUITE
