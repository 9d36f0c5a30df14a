#include <cmath>

#include "doctest.h"
#include "epr/error.hpp"
#include "epr/rng.hpp"
#include "epr/trainer.hpp"
#include "helpers.hpp"
#include "synth_fixture.hpp"

using namespace epr;

namespace {

double mean_loss(const std::vector<PreparedSample>& s, const ModelParams& p, const TrainConfig& c) {
  double total = 0.0;
  for (const auto& x : s) total += sample_loss(x, p, c);
  return total / static_cast<double>(s.size());
}

}  // namespace

TEST_CASE("sentence loss") {
  SentenceInduction s;
  s.probs = Eigen::Vector3d(0.5, 0.25, 0.25);
  CHECK(sentence_loss(s, Label::kEntailment) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  s.probs = Eigen::Vector3d(0.6, 0.5, 0.05) / 1.15;
  CHECK(sentence_loss(s, Label::kContradiction) == doctest::Approx(0.83291).epsilon(1e-5));
  s.probs = Eigen::Vector3d(1.0, 0.0, 0.0);
  CHECK(sentence_loss(s, Label::kContradiction, 1e-12) ==
        doctest::Approx(-std::log(1e-12)).epsilon(1e-12));
}

TEST_CASE("phrase-level baseline loss") {
  PhrasalPrediction a{{0.5, 0.3, 0.2}};
  PhrasalPrediction b{{0.25, 0.5, 0.25}};
  CHECK(stp_loss({a, b}, Label::kEntailment) == doctest::Approx(1.5 * std::log(2.0)).epsilon(1e-12));
  CHECK(stp_loss({a, b}, Label::kEntailment) == doctest::Approx(1.039721).epsilon(1e-6));
}

TEST_CASE("learning-rate schedule") {
  TrainConfig cfg;
  cfg.learning_rate = 1.0;
  CHECK(learning_rate_at(1, 100, cfg) == doctest::Approx(0.1));
  CHECK(learning_rate_at(10, 100, cfg) == doctest::Approx(1.0));
  CHECK(learning_rate_at(55, 100, cfg) == doctest::Approx(45.0 / 90.0));
  CHECK(learning_rate_at(100, 100, cfg) == 0.0);
  CHECK(learning_rate_at(1, 3, cfg) == doctest::Approx(1.0));  // warmup rounds up to one step
}

TEST_CASE("one Adam step by hand") {
  TrainConfig cfg;
  auto params = ModelParams::Zero(1);
  params.output_bias[0] = 0.5;
  auto grads = ModelParams::Zero(1);
  grads.output_bias[0] = 0.2;
  auto state = make_adam_state(1);
  adam_step(params, grads, state, 0.1, cfg);
  // m = 0.02, v = 4e-5; bias-corrected m = 0.2, v = 0.04.
  CHECK(state.step == 1);
  CHECK(state.m.output_bias[0] == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(state.v.output_bias[0] == doctest::Approx(4e-5).epsilon(1e-12));
  CHECK(params.output_bias[0] == doctest::Approx(0.5 - 0.1 * 0.2 / (0.2 + 1e-8)).epsilon(1e-12));
  // Second step with gradient -0.1.
  grads.output_bias[0] = -0.1;
  adam_step(params, grads, state, 0.1, cfg);
  const double m = 0.9 * 0.02 + 0.1 * -0.1;
  const double v = 0.999 * 4e-5 + 0.001 * 0.01;
  const double mh = m / (1 - 0.81);
  const double vh = v / (1 - 0.999 * 0.999);
  CHECK(params.output_bias[0] ==
        doctest::Approx(0.5 - 0.1 * 0.2 / (0.2 + 1e-8) - 0.1 * mh / (std::sqrt(vh) + 1e-8))
            .epsilon(1e-12));
}

TEST_CASE("a zero gradient leaves parameters unchanged") {
  TrainConfig cfg;
  auto params = ModelParams::Init(3, 5);
  const auto before = params;
  auto state = make_adam_state(3);
  adam_step(params, ModelParams::Zero(3), state, 0.1, cfg);
  CHECK(params == before);
}

TEST_CASE("config validation") {
  TrainConfig cfg;
  cfg.batch_size = 0;
  CHECK_THROWS_AS(validate(cfg), ValidationError);
  cfg = {};
  cfg.learning_rate = -1;
  CHECK_THROWS_AS(validate(cfg), ValidationError);
  cfg = {};
  cfg.beta1 = 1.0;
  CHECK_THROWS_AS(validate(cfg), ValidationError);
  CHECK_THROWS_AS(parse_train_mode("xyz"), ValidationError);
}

TEST_CASE("held-out split is seeded, disjoint and sized by ceiling") {
  std::vector<PreparedSample> v(25);
  for (std::size_t i = 0; i < v.size(); ++i) v[i].id = std::to_string(i);
  auto [a, b] = split_heldout(v, 3);
  CHECK(b.size() == 3);
  CHECK(a.size() == 22);
  auto [a2, b2] = split_heldout(v, 3);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(b[i].id == b2[i].id);
  for (const auto& x : a) ids.insert(x.id);
  for (const auto& x : b) CHECK(ids.insert(x.id).second);
}

TEST_CASE("samples without pairs contribute nothing") {
  PreparedSample s;
  s.id = "empty";
  s.label = Label::kContradiction;
  auto params = ModelParams::Init(4, 1);
  auto grads = ModelParams::Zero(4);
  TrainConfig cfg;
  cfg.features.variant = FeatureVariant::kLocal;
  CHECK(sample_loss(s, params, cfg, &grads) == 0.0);
  CHECK(grads == ModelParams::Zero(4));
}

TEST_CASE("overfits a small batch") {
  testing::TempDir dir("overfit");
  auto data = testing::make_synth(8, 12, dir.path());
  const auto prepared = prepare_all(data.corpus.corpus(), data.provider, {});
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.batch_size = 8;
  cfg.epochs = 200;
  cfg.seed = 1;
  const auto init = ModelParams::Init(representation_dim(cfg.features, data.provider.dim()),
                                      derive_seed(cfg.seed, 1));
  const double before = mean_loss(prepared, init, cfg);
  const auto result = train(prepared, {}, data.provider.dim(), cfg);
  CHECK(result.steps.size() == 200);
  const double after = mean_loss(prepared, result.state.params, cfg);
  CHECK(after < 0.5 * before);
}

TEST_CASE("training is deterministic and logs every step") {
  testing::TempDir dir("det");
  auto data = testing::make_synth(70, 3, dir.path());
  const auto prepared = prepare_all(data.corpus.corpus(), data.provider, {}, 4);
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.epochs = 2;
  cfg.seed = 9;
  auto [fit, held] = split_heldout(prepared, 9);
  const auto a = train(fit, held, data.provider.dim(), cfg);
  const auto b = train(fit, held, data.provider.dim(), cfg);
  CHECK(a.state.params == b.state.params);
  CHECK(a.steps.size() == 2 * ((fit.size() + 31) / 32));
  REQUIRE(a.epochs.size() == 2);
  CHECK(a.epochs[1].heldout_accuracy.has_value());
  CHECK(a.steps.back().lr == 0.0);
}

TEST_CASE("gradient check passes in every mode") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (auto ind : {InductionMode::kFuzzy, InductionMode::kMean}) {
      for (auto mode : {TrainMode::kEpr, TrainMode::kStp}) {
        GradcheckConfig gc;
        gc.seed = seed;
        gc.induction = ind;
        gc.mode = mode;
        gc.variant = static_cast<FeatureVariant>(seed % 3);
        const auto r = gradcheck(gc);
        INFO("seed ", seed);
        CHECK(r.passed);
        CHECK(r.max_relative_error <= 1e-4);
        CHECK(r.entries.size() == 6);
      }
    }
  }
}

TEST_CASE("gradient check with dead rectifiers still passes") {
  GradcheckConfig gc;
  gc.dead_rectifier = true;
  gc.seed = 3;
  const auto r = gradcheck(gc);
  CHECK(r.passed);
  CHECK(r.analytic.hidden_weight.isZero());
}
