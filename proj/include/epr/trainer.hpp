#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "epr/classifier.hpp"
#include "epr/induction.hpp"
#include "epr/pipeline.hpp"

namespace epr {

enum class TrainMode { kEpr, kStp };

std::string_view to_string(TrainMode mode);
TrainMode parse_train_mode(std::string_view text);

struct TrainConfig {
  TrainMode mode = TrainMode::kEpr;
  InductionConfig induction;
  FeatureConfig features;
  double learning_rate = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon_adam = 1e-8;
  std::size_t batch_size = 32;
  std::size_t epochs = 3;
  double warmup_fraction = 0.1;
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& cfg);

// Cross-entropy on the induced sentence distribution. The target probability
// is floored at the induction epsilon so the loss stays finite.
double sentence_loss(const SentenceInduction& sentence, Label target, double floor = 1e-12);

// Mean over pairs of -log P_phrase(target).
double stp_loss(const std::vector<PhrasalPrediction>& pairs, Label target);

// Loss of one labeled sample under the configured mode; when `grads` is set,
// adds scale * d(loss)/d(params) to it. Samples without pairs contribute 0.
double sample_loss(const PreparedSample& sample, const ModelParams& params, const TrainConfig& cfg,
                   ModelParams* grads = nullptr, double scale = 1.0);

// Linear warmup over the first warmup_fraction of steps, then linear decay
// to zero at the final step. `step` counts from 1.
double learning_rate_at(std::size_t step, std::size_t total_steps, const TrainConfig& cfg);

struct AdamState {
  ModelParams m;
  ModelParams v;
  std::size_t step = 0;
};

AdamState make_adam_state(Eigen::Index r);

// One Adam update with bias correction. Increments state.step first.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr,
               const TrainConfig& cfg);

struct TrainState {
  ModelParams params;
  AdamState adam;
  std::uint64_t rng_seed = 0;
};

struct StepLog {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> heldout_accuracy;
};

struct TrainResult {
  TrainState state;
  std::vector<StepLog> steps;
  std::vector<EpochMetrics> epochs;
};

// Seeded 90/10 train/held-out split (held-out gets ceil(fraction * n)).
std::pair<std::vector<PreparedSample>, std::vector<PreparedSample>> split_heldout(
    std::vector<PreparedSample> samples, std::uint64_t seed, double fraction = 0.1);

double sentence_accuracy(const std::vector<PreparedSample>& samples, const ModelParams& params,
                         const TrainConfig& cfg);

using EpochCallback = std::function<void(const EpochMetrics&)>;

// Mini-batch training. Shuffling, initialization and reduction order are all
// derived from cfg.seed; the batch gradient is the mean over its samples and
// the last partial batch is kept.
TrainResult train(const std::vector<PreparedSample>& samples,
                  const std::vector<PreparedSample>& heldout, Eigen::Index dim,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

struct GradcheckConfig {
  InductionMode induction = InductionMode::kFuzzy;
  TrainMode mode = TrainMode::kEpr;
  FeatureVariant variant = FeatureVariant::kConcat;
  Eigen::Index dim = 3;           // <= 4
  std::size_t max_pairs = 3;      // <= 3
  double step = 1e-5;
  double tolerance = 1e-4;
  double tie_margin = 1e-3;
  bool dead_rectifier = false;    // force every pre-activation negative
  std::uint64_t seed = 0;
};

struct GradcheckEntry {
  std::string tensor;
  double max_relative_error = 0.0;
  bool passed = true;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  double max_relative_error = 0.0;
  bool passed = true;
  ModelParams analytic;
  ModelParams numeric;
};

// Relative error of one tensor: ||a - n||_inf / max(||a||_inf, ||n||_inf), 0 when both vanish.
double relative_error(const Eigen::Ref<const Eigen::VectorXd>& analytic,
                      const Eigen::Ref<const Eigen::VectorXd>& numeric);

// Analytic vs. central-difference gradients of the full loss on a random
// fixture kept at least tie_margin away from max ties and rectifier kinks.
GradcheckReport gradcheck(const GradcheckConfig& cfg);

// Same comparison on a caller-built fixture.
GradcheckReport gradcheck(const PreparedSample& fixture, const ModelParams& params,
                          const TrainConfig& cfg, double step, double tolerance);

}  // namespace epr
