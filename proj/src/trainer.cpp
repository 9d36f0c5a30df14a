#include "epr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "epr/error.hpp"
#include "epr/rng.hpp"

namespace epr {

std::string_view to_string(TrainMode mode) { return mode == TrainMode::kEpr ? "epr" : "stp"; }

TrainMode parse_train_mode(std::string_view text) {
  if (text == "epr") return TrainMode::kEpr;
  if (text == "stp") return TrainMode::kStp;
  throw ValidationError("unknown training mode '" + std::string(text) + "'");
}

void validate(const TrainConfig& cfg) {
  validate(cfg.induction);
  if (!(cfg.learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
  if (!(cfg.warmup_fraction > 0.0 && cfg.warmup_fraction < 1.0)) {
    throw ValidationError("warmup fraction must lie in (0, 1)");
  }
  if (cfg.batch_size < 1) throw ValidationError("batch size must be at least 1");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0 && cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) {
    throw ValidationError("Adam betas must lie in [0, 1)");
  }
  if (!(cfg.epsilon_adam > 0.0)) throw ValidationError("Adam epsilon must be positive");
}

double sentence_loss(const SentenceInduction& sentence, Label target, double floor) {
  return -std::log(std::max(sentence.probs[static_cast<Eigen::Index>(target)], floor));
}

double stp_loss(const std::vector<PhrasalPrediction>& pairs, Label target) {
  if (pairs.empty()) throw DomainError("STP loss needs at least one phrase pair");
  double total = 0.0;
  for (const auto& p : pairs) total -= std::log(p.probs[static_cast<Eigen::Index>(target)]);
  return total / static_cast<double>(pairs.size());
}

double sample_loss(const PreparedSample& sample, const ModelParams& params, const TrainConfig& cfg,
                   ModelParams* grads, double scale) {
  if (!sample.label) throw ValidationError("sample '" + sample.id + "' has no label");
  const std::size_t count = sample.pair_count();
  if (count == 0) return 0.0;
  const Label target = *sample.label;
  const auto t = static_cast<Eigen::Index>(target);

  std::vector<PairTape> tapes(count);
  std::vector<PhrasalPrediction> preds(count);
  std::vector<PairProbs> probs(count);
  for (std::size_t k = 0; k < count; ++k) {
    const PhraseEmbedding* p = sample.premise[k] ? &*sample.premise[k] : nullptr;
    const PhraseEmbedding* h = sample.hypothesis[k] ? &*sample.hypothesis[k] : nullptr;
    preds[k] = predict_pair(p, h, params, cfg.features, grads ? &tapes[k] : nullptr, sample.id);
    probs[k] = {preds[k].probs, sample.alignment.pairs[k].aligned};
  }

  if (cfg.mode == TrainMode::kStp) {
    const double loss = stp_loss(preds, target);
    if (grads != nullptr) {
      const double n = static_cast<double>(count);
      for (std::size_t k = 0; k < count; ++k) {
        Eigen::Vector3d d = Eigen::Vector3d::Zero();
        d[t] = -scale / (n * preds[k].probs[t]);
        backward(tapes[k], d, params, *grads);
      }
    }
    return loss;
  }

  InductionTape itape;
  const SentenceInduction sentence = induce(probs, cfg.induction, grads ? &itape : nullptr);
  const double loss = sentence_loss(sentence, target, cfg.induction.epsilon);
  if (grads != nullptr && sentence.probs[t] >= cfg.induction.epsilon) {
    Eigen::Vector3d d = Eigen::Vector3d::Zero();
    d[t] = -scale / sentence.probs[t];
    const Eigen::MatrixXd dpairs = induce_backward(itape, d);
    for (std::size_t k = 0; k < count; ++k) {
      backward(tapes[k], dpairs.row(static_cast<Eigen::Index>(k)).transpose(), params, *grads);
    }
  }
  return loss;
}

double learning_rate_at(std::size_t step, std::size_t total_steps, const TrainConfig& cfg) {
  if (total_steps == 0) return 0.0;
  const std::size_t warmup = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(cfg.warmup_fraction * static_cast<double>(total_steps))),
      1, total_steps);
  const double base = cfg.learning_rate;
  if (step <= warmup) return base * static_cast<double>(step) / static_cast<double>(warmup);
  if (step >= total_steps) return 0.0;
  return base * static_cast<double>(total_steps - step) /
         static_cast<double>(total_steps - warmup);
}

AdamState make_adam_state(Eigen::Index r) {
  return {ModelParams::Zero(r), ModelParams::Zero(r), 0};
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr,
               const TrainConfig& cfg) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  auto p = params.tensors();
  auto g = grads.tensors();
  auto m = state.m.tensors();
  auto v = state.v.tensors();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i].cwiseAbs2();
    p[i].array() -= lr * (m[i].array() / c1) / ((v[i].array() / c2).sqrt() + cfg.epsilon_adam);
  }
}

std::pair<std::vector<PreparedSample>, std::vector<PreparedSample>> split_heldout(
    std::vector<PreparedSample> samples, std::uint64_t seed, double fraction) {
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, 0x5b117));
  rng.shuffle(order);
  const auto held = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(samples.size())));
  std::vector<bool> is_held(samples.size(), false);
  for (std::size_t i = 0; i < held && i < order.size(); ++i) is_held[order[i]] = true;
  std::vector<PreparedSample> train_part;
  std::vector<PreparedSample> held_part;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    (is_held[i] ? held_part : train_part).push_back(std::move(samples[i]));
  }
  return {std::move(train_part), std::move(held_part)};
}

double sentence_accuracy(const std::vector<PreparedSample>& samples, const ModelParams& params,
                         const TrainConfig& cfg) {
  if (samples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& s : samples) {
    if (!s.label) throw ValidationError("sample '" + s.id + "' has no label");
    if (predict(s, params, cfg.features, cfg.induction).sentence_label == *s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

TrainResult train(const std::vector<PreparedSample>& samples,
                  const std::vector<PreparedSample>& heldout, Eigen::Index dim,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  validate(cfg);
  for (const auto& s : samples) {
    if (!s.label) throw ValidationError("training sample '" + s.id + "' has no label");
  }
  const Eigen::Index r = representation_dim(cfg.features, dim);

  TrainResult result;
  result.state.params = ModelParams::Init(r, derive_seed(cfg.seed, 1));
  result.state.adam = make_adam_state(r);
  result.state.rng_seed = cfg.seed;
  ModelParams& params = result.state.params;

  const std::size_t n = samples.size();
  const std::size_t batches = (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total_steps = batches * cfg.epochs;
  ModelParams grads = ModelParams::Zero(r);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng rng(derive_seed(cfg.seed, 100 + epoch));
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t begin = b * cfg.batch_size;
      const std::size_t end = std::min(n, begin + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(end - begin);
      grads.set_zero();
      double batch_loss = 0.0;
      for (std::size_t i = begin; i < end; ++i) {
        batch_loss += sample_loss(samples[order[i]], params, cfg, &grads, scale);
      }
      batch_loss *= scale;
      ++step;
      if (!std::isfinite(batch_loss) || !grads.all_finite()) {
        throw NumericError("non-finite loss or gradient at step " + std::to_string(step));
      }
      const double lr = learning_rate_at(step, total_steps, cfg);
      adam_step(params, grads, result.state.adam, lr, cfg);
      result.steps.push_back({step, epoch, lr, batch_loss});
      epoch_loss += batch_loss * static_cast<double>(end - begin);
    }
    EpochMetrics metrics;
    metrics.epoch = epoch;
    metrics.train_loss = n ? epoch_loss / static_cast<double>(n) : 0.0;
    if (!heldout.empty()) metrics.heldout_accuracy = sentence_accuracy(heldout, params, cfg);
    result.epochs.push_back(metrics);
    if (on_epoch) on_epoch(metrics);
  }
  return result;
}

// ---------------------------------------------------------------------------

double relative_error(const Eigen::Ref<const Eigen::VectorXd>& analytic,
                      const Eigen::Ref<const Eigen::VectorXd>& numeric) {
  if (analytic.size() == 0) return 0.0;
  const double scale = std::max(analytic.cwiseAbs().maxCoeff(), numeric.cwiseAbs().maxCoeff());
  if (scale == 0.0) return 0.0;
  return (analytic - numeric).cwiseAbs().maxCoeff() / scale;
}

GradcheckReport gradcheck(const PreparedSample& fixture, const ModelParams& params,
                          const TrainConfig& cfg, double step, double tolerance) {
  GradcheckReport report;
  report.analytic = ModelParams::Zero(params.r());
  sample_loss(fixture, params, cfg, &report.analytic);

  report.numeric = ModelParams::Zero(params.r());
  ModelParams probe = params;
  auto probe_t = probe.tensors();
  auto numeric_t = report.numeric.tensors();
  const auto analytic_t = std::as_const(report.analytic).tensors();
  for (std::size_t t = 0; t < probe_t.size(); ++t) {
    for (Eigen::Index i = 0; i < probe_t[t].size(); ++i) {
      const double saved = probe_t[t][i];
      probe_t[t][i] = saved + step;
      const double plus = sample_loss(fixture, probe, cfg);
      probe_t[t][i] = saved - step;
      const double minus = sample_loss(fixture, probe, cfg);
      probe_t[t][i] = saved;
      numeric_t[t][i] = (plus - minus) / (2.0 * step);
    }
    GradcheckEntry entry;
    entry.tensor = std::string(ModelParams::kTensorNames[t]);
    entry.max_relative_error = relative_error(analytic_t[t], numeric_t[t]);
    entry.passed = entry.max_relative_error <= tolerance;
    report.max_relative_error = std::max(report.max_relative_error, entry.max_relative_error);
    report.passed = report.passed && entry.passed;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

namespace {

Eigen::VectorXd random_vector(Eigen::Index dim, Rng& rng) {
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = rng.normal();
  return v;
}

bool far_from_ties(const std::vector<double>& values, double margin) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (std::size_t j = i + 1; j < values.size(); ++j) {
      if (std::abs(values[i] - values[j]) < margin) return false;
    }
  }
  return true;
}

// Rejects fixtures where a finite-difference probe could cross a kink.
bool fixture_is_smooth(const PreparedSample& s, const ModelParams& params, const TrainConfig& cfg,
                       double margin, bool dead) {
  std::vector<double> aligned_c;
  std::vector<double> all_n;
  for (std::size_t k = 0; k < s.pair_count(); ++k) {
    const PhraseEmbedding* p = s.premise[k] ? &*s.premise[k] : nullptr;
    const PhraseEmbedding* h = s.hypothesis[k] ? &*s.hypothesis[k] : nullptr;
    const Eigen::VectorXd pr = represent(p, Side::kPremise, params, cfg.features);
    const Eigen::VectorXd hr = represent(h, Side::kHypothesis, params, cfg.features);
    const Eigen::VectorXd x = heuristic_features(pr, hr);
    const Eigen::VectorXd pre = params.hidden_weight.transpose() * x + params.hidden_bias;
    if (!dead && pre.cwiseAbs().minCoeff() < margin) return false;
    if ((p == nullptr || h == nullptr) && (pr - hr).cwiseAbs().minCoeff() < margin) return false;
    const auto pred = predict_pair(p, h, params, cfg.features);
    if (pred.probs.minCoeff() < 1e-6) return false;
    if (s.alignment.pairs[k].aligned) aligned_c.push_back(pred.probs[1]);
    all_n.push_back(pred.probs[2]);
  }
  return far_from_ties(aligned_c, margin) && far_from_ties(all_n, margin);
}

}  // namespace

GradcheckReport gradcheck(const GradcheckConfig& gc) {
  if (gc.dim < 1 || gc.dim > 4) throw ValidationError("gradcheck dim must lie in [1, 4]");
  if (gc.max_pairs < 1 || gc.max_pairs > 3) throw ValidationError("gradcheck pairs must lie in [1, 3]");
  TrainConfig cfg;
  cfg.mode = gc.mode;
  cfg.induction.mode = gc.induction;
  cfg.features.variant = gc.variant;
  const Eigen::Index r = representation_dim(cfg.features, gc.dim);

  Rng rng(derive_seed(gc.seed, 0x6c));
  for (int attempt = 0; attempt < 10000; ++attempt) {
    PreparedSample s;
    s.id = "gradcheck-" + std::to_string(gc.seed);
    s.label = kLabels[rng.below(3)];
    const std::size_t count = 1 + rng.below(gc.max_pairs);
    for (std::size_t k = 0; k < count; ++k) {
      const Phrase p{Side::kPremise, {k, k + 1}, PhraseKind::kOther};
      const Phrase h{Side::kHypothesis, {k, k + 1}, PhraseKind::kOther};
      const auto kind = rng.below(4);  // half aligned, a quarter each one-sided
      PhraseEmbedding pe{random_vector(gc.dim, rng), random_vector(gc.dim, rng)};
      PhraseEmbedding he{random_vector(gc.dim, rng), random_vector(gc.dim, rng)};
      if (kind < 2) {
        s.alignment.pairs.push_back(PhrasePair::Aligned(p, h));
        s.premise.emplace_back(std::move(pe));
        s.hypothesis.emplace_back(std::move(he));
      } else if (kind == 2) {
        s.alignment.pairs.push_back(PhrasePair::PremiseOnly(p));
        s.premise.emplace_back(std::move(pe));
        s.hypothesis.emplace_back(std::nullopt);
      } else {
        s.alignment.pairs.push_back(PhrasePair::HypothesisOnly(h));
        s.premise.emplace_back(std::nullopt);
        s.hypothesis.emplace_back(std::move(he));
      }
    }
    s.alignment.k_total = count;

    ModelParams params = ModelParams::Init(r, rng.next());
    for (Eigen::Index i = 0; i < r; ++i) params.hidden_bias[i] = rng.uniform(-0.5, 0.5);
    for (Eigen::Index i = 0; i < 3; ++i) params.output_bias[i] = rng.uniform(-0.5, 0.5);
    params.output_weight *= 3.0;
    if (gc.dead_rectifier) params.hidden_bias.setConstant(-1e3);

    if (!fixture_is_smooth(s, params, cfg, gc.tie_margin, gc.dead_rectifier)) continue;
    return gradcheck(s, params, cfg, gc.step, gc.tolerance);
  }
  throw DomainError("could not draw a tie-free gradcheck fixture");
}

}  // namespace epr
