#include "epr/pipeline.hpp"

#include "epr/rng.hpp"

namespace epr {

namespace {

std::uint64_t sample_seed(std::uint64_t seed, const std::string& id, std::uint64_t stream) {
  return derive_seed(hash_key(id, seed), stream);
}

}  // namespace

std::vector<Phrase> detect_phrases(const Sample& sample, Side side, const PipelineConfig& cfg) {
  const ChunkerConfig chunker = cfg.chunker == ChunkerMode::kRules
                                    ? ChunkerConfig::Rules()
                                    : ChunkerConfig::Random(sample_seed(cfg.seed, sample.id, 1));
  return chunk(sample.sentence(side), side, chunker);
}

PreparedSample prepare(const Sample& sample, const EmbeddingProvider& provider,
                       const PipelineConfig& cfg) {
  PreparedSample out;
  out.id = sample.id;
  out.label = sample.label;
  const auto premise = detect_phrases(sample, Side::kPremise, cfg);
  const auto hypothesis = detect_phrases(sample, Side::kHypothesis, cfg);
  out.alignment = align(sample, premise, hypothesis, provider, cfg.align, cfg.aligner,
                        sample_seed(cfg.seed, sample.id, 2));
  for (const auto& pair : out.alignment.pairs) {
    out.premise.push_back(pair.premise ? std::optional(provider.embed(sample, *pair.premise))
                                       : std::nullopt);
    out.hypothesis.push_back(pair.hypothesis
                                 ? std::optional(provider.embed(sample, *pair.hypothesis))
                                 : std::nullopt);
  }
  return out;
}

std::vector<PreparedSample> prepare_all(const std::vector<Sample>& samples,
                                        const EmbeddingProvider& provider,
                                        const PipelineConfig& cfg, unsigned threads) {
  std::vector<PreparedSample> out(samples.size());
  parallel_for(samples.size(), threads,
               [&](std::size_t i) { out[i] = prepare(samples[i], provider, cfg); });
  return out;
}

PredictionRecord predict(const PreparedSample& sample, const ModelParams& params,
                         const FeatureConfig& features, const InductionConfig& induction) {
  PredictionRecord rec;
  rec.sample_id = sample.id;
  std::vector<PairProbs> probs;
  for (std::size_t k = 0; k < sample.pair_count(); ++k) {
    const auto& pair = sample.alignment.pairs[k];
    const PhraseEmbedding* p = sample.premise[k] ? &*sample.premise[k] : nullptr;
    const PhraseEmbedding* h = sample.hypothesis[k] ? &*sample.hypothesis[k] : nullptr;
    PredictedPair pp;
    pp.pair = pair;
    pp.prediction = predict_pair(p, h, params, features, nullptr, sample.id);
    pp.label = pp.prediction.argmax();
    probs.push_back({pp.prediction.probs, pair.aligned});
    rec.pairs.push_back(std::move(pp));
  }
  if (probs.empty()) {
    rec.sentence_scores.s_e = rec.sentence_scores.s_c = rec.sentence_scores.s_n = 1.0 / 3.0;
    rec.sentence_scores.z = 1.0;
    rec.sentence_scores.probs = Eigen::Vector3d::Constant(1.0 / 3.0);
  } else {
    rec.sentence_scores = induce(probs, induction);
  }
  rec.sentence_label = rec.sentence_scores.argmax();
  return rec;
}

std::vector<PredictionRecord> predict_all(const std::vector<PreparedSample>& samples,
                                          const ModelParams& params, const FeatureConfig& features,
                                          const InductionConfig& induction, unsigned threads) {
  std::vector<PredictionRecord> out(samples.size());
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    out[i] = predict(samples[i], params, features, induction);
  });
  return out;
}

}  // namespace epr
