#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "epr/aligner.hpp"
#include "epr/chunker.hpp"
#include "epr/classifier.hpp"
#include "epr/corpus.hpp"
#include "epr/embedder.hpp"
#include "epr/induction.hpp"

namespace epr {

// Phrase detection + alignment settings, including the ablation switches.
struct PipelineConfig {
  ChunkerMode chunker = ChunkerMode::kRules;
  AlignMode aligner = AlignMode::kMutual;
  AlignConfig align;
  std::uint64_t seed = 0;  // drives the random chunker / aligner per sample
};

// A sample with its phrase pairs and the embeddings of every present side.
struct PreparedSample {
  std::string id;
  std::optional<Label> label;
  AlignmentResult alignment;
  std::vector<std::optional<PhraseEmbedding>> premise;     // per pair
  std::vector<std::optional<PhraseEmbedding>> hypothesis;  // per pair

  std::size_t pair_count() const { return alignment.pairs.size(); }
};

std::vector<Phrase> detect_phrases(const Sample& sample, Side side, const PipelineConfig& cfg);

PreparedSample prepare(const Sample& sample, const EmbeddingProvider& provider,
                       const PipelineConfig& cfg);

// Order of the result follows the input; `threads` caps worker count.
std::vector<PreparedSample> prepare_all(const std::vector<Sample>& samples,
                                        const EmbeddingProvider& provider,
                                        const PipelineConfig& cfg, unsigned threads = 1);

// Forward pass of the whole model on one sample. Samples without any phrase
// get no pairs and uniform sentence probabilities.
PredictionRecord predict(const PreparedSample& sample, const ModelParams& params,
                         const FeatureConfig& features, const InductionConfig& induction);

std::vector<PredictionRecord> predict_all(const std::vector<PreparedSample>& samples,
                                          const ModelParams& params, const FeatureConfig& features,
                                          const InductionConfig& induction, unsigned threads = 1);

// Runs `fn(i)` for i in [0, n) over up to `threads` workers.
template <typename F>
void parallel_for(std::size_t n, unsigned threads, F&& fn);

}  // namespace epr

#include <thread>

namespace epr {

template <typename F>
void parallel_for(std::size_t n, unsigned threads, F&& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace epr
