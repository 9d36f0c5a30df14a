#pragma once

#include <filesystem>

#include "epr/embedder.hpp"
#include "epr/pipeline.hpp"
#include "epr/synthcorpus.hpp"

namespace testing {

// A generated corpus with its embedding file loaded back through the file provider.
struct SynthData {
  epr::SynthCorpus corpus;
  epr::EmbeddingProvider provider;
};

inline SynthData make_synth(std::size_t n, std::uint64_t seed, const std::filesystem::path& dir,
                            const std::string& prefix = "synth") {
  epr::SynthConfig cfg;
  cfg.n = n;
  cfg.seed = seed;
  cfg.id_prefix = prefix;
  auto corpus = epr::generate(epr::Lexicon::Default(), cfg);
  const auto path = dir / (prefix + "-emb.jsonl");
  epr::write_embeddings(corpus.embeddings, corpus.dim, path);
  return {std::move(corpus), epr::EmbeddingProvider::FromFile(path)};
}

}  // namespace testing
