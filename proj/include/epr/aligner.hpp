#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "epr/corpus.hpp"
#include "epr/embedder.hpp"

namespace epr {

enum class AlignMode { kMutual, kRandom };

struct AlignmentResult {
  std::vector<PhrasePair> pairs;  // aligned first, then premise-only, then hypothesis-only
  std::size_t k_aligned = 0;
  std::size_t k_total = 0;
};

// Index pairs (m, n) where n is the row argmax of m and m is the column
// argmax of n. Ties go to the lowest index. Sorted by m.
std::vector<std::pair<Eigen::Index, Eigen::Index>> mutual_argmax(const Eigen::MatrixXd& sim);

// Dense premise-by-hypothesis similarity matrix.
Eigen::MatrixXd similarity_matrix(const std::vector<PhraseEmbedding>& premise,
                                  const std::vector<PhraseEmbedding>& hypothesis,
                                  const AlignConfig& cfg);

// Builds pairs from a matching over phrase indices; unmatched phrases become
// one-sided pairs. Output ordering is normative (see AlignmentResult).
AlignmentResult assemble_pairs(const std::vector<Phrase>& premise,
                               const std::vector<Phrase>& hypothesis,
                               const std::vector<std::pair<Eigen::Index, Eigen::Index>>& matches);

// Same K as the mutual matching, but a uniformly random injective matching.
std::vector<std::pair<Eigen::Index, Eigen::Index>> random_matching(Eigen::Index rows,
                                                                   Eigen::Index cols,
                                                                   std::size_t k,
                                                                   std::uint64_t seed);

AlignmentResult align(const Sample& sample, const std::vector<Phrase>& premise,
                      const std::vector<Phrase>& hypothesis, const EmbeddingProvider& provider,
                      const AlignConfig& cfg, AlignMode mode = AlignMode::kMutual,
                      std::optional<std::uint64_t> seed = std::nullopt);

}  // namespace epr
