#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "epr/corpus.hpp"

namespace epr {

// Open-class universal POS tags. Tokens outside this set are never phrase
// material on their own and are dropped when no rule claims them.
inline constexpr std::array<std::string_view, 7> kOpenClassPos = {"NOUN", "PROPN", "VERB", "ADJ",
                                                                  "ADV",  "INTJ",  "NUM"};

bool is_open_class(const Token& token);

enum class ChunkerMode { kRules, kRandom };

struct ChunkerConfig {
  ChunkerMode mode = ChunkerMode::kRules;
  std::optional<std::uint64_t> seed;  // required iff mode == kRandom

  static ChunkerConfig Rules() { return {}; }
  static ChunkerConfig Random(std::uint64_t seed) { return {ChunkerMode::kRandom, seed}; }
};

// Noun chunks from the fallback grammar [DET|PRP$|NUM|ADJ]* (NOUN|PROPN)+,
// used when the sentence carries no precomputed chunks.
std::vector<Span> fallback_noun_chunks(const Sentence& sentence);

// Rule-based phrase detection. Rules run in order (PP, NP, VP, Other) and
// claim tokens exclusively. Output is sorted by span start.
//
// Random mode keeps the rules-mode phrase count but splits the open-class
// token subsequence at uniformly random points.
std::vector<Phrase> chunk(const Sentence& sentence, Side side, const ChunkerConfig& config);

}  // namespace epr
