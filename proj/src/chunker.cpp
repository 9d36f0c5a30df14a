#include "epr/chunker.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include "epr/error.hpp"
#include "epr/rng.hpp"

namespace epr {

namespace {

bool is_negation(const Token& t) {
  if (t.pos != "PART") return false;
  std::string lower = t.text;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return lower == "not" || lower == "n't";
}

bool is_noun_head(const Token& t) { return t.pos == "NOUN" || t.pos == "PROPN"; }

bool is_np_modifier(const Token& t) {
  return t.pos == "DET" || t.pos == "NUM" || t.pos == "ADJ" || (t.pos == "PRON" && t.tag == "PRP$");
}

void check_tags(const Sentence& sentence) {
  std::vector<std::string> unknown;
  for (const auto& t : sentence.tokens) {
    if (!is_universal_pos(t.pos) &&
        std::find(unknown.begin(), unknown.end(), t.pos) == unknown.end()) {
      unknown.push_back(t.pos);
    }
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& u : unknown) list += (list.empty() ? "" : ", ") + ("'" + u + "'");
    throw ValidationError("unknown POS tag(s): " + list);
  }
}

std::vector<Phrase> chunk_rules(const Sentence& sentence, Side side) {
  const auto& tokens = sentence.tokens;
  const std::size_t n = tokens.size();
  std::vector<bool> used(n, false);
  std::vector<Phrase> phrases;

  auto claim = [&](Span span, PhraseKind kind) {
    for (std::size_t i = span.start; i < span.end; ++i) used[i] = true;
    phrases.push_back({side, span, kind});
  };
  auto free_range = [&](std::size_t s, std::size_t e) {
    for (std::size_t i = s; i < e; ++i) {
      if (used[i]) return false;
    }
    return true;
  };

  std::vector<Span> chunks =
      sentence.noun_chunks ? *sentence.noun_chunks : fallback_noun_chunks(sentence);
  std::sort(chunks.begin(), chunks.end());

  // 1. PP: IN immediately followed by a noun chunk.
  for (const auto& c : chunks) {
    if (c.start == 0) continue;
    const std::size_t prep = c.start - 1;
    if (tokens[prep].tag == "IN" && free_range(prep, c.end)) claim({prep, c.end}, PhraseKind::kPP);
  }
  // 2. Remaining noun chunks.
  for (const auto& c : chunks) {
    if (free_range(c.start, c.end)) claim(c, PhraseKind::kNP);
  }
  // 3. VP: [AUX] [NOT] VERB [RP].
  for (std::size_t v = 0; v < n; ++v) {
    if (used[v] || tokens[v].pos != "VERB") continue;
    std::size_t start = v;
    if (start > 0 && !used[start - 1] && is_negation(tokens[start - 1])) --start;
    if (start > 0 && !used[start - 1] && tokens[start - 1].pos == "AUX") --start;
    std::size_t end = v + 1;
    if (end < n && !used[end] && tokens[end].tag == "RP") ++end;
    claim({start, end}, PhraseKind::kVP);
  }
  // 4. Leftover open-class words.
  for (std::size_t i = 0; i < n; ++i) {
    if (!used[i] && is_open_class(tokens[i])) claim({i, i + 1}, PhraseKind::kOther);
  }

  std::sort(phrases.begin(), phrases.end(),
            [](const Phrase& a, const Phrase& b) { return a.span < b.span; });
  return phrases;
}

std::vector<Phrase> chunk_random(const Sentence& sentence, Side side, std::size_t count,
                                 std::uint64_t seed) {
  std::vector<std::size_t> open;
  for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
    if (is_open_class(sentence.tokens[i])) open.push_back(i);
  }
  count = std::min(count, open.size());
  if (count == 0) return {};

  // Choose count-1 distinct cut points among the open.size()-1 gaps.
  std::vector<std::size_t> gaps(open.size() - 1);
  for (std::size_t i = 0; i < gaps.size(); ++i) gaps[i] = i + 1;
  Rng rng(seed);
  rng.shuffle(gaps);
  std::vector<std::size_t> cuts(gaps.begin(), gaps.begin() + static_cast<long>(count - 1));
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(open.size());

  std::vector<Phrase> phrases;
  std::size_t begin = 0;
  for (std::size_t cut : cuts) {
    phrases.push_back({side, {open[begin], open[cut - 1] + 1}, PhraseKind::kOther});
    begin = cut;
  }
  return phrases;
}

}  // namespace

bool is_open_class(const Token& token) {
  return std::find(kOpenClassPos.begin(), kOpenClassPos.end(), token.pos) != kOpenClassPos.end();
}

std::vector<Span> fallback_noun_chunks(const Sentence& sentence) {
  const auto& tokens = sentence.tokens;
  std::vector<Span> chunks;
  std::size_t i = 0;
  while (i < tokens.size()) {
    std::size_t j = i;
    while (j < tokens.size() && is_np_modifier(tokens[j])) ++j;
    std::size_t k = j;
    while (k < tokens.size() && is_noun_head(tokens[k])) ++k;
    if (k > j) {
      chunks.push_back({i, k});
      i = k;
    } else {
      ++i;
    }
  }
  return chunks;
}

std::vector<Phrase> chunk(const Sentence& sentence, Side side, const ChunkerConfig& config) {
  check_tags(sentence);
  if ((config.mode == ChunkerMode::kRandom) != config.seed.has_value()) {
    throw ValidationError("chunker seed is required for random mode and only for random mode");
  }
  auto phrases = chunk_rules(sentence, side);
  if (config.mode == ChunkerMode::kRules) return phrases;
  const auto side_stream = static_cast<std::uint64_t>(side == Side::kPremise ? 0 : 1);
  return chunk_random(sentence, side, phrases.size(), derive_seed(*config.seed, side_stream));
}

}  // namespace epr
