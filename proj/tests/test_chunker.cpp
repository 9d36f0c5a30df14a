#include "doctest.h"
#include "epr/chunker.hpp"
#include "epr/error.hpp"
#include "epr/rng.hpp"
#include "helpers.hpp"

using namespace epr;
using testing::tagged;

namespace {

struct Expect {
  PhraseKind kind;
  std::string text;
};

void check(const Sentence& s, const std::vector<Expect>& expected) {
  const auto got = chunk(s, Side::kPremise, ChunkerConfig::Rules());
  REQUIRE(got.size() == expected.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i].kind == expected[i].kind);
    CHECK(s.text(got[i].span) == expected[i].text);
    CHECK(got[i].side == Side::kPremise);
  }
}

const char* kWorkedSentence =
    "The/DET/DT woman/NOUN/NN is/AUX/VBZ showing/VERB/VBG off/ADP/RP her/PRON/PRP$ "
    "blue/ADJ/JJ dog/NOUN/NN at/ADP/IN the/DET/DT playground/NOUN/NN";

}  // namespace

TEST_CASE("worked sentence with fallback noun chunks") {
  check(tagged(kWorkedSentence), {{PhraseKind::kNP, "The woman"},
                          {PhraseKind::kVP, "is showing off"},
                          {PhraseKind::kNP, "her blue dog"},
                          {PhraseKind::kPP, "at the playground"}});
}

TEST_CASE("worked sentence with supplied noun chunks") {
  Sentence s = tagged(kWorkedSentence);
  s.noun_chunks = std::vector<Span>{{0, 2}, {5, 8}, {9, 11}};
  check(s, {{PhraseKind::kNP, "The woman"},
            {PhraseKind::kVP, "is showing off"},
            {PhraseKind::kNP, "her blue dog"},
            {PhraseKind::kPP, "at the playground"}});
}

TEST_CASE("closed-class only sentence has no phrases") {
  check(tagged("there/PRON/EX is/AUX/VBZ"), {});
}

TEST_CASE("negated auxiliary verb group") {
  check(tagged("Dogs/NOUN/NNS could/AUX/MD not/PART/RB help/VERB/VB barking/VERB/VBG "
               "loudly/ADV/RB"),
        {{PhraseKind::kNP, "Dogs"},
         {PhraseKind::kVP, "could not help"},
         {PhraseKind::kVP, "barking"},
         {PhraseKind::kOther, "loudly"}});
}

TEST_CASE("contracted negation and bare particle") {
  check(tagged("He/PRON/PRP does/AUX/VBZ n't/PART/RB give/VERB/VB up/ADP/RP"),
        {{PhraseKind::kVP, "does n't give up"}});
}

TEST_CASE("preposition not followed by a noun chunk is dropped") {
  check(tagged("She/PRON/PRP looked/VERB/VBD up/ADP/IN quickly/ADV/RB"),
        {{PhraseKind::kVP, "looked"}, {PhraseKind::kOther, "quickly"}});
}

TEST_CASE("fallback grammar") {
  const Sentence s = tagged(
      "two/NUM/CD big/ADJ/JJ dogs/NOUN/NNS met/VERB/VBD John/PROPN/NNP Smith/PROPN/NNP "
      "near/ADP/IN my/PRON/PRP$ house/NOUN/NN");
  const auto chunks = fallback_noun_chunks(s);
  REQUIRE(chunks.size() == 3);
  CHECK(chunks[0] == Span{0, 3});
  CHECK(chunks[1] == Span{4, 6});
  CHECK(chunks[2] == Span{7, 9});
}

TEST_CASE("a dangling modifier run without a noun is not a chunk") {
  CHECK(fallback_noun_chunks(tagged("the/DET/DT red/ADJ/JJ")).empty());
}

TEST_CASE("unknown POS tag is a validation error naming it") {
  const Sentence s = tagged("foo/WIDGET/XX bar/NOUN/NN");
  try {
    chunk(s, Side::kPremise, ChunkerConfig::Rules());
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("WIDGET") != std::string::npos);
  }
}

TEST_CASE("random mode partitions open-class tokens into the rules-mode count") {
  const Sentence s = tagged(kWorkedSentence);
  const auto rules = chunk(s, Side::kHypothesis, ChunkerConfig::Rules());
  std::vector<std::size_t> open;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (is_open_class(s.tokens[i])) open.push_back(i);
  }
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto r = chunk(s, Side::kHypothesis, ChunkerConfig::Random(seed));
    CHECK(r.size() == std::min(rules.size(), open.size()));
    // Every phrase spans a run of the open-class subsequence; together they cover it.
    std::size_t next = 0;
    for (const auto& p : r) {
      CHECK(p.side == Side::kHypothesis);
      REQUIRE(next < open.size());
      CHECK(p.span.start == open[next]);
      while (next < open.size() && open[next] < p.span.end) ++next;
      CHECK(p.span.end == open[next - 1] + 1);
    }
    CHECK(next == open.size());
  }
}

TEST_CASE("random mode is deterministic per seed and varies across seeds") {
  const Sentence s = tagged(kWorkedSentence);
  std::set<std::vector<std::size_t>> distinct;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto a = chunk(s, Side::kPremise, ChunkerConfig::Random(seed));
    const auto b = chunk(s, Side::kPremise, ChunkerConfig::Random(seed));
    CHECK(a == b);
    std::vector<std::size_t> starts;
    for (const auto& p : a) starts.push_back(p.span.start);
    distinct.insert(starts);
  }
  CHECK(distinct.size() > 1);
}

TEST_CASE("property: rules-mode phrases are sorted, disjoint and in bounds") {
  static const std::vector<std::array<const char*, 3>> vocab = {
      {"the", "DET", "DT"},  {"a", "DET", "DT"},      {"dog", "NOUN", "NN"},
      {"Ann", "PROPN", "NNP"}, {"in", "ADP", "IN"},   {"is", "AUX", "VBZ"},
      {"not", "PART", "RB"}, {"run", "VERB", "VB"},   {"off", "ADP", "RP"},
      {"red", "ADJ", "JJ"},  {"fast", "ADV", "RB"},   {"two", "NUM", "CD"},
      {"her", "PRON", "PRP$"}, {",", "PUNCT", ","},   {"and", "CCONJ", "CC"},
      {"wow", "INTJ", "UH"}};
  Rng rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    Sentence s;
    const auto n = rng.below(12);
    for (std::uint64_t i = 0; i < n; ++i) {
      const auto& v = vocab[rng.below(vocab.size())];
      s.tokens.push_back({v[0], v[1], v[2]});
    }
    const auto phrases = chunk(s, Side::kPremise, ChunkerConfig::Rules());
    std::size_t prev_end = 0;
    std::set<std::size_t> covered;
    for (const auto& p : phrases) {
      CHECK(p.span.start >= prev_end);
      CHECK(p.span.end > p.span.start);
      CHECK(p.span.end <= s.size());
      prev_end = p.span.end;
      for (std::size_t i = p.span.start; i < p.span.end; ++i) covered.insert(i);
    }
    // Every open-class token belongs to some phrase.
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (is_open_class(s.tokens[i])) CHECK(covered.count(i) == 1);
    }
    CHECK(chunk(s, Side::kPremise, ChunkerConfig::Rules()) == phrases);
  }
}
