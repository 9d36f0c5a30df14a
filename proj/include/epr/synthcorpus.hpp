#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "epr/aligner.hpp"
#include "epr/corpus.hpp"
#include "epr/embedder.hpp"

namespace epr {

// A phrase template: tokens with their tags, plus the noun chunk (relative
// to the phrase start) that the chunker should see.
struct LexPhrase {
  PhraseKind kind = PhraseKind::kNP;
  std::vector<Token> tokens;
  std::optional<Span> noun_chunk;
};

struct Concept {
  LexPhrase head;
  std::vector<LexPhrase> synonyms;   // relation E
  std::vector<LexPhrase> antonyms;   // relation C
  std::vector<LexPhrase> unrelated;  // relation N
};

struct Lexicon {
  std::vector<Concept> concepts;

  // Built-in vocabulary of NP / VP / PP / Other concepts.
  static Lexicon Default();
  // Parses "word/POS/TAG word/POS/TAG ..." into a phrase template.
  static LexPhrase Phrase(PhraseKind kind, std::string_view spec);
};

void validate(const Lexicon& lexicon);

struct GoldPair {
  std::optional<Span> premise;
  std::optional<Span> hypothesis;
  Label relation = Label::kEntailment;
};

struct SynthSample {
  Sample sample;
  std::vector<GoldPair> gold_pairs;
};

struct SynthConfig {
  std::size_t n = 100;
  std::uint64_t seed = 0;
  Eigen::Index dim = 16;
  std::string id_prefix = "synth";
  std::string annotator_id = "gold";
  // Generation fails when n * 5 planted pairs would exceed this many uses
  // of every concept on average.
  std::size_t max_uses_per_concept = 5000;
};

struct SynthCorpus {
  std::vector<SynthSample> samples;
  std::vector<AnnotationRecord> annotations;
  std::vector<EmbeddingRecord> embeddings;
  Eigen::Index dim = 0;

  std::vector<Sample> corpus() const;
};

// Sentence label implied by planted relations: C if any C, else N if any N,
// else E.
Label compose_label(const std::vector<Label>& relations);

SynthCorpus generate(const Lexicon& lexicon, const SynthConfig& cfg);

// Fraction of planted pairs reproduced exactly by an alignment (aligned gold
// pairs as aligned pairs, one-sided gold pairs as one-sided pairs).
double alignment_recovery(const std::vector<SynthSample>& gold,
                          const std::vector<AlignmentResult>& alignments);

// Fraction of planted pairs whose predicted pair exists with the same spans
// and carries the planted relation as its argmax label.
double phrasal_accuracy(const std::vector<SynthSample>& gold,
                        const std::vector<PredictionRecord>& predictions);

}  // namespace epr
