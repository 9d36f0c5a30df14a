#pragma once

#include <Eigen/Core>
#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace epr {

// Sentence-level and phrasal NLI labels. Order matches probability vectors.
enum class Label { kEntailment = 0, kContradiction = 1, kNeutral = 2 };

inline constexpr std::array<Label, 3> kLabels = {Label::kEntailment, Label::kContradiction,
                                                 Label::kNeutral};

// Evaluation categories: the three labels plus unaligned premise / hypothesis.
enum class Category { kE = 0, kC = 1, kN = 2, kUP = 3, kUH = 4 };

inline constexpr std::array<Category, 5> kCategories = {Category::kE, Category::kC, Category::kN,
                                                        Category::kUP, Category::kUH};

enum class Side { kPremise, kHypothesis };

enum class PhraseKind { kNP, kPP, kVP, kOther };

std::string_view to_string(Label label);
std::string_view to_string(Category category);
std::string_view to_string(Side side);
std::string_view to_string(PhraseKind kind);
std::string_view short_name(Label label);  // "E", "C", "N"

Label parse_label(std::string_view text);
Category parse_category(std::string_view text);
Side parse_side(std::string_view text);
PhraseKind parse_phrase_kind(std::string_view text);

inline Category to_category(Label label) { return static_cast<Category>(label); }

// Universal POS tag set (plus spaCy's SPACE). Token.pos must be one of these.
bool is_universal_pos(std::string_view pos);

// Half-open token interval [start, end).
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - start; }
  bool contains(std::size_t i) const { return i >= start && i < end; }
  bool overlaps(const Span& o) const { return start < o.end && o.start < end; }
  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

struct Token {
  std::string text;
  std::string pos;  // coarse universal tag
  std::string tag;  // fine tag
  friend bool operator==(const Token&, const Token&) = default;
};

struct Sentence {
  std::vector<Token> tokens;
  std::optional<std::vector<Span>> noun_chunks;

  std::size_t size() const { return tokens.size(); }
  std::string text(const Span& span) const;
  friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct Sample {
  std::string id;
  Sentence premise;
  Sentence hypothesis;
  std::optional<Label> label;

  const Sentence& sentence(Side side) const {
    return side == Side::kPremise ? premise : hypothesis;
  }
  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Phrase {
  Side side = Side::kPremise;
  Span span;
  PhraseKind kind = PhraseKind::kOther;
  friend bool operator==(const Phrase&, const Phrase&) = default;
};

// An aligned pair, or a one-sided phrase whose other side is the EMPTY token.
struct PhrasePair {
  std::optional<Phrase> premise;
  std::optional<Phrase> hypothesis;
  bool aligned = false;

  static PhrasePair Aligned(Phrase p, Phrase h) { return {std::move(p), std::move(h), true}; }
  static PhrasePair PremiseOnly(Phrase p) { return {std::move(p), std::nullopt, false}; }
  static PhrasePair HypothesisOnly(Phrase h) { return {std::nullopt, std::move(h), false}; }

  friend bool operator==(const PhrasePair&, const PhrasePair&) = default;
};

// Output of the phrasal classifier, ordered (E, C, N).
struct PhrasalPrediction {
  Eigen::Vector3d probs = Eigen::Vector3d::Constant(1.0 / 3.0);

  Label argmax() const;
  friend bool operator==(const PhrasalPrediction& a, const PhrasalPrediction& b) {
    return a.probs == b.probs;
  }
};

// Unnormalized fuzzy-logic scores and their normalization.
struct SentenceInduction {
  double s_e = 0.0;
  double s_c = 0.0;
  double s_n = 0.0;
  double z = 0.0;
  Eigen::Vector3d probs = Eigen::Vector3d::Zero();

  Label argmax() const;
  friend bool operator==(const SentenceInduction& a, const SentenceInduction& b) {
    return a.s_e == b.s_e && a.s_c == b.s_c && a.s_n == b.s_n && a.z == b.z && a.probs == b.probs;
  }
};

struct AnnotationUnit {
  Category label = Category::kE;
  std::optional<Span> premise_span;
  std::optional<Span> hypothesis_span;
  friend bool operator==(const AnnotationUnit&, const AnnotationUnit&) = default;
};

struct AnnotationRecord {
  std::string sample_id;
  std::string annotator_id;
  std::vector<AnnotationUnit> units;
  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

struct PredictedPair {
  PhrasePair pair;
  PhrasalPrediction prediction;
  Label label = Label::kEntailment;
  friend bool operator==(const PredictedPair&, const PredictedPair&) = default;
};

struct PredictionRecord {
  std::string sample_id;
  std::vector<PredictedPair> pairs;
  SentenceInduction sentence_scores;
  Label sentence_label = Label::kEntailment;
  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

struct EvalReport {
  double f_e = 0.0;
  double f_c = 0.0;
  double f_n = 0.0;
  double f_up = 0.0;
  double f_uh = 0.0;
  double gm = 0.0;
  double am = 0.0;
  std::optional<double> sentence_accuracy;

  double f(Category c) const;
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Index over a corpus by sample id.
using SampleIndex = std::map<std::string, const Sample*, std::less<>>;
SampleIndex index_samples(const std::vector<Sample>& samples);

// ---------------------------------------------------------------------------
// Validation

void validate(const Sentence& sentence, std::string_view where);
void validate(const AnnotationUnit& unit);
void validate(const AnnotationRecord& record);
// Span bounds against the sample's sentence lengths.
void validate(const AnnotationRecord& record, const Sample& sample);
void validate(const PredictionRecord& record);

// ---------------------------------------------------------------------------
// File formats. Line-delimited files may start with a `_meta` header line
// carrying the tool version and effective configuration; readers skip it.

std::vector<Sample> read_corpus(const std::filesystem::path& path);
void write_corpus(const std::vector<Sample>& samples, const std::filesystem::path& path,
                  const std::string& meta_json = {});

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);
void write_predictions(const std::vector<PredictionRecord>& records,
                       const std::filesystem::path& path, const std::string& meta_json = {});

// The annotation file is one document keyed by sample id; records come back
// in file order (sample keys, then annotators within each key).
std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path);
void write_annotations(const std::vector<AnnotationRecord>& records,
                       const std::filesystem::path& path, const std::string& meta_json = {});

EvalReport read_report(const std::filesystem::path& path);
void write_report(const EvalReport& report, const std::filesystem::path& path,
                  const std::string& meta_json = {});

// In-memory codecs, shared by the file functions and the CLI.
std::string encode_sample(const Sample& sample);
Sample decode_sample(std::string_view line);
std::string encode_prediction(const PredictionRecord& record);
PredictionRecord decode_prediction(std::string_view line);
std::string encode_phrase(const Phrase& phrase);

}  // namespace epr
