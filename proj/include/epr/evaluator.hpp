#pragma once

#include <array>
#include <set>
#include <vector>

#include "epr/corpus.hpp"

namespace epr {

// Raw hit / predicted / gold word-index counts for one category. UP only
// uses the premise fields and UH only the hypothesis fields.
struct CategoryCounts {
  Category category = Category::kE;
  std::size_t hits_premise = 0;
  std::size_t pred_premise = 0;
  std::size_t gold_premise = 0;
  std::size_t hits_hypothesis = 0;
  std::size_t pred_hypothesis = 0;
  std::size_t gold_hypothesis = 0;

  CategoryCounts& operator+=(const CategoryCounts& o);
  friend bool operator==(const CategoryCounts&, const CategoryCounts&) = default;
};

using CountTable = std::array<CategoryCounts, 5>;  // indexed by Category

// Word-index sets per category and side, built from a prediction (E/C/N from
// aligned pairs by argmax label, UP/UH from one-sided pairs) or from an
// annotation (units by label).
struct IndexSets {
  std::array<std::set<std::size_t>, 5> premise;
  std::array<std::set<std::size_t>, 5> hypothesis;
};

IndexSets index_sets(const PredictionRecord& prediction);
IndexSets index_sets(const AnnotationRecord& annotation);

CountTable count_sets(const IndexSets& predicted, const IndexSets& gold);

// Per-sample counts of a prediction against one annotator.
CountTable count_sample(const PredictionRecord& prediction, const AnnotationRecord& annotation);

struct CategoryScore {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

// Precision / recall per side with 0 for empty denominators; two-sided
// categories take the geometric mean across sides; F is their harmonic mean.
CategoryScore score_category(const CategoryCounts& counts);

// Single-annotator report over pooled (micro-averaged) counts.
EvalReport score(const CountTable& pooled);

// GM and AM over the five F-scores.
void fill_aggregates(EvalReport& report);

// Arithmetic mean of per-annotator F-scores, then aggregates.
EvalReport average_reports(const std::vector<EvalReport>& reports);

// Scores predictions against every annotator (each annotator's counts pooled
// over the samples they annotated) and averages the per-annotator reports.
// Annotations of samples without a prediction are a validation error.
EvalReport evaluate(const std::vector<PredictionRecord>& predictions,
                    const std::vector<AnnotationRecord>& annotations);

double sentence_accuracy(const std::vector<PredictionRecord>& predictions,
                         const std::vector<Sample>& corpus);

// Inter-annotator agreement: every ordered pair of distinct annotators, one
// treated as output and the other as gold over their shared samples; the
// per-pair reports are averaged.
EvalReport agreement(const std::vector<AnnotationRecord>& annotations);

}  // namespace epr
