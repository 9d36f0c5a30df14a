#pragma once

#include <string>
#include <vector>

#include "epr/corpus.hpp"

namespace epr {

struct ExplainOutput {
  std::string text;  // human-readable report
  std::string json;  // line-delimited companion, one object per sample
};

// Renders each prediction against its sample: bracketed phrases, alignment
// arrows, phrasal labels and sentence scores. A prediction whose sample is
// not in the corpus is a validation error.
ExplainOutput explain_report(const std::vector<PredictionRecord>& predictions,
                             const std::vector<Sample>& corpus);

}  // namespace epr
