#include "doctest.h"
#include "epr/error.hpp"
#include "epr/explain.hpp"
#include "epr/induction.hpp"
#include "helpers.hpp"

using namespace epr;
using testing::H;
using testing::P;

namespace {

Sample sample() {
  Sample s;
  s.id = "fx";
  s.premise = testing::tagged("the/DET/DT dog/NOUN/NN runs/VERB/VBZ fast/ADV/RB");
  s.hypothesis = testing::tagged("a/DET/DT cat/NOUN/NN sleeps/VERB/VBZ");
  s.label = Label::kContradiction;
  return s;
}

}  // namespace

TEST_CASE("induction fixture rendering") {
  PredictionRecord r;
  r.sample_id = "fx";
  const Eigen::Vector3d a(0.9, 0.05, 0.05), b(0.4, 0.5, 0.1);
  r.pairs.push_back({PhrasePair::Aligned(P(0, 2), H(0, 2)), {a}, Label::kEntailment});
  r.pairs.push_back({PhrasePair::Aligned(P(2, 3, PhraseKind::kVP), H(2, 3, PhraseKind::kVP)), {b},
                     Label::kContradiction});
  const std::vector<PairProbs> pp = {{a, true}, {b, true}};
  r.sentence_scores = induce(pp, {});
  r.sentence_label = r.sentence_scores.argmax();
  const auto out = explain_report({r}, {sample()});
  CHECK(out.text.find("E: 0.52 C: 0.43 N: 0.04 → predicted E") != std::string::npos);
  CHECK(out.text.find("[the dog] [runs] fast") != std::string::npos);
  CHECK(out.text.find("[the dog]NP ↔ [a cat]NP  E") != std::string::npos);
  CHECK(out.json.find("\"sample_id\":\"fx\"") != std::string::npos);
}

TEST_CASE("unaligned phrases pair with EMPTY") {
  PredictionRecord r;
  r.sample_id = "fx";
  r.pairs.push_back({PhrasePair::PremiseOnly(P(3, 4, PhraseKind::kOther)), {{0.8, 0.1, 0.1}},
                     Label::kEntailment});
  r.pairs.push_back({PhrasePair::HypothesisOnly(H(2, 3, PhraseKind::kVP)), {{0.1, 0.1, 0.8}},
                     Label::kNeutral});
  r.sentence_scores.probs = Eigen::Vector3d(0.2, 0.0, 0.8);
  r.sentence_label = Label::kNeutral;
  const auto out = explain_report({r}, {sample()});
  CHECK(out.text.find("[fast]Other ↔ ⟨EMPTY⟩") != std::string::npos);
  CHECK(out.text.find("⟨EMPTY⟩ ↔ [sleeps]VP") != std::string::npos);
}

TEST_CASE("empty predictions give an empty report") {
  const auto out = explain_report({}, {sample()});
  CHECK(out.text.empty());
  CHECK(out.json.empty());
}

TEST_CASE("a prediction for an unknown sample is an error") {
  PredictionRecord r;
  r.sample_id = "nope";
  CHECK_THROWS_AS(explain_report({r}, {sample()}), ValidationError);
}
