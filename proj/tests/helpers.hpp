#pragma once

#include <filesystem>
#include <set>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "epr/corpus.hpp"

namespace testing {

// "The/DET/DT woman/NOUN/NN ..." -> tokens.
inline epr::Sentence tagged(std::string_view spec) {
  epr::Sentence s;
  std::istringstream in{std::string(spec)};
  std::string item;
  while (in >> item) {
    const auto a = item.find('/');
    const auto b = item.find('/', a + 1);
    s.tokens.push_back({item.substr(0, a), item.substr(a + 1, b - a - 1), item.substr(b + 1)});
  }
  return s;
}

inline epr::Phrase P(std::size_t s, std::size_t e, epr::PhraseKind k = epr::PhraseKind::kNP) {
  return {epr::Side::kPremise, {s, e}, k};
}
inline epr::Phrase H(std::size_t s, std::size_t e, epr::PhraseKind k = epr::PhraseKind::kNP) {
  return {epr::Side::kHypothesis, {s, e}, k};
}

inline Eigen::Vector3d onehot(epr::Label l) {
  Eigen::Vector3d v = Eigen::Vector3d::Constant(0.01);
  v[static_cast<int>(l)] = 0.98;
  return v;
}

inline epr::PredictedPair pred_pair(epr::PhrasePair pair, epr::Label label) {
  return {std::move(pair), {onehot(label)}, label};
}

// Prediction record whose sentence part is a consistent placeholder.
inline epr::PredictionRecord record(std::string id, std::vector<epr::PredictedPair> pairs) {
  epr::PredictionRecord r;
  r.sample_id = std::move(id);
  r.pairs = std::move(pairs);
  r.sentence_scores.s_e = 1.0;
  r.sentence_scores.z = 1.0;
  r.sentence_scores.probs = Eigen::Vector3d(1.0, 0.0, 0.0);
  r.sentence_label = epr::Label::kEntailment;
  return r;
}

// Fresh scratch directory under the build tree, removed on destruction.
class TempDir {
 public:
  explicit TempDir(std::string_view name)
      : path_(std::filesystem::temp_directory_path() / ("epr-test-" + std::string(name))) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::filesystem::path operator/(std::string_view f) const { return path_ / f; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
