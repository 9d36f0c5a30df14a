#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>

#include "epr/corpus.hpp"
#include "epr/error.hpp"

namespace epr {

// Local (phrase encoded alone) and global (mean-pooled from the sentence
// encoding) vectors for one phrase. Values are float-representable.
struct PhraseEmbedding {
  Eigen::VectorXd local;
  Eigen::VectorXd global;

  Eigen::Index dim() const { return local.size(); }
};

struct AlignConfig {
  double gamma = 0.6;
};

void validate(const AlignConfig& cfg);

template <typename DerivedA, typename DerivedB>
double cosine(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) throw ShapeError("cosine: dimension mismatch");
  const double na = a.template cast<double>().norm();
  const double nb = b.template cast<double>().norm();
  if (na == 0.0 || nb == 0.0) throw NumericError("cosine: zero-norm vector");
  return a.template cast<double>().dot(b.template cast<double>()) / (na * nb);
}

// gamma * cos(global) + (1 - gamma) * cos(local)
double similarity(const PhraseEmbedding& a, const PhraseEmbedding& b, const AlignConfig& cfg);

enum class ProviderKind { kFile, kToy };

// Source of phrase embeddings. The toy kind hashes text into deterministic
// unit vectors; the file kind serves vectors precomputed by an external
// encoder (or by the synthetic generator).
class EmbeddingProvider {
 public:
  static EmbeddingProvider Toy(Eigen::Index dim, std::uint64_t seed);
  static EmbeddingProvider FromFile(const std::filesystem::path& path);

  ProviderKind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }

  PhraseEmbedding embed(const Sample& sample, const Phrase& phrase) const;

  // Hash vector of one token in the context of a sample (toy kind).
  Eigen::VectorXd token_vector(std::string_view token, std::string_view sample_id) const;
  // Hash vector of a lowercased phrase text (toy kind).
  Eigen::VectorXd text_vector(std::string_view text) const;

  using Key = std::tuple<std::string, Side, std::size_t, std::size_t>;

 private:
  EmbeddingProvider() = default;

  ProviderKind kind_ = ProviderKind::kToy;
  Eigen::Index dim_ = 0;
  std::uint64_t seed_ = 0;
  std::map<Key, PhraseEmbedding> table_;
  // Optional per-token vectors keyed with span [i, i+1); spans missing from
  // table_ are mean-pooled from these when every token is present.
  std::map<Key, PhraseEmbedding> tokens_;
};

// One record of the embedding file: a phrase span, or a single token when
// `token_level` is set (written with a "token" index instead of "span").
struct EmbeddingRecord {
  std::string sample_id;
  Side side = Side::kPremise;
  Span span;
  PhraseEmbedding embedding;
  bool token_level = false;
};

// Header line {"dim": d}, then one record per line; vectors written at float precision.
void write_embeddings(const std::vector<EmbeddingRecord>& records, Eigen::Index dim,
                      const std::filesystem::path& path, const std::string& meta_json = {});

}  // namespace epr
