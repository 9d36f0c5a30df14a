#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <filesystem>
#include <string_view>

#include "epr/corpus.hpp"
#include "epr/embedder.hpp"
#include "epr/error.hpp"

namespace epr {

enum class FeatureVariant { kLocal, kGlobal, kConcat };

std::string_view to_string(FeatureVariant v);
FeatureVariant parse_feature_variant(std::string_view text);

struct FeatureConfig {
  FeatureVariant variant = FeatureVariant::kConcat;
};

// Phrase-representation width r for embedding width d.
inline Eigen::Index representation_dim(const FeatureConfig& cfg, Eigen::Index d) {
  return cfg.variant == FeatureVariant::kConcat ? 2 * d : d;
}

// Parameters of the phrasal classifier. Shapes follow the x^T W convention:
// hidden = relu(hidden_weight^T x + hidden_bias), logits likewise.
struct ModelParams {
  Eigen::MatrixXd hidden_weight;     // 4r x r
  Eigen::VectorXd hidden_bias;       // r
  Eigen::MatrixXd output_weight;     // r x 3
  Eigen::VectorXd output_bias;       // 3
  Eigen::VectorXd empty_premise;     // r
  Eigen::VectorXd empty_hypothesis;  // r

  static constexpr std::array<std::string_view, 6> kTensorNames = {
      "hidden_weight", "hidden_bias", "output_weight",
      "output_bias",   "empty_premise", "empty_hypothesis"};

  static ModelParams Zero(Eigen::Index r);
  // Fan-in scaled uniform weights, zero biases, EMPTY vectors from the same law.
  static ModelParams Init(Eigen::Index r, std::uint64_t seed);

  Eigen::Index r() const { return hidden_bias.size(); }

  // Flat views over each tensor's storage, in kTensorNames order.
  std::array<Eigen::Map<Eigen::VectorXd>, 6> tensors();
  std::array<Eigen::Map<const Eigen::VectorXd>, 6> tensors() const;

  void set_zero();
  bool all_finite() const;
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

void check_shapes(const ModelParams& params, Eigen::Index r);

// [p; h; |p - h|; p o h]
template <typename DerivedP, typename DerivedH>
Eigen::Matrix<typename DerivedP::Scalar, Eigen::Dynamic, 1> heuristic_features(
    const Eigen::MatrixBase<DerivedP>& p, const Eigen::MatrixBase<DerivedH>& h) {
  if (p.size() != h.size()) throw ShapeError("features: premise/hypothesis dimension mismatch");
  const Eigen::Index r = p.size();
  Eigen::Matrix<typename DerivedP::Scalar, Eigen::Dynamic, 1> x(4 * r);
  x << p, h, (p - h).cwiseAbs(), p.cwiseProduct(h);
  return x;
}

// Representation of one side of a pair; a null embedding is the EMPTY token.
Eigen::VectorXd represent(const PhraseEmbedding* embedding, Side side, const ModelParams& params,
                          const FeatureConfig& cfg);

// Recorded intermediates of one forward pass; consumed by backward().
class PairTape {
 public:
  bool recorded() const { return recorded_; }

 private:
  friend PhrasalPrediction predict_pair(const PhraseEmbedding*, const PhraseEmbedding*,
                                        const ModelParams&, const FeatureConfig&, PairTape*,
                                        std::string_view);
  friend void backward(const PairTape&, const Eigen::Vector3d&, const ModelParams&, ModelParams&);

  bool recorded_ = false;
  bool empty_premise_ = false;
  bool empty_hypothesis_ = false;
  Eigen::VectorXd p_, h_, x_, pre_, act_;
  Eigen::Vector3d probs_;
};

// softmax(W_o^T relu(W_h^T x + b_h) + b_o) on the heuristic features of the
// pair. A null embedding selects the learned EMPTY vector for that side.
PhrasalPrediction predict_pair(const PhraseEmbedding* premise, const PhraseEmbedding* hypothesis,
                               const ModelParams& params, const FeatureConfig& cfg,
                               PairTape* tape = nullptr, std::string_view pair_id = {});

// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(probs).
// Embeddings are frozen and receive nothing.
void backward(const PairTape& tape, const Eigen::Vector3d& dprobs, const ModelParams& params,
              ModelParams& grads);

struct ModelConfig {
  FeatureVariant variant = FeatureVariant::kConcat;
  Eigen::Index dim = 16;  // embedding width d
  std::uint64_t seed = 0;
};

struct Model {
  ModelConfig config;
  ModelParams params;
};

inline constexpr int kCheckpointVersion = 1;

// Single JSON document; tensors are row-major arrays.
void write_checkpoint(const Model& model, const std::filesystem::path& path,
                      const std::string& meta_json = {});
Model read_checkpoint(const std::filesystem::path& path);

}  // namespace epr
