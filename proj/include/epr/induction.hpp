#pragma once

#include <Eigen/Core>
#include <span>
#include <string_view>
#include <vector>

#include "epr/corpus.hpp"

namespace epr {

enum class InductionMode { kFuzzy, kMean };

std::string_view to_string(InductionMode mode);
InductionMode parse_induction_mode(std::string_view text);

struct InductionConfig {
  InductionMode mode = InductionMode::kFuzzy;
  double epsilon = 1e-12;  // probability clamp, in (0, 1e-6]
};

void validate(const InductionConfig& cfg);

struct PairProbs {
  Eigen::Vector3d probs;
  bool aligned = false;
};

// Intermediates of one induce() call, consumed by induce_backward().
struct InductionTape {
  bool recorded = false;
  InductionMode mode = InductionMode::kFuzzy;
  Eigen::MatrixXd clamped;           // K' x 3, after clamping
  Eigen::Matrix<bool, -1, 3> live;   // entry was not clamped
  Eigen::Index argmax_c = -1;        // aligned pair carrying s_c, -1 when K = 0
  Eigen::Index argmax_n = -1;        // pair carrying max P(N) (fuzzy)
  double max_n = 0.0;
  SentenceInduction result;
};

// Fuzzy mode:
//   s_e = geometric mean of P(E) over all pairs
//   s_c = max of P(C) over aligned pairs (0 when none are aligned)
//   s_n = max of P(N) over all pairs * (1 - s_c)
// Mean mode: each score is the geometric mean of its column.
// Scores are then normalized by their sum.
SentenceInduction induce(std::span<const PairProbs> pairs, const InductionConfig& cfg,
                         InductionTape* tape = nullptr);

// Gradient of a loss with respect to every pair probability (K' x 3) given
// its gradient with respect to the normalized sentence probabilities.
Eigen::MatrixXd induce_backward(const InductionTape& tape, const Eigen::Vector3d& dprobs);

}  // namespace epr
