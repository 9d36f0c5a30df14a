#include "epr/induction.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "epr/error.hpp"

namespace epr {

std::string_view to_string(InductionMode mode) {
  return mode == InductionMode::kFuzzy ? "fuzzy" : "mean";
}

InductionMode parse_induction_mode(std::string_view text) {
  if (text == "fuzzy") return InductionMode::kFuzzy;
  if (text == "mean") return InductionMode::kMean;
  throw ValidationError("unknown induction mode '" + std::string(text) + "'");
}

void validate(const InductionConfig& cfg) {
  if (!(cfg.epsilon > 0.0 && cfg.epsilon <= 1e-6)) {
    throw ValidationError("induction epsilon must lie in (0, 1e-6]");
  }
}

SentenceInduction induce(std::span<const PairProbs> pairs, const InductionConfig& cfg,
                         InductionTape* tape) {
  validate(cfg);
  if (pairs.empty()) throw DomainError("induction needs at least one phrase pair");
  const auto count = static_cast<Eigen::Index>(pairs.size());

  Eigen::MatrixXd clamped(count, 3);
  Eigen::Matrix<bool, -1, 3> live(count, 3);
  for (Eigen::Index k = 0; k < count; ++k) {
    const auto& p = pairs[static_cast<std::size_t>(k)].probs;
    if (!p.allFinite() || (p.array() < 0.0).any() || (p.array() > 1.0).any() ||
        std::abs(p.sum() - 1.0) > 1e-9) {
      throw DomainError("pair " + std::to_string(k) + " is not a probability distribution");
    }
    for (Eigen::Index j = 0; j < 3; ++j) {
      clamped(k, j) = std::clamp(p[j], cfg.epsilon, 1.0);
      live(k, j) = p[j] >= cfg.epsilon;
    }
  }

  // exp of the mean of logs over one column.
  auto geo_mean = [&](Eigen::Index j) { return std::exp(clamped.col(j).array().log().mean()); };

  SentenceInduction out;
  Eigen::Index argmax_c = -1;
  Eigen::Index argmax_n = -1;
  double max_n = 0.0;
  out.s_e = geo_mean(0);
  if (cfg.mode == InductionMode::kFuzzy) {
    for (Eigen::Index k = 0; k < count; ++k) {
      if (!pairs[static_cast<std::size_t>(k)].aligned) continue;
      if (argmax_c < 0 || clamped(k, 1) > out.s_c) {
        argmax_c = k;
        out.s_c = clamped(k, 1);
      }
    }
    max_n = clamped.col(2).maxCoeff(&argmax_n);
    out.s_n = max_n * (1.0 - out.s_c);
  } else {
    out.s_c = geo_mean(1);
    out.s_n = geo_mean(2);
  }
  out.z = out.s_e + out.s_c + out.s_n;
  if (!(out.z >= 1e-300)) throw DomainError("degenerate induction: normalizer underflow");
  out.probs = Eigen::Vector3d(out.s_e, out.s_c, out.s_n) / out.z;

  if (tape != nullptr) {
    tape->recorded = true;
    tape->mode = cfg.mode;
    tape->clamped = std::move(clamped);
    tape->live = std::move(live);
    tape->argmax_c = argmax_c;
    tape->argmax_n = argmax_n;
    tape->max_n = max_n;
    tape->result = out;
  }
  return out;
}

Eigen::MatrixXd induce_backward(const InductionTape& tape, const Eigen::Vector3d& dprobs) {
  if (!tape.recorded) throw StateError("induce_backward called before induce");
  const auto& r = tape.result;
  const Eigen::Index count = tape.clamped.rows();
  const double kf = static_cast<double>(count);

  // Quotient rule: d(s_i / z)/d s_j = (delta_ij z - s_i) / z^2.
  const Eigen::Vector3d s(r.s_e, r.s_c, r.s_n);
  const double weighted = dprobs.dot(s);
  const Eigen::Vector3d ds = (dprobs * r.z - Eigen::Vector3d::Constant(weighted)) / (r.z * r.z);

  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(count, 3);
  // d geo_mean(col j) / d x_kj = g / (K' x_kj)
  auto geo_grad = [&](Eigen::Index j, double g, double upstream) {
    for (Eigen::Index k = 0; k < count; ++k) {
      grad(k, j) += upstream * g / (kf * tape.clamped(k, j));
    }
  };

  geo_grad(0, r.s_e, ds[0]);
  if (tape.mode == InductionMode::kFuzzy) {
    // s_n = max_n * (1 - s_c)
    const double ds_c = ds[1] - ds[2] * tape.max_n;
    if (tape.argmax_c >= 0) grad(tape.argmax_c, 1) += ds_c;
    grad(tape.argmax_n, 2) += ds[2] * (1.0 - r.s_c);
  } else {
    geo_grad(1, r.s_c, ds[1]);
    geo_grad(2, r.s_n, ds[2]);
  }
  for (Eigen::Index k = 0; k < count; ++k) {
    for (Eigen::Index j = 0; j < 3; ++j) {
      if (!tape.live(k, j)) grad(k, j) = 0.0;
    }
  }
  return grad;
}

}  // namespace epr
