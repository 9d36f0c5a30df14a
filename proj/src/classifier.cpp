#include "epr/classifier.hpp"

#include <cmath>

#include "epr/io.hpp"
#include "epr/rng.hpp"
#include "json.hpp"

namespace epr {

using Json = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 3> kVariantNames = {"local", "global", "concat"};

template <typename Derived>
void fill_uniform(Eigen::MatrixBase<Derived>& m, double bound, Rng& rng) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-bound, bound);
  }
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from_json(const Json& j, Eigen::Index rows, Eigen::Index cols,
                                 std::string_view name) {
  if (j.at("rows").get<Eigen::Index>() != rows || j.at("cols").get<Eigen::Index>() != cols) {
    throw ShapeError("checkpoint tensor '" + std::string(name) + "' has the wrong shape");
  }
  const Json& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw ShapeError("checkpoint tensor '" + std::string(name) + "' has the wrong size");
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data[k++].get<double>();
  }
  return m;
}

}  // namespace

std::string_view to_string(FeatureVariant v) { return kVariantNames[static_cast<std::size_t>(v)]; }

FeatureVariant parse_feature_variant(std::string_view text) {
  for (std::size_t i = 0; i < kVariantNames.size(); ++i) {
    if (kVariantNames[i] == text) return static_cast<FeatureVariant>(i);
  }
  throw ValidationError("unknown feature variant '" + std::string(text) + "'");
}

ModelParams ModelParams::Zero(Eigen::Index r) {
  ModelParams p;
  p.hidden_weight = Eigen::MatrixXd::Zero(4 * r, r);
  p.hidden_bias = Eigen::VectorXd::Zero(r);
  p.output_weight = Eigen::MatrixXd::Zero(r, 3);
  p.output_bias = Eigen::VectorXd::Zero(3);
  p.empty_premise = Eigen::VectorXd::Zero(r);
  p.empty_hypothesis = Eigen::VectorXd::Zero(r);
  return p;
}

ModelParams ModelParams::Init(Eigen::Index r, std::uint64_t seed) {
  if (r <= 0) throw ValidationError("representation dimension must be positive");
  ModelParams p = Zero(r);
  Rng rng(seed);
  fill_uniform(p.hidden_weight, 1.0 / std::sqrt(static_cast<double>(4 * r)), rng);
  fill_uniform(p.output_weight, 1.0 / std::sqrt(static_cast<double>(r)), rng);
  const double empty_bound = 1.0 / std::sqrt(static_cast<double>(r));
  fill_uniform(p.empty_premise, empty_bound, rng);
  fill_uniform(p.empty_hypothesis, empty_bound, rng);
  return p;
}

std::array<Eigen::Map<Eigen::VectorXd>, 6> ModelParams::tensors() {
  auto flat = [](auto& m) { return Eigen::Map<Eigen::VectorXd>(m.data(), m.size()); };
  return {flat(hidden_weight), flat(hidden_bias),   flat(output_weight),
          flat(output_bias),   flat(empty_premise), flat(empty_hypothesis)};
}

std::array<Eigen::Map<const Eigen::VectorXd>, 6> ModelParams::tensors() const {
  auto flat = [](const auto& m) { return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()); };
  return {flat(hidden_weight), flat(hidden_bias),   flat(output_weight),
          flat(output_bias),   flat(empty_premise), flat(empty_hypothesis)};
}

void ModelParams::set_zero() {
  for (auto t : tensors()) t.setZero();
}

bool ModelParams::all_finite() const {
  for (const auto& t : tensors()) {
    if (!t.allFinite()) return false;
  }
  return true;
}

void check_shapes(const ModelParams& p, Eigen::Index r) {
  const bool ok = p.hidden_weight.rows() == 4 * r && p.hidden_weight.cols() == r &&
                  p.hidden_bias.size() == r && p.output_weight.rows() == r &&
                  p.output_weight.cols() == 3 && p.output_bias.size() == 3 &&
                  p.empty_premise.size() == r && p.empty_hypothesis.size() == r;
  if (!ok) throw ShapeError("model parameters do not match representation dimension " + std::to_string(r));
}

Eigen::VectorXd represent(const PhraseEmbedding* embedding, Side side, const ModelParams& params,
                          const FeatureConfig& cfg) {
  const Eigen::Index r = params.r();
  if (embedding == nullptr) {
    return side == Side::kPremise ? params.empty_premise : params.empty_hypothesis;
  }
  Eigen::VectorXd out;
  switch (cfg.variant) {
    case FeatureVariant::kLocal: out = embedding->local; break;
    case FeatureVariant::kGlobal: out = embedding->global; break;
    case FeatureVariant::kConcat:
      out.resize(embedding->local.size() + embedding->global.size());
      out << embedding->local, embedding->global;
      break;
  }
  if (out.size() != r) {
    throw ShapeError("phrase representation has dimension " + std::to_string(out.size()) +
                     " but the model expects " + std::to_string(r));
  }
  return out;
}

PhrasalPrediction predict_pair(const PhraseEmbedding* premise, const PhraseEmbedding* hypothesis,
                               const ModelParams& params, const FeatureConfig& cfg,
                               PairTape* tape, std::string_view pair_id) {
  if (premise == nullptr && hypothesis == nullptr) {
    throw DomainError("a pair needs at least one real phrase");
  }
  Eigen::VectorXd p = represent(premise, Side::kPremise, params, cfg);
  Eigen::VectorXd h = represent(hypothesis, Side::kHypothesis, params, cfg);
  Eigen::VectorXd x = heuristic_features(p, h);
  Eigen::VectorXd pre = params.hidden_weight.transpose() * x + params.hidden_bias;
  Eigen::VectorXd act = pre.cwiseMax(0.0);
  Eigen::Vector3d logits = params.output_weight.transpose() * act + params.output_bias;
  if (!logits.allFinite()) {
    throw NumericError("non-finite logits for pair " + std::string(pair_id));
  }
  Eigen::Vector3d e = (logits.array() - logits.maxCoeff()).exp();
  PhrasalPrediction out;
  out.probs = e / e.sum();

  if (tape != nullptr) {
    tape->recorded_ = true;
    tape->empty_premise_ = premise == nullptr;
    tape->empty_hypothesis_ = hypothesis == nullptr;
    tape->p_ = std::move(p);
    tape->h_ = std::move(h);
    tape->x_ = std::move(x);
    tape->pre_ = std::move(pre);
    tape->act_ = std::move(act);
    tape->probs_ = out.probs;
  }
  return out;
}

void backward(const PairTape& tape, const Eigen::Vector3d& dprobs, const ModelParams& params,
              ModelParams& grads) {
  if (!tape.recorded_) throw StateError("backward called before a forward pass was recorded");
  const Eigen::Index r = params.r();
  check_shapes(grads, r);

  // Softmax Jacobian: diag(p) - p p^T.
  const Eigen::Vector3d& probs = tape.probs_;
  const Eigen::Vector3d dlogits = probs.cwiseProduct(dprobs) - probs * probs.dot(dprobs);

  grads.output_weight.noalias() += tape.act_ * dlogits.transpose();
  grads.output_bias += dlogits;
  Eigen::VectorXd dpre = params.output_weight * dlogits;
  for (Eigen::Index i = 0; i < r; ++i) {
    if (tape.pre_[i] <= 0.0) dpre[i] = 0.0;
  }
  grads.hidden_weight.noalias() += tape.x_ * dpre.transpose();
  grads.hidden_bias += dpre;

  if (!tape.empty_premise_ && !tape.empty_hypothesis_) return;

  const Eigen::VectorXd dx = params.hidden_weight * dpre;
  const auto d_p = dx.segment(0, r);
  const auto d_h = dx.segment(r, r);
  const auto d_abs = dx.segment(2 * r, r);
  const auto d_prod = dx.segment(3 * r, r);
  const Eigen::VectorXd sign =
      (tape.p_ - tape.h_).unaryExpr([](double v) { return double((v > 0.0) - (v < 0.0)); });
  if (tape.empty_premise_) {
    grads.empty_premise += d_p + sign.cwiseProduct(d_abs) + tape.h_.cwiseProduct(d_prod);
  }
  if (tape.empty_hypothesis_) {
    grads.empty_hypothesis += d_h - sign.cwiseProduct(d_abs) + tape.p_.cwiseProduct(d_prod);
  }
}

void write_checkpoint(const Model& model, const std::filesystem::path& path,
                      const std::string& meta_json) {
  const Eigen::Index r = representation_dim({model.config.variant}, model.config.dim);
  check_shapes(model.params, r);
  Json j;
  j["version"] = kCheckpointVersion;
  j["config"] = {{"variant", to_string(model.config.variant)},
                 {"d", model.config.dim},
                 {"r", r},
                 {"seed", model.config.seed}};
  const auto& p = model.params;
  j["hidden_weight"] = matrix_to_json(p.hidden_weight);
  j["hidden_bias"] = matrix_to_json(p.hidden_bias);
  j["output_weight"] = matrix_to_json(p.output_weight);
  j["output_bias"] = matrix_to_json(p.output_bias);
  j["empty_premise"] = matrix_to_json(p.empty_premise);
  j["empty_hypothesis"] = matrix_to_json(p.empty_hypothesis);
  if (!meta_json.empty()) j[std::string(kMetaKey)] = Json::parse(meta_json);
  write_file_atomic(path, j.dump() + "\n");
}

Model read_checkpoint(const std::filesystem::path& path) {
  try {
    Json j = Json::parse(read_file(path));
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw ValidationError("unsupported checkpoint version " + std::to_string(version));
    }
    Model m;
    const Json& c = j.at("config");
    m.config.variant = parse_feature_variant(c.at("variant").get<std::string>());
    m.config.dim = c.at("d").get<Eigen::Index>();
    m.config.seed = c.at("seed").get<std::uint64_t>();
    const Eigen::Index r = representation_dim({m.config.variant}, m.config.dim);
    if (c.at("r").get<Eigen::Index>() != r) throw ShapeError("checkpoint r inconsistent with d");
    m.params.hidden_weight = matrix_from_json(j.at("hidden_weight"), 4 * r, r, "hidden_weight");
    m.params.hidden_bias = matrix_from_json(j.at("hidden_bias"), r, 1, "hidden_bias");
    m.params.output_weight = matrix_from_json(j.at("output_weight"), r, 3, "output_weight");
    m.params.output_bias = matrix_from_json(j.at("output_bias"), 3, 1, "output_bias");
    m.params.empty_premise = matrix_from_json(j.at("empty_premise"), r, 1, "empty_premise");
    m.params.empty_hypothesis = matrix_from_json(j.at("empty_hypothesis"), r, 1, "empty_hypothesis");
    if (!m.params.all_finite()) throw ValidationError("checkpoint contains non-finite values");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace epr
