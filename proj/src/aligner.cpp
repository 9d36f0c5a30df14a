#include "epr/aligner.hpp"

#include <algorithm>
#include <numeric>

#include "epr/error.hpp"
#include "epr/rng.hpp"

namespace epr {

std::vector<std::pair<Eigen::Index, Eigen::Index>> mutual_argmax(const Eigen::MatrixXd& sim) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
  if (sim.rows() == 0 || sim.cols() == 0) return out;
  // Eigen's maxCoeff returns the first maximal index, which is the tie rule.
  std::vector<Eigen::Index> col_best(static_cast<std::size_t>(sim.cols()));
  for (Eigen::Index n = 0; n < sim.cols(); ++n) {
    sim.col(n).maxCoeff(&col_best[static_cast<std::size_t>(n)]);
  }
  for (Eigen::Index m = 0; m < sim.rows(); ++m) {
    Eigen::Index n = 0;
    sim.row(m).maxCoeff(&n);
    if (col_best[static_cast<std::size_t>(n)] == m) out.emplace_back(m, n);
  }
  return out;
}

Eigen::MatrixXd similarity_matrix(const std::vector<PhraseEmbedding>& premise,
                                  const std::vector<PhraseEmbedding>& hypothesis,
                                  const AlignConfig& cfg) {
  validate(cfg);
  Eigen::MatrixXd sim(static_cast<Eigen::Index>(premise.size()),
                      static_cast<Eigen::Index>(hypothesis.size()));
  for (std::size_t m = 0; m < premise.size(); ++m) {
    for (std::size_t n = 0; n < hypothesis.size(); ++n) {
      sim(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) =
          similarity(premise[m], hypothesis[n], cfg);
    }
  }
  return sim;
}

AlignmentResult assemble_pairs(const std::vector<Phrase>& premise,
                               const std::vector<Phrase>& hypothesis,
                               const std::vector<std::pair<Eigen::Index, Eigen::Index>>& matches) {
  AlignmentResult result;
  std::vector<bool> p_used(premise.size(), false);
  std::vector<bool> h_used(hypothesis.size(), false);

  auto sorted = matches;
  std::sort(sorted.begin(), sorted.end(), [&](const auto& a, const auto& b) {
    return premise[static_cast<std::size_t>(a.first)].span <
           premise[static_cast<std::size_t>(b.first)].span;
  });
  for (const auto& [m, n] : sorted) {
    const auto mi = static_cast<std::size_t>(m);
    const auto ni = static_cast<std::size_t>(n);
    if (p_used[mi] || h_used[ni]) throw DomainError("matching is not injective");
    p_used[mi] = h_used[ni] = true;
    result.pairs.push_back(PhrasePair::Aligned(premise[mi], hypothesis[ni]));
  }
  result.k_aligned = result.pairs.size();

  auto by_span = [](const std::vector<Phrase>& phrases, const std::vector<bool>& used) {
    std::vector<Phrase> rest;
    for (std::size_t i = 0; i < phrases.size(); ++i) {
      if (!used[i]) rest.push_back(phrases[i]);
    }
    std::sort(rest.begin(), rest.end(), [](const Phrase& a, const Phrase& b) { return a.span < b.span; });
    return rest;
  };
  for (auto& p : by_span(premise, p_used)) result.pairs.push_back(PhrasePair::PremiseOnly(p));
  for (auto& h : by_span(hypothesis, h_used)) result.pairs.push_back(PhrasePair::HypothesisOnly(h));
  result.k_total = result.pairs.size();
  return result;
}

std::vector<std::pair<Eigen::Index, Eigen::Index>> random_matching(Eigen::Index rows,
                                                                   Eigen::Index cols,
                                                                   std::size_t k,
                                                                   std::uint64_t seed) {
  if (static_cast<Eigen::Index>(k) > std::min(rows, cols)) {
    throw DomainError("random matching larger than the smaller side");
  }
  std::vector<Eigen::Index> r(static_cast<std::size_t>(rows));
  std::vector<Eigen::Index> c(static_cast<std::size_t>(cols));
  std::iota(r.begin(), r.end(), Eigen::Index{0});
  std::iota(c.begin(), c.end(), Eigen::Index{0});
  Rng rng(seed);
  rng.shuffle(r);
  rng.shuffle(c);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
  for (std::size_t i = 0; i < k; ++i) out.emplace_back(r[i], c[i]);
  std::sort(out.begin(), out.end());
  return out;
}

AlignmentResult align(const Sample& sample, const std::vector<Phrase>& premise,
                      const std::vector<Phrase>& hypothesis, const EmbeddingProvider& provider,
                      const AlignConfig& cfg, AlignMode mode, std::optional<std::uint64_t> seed) {
  std::vector<PhraseEmbedding> pe;
  std::vector<PhraseEmbedding> he;
  pe.reserve(premise.size());
  he.reserve(hypothesis.size());
  for (const auto& p : premise) pe.push_back(provider.embed(sample, p));
  for (const auto& h : hypothesis) he.push_back(provider.embed(sample, h));

  auto matches = mutual_argmax(similarity_matrix(pe, he, cfg));
  if (mode == AlignMode::kRandom) {
    if (!seed) throw ValidationError("random alignment requires a seed");
    matches = random_matching(static_cast<Eigen::Index>(premise.size()),
                              static_cast<Eigen::Index>(hypothesis.size()), matches.size(), *seed);
  }
  return assemble_pairs(premise, hypothesis, matches);
}

}  // namespace epr
