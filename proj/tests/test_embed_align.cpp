#include <cmath>

#include "doctest.h"
#include "epr/aligner.hpp"
#include "epr/embedder.hpp"
#include "epr/error.hpp"
#include "epr/rng.hpp"
#include "helpers.hpp"

using namespace epr;
using testing::H;
using testing::P;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x[i++] = d;
  return x;
}

// Direct check of the mutual-argmax definition, ties to the lowest index.
std::vector<std::pair<Eigen::Index, Eigen::Index>> brute_force(const Eigen::MatrixXd& s) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
  for (Eigen::Index m = 0; m < s.rows(); ++m) {
    for (Eigen::Index n = 0; n < s.cols(); ++n) {
      bool row_best = true;
      for (Eigen::Index j = 0; j < s.cols(); ++j) {
        if (s(m, j) > s(m, n) || (s(m, j) == s(m, n) && j < n)) row_best = false;
      }
      bool col_best = true;
      for (Eigen::Index i = 0; i < s.rows(); ++i) {
        if (s(i, n) > s(m, n) || (s(i, n) == s(m, n) && i < m)) col_best = false;
      }
      if (row_best && col_best) out.emplace_back(m, n);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("similarity mixes global and local cosines") {
  // cos(global) = 0.5, cos(local) = 1.0
  const PhraseEmbedding a{vec({1, 0}), vec({1, 0})};
  const PhraseEmbedding b{vec({2, 0}), vec({0.5, std::sqrt(3.0) / 2})};
  CHECK(similarity(a, b, {0.6}) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(similarity(a, b, {0.0}) == doctest::Approx(1.0));
  CHECK(similarity(a, b, {1.0}) == doctest::Approx(0.5));
}

TEST_CASE("similarity is symmetric and invariant to positive rescaling") {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    PhraseEmbedding a{Eigen::VectorXd(5), Eigen::VectorXd(5)};
    PhraseEmbedding b{Eigen::VectorXd(5), Eigen::VectorXd(5)};
    for (int i = 0; i < 5; ++i) {
      a.local[i] = rng.normal();
      a.global[i] = rng.normal();
      b.local[i] = rng.normal();
      b.global[i] = rng.normal();
    }
    const AlignConfig cfg{rng.uniform()};
    const double s = similarity(a, b, cfg);
    CHECK(s == doctest::Approx(similarity(b, a, cfg)).epsilon(1e-12));
    PhraseEmbedding scaled{a.local * 3.7, a.global * 0.01};
    CHECK(s == doctest::Approx(similarity(scaled, b, cfg)).epsilon(1e-12));
    CHECK(s <= 1.0 + 1e-12);
    CHECK(s >= -1.0 - 1e-12);
  }
}

TEST_CASE("cosine errors") {
  CHECK_THROWS_AS(cosine(vec({1, 0}), vec({1, 0, 0})), ShapeError);
  CHECK_THROWS_AS(cosine(vec({0, 0}), vec({1, 0})), NumericError);
  CHECK_THROWS_AS(validate(AlignConfig{1.5}), ValidationError);
}

TEST_CASE("mutual argmax: diagonal matrix aligns both") {
  Eigen::MatrixXd s(2, 2);
  s << 0.9, 0.1, 0.2, 0.8;
  const auto m = mutual_argmax(s);
  REQUIRE(m.size() == 2);
  CHECK(m[0] == std::pair<Eigen::Index, Eigen::Index>{0, 0});
  CHECK(m[1] == std::pair<Eigen::Index, Eigen::Index>{1, 1});
}

TEST_CASE("mutual argmax: one dominant column leaves two one-sided phrases") {
  Eigen::MatrixXd s(2, 2);
  s << 0.9, 0.85, 0.8, 0.7;
  const auto m = mutual_argmax(s);
  REQUIRE(m.size() == 1);
  const auto r = assemble_pairs({P(0, 1), P(1, 2)}, {H(0, 1), H(1, 2)}, m);
  CHECK(r.k_aligned == 1);
  CHECK(r.k_total == 3);
  REQUIRE(r.pairs.size() == 3);
  CHECK(r.pairs[0] == PhrasePair::Aligned(P(0, 1), H(0, 1)));
  CHECK(r.pairs[1] == PhrasePair::PremiseOnly(P(1, 2)));
  CHECK(r.pairs[2] == PhrasePair::HypothesisOnly(H(1, 2)));
}

TEST_CASE("mutual argmax: ties go to the lowest index") {
  Eigen::MatrixXd s = Eigen::MatrixXd::Constant(3, 3, 0.5);
  const auto m = mutual_argmax(s);
  REQUIRE(m.size() == 1);
  CHECK(m[0] == std::pair<Eigen::Index, Eigen::Index>{0, 0});
}

TEST_CASE("mutual argmax agrees with a brute-force oracle, ties included") {
  Rng rng(5);
  for (int t = 0; t < 3000; ++t) {
    const auto rows = static_cast<Eigen::Index>(1 + rng.below(8));
    const auto cols = static_cast<Eigen::Index>(1 + rng.below(8));
    Eigen::MatrixXd s(rows, cols);
    const bool coarse = t % 2 == 0;  // few distinct values -> many exact ties
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        s(i, j) = coarse ? static_cast<double>(rng.below(3)) / 2.0 : rng.uniform(-1, 1);
      }
    }
    const auto got = mutual_argmax(s);
    CHECK(got == brute_force(s));
    // Matching is injective.
    std::set<Eigen::Index> used_rows, used_cols;
    for (auto [m, n] : got) {
      CHECK(used_rows.insert(m).second);
      CHECK(used_cols.insert(n).second);
    }
  }
}

TEST_CASE("assembled pairs keep every phrase exactly once") {
  Rng rng(8);
  for (int t = 0; t < 500; ++t) {
    const auto m = rng.below(6);
    const auto n = rng.below(6);
    std::vector<Phrase> ps, hs;
    for (std::size_t i = 0; i < m; ++i) ps.push_back(P(i, i + 1));
    for (std::size_t i = 0; i < n; ++i) hs.push_back(H(i, i + 1));
    Eigen::MatrixXd s(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = rng.uniform();
    const auto matches = m && n ? mutual_argmax(s) : decltype(mutual_argmax(s)){};
    const auto r = assemble_pairs(ps, hs, matches);
    CHECK(r.k_aligned == matches.size());
    CHECK(r.k_total == m + n - matches.size());
    CHECK(r.pairs.size() == r.k_total);
    std::size_t pc = 0, hc = 0;
    bool seen_unaligned = false;
    for (const auto& p : r.pairs) {
      pc += p.premise.has_value();
      hc += p.hypothesis.has_value();
      if (!p.aligned) seen_unaligned = true;
      if (p.aligned) CHECK_FALSE(seen_unaligned);
    }
    CHECK(pc == m);
    CHECK(hc == n);
  }
}

TEST_CASE("random matching keeps K and is injective") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto m = random_matching(5, 4, 3, seed);
    CHECK(m.size() == 3);
    std::set<Eigen::Index> r, c;
    for (auto [i, j] : m) {
      CHECK(i < 5);
      CHECK(j < 4);
      r.insert(i);
      c.insert(j);
    }
    CHECK(r.size() == 3);
    CHECK(c.size() == 3);
    CHECK(random_matching(5, 4, 3, seed) == m);
  }
}

TEST_CASE("toy provider is deterministic and unit-normed") {
  Sample s;
  s.id = "x";
  s.premise = testing::tagged("the/DET/DT dog/NOUN/NN runs/VERB/VBZ");
  s.hypothesis = testing::tagged("a/DET/DT dog/NOUN/NN");
  const auto p = EmbeddingProvider::Toy(8, 1);
  const auto a = p.embed(s, P(0, 2));
  const auto b = p.embed(s, P(0, 2));
  CHECK(a.local == b.local);
  CHECK(a.global == b.global);
  CHECK(a.local.norm() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(a.global.norm() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(a.local.cast<float>().cast<double>() == a.local);
  // Same text, different case: identical local vector.
  Sample t = s;
  t.premise.tokens[0].text = "The";
  CHECK(p.embed(t, P(0, 2)).local == a.local);
  CHECK(EmbeddingProvider::Toy(8, 2).embed(s, P(0, 2)).local != a.local);
  CHECK_THROWS_AS(p.embed(s, P(2, 5)), ValidationError);
}

TEST_CASE("file provider: spans, token pooling and lookup errors") {
  testing::TempDir dir("embed");
  Sample s;
  s.id = "s1";
  s.premise = testing::tagged("the/DET/DT dog/NOUN/NN");
  s.hypothesis = testing::tagged("a/DET/DT cat/NOUN/NN");
  std::vector<EmbeddingRecord> recs;
  recs.push_back({"s1", Side::kPremise, {0, 2}, {vec({1, 0, 0}), vec({0, 1, 0})}, false});
  recs.push_back({"s1", Side::kHypothesis, {0, 1}, {vec({1, 0, 0}), vec({1, 0, 0})}, true});
  recs.push_back({"s1", Side::kHypothesis, {1, 2}, {vec({0, 1, 0}), vec({0, 1, 0})}, true});
  write_embeddings(recs, 3, dir / "e.jsonl", R"({"k":"v"})");
  const auto p = EmbeddingProvider::FromFile(dir / "e.jsonl");
  CHECK(p.dim() == 3);
  CHECK(p.kind() == ProviderKind::kFile);
  const auto e = p.embed(s, P(0, 2));
  CHECK(e.local == vec({1, 0, 0}));
  const auto pooled = p.embed(s, H(0, 2));
  CHECK(pooled.local[0] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
  CHECK(pooled.local[1] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
  try {
    p.embed(s, P(1, 2));
    FAIL("expected lookup error");
  } catch (const LookupError& err) {
    CHECK(std::string(err.what()).find("s1") != std::string::npos);
  }
  CHECK_THROWS_AS(write_embeddings(recs, 4, dir / "bad.jsonl"), ShapeError);
}
