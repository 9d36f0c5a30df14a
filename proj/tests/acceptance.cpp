// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "cli.hpp"
#include "epr/aligner.hpp"
#include "epr/chunker.hpp"
#include "epr/evaluator.hpp"
#include "epr/induction.hpp"
#include "epr/io.hpp"
#include "epr/pipeline.hpp"
#include "epr/rng.hpp"
#include "epr/synthcorpus.hpp"
#include "epr/trainer.hpp"
#include "helpers.hpp"
#include "oracles.hpp"
#include "synth_fixture.hpp"

using namespace epr;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances and budgets.
constexpr double kInductionTol = 1e-9;
constexpr double kGradTol = 1e-4;
constexpr double kNormTol = 1e-12;
constexpr double kMinSentenceAcc = 0.95;
constexpr double kMinPhrasalAcc = 0.90;
constexpr double kMeanAccWindow = 0.03;
constexpr int kInductionTrials = 10000;
constexpr int kAlignTrials = 10000;
constexpr int kGradFixtures = 100;
constexpr std::size_t kTrainSize = 5000;
constexpr std::size_t kTestSize = 500;
constexpr std::size_t kMaxEpochs = 3;
constexpr std::uint64_t kCorpusSeed = 2024;
constexpr std::uint64_t kTrainSeed = 7;
// Desk-scale learning rate for 16-dim synthetic embeddings.
constexpr double kLearningRate = 1e-2;

int failures = 0;
// Worst sentence-probability sum error seen by every fixture above.
double worst_norm_error = 0.0;
std::size_t norm_checks = 0;

void note_norm(const Eigen::Vector3d& probs) {
  worst_norm_error = std::max(worst_norm_error, std::abs(probs.sum() - 1.0));
  ++norm_checks;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(const std::string& name, bool pass, const std::string& detail, double secs,
            double budget) {
  const bool in_time = secs <= budget;
  const bool ok = pass && in_time;
  if (!ok) ++failures;
  std::printf("%s  %-28s %s  [%.3f s / %g s budget%s]\n", ok ? "PASS" : "FAIL", name.c_str(),
              detail.c_str(), secs, budget, in_time ? "" : ", over budget");
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// ---------------------------------------------------------------------------

void chunker_golden() {
  const auto t0 = Clock::now();
  const Sentence s = testing::tagged(
      "The/DET/DT woman/NOUN/NN is/AUX/VBZ showing/VERB/VBG off/ADP/RP her/PRON/PRP$ "
      "blue/ADJ/JJ dog/NOUN/NN at/ADP/IN the/DET/DT playground/NOUN/NN");
  const auto got = chunk(s, Side::kPremise, ChunkerConfig::Rules());
  const double secs = seconds_since(t0);
  std::set<std::pair<std::string, std::string>> found, want = {
      {"PP", "at the playground"}, {"NP", "The woman"}, {"NP", "her blue dog"},
      {"VP", "is showing off"}};
  for (const auto& p : got) found.insert({std::string(to_string(p.kind)), s.text(p.span)});
  report("chunker golden", found == want && got.size() == 4,
         fmt("%.0f phrases, exact match", static_cast<double>(got.size())), secs, 1e-3);
}

void evaluator_golden() {
  using testing::H;
  using testing::P;
  const AnnotationRecord gold{"t6", "a", {{Category::kE, Span{0, 4}, Span{0, 4}}}};
  const std::vector<PredictionRecord> rows = {
      testing::record("t6", {testing::pred_pair(PhrasePair::Aligned(P(6, 9), H(7, 10)),
                                                Label::kEntailment)}),
      testing::record("t6", {testing::pred_pair(PhrasePair::Aligned(P(0, 4), H(5, 7)),
                                                Label::kEntailment)}),
      testing::record("t6",
                      {testing::pred_pair(PhrasePair::Aligned(P(0, 2), H(0, 2)), Label::kEntailment),
                       testing::pred_pair(PhrasePair::Aligned(P(2, 4), H(2, 4)), Label::kEntailment)})};
  const double want[] = {0.0, 0.0, 1.0};
  for (int i = 0; i < 3; ++i) {
    const auto t0 = Clock::now();
    const double f = score(count_sample(rows[static_cast<std::size_t>(i)], gold)).f_e;
    const double secs = seconds_since(t0);
    report("evaluator golden row " + std::to_string(i + 1), f == want[i],
           fmt("F_E = %g (want %g)", f, want[i]), secs, 1e-3);
  }
}

void induction_oracle() {
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  for (int t = 0; t < kInductionTrials; ++t) {
    const auto n = 1 + rng.below(10);
    std::vector<PairProbs> pairs;
    std::vector<oracle::Pair> ref;
    for (std::size_t k = 0; k < n; ++k) {
      Eigen::Vector3d p(rng.uniform(), rng.uniform(), rng.uniform());
      // Occasionally exact zeros, to exercise the clamp.
      if (rng.below(20) == 0) p[rng.below(3)] = 0.0;
      if (p.sum() == 0.0) p[0] = 1.0;
      p /= p.sum();
      const bool aligned = rng.below(2) == 0;
      pairs.push_back({p, aligned});
      ref.push_back({{p[0], p[1], p[2]}, aligned});
    }
    for (auto mode : {InductionMode::kFuzzy, InductionMode::kMean}) {
      const auto got = induce(pairs, {mode});
      const auto want = oracle::induce(ref, mode == InductionMode::kFuzzy);
      note_norm(got.probs);
      for (int j = 0; j < 3; ++j) {
        worst = std::max(worst, static_cast<double>(std::abs(got.probs[j] - want.probs[j])));
      }
      worst = std::max(worst, static_cast<double>(std::abs(got.s_e - want.s_e)));
      worst = std::max(worst, static_cast<double>(std::abs(got.s_c - want.s_c)));
      worst = std::max(worst, static_cast<double>(std::abs(got.s_n - want.s_n)));
    }
  }
  report("induction oracle", worst <= kInductionTol,
         fmt("%.0f lists x 2 modes, max abs error %.2e (tol %.0e)", kInductionTrials, worst,
             kInductionTol),
         seconds_since(t0), 5);
}

void gradient_check() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  int passed = 0;
  for (int i = 0; i < kGradFixtures; ++i) {
    for (auto mode : {InductionMode::kFuzzy, InductionMode::kMean}) {
      GradcheckConfig gc;
      gc.seed = static_cast<std::uint64_t>(i);
      gc.induction = mode;
      gc.variant = static_cast<FeatureVariant>(i % 3);
      gc.tolerance = kGradTol;
      const auto r = gradcheck(gc);
      worst = std::max(worst, r.max_relative_error);
      passed += r.passed;
    }
  }
  report("gradient check", passed == 2 * kGradFixtures,
         fmt("%.0f/%.0f fixtures, max rel error %.2e (tol %.0e)", passed, 2 * kGradFixtures, worst,
             kGradTol),
         seconds_since(t0), 30);
}

void alignment_oracle() {
  const auto t0 = Clock::now();
  Rng rng(202);
  int agree = 0, with_ties = 0;
  for (int t = 0; t < kAlignTrials; ++t) {
    const auto rows = static_cast<Eigen::Index>(1 + rng.below(8));
    const auto cols = static_cast<Eigen::Index>(1 + rng.below(8));
    Eigen::MatrixXd s(rows, cols);
    const bool coarse = t % 3 == 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      s.data()[i] = coarse ? static_cast<double>(rng.below(4)) / 3.0 : rng.uniform(-1, 1);
    }
    std::set<double> values(s.data(), s.data() + s.size());
    with_ties += values.size() < static_cast<std::size_t>(s.size());

    std::vector<std::pair<Eigen::Index, Eigen::Index>> want;
    for (Eigen::Index m = 0; m < rows; ++m) {
      for (Eigen::Index n = 0; n < cols; ++n) {
        bool ok = true;
        for (Eigen::Index j = 0; j < cols && ok; ++j) {
          ok = !(s(m, j) > s(m, n) || (s(m, j) == s(m, n) && j < n));
        }
        for (Eigen::Index i = 0; i < rows && ok; ++i) {
          ok = !(s(i, n) > s(m, n) || (s(i, n) == s(m, n) && i < m));
        }
        if (ok) want.emplace_back(m, n);
      }
    }
    agree += mutual_argmax(s) == want;
  }
  report("alignment oracle", agree == kAlignTrials,
         fmt("%.0f/%.0f matrices agree (%.0f with exact ties)", agree, kAlignTrials, with_ties),
         seconds_since(t0), 5);
}

// ---------------------------------------------------------------------------
// Synthetic weak-supervision experiments.

struct Variant {
  std::string name;
  PipelineConfig pipeline;
  InductionMode induction = InductionMode::kFuzzy;
};

struct Outcome {
  double sentence_acc = 0.0;
  double phrasal_acc = 0.0;
  EvalReport report;
  std::size_t epochs = 0;
};

struct Experiment {
  SynthCorpus corpus;
  EmbeddingProvider provider;
  std::vector<Sample> train_samples;
  std::vector<Sample> test_samples;
  std::vector<SynthSample> test_gold;
  std::vector<AnnotationRecord> test_annotations;
};

Outcome run_variant(const Experiment& ex, const Variant& v) {
  TrainConfig tc;
  tc.learning_rate = kLearningRate;
  tc.epochs = kMaxEpochs;
  tc.seed = kTrainSeed;
  tc.induction.mode = v.induction;
  const unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  const auto train_set = prepare_all(ex.train_samples, ex.provider, v.pipeline, threads);
  const auto test_set = prepare_all(ex.test_samples, ex.provider, v.pipeline, threads);
  const auto result = train(train_set, {}, ex.provider.dim(), tc);
  const auto preds =
      predict_all(test_set, result.state.params, tc.features, tc.induction, threads);
  for (const auto& p : preds) note_norm(p.sentence_scores.probs);
  Outcome o;
  o.sentence_acc = sentence_accuracy(preds, ex.test_samples);
  o.phrasal_acc = phrasal_accuracy(ex.test_gold, preds);
  o.report = evaluate(preds, ex.test_annotations);
  o.epochs = result.epochs.size();
  return o;
}

Experiment make_experiment(const std::filesystem::path& dir) {
  auto data = testing::make_synth(kTrainSize + kTestSize, kCorpusSeed, dir);
  Experiment ex{std::move(data.corpus), std::move(data.provider), {}, {}, {}, {}};
  for (std::size_t i = 0; i < ex.corpus.samples.size(); ++i) {
    if (i < kTrainSize) {
      ex.train_samples.push_back(ex.corpus.samples[i].sample);
    } else {
      ex.test_samples.push_back(ex.corpus.samples[i].sample);
      ex.test_gold.push_back(ex.corpus.samples[i]);
      ex.test_annotations.push_back(ex.corpus.annotations[i]);
    }
  }
  return ex;
}

void weak_supervision_and_ablations(const std::filesystem::path& dir) {
  const auto t0 = Clock::now();
  const Experiment ex = make_experiment(dir);
  const Variant full{"full", {}, InductionMode::kFuzzy};
  const Outcome base = run_variant(ex, full);
  const double base_secs = seconds_since(t0);
  report("weak supervision", base.sentence_acc >= kMinSentenceAcc && base.phrasal_acc >= kMinPhrasalAcc &&
                                 base.epochs <= kMaxEpochs,
         fmt("sentence acc %.4f (>= %.2f), phrasal acc %.4f (>= %.2f)", base.sentence_acc,
             kMinSentenceAcc, base.phrasal_acc, kMinPhrasalAcc),
         base_secs, 300);
  std::printf("      full model: AM %.4f GM %.4f  F_E %.3f F_C %.3f F_N %.3f F_UP %.3f F_UH %.3f\n",
              base.report.am, base.report.gm, base.report.f_e, base.report.f_c, base.report.f_n,
              base.report.f_up, base.report.f_uh);

  const auto t1 = Clock::now();
  Variant rand_align{"random aligner", {}, InductionMode::kFuzzy};
  rand_align.pipeline.aligner = AlignMode::kRandom;
  rand_align.pipeline.seed = kTrainSeed;
  Variant rand_chunk{"random chunker", {}, InductionMode::kFuzzy};
  rand_chunk.pipeline.chunker = ChunkerMode::kRandom;
  rand_chunk.pipeline.seed = kTrainSeed;
  const Variant mean{"mean induction", {}, InductionMode::kMean};
  const Outcome ra = run_variant(ex, rand_align);
  const Outcome rc = run_variant(ex, rand_chunk);
  const Outcome mi = run_variant(ex, mean);
  for (const auto& [name, o] : {std::pair{"random aligner", ra}, {"random chunker", rc},
                                {"mean induction", mi}}) {
    std::printf("      %s: AM %.4f GM %.4f  sentence acc %.4f  phrasal acc %.4f\n", name,
                o.report.am, o.report.gm, o.sentence_acc, o.phrasal_acc);
  }
  const double grid_secs = base_secs + seconds_since(t1);
  const bool align_lower = ra.report.am < base.report.am;
  const bool chunk_lower = rc.report.am < base.report.am;
  const bool mean_lower = mi.report.am < base.report.am;
  const bool mean_acc_close = std::abs(mi.sentence_acc - base.sentence_acc) <= kMeanAccWindow;
  report("ablation direction", align_lower && chunk_lower && mean_lower && mean_acc_close,
         fmt("AM full %.4f > rand-align %.4f, rand-chunk %.4f, mean %.4f", base.report.am,
             ra.report.am, rc.report.am, mi.report.am) +
             fmt("; mean acc gap %.4f (<= %.2f)", std::abs(mi.sentence_acc - base.sentence_acc),
                 kMeanAccWindow),
         grid_secs, 1200);
}

void normalization() {
  report("normalization invariant", worst_norm_error <= kNormTol && norm_checks > 0,
         fmt("%.0f sentence distributions, max |sum - 1| %.2e (tol %.0e)",
             static_cast<double>(norm_checks), worst_norm_error, kNormTol),
         0.0, 1);
}

void determinism(const std::filesystem::path& dir) {
  const auto t0 = Clock::now();
  auto call = [](std::vector<std::string> args) {
    args.insert(args.begin(), "epr");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    if (code != 0) std::fprintf(stderr, "%s", err.str().c_str());
    return code;
  };
  const auto f = [&](const char* name) { return (dir / name).string(); };
  bool ok = call({"--seed", "3", "synth", "--n", "600", "--out-corpus", f("c.jsonl"),
                  "--out-annotations", f("a.json"), "--out-embeddings", f("e.jsonl")}) == 0;
  std::vector<std::string> first;
  const std::vector<std::string> artifacts = {"m.json", "log.jsonl", "p.jsonl", "r.json"};
  std::size_t identical = 0;
  for (int round = 0; round < 2 && ok; ++round) {
    ok = ok && call({"--seed", "11", "--threads", "4", "train", "--corpus", f("c.jsonl"),
                     "--embeddings", f("e.jsonl"), "--model", f("m.json"), "--log", f("log.jsonl"),
                     "--lr", "0.01"}) == 0;
    ok = ok && call({"--seed", "11", "--threads", "4", "predict", "--model", f("m.json"),
                     "--corpus", f("c.jsonl"), "--embeddings", f("e.jsonl"), "--out",
                     f("p.jsonl")}) == 0;
    ok = ok && call({"eval", "--pred", f("p.jsonl"), "--annotations", f("a.json"), "--report",
                     f("r.json"), "--corpus", f("c.jsonl")}) == 0;
    for (std::size_t i = 0; ok && i < artifacts.size(); ++i) {
      const std::string bytes = read_file(dir / artifacts[i]);
      if (round == 0) {
        first.push_back(bytes);
        std::filesystem::remove(dir / artifacts[i]);
      } else {
        identical += bytes == first[i];
      }
    }
  }
  report("determinism", ok && identical == artifacts.size(),
         fmt("%.0f/%.0f artifacts byte-identical across two runs", static_cast<double>(identical),
             static_cast<double>(artifacts.size())),
         seconds_since(t0), 120);
}

}  // namespace

int main() {
  testing::TempDir dir("acceptance");
  chunker_golden();
  evaluator_golden();
  induction_oracle();
  gradient_check();
  alignment_oracle();
  weak_supervision_and_ablations(dir.path());
  normalization();
  determinism(dir.path());
  std::printf("%s: %d criterion(s) failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
