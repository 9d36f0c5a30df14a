#include "epr/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "epr/error.hpp"

namespace epr {

namespace {

constexpr std::size_t idx(Category c) { return static_cast<std::size_t>(c); }

void insert_span(std::set<std::size_t>& set, const Span& span) {
  for (std::size_t i = span.start; i < span.end; ++i) set.insert(i);
}

std::size_t intersection_size(const std::set<std::size_t>& a, const std::set<std::size_t>& b) {
  std::size_t n = 0;
  for (std::size_t i : a) n += b.count(i);
  return n;
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}


}  // namespace

CategoryCounts& CategoryCounts::operator+=(const CategoryCounts& o) {
  hits_premise += o.hits_premise;
  pred_premise += o.pred_premise;
  gold_premise += o.gold_premise;
  hits_hypothesis += o.hits_hypothesis;
  pred_hypothesis += o.pred_hypothesis;
  gold_hypothesis += o.gold_hypothesis;
  return *this;
}

IndexSets index_sets(const PredictionRecord& prediction) {
  IndexSets sets;
  for (const auto& pp : prediction.pairs) {
    if (pp.pair.aligned) {
      const auto c = idx(to_category(pp.label));
      insert_span(sets.premise[c], pp.pair.premise->span);
      insert_span(sets.hypothesis[c], pp.pair.hypothesis->span);
    } else if (pp.pair.premise) {
      insert_span(sets.premise[idx(Category::kUP)], pp.pair.premise->span);
    } else if (pp.pair.hypothesis) {
      insert_span(sets.hypothesis[idx(Category::kUH)], pp.pair.hypothesis->span);
    }
  }
  return sets;
}

IndexSets index_sets(const AnnotationRecord& annotation) {
  IndexSets sets;
  for (const auto& u : annotation.units) {
    const auto c = idx(u.label);
    if (u.premise_span) insert_span(sets.premise[c], *u.premise_span);
    if (u.hypothesis_span) insert_span(sets.hypothesis[c], *u.hypothesis_span);
  }
  return sets;
}

CountTable count_sets(const IndexSets& predicted, const IndexSets& gold) {
  CountTable table;
  for (Category c : kCategories) {
    const auto i = idx(c);
    CategoryCounts& counts = table[i];
    counts.category = c;
    if (c != Category::kUH) {
      counts.hits_premise = intersection_size(predicted.premise[i], gold.premise[i]);
      counts.pred_premise = predicted.premise[i].size();
      counts.gold_premise = gold.premise[i].size();
    }
    if (c != Category::kUP) {
      counts.hits_hypothesis = intersection_size(predicted.hypothesis[i], gold.hypothesis[i]);
      counts.pred_hypothesis = predicted.hypothesis[i].size();
      counts.gold_hypothesis = gold.hypothesis[i].size();
    }
  }
  return table;
}

CountTable count_sample(const PredictionRecord& prediction, const AnnotationRecord& annotation) {
  if (prediction.sample_id != annotation.sample_id) {
    throw ValidationError("sample id mismatch: prediction '" + prediction.sample_id +
                          "' vs annotation '" + annotation.sample_id + "'");
  }
  return count_sets(index_sets(prediction), index_sets(annotation));
}

CategoryScore score_category(const CategoryCounts& c) {
  CategoryScore s;
  if (c.category == Category::kUP) {
    s.precision = ratio(c.hits_premise, c.pred_premise);
    s.recall = ratio(c.hits_premise, c.gold_premise);
  } else if (c.category == Category::kUH) {
    s.precision = ratio(c.hits_hypothesis, c.pred_hypothesis);
    s.recall = ratio(c.hits_hypothesis, c.gold_hypothesis);
  } else {
    s.precision = std::sqrt(ratio(c.hits_premise, c.pred_premise) *
                            ratio(c.hits_hypothesis, c.pred_hypothesis));
    s.recall = std::sqrt(ratio(c.hits_premise, c.gold_premise) *
                         ratio(c.hits_hypothesis, c.gold_hypothesis));
  }
  const double sum = s.precision + s.recall;
  s.f = sum > 0.0 ? 2.0 * s.precision * s.recall / sum : 0.0;
  return s;
}

void fill_aggregates(EvalReport& r) {
  const std::array<double, 5> f = {r.f_e, r.f_c, r.f_n, r.f_up, r.f_uh};
  double sum = 0.0;
  double log_sum = 0.0;
  bool any_zero = false;
  for (double v : f) {
    sum += v;
    if (v <= 0.0) {
      any_zero = true;
    } else {
      log_sum += std::log(v);
    }
  }
  r.am = sum / 5.0;
  r.gm = any_zero ? 0.0 : std::exp(log_sum / 5.0);
  // exp/log rounding can push GM a hair above AM when all scores are equal.
  r.gm = std::min(r.gm, r.am);
}

EvalReport score(const CountTable& pooled) {
  EvalReport r;
  r.f_e = score_category(pooled[idx(Category::kE)]).f;
  r.f_c = score_category(pooled[idx(Category::kC)]).f;
  r.f_n = score_category(pooled[idx(Category::kN)]).f;
  r.f_up = score_category(pooled[idx(Category::kUP)]).f;
  r.f_uh = score_category(pooled[idx(Category::kUH)]).f;
  fill_aggregates(r);
  return r;
}

EvalReport average_reports(const std::vector<EvalReport>& reports) {
  EvalReport avg;
  if (reports.empty()) return avg;
  for (const auto& r : reports) {
    avg.f_e += r.f_e;
    avg.f_c += r.f_c;
    avg.f_n += r.f_n;
    avg.f_up += r.f_up;
    avg.f_uh += r.f_uh;
  }
  const double n = static_cast<double>(reports.size());
  avg.f_e /= n;
  avg.f_c /= n;
  avg.f_n /= n;
  avg.f_up /= n;
  avg.f_uh /= n;
  fill_aggregates(avg);
  return avg;
}

namespace {

CountTable empty_table() {
  CountTable t;
  for (Category c : kCategories) t[idx(c)].category = c;
  return t;
}

void accumulate(CountTable& into, const CountTable& add) {
  for (std::size_t i = 0; i < into.size(); ++i) into[i] += add[i];
}

}  // namespace

EvalReport evaluate(const std::vector<PredictionRecord>& predictions,
                    const std::vector<AnnotationRecord>& annotations) {
  std::map<std::string, const PredictionRecord*, std::less<>> by_id;
  for (const auto& p : predictions) by_id.emplace(p.sample_id, &p);

  // Annotator ids in first-seen order keep the averaging order stable.
  std::vector<std::string> annotators;
  std::map<std::string, CountTable, std::less<>> pooled;
  for (const auto& a : annotations) {
    auto it = by_id.find(a.sample_id);
    if (it == by_id.end()) {
      throw ValidationError("no prediction for annotated sample '" + a.sample_id + "'");
    }
    auto [slot, inserted] = pooled.try_emplace(a.annotator_id, empty_table());
    if (inserted) annotators.push_back(a.annotator_id);
    accumulate(slot->second, count_sample(*it->second, a));
  }
  std::vector<EvalReport> reports;
  for (const auto& id : annotators) reports.push_back(score(pooled.at(id)));
  return average_reports(reports);
}

double sentence_accuracy(const std::vector<PredictionRecord>& predictions,
                         const std::vector<Sample>& corpus) {
  std::map<std::string, const PredictionRecord*, std::less<>> by_id;
  for (const auto& p : predictions) by_id.emplace(p.sample_id, &p);
  if (corpus.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& s : corpus) {
    if (!s.label) throw ValidationError("sample '" + s.id + "' has no gold label");
    auto it = by_id.find(s.id);
    if (it == by_id.end()) throw ValidationError("no prediction for sample '" + s.id + "'");
    if (it->second->sentence_label == *s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(corpus.size());
}

EvalReport agreement(const std::vector<AnnotationRecord>& annotations) {
  std::vector<std::string> annotators;
  std::map<std::string, std::map<std::string, const AnnotationRecord*, std::less<>>, std::less<>>
      by_annotator;
  for (const auto& a : annotations) {
    auto [it, inserted] = by_annotator.try_emplace(a.annotator_id);
    if (inserted) annotators.push_back(a.annotator_id);
    it->second.emplace(a.sample_id, &a);
  }
  if (annotators.size() < 2) throw DomainError("agreement needs at least two annotators");

  std::vector<EvalReport> reports;
  for (const auto& out_id : annotators) {
    for (const auto& gold_id : annotators) {
      if (out_id == gold_id) continue;
      const auto& out = by_annotator.at(out_id);
      const auto& gold = by_annotator.at(gold_id);
      CountTable pooled = empty_table();
      bool shared = false;
      for (const auto& [sample_id, record] : gold) {
        auto it = out.find(sample_id);
        if (it == out.end()) continue;
        shared = true;
        accumulate(pooled, count_sets(index_sets(*it->second), index_sets(*record)));
      }
      if (shared) reports.push_back(score(pooled));
    }
  }
  if (reports.empty()) throw DomainError("no two annotators share a sample");
  return average_reports(reports);
}

}  // namespace epr
