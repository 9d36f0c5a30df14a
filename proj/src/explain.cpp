#include "epr/explain.hpp"

#include <cstdio>
#include "json.hpp"
#include <sstream>

#include "epr/error.hpp"

namespace epr {

namespace {

using json = nlohmann::ordered_json;

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string scores(const Eigen::Vector3d& p) {
  return "E: " + fixed2(p[0]) + " C: " + fixed2(p[1]) + " N: " + fixed2(p[2]);
}

std::string bracket(const Sample& sample, const Phrase& phrase) {
  return "[" + sample.sentence(phrase.side).text(phrase.span) + "]" +
         std::string(to_string(phrase.kind));
}

// The sentence with every detected phrase wrapped in brackets.
std::string bracketed(const Sentence& s, const std::vector<Span>& spans) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!out.empty()) out += ' ';
    for (const auto& sp : spans) {
      if (sp.start == i) out += '[';
    }
    out += s.tokens[i].text;
    for (const auto& sp : spans) {
      if (sp.end == i + 1) out += ']';
    }
  }
  return out;
}

json span_json(const std::optional<Phrase>& p) {
  if (!p) return nullptr;
  return {{"span", {p->span.start, p->span.end}}, {"kind", to_string(p->kind)}};
}

}  // namespace

ExplainOutput explain_report(const std::vector<PredictionRecord>& predictions,
                             const std::vector<Sample>& corpus) {
  const SampleIndex index = index_samples(corpus);
  ExplainOutput out;
  std::ostringstream text;
  std::ostringstream lines;
  bool first = true;
  for (const auto& rec : predictions) {
    auto it = index.find(rec.sample_id);
    if (it == index.end()) {
      throw ValidationError("sample '" + rec.sample_id + "' is not in the corpus");
    }
    const Sample& sample = *it->second;
    for (const auto& pp : rec.pairs) {
      for (const auto* ph : {&pp.pair.premise, &pp.pair.hypothesis}) {
        if (*ph && ph->value().span.end > sample.sentence(ph->value().side).size()) {
          throw ValidationError("sample '" + rec.sample_id + "': phrase span out of bounds");
        }
      }
    }

    std::vector<Span> p_spans;
    std::vector<Span> h_spans;
    for (const auto& pp : rec.pairs) {
      if (pp.pair.premise) p_spans.push_back(pp.pair.premise->span);
      if (pp.pair.hypothesis) h_spans.push_back(pp.pair.hypothesis->span);
    }

    if (!first) text << '\n';
    first = false;
    text << "== " << rec.sample_id << '\n';
    text << "premise:    " << bracketed(sample.premise, p_spans) << '\n';
    text << "hypothesis: " << bracketed(sample.hypothesis, h_spans) << '\n';

    json pairs = json::array();
    for (const auto& pp : rec.pairs) {
      const std::string left = pp.pair.premise ? bracket(sample, *pp.pair.premise) : "⟨EMPTY⟩";
      const std::string right =
          pp.pair.hypothesis ? bracket(sample, *pp.pair.hypothesis) : "⟨EMPTY⟩";
      text << "  " << left << " ↔ " << right << "  " << short_name(pp.label) << " ("
           << scores(pp.prediction.probs) << ")\n";
      pairs.push_back({{"premise", span_json(pp.pair.premise)},
                       {"premise_text",
                        pp.pair.premise ? json(sample.premise.text(pp.pair.premise->span)) : json()},
                       {"hypothesis", span_json(pp.pair.hypothesis)},
                       {"hypothesis_text", pp.pair.hypothesis
                                               ? json(sample.hypothesis.text(pp.pair.hypothesis->span))
                                               : json()},
                       {"aligned", pp.pair.aligned},
                       {"label", short_name(pp.label)},
                       {"probs", {pp.prediction.probs[0], pp.prediction.probs[1],
                                  pp.prediction.probs[2]}}});
    }
    const auto& s = rec.sentence_scores;
    text << scores(s.probs) << " → predicted " << short_name(rec.sentence_label);
    if (sample.label) text << " (gold " << short_name(*sample.label) << ")";
    text << '\n';

    json obj = {{"sample_id", rec.sample_id},
                {"pairs", std::move(pairs)},
                {"sentence", {{"probs", {s.probs[0], s.probs[1], s.probs[2]}},
                              {"predicted", short_name(rec.sentence_label)}}}};
    if (sample.label) obj["gold"] = short_name(*sample.label);
    lines << obj.dump() << '\n';
  }
  out.text = text.str();
  out.json = lines.str();
  return out;
}

}  // namespace epr
