#include "epr/corpus.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "epr/error.hpp"
#include "epr/io.hpp"
#include "json.hpp"

namespace epr {

using Json = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 18> kUniversalPos = {
    "ADJ",  "ADP",   "ADV",  "AUX",   "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON",  "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",    "SPACE"};

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view text, const std::array<std::string_view, N>& names,
                std::string_view what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == text) return static_cast<Enum>(i);
  }
  throw ValidationError("unknown " + std::string(what) + " '" + std::string(text) + "'");
}

constexpr std::array<std::string_view, 3> kLabelNames = {"entailment", "contradiction", "neutral"};
constexpr std::array<std::string_view, 5> kCategoryNames = {
    "entailment", "contradiction", "neutral", "unaligned_premise", "unaligned_hypothesis"};
constexpr std::array<std::string_view, 2> kSideNames = {"premise", "hypothesis"};
constexpr std::array<std::string_view, 4> kKindNames = {"NP", "PP", "VP", "Other"};

Json span_to_json(const Span& s) { return Json::array({s.start, s.end}); }

Span span_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_unsigned() || !j[1].is_number_unsigned()) {
    throw ParseError("span must be a [start, end] pair of non-negative integers");
  }
  Span s{j[0].get<std::size_t>(), j[1].get<std::size_t>()};
  if (s.start >= s.end) {
    throw ValidationError("empty or inverted span [" + std::to_string(s.start) + ", " +
                          std::to_string(s.end) + ")");
  }
  return s;
}

const Json& require(const Json& j, const char* key) {
  if (!j.is_object()) throw ParseError("expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const Json& j, const char* key) {
  const Json& v = require(j, key);
  if (!v.is_string()) throw ParseError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

Json sentence_to_json(const Sentence& s) {
  Json tokens = Json::array();
  for (const auto& t : s.tokens) tokens.push_back({{"text", t.text}, {"pos", t.pos}, {"tag", t.tag}});
  Json j = {{"tokens", std::move(tokens)}};
  if (s.noun_chunks) {
    Json chunks = Json::array();
    for (const auto& c : *s.noun_chunks) chunks.push_back(span_to_json(c));
    j["noun_chunks"] = std::move(chunks);
  }
  return j;
}

Sentence sentence_from_json(const Json& j) {
  Sentence s;
  const Json& tokens = require(j, "tokens");
  if (!tokens.is_array()) throw ParseError("'tokens' must be an array");
  for (const auto& t : tokens) {
    s.tokens.push_back({require_string(t, "text"), require_string(t, "pos"), require_string(t, "tag")});
  }
  if (auto it = j.find("noun_chunks"); it != j.end() && !it->is_null()) {
    std::vector<Span> chunks;
    for (const auto& c : *it) chunks.push_back(span_from_json(c));
    s.noun_chunks = std::move(chunks);
  }
  return s;
}

Json phrase_to_json(const Phrase& p) {
  return {{"side", to_string(p.side)}, {"span", span_to_json(p.span)}, {"kind", to_string(p.kind)}};
}

Phrase phrase_from_json(const Json& j) {
  Phrase p;
  p.side = parse_side(require_string(j, "side"));
  p.span = span_from_json(require(j, "span"));
  p.kind = parse_phrase_kind(require_string(j, "kind"));
  return p;
}

Json probs_to_json(const Eigen::Vector3d& v) { return Json::array({v[0], v[1], v[2]}); }

Eigen::Vector3d probs_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw ParseError("probability vector must have 3 entries");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Json meta_line(const std::string& meta_json) {
  Json j;
  j[std::string(kMetaKey)] = Json::parse(meta_json);
  return j;
}

bool is_meta(const Json& j) { return j.is_object() && j.size() == 1 && j.contains(kMetaKey); }

// Runs `decode` on each non-blank, non-meta line; errors carry the line number.
template <typename T, typename F>
std::vector<T> read_lines(const std::filesystem::path& path, F decode) {
  const std::string text = read_file(path);
  std::vector<T> out;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      Json j = Json::parse(line);
      if (is_meta(j)) continue;
      out.push_back(decode(j));
    } catch (const Json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void check_span(const Span& s, std::size_t length, std::string_view where) {
  if (s.start >= s.end || s.end > length) {
    throw ValidationError(std::string(where) + ": span [" + std::to_string(s.start) + ", " +
                          std::to_string(s.end) + ") out of bounds for length " +
                          std::to_string(length));
  }
}

Sample sample_from_json(const Json& j) {
  Sample s;
  s.id = require_string(j, "id");
  s.premise = sentence_from_json(require(j, "premise"));
  s.hypothesis = sentence_from_json(require(j, "hypothesis"));
  if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
    s.label = parse_label(it->get<std::string>());
  }
  validate(s.premise, s.id + " premise");
  validate(s.hypothesis, s.id + " hypothesis");
  return s;
}

Json sample_to_json(const Sample& s) {
  Json j = {{"id", s.id}};
  if (s.label) j["label"] = to_string(*s.label);
  j["premise"] = sentence_to_json(s.premise);
  j["hypothesis"] = sentence_to_json(s.hypothesis);
  return j;
}

Json induction_to_json(const SentenceInduction& si) {
  return {{"s_e", si.s_e}, {"s_c", si.s_c}, {"s_n", si.s_n}, {"z", si.z},
          {"probs", probs_to_json(si.probs)}};
}

SentenceInduction induction_from_json(const Json& j) {
  SentenceInduction si;
  si.s_e = require(j, "s_e").get<double>();
  si.s_c = require(j, "s_c").get<double>();
  si.s_n = require(j, "s_n").get<double>();
  si.z = require(j, "z").get<double>();
  si.probs = probs_from_json(require(j, "probs"));
  return si;
}

Json prediction_to_json(const PredictionRecord& r) {
  Json pairs = Json::array();
  for (const auto& pp : r.pairs) {
    Json jp;
    jp["premise"] = pp.pair.premise ? phrase_to_json(*pp.pair.premise) : Json(nullptr);
    jp["hypothesis"] = pp.pair.hypothesis ? phrase_to_json(*pp.pair.hypothesis) : Json(nullptr);
    jp["aligned"] = pp.pair.aligned;
    jp["probs"] = probs_to_json(pp.prediction.probs);
    jp["label"] = to_string(pp.label);
    pairs.push_back(std::move(jp));
  }
  return {{"sample_id", r.sample_id},
          {"pairs", std::move(pairs)},
          {"sentence", induction_to_json(r.sentence_scores)},
          {"sentence_label", to_string(r.sentence_label)}};
}

PredictionRecord prediction_from_json(const Json& j) {
  PredictionRecord r;
  r.sample_id = require_string(j, "sample_id");
  for (const auto& jp : require(j, "pairs")) {
    PredictedPair pp;
    if (const Json& p = require(jp, "premise"); !p.is_null()) pp.pair.premise = phrase_from_json(p);
    if (const Json& h = require(jp, "hypothesis"); !h.is_null()) {
      pp.pair.hypothesis = phrase_from_json(h);
    }
    pp.pair.aligned = require(jp, "aligned").get<bool>();
    pp.prediction.probs = probs_from_json(require(jp, "probs"));
    pp.label = parse_label(require_string(jp, "label"));
    r.pairs.push_back(std::move(pp));
  }
  r.sentence_scores = induction_from_json(require(j, "sentence"));
  r.sentence_label = parse_label(require_string(j, "sentence_label"));
  validate(r);
  return r;
}

Json unit_to_json(const AnnotationUnit& u) {
  Json j = {{"label", to_string(u.label)}};
  if (u.premise_span) j["premise_span"] = span_to_json(*u.premise_span);
  if (u.hypothesis_span) j["hypothesis_span"] = span_to_json(*u.hypothesis_span);
  return j;
}

AnnotationUnit unit_from_json(const Json& j) {
  AnnotationUnit u;
  u.label = parse_category(require_string(j, "label"));
  if (auto it = j.find("premise_span"); it != j.end() && !it->is_null()) {
    u.premise_span = span_from_json(*it);
  }
  if (auto it = j.find("hypothesis_span"); it != j.end() && !it->is_null()) {
    u.hypothesis_span = span_from_json(*it);
  }
  return u;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(Label label) { return kLabelNames[static_cast<std::size_t>(label)]; }
std::string_view to_string(Category c) { return kCategoryNames[static_cast<std::size_t>(c)]; }
std::string_view to_string(Side side) { return kSideNames[static_cast<std::size_t>(side)]; }
std::string_view to_string(PhraseKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::string_view short_name(Label label) {
  static constexpr std::array<std::string_view, 3> names = {"E", "C", "N"};
  return names[static_cast<std::size_t>(label)];
}

Label parse_label(std::string_view text) { return parse_enum<Label>(text, kLabelNames, "label"); }
Category parse_category(std::string_view text) {
  return parse_enum<Category>(text, kCategoryNames, "annotation label");
}
Side parse_side(std::string_view text) { return parse_enum<Side>(text, kSideNames, "side"); }
PhraseKind parse_phrase_kind(std::string_view text) {
  return parse_enum<PhraseKind>(text, kKindNames, "phrase kind");
}

bool is_universal_pos(std::string_view pos) {
  return std::find(kUniversalPos.begin(), kUniversalPos.end(), pos) != kUniversalPos.end();
}

std::string Sentence::text(const Span& span) const {
  std::string out;
  for (std::size_t i = span.start; i < span.end && i < tokens.size(); ++i) {
    if (!out.empty()) out += ' ';
    out += tokens[i].text;
  }
  return out;
}

namespace {
Label argmax3(const Eigen::Vector3d& v) {
  // Lowest index wins ties.
  std::size_t best = 0;
  for (std::size_t i = 1; i < 3; ++i) {
    if (v[static_cast<Eigen::Index>(i)] > v[static_cast<Eigen::Index>(best)]) best = i;
  }
  return static_cast<Label>(best);
}
}  // namespace

Label PhrasalPrediction::argmax() const { return argmax3(probs); }
Label SentenceInduction::argmax() const { return argmax3(probs); }

double EvalReport::f(Category c) const {
  switch (c) {
    case Category::kE: return f_e;
    case Category::kC: return f_c;
    case Category::kN: return f_n;
    case Category::kUP: return f_up;
    case Category::kUH: return f_uh;
  }
  return 0.0;
}

SampleIndex index_samples(const std::vector<Sample>& samples) {
  SampleIndex index;
  for (const auto& s : samples) index.emplace(s.id, &s);
  return index;
}

// ---------------------------------------------------------------------------

void validate(const Sentence& sentence, std::string_view where) {
  for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
    const auto& t = sentence.tokens[i];
    if (t.text.empty()) {
      throw ValidationError(std::string(where) + ": token " + std::to_string(i) + " has empty text");
    }
    if (!is_universal_pos(t.pos)) {
      throw ValidationError(std::string(where) + ": token " + std::to_string(i) +
                            " has unknown POS tag '" + t.pos + "'");
    }
  }
  if (sentence.noun_chunks) {
    std::vector<Span> chunks = *sentence.noun_chunks;
    std::sort(chunks.begin(), chunks.end());
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      check_span(chunks[i], sentence.size(), std::string(where) + " noun chunk");
      if (i > 0 && chunks[i - 1].overlaps(chunks[i])) {
        throw ValidationError(std::string(where) + ": overlapping noun chunks");
      }
    }
  }
}

void validate(const AnnotationUnit& unit) {
  const bool p = unit.premise_span.has_value();
  const bool h = unit.hypothesis_span.has_value();
  bool ok = false;
  switch (unit.label) {
    case Category::kE:
    case Category::kC:
    case Category::kN: ok = p && h; break;
    case Category::kUP: ok = p && !h; break;
    case Category::kUH: ok = !p && h; break;
  }
  if (!ok) {
    throw ValidationError("annotation unit labeled '" + std::string(to_string(unit.label)) +
                          "' has the wrong span sides (premise " + (p ? "present" : "absent") +
                          ", hypothesis " + (h ? "present" : "absent") + ")");
  }
}

void validate(const AnnotationRecord& record) {
  std::vector<Span> premise;
  std::vector<Span> hypothesis;
  for (const auto& u : record.units) {
    validate(u);
    if (u.premise_span) premise.push_back(*u.premise_span);
    if (u.hypothesis_span) hypothesis.push_back(*u.hypothesis_span);
  }
  for (auto* spans : {&premise, &hypothesis}) {
    std::sort(spans->begin(), spans->end());
    for (std::size_t i = 1; i < spans->size(); ++i) {
      if ((*spans)[i - 1].overlaps((*spans)[i])) {
        throw ValidationError("annotation for sample '" + record.sample_id + "' by '" +
                              record.annotator_id + "' has overlapping " +
                              (spans == &premise ? "premise" : "hypothesis") + " spans");
      }
    }
  }
}

void validate(const AnnotationRecord& record, const Sample& sample) {
  validate(record);
  const std::string where = "annotation " + record.sample_id + "/" + record.annotator_id;
  for (const auto& u : record.units) {
    if (u.premise_span) check_span(*u.premise_span, sample.premise.size(), where);
    if (u.hypothesis_span) check_span(*u.hypothesis_span, sample.hypothesis.size(), where);
  }
}

void validate(const PredictionRecord& record) {
  for (const auto& pp : record.pairs) {
    const bool p = pp.pair.premise.has_value();
    const bool h = pp.pair.hypothesis.has_value();
    if (pp.pair.aligned != (p && h) || (!p && !h)) {
      throw ValidationError("prediction for '" + record.sample_id +
                            "': aligned flag inconsistent with present phrases");
    }
    if ((p && pp.pair.premise->side != Side::kPremise) ||
        (h && pp.pair.hypothesis->side != Side::kHypothesis)) {
      throw ValidationError("prediction for '" + record.sample_id + "': phrase on the wrong side");
    }
    const auto& probs = pp.prediction.probs;
    if (!probs.allFinite() || (probs.array() < 0.0).any() || std::abs(probs.sum() - 1.0) > 1e-6) {
      throw ValidationError("prediction for '" + record.sample_id +
                            "': pair probabilities are not a distribution");
    }
  }
  if (record.sentence_label != record.sentence_scores.argmax()) {
    throw ValidationError("prediction for '" + record.sample_id +
                          "': sentence_label is not the argmax of the sentence probabilities");
  }
}

// ---------------------------------------------------------------------------

std::string encode_sample(const Sample& sample) { return sample_to_json(sample).dump(); }

Sample decode_sample(std::string_view line) { return sample_from_json(Json::parse(line)); }

std::string encode_prediction(const PredictionRecord& record) {
  return prediction_to_json(record).dump();
}

PredictionRecord decode_prediction(std::string_view line) {
  return prediction_from_json(Json::parse(line));
}

std::string encode_phrase(const Phrase& phrase) { return phrase_to_json(phrase).dump(); }

std::vector<Sample> read_corpus(const std::filesystem::path& path) {
  auto samples = read_lines<Sample>(path, sample_from_json);
  std::set<std::string, std::less<>> seen;
  for (const auto& s : samples) {
    if (!seen.insert(s.id).second) {
      throw ValidationError(path.string() + ": duplicate sample id '" + s.id + "'");
    }
  }
  return samples;
}

void write_corpus(const std::vector<Sample>& samples, const std::filesystem::path& path,
                  const std::string& meta_json) {
  std::string out;
  if (!meta_json.empty()) out += meta_line(meta_json).dump() + "\n";
  for (const auto& s : samples) out += encode_sample(s) + "\n";
  write_file_atomic(path, out);
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
  return read_lines<PredictionRecord>(path, prediction_from_json);
}

void write_predictions(const std::vector<PredictionRecord>& records,
                       const std::filesystem::path& path, const std::string& meta_json) {
  std::string out;
  if (!meta_json.empty()) out += meta_line(meta_json).dump() + "\n";
  for (const auto& r : records) {
    validate(r);
    out += encode_prediction(r) + "\n";
  }
  write_file_atomic(path, out);
}

std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path) {
  Json doc;
  try {
    doc = Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError(path.string() + ": annotation file must be an object");
  std::vector<AnnotationRecord> out;
  for (const auto& [sample_id, records] : doc.items()) {
    if (sample_id == kMetaKey) continue;
    try {
      if (!records.is_array()) throw ParseError("annotator records must be an array");
      for (const auto& jr : records) {
        AnnotationRecord r;
        r.sample_id = sample_id;
        r.annotator_id = require_string(jr, "annotator_id");
        for (const auto& ju : require(jr, "units")) r.units.push_back(unit_from_json(ju));
        validate(r);
        out.push_back(std::move(r));
      }
    } catch (const Json::exception& e) {
      throw ParseError(path.string() + ": sample '" + sample_id + "': " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ": sample '" + sample_id + "': " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ": sample '" + sample_id + "': " + e.what());
    }
  }
  return out;
}

void write_annotations(const std::vector<AnnotationRecord>& records,
                       const std::filesystem::path& path, const std::string& meta_json) {
  Json doc = Json::object();
  if (!meta_json.empty()) doc[std::string(kMetaKey)] = Json::parse(meta_json);
  for (const auto& r : records) {
    validate(r);
    Json units = Json::array();
    for (const auto& u : r.units) units.push_back(unit_to_json(u));
    doc[r.sample_id].push_back({{"annotator_id", r.annotator_id}, {"units", std::move(units)}});
  }
  write_file_atomic(path, doc.dump(2) + "\n");
}

EvalReport read_report(const std::filesystem::path& path) {
  try {
    Json j = Json::parse(read_file(path));
    EvalReport r;
    r.f_e = require(j, "f_e").get<double>();
    r.f_c = require(j, "f_c").get<double>();
    r.f_n = require(j, "f_n").get<double>();
    r.f_up = require(j, "f_up").get<double>();
    r.f_uh = require(j, "f_uh").get<double>();
    r.gm = require(j, "gm").get<double>();
    r.am = require(j, "am").get<double>();
    if (auto it = j.find("sentence_accuracy"); it != j.end() && !it->is_null()) {
      r.sentence_accuracy = it->get<double>();
    }
    return r;
  } catch (const Json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_report(const EvalReport& report, const std::filesystem::path& path,
                  const std::string& meta_json) {
  Json j = {{"f_e", report.f_e}, {"f_c", report.f_c},   {"f_n", report.f_n}, {"f_up", report.f_up},
            {"f_uh", report.f_uh}, {"gm", report.gm}, {"am", report.am}};
  if (report.sentence_accuracy) j["sentence_accuracy"] = *report.sentence_accuracy;
  if (!meta_json.empty()) j[std::string(kMetaKey)] = Json::parse(meta_json);
  write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace epr
