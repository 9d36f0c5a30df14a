#include "epr/synthcorpus.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "epr/chunker.hpp"
#include "epr/error.hpp"
#include "epr/rng.hpp"

namespace epr {

namespace {

using K = PhraseKind;

Concept make(K kind, std::string_view head, std::initializer_list<std::string_view> syn,
             std::initializer_list<std::string_view> ant, std::initializer_list<std::string_view> unr) {
  Concept c;
  c.head = Lexicon::Phrase(kind, head);
  for (auto s : syn) c.synonyms.push_back(Lexicon::Phrase(kind, s));
  for (auto s : ant) c.antonyms.push_back(Lexicon::Phrase(kind, s));
  for (auto s : unr) c.unrelated.push_back(Lexicon::Phrase(kind, s));
  return c;
}

// Planted-phrase geometry. Cosines between a premise phrase and its partner:
// E in [0.9, 1], C in [0.5, 0.7] with the rest along the antonym axis, N in
// [0.25, 0.4]. Unaligned phrases lean 0.1 toward the first aligned pair so
// that no exact ties arise after float rounding.
constexpr double kEntailMinCos = 0.9;
constexpr double kContraCosLo = 0.5;
constexpr double kContraCosHi = 0.7;
constexpr double kNeutralCosLo = 0.25;
constexpr double kNeutralCosHi = 0.4;
constexpr double kUnalignedLean = 0.1;
constexpr double kGlobalNoise = 0.1;
constexpr std::size_t kMaxPairs = 5;

struct Planted {
  std::size_t concept_index = 0;
  const LexPhrase* premise = nullptr;
  const LexPhrase* hypothesis = nullptr;
  Label relation = Label::kEntailment;
};

const LexPhrase& pick(const std::vector<LexPhrase>& v, Rng& rng) {
  return v[static_cast<std::size_t>(rng.below(v.size()))];
}

Label draw(Rng& rng, double pe, double pc) {
  const double u = rng.uniform();
  if (u < pe) return Label::kEntailment;
  if (u < pe + pc) return Label::kContradiction;
  return Label::kNeutral;
}

struct Placed {
  Span span;
  std::size_t slot = 0;  // index into the sample's phrase list
};

// Appends phrases to a sentence in the given order; returns each span.
std::vector<Span> assemble(Sentence& sentence, const std::vector<const LexPhrase*>& phrases) {
  std::vector<Span> spans;
  std::vector<Span> chunks;
  for (const LexPhrase* lp : phrases) {
    const std::size_t start = sentence.tokens.size();
    sentence.tokens.insert(sentence.tokens.end(), lp->tokens.begin(), lp->tokens.end());
    spans.push_back({start, sentence.tokens.size()});
    if (lp->noun_chunk) chunks.push_back({start + lp->noun_chunk->start, start + lp->noun_chunk->end});
  }
  sentence.noun_chunks = std::move(chunks);
  return spans;
}

int kind_rank(PhraseKind k) {
  switch (k) {
    case PhraseKind::kNP: return 0;
    case PhraseKind::kVP: return 1;
    case PhraseKind::kPP: return 2;
    case PhraseKind::kOther: return 3;
  }
  return 4;
}

// Orders phrase slots as <NP> <VP> <PP> <Other>, random within a kind.
std::vector<std::size_t> sentence_order(const std::vector<const LexPhrase*>& phrases, Rng& rng) {
  std::vector<std::size_t> order(phrases.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return kind_rank(phrases[a]->kind) < kind_rank(phrases[b]->kind);
  });
  return order;
}

Eigen::VectorXd normalized(const Eigen::VectorXd& v) { return v / v.norm(); }

}  // namespace

LexPhrase Lexicon::Phrase(PhraseKind kind, std::string_view spec) {
  LexPhrase lp;
  lp.kind = kind;
  std::istringstream in{std::string(spec)};
  std::string item;
  while (in >> item) {
    const auto a = item.find('/');
    const auto b = item.find('/', a + 1);
    if (a == std::string::npos || b == std::string::npos) {
      throw ValidationError("lexicon token must be word/POS/TAG: '" + item + "'");
    }
    lp.tokens.push_back({item.substr(0, a), item.substr(a + 1, b - a - 1), item.substr(b + 1)});
  }
  if (kind == PhraseKind::kNP) lp.noun_chunk = Span{0, lp.tokens.size()};
  if (kind == PhraseKind::kPP) lp.noun_chunk = Span{1, lp.tokens.size()};
  return lp;
}

Lexicon Lexicon::Default() {
  Lexicon lx;
  auto& c = lx.concepts;
  // Noun phrases.
  c.push_back(make(K::kNP, "the/DET/DT dog/NOUN/NN",
                   {"the/DET/DT puppy/NOUN/NN", "the/DET/DT hound/NOUN/NN"},
                   {"the/DET/DT cat/NOUN/NN", "the/DET/DT kitten/NOUN/NN"},
                   {"the/DET/DT teacher/NOUN/NN", "the/DET/DT bicycle/NOUN/NN"}));
  c.push_back(make(K::kNP, "a/DET/DT man/NOUN/NN",
                   {"a/DET/DT guy/NOUN/NN", "a/DET/DT gentleman/NOUN/NN"},
                   {"a/DET/DT woman/NOUN/NN", "a/DET/DT girl/NOUN/NN"},
                   {"a/DET/DT computer/NOUN/NN", "a/DET/DT sandwich/NOUN/NN"}));
  c.push_back(make(K::kNP, "the/DET/DT child/NOUN/NN",
                   {"the/DET/DT kid/NOUN/NN", "the/DET/DT youngster/NOUN/NN"},
                   {"the/DET/DT adult/NOUN/NN", "the/DET/DT elder/NOUN/NN"},
                   {"the/DET/DT river/NOUN/NN", "the/DET/DT lamp/NOUN/NN"}));
  c.push_back(make(K::kNP, "a/DET/DT red/ADJ/JJ car/NOUN/NN",
                   {"a/DET/DT crimson/ADJ/JJ car/NOUN/NN", "a/DET/DT red/ADJ/JJ automobile/NOUN/NN"},
                   {"a/DET/DT blue/ADJ/JJ car/NOUN/NN", "a/DET/DT green/ADJ/JJ car/NOUN/NN"},
                   {"a/DET/DT tall/ADJ/JJ building/NOUN/NN", "a/DET/DT loud/ADJ/JJ song/NOUN/NN"}));
  c.push_back(make(K::kNP, "the/DET/DT old/ADJ/JJ woman/NOUN/NN",
                   {"the/DET/DT elderly/ADJ/JJ woman/NOUN/NN", "the/DET/DT aged/ADJ/JJ lady/NOUN/NN"},
                   {"the/DET/DT young/ADJ/JJ woman/NOUN/NN", "the/DET/DT little/ADJ/JJ girl/NOUN/NN"},
                   {"the/DET/DT wooden/ADJ/JJ table/NOUN/NN", "the/DET/DT bright/ADJ/JJ star/NOUN/NN"}));
  c.push_back(make(K::kNP, "two/NUM/CD players/NOUN/NNS",
                   {"two/NUM/CD athletes/NOUN/NNS", "two/NUM/CD sportsmen/NOUN/NNS"},
                   {"three/NUM/CD players/NOUN/NNS", "ten/NUM/CD players/NOUN/NNS"},
                   {"two/NUM/CD windows/NOUN/NNS", "two/NUM/CD pencils/NOUN/NNS"}));
  c.push_back(make(K::kNP, "the/DET/DT happy/ADJ/JJ crowd/NOUN/NN",
                   {"the/DET/DT cheerful/ADJ/JJ crowd/NOUN/NN", "the/DET/DT joyful/ADJ/JJ crowd/NOUN/NN"},
                   {"the/DET/DT angry/ADJ/JJ crowd/NOUN/NN", "the/DET/DT sad/ADJ/JJ crowd/NOUN/NN"},
                   {"the/DET/DT quiet/ADJ/JJ library/NOUN/NN", "the/DET/DT metal/NOUN/NN fence/NOUN/NN"}));
  c.push_back(make(K::kNP, "a/DET/DT small/ADJ/JJ boat/NOUN/NN",
                   {"a/DET/DT little/ADJ/JJ boat/NOUN/NN", "a/DET/DT tiny/ADJ/JJ boat/NOUN/NN"},
                   {"a/DET/DT huge/ADJ/JJ ship/NOUN/NN", "a/DET/DT large/ADJ/JJ boat/NOUN/NN"},
                   {"a/DET/DT fresh/ADJ/JJ salad/NOUN/NN", "a/DET/DT paper/NOUN/NN kite/NOUN/NN"}));
  c.push_back(make(K::kNP, "the/DET/DT singer/NOUN/NN",
                   {"the/DET/DT vocalist/NOUN/NN", "the/DET/DT performer/NOUN/NN"},
                   {"the/DET/DT audience/NOUN/NN", "the/DET/DT listener/NOUN/NN"},
                   {"the/DET/DT mountain/NOUN/NN", "the/DET/DT carpet/NOUN/NN"}));
  c.push_back(make(K::kNP, "a/DET/DT doctor/NOUN/NN",
                   {"a/DET/DT physician/NOUN/NN", "a/DET/DT medic/NOUN/NN"},
                   {"a/DET/DT patient/NOUN/NN", "a/DET/DT sick/ADJ/JJ patient/NOUN/NN"},
                   {"a/DET/DT guitar/NOUN/NN", "a/DET/DT tractor/NOUN/NN"}));
  c.push_back(make(K::kNP, "the/DET/DT sunny/ADJ/JJ beach/NOUN/NN",
                   {"the/DET/DT bright/ADJ/JJ beach/NOUN/NN", "the/DET/DT sunlit/ADJ/JJ beach/NOUN/NN"},
                   {"the/DET/DT dark/ADJ/JJ beach/NOUN/NN", "the/DET/DT stormy/ADJ/JJ beach/NOUN/NN"},
                   {"the/DET/DT busy/ADJ/JJ office/NOUN/NN", "the/DET/DT frozen/ADJ/JJ lake/NOUN/NN"}));
  c.push_back(make(K::kNP, "a/DET/DT black/ADJ/JJ horse/NOUN/NN",
                   {"a/DET/DT dark/ADJ/JJ horse/NOUN/NN", "a/DET/DT black/ADJ/JJ stallion/NOUN/NN"},
                   {"a/DET/DT white/ADJ/JJ horse/NOUN/NN", "a/DET/DT pale/ADJ/JJ horse/NOUN/NN"},
                   {"a/DET/DT yellow/ADJ/JJ bus/NOUN/NN", "a/DET/DT plastic/ADJ/JJ cup/NOUN/NN"}));
  // Verb phrases.
  c.push_back(make(K::kVP, "is/AUX/VBZ running/VERB/VBG",
                   {"is/AUX/VBZ jogging/VERB/VBG", "is/AUX/VBZ sprinting/VERB/VBG"},
                   {"is/AUX/VBZ sitting/VERB/VBG", "is/AUX/VBZ resting/VERB/VBG"},
                   {"is/AUX/VBZ cooking/VERB/VBG", "is/AUX/VBZ reading/VERB/VBG"}));
  c.push_back(make(K::kVP, "is/AUX/VBZ sleeping/VERB/VBG",
                   {"is/AUX/VBZ napping/VERB/VBG", "is/AUX/VBZ dozing/VERB/VBG"},
                   {"is/AUX/VBZ waking/VERB/VBG up/ADP/RP", "is/AUX/VBZ jumping/VERB/VBG"},
                   {"is/AUX/VBZ painting/VERB/VBG", "is/AUX/VBZ singing/VERB/VBG"}));
  c.push_back(make(K::kVP, "is/AUX/VBZ laughing/VERB/VBG",
                   {"is/AUX/VBZ giggling/VERB/VBG", "is/AUX/VBZ smiling/VERB/VBG"},
                   {"is/AUX/VBZ crying/VERB/VBG", "is/AUX/VBZ sobbing/VERB/VBG"},
                   {"is/AUX/VBZ driving/VERB/VBG", "is/AUX/VBZ typing/VERB/VBG"}));
  c.push_back(make(K::kVP, "is/AUX/VBZ showing/VERB/VBG off/ADP/RP",
                   {"is/AUX/VBZ displaying/VERB/VBG", "is/AUX/VBZ flaunting/VERB/VBG"},
                   {"is/AUX/VBZ hiding/VERB/VBG", "is/AUX/VBZ concealing/VERB/VBG"},
                   {"is/AUX/VBZ swimming/VERB/VBG", "is/AUX/VBZ knitting/VERB/VBG"}));
  c.push_back(make(K::kVP, "is/AUX/VBZ buying/VERB/VBG",
                   {"is/AUX/VBZ purchasing/VERB/VBG", "is/AUX/VBZ acquiring/VERB/VBG"},
                   {"is/AUX/VBZ selling/VERB/VBG", "is/AUX/VBZ giving/VERB/VBG away/ADP/RP"},
                   {"is/AUX/VBZ climbing/VERB/VBG", "is/AUX/VBZ whistling/VERB/VBG"}));
  c.push_back(make(K::kVP, "is/AUX/VBZ entering/VERB/VBG",
                   {"is/AUX/VBZ coming/VERB/VBG in/ADP/RP", "is/AUX/VBZ going/VERB/VBG in/ADP/RP"},
                   {"is/AUX/VBZ leaving/VERB/VBG", "is/AUX/VBZ exiting/VERB/VBG"},
                   {"is/AUX/VBZ eating/VERB/VBG", "is/AUX/VBZ dancing/VERB/VBG"}));
  c.push_back(make(K::kVP, "is/AUX/VBZ opening/VERB/VBG",
                   {"is/AUX/VBZ unlocking/VERB/VBG", "is/AUX/VBZ unsealing/VERB/VBG"},
                   {"is/AUX/VBZ closing/VERB/VBG", "is/AUX/VBZ shutting/VERB/VBG"},
                   {"is/AUX/VBZ writing/VERB/VBG", "is/AUX/VBZ fishing/VERB/VBG"}));
  c.push_back(make(K::kVP, "is/AUX/VBZ winning/VERB/VBG",
                   {"is/AUX/VBZ triumphing/VERB/VBG", "is/AUX/VBZ prevailing/VERB/VBG"},
                   {"is/AUX/VBZ losing/VERB/VBG", "is/AUX/VBZ failing/VERB/VBG"},
                   {"is/AUX/VBZ baking/VERB/VBG", "is/AUX/VBZ sewing/VERB/VBG"}));
  // Prepositional phrases.
  c.push_back(make(K::kPP, "in/ADP/IN the/DET/DT park/NOUN/NN",
                   {"in/ADP/IN the/DET/DT public/ADJ/JJ park/NOUN/NN", "in/ADP/IN the/DET/DT garden/NOUN/NN"},
                   {"in/ADP/IN the/DET/DT prison/NOUN/NN", "in/ADP/IN the/DET/DT jail/NOUN/NN"},
                   {"with/ADP/IN an/DET/DT umbrella/NOUN/NN", "near/ADP/IN the/DET/DT station/NOUN/NN"}));
  c.push_back(make(K::kPP, "at/ADP/IN night/NOUN/NN",
                   {"at/ADP/IN midnight/NOUN/NN", "at/ADP/IN nighttime/NOUN/NN"},
                   {"at/ADP/IN noon/NOUN/NN", "at/ADP/IN daytime/NOUN/NN"},
                   {"for/ADP/IN the/DET/DT money/NOUN/NN", "about/ADP/IN the/DET/DT weather/NOUN/NN"}));
  c.push_back(make(K::kPP, "inside/ADP/IN the/DET/DT house/NOUN/NN",
                   {"inside/ADP/IN the/DET/DT home/NOUN/NN", "inside/ADP/IN the/DET/DT residence/NOUN/NN"},
                   {"outside/ADP/IN the/DET/DT house/NOUN/NN", "outside/ADP/IN the/DET/DT home/NOUN/NN"},
                   {"beside/ADP/IN the/DET/DT piano/NOUN/NN", "under/ADP/IN the/DET/DT bridge/NOUN/NN"}));
  c.push_back(make(K::kPP, "on/ADP/IN the/DET/DT beach/NOUN/NN",
                   {"on/ADP/IN the/DET/DT shore/NOUN/NN", "on/ADP/IN the/DET/DT seashore/NOUN/NN"},
                   {"in/ADP/IN the/DET/DT desert/NOUN/NN", "in/ADP/IN the/DET/DT mountains/NOUN/NNS"},
                   {"with/ADP/IN a/DET/DT friend/NOUN/NN", "for/ADP/IN an/DET/DT hour/NOUN/NN"}));
  c.push_back(make(K::kPP, "during/ADP/IN the/DET/DT day/NOUN/NN",
                   {"during/ADP/IN the/DET/DT daytime/NOUN/NN", "during/ADP/IN daylight/NOUN/NN"},
                   {"during/ADP/IN the/DET/DT night/NOUN/NN", "during/ADP/IN darkness/NOUN/NN"},
                   {"after/ADP/IN the/DET/DT concert/NOUN/NN", "behind/ADP/IN the/DET/DT curtain/NOUN/NN"}));
  c.push_back(make(K::kPP, "with/ADP/IN a/DET/DT smile/NOUN/NN",
                   {"with/ADP/IN a/DET/DT grin/NOUN/NN", "with/ADP/IN a/DET/DT beam/NOUN/NN"},
                   {"with/ADP/IN a/DET/DT frown/NOUN/NN", "with/ADP/IN a/DET/DT scowl/NOUN/NN"},
                   {"from/ADP/IN the/DET/DT kitchen/NOUN/NN", "by/ADP/IN the/DET/DT window/NOUN/NN"}));
  c.push_back(make(K::kPP, "above/ADP/IN the/DET/DT clouds/NOUN/NNS",
                   {"over/ADP/IN the/DET/DT clouds/NOUN/NNS", "atop/ADP/IN the/DET/DT clouds/NOUN/NNS"},
                   {"below/ADP/IN the/DET/DT clouds/NOUN/NNS", "beneath/ADP/IN the/DET/DT clouds/NOUN/NNS"},
                   {"inside/ADP/IN the/DET/DT bakery/NOUN/NN", "after/ADP/IN the/DET/DT meeting/NOUN/NN"}));
  // Single open-class words.
  c.push_back(make(K::kOther, "quickly/ADV/RB", {"rapidly/ADV/RB", "swiftly/ADV/RB"},
                   {"slowly/ADV/RB", "sluggishly/ADV/RB"}, {"outdoors/ADV/RB", "upstairs/ADV/RB"}));
  c.push_back(make(K::kOther, "happily/ADV/RB", {"joyfully/ADV/RB", "cheerfully/ADV/RB"},
                   {"sadly/ADV/RB", "miserably/ADV/RB"}, {"carefully/ADV/RB", "abroad/ADV/RB"}));
  c.push_back(make(K::kOther, "loudly/ADV/RB", {"noisily/ADV/RB", "boisterously/ADV/RB"},
                   {"quietly/ADV/RB", "silently/ADV/RB"}, {"together/ADV/RB", "downstairs/ADV/RB"}));
  c.push_back(make(K::kOther, "often/ADV/RB", {"frequently/ADV/RB", "regularly/ADV/RB"},
                   {"rarely/ADV/RB", "seldom/ADV/RB"}, {"outside/ADV/RB", "indoors/ADV/RB"}));
  return lx;
}

void validate(const Lexicon& lexicon) {
  if (lexicon.concepts.size() < kMaxPairs) {
    throw ValidationError("lexicon needs at least " + std::to_string(kMaxPairs) + " concepts");
  }
  auto text = [](const LexPhrase& lp) {
    std::string s;
    for (const auto& t : lp.tokens) s += t.text + " ";
    return s;
  };
  auto check_phrase = [](const LexPhrase& lp) {
    Sentence s;
    s.tokens = lp.tokens;
    if (lp.noun_chunk) s.noun_chunks = std::vector<Span>{*lp.noun_chunk};
    else s.noun_chunks = std::vector<Span>{};
    const auto phrases = chunk(s, Side::kPremise, ChunkerConfig::Rules());
    if (phrases.size() != 1 || phrases[0].span != Span{0, lp.tokens.size()} ||
        phrases[0].kind != lp.kind) {
      std::string t;
      for (const auto& tok : lp.tokens) t += tok.text + " ";
      throw ValidationError("lexicon phrase '" + t + "' does not chunk as one " +
                            std::string(to_string(lp.kind)));
    }
  };
  for (const auto& c : lexicon.concepts) {
    if (c.synonyms.empty() || c.antonyms.empty() || c.unrelated.empty()) {
      throw ValidationError("concept '" + text(c.head) + "' needs E, C and N phrases");
    }
    std::set<std::string> seen;
    for (const auto* group : {&c.synonyms, &c.antonyms, &c.unrelated}) {
      std::set<std::string> mine;
      for (const auto& lp : *group) {
        check_phrase(lp);
        mine.insert(text(lp));
      }
      for (const auto& t : mine) {
        if (!seen.insert(t).second) {
          throw ValidationError("concept '" + text(c.head) + "': relation sets overlap at '" + t + "'");
        }
      }
    }
    check_phrase(c.head);
  }
}

Label compose_label(const std::vector<Label>& relations) {
  bool any_n = false;
  for (Label r : relations) {
    if (r == Label::kContradiction) return Label::kContradiction;
    any_n = any_n || r == Label::kNeutral;
  }
  return any_n ? Label::kNeutral : Label::kEntailment;
}

std::vector<Sample> SynthCorpus::corpus() const {
  std::vector<Sample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.sample);
  return out;
}

SynthCorpus generate(const Lexicon& lexicon, const SynthConfig& cfg) {
  validate(lexicon);
  if (cfg.n < 1) throw ValidationError("synthetic corpus size must be at least 1");
  const auto needed_dims = static_cast<Eigen::Index>(2 * kMaxPairs + 1);
  if (cfg.dim < needed_dims) {
    throw ValidationError("synthetic embeddings need dim >= " + std::to_string(needed_dims));
  }
  if (cfg.n * kMaxPairs > lexicon.concepts.size() * cfg.max_uses_per_concept) {
    throw DomainError("requested " + std::to_string(cfg.n) +
                      " samples exceed the lexicon diversity bound (" +
                      std::to_string(cfg.max_uses_per_concept) + " uses per concept)");
  }

  SynthCorpus out;
  out.dim = cfg.dim;
  const Eigen::Index d = cfg.dim;

  // Round-robin labels, shuffled, give exact balance.
  std::vector<Label> labels(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) labels[i] = kLabels[i % 3];
  Rng label_rng(derive_seed(cfg.seed, 0));
  label_rng.shuffle(labels);

  for (std::size_t i = 0; i < cfg.n; ++i) {
    Rng rng(derive_seed(cfg.seed, i + 1));
    const Label label = labels[i];

    // Shape: total planted pairs in [2, 5], optional unaligned phrases.
    const std::size_t total = 2 + rng.below(kMaxPairs - 1);
    std::size_t up = rng.uniform() < 0.3 ? 1 : 0;
    std::size_t uh = (label != Label::kEntailment && rng.uniform() < 0.3) ? 1 : 0;
    while (up + uh >= total) uh > 0 ? --uh : --up;
    const std::size_t aligned = total - up - uh;

    std::vector<Label> relations(aligned);
    const std::size_t forced = rng.below(aligned);
    for (std::size_t k = 0; k < aligned; ++k) {
      switch (label) {
        case Label::kEntailment: relations[k] = Label::kEntailment; break;
        case Label::kContradiction:
          relations[k] = k == forced ? Label::kContradiction : draw(rng, 0.5, 0.2);
          break;
        case Label::kNeutral:
          if (uh == 0 && k == forced) relations[k] = Label::kNeutral;
          else relations[k] = draw(rng, uh ? 0.7 : 0.6, 0.0);
          break;
      }
    }

    // Distinct concepts for every planted phrase.
    std::vector<std::size_t> concepts(lexicon.concepts.size());
    for (std::size_t k = 0; k < concepts.size(); ++k) concepts[k] = k;
    rng.shuffle(concepts);

    std::vector<Planted> planted;
    for (std::size_t k = 0; k < aligned; ++k) {
      const Concept& c = lexicon.concepts[concepts[k]];
      Planted p{concepts[k], &c.head, nullptr, relations[k]};
      switch (relations[k]) {
        case Label::kEntailment: p.hypothesis = &pick(c.synonyms, rng); break;
        case Label::kContradiction: p.hypothesis = &pick(c.antonyms, rng); break;
        case Label::kNeutral: p.hypothesis = &pick(c.unrelated, rng); break;
      }
      planted.push_back(p);
    }
    if (up) planted.push_back({concepts[aligned], &lexicon.concepts[concepts[aligned]].head,
                               nullptr, Label::kEntailment});
    if (uh) planted.push_back({concepts[aligned + up], nullptr,
                               &lexicon.concepts[concepts[aligned + up]].head, Label::kNeutral});

    // Sentences.
    std::vector<const LexPhrase*> p_phr;
    std::vector<std::size_t> p_owner;
    std::vector<const LexPhrase*> h_phr;
    std::vector<std::size_t> h_owner;
    for (std::size_t k = 0; k < planted.size(); ++k) {
      if (planted[k].premise) {
        p_phr.push_back(planted[k].premise);
        p_owner.push_back(k);
      }
      if (planted[k].hypothesis) {
        h_phr.push_back(planted[k].hypothesis);
        h_owner.push_back(k);
      }
    }
    auto reorder = [&](std::vector<const LexPhrase*>& phr, std::vector<std::size_t>& owner) {
      const auto order = sentence_order(phr, rng);
      std::vector<const LexPhrase*> phr2;
      std::vector<std::size_t> owner2;
      for (std::size_t o : order) {
        phr2.push_back(phr[o]);
        owner2.push_back(owner[o]);
      }
      phr = std::move(phr2);
      owner = std::move(owner2);
    };
    reorder(p_phr, p_owner);
    reorder(h_phr, h_owner);

    SynthSample ss;
    ss.sample.id = cfg.id_prefix + "-" + std::to_string(i);
    ss.sample.label = label;
    const auto p_spans = assemble(ss.sample.premise, p_phr);
    const auto h_spans = assemble(ss.sample.hypothesis, h_phr);
    std::vector<std::optional<Span>> p_span_of(planted.size());
    std::vector<std::optional<Span>> h_span_of(planted.size());
    for (std::size_t j = 0; j < p_owner.size(); ++j) p_span_of[p_owner[j]] = p_spans[j];
    for (std::size_t j = 0; j < h_owner.size(); ++j) h_span_of[h_owner[j]] = h_spans[j];

    std::vector<Label> all_relations;
    AnnotationRecord ann{ss.sample.id, cfg.annotator_id, {}};
    for (std::size_t k = 0; k < planted.size(); ++k) {
      ss.gold_pairs.push_back({p_span_of[k], h_span_of[k], planted[k].relation});
      all_relations.push_back(planted[k].relation);
      AnnotationUnit u;
      u.premise_span = p_span_of[k];
      u.hypothesis_span = h_span_of[k];
      if (k < aligned) u.label = to_category(planted[k].relation);
      else u.label = p_span_of[k] ? Category::kUP : Category::kUH;
      ann.units.push_back(u);
    }
    if (compose_label(all_relations) != label) {
      throw DomainError("internal: planted relations do not compose to the sample label");
    }

    // Geometry: axis 0 is the antonym direction; every planted phrase gets
    // private orthonormal directions in the remaining d - 1 dimensions.
    const Eigen::Index basis_count = static_cast<Eigen::Index>(2 * aligned + up + uh);
    Eigen::MatrixXd gauss(d - 1, basis_count);
    for (Eigen::Index c = 0; c < basis_count; ++c) {
      for (Eigen::Index r = 0; r < d - 1; ++r) gauss(r, c) = rng.normal();
    }
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(gauss).householderQ() *
                              Eigen::MatrixXd::Identity(d - 1, basis_count);
    auto basis = [&](Eigen::Index c) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
      v.tail(d - 1) = q.col(c);
      return v;
    };
    const Eigen::VectorXd antonym_axis = Eigen::VectorXd::Unit(d, 0);

    std::vector<PhraseEmbedding> p_emb(planted.size());
    std::vector<PhraseEmbedding> h_emb(planted.size());
    for (std::size_t k = 0; k < aligned; ++k) {
      const Eigen::VectorXd u = basis(static_cast<Eigen::Index>(2 * k));
      const Eigen::VectorXd v = basis(static_cast<Eigen::Index>(2 * k + 1));
      Eigen::VectorXd h;
      switch (planted[k].relation) {
        case Label::kEntailment: {
          const double c = rng.uniform(kEntailMinCos, 1.0);
          h = c * u + std::sqrt(1.0 - c * c) * v;
          break;
        }
        case Label::kContradiction: {
          const double c = rng.uniform(kContraCosLo, kContraCosHi);
          h = c * u + std::sqrt(1.0 - c * c) * antonym_axis;
          break;
        }
        case Label::kNeutral: {
          const double c = rng.uniform(kNeutralCosLo, kNeutralCosHi);
          h = c * u + std::sqrt(1.0 - c * c) * v;
          break;
        }
      }
      p_emb[k] = {u, normalized(u + kGlobalNoise * rng.normal() * v)};
      h_emb[k] = {h, normalized(h + kGlobalNoise * rng.normal() * v)};
    }
    for (std::size_t k = aligned; k < planted.size(); ++k) {
      const Eigen::VectorXd w = basis(static_cast<Eigen::Index>(2 * aligned + (k - aligned)));
      if (planted[k].premise) {
        const Eigen::VectorXd local = normalized(w + kUnalignedLean * h_emb[0].local);
        p_emb[k] = {local, local};
      } else {
        const Eigen::VectorXd local = normalized(w + kUnalignedLean * p_emb[0].local);
        h_emb[k] = {local, local};
      }
    }

    for (std::size_t k = 0; k < planted.size(); ++k) {
      for (Side side : {Side::kPremise, Side::kHypothesis}) {
        const auto& span = side == Side::kPremise ? p_span_of[k] : h_span_of[k];
        if (!span) continue;
        const PhraseEmbedding& e = side == Side::kPremise ? p_emb[k] : h_emb[k];
        out.embeddings.push_back({ss.sample.id, side, *span, e, false});
        for (std::size_t t = span->start; t < span->end; ++t) {
          out.embeddings.push_back({ss.sample.id, side, {t, t + 1}, e, true});
        }
      }
    }

    out.annotations.push_back(std::move(ann));
    out.samples.push_back(std::move(ss));
  }
  return out;
}

namespace {

bool matches(const GoldPair& g, const PhrasePair& p) {
  auto span_of = [](const std::optional<Phrase>& ph) {
    return ph ? std::optional<Span>(ph->span) : std::nullopt;
  };
  return span_of(p.premise) == g.premise && span_of(p.hypothesis) == g.hypothesis;
}

}  // namespace

double alignment_recovery(const std::vector<SynthSample>& gold,
                          const std::vector<AlignmentResult>& alignments) {
  if (gold.size() != alignments.size()) throw ValidationError("alignment count mismatch");
  std::size_t total = 0;
  std::size_t found = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    for (const auto& g : gold[i].gold_pairs) {
      ++total;
      for (const auto& p : alignments[i].pairs) {
        if (matches(g, p)) {
          ++found;
          break;
        }
      }
    }
  }
  return total ? static_cast<double>(found) / static_cast<double>(total) : 0.0;
}

double phrasal_accuracy(const std::vector<SynthSample>& gold,
                        const std::vector<PredictionRecord>& predictions) {
  std::map<std::string, const PredictionRecord*, std::less<>> by_id;
  for (const auto& p : predictions) by_id.emplace(p.sample_id, &p);
  std::size_t total = 0;
  std::size_t correct = 0;
  for (const auto& s : gold) {
    auto it = by_id.find(s.sample.id);
    if (it == by_id.end()) throw ValidationError("no prediction for sample '" + s.sample.id + "'");
    for (const auto& g : s.gold_pairs) {
      ++total;
      for (const auto& pp : it->second->pairs) {
        if (matches(g, pp.pair)) {
          if (pp.label == g.relation) ++correct;
          break;
        }
      }
    }
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

}  // namespace epr
