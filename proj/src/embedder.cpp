#include "epr/embedder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "epr/io.hpp"
#include "epr/rng.hpp"
#include "json.hpp"

namespace epr {

using Json = nlohmann::json;

namespace {

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

Eigen::VectorXd round_to_float(const Eigen::VectorXd& v) {
  return v.cast<float>().cast<double>();
}

Eigen::VectorXd unit_hash_vector(std::string_view key, std::uint64_t seed, Eigen::Index dim) {
  Rng rng(hash_key(key, seed));
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = rng.normal();
  return v / v.norm();
}

Eigen::VectorXd vector_from_json(const Json& j, Eigen::Index dim, const std::string& where) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != dim) {
    throw ParseError(where + ": vector must have " + std::to_string(dim) + " entries");
  }
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    v[i] = static_cast<double>(j[static_cast<std::size_t>(i)].get<float>());
    if (!std::isfinite(v[i])) throw ValidationError(where + ": non-finite vector entry");
  }
  return v;
}

std::string key_text(const std::string& id, Side side, const Span& span) {
  return "(" + id + ", " + std::string(to_string(side)) + ", [" + std::to_string(span.start) +
         ", " + std::to_string(span.end) + "))";
}

}  // namespace

void validate(const AlignConfig& cfg) {
  if (!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0)) {
    throw ValidationError("gamma must lie in [0, 1], got " + std::to_string(cfg.gamma));
  }
}

double similarity(const PhraseEmbedding& a, const PhraseEmbedding& b, const AlignConfig& cfg) {
  if (a.local.size() != b.local.size() || a.global.size() != b.global.size()) {
    throw ShapeError("similarity: embedding dimension mismatch");
  }
  return cfg.gamma * cosine(a.global, b.global) + (1.0 - cfg.gamma) * cosine(a.local, b.local);
}

EmbeddingProvider EmbeddingProvider::Toy(Eigen::Index dim, std::uint64_t seed) {
  if (dim <= 0) throw ValidationError("embedding dimension must be positive");
  EmbeddingProvider p;
  p.kind_ = ProviderKind::kToy;
  p.dim_ = dim;
  p.seed_ = seed;
  return p;
}

EmbeddingProvider EmbeddingProvider::FromFile(const std::filesystem::path& path) {
  EmbeddingProvider p;
  p.kind_ = ProviderKind::kFile;
  const auto lines = split_lines(read_file(path));
  bool have_header = false;
  std::size_t line_no = 0;
  for (const auto& line : lines) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    try {
      Json j = Json::parse(line);
      if (!have_header) {
        p.dim_ = j.at("dim").get<Eigen::Index>();
        if (p.dim_ <= 0) throw ValidationError(where + ": dim must be positive");
        have_header = true;
        continue;
      }
      const auto id = j.at("sample_id").get<std::string>();
      const Side side = parse_side(j.at("side").get<std::string>());
      PhraseEmbedding e{vector_from_json(j.at("local"), p.dim_, where),
                        vector_from_json(j.at("global"), p.dim_, where)};
      if (j.contains("token")) {
        const auto i = j.at("token").get<std::size_t>();
        p.tokens_[{id, side, i, i + 1}] = std::move(e);
        continue;
      }
      const auto& js = j.at("span");
      const Span span{js.at(0).get<std::size_t>(), js.at(1).get<std::size_t>()};
      if (span.start >= span.end) throw ValidationError(where + ": empty span");
      p.table_[{id, side, span.start, span.end}] = std::move(e);
    } catch (const Json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  if (!have_header) throw ParseError(path.string() + ": missing {\"dim\": d} header");
  return p;
}

Eigen::VectorXd EmbeddingProvider::token_vector(std::string_view token,
                                                std::string_view sample_id) const {
  std::string key(token);
  key += '\x1f';
  key += sample_id;
  return unit_hash_vector(key, seed_, dim_);
}

Eigen::VectorXd EmbeddingProvider::text_vector(std::string_view text) const {
  return unit_hash_vector(lowercase(text), seed_ ^ 0x5bd1e995ULL, dim_);
}

PhraseEmbedding EmbeddingProvider::embed(const Sample& sample, const Phrase& phrase) const {
  if (kind_ == ProviderKind::kFile) {
    auto it = table_.find({sample.id, phrase.side, phrase.span.start, phrase.span.end});
    if (it != table_.end()) return it->second;
    Eigen::VectorXd local = Eigen::VectorXd::Zero(dim_);
    Eigen::VectorXd global = Eigen::VectorXd::Zero(dim_);
    for (std::size_t i = phrase.span.start; i < phrase.span.end; ++i) {
      auto tok = tokens_.find({sample.id, phrase.side, i, i + 1});
      if (tok == tokens_.end()) {
        throw LookupError("no embedding for " + key_text(sample.id, phrase.side, phrase.span));
      }
      local += tok->second.local;
      global += tok->second.global;
    }
    if (local.norm() == 0.0 || global.norm() == 0.0) {
      throw NumericError("pooled embedding is zero for " +
                         key_text(sample.id, phrase.side, phrase.span));
    }
    return {round_to_float(local / local.norm()), round_to_float(global / global.norm())};
  }
  const Sentence& sentence = sample.sentence(phrase.side);
  if (phrase.span.end > sentence.size() || phrase.span.start >= phrase.span.end) {
    throw ValidationError("phrase span out of bounds for " +
                          key_text(sample.id, phrase.side, phrase.span));
  }
  PhraseEmbedding e;
  e.local = round_to_float(text_vector(sentence.text(phrase.span)));
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim_);
  for (std::size_t i = phrase.span.start; i < phrase.span.end; ++i) {
    sum += token_vector(sentence.tokens[i].text, sample.id);
  }
  sum /= static_cast<double>(phrase.span.size());
  e.global = round_to_float(sum / sum.norm());
  return e;
}

void write_embeddings(const std::vector<EmbeddingRecord>& records, Eigen::Index dim,
                      const std::filesystem::path& path, const std::string& meta_json) {
  auto vec = [](const Eigen::VectorXd& v) {
    std::string s = "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (i) s += ',';
      s += format_float(static_cast<float>(v[i]));
    }
    return s + "]";
  };
  Json header = {{"dim", dim}};
  if (!meta_json.empty()) header[std::string(kMetaKey)] = Json::parse(meta_json);
  std::string out = header.dump() + "\n";
  for (const auto& r : records) {
    if (r.embedding.local.size() != dim || r.embedding.global.size() != dim) {
      throw ShapeError("embedding record dimension differs from header dim");
    }
    const std::string where =
        r.token_level ? "\"token\":" + std::to_string(r.span.start)
                      : "\"span\":[" + std::to_string(r.span.start) + "," +
                            std::to_string(r.span.end) + "]";
    out += "{\"sample_id\":" + Json(r.sample_id).dump() + ",\"side\":\"" +
           std::string(to_string(r.side)) + "\"," + where + ",\"local\":" +
           vec(r.embedding.local) + ",\"global\":" + vec(r.embedding.global) + "}\n";
  }
  write_file_atomic(path, out);
}

}  // namespace epr
