#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "epr/aligner.hpp"
#include "epr/chunker.hpp"
#include "epr/classifier.hpp"
#include "epr/corpus.hpp"
#include "epr/embedder.hpp"
#include "epr/error.hpp"
#include "epr/evaluator.hpp"
#include "epr/explain.hpp"
#include "epr/io.hpp"
#include "epr/pipeline.hpp"
#include "epr/rng.hpp"
#include "epr/synthcorpus.hpp"
#include "epr/trainer.hpp"
#include "json.hpp"

namespace epr::cli {

namespace {

using Json = nlohmann::ordered_json;

// Config file: one JSON object. Top-level keys are global options; a key
// naming a subcommand holds an object of that subcommand's options.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    Json j = Json::object();
    for (const CLI::Option* opt : app->get_options()) {
      if (!opt->get_configurable() || opt->get_lnames().empty()) continue;
      const std::string name = opt->get_lnames().front();
      if (opt->count() > 0) {
        j[name] = opt->as<std::string>();
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    return j.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    Json j;
    try {
      in >> j;
    } catch (const Json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const Json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void collect(const Json& j, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : j.items()) {
      if (key == kMetaKey) continue;
      if (value.is_object()) {
        auto nested = parents;
        nested.push_back(key);
        collect(value, nested, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

// Every option gets an EPR_<NAME> environment override.
void add_env_names(CLI::App& app) {
  for (CLI::Option* opt : app.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    std::string env = "EPR_";
    for (char c : name) env += c == '-' ? '_' : static_cast<char>(std::toupper(c));
    opt->envname(env);
  }
  for (CLI::App* sub : app.get_subcommands({})) add_env_names(*sub);
}

// Tool version plus every effective option value of the command.
std::string meta(const CLI::App& root, const CLI::App& sub) {
  Json config = Json::object();
  auto dump = [&](const CLI::App& app) {
    for (const CLI::Option* opt : app.get_options()) {
      if (opt->get_lnames().empty()) continue;
      const std::string name = opt->get_lnames().front();
      if (name == "help" || name == "config") continue;
      if (opt->count() > 0) {
        const auto& res = opt->results();
        if (opt->get_expected_max() > 1) {
          config[name] = res;
        } else {
          config[name] = res.empty() ? std::string("true") : res.back();
        }
      } else if (!opt->get_default_str().empty()) {
        config[name] = opt->get_default_str();
      }
    }
  };
  dump(root);
  dump(sub);
  Json j = {{"tool", "epr"}, {"version", kToolVersion}, {"command", sub.get_name()},
            {"config", std::move(config)}};
  return j.dump();
}

std::string json_line(const Json& j) { return j.dump() + "\n"; }

// Options shared by every command that runs the phrase pipeline.
struct PipelineFlags {
  std::string embeddings;
  Eigen::Index toy_dim = 0;
  std::string chunker = "rules";
  std::string aligner = "mutual";
  double gamma = 0.6;

  void add(CLI::App* app) {
    app->add_option("--embeddings", embeddings, "Embedding file (synth output or external)");
    app->add_option("--toy-dim", toy_dim, "Use hashed toy embeddings of this width instead")
        ->check(CLI::PositiveNumber);
    app->add_option("--chunker", chunker, "Phrase detector")
        ->check(CLI::IsMember({"rules", "random"}))
        ->capture_default_str();
    app->add_option("--aligner", aligner, "Phrase aligner")
        ->check(CLI::IsMember({"mutual", "random"}))
        ->capture_default_str();
    app->add_option("--gamma", gamma, "Global/local similarity mix")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
  }

  EmbeddingProvider provider(std::uint64_t seed) const {
    if (!embeddings.empty() && toy_dim > 0) {
      throw ValidationError("--embeddings and --toy-dim are mutually exclusive");
    }
    if (!embeddings.empty()) return EmbeddingProvider::FromFile(embeddings);
    if (toy_dim > 0) return EmbeddingProvider::Toy(toy_dim, seed);
    throw ValidationError("one of --embeddings or --toy-dim is required");
  }

  PipelineConfig config(std::uint64_t seed) const {
    PipelineConfig cfg;
    cfg.chunker = chunker == "random" ? ChunkerMode::kRandom : ChunkerMode::kRules;
    cfg.aligner = aligner == "random" ? AlignMode::kRandom : AlignMode::kMutual;
    cfg.align.gamma = gamma;
    cfg.seed = seed;
    return cfg;
  }
};

Json phrase_json(const Phrase& p) { return Json::parse(encode_phrase(p)); }

std::string fmt(double v, int precision) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

void print_report(std::ostream& out, const EvalReport& r) {
  out << "F_E " << fmt(r.f_e, 4) << "  F_C " << fmt(r.f_c, 4) << "  F_N " << fmt(r.f_n, 4)
      << "  F_UP " << fmt(r.f_up, 4) << "  F_UH " << fmt(r.f_uh, 4) << "  GM " << fmt(r.gm, 4)
      << "  AM " << fmt(r.am, 4);
  if (r.sentence_accuracy) out << "  acc " << fmt(*r.sentence_accuracy, 4);
  out << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Explainable phrasal reasoning for NLI", "epr"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config file");
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(kToolVersion));

  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool verbose = false;
  app.add_option("--seed", seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--threads", threads, "Worker cap for per-sample work")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_flag("-v,--verbose", verbose, "Progress on stderr");

  // chunk
  auto* chunk_cmd = app.add_subcommand("chunk", "Detect phrases");
  std::string chunk_corpus, chunk_out, chunk_mode = "rules";
  chunk_cmd->add_option("--corpus", chunk_corpus)->required()->check(CLI::ExistingFile);
  chunk_cmd->add_option("--out", chunk_out)->required();
  chunk_cmd->add_option("--chunker", chunk_mode)
      ->check(CLI::IsMember({"rules", "random"}))
      ->capture_default_str();

  // align
  auto* align_cmd = app.add_subcommand("align", "Detect and align phrases");
  std::string align_corpus, align_out;
  PipelineFlags align_flags;
  align_cmd->add_option("--corpus", align_corpus)->required()->check(CLI::ExistingFile);
  align_cmd->add_option("--out", align_out)->required();
  align_flags.add(align_cmd);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the phrasal classifier");
  std::string train_corpus, train_model, train_log;
  std::string train_mode = "epr", train_induction = "fuzzy", train_variant = "concat";
  TrainConfig tc;
  double heldout = 0.1;
  PipelineFlags train_flags;
  train_cmd->add_option("--corpus", train_corpus)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--model", train_model, "Checkpoint output")->required();
  train_cmd->add_option("--log", train_log, "Training log output (one JSON object per line)");
  train_cmd->add_option("--mode", train_mode)
      ->check(CLI::IsMember({"epr", "stp"}))
      ->capture_default_str();
  train_cmd->add_option("--induction", train_induction)
      ->check(CLI::IsMember({"fuzzy", "mean"}))
      ->capture_default_str();
  train_cmd->add_option("--variant", train_variant)
      ->check(CLI::IsMember({"local", "global", "concat"}))
      ->capture_default_str();
  train_cmd->add_option("--lr", tc.learning_rate)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--batch-size", tc.batch_size)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--epochs", tc.epochs)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--warmup", tc.warmup_fraction)
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  train_cmd->add_option("--heldout", heldout, "Held-out fraction")
      ->check(CLI::Range(0.0, 0.5))
      ->capture_default_str();
  train_flags.add(train_cmd);

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Predict phrasal and sentence labels");
  std::string predict_model, predict_corpus, predict_out, predict_induction = "fuzzy";
  PipelineFlags predict_flags;
  predict_cmd->add_option("--model", predict_model)->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--corpus", predict_corpus)->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--out", predict_out)->required();
  predict_cmd->add_option("--induction", predict_induction)
      ->check(CLI::IsMember({"fuzzy", "mean"}))
      ->capture_default_str();
  predict_flags.add(predict_cmd);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions against annotations");
  std::string eval_pred, eval_ann, eval_report, eval_corpus;
  eval_cmd->add_option("--pred", eval_pred)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--annotations", eval_ann)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--report", eval_report)->required();
  eval_cmd->add_option("--corpus", eval_corpus, "Adds sentence accuracy against gold labels")
      ->check(CLI::ExistingFile);

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus");
  SynthConfig sc;
  std::string synth_corpus, synth_ann, synth_emb;
  synth_cmd->add_option("--n", sc.n, "Number of samples")->required()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--dim", sc.dim)->check(CLI::PositiveNumber)->capture_default_str();
  synth_cmd->add_option("--id-prefix", sc.id_prefix)->capture_default_str();
  synth_cmd->add_option("--max-uses", sc.max_uses_per_concept, "Diversity bound per concept")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth_cmd->add_option("--out-corpus", synth_corpus)->required();
  synth_cmd->add_option("--out-annotations", synth_ann)->required();
  synth_cmd->add_option("--out-embeddings", synth_emb)->required();

  // gradcheck
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  GradcheckConfig gc;
  std::string grad_induction = "fuzzy", grad_mode = "epr", grad_variant = "concat";
  grad_cmd->add_option("--induction", grad_induction)
      ->check(CLI::IsMember({"fuzzy", "mean"}))
      ->capture_default_str();
  grad_cmd->add_option("--mode", grad_mode)
      ->check(CLI::IsMember({"epr", "stp"}))
      ->capture_default_str();
  grad_cmd->add_option("--variant", grad_variant)
      ->check(CLI::IsMember({"local", "global", "concat"}))
      ->capture_default_str();
  grad_cmd->add_option("--dim", gc.dim)->check(CLI::Range(1, 4))->capture_default_str();
  grad_cmd->add_option("--tolerance", gc.tolerance)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  // agreement
  auto* agree_cmd = app.add_subcommand("agreement", "Inter-annotator agreement");
  std::string agree_ann, agree_report;
  agree_cmd->add_option("--annotations", agree_ann)->required()->check(CLI::ExistingFile);
  agree_cmd->add_option("--report", agree_report)->required();

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Evaluate a model over several gamma values");
  std::vector<double> sweep_gammas;
  std::string sweep_model, sweep_corpus, sweep_ann, sweep_dir, sweep_induction = "fuzzy";
  PipelineFlags sweep_flags;
  sweep_flags.add(sweep_cmd);
  sweep_cmd->remove_option(sweep_cmd->get_option("--gamma"));
  sweep_cmd->add_option("--gamma", sweep_gammas, "Comma-separated gamma values")
      ->required()
      ->delimiter(',')
      ->check(CLI::Range(0.0, 1.0));
  sweep_cmd->add_option("--model", sweep_model)->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--corpus", sweep_corpus)->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--annotations", sweep_ann)->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--out-dir", sweep_dir)->required();
  sweep_cmd->add_option("--induction", sweep_induction)
      ->check(CLI::IsMember({"fuzzy", "mean"}))
      ->capture_default_str();

  // explain
  auto* explain_cmd = app.add_subcommand("explain", "Render predictions as a readable report");
  std::string explain_pred, explain_corpus, explain_out, explain_json;
  explain_cmd->add_option("--pred", explain_pred)->required()->check(CLI::ExistingFile);
  explain_cmd->add_option("--corpus", explain_corpus)->required()->check(CLI::ExistingFile);
  explain_cmd->add_option("--out", explain_out, "Text report (stdout when omitted)");
  explain_cmd->add_option("--json", explain_json, "Machine-readable companion");

  add_env_names(app);

  std::vector<std::string> rev(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rev.begin(), rev.end());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string m = meta(app, *sub);

  try {
    if (sub == chunk_cmd) {
      const auto corpus = read_corpus(chunk_corpus);
      std::vector<std::string> lines(corpus.size());
      parallel_for(corpus.size(), threads, [&](std::size_t i) {
        const Sample& s = corpus[i];
        const std::uint64_t sseed = hash_key(s.id, seed);
        auto cfg = [&](Side side) {
          return chunk_mode == "random"
                     ? ChunkerConfig::Random(derive_seed(sseed, side == Side::kPremise ? 0 : 1))
                     : ChunkerConfig::Rules();
        };
        Json j = {{"sample_id", s.id}};
        for (Side side : {Side::kPremise, Side::kHypothesis}) {
          Json arr = Json::array();
          for (const auto& p : chunk(s.sentence(side), side, cfg(side))) {
            Json pj = phrase_json(p);
            pj["text"] = s.sentence(side).text(p.span);
            arr.push_back(std::move(pj));
          }
          j[std::string(to_string(side))] = std::move(arr);
        }
        lines[i] = json_line(j);
      });
      std::vector<std::size_t> order(corpus.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return corpus[a].id < corpus[b].id; });
      std::string text = json_line({{std::string(kMetaKey), Json::parse(m)}});
      for (std::size_t i : order) text += lines[i];
      write_file_atomic(chunk_out, text);
      return 0;
    }

    if (sub == align_cmd) {
      auto corpus = read_corpus(align_corpus);
      std::stable_sort(corpus.begin(), corpus.end(),
                       [](const Sample& a, const Sample& b) { return a.id < b.id; });
      const auto provider = align_flags.provider(seed);
      const auto prepared = prepare_all(corpus, provider, align_flags.config(seed), threads);
      std::string text = json_line({{std::string(kMetaKey), Json::parse(m)}});
      for (const auto& p : prepared) {
        Json pairs = Json::array();
        for (const auto& pair : p.alignment.pairs) {
          pairs.push_back({{"premise", pair.premise ? phrase_json(*pair.premise) : Json()},
                           {"hypothesis", pair.hypothesis ? phrase_json(*pair.hypothesis) : Json()},
                           {"aligned", pair.aligned}});
        }
        text += json_line({{"sample_id", p.id},
                           {"k_aligned", p.alignment.k_aligned},
                           {"k_total", p.alignment.k_total},
                           {"pairs", std::move(pairs)}});
      }
      write_file_atomic(align_out, text);
      return 0;
    }

    if (sub == train_cmd) {
      tc.mode = parse_train_mode(train_mode);
      tc.induction.mode = parse_induction_mode(train_induction);
      tc.features.variant = parse_feature_variant(train_variant);
      tc.seed = seed;
      validate(tc);
      const auto corpus = read_corpus(train_corpus);
      const auto provider = train_flags.provider(seed);
      auto prepared = prepare_all(corpus, provider, train_flags.config(seed), threads);
      std::vector<PreparedSample> fit = std::move(prepared);
      std::vector<PreparedSample> held;
      if (heldout > 0.0) std::tie(fit, held) = split_heldout(std::move(fit), seed, heldout);
      const auto result = train(fit, held, provider.dim(), tc, [&](const EpochMetrics& e) {
        if (!verbose) return;
        err << "epoch " << e.epoch << " loss " << fmt(e.train_loss, 6);
        if (e.heldout_accuracy) err << " heldout_acc " << fmt(*e.heldout_accuracy, 4);
        err << "\n";
      });
      Model model{{tc.features.variant, provider.dim(), seed}, result.state.params};
      write_checkpoint(model, train_model, m);
      if (!train_log.empty()) {
        std::string log = json_line({{std::string(kMetaKey), Json::parse(m)}});
        for (const auto& s : result.steps) {
          log += json_line({{"step", s.step}, {"epoch", s.epoch}, {"lr", s.lr}, {"loss", s.loss}});
        }
        for (const auto& e : result.epochs) {
          Json j = {{"epoch", e.epoch}, {"train_loss", e.train_loss}};
          j["heldout_accuracy"] = e.heldout_accuracy ? Json(*e.heldout_accuracy) : Json();
          log += json_line(j);
        }
        write_file_atomic(train_log, log);
      }
      return 0;
    }

    if (sub == predict_cmd) {
      const Model model = read_checkpoint(predict_model);
      auto corpus = read_corpus(predict_corpus);
      std::stable_sort(corpus.begin(), corpus.end(),
                       [](const Sample& a, const Sample& b) { return a.id < b.id; });
      const auto provider = predict_flags.provider(seed);
      if (provider.dim() != model.config.dim) {
        throw ShapeError("embedding width " + std::to_string(provider.dim()) +
                         " does not match the model's " + std::to_string(model.config.dim));
      }
      InductionConfig ic;
      ic.mode = parse_induction_mode(predict_induction);
      const auto prepared = prepare_all(corpus, provider, predict_flags.config(seed), threads);
      const auto preds =
          predict_all(prepared, model.params, {model.config.variant}, ic, threads);
      write_predictions(preds, predict_out, m);
      return 0;
    }

    if (sub == eval_cmd) {
      const auto preds = read_predictions(eval_pred);
      const auto anns = read_annotations(eval_ann);
      EvalReport report = evaluate(preds, anns);
      if (!eval_corpus.empty()) report.sentence_accuracy = sentence_accuracy(preds, read_corpus(eval_corpus));
      write_report(report, eval_report, m);
      print_report(out, report);
      return 0;
    }

    if (sub == synth_cmd) {
      sc.seed = seed;
      const SynthCorpus sy = generate(Lexicon::Default(), sc);
      write_corpus(sy.corpus(), synth_corpus, m);
      write_annotations(sy.annotations, synth_ann, m);
      write_embeddings(sy.embeddings, sy.dim, synth_emb, m);
      return 0;
    }

    if (sub == grad_cmd) {
      gc.induction = parse_induction_mode(grad_induction);
      gc.mode = parse_train_mode(grad_mode);
      gc.variant = parse_feature_variant(grad_variant);
      gc.seed = seed;
      const auto report = gradcheck(gc);
      out << std::left << std::setw(18) << "tensor" << std::setw(14) << "max_rel_err"
          << "result\n";
      for (const auto& e : report.entries) {
        out << std::left << std::setw(18) << e.tensor << std::setw(14)
            << [&] {
                 char buf[32];
                 std::snprintf(buf, sizeof buf, "%.3e", e.max_relative_error);
                 return std::string(buf);
               }()
            << (e.passed ? "PASS" : "FAIL") << "\n";
      }
      out << "overall " << (report.passed ? "PASS" : "FAIL") << " (tolerance "
          << gc.tolerance << ")\n";
      return report.passed ? 0 : 1;
    }

    if (sub == agree_cmd) {
      const EvalReport report = agreement(read_annotations(agree_ann));
      write_report(report, agree_report, m);
      print_report(out, report);
      return 0;
    }

    if (sub == sweep_cmd) {
      const Model model = read_checkpoint(sweep_model);
      const auto corpus = read_corpus(sweep_corpus);
      const auto anns = read_annotations(sweep_ann);
      const auto provider = sweep_flags.provider(seed);
      InductionConfig ic;
      ic.mode = parse_induction_mode(sweep_induction);
      std::filesystem::create_directories(sweep_dir);
      for (double g : sweep_gammas) {
        PipelineConfig pc = sweep_flags.config(seed);
        pc.align.gamma = g;
        const auto prepared = prepare_all(corpus, provider, pc, threads);
        const auto preds = predict_all(prepared, model.params, {model.config.variant}, ic, threads);
        EvalReport report = evaluate(preds, anns);
        bool labeled = !corpus.empty();
        for (const auto& s : corpus) labeled = labeled && s.label.has_value();
        if (labeled) report.sentence_accuracy = sentence_accuracy(preds, corpus);
        Json jm = Json::parse(m);
        jm["config"]["gamma"] = format_double(g);
        const std::string name = "report_gamma_" + fmt(g, 2) + ".json";
        write_report(report, std::filesystem::path(sweep_dir) / name, jm.dump());
        out << "gamma " << fmt(g, 2) << "  ";
        print_report(out, report);
      }
      return 0;
    }

    if (sub == explain_cmd) {
      const auto ex = explain_report(read_predictions(explain_pred), read_corpus(explain_corpus));
      if (explain_out.empty()) {
        out << ex.text;
      } else {
        write_file_atomic(explain_out, ex.text);
      }
      if (!explain_json.empty()) {
        write_file_atomic(explain_json, json_line({{std::string(kMetaKey), Json::parse(m)}}) + ex.json);
      }
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace epr::cli
