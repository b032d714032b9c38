/*
 * Copyright 2026 The sosbias Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line driver. Subcommands:
//
//   generate-dataset  lexicon x templates -> dataset file
//   score             dataset or external pair file -> SOS result (JSON)
//   debias-estimate   corpus + word pairs -> bias subspace file
//   score-debiased    as score, with hidden states projected off a subspace
//   fairness          predictions -> gap report; --prepare splits raw text
//   correlate         series tables / SOS results / survey stats -> matrix
//   report            SOS results and gap reports -> plain-text report
//
// Every artifact records the tool version, backend id and a hash of the
// effective configuration. No timestamps are written.

#ifndef SOSBIAS_CLI_HPP_
#define SOSBIAS_CLI_HPP_

#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "sosbias/analysis.hpp"
#include "sosbias/backend.hpp"
#include "sosbias/dataset.hpp"
#include "sosbias/debias.hpp"
#include "sosbias/error.hpp"
#include "sosbias/fairness.hpp"
#include "sosbias/lexicon.hpp"
#include "sosbias/process_backend.hpp"
#include "sosbias/report.hpp"
#include "sosbias/scoring.hpp"
#include "sosbias/text.hpp"
#include "sosbias/toy_backends.hpp"

#ifndef SOSBIAS_DATA_DIR
#define SOSBIAS_DATA_DIR "data"
#endif

namespace sosbias {

inline constexpr std::string_view kToolVersion = "0.1.0";

namespace cli_detail {

inline std::string data_path(std::string_view name) {
  return std::string(SOSBIAS_DATA_DIR) + "/" + std::string(name);
}

struct BackendFlags {
  std::string kind = "toy-linear";
  std::uint64_t vocab = 30522;
  std::string table;
  int toy_dim = 8;
  int toy_vocab = 64;
  std::optional<std::uint64_t> toy_seed;
  std::string command;
};

inline void add_backend_flags(CLI::App* sub, BackendFlags& b) {
  sub->add_option("--backend", b.kind, "Scorer backend")
      ->check(CLI::IsMember({"uniform", "toy-table", "toy-linear", "process"}))
      ->capture_default_str();
  sub->add_option("--vocab", b.vocab, "Vocabulary size of the uniform backend")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--table", b.table, "Table file for the toy-table backend");
  sub->add_option("--toy-dim", b.toy_dim, "Hidden size of the toy-linear backend")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--toy-vocab", b.toy_vocab, "Vocabulary buckets of the toy-linear backend")
      ->check(CLI::Range(2, 1 << 20))
      ->capture_default_str();
  sub->add_option("--toy-seed", b.toy_seed, "Weight seed of toy-linear (default: --seed)");
  sub->add_option("--backend-cmd", b.command,
                  "Command line of a process backend, e.g. 'python3 tools/hf_backend.py'");
}

inline std::unique_ptr<ScorerBackend> make_backend(const BackendFlags& b, std::uint64_t seed) {
  if (b.kind == "uniform") return std::make_unique<UniformBackend>(b.vocab);
  if (b.kind == "toy-table") {
    if (b.table.empty()) throw Error("--backend toy-table needs --table");
    return std::make_unique<TableBackend>(TableBackend::load(b.table));
  }
  if (b.kind == "toy-linear") {
    return std::make_unique<ToyLinearBackend>(b.toy_dim, b.toy_vocab, b.toy_seed.value_or(seed));
  }
  if (b.command.empty()) throw Error("--backend process needs --backend-cmd");
  return std::make_unique<ProcessBackend>(text::split_ws(b.command));
}

inline const HiddenStateBackend& hidden_backend(const ScorerBackend& b) {
  const auto* h = dynamic_cast<const HiddenStateBackend*>(&b);
  if (!h) throw BackendError("backend " + b.model_id() + " does not expose hidden states");
  return *h;
}

// Effective option values of the global app and the selected subcommand,
// excluding flags that only place files.
inline std::string config_hash(const CLI::App& app, const CLI::App& sub) {
  std::map<std::string, std::string> kv;
  auto collect = [&](const CLI::App& a, const std::string& prefix) {
    for (const CLI::Option* opt : a.get_options()) {
      const std::string name = opt->get_name();
      if (name == "--help" || name == "--config" || name == "--out-dir" || name.empty()) continue;
      std::string value;
      if (opt->count() > 0) {
        value = text::join(opt->results(), "\x1f");
      } else {
        value = opt->get_default_str();
      }
      kv[prefix + name] = value;
    }
  };
  collect(app, "");
  collect(sub, sub.get_name() + ".");
  std::uint64_t h = text::fnv1a64("");
  for (const auto& [k, v] : kv) h = text::fnv1a64(k + "=" + v + "\n", h);
  return text::hex64(h);
}

struct Context {
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> provenance;

  std::string out_path(const std::string& name) const {
    std::filesystem::path p(name);
    if (p.is_absolute()) return p.string();
    return (out_dir / p).string();
  }

  void note_input(const std::string& key, const std::string& path) {
    provenance["input." + key] = text::hex64(text::fnv1a64(text::read_file(path)));
  }

  void write(const std::string& name, std::string_view content) const {
    const std::filesystem::path p(out_path(name));
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    text::write_file(p.string(), content);
    std::cout << "wrote " << p.string() << "\n";
  }
};

inline std::map<std::string, std::string> merged(std::map<std::string, std::string> base,
                                                 const std::map<std::string, std::string>& extra) {
  for (const auto& [k, v] : extra) base[k] = v;
  return base;
}

inline std::string attribute_list(const SosResult& r, std::optional<Group> group) {
  std::vector<std::string> out;
  for (auto a : kAllAttributes) {
    const std::string name(to_string(a));
    const auto& cells = group ? r.per_group : r.per_attribute;
    const std::string key = group ? group_key(a, *group) : name;
    auto it = cells.find(key);
    if (it != cells.end() && it->second.n() > 0) out.push_back(name);
  }
  return text::join(out, ",");
}

// Adds `s` to `t`, restricting both to the labels they share.
inline SeriesTable merge_series(const SeriesTable& t, const SeriesTable& s) {
  if (t.series.empty()) return s;
  const auto labels = shared_labels(t, s);
  SeriesTable out = select_labels(t, labels);
  for (const auto& x : select_labels(s, labels).series) out.add(x);
  return out;
}

}  // namespace cli_detail

// Runs the CLI; returns the process exit status.
inline int run_cli(int argc, char** argv, std::ostream& err = std::cerr) {
  namespace d = cli_detail;
  CLI::App app{"Systematic offensive stereotyping (SOS) bias audit toolkit", "sosbias"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.set_config("--config", "", "Key-value configuration file");
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  app.add_option("--out-dir", out_dir, "Directory for output artifacts")->capture_default_str();
  app.add_option("--seed", seed, "Seed for every randomized step")->capture_default_str();
  app.require_subcommand(1);
  app.fallthrough();

  // generate-dataset
  auto* gen = app.add_subcommand("generate-dataset", "Build the profane / non-profane pair dataset");
  std::string lexicon_path = d::data_path("reference_lexicon.tsv");
  std::string templates_path = d::data_path("templates.tsv");
  std::string gen_out = "dataset.tsv";
  gen->add_option("--lexicon", lexicon_path, "Lexicon file")->capture_default_str();
  gen->add_option("--templates", templates_path, "Template file")->capture_default_str();
  gen->add_option("--out", gen_out, "Output file name")->capture_default_str();

  // score / score-debiased
  struct ScoreFlags {
    std::string dataset, pairs, attribute, group, out, subspace;
    unsigned threads = 1;
    d::BackendFlags backend;
  };
  ScoreFlags sc, sd;
  sc.out = "sos_result.json";
  sd.out = "sos_result_debiased.json";
  auto add_score_flags = [](CLI::App* sub, ScoreFlags& f) {
    auto* ds = sub->add_option("--dataset", f.dataset, "Dataset file");
    auto* ps = sub->add_option("--pairs", f.pairs,
                               "External pair file (category, sent_more, sent_less)");
    ds->excludes(ps);
    ps->excludes(ds);
    sub->add_option("--attribute", f.attribute, "Score one sensitive attribute only");
    sub->add_option("--group", f.group, "Score one group only (marginalized|non_marginalized)");
    sub->add_option("--threads", f.threads, "Worker threads")->check(CLI::Range(1u, 256u));
    sub->add_option("--out", f.out, "Output file name")->capture_default_str();
    d::add_backend_flags(sub, f.backend);
  };
  auto* score = app.add_subcommand("score", "Compute the SOS bias score of a masked LM");
  add_score_flags(score, sc);
  auto* score_deb = app.add_subcommand("score-debiased", "SOS bias score after subspace removal");
  add_score_flags(score_deb, sd);
  score_deb->add_option("--subspace", sd.subspace, "Subspace file")->required();

  // debias-estimate
  struct DebiasFlags {
    std::string corpus, lexicon = d::data_path("reference_lexicon.tsv"), pooling = "mean";
    std::string out = "subspace.tsv";
    int k = 1;
    std::size_t max_per_word = 1000;
    d::BackendFlags backend;
  } de;
  auto* est = app.add_subcommand("debias-estimate", "Estimate the profanity bias subspace");
  est->add_option("--corpus", de.corpus, "Text corpus, one sentence per line")->required();
  est->add_option("--lexicon", de.lexicon, "Lexicon supplying the word pairs")->capture_default_str();
  est->add_option("--k", de.k, "Subspace rank")->check(CLI::PositiveNumber)->capture_default_str();
  est->add_option("--pooling", de.pooling, "Sentence pooling")
      ->check(CLI::IsMember({"mean", "first"}))
      ->capture_default_str();
  est->add_option("--max-per-word", de.max_per_word, "Occurrences kept per word")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  est->add_option("--out", de.out, "Output file name")->capture_default_str();
  d::add_backend_flags(est, de.backend);

  // fairness
  struct FairnessFlags {
    std::string predictions, pairings, model = "model", out = "gaps.tsv", prepare;
    double threshold = 0.5;
    bool per_identity = false;
    double train = 0.4, validation = 0.3, test = 0.3;
  } fa;
  auto* fair = app.add_subcommand("fairness", "Fairness gaps of classifier predictions");
  auto* pred = fair->add_option("--predictions", fa.predictions, "Prediction file");
  auto* prep = fair->add_option("--prepare", fa.prepare,
                                "Raw corpus (id, label, text) to preprocess and split");
  pred->excludes(prep);
  prep->excludes(pred);
  fair->add_option("--pairings", fa.pairings, "Pairing table (default: built-in)");
  fair->add_option("--model", fa.model, "Model name recorded in the report")->capture_default_str();
  fair->add_option("--threshold", fa.threshold, "Decision threshold")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  fair->add_flag("--per-identity", fa.per_identity, "Also report each marginalized identity alone");
  fair->add_option("--train", fa.train, "Training fraction")->capture_default_str();
  fair->add_option("--validation", fa.validation, "Validation fraction")->capture_default_str();
  fair->add_option("--test", fa.test, "Test fraction")->capture_default_str();
  fair->add_option("--out", fa.out, "Output file name")->capture_default_str();

  // correlate
  struct CorrelateFlags {
    std::vector<std::string> rows_tables, cols_tables, sos_results, rows, cols;
    std::string hate_stats, label_map, heatmap, group = "marginalized", out = "matrix.tsv";
    bool online_hate = false;
  } co;
  auto* cor = app.add_subcommand("correlate", "Pearson correlation matrix between series");
  cor->add_option("--rows-table", co.rows_tables, "Series table(s) for matrix rows");
  cor->add_option("--cols-table", co.cols_tables, "Series table(s) for matrix columns");
  cor->add_option("--sos-result", co.sos_results, "name=path of an SOS result, added as a row");
  cor->add_flag("--online-hate", co.online_hate, "Use the bundled online-hate survey as columns");
  cor->add_option("--hate-stats", co.hate_stats, "Online-hate survey file replacing the bundled one");
  cor->add_option("--label-map", co.label_map, "Label map for the survey columns");
  cor->add_option("--group", co.group, "SOS group for --sos-result rows")
      ->check(CLI::IsMember({"marginalized", "non_marginalized", "all"}))
      ->capture_default_str();
  cor->add_option("--rows", co.rows, "Row series to keep");
  cor->add_option("--cols", co.cols, "Column series to keep");
  cor->add_option("--heatmap", co.heatmap, "Also write a PPM heatmap with this file name");
  cor->add_option("--out", co.out, "Output file name")->capture_default_str();

  // report
  struct ReportFlags {
    std::string sos, sos_debiased, out = "report.txt";
    std::vector<std::string> gaps;
  } rp;
  auto* rep = app.add_subcommand("report", "Plain-text report");
  rep->add_option("--sos", rp.sos, "SOS result");
  rep->add_option("--sos-debiased", rp.sos_debiased, "SOS result after debiasing");
  rep->add_option("--gaps", rp.gaps, "Gap report(s)");
  rep->add_option("--out", rp.out, "Output file name")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, std::cout, err);
  }

  CLI::App* sub = app.get_subcommands().front();
  d::Context ctx;
  ctx.out_dir = out_dir;
  ctx.seed = seed;
  ctx.provenance["tool"] = "sosbias " + std::string(kToolVersion);
  ctx.provenance["command"] = sub->get_name();
  ctx.provenance["config_hash"] = d::config_hash(app, *sub);
  ctx.provenance["seed"] = std::to_string(seed);

  try {
    if (sub == gen) {
      ctx.note_input("lexicon", lexicon_path);
      const Lexicon lex = load_lexicon(lexicon_path);
      std::vector<Template> templates;
      if (gen->count("--templates") == 0 && !std::filesystem::exists(templates_path)) {
        templates = default_templates();
      } else {
        ctx.note_input("templates", templates_path);
        templates = load_templates(templates_path);
      }
      PairDataset ds = generate(lex, templates);
      validate_dataset(ds);
      ds.provenance = ctx.provenance;
      ds.provenance["backend"] = "none";
      ctx.write(gen_out, serialize_dataset(ds));
      std::cout << ds.pairs.size() << " sentence pairs\n";
      return 0;
    }

    if (sub == score || sub == score_deb) {
      ScoreFlags& f = sub == score ? sc : sd;
      if (f.dataset.empty() && f.pairs.empty()) throw Error("one of --dataset or --pairs is required");
      auto base = d::make_backend(f.backend, seed);
      std::unique_ptr<ScorerBackend> wrapped;
      const ScorerBackend* backend = base.get();
      if (sub == score_deb) {
        ctx.note_input("subspace", f.subspace);
        wrapped = std::make_unique<DebiasedBackend>(d::hidden_backend(*base),
                                                    load_subspace(f.subspace));
        backend = wrapped.get();
      }
      ScoringOptions opts{f.threads};
      SosResult r;
      if (!f.pairs.empty()) {
        if (!f.attribute.empty() || !f.group.empty()) {
          throw Error("--attribute and --group apply to --dataset only");
        }
        ctx.note_input("pairs", f.pairs);
        r = score_external_pairs(load_external_pairs(f.pairs), *backend, opts);
      } else {
        ctx.note_input("dataset", f.dataset);
        SosFilter filter;
        if (!f.attribute.empty()) {
          filter.attribute = parse_attribute(f.attribute);
          if (!filter.attribute) throw Error("unknown attribute '" + f.attribute + "'");
        }
        if (!f.group.empty()) {
          filter.group = parse_group(f.group);
          if (!filter.group) throw Error("unknown group label '" + f.group + "'");
        }
        r = sos_score(load_dataset(f.dataset), *backend, filter, opts);
      }
      r.provenance = d::merged(ctx.provenance, r.provenance);
      ctx.write(f.out, serialize_sos_result(r));
      std::cout << "SOS = " << text::format_double(r.fraction()) << " (" << r.overall.greater
                << "/" << r.overall.n() << ")\n";
      return 0;
    }

    if (sub == est) {
      ctx.note_input("corpus", de.corpus);
      ctx.note_input("lexicon", de.lexicon);
      auto backend = d::make_backend(de.backend, seed);
      const auto& hidden = d::hidden_backend(*backend);
      const Pooling pooling = *parse_pooling(de.pooling);
      const Lexicon lex = load_lexicon(de.lexicon);
      const auto texts = contextualize(lex.word_pairs, load_corpus(de.corpus), de.max_per_word);
      PooledEncoder encoder(hidden, pooling);
      BiasSubspace s = estimate_subspace(embed(texts, encoder), de.k);
      s.pooling = std::string(to_string(pooling));
      s.provenance = d::merged(ctx.provenance, s.provenance);
      s.provenance["backend"] = hidden.model_id();
      s.provenance["n_counterfactuals"] = std::to_string(texts.size());
      ctx.write(de.out, serialize_subspace(s));
      std::cout << "k = " << s.k() << ", explained variance ratio = "
                << text::format_double(s.explained_variance_ratio) << "\n";
      return 0;
    }

    if (sub == fair) {
      if (!fa.prepare.empty()) {
        ctx.note_input("corpus", fa.prepare);
        ctx.provenance["contractions"] = std::string(kContractionTableVersion);
        ctx.provenance["backend"] = "none";
        struct Row {
          std::string id, label, text;
        };
        std::vector<Row> rows;
        bool header = false;
        for (const auto& line : text::lines(text::read_file(fa.prepare))) {
          if (text::is_blank_or_comment(line.content)) continue;
          const std::string where = fa.prepare + ":" + std::to_string(line.number);
          auto fields = text::split(line.content, '\t');
          if (!header) {
            if (fields.size() != 3 || fields[0] != "id" || fields[1] != "label" ||
                fields[2] != "text") {
              throw ParseError(where, "expected header 'id<TAB>label<TAB>text'");
            }
            header = true;
            continue;
          }
          if (fields.size() != 3) throw ParseError(where, "expected 3 fields");
          rows.push_back({fields[0], fields[1], preprocess(fields[2])});
        }
        const auto parts = split(rows, SplitSpec{fa.train, fa.validation, fa.test, seed});
        auto emit = [&](const std::string& name, const std::vector<Row>& part) {
          std::string out = "# sosbias-split v1\n";
          for (const auto& [k, v] : ctx.provenance) out += "# " + k + ": " + v + "\n";
          out += "id\tlabel\ttext\n";
          for (const auto& r : part) out += r.id + '\t' + r.label + '\t' + r.text + '\n';
          ctx.write(name, out);
        };
        emit("train.tsv", parts.train);
        emit("validation.tsv", parts.validation);
        emit("test.tsv", parts.test);
        return 0;
      }
      if (fa.predictions.empty()) throw Error("one of --predictions or --prepare is required");
      ctx.note_input("predictions", fa.predictions);
      std::vector<Pairing> pairings = default_pairings();
      if (!fa.pairings.empty()) {
        ctx.note_input("pairings", fa.pairings);
        pairings = parse_pairings(text::read_file(fa.pairings), fa.pairings);
      }
      GapReport r = gap_report(load_predictions(fa.predictions), pairings,
                               GapOptions{fa.threshold, fa.per_identity});
      r.model = fa.model;
      r.provenance = ctx.provenance;
      r.provenance["backend"] = "predictions";
      for (const auto& diag : r.diagnostics) err << "fairness: " << diag << "\n";
      ctx.write(fa.out, serialize_gap_report(r));
      return 0;
    }

    if (sub == cor) {
      std::optional<Group> group;
      if (co.group != "all") group = parse_group(co.group);
      SeriesTable rows, cols;
      for (const auto& p : co.rows_tables) {
        ctx.note_input("rows." + p, p);
        rows = d::merge_series(rows, load_series_table(p));
      }
      for (const auto& spec : co.sos_results) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0) {
          throw Error("--sos-result expects name=path, got '" + spec + "'");
        }
        const std::string name = spec.substr(0, eq), path = spec.substr(eq + 1);
        ctx.note_input("sos." + name, path);
        const SosResult r = load_sos_result(path);
        SeriesTable t;
        t.labels = text::split(d::attribute_list(r, group), ',');
        t.add(sos_series(r, name, t.labels, group));
        rows = d::merge_series(rows, t);
      }
      for (const auto& p : co.cols_tables) {
        ctx.note_input("cols." + p, p);
        cols = d::merge_series(cols, load_series_table(p));
      }
      if (co.online_hate || !co.hate_stats.empty()) {
        std::vector<OnlineHateRow> stats = bundled_online_hate();
        if (!co.hate_stats.empty()) {
          ctx.note_input("hate_stats", co.hate_stats);
          stats = parse_online_hate(text::read_file(co.hate_stats), co.hate_stats);
        }
        auto mapping = default_online_hate_mapping();
        if (!co.label_map.empty()) {
          ctx.note_input("label_map", co.label_map);
          mapping = parse_label_map(text::read_file(co.label_map), co.label_map);
        }
        cols = d::merge_series(cols, relabel(online_hate_table(stats), mapping));
      }
      if (rows.series.empty()) throw Error("no row series; give --rows-table or --sos-result");
      if (cols.series.empty()) cols = rows;
      const auto m = correlate_tables(rows, cols, co.rows, co.cols);
      auto prov = ctx.provenance;
      prov["backend"] = "none";
      ctx.write(co.out, serialize_matrix(m, prov));
      if (!co.heatmap.empty()) ctx.write(co.heatmap, render_heatmap_ppm(m));
      return 0;
    }

    if (sub == rep) {
      ReportInputs in;
      if (!rp.sos.empty()) {
        ctx.note_input("sos", rp.sos);
        in.sos = load_sos_result(rp.sos);
      }
      if (!rp.sos_debiased.empty()) {
        ctx.note_input("sos_debiased", rp.sos_debiased);
        in.sos_debiased = load_sos_result(rp.sos_debiased);
      }
      for (const auto& g : rp.gaps) {
        ctx.note_input("gaps." + g, g);
        in.gaps.push_back(parse_gap_report(text::read_file(g), g));
      }
      if (!in.sos && in.gaps.empty()) throw Error("nothing to report; give --sos and/or --gaps");
      ctx.provenance["backend"] = in.sos ? in.sos->provenance["backend"] : "none";
      std::string out;
      for (const auto& [k, v] : ctx.provenance) out += "# " + k + ": " + v + "\n";
      ctx.write(rp.out, out + render_report(in));
      return 0;
    }
  } catch (const std::exception& e) {
    err << "sosbias " << sub->get_name() << ": error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace sosbias

#endif  // SOSBIAS_CLI_HPP_
