#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "twowing/checkpoint.hpp"
#include "twowing/data.hpp"
#include "twowing/errors.hpp"
#include "twowing/manifest.hpp"
#include "twowing/model.hpp"
#include "twowing/retrieval.hpp"
#include "twowing/scorer.hpp"
#include "twowing/synthetic.hpp"
#include "twowing/text.hpp"
#include "twowing/trainer.hpp"

namespace twowing {

namespace cli_detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline std::string num(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

/// Vocabulary over the training claims plus the whole wiki corpus (sentence
/// bodies and title words).
inline Vocab corpus_vocab(const std::vector<ClaimRecord>& claims, const std::vector<WikiPage>& pages) {
  std::map<std::string, std::size_t> counts;
  for (const ClaimRecord& c : claims) count_tokens(c.claim, counts);
  for (const WikiPage& p : pages) {
    for (const std::string& w : title_words(p.title)) ++counts[w];
    for (const std::string& s : p.sentences) count_tokens(s, counts);
  }
  return Vocab::from_counts(counts);
}

inline std::vector<ClaimInstance> build_instances(
    const std::vector<ClaimRecord>& claims,
    const std::unordered_map<std::string, const WikiPage*>& wiki,
    const std::unordered_map<long, std::vector<RetrievedTitle>>& ranked_by_claim,
    const Vocab& vocab, std::size_t top_k, std::size_t max_candidates) {
  std::vector<ClaimInstance> out;
  out.reserve(claims.size());
  static const std::vector<RetrievedTitle> kNone;
  for (const ClaimRecord& rec : claims) {
    auto it = ranked_by_claim.find(rec.id);
    const std::vector<RetrievedTitle>& all = it == ranked_by_claim.end() ? kNone : it->second;
    std::vector<RetrievedTitle> top(all.begin(), all.begin() + static_cast<long>(std::min(top_k, all.size())));
    out.push_back(prepare_instance(rec, assemble_candidates(rec, top, wiki, max_candidates), vocab));
  }
  return out;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

// ---- command bodies ----

inline int cmd_build_index(const std::string& wiki_path, const std::string& out_path,
                           std::ostream& out, std::ostream& err) {
  auto t0 = std::chrono::steady_clock::now();
  std::vector<WikiPage> pages = load_wiki(wiki_path);
  PageIndex index = PageIndex::build(pages, err);
  {
    std::ofstream f = open_out(out_path);
    index.save(f);
    if (!f) throw IoError("short write on " + out_path);
  }
  std::size_t body_vocab = 0;
  {
    std::set<std::string> words;
    for (const auto& [title, e] : index.entries()) words.insert(e.page_vocab.begin(), e.page_vocab.end());
    body_vocab = words.size();
  }
  out << "indexed " << index.page_count() << " pages; " << index.indexed_word_count()
      << " title words; " << body_vocab << " distinct body words\n";
  RunManifest m;
  m.command = "build-index";
  m.options = {{"wiki", wiki_path}, {"out", out_path}};
  m.inputs = {wiki_path};
  m.outputs = {out_path};
  m.wall_seconds = seconds_since(t0);
  write_manifest(out_path + ".manifest.json", m);
  return 0;
}

inline int cmd_retrieve(const std::string& index_path, const std::string& claims_path, std::size_t k,
                        const std::string& out_path, std::ostream& out, std::ostream&) {
  auto t0 = std::chrono::steady_clock::now();
  if (k == 0) throw ArgumentError("--k must be at least 1");
  PageIndex index = PageIndex::load(index_path);
  std::vector<ClaimRecord> claims = load_dataset(claims_path);
  std::vector<RetrievedTitle> rows;
  std::size_t sr = 0, covered = 0;
  for (const ClaimRecord& rec : claims) {
    std::vector<RankedTitle> ranked = index.retrieve_topk(rec.claim, k);
    std::set<std::string> got;
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      rows.push_back({rec.id, static_cast<int>(r) + 1, ranked[r].title, ranked[r].score});
      got.insert(ranked[r].title);
    }
    if (rec.label == Label::Nei) continue;
    ++sr;
    bool all_gold_pages = true;
    for (const EvidencePair& e : rec.gold_evidence)
      if (!got.count(e.first)) all_gold_pages = false;
    if (all_gold_pages) ++covered;
  }
  {
    std::ofstream f = open_out(out_path);
    write_retrieved(f, rows);
    if (!f) throw IoError("short write on " + out_path);
  }
  if (sr > 0) {
    double rate = static_cast<double>(covered) / static_cast<double>(sr);
    out << "rate: " << std::fixed << std::setprecision(4) << rate << " (" << covered << "/" << sr
        << " SUPPORTED/REFUTED claims with all gold pages retrieved)\n";
    out.unsetf(std::ios_base::floatfield);
  } else {
    out << "rate: n/a (no SUPPORTED/REFUTED claims)\n";
  }
  RunManifest m;
  m.command = "retrieve";
  m.options = {{"index", index_path}, {"claims", claims_path}, {"k", std::to_string(k)}, {"out", out_path}};
  m.inputs = {index_path, claims_path};
  m.outputs = {out_path};
  m.wall_seconds = seconds_since(t0);
  write_manifest(out_path + ".manifest.json", m);
  return 0;
}

struct TrainOpts {
  std::string claims, wiki, retrieved, embeddings, dev, out_dir;
  std::string mode = "share-cnn";
  std::string rep_ev = "fine";
  std::string rep_cv = "two";
  double lr = 0.02;
  std::size_t hidden = 300;
  std::size_t batch = 50;
  int filter_width = 3;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  std::size_t k = 5;
  std::size_t max_candidates = 64;
  bool untied_attention = false;
  bool gold_evidence = false;
  double stop_nse = -1.0;
  double stop_f1 = -1.0;
};

inline int cmd_train(const TrainOpts& o, std::ostream& out, std::ostream& err) {
  auto t0 = std::chrono::steady_clock::now();
  TrainConfig tcfg;
  tcfg.mode = parse_mode(o.mode);
  tcfg.rep_ev = parse_evidence_rep(o.rep_ev);
  tcfg.rep_cv = parse_claim_rep(o.rep_cv);
  tcfg.lr = o.lr;
  tcfg.d = o.hidden;
  tcfg.batch = o.batch;
  tcfg.filter_width = o.filter_width;
  tcfg.epochs = o.epochs;
  tcfg.seed = o.seed;
  tcfg.top_k = o.k;
  tcfg.max_candidates = o.max_candidates;
  tcfg.untied_attention = o.untied_attention;
  tcfg.gold_p_wing2 = o.gold_evidence;
  tcfg.stop_nse = o.stop_nse;
  tcfg.stop_f1 = o.stop_f1;

  std::vector<ClaimRecord> claims = load_dataset(o.claims);
  if (claims.empty()) throw ValidationError(o.claims + " holds no claims");
  std::vector<WikiPage> pages = load_wiki(o.wiki);
  auto wiki = wiki_by_title(pages);
  auto ranked = retrieved_by_claim(load_retrieved(o.retrieved));
  Vocab vocab = corpus_vocab(claims, pages);
  ModelConfig mcfg = tcfg.model_config(vocab.size());

  Rng emb_rng = Rng::derive(tcfg.seed, 0);
  Tensor emb = o.embeddings.empty() ? init_embeddings(vocab.size(), mcfg.d, emb_rng)
                                    : load_embeddings(o.embeddings, vocab, mcfg.d, emb_rng, err);
  Rng weight_rng = Rng::derive(tcfg.seed, 1);
  ModelParams params = ModelParams::build(mcfg, emb, weight_rng);

  std::vector<ClaimInstance> train_set =
      build_instances(claims, wiki, ranked, vocab, tcfg.top_k, tcfg.max_candidates);
  std::vector<ClaimInstance> eval_set;
  if (!o.dev.empty()) {
    std::vector<ClaimRecord> dev_claims = load_dataset(o.dev);
    eval_set = build_instances(dev_claims, wiki, ranked, vocab, tcfg.top_k, tcfg.max_candidates);
  }

  Rng shuffle_rng = Rng::derive(tcfg.seed, 2);
  TrainRun run = train(params, mcfg, tcfg, train_set,
                       eval_set.empty() ? train_set : eval_set, shuffle_rng, &err);

  namespace fs = std::filesystem;
  fs::create_directories(o.out_dir);
  std::string log_path = (fs::path(o.out_dir) / "train_log.csv").string();
  std::string ckpt_path = (fs::path(o.out_dir) / "checkpoint.bin").string();
  {
    std::ofstream f = open_out(log_path);
    write_train_log(f, run);
  }
  std::uint64_t total_epochs = 0;
  for (const auto& [name, rows] : run.phases) {
    total_epochs += rows.size();
    if (!rows.empty()) {
      const EpochRow& last = rows.back();
      out << name << ": " << rows.size() << " epochs, final l=" << num(last.l)
          << " NoScoreEv=" << num(last.dev_nse) << " ScoreEv=" << num(last.dev_se)
          << " F1=" << num(last.dev_f1) << "\n";
    }
  }
  save_checkpoint(ckpt_path, mcfg, vocab, params, tcfg.seed, total_epochs);

  RunManifest m;
  m.command = "train";
  m.options = {{"claims", o.claims},
               {"wiki", o.wiki},
               {"retrieved", o.retrieved},
               {"mode", o.mode},
               {"rep-ev", o.rep_ev},
               {"rep-cv", o.rep_cv},
               {"lr", num(o.lr)},
               {"hidden", std::to_string(o.hidden)},
               {"batch", std::to_string(o.batch)},
               {"filter-width", std::to_string(o.filter_width)},
               {"epochs", std::to_string(o.epochs)},
               {"seed", std::to_string(o.seed)},
               {"k", std::to_string(o.k)},
               {"max-candidates", std::to_string(o.max_candidates)},
               {"untied-attention", o.untied_attention ? "true" : "false"},
               {"gold-evidence", o.gold_evidence ? "true" : "false"},
               {"out", o.out_dir}};
  if (!o.embeddings.empty()) m.options["embeddings"] = o.embeddings;
  if (!o.dev.empty()) m.options["dev"] = o.dev;
  if (o.stop_nse >= 0.0) m.options["stop-nse"] = num(o.stop_nse);
  if (o.stop_f1 >= 0.0) m.options["stop-f1"] = num(o.stop_f1);
  m.inputs = {o.claims, o.wiki, o.retrieved};
  if (!o.embeddings.empty()) m.inputs.push_back(o.embeddings);
  if (!o.dev.empty()) m.inputs.push_back(o.dev);
  m.outputs = {ckpt_path, log_path};
  m.wall_seconds = seconds_since(t0);
  write_manifest((fs::path(o.out_dir) / "manifest.json").string(), m);
  return 0;
}

struct EvalOpts {
  std::string checkpoint, claims, wiki, retrieved, out_dir;
  std::size_t k = 5;
  std::size_t max_candidates = 64;
};

inline int cmd_eval(const EvalOpts& o, std::ostream& out, std::ostream& err) {
  auto t0 = std::chrono::steady_clock::now();
  Checkpoint ckpt = load_checkpoint(o.checkpoint);
  std::vector<ClaimRecord> claims = load_dataset(o.claims);
  if (claims.empty()) throw ValidationError(o.claims + " holds no claims");
  std::vector<WikiPage> pages = load_wiki(o.wiki);
  auto wiki = wiki_by_title(pages);
  auto ranked = retrieved_by_claim(load_retrieved(o.retrieved));
  std::vector<ClaimInstance> insts =
      build_instances(claims, wiki, ranked, ckpt.vocab, o.k, o.max_candidates);
  std::vector<PredictionRecord> preds = predict_all(ckpt.params, ckpt.config, insts, &err);
  EvalReport report = evaluate(judge_instances(insts, preds));

  namespace fs = std::filesystem;
  fs::create_directories(o.out_dir);
  std::string pred_path = (fs::path(o.out_dir) / "predictions.jsonl").string();
  std::string txt_path = (fs::path(o.out_dir) / "report.txt").string();
  std::string csv_path = (fs::path(o.out_dir) / "report.csv").string();
  {
    std::ofstream f = open_out(pred_path);
    write_predictions(f, preds);
  }
  {
    std::ofstream f = open_out(txt_path);
    write_report_text(f, report);
  }
  {
    std::ofstream f = open_out(csv_path);
    write_report_csv(f, report);
  }
  write_report_text(out, report);

  RunManifest m;
  m.command = "eval";
  m.options = {{"checkpoint", o.checkpoint},
               {"claims", o.claims},
               {"wiki", o.wiki},
               {"retrieved", o.retrieved},
               {"k", std::to_string(o.k)},
               {"max-candidates", std::to_string(o.max_candidates)},
               {"out", o.out_dir}};
  m.inputs = {o.checkpoint, o.claims, o.wiki, o.retrieved};
  m.outputs = {pred_path, txt_path, csv_path};
  m.wall_seconds = seconds_since(t0);
  write_manifest((fs::path(o.out_dir) / "manifest.json").string(), m);
  return 0;
}

inline int cmd_score(const std::string& gold_path, const std::string& pred_path, std::ostream& out) {
  std::vector<ClaimRecord> gold = load_dataset(gold_path);
  if (gold.empty()) throw ValidationError(gold_path + " holds no claims");
  std::vector<PredictionRecord> preds = load_predictions(pred_path);
  EvalReport report = evaluate(make_judgments(gold, preds));
  write_report_text(out, report);
  return 0;
}

inline int cmd_acc_ceiling(double rate, std::size_t n_s, std::size_t n_r, std::size_t n_n, std::ostream& out) {
  if (rate > 1.0) rate /= 100.0;  // percent form, e.g. 89.63
  double ceiling = acc_ceiling(rate, n_s, n_r, n_n);
  out << "acc ceiling: " << std::fixed << std::setprecision(2) << ceiling * 100.0 << "% ("
      << std::setprecision(6) << ceiling << ")\n";
  out.unsetf(std::ios_base::floatfield);
  return 0;
}

inline int cmd_synth(std::size_t n, std::uint64_t seed, const std::string& claims_out,
                     const std::string& wiki_out, std::ostream& out) {
  auto t0 = std::chrono::steady_clock::now();
  SyntheticData data = make_synthetic(n, seed);
  {
    std::ofstream f = open_out(claims_out);
    write_synthetic_claims(f, data.claims);
  }
  {
    std::ofstream f = open_out(wiki_out);
    write_synthetic_wiki(f, data.pages);
  }
  out << "wrote " << data.claims.size() << " claims and " << data.pages.size() << " pages\n";
  RunManifest m;
  m.command = "synth";
  m.options = {{"n", std::to_string(n)},
               {"seed", std::to_string(seed)},
               {"claims-out", claims_out},
               {"wiki-out", wiki_out}};
  m.outputs = {claims_out, wiki_out};
  m.wall_seconds = seconds_since(t0);
  write_manifest(claims_out + ".manifest.json", m);
  return 0;
}

}  // namespace cli_detail

/// Parse and dispatch one command line (without the program name). Returns
/// the process exit code; artifacts are fully written iff it returns 0.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  using namespace cli_detail;
  CLI::App app{"joint evidence identification and claim verification"};
  app.set_version_flag("--version", std::string("twowing ") + kToolVersion);
  app.require_subcommand(1);

  struct {
    std::string wiki, out;
  } bi;
  CLI::App* c_bi = app.add_subcommand("build-index", "build the page retrieval index from a wiki file");
  c_bi->add_option("--wiki", bi.wiki, "wiki corpus, line-delimited records")->required();
  c_bi->add_option("--out", bi.out, "index snapshot path")->required();

  struct {
    std::string index, claims, out;
    std::size_t k = 5;
  } rt;
  CLI::App* c_rt = app.add_subcommand("retrieve", "rank wiki pages for every claim");
  c_rt->add_option("--index", rt.index, "index snapshot from build-index")->required();
  c_rt->add_option("--claims", rt.claims, "claim dataset")->required();
  c_rt->add_option("--k", rt.k, "pages to keep per claim");
  c_rt->add_option("--out", rt.out, "ranked-title output, `claim_id, rank, title, score` lines")->required();

  TrainOpts to;
  CLI::App* c_tr = app.add_subcommand("train", "train a model");
  c_tr->add_option("--claims", to.claims, "training claims")->required();
  c_tr->add_option("--wiki", to.wiki, "wiki corpus")->required();
  c_tr->add_option("--retrieved", to.retrieved, "ranked titles from retrieve")->required();
  c_tr->add_option("--mode", to.mode, "pipeline | diff-cnn | share-cnn");
  c_tr->add_option("--rep-ev", to.rep_ev, "evidence representation: coarse | fine");
  c_tr->add_option("--rep-cv", to.rep_cv, "claim representation: coarse | single | two | sentwise");
  c_tr->add_option("--lr", to.lr, "AdaGrad learning rate");
  c_tr->add_option("--hidden", to.hidden, "hidden size d");
  c_tr->add_option("--batch", to.batch, "mini-batch size");
  c_tr->add_option("--filter-width", to.filter_width, "convolution filter width (odd)");
  c_tr->add_option("--epochs", to.epochs, "epochs (per phase for pipeline mode)");
  c_tr->add_option("--seed", to.seed, "master seed for init and shuffling");
  c_tr->add_option("--k", to.k, "retrieved pages per claim to keep");
  c_tr->add_option("--max-candidates", to.max_candidates, "candidate sentence cap per claim");
  c_tr->add_option("--embeddings", to.embeddings, "optional word vector file, `word v1 .. vd` lines");
  c_tr->add_option("--dev", to.dev, "optional dev claims for the per-epoch log metrics");
  c_tr->add_flag("--untied-attention", to.untied_attention, "separate interaction-encoder weights per wing");
  c_tr->add_flag("--gold-evidence", to.gold_evidence, "pipeline phase 2 trains on gold evidence instead of predictions");
  c_tr->add_option("--stop-nse", to.stop_nse, "stop early once eval NoScoreEv reaches this (with --stop-f1)");
  c_tr->add_option("--stop-f1", to.stop_f1, "stop early once eval F1 reaches this (with --stop-nse)");
  c_tr->add_option("--out", to.out_dir, "output directory")->required();

  EvalOpts eo;
  CLI::App* c_ev = app.add_subcommand("eval", "predict with a checkpoint and score against gold");
  c_ev->add_option("--checkpoint", eo.checkpoint, "checkpoint from train")->required();
  c_ev->add_option("--claims", eo.claims, "gold claims")->required();
  c_ev->add_option("--wiki", eo.wiki, "wiki corpus")->required();
  c_ev->add_option("--retrieved", eo.retrieved, "ranked titles from retrieve")->required();
  c_ev->add_option("--k", eo.k, "retrieved pages per claim to keep");
  c_ev->add_option("--max-candidates", eo.max_candidates, "candidate sentence cap per claim");
  c_ev->add_option("--out", eo.out_dir, "output directory")->required();

  struct {
    std::string gold, pred;
  } so;
  CLI::App* c_sc = app.add_subcommand("score", "score a predictions file against gold claims");
  c_sc->add_option("--gold", so.gold, "gold claims")->required();
  c_sc->add_option("--pred", so.pred, "predictions file from eval")->required();

  struct {
    double rate = 0.0;
    std::size_t n_s = 0, n_r = 0, n_n = 0;
  } ao;
  CLI::App* c_ac = app.add_subcommand("acc-ceiling", "label-accuracy upper bound for a retrieval rate");
  c_ac->add_option("--rate", ao.rate, "page coverage rate, fraction or percent")->required();
  c_ac->add_option("--supported", ao.n_s, "SUPPORTED claim count")->required();
  c_ac->add_option("--refuted", ao.n_r, "REFUTED claim count")->required();
  c_ac->add_option("--nei", ao.n_n, "NEI claim count")->required();

  struct {
    std::size_t n = 50;
    std::uint64_t seed = 7;
    std::string claims_out, wiki_out;
  } sy;
  CLI::App* c_sy = app.add_subcommand("synth", "generate a synthetic claims + wiki corpus");
  c_sy->add_option("--n", sy.n, "claim count");
  c_sy->add_option("--seed", sy.seed, "generator seed");
  c_sy->add_option("--claims-out", sy.claims_out, "claims output path")->required();
  c_sy->add_option("--wiki-out", sy.wiki_out, "wiki output path")->required();

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("twowing");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (c_bi->parsed()) return cmd_build_index(bi.wiki, bi.out, out, err);
    if (c_rt->parsed()) return cmd_retrieve(rt.index, rt.claims, rt.k, rt.out, out, err);
    if (c_tr->parsed()) return cmd_train(to, out, err);
    if (c_ev->parsed()) return cmd_eval(eo, out, err);
    if (c_sc->parsed()) return cmd_score(so.gold, so.pred, out);
    if (c_ac->parsed()) return cmd_acc_ceiling(ao.rate, ao.n_s, ao.n_r, ao.n_n, out);
    if (c_sy->parsed()) return cmd_synth(sy.n, sy.seed, sy.claims_out, sy.wiki_out, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << "error: no command given\n";
  return 1;
}

}  // namespace twowing
