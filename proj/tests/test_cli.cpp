#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"
#include "twowing/checkpoint.hpp"
#include "twowing/cli.hpp"

using namespace twowing;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliResult r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

// one claim with an exact-title page plus one claim where two pages compete,
// so ranking order and the coverage rate are both observable
void write_retrieval_fixture(const support::TmpDir& tmp) {
  support::write_file(
      tmp.file("claims.jsonl"),
      "{\"id\": 1, \"claim\": \"Telemundo is an English-language television network.\", "
      "\"label\": \"SUPPORTED\", \"evidence\": [[\"Telemundo\", 0]]}\n"
      "{\"id\": 2, \"claim\": \"Home sweet home has art.\", \"label\": \"NEI\", \"evidence\": []}\n");
  support::write_file(
      tmp.file("wiki.jsonl"),
      "{\"title\": \"Telemundo\", \"sentences\": [\"Telemundo is a television network.\", "
      "\"It broadcasts shows.\"]}\n"
      "{\"title\": \"Home_Alone\", \"sentences\": [\"Home Alone is a film.\", \"It has art.\"]}\n"
      "{\"title\": \"Home\", \"sentences\": [\"A home is a dwelling.\"]}\n"
      "{\"title\": \"Toronto\", \"sentences\": [\"Toronto is a city.\"]}\n");
}

// synth -> build-index -> retrieve, leaving a trainable corpus in tmp
void prepare_training_inputs(const support::TmpDir& tmp, const std::string& n_claims) {
  CliResult synth = run({"synth", "--n", n_claims, "--seed", "5", "--claims-out",
                         tmp.file("claims.jsonl"), "--wiki-out", tmp.file("wiki.jsonl")});
  REQUIRE(synth.code == 0);
  CliResult bi = run({"build-index", "--wiki", tmp.file("wiki.jsonl"), "--out", tmp.file("index.bin")});
  REQUIRE(bi.code == 0);
  CliResult rt = run({"retrieve", "--index", tmp.file("index.bin"), "--claims",
                      tmp.file("claims.jsonl"), "--k", "3", "--out", tmp.file("retrieved.csv")});
  REQUIRE(rt.code == 0);
}

std::vector<std::string> train_args(const support::TmpDir& tmp, const std::string& out_dir,
                                    const std::string& epochs = "2") {
  return {"train",  "--claims", tmp.file("claims.jsonl"),  "--wiki",   tmp.file("wiki.jsonl"),
          "--retrieved", tmp.file("retrieved.csv"), "--out", tmp.file(out_dir),
          "--hidden", "6",  "--epochs", epochs, "--batch", "4", "--seed", "3",
          "--k", "3", "--max-candidates", "16"};
}

}  // namespace

TEST_CASE("cli synth writes the corpus pair and a manifest", "[cli]") {
  support::TmpDir tmp;
  std::string claims = tmp.file("claims.jsonl");
  std::string wiki = tmp.file("wiki.jsonl");
  CliResult r = run({"synth", "--n", "6", "--seed", "3", "--claims-out", claims, "--wiki-out", wiki});
  CAPTURE(r.err);
  REQUIRE(r.code == 0);
  // 6 entity pages plus the 8 distractors
  CHECK(r.out == "wrote 6 claims and 14 pages\n");

  std::vector<ClaimRecord> loaded = load_dataset(claims);
  REQUIRE(loaded.size() == 6);
  CHECK(load_wiki(wiki).size() == 14);
  // labels cycle S, R, N; NEI rows carry no evidence
  CHECK(loaded[0].label == Label::Supported);
  CHECK(loaded[1].label == Label::Refuted);
  CHECK(loaded[2].label == Label::Nei);
  CHECK(loaded[0].gold_evidence.size() == 1);
  CHECK(loaded[2].gold_evidence.empty());

  nlohmann::json m = nlohmann::json::parse(support::read_file(claims + ".manifest.json"));
  CHECK(m.at("command") == "synth");
  CHECK(m.at("tool_version") == "0.1.0");
  CHECK(m.at("options").at("seed") == "3");

  SECTION("defaults fill n and seed") {
    CliResult d = run({"synth", "--claims-out", tmp.file("c2.jsonl"), "--wiki-out", tmp.file("w2.jsonl")});
    REQUIRE(d.code == 0);
    CHECK(d.out == "wrote 50 claims and 58 pages\n");
  }
}

TEST_CASE("cli build-index prints corpus stats and snapshots the index", "[cli]") {
  support::TmpDir tmp;
  write_retrieval_fixture(tmp);
  std::string snap = tmp.file("index.bin");
  CliResult r = run({"build-index", "--wiki", tmp.file("wiki.jsonl"), "--out", snap});
  CAPTURE(r.err);
  REQUIRE(r.code == 0);
  CHECK(contains(r.out, "indexed 4 pages; "));
  CHECK(contains(r.out, " title words; "));
  CHECK(contains(r.out, " distinct body words"));

  PageIndex index = PageIndex::load(snap);
  CHECK(index.page_count() == 4);

  SECTION("rebuilding writes identical bytes") {
    std::string snap2 = tmp.file("index2.bin");
    REQUIRE(run({"build-index", "--wiki", tmp.file("wiki.jsonl"), "--out", snap2}).code == 0);
    CHECK(support::read_file(snap) == support::read_file(snap2));
  }

  SECTION("a missing wiki file fails with the path in the message") {
    CliResult bad = run({"build-index", "--wiki", tmp.file("nope.jsonl"), "--out", tmp.file("x.bin")});
    CHECK(bad.code == 1);
    CHECK(contains(bad.err, "error: "));
    CHECK(contains(bad.err, tmp.file("nope.jsonl")));
  }
}

TEST_CASE("cli retrieve ranks pages and reports page coverage", "[cli]") {
  support::TmpDir tmp;
  write_retrieval_fixture(tmp);
  REQUIRE(run({"build-index", "--wiki", tmp.file("wiki.jsonl"), "--out", tmp.file("index.bin")}).code == 0);

  CliResult r = run({"retrieve", "--index", tmp.file("index.bin"), "--claims", tmp.file("claims.jsonl"),
                     "--k", "5", "--out", tmp.file("top5.csv")});
  CAPTURE(r.err);
  REQUIRE(r.code == 0);
  // the NEI claim is exempt, the SUPPORTED one has its gold page at rank 1
  CHECK(r.out == "rate: 1.0000 (1/1 SUPPORTED/REFUTED claims with all gold pages retrieved)\n");

  auto by_claim = retrieved_by_claim(load_retrieved(tmp.file("top5.csv")));
  REQUIRE(by_claim.at(1).size() == 1);
  CHECK(by_claim.at(1)[0].title == "Telemundo");
  CHECK(by_claim.at(1)[0].rank == 1);
  REQUIRE(by_claim.at(2).size() == 2);
  // partial title plus body recall (~1.17) outranks the exact title match (1.0)
  CHECK(by_claim.at(2)[0].title == "Home_Alone");
  CHECK(by_claim.at(2)[1].title == "Home");

  SECTION("a smaller k yields a prefix of the larger ranking") {
    REQUIRE(run({"retrieve", "--index", tmp.file("index.bin"), "--claims", tmp.file("claims.jsonl"),
                 "--k", "1", "--out", tmp.file("top1.csv")})
                .code == 0);
    auto small = retrieved_by_claim(load_retrieved(tmp.file("top1.csv")));
    for (const auto& [id, rows] : small) {
      REQUIRE(rows.size() <= 1);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].title == by_claim.at(id)[i].title);
        CHECK(rows[i].rank == by_claim.at(id)[i].rank);
        CHECK(rows[i].score == by_claim.at(id)[i].score);
      }
    }
  }

  SECTION("k must be positive") {
    CliResult bad = run({"retrieve", "--index", tmp.file("index.bin"), "--claims",
                         tmp.file("claims.jsonl"), "--k", "0", "--out", tmp.file("t.csv")});
    CHECK(bad.code == 1);
    CHECK(contains(bad.err, "--k must be at least 1"));
  }

  SECTION("an all-NEI dataset has no measurable rate") {
    support::write_file(tmp.file("nei.jsonl"),
                        "{\"id\": 9, \"claim\": \"Home sweet home has art.\", \"label\": \"NEI\", "
                        "\"evidence\": []}\n");
    CliResult nei = run({"retrieve", "--index", tmp.file("index.bin"), "--claims", tmp.file("nei.jsonl"),
                         "--k", "2", "--out", tmp.file("nei.csv")});
    REQUIRE(nei.code == 0);
    CHECK(nei.out == "rate: n/a (no SUPPORTED/REFUTED claims)\n");
  }
}

TEST_CASE("cli train writes log, checkpoint, summary, and manifest", "[cli]") {
  support::TmpDir tmp;
  prepare_training_inputs(tmp, "9");

  CliResult r = run(train_args(tmp, "run"));
  CAPTURE(r.err);
  REQUIRE(r.code == 0);
  CHECK(contains(r.out, "joint: 2 epochs, final l="));

  std::string log = support::read_file(tmp.file("run/train_log.csv"));
  CHECK(log.rfind("epoch, l_ev, l_cv, l, dev_NoScoreEv, dev_ScoreEv, dev_F1\n", 0) == 0);
  CHECK_FALSE(contains(log, "#"));
  CHECK(std::count(log.begin(), log.end(), '\n') == 3);  // header + one row per epoch

  Checkpoint ckpt = load_checkpoint(tmp.file("run/checkpoint.bin"));
  CHECK(ckpt.config.d == 6);
  CHECK(ckpt.seed == 3);
  CHECK(ckpt.epoch == 2);
  CHECK(ckpt.vocab.size() > 0);

  nlohmann::json m = nlohmann::json::parse(support::read_file(tmp.file("run/manifest.json")));
  CHECK(m.at("command") == "train");
  CHECK(m.at("options").at("mode") == "share-cnn");
  CHECK(m.at("options").at("epochs") == "2");

  SECTION("the same seed reproduces the artifacts byte for byte") {
    REQUIRE(run(train_args(tmp, "rerun")).code == 0);
    CHECK(support::read_file(tmp.file("rerun/checkpoint.bin")) ==
          support::read_file(tmp.file("run/checkpoint.bin")));
    CHECK(support::read_file(tmp.file("rerun/train_log.csv")) ==
          support::read_file(tmp.file("run/train_log.csv")));
  }

  SECTION("pipeline mode logs one section per wing") {
    std::vector<std::string> args = train_args(tmp, "pipe", "1");
    args.insert(args.end(), {"--mode", "pipeline"});
    CliResult p = run(args);
    CAPTURE(p.err);
    REQUIRE(p.code == 0);
    CHECK(contains(p.out, "phase 1 (evidence wing): 1 epochs"));
    CHECK(contains(p.out, "phase 2 (claim wing): 1 epochs"));
    std::string plog = support::read_file(tmp.file("pipe/train_log.csv"));
    CHECK(contains(plog, "# phase 1 (evidence wing)\n"));
    CHECK(contains(plog, "# phase 2 (claim wing)\n"));
  }

  SECTION("an unknown mode is rejected with the valid choices") {
    std::vector<std::string> args = train_args(tmp, "oops");
    args.insert(args.end(), {"--mode", "weird"});
    CliResult bad = run(args);
    CHECK(bad.code == 1);
    CHECK(contains(bad.err, "expected pipeline, diff-cnn or share-cnn"));
  }
}

TEST_CASE("cli eval scores a checkpoint and writes reports", "[cli]") {
  support::TmpDir tmp;
  prepare_training_inputs(tmp, "9");
  REQUIRE(run(train_args(tmp, "run")).code == 0);

  auto eval_args = [&](const std::string& out_dir) {
    return std::vector<std::string>{
        "eval", "--checkpoint", tmp.file("run/checkpoint.bin"), "--claims", tmp.file("claims.jsonl"),
        "--wiki", tmp.file("wiki.jsonl"), "--retrieved", tmp.file("retrieved.csv"),
        "--k", "3", "--max-candidates", "16", "--out", tmp.file(out_dir)};
  };
  CliResult r = run(eval_args("eval"));
  CAPTURE(r.err);
  REQUIRE(r.code == 0);
  // stdout repeats the text report written to disk
  CHECK(r.out == support::read_file(tmp.file("eval/report.txt")));
  CHECK(contains(r.out, "claims:            9 (SUPPORTED 3, REFUTED 3, NEI 3)"));
  CHECK(contains(r.out, "NoScoreEv:"));

  CHECK(load_predictions(tmp.file("eval/predictions.jsonl")).size() == 9);
  CHECK(support::read_file(tmp.file("eval/report.csv"))
            .rfind("no_score_ev, score_ev, precision, recall, f1, n_claims, n_supported, n_refuted, n_nei\n",
                   0) == 0);
  nlohmann::json m = nlohmann::json::parse(support::read_file(tmp.file("eval/manifest.json")));
  CHECK(m.at("command") == "eval");

  SECTION("re-evaluating reproduces the artifacts byte for byte") {
    REQUIRE(run(eval_args("eval2")).code == 0);
    CHECK(support::read_file(tmp.file("eval2/predictions.jsonl")) ==
          support::read_file(tmp.file("eval/predictions.jsonl")));
    CHECK(support::read_file(tmp.file("eval2/report.txt")) ==
          support::read_file(tmp.file("eval/report.txt")));
  }

  SECTION("an empty claims file is rejected") {
    support::write_file(tmp.file("empty.jsonl"), "");
    std::vector<std::string> args = eval_args("eval3");
    args[4] = tmp.file("empty.jsonl");
    CliResult bad = run(args);
    CHECK(bad.code == 1);
    CHECK(contains(bad.err, "holds no claims"));
  }
}

TEST_CASE("cli score reports metrics for a predictions file", "[cli]") {
  support::TmpDir tmp;
  support::write_file(tmp.file("gold.jsonl"),
                      "{\"id\": 1, \"claim\": \"A claim.\", \"label\": \"SUPPORTED\", "
                      "\"evidence\": [[\"A\", 0]]}\n"
                      "{\"id\": 2, \"claim\": \"B claim.\", \"label\": \"SUPPORTED\", "
                      "\"evidence\": [[\"A\", 1]]}\n");
  std::vector<PredictionRecord> preds(2);
  preds[0].claim_id = 1;
  preds[0].predicted = Label::Supported;
  preds[0].evidence = {{"A", 0}};
  preds[1].claim_id = 2;
  preds[1].predicted = Label::Supported;
  preds[1].evidence = {{"A", 0}};  // right label, wrong sentence
  {
    std::ofstream f(tmp.file("preds.jsonl"));
    write_predictions(f, preds);
  }

  CliResult r = run({"score", "--gold", tmp.file("gold.jsonl"), "--pred", tmp.file("preds.jsonl")});
  CAPTURE(r.err);
  REQUIRE(r.code == 0);
  CHECK(contains(r.out, "NoScoreEv:         100.0000%"));
  CHECK(contains(r.out, "ScoreEv:           50.0000%"));
  CHECK(contains(r.out, "evidence precision: 50.0000%"));

  SECTION("missing predictions are reported by claim id") {
    std::vector<PredictionRecord> one(preds.begin(), preds.begin() + 1);
    {
      std::ofstream f(tmp.file("short.jsonl"));
      write_predictions(f, one);
    }
    CliResult bad = run({"score", "--gold", tmp.file("gold.jsonl"), "--pred", tmp.file("short.jsonl")});
    CHECK(bad.code == 1);
    CHECK(contains(bad.err, "missing predictions for: 2"));
  }
}

TEST_CASE("cli acc-ceiling accepts fraction and percent rates", "[cli]") {
  CliResult frac = run({"acc-ceiling", "--rate", "0.8963", "--supported", "3333", "--refuted", "3333",
                        "--nei", "3333"});
  REQUIRE(frac.code == 0);
  CHECK(frac.out == "acc ceiling: 93.09% (0.930867)\n");

  CliResult pct = run({"acc-ceiling", "--rate", "89.63", "--supported", "3333", "--refuted", "3333",
                       "--nei", "3333"});
  REQUIRE(pct.code == 0);
  CHECK(pct.out == frac.out);

  SECTION("rates beyond 100 percent are rejected") {
    CliResult bad = run({"acc-ceiling", "--rate", "123", "--supported", "1", "--refuted", "1",
                         "--nei", "1"});
    CHECK(bad.code == 1);
    CHECK(contains(bad.err, "rate must lie in [0, 1]"));
  }
}

TEST_CASE("cli handles usage errors and the version flag", "[cli]") {
  CHECK(run({}).code != 0);
  CHECK(run({"frobnicate"}).code != 0);

  CliResult missing = run({"train"});
  CHECK(missing.code != 0);
  CHECK(contains(missing.err, "--claims"));

  CliResult v = run({"--version"});
  CHECK(v.code == 0);
  CHECK(contains(v.out, "twowing 0.1.0"));
}
