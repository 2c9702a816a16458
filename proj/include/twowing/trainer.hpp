#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "twowing/adagrad.hpp"
#include "twowing/autodiff.hpp"
#include "twowing/errors.hpp"
#include "twowing/model.hpp"
#include "twowing/rng.hpp"
#include "twowing/scorer.hpp"

namespace twowing {

struct TrainConfig {
  Mode mode = Mode::ShareCnn;
  EvidenceRep rep_ev = EvidenceRep::Fine;
  ClaimRep rep_cv = ClaimRep::Two;
  double lr = 0.02;
  std::size_t d = 300;
  std::size_t batch = 50;
  int filter_width = 3;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  std::size_t top_k = 5;
  std::size_t max_candidates = 64;
  bool untied_attention = false;
  bool gold_p_wing2 = false;  // pipeline phase 2 trained against gold q instead of predicted p
  double stop_nse = -1.0;     // stop a phase early once eval NoScoreEv and F1
  double stop_f1 = -1.0;      // both clear these thresholds; negative disables

  ModelConfig model_config(std::size_t vocab_size) const {
    ModelConfig m;
    m.d = d;
    m.vocab_size = vocab_size;
    m.filter_width = filter_width;
    m.mode = mode;
    m.rep_ev = rep_ev;
    m.rep_cv = rep_cv;
    m.untied_attention = untied_attention;
    return m;
  }
};

/// Seeded shuffle of [0, n) split into batches; the last one may be short.
inline std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch, Rng& rng) {
  if (batch == 0) throw ArgumentError("batch size must be at least 1");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t at = 0; at < n; at += batch) {
    std::size_t end = std::min(n, at + batch);
    out.emplace_back(order.begin() + static_cast<long>(at), order.begin() + static_cast<long>(end));
  }
  return out;
}

inline PredictionRecord predict_instance(ModelParams& P, const ModelConfig& cfg,
                                         const ClaimInstance& inst, std::ostream* diag = nullptr) {
  Graph g;
  ForwardOptions opt;
  opt.diag = diag;
  ForwardResult r = forward_claim(g, P, cfg, inst, opt);
  PredictionRecord rec;
  rec.claim_id = inst.id;
  rec.predicted = r.predicted;
  for (std::size_t i = 0; i < inst.cand_keys.size(); ++i) {
    rec.alphas.emplace_back(inst.cand_keys[i].first, inst.cand_keys[i].second, r.alpha[i]);
    if (r.p[i]) rec.evidence.insert(inst.cand_keys[i]);
  }
  return rec;
}

inline std::vector<PredictionRecord> predict_all(ModelParams& P, const ModelConfig& cfg,
                                                 const std::vector<ClaimInstance>& insts,
                                                 std::ostream* diag = nullptr) {
  std::vector<PredictionRecord> out;
  out.reserve(insts.size());
  for (const ClaimInstance& inst : insts) out.push_back(predict_instance(P, cfg, inst, diag));
  return out;
}

inline std::vector<ClaimJudgment> judge_instances(const std::vector<ClaimInstance>& insts,
                                                  const std::vector<PredictionRecord>& preds) {
  if (insts.size() != preds.size()) throw ArgumentError("instance/prediction count mismatch");
  std::vector<ClaimJudgment> js;
  js.reserve(insts.size());
  for (std::size_t i = 0; i < insts.size(); ++i) {
    ClaimJudgment j;
    j.gold = insts[i].label;
    j.gold_evidence = insts[i].gold_evidence;
    j.predicted = preds[i].predicted;
    j.predicted_evidence = preds[i].evidence;
    js.push_back(std::move(j));
  }
  return js;
}

struct EpochRow {
  std::size_t epoch = 0;
  double l_ev = 0.0;
  double l_cv = 0.0;
  double l = 0.0;
  double dev_nse = 0.0;
  double dev_se = 0.0;
  double dev_f1 = 0.0;
};

struct TrainRun {
  // one (section name, rows) entry per phase; joint modes have one section
  std::vector<std::pair<std::string, std::vector<EpochRow>>> phases;
};

namespace detail {

enum class Phase { Joint, Wing1, Wing2 };

inline std::vector<EpochRow> train_phase(ModelParams& P, const ModelConfig& mcfg, const TrainConfig& tcfg,
                                         const std::vector<ClaimInstance>& train_data,
                                         const std::vector<ClaimInstance>& eval_data,
                                         Phase phase, Rng& shuffle_rng, std::ostream* diag) {
  std::vector<Parameter*> trainable = phase == Phase::Wing1   ? P.wing1()
                                      : phase == Phase::Wing2 ? P.wing2()
                                                              : P.all();
  std::vector<Parameter*> everything = P.all();
  AdaGrad opt(trainable, tcfg.lr);
  std::vector<EpochRow> rows;
  for (std::size_t epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    double sum_ev = 0.0, sum_cv = 0.0, sum_l = 0.0;
    for (const std::vector<std::size_t>& batch : epoch_batches(train_data.size(), tcfg.batch, shuffle_rng)) {
      for (std::size_t idx : batch) {
        const ClaimInstance& inst = train_data[idx];
        Graph g;
        ForwardOptions fo;
        fo.claim_wing = phase != Phase::Wing1;
        fo.diag = diag;
        if (phase == Phase::Wing2 && tcfg.gold_p_wing2) fo.fixed_p = &inst.gold;
        ForwardResult r = forward_claim(g, P, mcfg, inst, fo);
        Var objective = phase == Phase::Wing1 ? r.l_ev : phase == Phase::Wing2 ? r.l_cv : r.loss;
        sum_ev += r.l_ev.val()[0];
        if (fo.claim_wing) sum_cv += r.l_cv.val()[0];
        sum_l += objective.val()[0];
        // average the per-claim losses across the batch, then one step
        g.backward(g.scale(objective, 1.0 / static_cast<double>(batch.size())));
      }
      opt.step();
      // the live alpha weighting can push gradients into wings the phase
      // does not train; those must not leak into later steps
      for (Parameter* p : everything) p->zero_grad();
    }
    EpochRow row;
    row.epoch = epoch;
    double n = static_cast<double>(train_data.size());
    row.l_ev = sum_ev / n;
    row.l_cv = sum_cv / n;
    row.l = sum_l / n;
    if (!eval_data.empty()) {
      EvalReport rep = evaluate(judge_instances(eval_data, predict_all(P, mcfg, eval_data)));
      row.dev_nse = rep.no_score_ev;
      row.dev_se = rep.score_ev;
      row.dev_f1 = rep.f1;
    }
    rows.push_back(row);
    bool stoppable = phase != Phase::Wing1 && tcfg.stop_nse >= 0.0 && tcfg.stop_f1 >= 0.0;
    if (stoppable && !eval_data.empty() && row.dev_nse >= tcfg.stop_nse && row.dev_f1 >= tcfg.stop_f1)
      break;
  }
  return rows;
}

}  // namespace detail

/// Run the configured training schedule. Joint modes take one pass over
/// `epochs`; pipeline trains the evidence wing for `epochs`, freezes it,
/// then trains the claim wing for `epochs`.
inline TrainRun train(ModelParams& P, const ModelConfig& mcfg, const TrainConfig& tcfg,
                      const std::vector<ClaimInstance>& train_data,
                      const std::vector<ClaimInstance>& eval_data,
                      Rng& shuffle_rng, std::ostream* diag = nullptr) {
  if (train_data.empty()) throw ArgumentError("empty training set");
  TrainRun run;
  if (mcfg.mode == Mode::Pipeline) {
    run.phases.emplace_back("phase 1 (evidence wing)",
                            detail::train_phase(P, mcfg, tcfg, train_data, eval_data,
                                                detail::Phase::Wing1, shuffle_rng, diag));
    run.phases.emplace_back("phase 2 (claim wing)",
                            detail::train_phase(P, mcfg, tcfg, train_data, eval_data,
                                                detail::Phase::Wing2, shuffle_rng, diag));
  } else {
    run.phases.emplace_back("joint",
                            detail::train_phase(P, mcfg, tcfg, train_data, eval_data,
                                                detail::Phase::Joint, shuffle_rng, diag));
  }
  return run;
}

inline void write_train_log(std::ostream& out, const TrainRun& run) {
  for (const auto& [name, rows] : run.phases) {
    if (run.phases.size() > 1) out << "# " << name << "\n";
    out << "epoch, l_ev, l_cv, l, dev_NoScoreEv, dev_ScoreEv, dev_F1\n";
    for (const EpochRow& r : rows) {
      out << r.epoch << ", " << std::fixed << std::setprecision(6) << r.l_ev << ", " << r.l_cv
          << ", " << r.l << ", " << r.dev_nse << ", " << r.dev_se << ", " << r.dev_f1 << "\n";
      out.unsetf(std::ios_base::floatfield);
    }
  }
}

}  // namespace twowing
