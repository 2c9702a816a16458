#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <memory>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "twowing/autodiff.hpp"
#include "twowing/data.hpp"
#include "twowing/encoders.hpp"
#include "twowing/errors.hpp"
#include "twowing/rng.hpp"
#include "twowing/text.hpp"

namespace twowing {

enum class Mode { Pipeline, DiffCnn, ShareCnn };
enum class EvidenceRep { Coarse, Fine };
enum class ClaimRep { Coarse, Single, Two, Sentwise };

inline const char* mode_str(Mode m) {
  switch (m) {
    case Mode::Pipeline: return "pipeline";
    case Mode::DiffCnn: return "diff-cnn";
    case Mode::ShareCnn: return "share-cnn";
  }
  throw ValidationError("mode code out of range");
}

inline Mode parse_mode(const std::string& s) {
  if (s == "pipeline") return Mode::Pipeline;
  if (s == "diff-cnn") return Mode::DiffCnn;
  if (s == "share-cnn") return Mode::ShareCnn;
  throw ValidationError("unknown mode \"" + s + "\" (expected pipeline, diff-cnn or share-cnn)");
}

inline const char* evidence_rep_str(EvidenceRep r) {
  return r == EvidenceRep::Coarse ? "coarse" : "fine";
}

inline EvidenceRep parse_evidence_rep(const std::string& s) {
  if (s == "coarse") return EvidenceRep::Coarse;
  if (s == "fine") return EvidenceRep::Fine;
  throw ValidationError("unknown evidence representation \"" + s + "\" (expected coarse or fine)");
}

inline const char* claim_rep_str(ClaimRep r) {
  switch (r) {
    case ClaimRep::Coarse: return "coarse";
    case ClaimRep::Single: return "single";
    case ClaimRep::Two: return "two";
    case ClaimRep::Sentwise: return "sentwise";
  }
  throw ValidationError("claim representation code out of range");
}

inline ClaimRep parse_claim_rep(const std::string& s) {
  if (s == "coarse") return ClaimRep::Coarse;
  if (s == "single") return ClaimRep::Single;
  if (s == "two") return ClaimRep::Two;
  if (s == "sentwise") return ClaimRep::Sentwise;
  throw ValidationError("unknown claim representation \"" + s + "\" (expected coarse, single, two or sentwise)");
}

struct ModelConfig {
  std::size_t d = 300;
  std::size_t vocab_size = 1;
  int filter_width = 3;
  Mode mode = Mode::ShareCnn;
  EvidenceRep rep_ev = EvidenceRep::Fine;
  ClaimRep rep_cv = ClaimRep::Two;
  bool untied_attention = false;

  /// Evidence scorer input length: [s, x, s.x] or [s, x, s.x, i].
  std::size_t evidence_rep_dim() const {
    return rep_ev == EvidenceRep::Coarse ? 2 * d + 1 : 3 * d + 1;
  }
};

constexpr double kWeightInitRange = 0.05;

/// All trainable weights. Sharing follows the training mode: share-cnn has
/// one embedding table and one vanilla CNN for both wings; diff-cnn keeps
/// embeddings shared but splits the CNNs; pipeline splits everything so the
/// wings can be trained and frozen independently.
struct ModelParams {
  std::vector<std::unique_ptr<Parameter>> owned;

  Parameter* emb_ev = nullptr;
  Parameter* emb_cv = nullptr;
  Parameter* cnn_ev_W = nullptr;
  Parameter* cnn_ev_b = nullptr;
  Parameter* cnn_cv_W = nullptr;
  Parameter* cnn_cv_b = nullptr;
  Parameter* att_ev_W = nullptr;
  Parameter* att_ev_b = nullptr;
  Parameter* att_cv_W = nullptr;
  Parameter* att_cv_b = nullptr;
  Parameter* v = nullptr;
  Parameter* cls_W = nullptr;
  Parameter* cls_b = nullptr;

  static ModelParams build(const ModelConfig& cfg, const Tensor& init_emb, Rng& rng) {
    if (init_emb.rank() != 2 || init_emb.rows() != cfg.vocab_size || init_emb.cols() != cfg.d)
      throw DimensionError("embedding table " + shape_str(init_emb.shape()) + " does not match vocab " +
                           std::to_string(cfg.vocab_size) + " x d " + std::to_string(cfg.d));
    ModelParams P;
    auto add = [&P](const std::string& name, Tensor t) {
      P.owned.push_back(std::make_unique<Parameter>(name, std::move(t)));
      return P.owned.back().get();
    };
    auto rand_tensor = [&rng](Shape shape) {
      Tensor t(std::move(shape));
      for (double& x : t.data()) x = rng.uniform(-kWeightInitRange, kWeightInitRange);
      return t;
    };
    std::size_t d = cfg.d;
    std::size_t w = static_cast<std::size_t>(cfg.filter_width);

    if (cfg.mode == Mode::Pipeline) {
      P.emb_ev = add("emb_ev", init_emb);
      P.emb_cv = add("emb_cv", init_emb);
    } else {
      P.emb_ev = P.emb_cv = add("emb", init_emb);
    }

    bool share_cnn = cfg.mode == Mode::ShareCnn;
    P.cnn_ev_W = add(share_cnn ? "cnn.W" : "cnn_ev.W", rand_tensor({d, w * d}));
    P.cnn_ev_b = add(share_cnn ? "cnn.b" : "cnn_ev.b", Tensor::zeros({d}));
    if (share_cnn) {
      P.cnn_cv_W = P.cnn_ev_W;
      P.cnn_cv_b = P.cnn_ev_b;
    } else {
      P.cnn_cv_W = add("cnn_cv.W", rand_tensor({d, w * d}));
      P.cnn_cv_b = add("cnn_cv.b", Tensor::zeros({d}));
    }

    bool tie_att = cfg.mode != Mode::Pipeline && !cfg.untied_attention;
    P.att_ev_W = add(tie_att ? "att.W" : "att_ev.W", rand_tensor({d, 4 * d}));
    P.att_ev_b = add(tie_att ? "att.b" : "att_ev.b", Tensor::zeros({d}));
    if (tie_att) {
      P.att_cv_W = P.att_ev_W;
      P.att_cv_b = P.att_ev_b;
    } else {
      P.att_cv_W = add("att_cv.W", rand_tensor({d, 4 * d}));
      P.att_cv_b = add("att_cv.b", Tensor::zeros({d}));
    }

    P.v = add("v", rand_tensor({cfg.evidence_rep_dim()}));
    P.cls_W = add("cls.W", rand_tensor({3, 2 * d}));
    P.cls_b = add("cls.b", Tensor::zeros({3}));
    return P;
  }

  /// Unique parameters, creation order.
  std::vector<Parameter*> all() const {
    std::vector<Parameter*> out;
    out.reserve(owned.size());
    for (const auto& p : owned) out.push_back(p.get());
    return out;
  }

  /// Evidence-wing roles (may overlap wing2 under shared modes).
  std::vector<Parameter*> wing1() const {
    return unique_of({emb_ev, cnn_ev_W, cnn_ev_b, att_ev_W, att_ev_b, v});
  }

  /// Claim-wing roles.
  std::vector<Parameter*> wing2() const {
    return unique_of({emb_cv, cnn_cv_W, cnn_cv_b, att_cv_W, att_cv_b, cls_W, cls_b});
  }

  Parameter* by_name(const std::string& name) const {
    for (const auto& p : owned)
      if (p->name == name) return p.get();
    return nullptr;
  }

 private:
  static std::vector<Parameter*> unique_of(std::initializer_list<Parameter*> ps) {
    std::vector<Parameter*> out;
    for (Parameter* p : ps)
      if (p && std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
    return out;
  }
};

// ---- representation assembly (shared by the model and by unit tests) ----

/// [s, x, s.x]: length 2d+1.
inline Var evidence_rep_coarse(Graph& g, Var s, Var x) {
  return g.concat({s, x, g.dot(s, x)});
}

/// [s, x, s.x, i]: length 3d+1.
inline Var evidence_rep_fine(Graph& g, Var s, Var x, Var i) {
  return g.concat({s, x, g.dot(s, x), i});
}

inline std::size_t argmax_lowest(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

/// Elementwise sum of per-sentence label distributions, argmax; no
/// distributions at all falls back to NEI.
inline Label sentwise_ensemble(const std::vector<std::vector<double>>& dists) {
  if (dists.empty()) return Label::Nei;
  std::vector<double> sum(dists[0].size(), 0.0);
  for (const auto& d : dists)
    for (std::size_t i = 0; i < d.size(); ++i) sum[i] += d[i];
  return static_cast<Label>(static_cast<int>(argmax_lowest(sum)));
}

// ---- per-claim input ----

/// One claim ready for the graph: token ids for the claim and every
/// candidate, plus the gold binary vector q.
struct ClaimInstance {
  long id = 0;
  Label label = Label::Nei;
  std::vector<int> claim_ids;
  std::vector<std::vector<int>> cand_ids;
  std::vector<char> gold;                 // q, all zero for NEI
  std::vector<EvidencePair> cand_keys;    // (title, sentence index) per candidate
  std::set<EvidencePair> gold_evidence;   // full gold set, retrieved or not
};

inline ClaimInstance prepare_instance(const ClaimRecord& rec, const std::vector<Candidate>& cands,
                                      const Vocab& vocab) {
  ClaimInstance inst;
  inst.id = rec.id;
  inst.label = rec.label;
  inst.gold_evidence = rec.gold_evidence;
  inst.claim_ids = vocab.ids_of(tokenize(rec.claim));
  if (inst.claim_ids.empty())
    throw ValidationError("claim " + std::to_string(rec.id) + " has no tokens");
  for (const Candidate& c : cands) {
    inst.cand_ids.push_back(vocab.ids_of(tokenize(c.text)));
    inst.gold.push_back(c.gold ? 1 : 0);
    inst.cand_keys.emplace_back(c.title, c.index);
  }
  return inst;
}

// ---- forward pass ----

struct ForwardOptions {
  /// Override the evidence binarization (gold-evidence training, gradient
  /// harnesses). Length must equal the candidate count.
  const std::vector<char>* fixed_p = nullptr;
  bool claim_wing = true;
  std::ostream* diag = nullptr;  // clue-channel fallback notices
};

struct ForwardResult {
  Var l_ev;
  Var l_cv;    // invalid when the claim wing is skipped
  Var loss;    // l_ev + l_cv
  std::vector<double> alpha;
  std::vector<char> p;
  std::vector<double> o;  // label distribution (mean distribution for sentwise)
  Label predicted = Label::Nei;
};

inline ForwardResult forward_claim(Graph& g, ModelParams& P, const ModelConfig& cfg,
                                   const ClaimInstance& inst, const ForwardOptions& opt = {}) {
  std::size_t m = inst.cand_ids.size();
  if (opt.fixed_p && opt.fixed_p->size() != m)
    throw ArgumentError("fixed_p length " + std::to_string(opt.fixed_p->size()) + " does not match " +
                        std::to_string(m) + " candidates");
  ForwardResult res;

  // evidence wing
  Var emb1 = g.value(*P.emb_ev);
  Var X1 = g.gather_cols(emb1, inst.claim_ids);
  Var x1 = vanilla_encode(g, X1, *P.cnn_ev_W, *P.cnn_ev_b, cfg.filter_width);
  std::vector<Var> alpha(m);
  std::vector<Var> bce(m);
  for (std::size_t i = 0; i < m; ++i) {
    Var Si = g.gather_cols(emb1, inst.cand_ids[i]);
    Var si = vanilla_encode(g, Si, *P.cnn_ev_W, *P.cnn_ev_b, cfg.filter_width);
    Var r = cfg.rep_ev == EvidenceRep::Coarse
                ? evidence_rep_coarse(g, si, x1)
                : evidence_rep_fine(g, si, x1, f_int(g, Si, X1, *P.att_ev_W, *P.att_ev_b));
    alpha[i] = g.sigmoid(g.dot(g.value(*P.v), r));
    res.alpha.push_back(alpha[i].val()[0]);
    bce[i] = inst.gold[i] ? g.scale(g.log(alpha[i]), -1.0)
                          : g.scale(g.log(g.affine(alpha[i], -1.0, 1.0)), -1.0);
  }
  res.l_ev = m == 0 ? g.scalar(0.0) : g.add_n(bce);

  // binarize (strict threshold; 0.5 itself is out)
  res.p.resize(m);
  for (std::size_t i = 0; i < m; ++i)
    res.p[i] = opt.fixed_p ? (*opt.fixed_p)[i] : (res.alpha[i] > 0.5 ? 1 : 0);

  if (!opt.claim_wing) return res;

  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < m; ++i)
    if (res.p[i]) chosen.push_back(i);

  // claim wing (recomputed with its own roles; these alias wing-1 params
  // under the shared modes, which is exactly the intended coupling)
  Var emb2 = g.value(*P.emb_cv);
  Var X2 = g.gather_cols(emb2, inst.claim_ids);
  Tensor zcode = Tensor::zeros({3});
  zcode[static_cast<std::size_t>(static_cast<int>(inst.label))] = 1.0;

  auto classify = [&](Var input) {
    Var o = g.softmax(g.add(g.matvec(g.value(*P.cls_W), input), g.value(*P.cls_b)));
    res.o.assign(o.val().data().begin(), o.val().data().end());
    res.predicted = static_cast<Label>(static_cast<int>(argmax_lowest(res.o)));
    res.l_cv = g.scale(g.log(g.dot(o, g.constant(zcode))), -1.0);
  };

  if (cfg.rep_cv == ClaimRep::Coarse) {
    Var x2 = vanilla_encode(g, X2, *P.cnn_cv_W, *P.cnn_cv_b, cfg.filter_width);
    Var e;
    if (chosen.empty()) {
      e = g.constant(Tensor::zeros({cfg.d}));
    } else {
      std::vector<Var> terms;
      for (std::size_t i : chosen) {
        Var Si = g.gather_cols(emb2, inst.cand_ids[i]);
        Var si = vanilla_encode(g, Si, *P.cnn_cv_W, *P.cnn_cv_b, cfg.filter_width);
        terms.push_back(g.scale_by(si, alpha[i]));
      }
      e = terms.size() == 1 ? terms[0] : g.add_n(terms);
    }
    classify(g.concat({e, x2}));
  } else if (cfg.rep_cv == ClaimRep::Single || cfg.rep_cv == ClaimRep::Two) {
    std::vector<Var> maps(m);
    for (std::size_t i : chosen) maps[i] = g.gather_cols(emb2, inst.cand_ids[i]);
    if (cfg.rep_cv == ClaimRep::Two) {
      if (!chosen.empty()) {
        // clue accumulation: every selected word attends over the
        // concatenation of all selected sentences, then adds its context
        std::vector<Var> parts;
        for (std::size_t i : chosen) parts.push_back(maps[i]);
        Var shat = parts.size() == 1 ? parts[0] : g.concat_cols(parts);
        for (std::size_t i : chosen) maps[i] = g.add(maps[i], g.attend(maps[i], shat));
      } else if (m > 0 && opt.diag) {
        *opt.diag << "note: claim " << inst.id << ": no predicted evidence; clue channel idle\n";
      }
    }
    // weighted componentwise max over candidates; unselected candidates
    // contribute exact zero vectors, which still compete in the max
    std::vector<Var> te, tx;
    for (std::size_t i : chosen) {
      Var ii = f_int(g, maps[i], X2, *P.att_cv_W, *P.att_cv_b);
      Var xi = f_int(g, X2, maps[i], *P.att_cv_W, *P.att_cv_b);
      te.push_back(g.scale_by(ii, alpha[i]));
      tx.push_back(g.scale_by(xi, alpha[i]));
    }
    bool zero_term = chosen.size() < m || m == 0;
    auto fold_max = [&](const std::vector<Var>& terms) {
      if (terms.empty()) return g.constant(Tensor::zeros({cfg.d}));
      Var acc = terms[0];
      for (std::size_t k = 1; k < terms.size(); ++k) acc = g.max(acc, terms[k]);
      if (zero_term) acc = g.max(acc, g.constant(Tensor::zeros({cfg.d})));
      return acc;
    };
    classify(g.concat({fold_max(te), fold_max(tx)}));
  } else {  // sentwise: per-sentence entailment, ensemble by summation
    std::vector<Var> dists;
    std::vector<std::vector<double>> dist_vals;
    for (std::size_t i : chosen) {
      Var Si = g.gather_cols(emb2, inst.cand_ids[i]);
      Var ii = f_int(g, Si, X2, *P.att_cv_W, *P.att_cv_b);
      Var xi = f_int(g, X2, Si, *P.att_cv_W, *P.att_cv_b);
      Var oi = g.softmax(g.add(g.matvec(g.value(*P.cls_W), g.concat({ii, xi})), g.value(*P.cls_b)));
      dists.push_back(oi);
      dist_vals.emplace_back(oi.val().data().begin(), oi.val().data().end());
    }
    res.predicted = sentwise_ensemble(dist_vals);
    if (dists.empty()) {
      res.l_cv = g.scalar(0.0);
    } else {
      Var mean = g.scale(dists.size() == 1 ? dists[0] : g.add_n(dists), 1.0 / static_cast<double>(dists.size()));
      res.o.assign(mean.val().data().begin(), mean.val().data().end());
      res.l_cv = g.scale(g.log(g.dot(mean, g.constant(zcode))), -1.0);
    }
  }

  res.loss = g.add(res.l_ev, res.l_cv);
  return res;
}

}  // namespace twowing
