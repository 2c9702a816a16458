#pragma once

#include <algorithm>
#include <cstddef>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "twowing/data.hpp"
#include "twowing/errors.hpp"

namespace twowing {

struct ClaimJudgment {
  Label gold = Label::Nei;
  Label predicted = Label::Nei;
  std::set<EvidencePair> gold_evidence;
  std::set<EvidencePair> predicted_evidence;
};

/// Label accuracy, evidence ignored.
inline double no_score_ev(const std::vector<ClaimJudgment>& js) {
  if (js.empty()) throw ArgumentError("no_score_ev: empty judgment set");
  std::size_t hit = 0;
  for (const ClaimJudgment& j : js)
    if (j.predicted == j.gold) ++hit;
  return static_cast<double>(hit) / static_cast<double>(js.size());
}

/// Label accuracy where SUPPORTED/REFUTED claims additionally need the
/// predicted evidence to cover every gold sentence. NEI is exempt.
inline double score_ev(const std::vector<ClaimJudgment>& js) {
  if (js.empty()) throw ArgumentError("score_ev: empty judgment set");
  std::size_t hit = 0;
  for (const ClaimJudgment& j : js) {
    if (j.predicted != j.gold) continue;
    if (j.gold == Label::Nei) {
      ++hit;
      continue;
    }
    bool covered = std::includes(j.predicted_evidence.begin(), j.predicted_evidence.end(),
                                 j.gold_evidence.begin(), j.gold_evidence.end());
    if (covered) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(js.size());
}

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Micro-averaged sentence precision/recall/F1 over SUPPORTED/REFUTED
/// claims; NEI claims are excluded. Zero denominators yield 0.
inline Prf evidence_prf(const std::vector<ClaimJudgment>& js) {
  std::size_t tp = 0, pred_n = 0, gold_n = 0, sr = 0;
  for (const ClaimJudgment& j : js) {
    if (j.gold == Label::Nei) continue;
    ++sr;
    pred_n += j.predicted_evidence.size();
    gold_n += j.gold_evidence.size();
    for (const EvidencePair& e : j.predicted_evidence)
      if (j.gold_evidence.count(e)) ++tp;
  }
  if (sr == 0) throw ArgumentError("evidence_prf: no SUPPORTED/REFUTED judgments");
  Prf r;
  r.precision = pred_n ? static_cast<double>(tp) / static_cast<double>(pred_n) : 0.0;
  r.recall = gold_n ? static_cast<double>(tp) / static_cast<double>(gold_n) : 0.0;
  r.f1 = (r.precision + r.recall) > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

/// Best label accuracy a downstream verifier can reach when a fraction
/// `rate` of SUPPORTED/REFUTED claims still has its gold pages available:
/// (rate*(n_s+n_r) + n_n) / (n_s+n_r+n_n).
inline double acc_ceiling(double rate, std::size_t n_s, std::size_t n_r, std::size_t n_n) {
  if (rate < 0.0 || rate > 1.0) throw ArgumentError("acc_ceiling: rate must lie in [0, 1]");
  std::size_t total = n_s + n_r + n_n;
  if (total == 0) throw ArgumentError("acc_ceiling: all counts are zero");
  return (rate * static_cast<double>(n_s + n_r) + static_cast<double>(n_n)) / static_cast<double>(total);
}

struct EvalReport {
  double no_score_ev = 0.0;
  double score_ev = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t n_claims = 0;
  std::size_t n_supported = 0;
  std::size_t n_refuted = 0;
  std::size_t n_nei = 0;
  std::size_t correct_supported = 0;
  std::size_t correct_refuted = 0;
  std::size_t correct_nei = 0;
};

inline EvalReport evaluate(const std::vector<ClaimJudgment>& js) {
  EvalReport r;
  r.n_claims = js.size();
  r.no_score_ev = no_score_ev(js);
  r.score_ev = score_ev(js);
  for (const ClaimJudgment& j : js) {
    switch (j.gold) {
      case Label::Supported:
        ++r.n_supported;
        if (j.predicted == j.gold) ++r.correct_supported;
        break;
      case Label::Refuted:
        ++r.n_refuted;
        if (j.predicted == j.gold) ++r.correct_refuted;
        break;
      case Label::Nei:
        ++r.n_nei;
        if (j.predicted == j.gold) ++r.correct_nei;
        break;
    }
  }
  if (r.n_supported + r.n_refuted > 0) {
    Prf prf = evidence_prf(js);
    r.precision = prf.precision;
    r.recall = prf.recall;
    r.f1 = prf.f1;
  }
  return r;
}

/// Pair gold records with predictions by claim id; every id must appear on
/// both sides.
inline std::vector<ClaimJudgment> make_judgments(const std::vector<ClaimRecord>& gold,
                                                 const std::vector<PredictionRecord>& preds) {
  std::map<long, const PredictionRecord*> by_id;
  for (const PredictionRecord& p : preds) by_id[p.claim_id] = &p;
  std::vector<long> missing;
  std::vector<ClaimJudgment> js;
  std::set<long> gold_ids;
  for (const ClaimRecord& g : gold) {
    gold_ids.insert(g.id);
    auto it = by_id.find(g.id);
    if (it == by_id.end()) {
      missing.push_back(g.id);
      continue;
    }
    ClaimJudgment j;
    j.gold = g.label;
    j.gold_evidence = g.gold_evidence;
    j.predicted = it->second->predicted;
    j.predicted_evidence = it->second->evidence;
    js.push_back(std::move(j));
  }
  std::vector<long> extra;
  for (const PredictionRecord& p : preds)
    if (!gold_ids.count(p.claim_id)) extra.push_back(p.claim_id);
  if (!missing.empty() || !extra.empty()) {
    std::ostringstream msg;
    msg << "claim id mismatch between gold and predictions;";
    if (!missing.empty()) {
      msg << " missing predictions for:";
      for (long id : missing) msg << ' ' << id;
      msg << ';';
    }
    if (!extra.empty()) {
      msg << " predictions without gold:";
      for (long id : extra) msg << ' ' << id;
    }
    throw ValidationError(msg.str());
  }
  return js;
}

inline std::string pct(double fraction) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << fraction * 100.0 << '%';
  return s.str();
}

inline void write_report_text(std::ostream& out, const EvalReport& r) {
  out << "claims:            " << r.n_claims << " (SUPPORTED " << r.n_supported << ", REFUTED "
      << r.n_refuted << ", NEI " << r.n_nei << ")\n";
  out << "label accuracy:    SUPPORTED " << r.correct_supported << "/" << r.n_supported
      << ", REFUTED " << r.correct_refuted << "/" << r.n_refuted << ", NEI " << r.correct_nei
      << "/" << r.n_nei << "\n";
  out << "NoScoreEv:         " << pct(r.no_score_ev) << "\n";
  out << "ScoreEv:           " << pct(r.score_ev) << "\n";
  out << "evidence precision: " << pct(r.precision) << "\n";
  out << "evidence recall:    " << pct(r.recall) << "\n";
  out << "evidence F1:        " << pct(r.f1) << "\n";
}

inline void write_report_csv(std::ostream& out, const EvalReport& r) {
  out << "no_score_ev, score_ev, precision, recall, f1, n_claims, n_supported, n_refuted, n_nei\n";
  out << std::fixed << std::setprecision(4) << r.no_score_ev << ", " << r.score_ev << ", "
      << r.precision << ", " << r.recall << ", " << r.f1 << ", " << r.n_claims << ", "
      << r.n_supported << ", " << r.n_refuted << ", " << r.n_nei << "\n";
  out.unsetf(std::ios_base::floatfield);
}

}  // namespace twowing
