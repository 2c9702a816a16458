#pragma once

// Shared test helpers: finite-difference gradient checking, straight-line
// reference implementations (kept deliberately loop-based and independent of
// the graph code), a brute-force retrieval reference, and temp-dir plumbing.

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "twowing/model.hpp"
#include "twowing/retrieval.hpp"
#include "twowing/rng.hpp"

namespace support {

using Mat = std::vector<std::vector<double>>;  // Mat[r][c], matching d x l maps

// ---- finite differences ----

// relative error with the loss-scale floor of 1: gradients here live on
// losses of order one, so tiny absolute disagreements should not blow up
inline double rel_err(double a, double b) {
  double denom = std::max({std::fabs(a), std::fabs(b), 1.0});
  return std::fabs(a - b) / denom;
}

struct GradCheck {
  double max_rel = 0.0;
  std::string worst;
};

/// Compare analytic gradients against central differences for every element
/// of every parameter. `loss_value` must rebuild the forward pass from the
/// current parameter values; `accumulate_grads` must run one backward pass.
inline GradCheck check_gradients(const std::vector<twowing::Parameter*>& params,
                                 const std::function<double()>& loss_value,
                                 const std::function<void()>& accumulate_grads,
                                 double h = 1e-5) {
  for (twowing::Parameter* p : params) p->zero_grad();
  accumulate_grads();
  std::vector<twowing::Tensor> analytic;
  analytic.reserve(params.size());
  for (twowing::Parameter* p : params) analytic.push_back(p->grad);
  GradCheck res;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    twowing::Parameter* p = params[pi];
    for (std::size_t k = 0; k < p->value.numel(); ++k) {
      double orig = p->value[k];
      p->value[k] = orig + h;
      double lp = loss_value();
      p->value[k] = orig - h;
      double lm = loss_value();
      p->value[k] = orig;
      double fd = (lp - lm) / (2.0 * h);
      double re = rel_err(analytic[pi][k], fd);
      if (re > res.max_rel) {
        res.max_rel = re;
        std::ostringstream s;
        s << p->name << "[" << k << "]: analytic " << analytic[pi][k] << " vs fd " << fd;
        res.worst = s.str();
      }
    }
  }
  for (twowing::Parameter* p : params) p->zero_grad();
  return res;
}

// ---- loop references for the encoders ----

inline Mat to_mat(const twowing::Tensor& t) {
  Mat m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) m[r][c] = t.at(r, c);
  return m;
}

inline std::vector<double> ref_softmax(const std::vector<double>& v) {
  double mx = v[0];
  for (double x : v) mx = std::max(mx, x);
  std::vector<double> out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

inline double ref_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// tanh convolution over T (d x l as Mat) with zero padding; optional extra
/// rows appended per window. W rows hold [tap_0 .. tap_{w-1}, extra].
inline Mat ref_conv_tanh(const Mat& T, const Mat& W, const std::vector<double>& b, int width,
                         const Mat* extra = nullptr) {
  std::size_t d = T.size();
  std::size_t l = T.empty() ? 0 : T[0].size();
  std::size_t dout = W.size();
  int h = (width - 1) / 2;
  Mat out(dout, std::vector<double>(l, 0.0));
  for (std::size_t j = 0; j < l; ++j) {
    std::vector<double> window;
    for (int tap = 0; tap < width; ++tap) {
      long src = static_cast<long>(j) + tap - h;
      for (std::size_t k = 0; k < d; ++k)
        window.push_back(src >= 0 && src < static_cast<long>(l) ? T[k][static_cast<std::size_t>(src)] : 0.0);
    }
    if (extra)
      for (std::size_t k = 0; k < extra->size(); ++k) window.push_back((*extra)[k][j]);
    for (std::size_t r = 0; r < dout; ++r) {
      double acc = b[r];
      for (std::size_t c = 0; c < window.size(); ++c) acc += W[r][c] * window[c];
      out[r][j] = std::tanh(acc);
    }
  }
  return out;
}

inline std::vector<double> ref_maxpool(const Mat& M) {
  std::vector<double> out(M.size());
  for (std::size_t r = 0; r < M.size(); ++r) {
    double best = M[r][0];
    for (double x : M[r]) best = std::max(best, x);
    out[r] = best;
  }
  return out;
}

inline std::vector<double> ref_vanilla(const Mat& T, const Mat& W, const std::vector<double>& b, int width) {
  return ref_maxpool(ref_conv_tanh(T, W, b, width));
}

/// Attention context for one word state over the columns of X.
inline std::vector<double> ref_context(const std::vector<double>& h, const Mat& X) {
  std::size_t d = X.size();
  std::size_t lx = X[0].size();
  std::vector<double> scores(lx, 0.0);
  for (std::size_t z = 0; z < lx; ++z)
    for (std::size_t r = 0; r < d; ++r) scores[z] += h[r] * X[r][z];
  std::vector<double> w = ref_softmax(scores);
  std::vector<double> c(d, 0.0);
  for (std::size_t z = 0; z < lx; ++z)
    for (std::size_t r = 0; r < d; ++r) c[r] += w[z] * X[r][z];
  return c;
}

inline std::vector<double> ref_column(const Mat& M, std::size_t j) {
  std::vector<double> col(M.size());
  for (std::size_t r = 0; r < M.size(); ++r) col[r] = M[r][j];
  return col;
}

/// The interaction encoder spelled out: per-word context, width-3 window
/// with the context appended, tanh, maxpool.
inline std::vector<double> ref_f_int(const Mat& S, const Mat& X, const Mat& W, const std::vector<double>& b) {
  std::size_t ls = S[0].size();
  Mat contexts(S.size(), std::vector<double>(ls));
  for (std::size_t j = 0; j < ls; ++j) {
    std::vector<double> c = ref_context(ref_column(S, j), X);
    for (std::size_t r = 0; r < S.size(); ++r) contexts[r][j] = c[r];
  }
  return ref_maxpool(ref_conv_tanh(S, W, b, 3, &contexts));
}

// ---- brute-force retrieval reference ----

/// Score every page with fresh set arithmetic (no index), sort by score
/// descending then title ascending, truncate to k.
inline std::vector<twowing::RankedTitle> brute_force_topk(const std::vector<twowing::WikiPage>& pages,
                                                          const std::string& claim, std::size_t k) {
  std::vector<std::string> toks = twowing::tokenize(claim);
  std::set<std::string> claim_vocab(toks.begin(), toks.end());
  std::set<std::string> mention_vocab;
  for (const std::string& m : twowing::detect_entity_mentions(claim))
    for (const std::string& w : twowing::tokenize(m)) mention_vocab.insert(w);

  auto covered = [](const std::vector<std::string>& words, const std::string& first,
                    const std::set<std::string>& vocab) {
    std::set<std::string> seen;
    std::size_t n = 0;
    for (const std::string& w : words) {
      if (!seen.insert(w).second) continue;
      bool hit = vocab.count(w) > 0;
      if (!hit && w == first) hit = vocab.count(twowing::lowercased(w)) > 0;
      if (hit) ++n;
    }
    return n;
  };

  std::vector<twowing::RankedTitle> scored;
  for (const twowing::WikiPage& page : pages) {
    std::vector<std::string> words = twowing::title_words(page.title);
    if (words.empty()) continue;
    std::set<std::string> tv(words.begin(), words.end());
    std::size_t in_claim = covered(words, words.front(), claim_vocab);
    if (in_claim == 0) continue;
    std::size_t in_mentions = covered(words, words.front(), mention_vocab);
    double title_score = static_cast<double>(std::max(in_claim, in_mentions)) / static_cast<double>(tv.size());
    double score = title_score;
    if (title_score != 1.0) {
      std::set<std::string> body;
      for (const std::string& s : page.sentences)
        for (const std::string& t : twowing::tokenize(s)) body.insert(t);
      std::size_t hit = 0;
      for (const std::string& w : claim_vocab)
        if (body.count(w)) ++hit;
      score += claim_vocab.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(claim_vocab.size());
    }
    scored.push_back({page.title, score});
  }
  std::sort(scored.begin(), scored.end(), [](const twowing::RankedTitle& a, const twowing::RankedTitle& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.title < b.title;
  });
  if (scored.size() > k) scored.resize(k);
  return scored;
}

// ---- random model instances for gradient checks ----

struct RandomInstance {
  twowing::ModelConfig cfg;
  twowing::ModelParams params;
  twowing::ClaimInstance inst;
  std::vector<char> fixed_p;
};

/// A small random configuration with healthy weight magnitudes so the
/// finite-difference comparison sees gradients well above noise level.
inline RandomInstance random_instance(std::uint64_t seed, twowing::EvidenceRep rep_ev,
                                      twowing::ClaimRep rep_cv, twowing::Mode mode,
                                      std::size_t d = 8, std::size_t m = 3,
                                      std::size_t max_len = 5) {
  twowing::Rng rng(seed);
  RandomInstance ri;
  ri.cfg.d = d;
  ri.cfg.vocab_size = 12;
  ri.cfg.filter_width = 3;
  ri.cfg.mode = mode;
  ri.cfg.rep_ev = rep_ev;
  ri.cfg.rep_cv = rep_cv;

  twowing::Tensor emb({ri.cfg.vocab_size, d});
  for (double& x : emb.data()) x = rng.uniform(-0.4, 0.4);
  twowing::Rng prng = twowing::Rng::derive(seed, 17);
  ri.params = twowing::ModelParams::build(ri.cfg, emb, prng);
  for (twowing::Parameter* p : ri.params.all()) {
    if (p == ri.params.emb_ev || p == ri.params.emb_cv) continue;
    for (double& x : p->value.data()) x = rng.uniform(-0.3, 0.3);
  }

  auto random_ids = [&rng](std::size_t vocab, std::size_t max_l) {
    std::size_t l = 1 + rng.index(max_l);
    std::vector<int> ids(l);
    for (int& id : ids) id = static_cast<int>(rng.index(vocab));
    return ids;
  };
  ri.inst.id = static_cast<long>(seed);
  ri.inst.label = static_cast<twowing::Label>(static_cast<int>(rng.index(3)));
  ri.inst.claim_ids = random_ids(ri.cfg.vocab_size, max_len);
  for (std::size_t i = 0; i < m; ++i) {
    ri.inst.cand_ids.push_back(random_ids(ri.cfg.vocab_size, max_len));
    ri.inst.gold.push_back(ri.inst.label != twowing::Label::Nei && rng.uniform(0.0, 1.0) < 0.5 ? 1 : 0);
    ri.inst.cand_keys.emplace_back("P" + std::to_string(i), static_cast<int>(i));
    ri.fixed_p.push_back(rng.uniform(0.0, 1.0) < 0.6 ? 1 : 0);
  }
  if (m > 0) ri.fixed_p[rng.index(m)] = 1;  // keep the evidence path exercised
  return ri;
}

/// Gradient check of one loss on one random instance; which = 0 checks l_ev,
/// 1 checks l_cv (with p frozen so the threshold stays put under the FD
/// perturbations).
inline GradCheck model_grad_check(RandomInstance& ri, int which, double h = 1e-5) {
  twowing::ForwardOptions opt;
  opt.fixed_p = &ri.fixed_p;
  auto pick = [which](twowing::ForwardResult& r) { return which == 0 ? r.l_ev : r.l_cv; };
  auto loss_value = [&]() {
    twowing::Graph g;
    twowing::ForwardResult r = twowing::forward_claim(g, ri.params, ri.cfg, ri.inst, opt);
    return pick(r).val()[0];
  };
  auto accumulate = [&]() {
    twowing::Graph g;
    twowing::ForwardResult r = twowing::forward_claim(g, ri.params, ri.cfg, ri.inst, opt);
    g.backward(pick(r));
  };
  return check_gradients(ri.params.all(), loss_value, accumulate, h);
}

// ---- filesystem ----

struct TmpDir {
  std::filesystem::path path;

  TmpDir() : TmpDir("t") {}

  explicit TmpDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("twowing_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TmpDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace support
