#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "twowing/errors.hpp"
#include "twowing/model.hpp"
#include "twowing/text.hpp"

namespace twowing {

namespace ckpt {

constexpr char kMagic[8] = {'T', 'W', 'O', 'W', 'I', 'N', 'G', '\n'};
constexpr std::uint32_t kVersion = 1;

// little-endian fixed-width records so snapshots round-trip bit for bit

inline void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw IoError("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline void put_f64(std::ostream& out, double x) {
  std::uint64_t bits;
  std::memcpy(&bits, &x, 8);
  put_u64(out, bits);
}

inline double get_f64(std::istream& in) {
  std::uint64_t bits = get_u64(in);
  double x;
  std::memcpy(&x, &bits, 8);
  return x;
}

inline void put_str(std::ostream& out, const std::string& s) {
  put_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_str(std::istream& in) {
  std::uint64_t n = get_u64(in);
  std::string s(n, '\0');
  if (n && !in.read(s.data(), static_cast<std::streamsize>(n))) throw IoError("checkpoint truncated");
  return s;
}

inline void put_tensor(std::ostream& out, const Tensor& t) {
  put_u64(out, t.rank());
  for (std::size_t dim : t.shape()) put_u64(out, dim);
  for (double x : t.data()) put_f64(out, x);
}

inline Tensor get_tensor(std::istream& in) {
  std::uint64_t rank = get_u64(in);
  Shape shape;
  for (std::uint64_t i = 0; i < rank; ++i) shape.push_back(static_cast<std::size_t>(get_u64(in)));
  Tensor t(shape);
  for (double& x : t.data()) x = get_f64(in);
  return t;
}

inline nlohmann::json config_json(const ModelConfig& cfg) {
  nlohmann::json j;
  j["d"] = cfg.d;
  j["vocab_size"] = cfg.vocab_size;
  j["filter_width"] = cfg.filter_width;
  j["mode"] = mode_str(cfg.mode);
  j["rep_ev"] = evidence_rep_str(cfg.rep_ev);
  j["rep_cv"] = claim_rep_str(cfg.rep_cv);
  j["untied_attention"] = cfg.untied_attention;
  return j;
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.d = j.at("d").get<std::size_t>();
  cfg.vocab_size = j.at("vocab_size").get<std::size_t>();
  cfg.filter_width = j.at("filter_width").get<int>();
  cfg.mode = parse_mode(j.at("mode").get<std::string>());
  cfg.rep_ev = parse_evidence_rep(j.at("rep_ev").get<std::string>());
  cfg.rep_cv = parse_claim_rep(j.at("rep_cv").get<std::string>());
  cfg.untied_attention = j.at("untied_attention").get<bool>();
  return cfg;
}

/// Wire the role pointers onto a loaded parameter list, following the same
/// naming scheme ModelParams::build uses for each mode.
inline void wire_roles(ModelParams& P, const ModelConfig& cfg) {
  auto need = [&P](const std::string& name) {
    Parameter* p = P.by_name(name);
    if (!p) throw FormatError("checkpoint is missing parameter \"" + name + "\"");
    return p;
  };
  if (cfg.mode == Mode::Pipeline) {
    P.emb_ev = need("emb_ev");
    P.emb_cv = need("emb_cv");
  } else {
    P.emb_ev = P.emb_cv = need("emb");
  }
  if (cfg.mode == Mode::ShareCnn) {
    P.cnn_ev_W = P.cnn_cv_W = need("cnn.W");
    P.cnn_ev_b = P.cnn_cv_b = need("cnn.b");
  } else {
    P.cnn_ev_W = need("cnn_ev.W");
    P.cnn_ev_b = need("cnn_ev.b");
    P.cnn_cv_W = need("cnn_cv.W");
    P.cnn_cv_b = need("cnn_cv.b");
  }
  if (cfg.mode != Mode::Pipeline && !cfg.untied_attention) {
    P.att_ev_W = P.att_cv_W = need("att.W");
    P.att_ev_b = P.att_cv_b = need("att.b");
  } else {
    P.att_ev_W = need("att_ev.W");
    P.att_ev_b = need("att_ev.b");
    P.att_cv_W = need("att_cv.W");
    P.att_cv_b = need("att_cv.b");
  }
  P.v = need("v");
  P.cls_W = need("cls.W");
  P.cls_b = need("cls.b");
}

}  // namespace ckpt

struct Checkpoint {
  ModelConfig config;
  Vocab vocab;
  ModelParams params;
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
};

inline void save_checkpoint(const std::string& path, const ModelConfig& cfg, const Vocab& vocab,
                            const ModelParams& params, std::uint64_t seed, std::uint64_t epoch) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path);
  out.write(ckpt::kMagic, 8);
  ckpt::put_u64(out, ckpt::kVersion);
  nlohmann::json meta = ckpt::config_json(cfg);
  meta["seed"] = seed;
  meta["epoch"] = epoch;
  ckpt::put_str(out, meta.dump());
  ckpt::put_u64(out, vocab.words().size());
  for (const std::string& w : vocab.words()) ckpt::put_str(out, w);
  ckpt::put_u64(out, params.owned.size());
  for (const auto& p : params.owned) {
    ckpt::put_str(out, p->name);
    ckpt::put_tensor(out, p->value);
    ckpt::put_tensor(out, p->accum);
  }
  if (!out) throw IoError("short write on checkpoint " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, ckpt::kMagic, 8) != 0)
    throw FormatError(path + " is not a checkpoint");
  std::uint64_t version = ckpt::get_u64(in);
  if (version != ckpt::kVersion)
    throw VersionError(path + ": checkpoint version " + std::to_string(version) + ", expected " +
                       std::to_string(ckpt::kVersion));
  nlohmann::json meta = nlohmann::json::parse(ckpt::get_str(in));
  Checkpoint c;
  c.config = ckpt::config_from_json(meta);
  c.seed = meta.at("seed").get<std::uint64_t>();
  c.epoch = meta.at("epoch").get<std::uint64_t>();
  std::uint64_t nwords = ckpt::get_u64(in);
  std::vector<std::string> words;
  words.reserve(nwords);
  for (std::uint64_t i = 0; i < nwords; ++i) words.push_back(ckpt::get_str(in));
  c.vocab = Vocab::from_words(words);
  if (c.vocab.size() != c.config.vocab_size)
    throw VersionError(path + ": vocab size " + std::to_string(c.vocab.size()) +
                       " does not match config " + std::to_string(c.config.vocab_size));
  std::uint64_t nparams = ckpt::get_u64(in);
  for (std::uint64_t i = 0; i < nparams; ++i) {
    std::string name = ckpt::get_str(in);
    Tensor value = ckpt::get_tensor(in);
    Tensor accum = ckpt::get_tensor(in);
    if (!value.same_shape(accum))
      throw FormatError(path + ": parameter \"" + name + "\" has mismatched state shapes");
    auto p = std::make_unique<Parameter>(name, std::move(value));
    p->accum = std::move(accum);
    c.params.owned.push_back(std::move(p));
  }
  ckpt::wire_roles(c.params, c.config);
  return c;
}

}  // namespace twowing
