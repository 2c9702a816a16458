#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "twowing/errors.hpp"
#include "twowing/rng.hpp"
#include "twowing/tensor.hpp"

namespace twowing {

inline bool is_sentence_punct(char c) {
  return c == '.' || c == ',' || c == ';' || c == '!' || c == '?';
}

/// Whitespace split, then trailing sentence punctuation peels off into its
/// own tokens (kept in original left-to-right order). Case and hyphens are
/// preserved. "network." becomes ["network", "."].
inline std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string raw;
  while (in >> raw) {
    std::size_t end = raw.size();
    while (end > 0 && is_sentence_punct(raw[end - 1])) --end;
    if (end > 0) out.push_back(raw.substr(0, end));
    for (std::size_t i = end; i < raw.size(); ++i) out.push_back(std::string(1, raw[i]));
  }
  return out;
}

/// Token-to-id map. Id 0 is the unknown token; known words get ids 1..n
/// ordered by descending frequency, ties by ascending surface.
class Vocab {
 public:
  Vocab() = default;

  /// Build from aggregate token counts.
  static Vocab from_counts(const std::map<std::string, std::size_t>& counts) {
    std::vector<std::pair<std::string, std::size_t>> items(counts.begin(), counts.end());
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    Vocab v;
    for (const auto& [word, n] : items) v.push(word);
    return v;
  }

  /// Rebuild from a word list in id order (ids 1..n), e.g. from a checkpoint.
  static Vocab from_words(const std::vector<std::string>& words) {
    Vocab v;
    for (const std::string& w : words) {
      if (v.ids_.count(w)) throw ValidationError("vocab word list repeats \"" + w + "\"");
      v.push(w);
    }
    return v;
  }

  /// Id for a surface; 0 when unknown.
  int id_of(const std::string& surface) const {
    auto it = ids_.find(surface);
    return it == ids_.end() ? 0 : it->second;
  }

  bool contains(const std::string& surface) const { return ids_.count(surface) > 0; }

  /// Total id count including the unknown slot.
  std::size_t size() const { return words_.size() + 1; }

  /// Known words in id order (index 0 of this list has id 1).
  const std::vector<std::string>& words() const { return words_; }

  std::vector<int> ids_of(const std::vector<std::string>& tokens) const {
    std::vector<int> out;
    out.reserve(tokens.size());
    for (const std::string& t : tokens) out.push_back(id_of(t));
    return out;
  }

 private:
  void push(const std::string& word) {
    ids_.emplace(word, static_cast<int>(words_.size()) + 1);
    words_.push_back(word);
  }

  std::vector<std::string> words_;
  std::unordered_map<std::string, int> ids_;
};

/// Count tokens of one text into an aggregate map.
inline void count_tokens(const std::string& text, std::map<std::string, std::size_t>& counts) {
  for (const std::string& t : tokenize(text)) ++counts[t];
}

/// Fresh embedding table, vocab_size x d, every row uniform(-0.01, 0.01).
inline Tensor init_embeddings(std::size_t vocab_size, std::size_t d, Rng& rng) {
  Tensor t({vocab_size, d});
  for (double& x : t.data()) x = rng.uniform(-0.01, 0.01);
  return t;
}

/// Read "word v1 ... vd" lines into a random-initialized table. Words absent
/// from the file keep their random rows; a word repeated in the file keeps
/// its first vector and logs a warning.
inline Tensor load_embeddings(const std::string& path, const Vocab& vocab, std::size_t d,
                              Rng& rng, std::ostream& warn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file " + path);
  Tensor table = init_embeddings(vocab.size(), d, rng);
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    std::vector<double> vec;
    double x;
    while (ls >> x) vec.push_back(x);
    if (vec.size() != d)
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(d) +
                        " values for \"" + word + "\", got " + std::to_string(vec.size()));
    if (!seen.insert(word).second) {
      warn << "warning: embedding file repeats \"" << word << "\" at line " << lineno
           << "; keeping the first vector\n";
      continue;
    }
    int id = vocab.id_of(word);
    if (id == 0) continue;  // includes genuinely unknown words
    for (std::size_t c = 0; c < d; ++c) table.at(static_cast<std::size_t>(id), c) = vec[c];
  }
  return table;
}

}  // namespace twowing
