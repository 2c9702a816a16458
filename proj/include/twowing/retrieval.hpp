#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "twowing/data.hpp"
#include "twowing/errors.hpp"
#include "twowing/text.hpp"

namespace twowing {

inline bool starts_uppercase(const std::string& token) {
  return !token.empty() && std::isupper(static_cast<unsigned char>(token[0])) != 0;
}

/// Maximal runs of capitalized tokens, each run joined into one mention.
/// Sentence-initial tokens count; punctuation tokens break runs.
inline std::vector<std::string> detect_entity_mentions(const std::string& claim) {
  std::vector<std::string> mentions;
  std::string run;
  for (const std::string& t : tokenize(claim)) {
    if (starts_uppercase(t)) {
      if (!run.empty()) run += ' ';
      run += t;
    } else if (!run.empty()) {
      mentions.push_back(run);
      run.clear();
    }
  }
  if (!run.empty()) mentions.push_back(run);
  return mentions;
}

/// Title strings tokenize like claims after underscores and parentheses
/// become spaces, so "Weekly_Idol" and "(1995_film)" contribute plain words.
inline std::vector<std::string> title_words(const std::string& title) {
  std::string s = title;
  for (char& c : s)
    if (c == '_' || c == '(' || c == ')') c = ' ';
  return tokenize(s);
}

inline std::string lowercased(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

struct RankedTitle {
  std::string title;
  double score = 0.0;
};

/// Inverted index from title words to titles, plus per-page body vocabulary.
/// Immutable once built.
class PageIndex {
 public:
  struct Entry {
    std::set<std::string> title_vocab;
    std::string first_word;   // the title's first word matches case-insensitively
    std::string first_lower;
    std::set<std::string> page_vocab;
  };

  static PageIndex build(const std::vector<WikiPage>& pages, std::ostream& warn) {
    PageIndex idx;
    for (const WikiPage& page : pages) {
      if (idx.entries_.count(page.title))
        throw ValidationError("duplicate wiki title \"" + page.title + "\"");
      Entry e;
      std::vector<std::string> words = title_words(page.title);
      if (words.empty()) {
        warn << "warning: title \"" << page.title << "\" has no words; page not indexed\n";
        continue;
      }
      e.title_vocab.insert(words.begin(), words.end());
      e.first_word = words.front();
      e.first_lower = lowercased(words.front());
      for (const std::string& s : page.sentences)
        for (const std::string& t : tokenize(s)) e.page_vocab.insert(t);
      idx.register_entry(page.title, std::move(e));
    }
    return idx;
  }

  /// Score one title against a claim. Returns false when the title shares no
  /// word with the claim and must be discarded.
  bool score_title(const std::set<std::string>& claim_vocab, const std::set<std::string>& mention_vocab,
                   const std::string& title, double& score) const {
    const Entry& e = entries_.at(title);
    std::size_t in_claim = covered(e, claim_vocab);
    if (in_claim == 0) return false;
    std::size_t in_mentions = covered(e, mention_vocab);
    double title_score = static_cast<double>(std::max(in_claim, in_mentions)) / static_cast<double>(e.title_vocab.size());
    if (title_score == 1.0) {
      score = title_score;
      return true;
    }
    std::size_t hit = 0;
    for (const std::string& w : claim_vocab)
      if (e.page_vocab.count(w)) ++hit;
    double page_score = claim_vocab.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(claim_vocab.size());
    score = title_score + page_score;
    return true;
  }

  /// Top-k titles by score descending, ties by title ascending. Only titles
  /// sharing at least one word with the claim are considered.
  std::vector<RankedTitle> retrieve_topk(const std::string& claim, std::size_t k) const {
    std::vector<std::string> tokens = tokenize(claim);
    std::set<std::string> claim_vocab(tokens.begin(), tokens.end());
    std::set<std::string> mention_vocab;
    for (const std::string& m : detect_entity_mentions(claim))
      for (const std::string& w : tokenize(m)) mention_vocab.insert(w);

    std::set<std::string> candidates;
    for (const std::string& w : claim_vocab) {
      auto it = word_to_titles_.find(w);
      if (it == word_to_titles_.end()) continue;
      candidates.insert(it->second.begin(), it->second.end());
    }

    std::vector<RankedTitle> scored;
    for (const std::string& title : candidates) {
      double s = 0.0;
      if (score_title(claim_vocab, mention_vocab, title, s)) scored.push_back({title, s});
    }
    std::sort(scored.begin(), scored.end(), [](const RankedTitle& a, const RankedTitle& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.title < b.title;
    });
    if (scored.size() > k) scored.resize(k);
    return scored;
  }

  std::size_t page_count() const { return entries_.size(); }

  std::size_t indexed_word_count() const { return word_to_titles_.size(); }

  /// Titles whose words include the given one; empty set when unindexed.
  const std::set<std::string>& titles_for_word(const std::string& word) const {
    static const std::set<std::string> none;
    auto it = word_to_titles_.find(word);
    return it == word_to_titles_.end() ? none : it->second;
  }

  const std::map<std::string, Entry>& entries() const { return entries_; }

  // ---- snapshot (deterministic: sorted keys, fixed layout) ----

  void save(std::ostream& out) const {
    nlohmann::json j;
    j["format"] = "twowing-index";
    j["version"] = 1;
    nlohmann::json titles;
    for (const auto& [title, e] : entries_) {
      nlohmann::json t;
      t["title_vocab"] = std::vector<std::string>(e.title_vocab.begin(), e.title_vocab.end());
      t["first_word"] = e.first_word;
      t["page_vocab"] = std::vector<std::string>(e.page_vocab.begin(), e.page_vocab.end());
      titles[title] = std::move(t);
    }
    j["titles"] = std::move(titles);
    out << j.dump(1) << "\n";
  }

  static PageIndex load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open index file " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object() || j.value("format", "") != "twowing-index")
      throw FormatError(path + " is not an index snapshot");
    if (j.value("version", 0) != 1)
      throw VersionError(path + ": unsupported index version");
    PageIndex idx;
    for (const auto& [title, t] : j.at("titles").items()) {
      Entry e;
      for (const auto& w : t.at("title_vocab")) e.title_vocab.insert(w.get<std::string>());
      e.first_word = t.at("first_word").get<std::string>();
      e.first_lower = lowercased(e.first_word);
      for (const auto& w : t.at("page_vocab")) e.page_vocab.insert(w.get<std::string>());
      idx.register_entry(title, std::move(e));
    }
    return idx;
  }

 private:
  void register_entry(const std::string& title, Entry e) {
    for (const std::string& w : e.title_vocab) word_to_titles_[w].insert(title);
    if (e.first_lower != e.first_word) word_to_titles_[e.first_lower].insert(title);
    entries_.emplace(title, std::move(e));
  }

  /// Title words found in the vocab; the first title word also matches its
  /// lowercase form (claims often lowercase sentence-initial entities).
  static std::size_t covered(const Entry& e, const std::set<std::string>& vocab) {
    std::size_t n = 0;
    for (const std::string& w : e.title_vocab) {
      if (vocab.count(w) || (w == e.first_word && vocab.count(e.first_lower))) ++n;
    }
    return n;
  }

  std::map<std::string, Entry> entries_;
  std::map<std::string, std::set<std::string>> word_to_titles_;
};

}  // namespace twowing
