#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "twowing/errors.hpp"
#include "twowing/text.hpp"

namespace twowing {

/// Claim labels. Internal codes: REFUTED 0, SUPPORTED 1, NEI 2.
enum class Label : int { Refuted = 0, Supported = 1, Nei = 2 };

inline const char* label_str(Label l) {
  switch (l) {
    case Label::Refuted: return "REFUTED";
    case Label::Supported: return "SUPPORTED";
    case Label::Nei: return "NEI";
  }
  throw ValidationError("label code out of range");
}

inline Label parse_label(const std::string& s) {
  if (s == "REFUTED") return Label::Refuted;
  if (s == "SUPPORTED") return Label::Supported;
  if (s == "NEI") return Label::Nei;
  throw ValidationError("unknown label \"" + s + "\" (expected SUPPORTED, REFUTED or NEI)");
}

using EvidencePair = std::pair<std::string, int>;  // (page title, sentence index)

struct ClaimRecord {
  long id = 0;
  std::string claim;
  Label label = Label::Nei;
  std::set<EvidencePair> gold_evidence;  // empty for NEI
};

struct WikiPage {
  std::string title;
  std::vector<std::string> sentences;
};

namespace detail {

inline nlohmann::json parse_line(const std::string& line, const std::string& path, std::size_t lineno) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded())
    throw ParseError(path + ":" + std::to_string(lineno) + ": malformed record");
  return j;
}

}  // namespace detail

/// Line-delimited claim records: {"id", "claim", "label", "evidence": [[title, idx]...]}.
inline std::vector<ClaimRecord> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file " + path);
  std::vector<ClaimRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = detail::parse_line(line, path, lineno);
    try {
      ClaimRecord r;
      r.id = j.at("id").get<long>();
      r.claim = j.at("claim").get<std::string>();
      r.label = parse_label(j.at("label").get<std::string>());
      for (const auto& pair : j.at("evidence")) {
        if (!pair.is_array() || pair.size() != 2)
          throw ValidationError("evidence entries must be [title, sentence_index] pairs");
        r.gold_evidence.emplace(pair[0].get<std::string>(), pair[1].get<int>());
      }
      if (r.label == Label::Nei && !r.gold_evidence.empty())
        throw ValidationError("NEI claims carry no gold evidence");
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

/// Line-delimited wiki pages: {"title", "sentences": [...]}.
inline std::vector<WikiPage> load_wiki(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open wiki file " + path);
  std::vector<WikiPage> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = detail::parse_line(line, path, lineno);
    try {
      WikiPage p;
      p.title = j.at("title").get<std::string>();
      for (const auto& s : j.at("sentences")) p.sentences.push_back(s.get<std::string>());
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::unordered_map<std::string, const WikiPage*> wiki_by_title(const std::vector<WikiPage>& pages) {
  std::unordered_map<std::string, const WikiPage*> m;
  for (const WikiPage& p : pages) {
    if (!m.emplace(p.title, &p).second)
      throw ValidationError("duplicate wiki title \"" + p.title + "\"");
  }
  return m;
}

// ---- ranked-title file: `claim_id, rank, title, score` per line ----

struct RetrievedTitle {
  long claim_id = 0;
  int rank = 0;  // 1-based
  std::string title;
  double score = 0.0;
};

inline void write_retrieved(std::ostream& out, const std::vector<RetrievedTitle>& rows) {
  for (const RetrievedTitle& r : rows) {
    out << r.claim_id << ", " << r.rank << ", " << r.title << ", "
        << std::fixed << std::setprecision(6) << r.score << "\n";
    out.unsetf(std::ios_base::floatfield);
  }
}

/// Titles may contain commas, so the first two fields parse from the left
/// and the score from the right.
inline std::vector<RetrievedTitle> load_retrieved(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open retrieved-titles file " + path);
  std::vector<RetrievedTitle> out;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    std::size_t a = s.find_first_not_of(" \t");
    std::size_t b = s.find_last_not_of(" \t");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::size_t c1 = line.find(',');
    std::size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    std::size_t c3 = line.rfind(',');
    if (c2 == std::string::npos || c3 <= c2)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected `claim_id, rank, title, score`");
    try {
      RetrievedTitle r;
      r.claim_id = std::stol(trim(line.substr(0, c1)));
      r.rank = std::stoi(trim(line.substr(c1 + 1, c2 - c1 - 1)));
      r.title = trim(line.substr(c2 + 1, c3 - c2 - 1));
      r.score = std::stod(trim(line.substr(c3 + 1)));
      out.push_back(std::move(r));
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": numeric field does not parse");
    }
  }
  return out;
}

inline std::unordered_map<long, std::vector<RetrievedTitle>> retrieved_by_claim(
    const std::vector<RetrievedTitle>& rows) {
  std::unordered_map<long, std::vector<RetrievedTitle>> m;
  for (const RetrievedTitle& r : rows) m[r.claim_id].push_back(r);
  for (auto& [id, v] : m)
    std::sort(v.begin(), v.end(), [](const RetrievedTitle& a, const RetrievedTitle& b) { return a.rank < b.rank; });
  return m;
}

// ---- evidence candidates for one claim ----

struct Candidate {
  std::string title;
  int index = 0;
  std::string text;
  bool gold = false;
};

/// All sentences of the retrieved pages, page-rank order then sentence
/// order, capped at `max_candidates` without ever dropping gold sentences.
/// Sentences with no tokens are skipped (they cannot be embedded).
inline std::vector<Candidate> assemble_candidates(const ClaimRecord& claim,
                                                  const std::vector<RetrievedTitle>& ranked,
                                                  const std::unordered_map<std::string, const WikiPage*>& wiki,
                                                  std::size_t max_candidates) {
  std::vector<Candidate> all;
  for (const RetrievedTitle& r : ranked) {
    auto it = wiki.find(r.title);
    if (it == wiki.end()) throw ValidationError("retrieved title \"" + r.title + "\" is not in the wiki corpus");
    const WikiPage& page = *it->second;
    for (std::size_t i = 0; i < page.sentences.size(); ++i) {
      if (tokenize(page.sentences[i]).empty()) continue;
      Candidate c;
      c.title = page.title;
      c.index = static_cast<int>(i);
      c.text = page.sentences[i];
      c.gold = claim.gold_evidence.count({c.title, c.index}) > 0;
      all.push_back(std::move(c));
    }
  }
  if (all.size() <= max_candidates) return all;
  std::size_t gold_n = 0;
  for (const Candidate& c : all)
    if (c.gold) ++gold_n;
  std::vector<Candidate> kept;
  kept.reserve(std::max(max_candidates, gold_n));
  std::size_t budget = max_candidates > gold_n ? max_candidates - gold_n : 0;
  for (const Candidate& c : all) {
    if (c.gold) {
      kept.push_back(c);
    } else if (budget > 0) {
      kept.push_back(c);
      --budget;
    }
  }
  return kept;
}

// ---- prediction dump: line-delimited records ----

struct PredictionRecord {
  long claim_id = 0;
  Label predicted = Label::Nei;
  std::vector<std::tuple<std::string, int, double>> alphas;  // (title, idx, alpha) per candidate
  std::set<EvidencePair> evidence;                           // the selected subset
};

inline void write_predictions(std::ostream& out, const std::vector<PredictionRecord>& preds) {
  for (const PredictionRecord& p : preds) {
    nlohmann::json j;
    j["claim_id"] = p.claim_id;
    j["predicted_label"] = label_str(p.predicted);
    nlohmann::json alphas = nlohmann::json::array();
    for (const auto& [title, idx, a] : p.alphas) alphas.push_back({title, idx, a});
    j["alphas"] = std::move(alphas);
    nlohmann::json ev = nlohmann::json::array();
    for (const EvidencePair& e : p.evidence) ev.push_back({e.first, e.second});
    j["evidence"] = std::move(ev);
    out << j.dump() << "\n";
  }
}

inline std::vector<PredictionRecord> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open predictions file " + path);
  std::vector<PredictionRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = detail::parse_line(line, path, lineno);
    try {
      PredictionRecord p;
      p.claim_id = j.at("claim_id").get<long>();
      p.predicted = parse_label(j.at("predicted_label").get<std::string>());
      if (j.contains("alphas"))
        for (const auto& a : j["alphas"])
          p.alphas.emplace_back(a[0].get<std::string>(), a[1].get<int>(), a[2].get<double>());
      for (const auto& e : j.at("evidence")) p.evidence.emplace(e[0].get<std::string>(), e[1].get<int>());
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace twowing
