#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "twowing/data.hpp"
#include "twowing/rng.hpp"

namespace twowing {

/// A claims + wiki pair with plantable lexical evidence. Every claim names
/// one entity that owns one page; SUPPORTED claims have an echo sentence on
/// the page, REFUTED claims a negated one, NEI claims only filler. Entity
/// titles make the gold page retrievable with title score 1.0, so the
/// retrieval rate on this corpus is 1.0 by construction.
struct SyntheticData {
  std::vector<ClaimRecord> claims;
  std::vector<WikiPage> pages;
};

inline SyntheticData make_synthetic(std::size_t n_claims, std::uint64_t seed) {
  static const std::vector<std::string> kPrefixes = {
      "Bal", "Cor", "Dun", "Fen", "Gor", "Hab", "Jil", "Kov", "Lum", "Mar",
      "Nor", "Pel", "Quin", "Rav", "Sol", "Tam", "Ul", "Vex", "Wim", "Zeb"};
  static const std::vector<std::string> kSuffixes = {
      "ania", "bury", "crest", "dale", "ford", "gate", "holm", "land", "mere", "port",
      "shire", "ton", "vale", "wick"};
  static const std::vector<std::string> kProfessions = {
      "painter", "sailor", "farmer", "doctor", "singer", "miner", "baker", "pilot", "teacher", "hunter"};
  static const std::vector<std::string> kFillers = {
      " lies beside a quiet river.",
      " was founded long ago.",
      " keeps a small garden.",
      " appears in many old stories.",
      " hosts a market each spring.",
      " stands on a windy hill.",
  };
  constexpr std::size_t kExtraPages = 8;

  std::vector<std::string> names;
  for (const std::string& p : kPrefixes)
    for (const std::string& s : kSuffixes) names.push_back(p + s);
  if (n_claims + kExtraPages > names.size())
    throw ArgumentError("synthetic generator supports at most " +
                        std::to_string(names.size() - kExtraPages) + " claims");

  Rng rng(seed);
  rng.shuffle(names);

  SyntheticData data;
  auto fill_sentences = [&](const std::string& entity, std::size_t n) {
    std::vector<std::size_t> order(kFillers.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(entity + kFillers[order[i]]);
    return out;
  };

  for (std::size_t i = 0; i < n_claims; ++i) {
    const std::string& entity = names[i];
    const std::string& prof = kProfessions[rng.index(kProfessions.size())];
    ClaimRecord rec;
    rec.id = static_cast<long>(i) + 1;
    rec.claim = entity + " is a famous " + prof + ".";
    WikiPage page;
    page.title = entity;
    page.sentences = fill_sentences(entity, 3);
    switch (i % 3) {
      case 0:
        rec.label = Label::Supported;
        break;
      case 1:
        rec.label = Label::Refuted;
        break;
      default:
        rec.label = Label::Nei;
        break;
    }
    if (rec.label != Label::Nei) {
      std::string gold = rec.label == Label::Supported
                             ? entity + " is a famous " + prof + "."
                             : entity + " was never a " + prof + ".";
      std::size_t slot = rng.index(page.sentences.size() + 1);
      page.sentences.insert(page.sentences.begin() + static_cast<long>(slot), gold);
      rec.gold_evidence.insert({entity, static_cast<int>(slot)});
    }
    data.claims.push_back(std::move(rec));
    data.pages.push_back(std::move(page));
  }

  for (std::size_t i = 0; i < kExtraPages; ++i) {
    const std::string& entity = names[n_claims + i];
    WikiPage page;
    page.title = entity;
    page.sentences = fill_sentences(entity, 3);
    data.pages.push_back(std::move(page));
  }
  return data;
}

inline void write_synthetic_claims(std::ostream& out, const std::vector<ClaimRecord>& claims) {
  for (const ClaimRecord& r : claims) {
    nlohmann::json j;
    j["id"] = r.id;
    j["claim"] = r.claim;
    j["label"] = label_str(r.label);
    nlohmann::json ev = nlohmann::json::array();
    for (const EvidencePair& e : r.gold_evidence) ev.push_back({e.first, e.second});
    j["evidence"] = std::move(ev);
    out << j.dump() << "\n";
  }
}

inline void write_synthetic_wiki(std::ostream& out, const std::vector<WikiPage>& pages) {
  for (const WikiPage& p : pages) {
    nlohmann::json j;
    j["title"] = p.title;
    j["sentences"] = p.sentences;
    out << j.dump() << "\n";
  }
}

}  // namespace twowing
