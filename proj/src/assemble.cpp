#include "qfsum/assemble.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "qfsum/error.hpp"

namespace qfsum {

using nlohmann::json;

std::string FinalSummary::text() const {
  std::string out;
  for (const auto& s : sentences) {
    if (!out.empty()) out += ' ';
    out += s.raw;
  }
  return out;
}

std::vector<RankedCandidate> rank_candidates(const CandidatePool& pool, const QuerySpec& query,
                                             const Scorer& relevance) {
  if (pool.candidates.empty()) throw EmptyPool(pool.topic_id);
  std::vector<TextPair> pairs;
  pairs.reserve(pool.candidates.size());
  for (const auto& c : pool.candidates) pairs.emplace_back(query.combined, c.sentence.raw);
  const auto scores = relevance.score_batch(pairs);

  std::vector<std::size_t> order(pool.candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a].value > scores[b].value; });

  std::vector<RankedCandidate> ranked;
  ranked.reserve(order.size());
  for (std::size_t r = 0; r < order.size(); ++r)
    ranked.push_back({pool.candidates[order[r]], scores[order[r]], r + 1, order[r]});
  return ranked;
}

std::vector<std::string> blocking_trigrams(std::string_view text) {
  const auto words = normalized_words(text, NormalizeConfig{.lowercase = true, .stem = false});
  std::vector<std::string> grams;
  for (std::size_t i = 0; i + 3 <= words.size(); ++i) grams.push_back(words[i] + ' ' + words[i + 1] + ' ' + words[i + 2]);
  return grams;
}

std::vector<RankedCandidate> trigram_block(std::span<const RankedCandidate> ranked) {
  std::vector<RankedCandidate> accepted;
  std::unordered_set<std::string> seen;
  for (const auto& rc : ranked) {
    const auto grams = blocking_trigrams(rc.candidate.sentence.raw);
    const bool blocked = std::any_of(grams.begin(), grams.end(), [&](const std::string& g) { return seen.count(g) > 0; });
    if (blocked) continue;
    seen.insert(grams.begin(), grams.end());
    accepted.push_back(rc);
  }
  return accepted;
}

Sentence truncate_sentence(const Sentence& s, std::size_t n) {
  const auto tokens = tokenize(s.raw);
  if (n >= tokens.size()) return s;
  Sentence out = s;
  out.raw = n == 0 ? std::string() : s.raw.substr(0, tokens[n - 1].end());
  if (out.tokens.size() > n) out.tokens.resize(n);
  return out;
}

FinalSummary assemble_summary(const std::string& topic_id, std::span<const RankedCandidate> accepted,
                              std::size_t budget_words, OverflowMode overflow) {
  if (budget_words == 0) throw InvalidConfig("budget_words must be >= 1");
  FinalSummary out;
  out.topic_id = topic_id;
  for (const auto& rc : accepted) {
    const Sentence& s = rc.candidate.sentence;
    const std::size_t len = tokenize(s.raw).size();
    if (out.token_count + len <= budget_words) {
      out.sentences.push_back(s);
      out.token_count += len;
      if (out.token_count == budget_words) break;
      continue;
    }
    if (overflow == OverflowMode::Truncate) {
      const std::size_t room = budget_words - out.token_count;
      out.sentences.push_back(truncate_sentence(s, room));
      out.token_count += room;
      out.truncated_last = true;
    }
    break;
  }
  return out;
}

json to_json(const FinalSummary& summary) {
  return json{{"topic_id", summary.topic_id}, {"summary", summary.text()}, {"token_count", summary.token_count}};
}

}  // namespace qfsum
