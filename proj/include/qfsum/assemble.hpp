#pragma once

// Final summary construction: rank the pooled candidates against the query,
// drop redundant ones by trigram blocking, and fill the word budget.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "qfsum/generate.hpp"
#include "qfsum/scorer.hpp"

namespace qfsum {

inline constexpr std::size_t kDefaultBudgetWords = 250;

struct RankedCandidate {
  Candidate candidate;
  SimilarityScore rank_score;
  std::size_t rank = 0;           // 1-based
  std::size_t pool_position = 0;  // index in the canonical pool
};

struct FinalSummary {
  std::string topic_id;
  std::vector<Sentence> sentences;
  std::size_t token_count = 0;
  bool truncated_last = false;

  std::string text() const;
};

/// What happens to the first sentence that does not fit the budget.
enum class OverflowMode {
  Truncate,  // cut it at a token boundary to fill the budget exactly
  Drop,      // leave it out
};

/// Ranks every candidate by score(query.combined, sentence.raw), descending;
/// ties keep canonical pool order. Throws EmptyPool.
std::vector<RankedCandidate> rank_candidates(const CandidatePool& pool, const QuerySpec& query,
                                             const Scorer& relevance);

/// Greedy scan in rank order: a candidate is rejected when any of its
/// lowercased word trigrams already occurs among accepted candidates.
/// Candidates with fewer than 3 tokens are always accepted.
std::vector<RankedCandidate> trigram_block(std::span<const RankedCandidate> ranked);

/// Appends whole sentences in rank order while they fit `budget_words`;
/// assembly stops at the first sentence that does not fit.
FinalSummary assemble_summary(const std::string& topic_id, std::span<const RankedCandidate> accepted,
                              std::size_t budget_words = kDefaultBudgetWords,
                              OverflowMode overflow = OverflowMode::Truncate);

/// Word trigrams of a text as used for blocking (lowercased, unstemmed).
std::vector<std::string> blocking_trigrams(std::string_view text);

/// Keeps the first `n` tokens of a sentence, cutting raw text after token n.
Sentence truncate_sentence(const Sentence& s, std::size_t n);

nlohmann::json to_json(const FinalSummary& summary);

}  // namespace qfsum
