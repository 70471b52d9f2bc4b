#pragma once

// ROUGE-1, ROUGE-2 and ROUGE-SU4 with clipped counts, recall / precision /
// F1, multi-reference aggregation and corpus-level averaging.
//
// SU4 units are the union of skip-bigrams (ordered pairs with at most 4
// intervening tokens) and unigrams, i.e. ROUGE-1.5.5 "-2 4 -u".

#include <compare>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "qfsum/assemble.hpp"
#include "qfsum/corpus.hpp"

namespace qfsum {

inline constexpr std::size_t kDefaultSkipGap = 4;
inline constexpr std::size_t kDefaultLengthLimit = 250;

struct NGramMultiset {
  std::size_t n = 1;
  std::map<std::vector<std::string>, std::size_t> counts;

  std::size_t total() const;
};

struct SkipUnit {
  std::string first;
  std::string second;  // empty for a unigram unit
  bool unigram = false;

  auto operator<=>(const SkipUnit&) const = default;
};

struct SkipUnitMultiset {
  std::size_t max_gap = kDefaultSkipGap;
  std::map<SkipUnit, std::size_t> counts;

  std::size_t total() const;
  std::size_t pair_total() const;
  std::size_t unigram_total() const;
};

enum class RougeVariant { R1, R2, SU4 };

struct RougeScore {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;

  static RougeScore from_counts(std::size_t overlap, std::size_t candidate_total, std::size_t reference_total);
  static RougeScore from_pr(double precision, double recall);
};

enum class MultiRefMode { Average, Best };

struct RougeConfig {
  bool stem = false;
  MultiRefMode mode = MultiRefMode::Average;
  std::size_t length_limit = kDefaultLengthLimit;
  std::size_t skip_gap = kDefaultSkipGap;
};

struct TopicRouge {
  RougeScore r1;
  RougeScore r2;
  RougeScore rsu4;

  const RougeScore& get(RougeVariant v) const;
};

struct RougeReport {
  std::map<std::string, TopicRouge> per_topic;
  TopicRouge corpus;
  RougeConfig config;

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

/// A system summary to score: topic id plus text.
struct SystemSummary {
  std::string topic_id;
  std::string text;
};

NGramMultiset ngram_multiset(std::span<const std::string> tokens, std::size_t n);
SkipUnitMultiset skip_unit_multiset(std::span<const std::string> tokens, std::size_t max_gap = kDefaultSkipGap);

RougeScore rouge_score(std::span<const std::string> candidate, std::span<const std::string> reference,
                       RougeVariant variant, std::size_t skip_gap = kDefaultSkipGap);

/// Average: component-wise mean over references. Best: the reference with
/// the highest F1, first one on ties. Throws NoReferences.
RougeScore multi_reference(std::span<const std::string> candidate,
                           std::span<const std::vector<std::string>> references, RougeVariant variant,
                           MultiRefMode mode, std::size_t skip_gap = kDefaultSkipGap);

/// Scores one summary per topic against that topic's references. The
/// candidate is cut to length_limit tokens first; the corpus row is the
/// unweighted mean of the per-topic rows. Throws UnknownTopic.
RougeReport evaluate_corpus(std::span<const SystemSummary> summaries, std::span<const TopicSet> topics,
                            const RougeConfig& config = {});
RougeReport evaluate_corpus(std::span<const FinalSummary> summaries, std::span<const TopicSet> topics,
                            const RougeConfig& config = {});

std::string_view to_string(RougeVariant v);
std::string_view to_string(MultiRefMode m);
MultiRefMode parse_multi_ref_mode(std::string_view s);
nlohmann::json to_json(const RougeScore& s);
nlohmann::json to_json(const RougeConfig& c);

}  // namespace qfsum
