#pragma once

// Weak per-document reference summaries built by distant supervision:
//  1. the K sentences of a document most relevant to the query (weak
//     extractive summary), then
//  2. each of those replaced by its most similar gold-summary sentence not
//     already used for the same document (weak abstractive summary).

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "qfsum/corpus.hpp"
#include "qfsum/scorer.hpp"

namespace qfsum {

inline constexpr std::size_t kDefaultK = 3;
inline constexpr std::size_t kDefaultMaxInputTokens = 512;
inline constexpr const char* kDefaultSeparator = "[SEP]";

struct ExtractiveSelection {
  Sentence sentence;
  SimilarityScore score;
};

struct WeakExtractiveSummary {
  std::string doc_id;
  // Score descending, ties by ascending sentence index.
  std::vector<ExtractiveSelection> selections;
  std::size_t k_requested = kDefaultK;
};

struct Replacement {
  Sentence source;
  // The replacing gold sentence; its doc_id is the reference id. Equal to
  // `source` when fallback_used.
  Sentence gold;
  std::string gold_ref_id;
  SimilarityScore score;
  bool fallback_used = false;
};

struct WeakAbstractiveSummary {
  std::string doc_id;
  std::vector<Replacement> replacements;

  std::size_t fallback_count() const;
  /// Gold sentences joined in order.
  std::string target_text() const;
};

struct DocumentWeakLabels {
  WeakExtractiveSummary extractive;
  WeakAbstractiveSummary abstractive;
};

struct TrainingPair {
  std::string topic_id;
  std::string doc_id;
  std::string input_text;
  std::string target_text;
  std::size_t input_token_count = 0;
};

/// Query-plus-document text for a model with a token budget.
struct ModelInput {
  std::string text;
  // The (possibly truncated) document part alone.
  std::string document_part;
  std::size_t token_count = 0;
  bool truncated = false;
};

struct TrainingPairOptions {
  std::size_t k = kDefaultK;
  std::size_t max_input_tokens = kDefaultMaxInputTokens;
  std::string separator = kDefaultSeparator;
  // false: targets are the extractive selections verbatim.
  bool distant_supervision = true;
  std::size_t parallelism = 1;
};

/// Top-k sentences by score(query.combined, sentence.raw).
WeakExtractiveSummary select_extractive(const QuerySpec& query, const Document& doc, std::size_t k,
                                        const Scorer& relevance);

/// All sentences of all reference summaries, references in topic order.
std::vector<Sentence> gold_pool(const TopicSet& topic);

WeakAbstractiveSummary replace_with_gold(const WeakExtractiveSummary& weak_ext,
                                         std::span<const Sentence> gold_pool, const Scorer& paraphrase);

/// Both weak summaries for every document, in document order.
std::vector<DocumentWeakLabels> weak_label_topic(const TopicSet& topic, std::size_t k,
                                                 const ScorerBindings& scorers,
                                                 std::size_t parallelism = 1);

/// query.combined, a separator line, then the document text cut at a token
/// boundary so the whole input holds at most max_input_tokens tokens. The
/// query is never cut; QueryTooLong if it does not fit with the separator.
ModelInput build_model_input(const QuerySpec& query, std::string_view document_text,
                             std::size_t max_input_tokens = kDefaultMaxInputTokens,
                             std::string_view separator = kDefaultSeparator);

std::vector<TrainingPair> build_training_pairs(const TopicSet& topic, const ScorerBindings& scorers,
                                               const TrainingPairOptions& opts = {});

/// Same, from labels already computed by weak_label_topic.
std::vector<TrainingPair> training_pairs_from_labels(const TopicSet& topic,
                                                     std::span<const DocumentWeakLabels> labels,
                                                     const TrainingPairOptions& opts = {});

nlohmann::json to_json(const TrainingPair& pair);
nlohmann::json to_json(const std::string& topic_id, const DocumentWeakLabels& labels);

}  // namespace qfsum
