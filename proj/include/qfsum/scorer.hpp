#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "qfsum/corpus.hpp"

namespace qfsum {

/// The two model roles a scorer can be bound to: ranking sentences against a
/// query, and finding paraphrases among gold summary sentences.
enum class ScorerRole { QueryRelevance, Paraphrase };

std::string_view to_string(ScorerRole role);

struct SimilarityScore {
  double value = 0.0;
  std::string scorer_id;
};

using TextPair = std::pair<std::string, std::string>;

/// Sentence-pair similarity. Higher is more similar; only the order of
/// scores is meaningful. Ties are left to callers.
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual std::string id() const = 0;
  virtual SimilarityScore score_pair(std::string_view a, std::string_view b) const = 0;
  /// Element i equals score_pair(pairs[i]). The default maps score_pair.
  virtual std::vector<SimilarityScore> score_batch(std::span<const TextPair> pairs) const;
};

/// The two bindings a pipeline needs. Both may point at the same scorer.
struct ScorerBindings {
  const Scorer* query_relevance = nullptr;
  const Scorer* paraphrase = nullptr;

  const Scorer& get(ScorerRole role) const;
};

/// Document frequencies and average unit length for tf-idf and BM25.
/// Default-constructed statistics are unfitted.
class CorpusStatistics {
 public:
  CorpusStatistics() = default;

  /// df over `documents`; the average length is taken over `length_units`,
  /// or over `documents` when `length_units` is empty.
  static CorpusStatistics fit(std::span<const std::vector<std::string>> documents,
                              std::span<const std::vector<std::string>> length_units = {});

  /// df over the topic's documents, average length over its sentences (the
  /// units BM25 scores in this pipeline).
  static CorpusStatistics fit_topic(const TopicSet& topic, const NormalizeConfig& cfg = {});

  bool fitted() const { return num_documents_ > 0; }
  std::size_t num_documents() const { return num_documents_; }
  std::size_t document_frequency(const std::string& term) const;
  double average_length() const { return average_length_; }

 private:
  std::size_t num_documents_ = 0;
  double average_length_ = 0.0;
  std::unordered_map<std::string, std::size_t> df_;
};

/// |set(a) ∩ set(b)| over normalized tokens. Symmetric.
class OverlapScorer final : public Scorer {
 public:
  explicit OverlapScorer(NormalizeConfig cfg = {}) : cfg_(cfg) {}
  std::string id() const override { return "overlap"; }
  SimilarityScore score_pair(std::string_view a, std::string_view b) const override;

 private:
  NormalizeConfig cfg_;
};

/// Cosine of tf * idf vectors, idf = ln(1 + N / (1 + df)). Symmetric.
class TfidfCosineScorer final : public Scorer {
 public:
  explicit TfidfCosineScorer(std::shared_ptr<const CorpusStatistics> stats, NormalizeConfig cfg = {})
      : stats_(std::move(stats)), cfg_(cfg) {}
  std::string id() const override { return "tfidf"; }
  SimilarityScore score_pair(std::string_view a, std::string_view b) const override;

  double idf(const std::string& term) const;

 private:
  std::shared_ptr<const CorpusStatistics> stats_;
  NormalizeConfig cfg_;
};

/// Okapi BM25 with k1 = 1.2, b = 0.75 and idf = ln(1 + (N - df + 0.5) / (df + 0.5)).
/// Directional: `a` is the query, `b` the scored text. Sums over distinct
/// query terms.
class Bm25Scorer final : public Scorer {
 public:
  static constexpr double kK1 = 1.2;
  static constexpr double kB = 0.75;

  explicit Bm25Scorer(std::shared_ptr<const CorpusStatistics> stats, NormalizeConfig cfg = {})
      : stats_(std::move(stats)), cfg_(cfg) {}
  std::string id() const override { return "bm25"; }
  SimilarityScore score_pair(std::string_view query, std::string_view text) const override;

  double idf(const std::string& term) const;

 private:
  std::shared_ptr<const CorpusStatistics> stats_;
  NormalizeConfig cfg_;
};

enum class BuiltinScorerKind { Overlap, TfidfCosine, Bm25 };

/// Parses "overlap", "tfidf" (or "tfidf_cosine") and "bm25".
BuiltinScorerKind parse_builtin_scorer(std::string_view name);

/// Makes a built-in scorer. tf-idf and BM25 need `stats`; passing null gives
/// a scorer that throws UnfittedStatistics when used.
std::unique_ptr<Scorer> make_builtin_scorer(BuiltinScorerKind kind,
                                            std::shared_ptr<const CorpusStatistics> stats = nullptr,
                                            NormalizeConfig cfg = {});

}  // namespace qfsum
