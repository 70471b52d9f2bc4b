#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qfsum/backend.hpp"
#include "qfsum/corpus.hpp"
#include "qfsum/scorer.hpp"
#include "qfsum/weaklabel.hpp"

namespace qfsum {

struct GeneratedSummary {
  std::string doc_id;
  // index = output position within this summary.
  std::vector<Sentence> sentences;
  std::string generator_id;
};

struct Candidate {
  Sentence sentence;
  std::string doc_id;
  std::size_t doc_position = 0;
};

struct CandidatePool {
  std::string topic_id;
  // Canonical order: (document position, sentence output index).
  std::vector<Candidate> candidates;
};

/// Produces a query-focused summary of one document.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::string id() const = 0;
  /// `input` is the budgeted query + document text for this document.
  virtual GeneratedSummary generate(const QuerySpec& query, const Document& doc,
                                    const ModelInput& input) const = 0;
};

/// Top-m query-relevant sentences of the document, via select_extractive.
class ExtractiveGenerator final : public Generator {
 public:
  explicit ExtractiveGenerator(const Scorer& relevance, std::size_t m = kDefaultK);
  std::string id() const override;
  GeneratedSummary generate(const QuerySpec& query, const Document& doc, const ModelInput& input) const override;

 private:
  const Scorer& relevance_;
  std::size_t m_;
};

/// Remote "generate" op. The document field carries the already-truncated
/// document part of the model input; the reply text is segmented.
class ExternalGenerator final : public Generator {
 public:
  ExternalGenerator(std::shared_ptr<BackendConnection> connection, std::size_t max_new_tokens);
  std::string id() const override;
  GeneratedSummary generate(const QuerySpec& query, const Document& doc, const ModelInput& input) const override;

 private:
  std::shared_ptr<BackendConnection> connection_;
  std::size_t max_new_tokens_;
};

/// Connects to a backend that advertises "generate".
std::unique_ptr<ExternalGenerator> external_generator(const BackendConfig& cfg, std::size_t max_new_tokens);

struct GenerateOptions {
  std::size_t max_input_tokens = kDefaultMaxInputTokens;
  std::string separator = kDefaultSeparator;
  std::size_t parallelism = 1;
};

GeneratedSummary generate_document_summary(const QuerySpec& query, const Document& doc,
                                           const Generator& generator, const GenerateOptions& opts = {});

/// Generates a summary per document and pools all sentences in canonical
/// order. `processing_order`, when given, is the order documents are handed
/// to the generator (a permutation of document positions); it never changes
/// the result. Failures are rethrown as GenerationFailed naming the document.
CandidatePool generate_topic_candidates(const TopicSet& topic, const Generator& generator,
                                        const GenerateOptions& opts = {},
                                        std::span<const std::size_t> processing_order = {});

}  // namespace qfsum
