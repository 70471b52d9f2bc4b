#pragma once

// End-to-end runs over a corpus: weak labels, training-pair export,
// summarization, evaluation and the ablation table. Per-topic failures are
// collected rather than aborting the run.

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "qfsum/assemble.hpp"
#include "qfsum/backend.hpp"
#include "qfsum/corpus.hpp"
#include "qfsum/generate.hpp"
#include "qfsum/rouge.hpp"
#include "qfsum/scorer.hpp"
#include "qfsum/stats.hpp"
#include "qfsum/weaklabel.hpp"

namespace qfsum {

struct ScorerSpec {
  std::string kind = "overlap";  // overlap | tfidf | bm25 | external
  std::optional<BackendConfig> backend;
};

struct GeneratorSpec {
  std::string kind = "builtin";  // builtin | external
  std::size_t sentences = kDefaultK;
  std::size_t max_new_tokens = 128;
  std::optional<BackendConfig> backend;
};

struct PipelineConfig {
  std::vector<std::filesystem::path> train_corpora;
  std::vector<std::filesystem::path> eval_corpora;
  ScorerSpec relevance_scorer;
  ScorerSpec paraphrase_scorer;
  GeneratorSpec generator;
  // Generator fine-tuned on extractive targets; the "without distant
  // supervision" ablation reuses `generator` when unset.
  std::optional<GeneratorSpec> generator_without_ds;
  std::size_t k = kDefaultK;
  std::size_t budget_words = kDefaultBudgetWords;
  std::size_t max_input_tokens = kDefaultMaxInputTokens;
  std::string separator = kDefaultSeparator;
  bool trigram_blocking = true;
  OverflowMode overflow = OverflowMode::Truncate;
  RougeConfig rouge;
  SplitConfig split;
  bool use_narrative = true;
  NormalizeConfig normalize;
  std::size_t parallelism = 1;
  std::filesystem::path output_dir = "out";

  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static PipelineConfig from_json(const nlohmann::json& j);
  /// Checks numeric ranges and that referenced corpus paths exist.
  void validate() const;
  LoadOptions load_options() const;
};

PipelineConfig load_config(const std::filesystem::path& path);
BackendConfig backend_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BackendConfig& cfg);

/// Opens external backends on first use and shares one connection per
/// (transport, address) for the whole run.
class Backends {
 public:
  std::shared_ptr<BackendConnection> connect(const BackendConfig& cfg, std::string_view op);

 private:
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<BackendConnection>> open_;
};

/// Scorers for one topic: tf-idf and BM25 are fitted on the topic's documents.
class TopicScorers {
 public:
  TopicScorers(const PipelineConfig& cfg, Backends& backends, const TopicSet& topic);
  const ScorerBindings& bindings() const { return bindings_; }

 private:
  std::unique_ptr<Scorer> relevance_;
  std::unique_ptr<Scorer> paraphrase_;
  ScorerBindings bindings_;
};

std::unique_ptr<Generator> make_generator(const GeneratorSpec& spec, Backends& backends, const Scorer& relevance);

struct TopicFailure {
  std::string topic_id;
  std::string kind;
  std::string message;
};

enum class PipelineVariant {
  Full,
  WithoutDistantSupervision,
  WithoutTrigramBlocking,
  WithoutWeakSupervision,  // rank raw document sentences directly
};

std::string_view to_string(PipelineVariant v);

struct WeakLabelRun {
  std::vector<nlohmann::json> records;  // one per document
  std::size_t fallbacks = 0;
  std::vector<TopicFailure> failures;
};

struct PairExportRun {
  std::vector<TrainingPair> train;
  std::vector<TrainingPair> validation;
  std::vector<std::string> validation_topics;
  std::vector<TopicFailure> failures;
};

struct SummarizeRun {
  std::vector<FinalSummary> summaries;  // topic order, failed topics omitted
  std::vector<TopicFailure> failures;
};

struct AblationRow {
  PipelineVariant variant = PipelineVariant::Full;
  double recall = 0.0;  // corpus mean R-1 recall, percent
  double f1 = 0.0;      // corpus mean R-1 F1, percent
  double delta_recall = 0.0;
  double delta_f1 = 0.0;
  std::optional<TTestResult> ttest;  // per-topic R-1 F1 vs the full model
  std::string ttest_error;
  bool same_generator_as_full = false;
  std::size_t failed_topics = 0;
};

struct AblationTable {
  std::vector<AblationRow> rows;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

WeakLabelRun run_weak_labels(const PipelineConfig& cfg, std::span<const TopicSet> topics, Backends& backends);

/// Splits topics into train/validation with cfg.split, then builds pairs.
PairExportRun run_export_pairs(const PipelineConfig& cfg, std::span<const TopicSet> topics, Backends& backends,
                               bool distant_supervision = true);

FinalSummary summarize_topic(const TopicSet& topic, const PipelineConfig& cfg, Backends& backends,
                             PipelineVariant variant = PipelineVariant::Full);

SummarizeRun run_summarize(const PipelineConfig& cfg, std::span<const TopicSet> topics, Backends& backends,
                           PipelineVariant variant = PipelineVariant::Full);

AblationTable run_ablation(const PipelineConfig& cfg, std::span<const TopicSet> topics, Backends& backends);

/// Loads and concatenates several corpora.
std::vector<TopicSet> load_corpora(std::span<const std::filesystem::path> paths, const LoadOptions& opts);

}  // namespace qfsum
