#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "fake_backend.hpp"
#include "qfsum/error.hpp"
#include "qfsum/pipeline.hpp"
#include "synthetic.hpp"

namespace qfsum {
namespace {

using nlohmann::json;

std::vector<TopicSet> corpus(std::size_t topics = 6, std::uint64_t seed = 3) {
  testing::SyntheticParams p;
  p.topics = topics;
  p.seed = seed;
  return testing::synthetic_topics(p);
}

TEST(Config, JsonRoundTrip) {
  PipelineConfig cfg;
  cfg.k = 4;
  cfg.relevance_scorer.kind = "bm25";
  cfg.paraphrase_scorer.kind = "external";
  cfg.paraphrase_scorer.backend = BackendConfig{Transport::TcpSocket, "localhost:9000", std::chrono::milliseconds(500), 8};
  cfg.generator_without_ds = GeneratorSpec{"builtin", 2, 64, std::nullopt};
  cfg.overflow = OverflowMode::Drop;
  cfg.rouge.mode = MultiRefMode::Best;
  cfg.rouge.stem = true;
  cfg.split.seed = 42;
  cfg.use_narrative = false;
  const auto j = cfg.to_json();
  const auto back = PipelineConfig::from_json(j);
  EXPECT_EQ(back.to_json(), j);
  EXPECT_EQ(back.paraphrase_scorer.backend->request_timeout.count(), 500);
}

TEST(Config, MissingKeysKeepDefaults) {
  const auto cfg = PipelineConfig::from_json(json::object());
  EXPECT_EQ(cfg.k, 3u);
  EXPECT_EQ(cfg.budget_words, 250u);
  EXPECT_EQ(cfg.max_input_tokens, 512u);
  EXPECT_DOUBLE_EQ(cfg.split.validation_fraction, 0.2);
  EXPECT_EQ(cfg.rouge.mode, MultiRefMode::Average);
  EXPECT_FALSE(cfg.rouge.stem);
  EXPECT_TRUE(cfg.trigram_blocking);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(PipelineConfig::from_json({{"kk", 3}}), InvalidConfig);
  EXPECT_THROW(PipelineConfig::from_json({{"rouge", {{"stemming", true}}}}), InvalidConfig);
  EXPECT_THROW(PipelineConfig::from_json({{"overflow", "wrap"}}), InvalidConfig);
  EXPECT_THROW(PipelineConfig::from_json({{"k", "three"}}), InvalidConfig);
  EXPECT_THROW(backend_from_json({{"transport", "pigeon"}, {"address", "x"}}), InvalidConfig);
}

TEST(Config, ValidateChecksRangesAndPaths) {
  PipelineConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.k = 0;
  EXPECT_THROW(cfg.validate(), InvalidConfig);
  cfg = {};
  cfg.eval_corpora = {"/nonexistent/corpus.json"};
  EXPECT_THROW(cfg.validate(), InvalidConfig);
  cfg = {};
  cfg.relevance_scorer.kind = "external";
  EXPECT_THROW(cfg.validate(), InvalidConfig);
  cfg = {};
  cfg.relevance_scorer.kind = "word2vec";
  EXPECT_THROW(cfg.validate(), InvalidConfig);
  cfg = {};
  cfg.split.validation_fraction = 1.0;
  EXPECT_THROW(cfg.validate(), InvalidConfig);
}

TEST(Summarize, OneBudgetedSummaryPerTopic) {
  const auto topics = corpus();
  PipelineConfig cfg;
  cfg.budget_words = 40;
  Backends backends;
  const auto run = run_summarize(cfg, topics, backends);
  EXPECT_TRUE(run.failures.empty());
  ASSERT_EQ(run.summaries.size(), topics.size());
  for (std::size_t i = 0; i < topics.size(); ++i) {
    EXPECT_EQ(run.summaries[i].topic_id, topics[i].topic_id);
    EXPECT_LE(run.summaries[i].token_count, 40u);
    EXPECT_GT(run.summaries[i].token_count, 0u);
  }
}

TEST(Summarize, ParallelismAndRepetitionGiveIdenticalOutput) {
  const auto topics = corpus(8);
  PipelineConfig cfg;
  for (const char* scorer : {"overlap", "tfidf", "bm25"}) {
    cfg.relevance_scorer.kind = scorer;
    Backends backends;
    cfg.parallelism = 1;
    const auto a = run_summarize(cfg, topics, backends);
    cfg.parallelism = 4;
    const auto b = run_summarize(cfg, topics, backends);
    ASSERT_EQ(a.summaries.size(), b.summaries.size());
    for (std::size_t i = 0; i < a.summaries.size(); ++i) EXPECT_EQ(a.summaries[i].text(), b.summaries[i].text());
  }
}

TEST(Summarize, PerTopicFailuresAreCollected) {
  const auto topics = corpus(3);
  PipelineConfig cfg;
  cfg.generator.kind = "external";
  cfg.generator.backend = BackendConfig{};
  cfg.generator.backend->address_or_command = std::string(QFSUM_FAKE_BACKEND) + " generate-error";
  Backends backends;
  const auto run = run_summarize(cfg, topics, backends);
  EXPECT_TRUE(run.summaries.empty());
  ASSERT_EQ(run.failures.size(), 3u);
  EXPECT_EQ(run.failures[0].kind, "GenerationFailed");
  EXPECT_EQ(run.failures[0].topic_id, topics[0].topic_id);
}

TEST(Summarize, ExternalBackendsShareOneConnection) {
  testing::FakeTcpServer server({});
  const auto topics = corpus(4);
  PipelineConfig cfg;
  BackendConfig b{Transport::TcpSocket, server.address(), std::chrono::milliseconds(10000), 64};
  cfg.relevance_scorer = {"external", b};
  cfg.paraphrase_scorer = {"external", b};
  cfg.generator = {"external", 3, 64, b};
  cfg.parallelism = 3;
  {
    Backends backends;
    const auto run = run_summarize(cfg, topics, backends);
    EXPECT_TRUE(run.failures.empty());
    EXPECT_EQ(run.summaries.size(), 4u);
  }
  EXPECT_EQ(server.connections(), 1);
}

TEST(Summarize, UnreachableBackendFailsEveryTopic) {
  const auto topics = corpus(2);
  PipelineConfig cfg;
  cfg.relevance_scorer.kind = "external";
  cfg.relevance_scorer.backend = BackendConfig{};
  cfg.relevance_scorer.backend->address_or_command = std::string(QFSUM_FAKE_BACKEND) + " exit-on-hello";
  Backends backends;
  const auto run = run_summarize(cfg, topics, backends);
  ASSERT_EQ(run.failures.size(), 2u);
  EXPECT_EQ(run.failures[0].kind, "BackendUnavailable");
}

TEST(Variants, WithoutWeakSupervisionRanksRawSentences) {
  const auto topics = corpus(2);
  PipelineConfig cfg;
  cfg.budget_words = 1000;
  cfg.generator.sentences = 1;
  Backends backends;
  const auto full = summarize_topic(topics[0], cfg, backends);
  const auto raw = summarize_topic(topics[0], cfg, backends, PipelineVariant::WithoutWeakSupervision);
  // One sentence per document versus every (non-blocked) sentence.
  EXPECT_EQ(full.sentences.size(), topics[0].documents.size());
  EXPECT_GT(raw.sentences.size(), full.sentences.size());
}

TEST(Variants, TrigramBlockingSwitch) {
  // Two identical documents: blocking removes the duplicates.
  auto topics = corpus(1);
  topics[0].documents[1].sentences = topics[0].documents[0].sentences;
  PipelineConfig cfg;
  cfg.budget_words = 1000;
  Backends backends;
  const auto blocked = summarize_topic(topics[0], cfg, backends);
  const auto unblocked = summarize_topic(topics[0], cfg, backends, PipelineVariant::WithoutTrigramBlocking);
  auto duplicate_raws = [](const FinalSummary& s) {
    std::set<std::string> seen;
    std::size_t dups = 0;
    for (const auto& x : s.sentences) dups += !seen.insert(x.raw).second;
    return dups;
  };
  EXPECT_EQ(duplicate_raws(blocked), 0u);
  EXPECT_EQ(duplicate_raws(unblocked), 3u);
  cfg.trigram_blocking = false;
  EXPECT_EQ(summarize_topic(topics[0], cfg, backends).sentences.size(), unblocked.sentences.size());
}

TEST(Ablation, FourRowsWithSelfComparisonFirst) {
  const auto topics = corpus(6);
  PipelineConfig cfg;
  cfg.budget_words = 60;
  Backends backends;
  const auto table = run_ablation(cfg, topics, backends);
  ASSERT_EQ(table.rows.size(), 4u);
  const auto& full = table.rows[0];
  EXPECT_EQ(full.variant, PipelineVariant::Full);
  EXPECT_EQ(format_percent(full.delta_f1), "0.00");
  EXPECT_EQ(format_percent(full.delta_recall), "0.00");
  EXPECT_FALSE(full.ttest.has_value());
  EXPECT_EQ(full.ttest_error, "DegenerateSample");
  EXPECT_TRUE(table.rows[1].same_generator_as_full);
  EXPECT_EQ(table.rows[3].variant, PipelineVariant::WithoutWeakSupervision);
  for (const auto& r : table.rows) {
    EXPECT_GE(r.f1, 0.0);
    EXPECT_LE(r.f1, 100.0);
    EXPECT_EQ(r.failed_topics, 0u);
  }
  const auto j = table.to_json();
  ASSERT_EQ(j.at("rows").size(), 4u);
  for (const auto& row : j["rows"])
    for (const char* key : {"variant", "r1_recall", "r1_f1", "delta_recall_pct", "delta_f1_pct", "significant"})
      EXPECT_TRUE(row.contains(key)) << key;
  EXPECT_NE(table.to_text().find("without_trigram_blocking"), std::string::npos);
}

TEST(Ablation, SeparateGeneratorWithoutDistantSupervision) {
  const auto topics = corpus(4);
  PipelineConfig cfg;
  cfg.generator_without_ds = GeneratorSpec{"builtin", 1, 64, std::nullopt};
  Backends backends;
  const auto table = run_ablation(cfg, topics, backends);
  EXPECT_FALSE(table.rows[1].same_generator_as_full);
}

TEST(WeakLabels, OneRecordPerDocument) {
  const auto topics = corpus(3);
  PipelineConfig cfg;
  Backends backends;
  const auto run = run_weak_labels(cfg, topics, backends);
  EXPECT_EQ(run.records.size(), 15u);
  EXPECT_EQ(run.fallbacks, 0u);
  EXPECT_EQ(run.records[0].at("extractive").size(), 3u);
  EXPECT_EQ(run.records[0].at("abstractive").size(), 3u);
  EXPECT_EQ(run.records[0].at("k"), 3);
}

TEST(ExportPairs, SplitsByTopic) {
  const auto topics = corpus(10);
  PipelineConfig cfg;
  Backends backends;
  const auto run = run_export_pairs(cfg, topics, backends);
  EXPECT_EQ(run.validation_topics.size(), 2u);
  EXPECT_EQ(run.validation.size(), 2u * 5u);
  EXPECT_EQ(run.train.size(), 8u * 5u);
  for (const auto& p : run.validation)
    EXPECT_NE(std::find(run.validation_topics.begin(), run.validation_topics.end(), p.topic_id),
              run.validation_topics.end());
}

TEST(Corpora, DuplicateTopicAcrossFilesIsRejected) {
  const auto dir = std::filesystem::temp_directory_path() / "qfsum_test_corpora";
  std::filesystem::create_directories(dir);
  testing::SyntheticParams p;
  p.topics = 2;
  const auto text = testing::synthetic_corpus_json(p).dump();
  std::ofstream(dir / "one.json") << text;
  std::ofstream(dir / "two.json") << text;
  const std::vector<std::filesystem::path> paths{dir / "one.json", dir / "two.json"};
  EXPECT_THROW(load_corpora(paths, {}), MalformedCorpus);
  EXPECT_EQ(load_corpora(std::span(paths).first(1), {}).size(), 2u);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace qfsum
