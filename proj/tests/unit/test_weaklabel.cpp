#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "qfsum/error.hpp"
#include "qfsum/weaklabel.hpp"
#include "synthetic.hpp"

namespace qfsum {
namespace {

// Scores looked up by the second text; unknown texts score 0.
class TableScorer final : public Scorer {
 public:
  explicit TableScorer(std::map<std::string, double> table) : table_(std::move(table)) {}
  std::string id() const override { return "table"; }
  SimilarityScore score_pair(std::string_view, std::string_view b) const override {
    auto it = table_.find(std::string(b));
    return {it == table_.end() ? 0.0 : it->second, id()};
  }

 private:
  std::map<std::string, double> table_;
};

Document make_doc(const std::string& id, const std::vector<std::string>& sentences) {
  Document d;
  d.doc_id = id;
  for (std::size_t i = 0; i < sentences.size(); ++i) d.sentences.push_back(make_sentence(sentences[i], id, i));
  return d;
}

std::vector<Sentence> make_pool(const std::vector<std::pair<std::string, std::string>>& ref_and_text) {
  std::vector<Sentence> pool;
  std::map<std::string, std::size_t> next;
  for (const auto& [ref, text] : ref_and_text) pool.push_back(make_sentence(text, ref, next[ref]++));
  return pool;
}

TEST(SelectExtractive, TopKByScoreWithEarlierIndexOnTies) {
  const auto doc = make_doc("d", {"s0", "s1", "s2", "s3", "s4"});
  TableScorer scorer({{"s0", 1}, {"s1", 5}, {"s2", 3}, {"s3", 5}, {"s4", 3}});
  const auto q = QuerySpec::make("q", std::nullopt);
  const auto sel = select_extractive(q, doc, 3, scorer);
  ASSERT_EQ(sel.selections.size(), 3u);
  EXPECT_EQ(sel.selections[0].sentence.index, 1u);
  EXPECT_EQ(sel.selections[1].sentence.index, 3u);
  EXPECT_EQ(sel.selections[2].sentence.index, 2u);
  EXPECT_EQ(sel.k_requested, 3u);
  EXPECT_EQ(sel.selections[0].score.value, 5.0);
}

TEST(SelectExtractive, ShortDocumentsKeepEverySentence) {
  const auto doc = make_doc("d", {"only one", "and two"});
  OverlapScorer scorer;
  const auto sel = select_extractive(QuerySpec::make("two", std::nullopt), doc, 3, scorer);
  EXPECT_EQ(sel.selections.size(), 2u);
  EXPECT_EQ(sel.selections[0].sentence.index, 1u);
  EXPECT_THROW(select_extractive(QuerySpec::make("q", std::nullopt), doc, 0, scorer), InvalidConfig);
}

TEST(SelectExtractive, MatchesBruteForceOnSyntheticCorpus) {
  testing::SyntheticParams p;
  p.topics = 5;
  OverlapScorer scorer;
  for (const auto& t : testing::synthetic_topics(p)) {
    for (const auto& d : t.documents) {
      const auto sel = select_extractive(t.query, d, 3, scorer);
      // Brute force: sentence i is selected iff fewer than 3 sentences beat it
      // (strictly higher score, or equal score and lower index).
      std::set<std::size_t> expected;
      for (std::size_t i = 0; i < d.sentences.size(); ++i) {
        const double si = scorer.score_pair(t.query.combined, d.sentences[i].raw).value;
        std::size_t better = 0;
        for (std::size_t j = 0; j < d.sentences.size(); ++j) {
          const double sj = scorer.score_pair(t.query.combined, d.sentences[j].raw).value;
          better += sj > si || (sj == si && j < i);
        }
        if (better < 3) expected.insert(i);
      }
      std::set<std::size_t> got;
      for (const auto& s : sel.selections) got.insert(s.sentence.index);
      EXPECT_EQ(got, expected);
    }
  }
}

TEST(ReplaceWithGold, PicksBestUnusedGold) {
  const auto doc = make_doc("d", {"alpha beta", "beta gamma", "gamma delta"});
  OverlapScorer overlap;
  WeakExtractiveSummary ext;
  ext.doc_id = "d";
  for (const auto& s : doc.sentences) ext.selections.push_back({s, {}});
  const auto pool = make_pool({{"A", "alpha beta"}, {"A", "beta gamma delta"}, {"B", "gamma delta"}});
  const auto abs = replace_with_gold(ext, pool, overlap);
  ASSERT_EQ(abs.replacements.size(), 3u);
  EXPECT_EQ(abs.replacements[0].gold.raw, "alpha beta");
  // "alpha beta" is taken, so "beta gamma" goes to "beta gamma delta" (2 shared words).
  EXPECT_EQ(abs.replacements[1].gold.raw, "beta gamma delta");
  EXPECT_EQ(abs.replacements[2].gold.raw, "gamma delta");
  EXPECT_EQ(abs.replacements[2].gold_ref_id, "B");
  EXPECT_EQ(abs.fallback_count(), 0u);
  EXPECT_EQ(abs.target_text(), "alpha beta beta gamma delta gamma delta");
}

TEST(ReplaceWithGold, TiesGoToSmallerReferenceAndIndex) {
  WeakExtractiveSummary ext;
  ext.doc_id = "d";
  ext.selections.push_back({make_sentence("x", "d", 0), {}});
  TableScorer flat({});
  const auto pool = make_pool({{"B", "b0"}, {"A", "a0"}, {"A", "a1"}});
  const auto abs = replace_with_gold(ext, pool, flat);
  EXPECT_EQ(abs.replacements[0].gold.raw, "a0");
}

TEST(ReplaceWithGold, FallsBackWhenPoolIsExhausted) {
  WeakExtractiveSummary ext;
  ext.doc_id = "d";
  for (int i = 0; i < 3; ++i) ext.selections.push_back({make_sentence("s" + std::to_string(i), "d", i), {}});
  OverlapScorer overlap;
  const auto pool = make_pool({{"A", "s0"}});
  const auto abs = replace_with_gold(ext, pool, overlap);
  EXPECT_EQ(abs.fallback_count(), 2u);
  EXPECT_FALSE(abs.replacements[0].fallback_used);
  EXPECT_TRUE(abs.replacements[1].fallback_used);
  EXPECT_EQ(abs.replacements[1].gold.raw, "s1");
  EXPECT_EQ(abs.replacements[1].score.value, 0.0);
  EXPECT_THROW(replace_with_gold(ext, {}, overlap), EmptyGoldPool);
}

TEST(WeakLabelTopic, DistinctGoldPerDocumentButReusableAcrossDocuments) {
  testing::SyntheticParams p;
  p.topics = 1;
  p.references = 1;
  p.reference_sentences = 3;  // exactly k gold sentences
  const auto topic = testing::synthetic_topics(p).front();
  OverlapScorer overlap;
  const auto labels = weak_label_topic(topic, 3, {&overlap, &overlap});
  ASSERT_EQ(labels.size(), topic.documents.size());
  std::set<std::string> used_across;
  for (const auto& l : labels) {
    EXPECT_EQ(l.abstractive.fallback_count(), 0u);
    std::set<std::pair<std::string, std::size_t>> ids;
    for (const auto& r : l.abstractive.replacements) {
      EXPECT_TRUE(ids.insert({r.gold_ref_id, r.gold.index}).second);
      used_across.insert(r.gold.raw);
    }
  }
  // Every document uses all 3 gold sentences, so each is reused.
  EXPECT_EQ(used_across.size(), 3u);
}

TEST(WeakLabelTopic, ParallelismDoesNotChangeResults) {
  testing::SyntheticParams p;
  p.topics = 1;
  p.documents = 12;
  const auto topic = testing::synthetic_topics(p).front();
  OverlapScorer overlap;
  const auto serial = weak_label_topic(topic, 3, {&overlap, &overlap}, 1);
  const auto parallel = weak_label_topic(topic, 3, {&overlap, &overlap}, 4);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i)
    EXPECT_EQ(to_json(topic.topic_id, serial[i]), to_json(topic.topic_id, parallel[i]));
}

std::string words(std::size_t n, const std::string& stem) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += (i ? " " : "") + stem + std::to_string(i);
  return out;
}

TEST(ModelInput, TruncatesDocumentToBudget) {
  const auto q = QuerySpec::make(words(10, "q"), std::nullopt);
  const auto in = build_model_input(q, words(600, "d"), 512);
  EXPECT_EQ(in.token_count, 512u);
  EXPECT_TRUE(in.truncated);
  EXPECT_EQ(tokenize(in.text).size(), 512u);
  EXPECT_EQ(tokenize(in.document_part).size(), 501u);  // 512 - 10 query - 1 separator
  EXPECT_EQ(in.text.rfind(q.combined + "\n[SEP]\n", 0), 0u);
  EXPECT_EQ(in.document_part.back(), '0');  // ends on "d500"
}

TEST(ModelInput, ShortDocumentIsKeptWhole) {
  const auto q = QuerySpec::make("a query", std::nullopt);
  const auto in = build_model_input(q, "Short doc. Here.", 512);
  EXPECT_FALSE(in.truncated);
  EXPECT_EQ(in.document_part, "Short doc. Here.");
  EXPECT_EQ(in.token_count, 2u + 1u + 3u);
}

TEST(ModelInput, QueryMustFit) {
  const auto q = QuerySpec::make(words(20, "q"), std::nullopt);
  EXPECT_THROW(build_model_input(q, "doc", 20), QueryTooLong);
  EXPECT_THROW(build_model_input(q, "doc", 10), QueryTooLong);
  EXPECT_NO_THROW(build_model_input(q, "doc", 22));
}

TEST(TrainingPairs, TargetsFollowSupervisionMode) {
  testing::SyntheticParams p;
  p.topics = 1;
  p.documents = 2;
  const auto topic = testing::synthetic_topics(p).front();
  OverlapScorer overlap;
  TrainingPairOptions opts;
  const auto ds = build_training_pairs(topic, {&overlap, &overlap}, opts);
  opts.distant_supervision = false;
  const auto plain = build_training_pairs(topic, {&overlap, &overlap}, opts);
  ASSERT_EQ(ds.size(), 2u);
  const auto labels = weak_label_topic(topic, 3, {&overlap, &overlap});
  EXPECT_EQ(ds[0].target_text, labels[0].abstractive.target_text());
  std::string ext;
  for (const auto& s : labels[0].extractive.selections) ext += (ext.empty() ? "" : " ") + s.sentence.raw;
  EXPECT_EQ(plain[0].target_text, ext);
  EXPECT_EQ(ds[0].input_text, plain[0].input_text);
  const auto j = to_json(ds[1]);
  EXPECT_EQ(j.at("doc_id"), topic.documents[1].doc_id);
  EXPECT_TRUE(j.contains("input") && j.contains("target") && j.contains("topic_id"));
}

TEST(TrainingPairs, QueryTooLongFailsBeforeScoring) {
  testing::SyntheticParams p;
  p.topics = 1;
  const auto topic = testing::synthetic_topics(p).front();
  OverlapScorer overlap;
  TrainingPairOptions opts;
  opts.max_input_tokens = 3;
  EXPECT_THROW(build_training_pairs(topic, {&overlap, &overlap}, opts), QueryTooLong);
}

}  // namespace
}  // namespace qfsum
