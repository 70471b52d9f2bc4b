#include "qfsum/scorer.hpp"

#include <cmath>
#include <map>
#include <set>

#include "qfsum/error.hpp"

namespace qfsum {

std::string_view to_string(ScorerRole role) {
  return role == ScorerRole::QueryRelevance ? "query_relevance" : "paraphrase";
}

std::vector<SimilarityScore> Scorer::score_batch(std::span<const TextPair> pairs) const {
  std::vector<SimilarityScore> out;
  out.reserve(pairs.size());
  for (const auto& [a, b] : pairs) out.push_back(score_pair(a, b));
  return out;
}

const Scorer& ScorerBindings::get(ScorerRole role) const {
  const Scorer* s = role == ScorerRole::QueryRelevance ? query_relevance : paraphrase;
  if (s == nullptr) throw InvalidConfig(std::string("no scorer bound to role ") + std::string(to_string(role)));
  return *s;
}

CorpusStatistics CorpusStatistics::fit(std::span<const std::vector<std::string>> documents,
                                       std::span<const std::vector<std::string>> length_units) {
  CorpusStatistics stats;
  stats.num_documents_ = documents.size();
  for (const auto& doc : documents) {
    std::set<std::string> uniq(doc.begin(), doc.end());
    for (const auto& term : uniq) ++stats.df_[term];
  }
  const auto units = length_units.empty() ? documents : length_units;
  std::size_t total = 0;
  for (const auto& u : units) total += u.size();
  stats.average_length_ = units.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(units.size());
  return stats;
}

CorpusStatistics CorpusStatistics::fit_topic(const TopicSet& topic, const NormalizeConfig& cfg) {
  std::vector<std::vector<std::string>> docs;
  std::vector<std::vector<std::string>> sentences;
  for (const auto& d : topic.documents) {
    std::vector<std::string> doc_words;
    for (const auto& s : d.sentences) {
      auto words = normalized_words(s.raw, cfg);
      doc_words.insert(doc_words.end(), words.begin(), words.end());
      sentences.push_back(std::move(words));
    }
    docs.push_back(std::move(doc_words));
  }
  return fit(docs, sentences);
}

std::size_t CorpusStatistics::document_frequency(const std::string& term) const {
  auto it = df_.find(term);
  return it == df_.end() ? 0 : it->second;
}

SimilarityScore OverlapScorer::score_pair(std::string_view a, std::string_view b) const {
  const auto wa = normalized_words(a, cfg_);
  const auto wb = normalized_words(b, cfg_);
  const std::set<std::string> sa(wa.begin(), wa.end());
  const std::set<std::string> sb(wb.begin(), wb.end());
  std::size_t common = 0;
  for (const auto& w : sa) common += sb.count(w);
  return {static_cast<double>(common), id()};
}

double TfidfCosineScorer::idf(const std::string& term) const {
  if (!stats_ || !stats_->fitted()) throw UnfittedStatistics(id());
  const double n = static_cast<double>(stats_->num_documents());
  const double df = static_cast<double>(stats_->document_frequency(term));
  return std::log(1.0 + n / (1.0 + df));
}

SimilarityScore TfidfCosineScorer::score_pair(std::string_view a, std::string_view b) const {
  if (!stats_ || !stats_->fitted()) throw UnfittedStatistics(id());
  auto weights = [&](std::string_view text) {
    std::map<std::string, double> tf;
    for (auto& w : normalized_words(text, cfg_)) tf[w] += 1.0;
    for (auto& [term, v] : tf) v *= idf(term);
    return tf;
  };
  const auto va = weights(a);
  const auto vb = weights(b);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [term, w] : va) {
    na += w * w;
    if (auto it = vb.find(term); it != vb.end()) dot += w * it->second;
  }
  for (const auto& [term, w] : vb) nb += w * w;
  if (na == 0.0 || nb == 0.0) return {0.0, id()};
  return {dot / (std::sqrt(na) * std::sqrt(nb)), id()};
}

double Bm25Scorer::idf(const std::string& term) const {
  if (!stats_ || !stats_->fitted()) throw UnfittedStatistics(id());
  const double n = static_cast<double>(stats_->num_documents());
  const double df = static_cast<double>(stats_->document_frequency(term));
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

SimilarityScore Bm25Scorer::score_pair(std::string_view query, std::string_view text) const {
  if (!stats_ || !stats_->fitted()) throw UnfittedStatistics(id());
  const auto qwords = normalized_words(query, cfg_);
  const auto twords = normalized_words(text, cfg_);
  if (qwords.empty() || twords.empty()) return {0.0, id()};
  std::map<std::string, double> tf;
  for (const auto& w : twords) tf[w] += 1.0;
  const double dl = static_cast<double>(twords.size());
  const double avgdl = stats_->average_length() > 0.0 ? stats_->average_length() : dl;
  const double norm = kK1 * (1.0 - kB + kB * dl / avgdl);
  double score = 0.0;
  for (const auto& term : std::set<std::string>(qwords.begin(), qwords.end())) {
    auto it = tf.find(term);
    if (it == tf.end()) continue;
    score += idf(term) * it->second * (kK1 + 1.0) / (it->second + norm);
  }
  return {score, id()};
}

BuiltinScorerKind parse_builtin_scorer(std::string_view name) {
  if (name == "overlap") return BuiltinScorerKind::Overlap;
  if (name == "tfidf" || name == "tfidf_cosine") return BuiltinScorerKind::TfidfCosine;
  if (name == "bm25") return BuiltinScorerKind::Bm25;
  throw InvalidConfig("unknown scorer '" + std::string(name) + "'");
}

std::unique_ptr<Scorer> make_builtin_scorer(BuiltinScorerKind kind,
                                            std::shared_ptr<const CorpusStatistics> stats,
                                            NormalizeConfig cfg) {
  switch (kind) {
    case BuiltinScorerKind::Overlap:
      return std::make_unique<OverlapScorer>(cfg);
    case BuiltinScorerKind::TfidfCosine:
      return std::make_unique<TfidfCosineScorer>(std::move(stats), cfg);
    case BuiltinScorerKind::Bm25:
      return std::make_unique<Bm25Scorer>(std::move(stats), cfg);
  }
  throw InvalidConfig("unknown scorer kind");
}

}  // namespace qfsum
