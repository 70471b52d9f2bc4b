#include "qfsum/weaklabel.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>

#include "qfsum/error.hpp"
#include "qfsum/parallel.hpp"

namespace qfsum {

using nlohmann::json;

std::size_t WeakAbstractiveSummary::fallback_count() const {
  return static_cast<std::size_t>(std::count_if(replacements.begin(), replacements.end(),
                                                [](const Replacement& r) { return r.fallback_used; }));
}

std::string WeakAbstractiveSummary::target_text() const {
  std::string out;
  for (const auto& r : replacements) {
    if (!out.empty()) out += ' ';
    out += r.gold.raw;
  }
  return out;
}

WeakExtractiveSummary select_extractive(const QuerySpec& query, const Document& doc, std::size_t k,
                                        const Scorer& relevance) {
  if (k == 0) throw InvalidConfig("k must be positive");
  WeakExtractiveSummary out;
  out.doc_id = doc.doc_id;
  out.k_requested = k;

  std::vector<TextPair> pairs;
  pairs.reserve(doc.sentences.size());
  for (const auto& s : doc.sentences) pairs.emplace_back(query.combined, s.raw);
  const auto scores = relevance.score_batch(pairs);

  std::vector<std::size_t> order(doc.sentences.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a].value > scores[b].value;
  });
  order.resize(std::min(k, order.size()));
  for (std::size_t i : order) out.selections.push_back({doc.sentences[i], scores[i]});
  return out;
}

std::vector<Sentence> gold_pool(const TopicSet& topic) {
  std::vector<Sentence> pool;
  for (const auto& ref : topic.references)
    for (const auto& s : ref.sentences) {
      Sentence g = s;
      g.doc_id = ref.ref_id;
      pool.push_back(std::move(g));
    }
  return pool;
}

WeakAbstractiveSummary replace_with_gold(const WeakExtractiveSummary& weak_ext,
                                         std::span<const Sentence> pool, const Scorer& paraphrase) {
  if (pool.empty()) throw EmptyGoldPool(weak_ext.doc_id);
  WeakAbstractiveSummary out;
  out.doc_id = weak_ext.doc_id;

  const std::size_t g = pool.size();
  std::vector<TextPair> pairs;
  pairs.reserve(weak_ext.selections.size() * g);
  for (const auto& sel : weak_ext.selections)
    for (const auto& gold : pool) pairs.emplace_back(sel.sentence.raw, gold.raw);
  const auto scores = paraphrase.score_batch(pairs);

  auto earlier = [&](std::size_t a, std::size_t b) {
    return std::tie(pool[a].doc_id, pool[a].index) < std::tie(pool[b].doc_id, pool[b].index);
  };

  std::vector<bool> used(g, false);
  for (std::size_t si = 0; si < weak_ext.selections.size(); ++si) {
    const Sentence& source = weak_ext.selections[si].sentence;
    std::size_t best = g;
    for (std::size_t gi = 0; gi < g; ++gi) {
      if (used[gi]) continue;
      if (best == g) {
        best = gi;
        continue;
      }
      const double v = scores[si * g + gi].value;
      const double bv = scores[si * g + best].value;
      if (v > bv || (v == bv && earlier(gi, best))) best = gi;
    }
    Replacement r;
    r.source = source;
    if (best == g) {
      r.gold = source;
      r.fallback_used = true;
      r.score = {0.0, paraphrase.id()};
    } else {
      used[best] = true;
      r.gold = pool[best];
      r.gold_ref_id = pool[best].doc_id;
      r.score = scores[si * g + best];
    }
    out.replacements.push_back(std::move(r));
  }
  return out;
}

std::vector<DocumentWeakLabels> weak_label_topic(const TopicSet& topic, std::size_t k,
                                                 const ScorerBindings& scorers, std::size_t parallelism) {
  const auto pool = gold_pool(topic);
  const Scorer& relevance = scorers.get(ScorerRole::QueryRelevance);
  const Scorer& paraphrase = scorers.get(ScorerRole::Paraphrase);
  std::vector<DocumentWeakLabels> out(topic.documents.size());
  parallel_for(topic.documents.size(), parallelism, [&](std::size_t i) {
    out[i].extractive = select_extractive(topic.query, topic.documents[i], k, relevance);
    out[i].abstractive = replace_with_gold(out[i].extractive, pool, paraphrase);
  });
  return out;
}

ModelInput build_model_input(const QuerySpec& query, std::string_view document_text,
                             std::size_t max_input_tokens, std::string_view separator) {
  const std::size_t query_tokens = tokenize(query.combined).size();
  const std::size_t sep_tokens = tokenize(separator).size();
  if (query_tokens >= max_input_tokens || query_tokens + sep_tokens > max_input_tokens)
    throw QueryTooLong(query_tokens, max_input_tokens);
  const std::size_t budget = max_input_tokens - query_tokens - sep_tokens;

  ModelInput in;
  const auto doc_tokens = tokenize(document_text);
  if (doc_tokens.size() <= budget) {
    in.document_part = std::string(document_text);
  } else {
    in.truncated = true;
    in.document_part = budget == 0 ? std::string() : std::string(document_text.substr(0, doc_tokens[budget - 1].end()));
  }
  in.text = query.combined;
  if (!separator.empty()) {
    in.text += '\n';
    in.text += separator;
  }
  in.text += '\n';
  in.text += in.document_part;
  in.token_count = query_tokens + sep_tokens + std::min(budget, doc_tokens.size());
  return in;
}

std::vector<TrainingPair> training_pairs_from_labels(const TopicSet& topic,
                                                     std::span<const DocumentWeakLabels> labels,
                                                     const TrainingPairOptions& opts) {
  std::vector<TrainingPair> pairs;
  pairs.reserve(topic.documents.size());
  for (std::size_t i = 0; i < topic.documents.size(); ++i) {
    const auto& doc = topic.documents[i];
    const auto input = build_model_input(topic.query, doc.text(), opts.max_input_tokens, opts.separator);
    TrainingPair p;
    p.topic_id = topic.topic_id;
    p.doc_id = doc.doc_id;
    p.input_text = input.text;
    p.input_token_count = input.token_count;
    if (opts.distant_supervision) {
      p.target_text = labels[i].abstractive.target_text();
    } else {
      for (const auto& sel : labels[i].extractive.selections) {
        if (!p.target_text.empty()) p.target_text += ' ';
        p.target_text += sel.sentence.raw;
      }
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

std::vector<TrainingPair> build_training_pairs(const TopicSet& topic, const ScorerBindings& scorers,
                                               const TrainingPairOptions& opts) {
  // Fail on an oversized query before spending any scoring calls.
  build_model_input(topic.query, "", opts.max_input_tokens, opts.separator);
  const auto labels = weak_label_topic(topic, opts.k, scorers, opts.parallelism);
  return training_pairs_from_labels(topic, labels, opts);
}

json to_json(const TrainingPair& pair) {
  return json{{"topic_id", pair.topic_id}, {"doc_id", pair.doc_id}, {"input", pair.input_text}, {"target", pair.target_text}};
}

json to_json(const std::string& topic_id, const DocumentWeakLabels& labels) {
  json ext = json::array();
  for (const auto& s : labels.extractive.selections)
    ext.push_back({{"index", s.sentence.index}, {"text", s.sentence.raw}, {"score", s.score.value}});
  json abs = json::array();
  for (const auto& r : labels.abstractive.replacements) {
    json row{{"source_index", r.source.index}, {"text", r.gold.raw}, {"score", r.score.value},
             {"fallback", r.fallback_used}};
    if (r.fallback_used) {
      row["gold_ref_id"] = nullptr;
      row["gold_index"] = nullptr;
    } else {
      row["gold_ref_id"] = r.gold_ref_id;
      row["gold_index"] = r.gold.index;
    }
    abs.push_back(std::move(row));
  }
  return json{{"topic_id", topic_id},
              {"doc_id", labels.extractive.doc_id},
              {"k", labels.extractive.k_requested},
              {"extractive", std::move(ext)},
              {"abstractive", std::move(abs)}};
}

}  // namespace qfsum
