#include "qfsum/rouge.hpp"

#include <algorithm>
#include <sstream>

#include "qfsum/error.hpp"

namespace qfsum {

using nlohmann::json;

std::size_t NGramMultiset::total() const {
  std::size_t t = 0;
  for (const auto& [k, c] : counts) t += c;
  return t;
}

std::size_t SkipUnitMultiset::total() const { return pair_total() + unigram_total(); }

std::size_t SkipUnitMultiset::pair_total() const {
  std::size_t t = 0;
  for (const auto& [u, c] : counts)
    if (!u.unigram) t += c;
  return t;
}

std::size_t SkipUnitMultiset::unigram_total() const {
  std::size_t t = 0;
  for (const auto& [u, c] : counts)
    if (u.unigram) t += c;
  return t;
}

RougeScore RougeScore::from_pr(double precision, double recall) {
  RougeScore s;
  s.precision = precision;
  s.recall = recall;
  s.f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  return s;
}

RougeScore RougeScore::from_counts(std::size_t overlap, std::size_t candidate_total, std::size_t reference_total) {
  const double p = candidate_total == 0 ? 0.0 : static_cast<double>(overlap) / static_cast<double>(candidate_total);
  const double r = reference_total == 0 ? 0.0 : static_cast<double>(overlap) / static_cast<double>(reference_total);
  return from_pr(p, r);
}

const RougeScore& TopicRouge::get(RougeVariant v) const {
  switch (v) {
    case RougeVariant::R1:
      return r1;
    case RougeVariant::R2:
      return r2;
    case RougeVariant::SU4:
      return rsu4;
  }
  return r1;
}

NGramMultiset ngram_multiset(std::span<const std::string> tokens, std::size_t n) {
  if (n == 0) throw InvalidConfig("n-gram order must be >= 1");
  NGramMultiset out;
  out.n = n;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++out.counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                          tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return out;
}

SkipUnitMultiset skip_unit_multiset(std::span<const std::string> tokens, std::size_t max_gap) {
  SkipUnitMultiset out;
  out.max_gap = max_gap;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    ++out.counts[SkipUnit{tokens[i], {}, true}];
    // j - i - 1 intervening tokens, at most max_gap.
    for (std::size_t j = i + 1; j < tokens.size() && j - i - 1 <= max_gap; ++j)
      ++out.counts[SkipUnit{tokens[i], tokens[j], false}];
  }
  return out;
}

namespace {

template <typename Map>
std::size_t clipped_overlap(const Map& cand, const Map& ref) {
  std::size_t overlap = 0;
  for (const auto& [unit, c] : cand)
    if (auto it = ref.find(unit); it != ref.end()) overlap += std::min(c, it->second);
  return overlap;
}

}  // namespace

RougeScore rouge_score(std::span<const std::string> candidate, std::span<const std::string> reference,
                       RougeVariant variant, std::size_t skip_gap) {
  if (variant == RougeVariant::SU4) {
    const auto c = skip_unit_multiset(candidate, skip_gap);
    const auto r = skip_unit_multiset(reference, skip_gap);
    return RougeScore::from_counts(clipped_overlap(c.counts, r.counts), c.total(), r.total());
  }
  const std::size_t n = variant == RougeVariant::R1 ? 1 : 2;
  const auto c = ngram_multiset(candidate, n);
  const auto r = ngram_multiset(reference, n);
  return RougeScore::from_counts(clipped_overlap(c.counts, r.counts), c.total(), r.total());
}

RougeScore multi_reference(std::span<const std::string> candidate,
                           std::span<const std::vector<std::string>> references, RougeVariant variant,
                           MultiRefMode mode, std::size_t skip_gap) {
  if (references.empty()) throw NoReferences();
  if (mode == MultiRefMode::Best) {
    RougeScore best = rouge_score(candidate, references[0], variant, skip_gap);
    for (std::size_t i = 1; i < references.size(); ++i) {
      const auto s = rouge_score(candidate, references[i], variant, skip_gap);
      if (s.f1 > best.f1) best = s;
    }
    return best;
  }
  RougeScore mean;
  for (const auto& ref : references) {
    const auto s = rouge_score(candidate, ref, variant, skip_gap);
    mean.recall += s.recall;
    mean.precision += s.precision;
    mean.f1 += s.f1;
  }
  const double k = static_cast<double>(references.size());
  mean.recall /= k;
  mean.precision /= k;
  mean.f1 /= k;
  return mean;
}

RougeReport evaluate_corpus(std::span<const SystemSummary> summaries, std::span<const TopicSet> topics,
                            const RougeConfig& config) {
  const NormalizeConfig norm{.lowercase = true, .stem = config.stem};
  std::map<std::string, const TopicSet*> by_id;
  for (const auto& t : topics) by_id[t.topic_id] = &t;

  RougeReport report;
  report.config = config;
  for (const auto& s : summaries) {
    auto it = by_id.find(s.topic_id);
    if (it == by_id.end()) throw UnknownTopic(s.topic_id);
    if (report.per_topic.count(s.topic_id) > 0) throw InvalidConfig("two summaries for topic " + s.topic_id);
    auto cand = normalized_words(s.text, norm);
    if (cand.size() > config.length_limit) cand.resize(config.length_limit);
    std::vector<std::vector<std::string>> refs;
    for (const auto& r : it->second->references) refs.push_back(normalized_words(r.text(), norm));

    TopicRouge row;
    row.r1 = multi_reference(cand, refs, RougeVariant::R1, config.mode, config.skip_gap);
    row.r2 = multi_reference(cand, refs, RougeVariant::R2, config.mode, config.skip_gap);
    row.rsu4 = multi_reference(cand, refs, RougeVariant::SU4, config.mode, config.skip_gap);
    report.per_topic[s.topic_id] = row;
  }

  if (!report.per_topic.empty()) {
    auto accumulate = [&](RougeScore TopicRouge::*field) {
      RougeScore mean;
      for (const auto& [id, row] : report.per_topic) {
        mean.recall += (row.*field).recall;
        mean.precision += (row.*field).precision;
        mean.f1 += (row.*field).f1;
      }
      const double n = static_cast<double>(report.per_topic.size());
      mean.recall /= n;
      mean.precision /= n;
      mean.f1 /= n;
      return mean;
    };
    report.corpus.r1 = accumulate(&TopicRouge::r1);
    report.corpus.r2 = accumulate(&TopicRouge::r2);
    report.corpus.rsu4 = accumulate(&TopicRouge::rsu4);
  }
  return report;
}

RougeReport evaluate_corpus(std::span<const FinalSummary> summaries, std::span<const TopicSet> topics,
                            const RougeConfig& config) {
  std::vector<SystemSummary> texts;
  texts.reserve(summaries.size());
  for (const auto& s : summaries) texts.push_back({s.topic_id, s.text()});
  return evaluate_corpus(std::span<const SystemSummary>(texts), topics, config);
}

std::string_view to_string(RougeVariant v) {
  switch (v) {
    case RougeVariant::R1:
      return "R1";
    case RougeVariant::R2:
      return "R2";
    case RougeVariant::SU4:
      return "RSU4";
  }
  return "?";
}

std::string_view to_string(MultiRefMode m) { return m == MultiRefMode::Average ? "average" : "best"; }

MultiRefMode parse_multi_ref_mode(std::string_view s) {
  if (s == "average") return MultiRefMode::Average;
  if (s == "best") return MultiRefMode::Best;
  throw InvalidConfig("multi-ref mode must be 'average' or 'best', got '" + std::string(s) + "'");
}

json to_json(const RougeScore& s) { return json{{"r", s.recall}, {"p", s.precision}, {"f1", s.f1}}; }

json to_json(const RougeConfig& c) {
  return json{{"stem", c.stem}, {"multi_ref", to_string(c.mode)}, {"length_limit", c.length_limit}, {"skip_gap", c.skip_gap}};
}

namespace {

json row_json(const TopicRouge& row) {
  return json{{"R1", to_json(row.r1)}, {"R2", to_json(row.r2)}, {"RSU4", to_json(row.rsu4)}};
}

}  // namespace

json RougeReport::to_json() const {
  json per = json::object();
  for (const auto& [id, row] : per_topic) per[id] = row_json(row);
  return json{{"corpus", row_json(corpus)}, {"per_topic", std::move(per)}, {"config", qfsum::to_json(config)}};
}

std::string RougeReport::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "topic_id,R1_r,R1_p,R1_f1,R2_r,R2_p,R2_f1,RSU4_r,RSU4_p,RSU4_f1\n";
  for (const auto& [id, row] : per_topic) {
    out << id;
    for (const RougeScore* s : {&row.r1, &row.r2, &row.rsu4}) out << ',' << s->recall << ',' << s->precision << ',' << s->f1;
    out << '\n';
  }
  return out.str();
}

}  // namespace qfsum
