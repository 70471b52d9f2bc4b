#include "qfsum/generate.hpp"

#include <numeric>

#include "qfsum/error.hpp"
#include "qfsum/parallel.hpp"

namespace qfsum {

using nlohmann::json;

ExtractiveGenerator::ExtractiveGenerator(const Scorer& relevance, std::size_t m) : relevance_(relevance), m_(m) {
  if (m_ == 0) throw InvalidConfig("generator sentence count must be positive");
}

std::string ExtractiveGenerator::id() const { return "extractive-top" + std::to_string(m_) + ":" + relevance_.id(); }

GeneratedSummary ExtractiveGenerator::generate(const QuerySpec& query, const Document& doc,
                                               const ModelInput& /*input*/) const {
  GeneratedSummary out;
  out.doc_id = doc.doc_id;
  out.generator_id = id();
  const auto ext = select_extractive(query, doc, m_, relevance_);
  for (std::size_t i = 0; i < ext.selections.size(); ++i) {
    Sentence s = ext.selections[i].sentence;
    s.index = i;
    out.sentences.push_back(std::move(s));
  }
  return out;
}

ExternalGenerator::ExternalGenerator(std::shared_ptr<BackendConnection> connection, std::size_t max_new_tokens)
    : connection_(std::move(connection)), max_new_tokens_(max_new_tokens) {}

std::string ExternalGenerator::id() const {
  const auto& name = connection_->info().name;
  return "external:" + (name.empty() ? std::string("backend") : name);
}

GeneratedSummary ExternalGenerator::generate(const QuerySpec& query, const Document& doc,
                                             const ModelInput& input) const {
  const json reply = connection_->request(json{{"op", "generate"},
                                               {"query", query.combined},
                                               {"document", input.document_part},
                                               {"max_new_tokens", max_new_tokens_}});
  if (auto err = reply.find("error"); err != reply.end())
    throw Error("BackendError", err->is_string() ? err->get<std::string>() : err->dump());
  auto summary = reply.find("summary");
  if (summary == reply.end() || !summary->is_string())
    throw ProtocolViolation("generate reply lacks a \"summary\" string");
  GeneratedSummary out;
  out.doc_id = doc.doc_id;
  out.generator_id = id();
  out.sentences = segment_sentences(summary->get<std::string>(), doc.doc_id);
  if (out.sentences.empty()) throw EmptyGeneration(doc.doc_id);
  return out;
}

std::unique_ptr<ExternalGenerator> external_generator(const BackendConfig& cfg, std::size_t max_new_tokens) {
  return std::make_unique<ExternalGenerator>(BackendConnection::open(cfg, "generate"), max_new_tokens);
}

GeneratedSummary generate_document_summary(const QuerySpec& query, const Document& doc,
                                           const Generator& generator, const GenerateOptions& opts) {
  const auto input = build_model_input(query, doc.text(), opts.max_input_tokens, opts.separator);
  return generator.generate(query, doc, input);
}

CandidatePool generate_topic_candidates(const TopicSet& topic, const Generator& generator,
                                        const GenerateOptions& opts,
                                        std::span<const std::size_t> processing_order) {
  const std::size_t n = topic.documents.size();
  std::vector<std::size_t> order(processing_order.begin(), processing_order.end());
  if (order.empty()) {
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
  }
  if (order.size() != n) throw InvalidConfig("processing order must list every document once");
  {
    std::vector<bool> seen(n, false);
    for (std::size_t p : order) {
      if (p >= n || seen[p]) throw InvalidConfig("processing order must be a permutation");
      seen[p] = true;
    }
  }

  std::vector<GeneratedSummary> generated(n);
  parallel_for(n, opts.parallelism, [&](std::size_t step) {
    const std::size_t pos = order[step];
    const auto& doc = topic.documents[pos];
    try {
      generated[pos] = generate_document_summary(topic.query, doc, generator, opts);
    } catch (const std::exception& e) {
      throw GenerationFailed(doc.doc_id, pos, e.what());
    }
  });

  CandidatePool pool;
  pool.topic_id = topic.topic_id;
  for (std::size_t pos = 0; pos < n; ++pos)
    for (const auto& s : generated[pos].sentences)
      pool.candidates.push_back({s, generated[pos].doc_id, pos});
  return pool;
}

}  // namespace qfsum
