#include "qfsum/pipeline.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "qfsum/error.hpp"
#include "qfsum/io.hpp"
#include "qfsum/parallel.hpp"

namespace qfsum {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw InvalidConfig(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    if (!known) throw InvalidConfig(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read_if(const json& j, const char* key, T& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw InvalidConfig(where + "." + key + ": " + e.what());
  }
}

ScorerSpec scorer_from_json(const json& j, const std::string& where) {
  reject_unknown_keys(j, {"kind", "backend"}, where);
  ScorerSpec s;
  read_if(j, "kind", s.kind, where);
  if (auto it = j.find("backend"); it != j.end() && !it->is_null()) s.backend = backend_from_json(*it);
  return s;
}

json scorer_to_json(const ScorerSpec& s) {
  json j{{"kind", s.kind}};
  j["backend"] = s.backend ? to_json(*s.backend) : json(nullptr);
  return j;
}

GeneratorSpec generator_from_json(const json& j, const std::string& where) {
  reject_unknown_keys(j, {"kind", "sentences", "max_new_tokens", "backend"}, where);
  GeneratorSpec g;
  read_if(j, "kind", g.kind, where);
  read_if(j, "sentences", g.sentences, where);
  read_if(j, "max_new_tokens", g.max_new_tokens, where);
  if (auto it = j.find("backend"); it != j.end() && !it->is_null()) g.backend = backend_from_json(*it);
  return g;
}

json generator_to_json(const GeneratorSpec& g) {
  json j{{"kind", g.kind}, {"sentences", g.sentences}, {"max_new_tokens", g.max_new_tokens}};
  j["backend"] = g.backend ? to_json(*g.backend) : json(nullptr);
  return j;
}

void validate_scorer(const ScorerSpec& s, const char* role) {
  if (s.kind == "external") {
    if (!s.backend) throw InvalidConfig(std::string(role) + " scorer is external but has no backend");
    s.backend->validate();
  } else {
    parse_builtin_scorer(s.kind);
  }
}

void validate_generator(const GeneratorSpec& g, const char* name) {
  if (g.kind == "builtin") {
    if (g.sentences == 0) throw InvalidConfig(std::string(name) + ".sentences must be >= 1");
  } else if (g.kind == "external") {
    if (!g.backend) throw InvalidConfig(std::string(name) + " is external but has no backend");
    g.backend->validate();
  } else {
    throw InvalidConfig(std::string(name) + ".kind must be 'builtin' or 'external'");
  }
}

std::vector<std::string> path_strings(const std::vector<fs::path>& paths) {
  std::vector<std::string> out;
  for (const auto& p : paths) out.push_back(p.string());
  return out;
}

}  // namespace

BackendConfig backend_from_json(const json& j) {
  reject_unknown_keys(j, {"transport", "address", "timeout_ms", "max_batch"}, "backend");
  BackendConfig b;
  std::string transport = "subprocess";
  read_if(j, "transport", transport, "backend");
  if (transport == "subprocess") {
    b.transport = Transport::Subprocess;
  } else if (transport == "tcp") {
    b.transport = Transport::TcpSocket;
  } else {
    throw InvalidConfig("backend.transport must be 'subprocess' or 'tcp'");
  }
  read_if(j, "address", b.address_or_command, "backend");
  long long timeout_ms = b.request_timeout.count();
  read_if(j, "timeout_ms", timeout_ms, "backend");
  b.request_timeout = std::chrono::milliseconds(timeout_ms);
  read_if(j, "max_batch", b.max_batch, "backend");
  b.validate();
  return b;
}

json to_json(const BackendConfig& cfg) {
  return json{{"transport", cfg.transport == Transport::Subprocess ? "subprocess" : "tcp"},
              {"address", cfg.address_or_command},
              {"timeout_ms", cfg.request_timeout.count()},
              {"max_batch", cfg.max_batch}};
}

json PipelineConfig::to_json() const {
  json j;
  j["train_corpora"] = path_strings(train_corpora);
  j["eval_corpora"] = path_strings(eval_corpora);
  j["scorers"] = {{"query_relevance", scorer_to_json(relevance_scorer)}, {"paraphrase", scorer_to_json(paraphrase_scorer)}};
  j["generator"] = generator_to_json(generator);
  j["generator_without_ds"] = generator_without_ds ? generator_to_json(*generator_without_ds) : json(nullptr);
  j["k"] = k;
  j["budget_words"] = budget_words;
  j["max_input_tokens"] = max_input_tokens;
  j["separator"] = separator;
  j["trigram_blocking"] = trigram_blocking;
  j["overflow"] = overflow == OverflowMode::Truncate ? "truncate" : "drop";
  j["rouge"] = qfsum::to_json(rouge);
  j["split"] = {{"validation_fraction", split.validation_fraction}, {"seed", split.seed}};
  j["query"] = {{"use_narrative", use_narrative}};
  j["normalize"] = {{"lowercase", normalize.lowercase}, {"stem", normalize.stem}};
  j["parallelism"] = parallelism;
  j["output_dir"] = output_dir.string();
  return j;
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  reject_unknown_keys(j,
                      {"train_corpora", "eval_corpora", "scorers", "generator", "generator_without_ds", "k",
                       "budget_words", "max_input_tokens", "separator", "trigram_blocking", "overflow", "rouge",
                       "split", "query", "normalize", "parallelism", "output_dir"},
                      "config");
  PipelineConfig c;
  std::vector<std::string> paths;
  read_if(j, "train_corpora", paths, "config");
  c.train_corpora.assign(paths.begin(), paths.end());
  paths.clear();
  read_if(j, "eval_corpora", paths, "config");
  c.eval_corpora.assign(paths.begin(), paths.end());

  if (auto it = j.find("scorers"); it != j.end() && !it->is_null()) {
    reject_unknown_keys(*it, {"query_relevance", "paraphrase"}, "scorers");
    if (it->contains("query_relevance")) c.relevance_scorer = scorer_from_json((*it)["query_relevance"], "scorers.query_relevance");
    if (it->contains("paraphrase")) c.paraphrase_scorer = scorer_from_json((*it)["paraphrase"], "scorers.paraphrase");
  }
  if (auto it = j.find("generator"); it != j.end() && !it->is_null()) c.generator = generator_from_json(*it, "generator");
  if (auto it = j.find("generator_without_ds"); it != j.end() && !it->is_null())
    c.generator_without_ds = generator_from_json(*it, "generator_without_ds");

  read_if(j, "k", c.k, "config");
  read_if(j, "budget_words", c.budget_words, "config");
  read_if(j, "max_input_tokens", c.max_input_tokens, "config");
  read_if(j, "separator", c.separator, "config");
  read_if(j, "trigram_blocking", c.trigram_blocking, "config");
  std::string overflow = "truncate";
  read_if(j, "overflow", overflow, "config");
  if (overflow == "truncate") {
    c.overflow = OverflowMode::Truncate;
  } else if (overflow == "drop") {
    c.overflow = OverflowMode::Drop;
  } else {
    throw InvalidConfig("overflow must be 'truncate' or 'drop'");
  }

  if (auto it = j.find("rouge"); it != j.end() && !it->is_null()) {
    reject_unknown_keys(*it, {"stem", "multi_ref", "length_limit", "skip_gap"}, "rouge");
    read_if(*it, "stem", c.rouge.stem, "rouge");
    std::string mode = std::string(to_string(c.rouge.mode));
    read_if(*it, "multi_ref", mode, "rouge");
    c.rouge.mode = parse_multi_ref_mode(mode);
    read_if(*it, "length_limit", c.rouge.length_limit, "rouge");
    read_if(*it, "skip_gap", c.rouge.skip_gap, "rouge");
  }
  if (auto it = j.find("split"); it != j.end() && !it->is_null()) {
    reject_unknown_keys(*it, {"validation_fraction", "seed"}, "split");
    read_if(*it, "validation_fraction", c.split.validation_fraction, "split");
    read_if(*it, "seed", c.split.seed, "split");
  }
  if (auto it = j.find("query"); it != j.end() && !it->is_null()) {
    reject_unknown_keys(*it, {"use_narrative"}, "query");
    read_if(*it, "use_narrative", c.use_narrative, "query");
  }
  if (auto it = j.find("normalize"); it != j.end() && !it->is_null()) {
    reject_unknown_keys(*it, {"lowercase", "stem"}, "normalize");
    read_if(*it, "lowercase", c.normalize.lowercase, "normalize");
    read_if(*it, "stem", c.normalize.stem, "normalize");
  }
  read_if(j, "parallelism", c.parallelism, "config");
  std::string out_dir = c.output_dir.string();
  read_if(j, "output_dir", out_dir, "config");
  c.output_dir = out_dir;
  return c;
}

void PipelineConfig::validate() const {
  if (k < 1) throw InvalidConfig("k must be >= 1");
  if (budget_words < 1) throw InvalidConfig("budget_words must be >= 1");
  if (max_input_tokens < 2) throw InvalidConfig("max_input_tokens must be >= 2");
  if (parallelism < 1) throw InvalidConfig("parallelism must be >= 1");
  if (rouge.length_limit < 1) throw InvalidConfig("rouge.length_limit must be >= 1");
  if (!(split.validation_fraction >= 0.0 && split.validation_fraction < 1.0))
    throw InvalidConfig("split.validation_fraction must be in [0, 1)");
  validate_scorer(relevance_scorer, "query_relevance");
  validate_scorer(paraphrase_scorer, "paraphrase");
  validate_generator(generator, "generator");
  if (generator_without_ds) validate_generator(*generator_without_ds, "generator_without_ds");
  for (const auto* list : {&train_corpora, &eval_corpora})
    for (const auto& p : *list)
      if (!fs::exists(p)) throw InvalidConfig("corpus path does not exist: " + p.string());
}

LoadOptions PipelineConfig::load_options() const { return LoadOptions{normalize, use_narrative}; }

PipelineConfig load_config(const fs::path& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidConfig(path.string() + ": " + e.what());
  }
  return PipelineConfig::from_json(j);
}

std::shared_ptr<BackendConnection> Backends::connect(const BackendConfig& cfg, std::string_view op) {
  const std::string key = std::string(cfg.transport == Transport::Subprocess ? "proc:" : "tcp:") + cfg.address_or_command;
  std::lock_guard lock(mutex_);
  if (auto it = open_.find(key); it != open_.end()) {
    if (!it->second->info().supports(op))
      throw HandshakeFailed(cfg.address_or_command + " does not advertise op \"" + std::string(op) + "\"");
    return it->second;
  }
  auto conn = BackendConnection::open(cfg, op);
  open_[key] = conn;
  return conn;
}

namespace {

std::unique_ptr<Scorer> make_topic_scorer(const ScorerSpec& spec, const PipelineConfig& cfg, Backends& backends,
                                          const std::shared_ptr<const CorpusStatistics>& stats) {
  if (spec.kind == "external") return std::make_unique<ExternalScorer>(backends.connect(*spec.backend, "score"));
  return make_builtin_scorer(parse_builtin_scorer(spec.kind), stats, cfg.normalize);
}

bool needs_statistics(const ScorerSpec& s) { return s.kind == "tfidf" || s.kind == "tfidf_cosine" || s.kind == "bm25"; }

}  // namespace

TopicScorers::TopicScorers(const PipelineConfig& cfg, Backends& backends, const TopicSet& topic) {
  std::shared_ptr<const CorpusStatistics> stats;
  if (needs_statistics(cfg.relevance_scorer) || needs_statistics(cfg.paraphrase_scorer))
    stats = std::make_shared<CorpusStatistics>(CorpusStatistics::fit_topic(topic, cfg.normalize));
  relevance_ = make_topic_scorer(cfg.relevance_scorer, cfg, backends, stats);
  paraphrase_ = make_topic_scorer(cfg.paraphrase_scorer, cfg, backends, stats);
  bindings_ = ScorerBindings{relevance_.get(), paraphrase_.get()};
}

std::unique_ptr<Generator> make_generator(const GeneratorSpec& spec, Backends& backends, const Scorer& relevance) {
  if (spec.kind == "external")
    return std::make_unique<ExternalGenerator>(backends.connect(*spec.backend, "generate"), spec.max_new_tokens);
  return std::make_unique<ExtractiveGenerator>(relevance, spec.sentences);
}

std::string_view to_string(PipelineVariant v) {
  switch (v) {
    case PipelineVariant::Full:
      return "full";
    case PipelineVariant::WithoutDistantSupervision:
      return "without_distant_supervision";
    case PipelineVariant::WithoutTrigramBlocking:
      return "without_trigram_blocking";
    case PipelineVariant::WithoutWeakSupervision:
      return "without_weakly_supervised_learning";
  }
  return "?";
}

namespace {

TopicFailure failure_of(const std::string& topic_id, const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return {topic_id, err->kind(), err->what()};
  return {topic_id, "Error", e.what()};
}

// Runs fn per topic on cfg.parallelism workers; failures are recorded per
// topic. Returns a flag per topic telling whether it succeeded.
template <typename Fn>
std::vector<bool> for_each_topic(const PipelineConfig& cfg, std::span<const TopicSet> topics,
                                 std::vector<TopicFailure>& failures, Fn&& fn) {
  std::vector<std::optional<TopicFailure>> errors(topics.size());
  parallel_for(topics.size(), cfg.parallelism, [&](std::size_t i) {
    try {
      fn(i);
    } catch (const std::exception& e) {
      errors[i] = failure_of(topics[i].topic_id, e);
    }
  });
  std::vector<bool> ok(topics.size(), true);
  for (std::size_t i = 0; i < topics.size(); ++i) {
    if (errors[i]) {
      failures.push_back(*errors[i]);
      ok[i] = false;
    }
  }
  return ok;
}

CandidatePool document_sentence_pool(const TopicSet& topic) {
  CandidatePool pool;
  pool.topic_id = topic.topic_id;
  for (std::size_t pos = 0; pos < topic.documents.size(); ++pos)
    for (const auto& s : topic.documents[pos].sentences) pool.candidates.push_back({s, topic.documents[pos].doc_id, pos});
  return pool;
}

}  // namespace

WeakLabelRun run_weak_labels(const PipelineConfig& cfg, std::span<const TopicSet> topics, Backends& backends) {
  WeakLabelRun run;
  std::vector<std::vector<DocumentWeakLabels>> labels(topics.size());
  const auto ok = for_each_topic(cfg, topics, run.failures, [&](std::size_t i) {
    TopicScorers scorers(cfg, backends, topics[i]);
    labels[i] = weak_label_topic(topics[i], cfg.k, scorers.bindings());
  });
  for (std::size_t i = 0; i < topics.size(); ++i) {
    if (!ok[i]) continue;
    for (const auto& l : labels[i]) {
      run.records.push_back(to_json(topics[i].topic_id, l));
      run.fallbacks += l.abstractive.fallback_count();
    }
  }
  return run;
}

PairExportRun run_export_pairs(const PipelineConfig& cfg, std::span<const TopicSet> topics, Backends& backends,
                               bool distant_supervision) {
  PairExportRun run;
  const std::vector<TopicSet> all(topics.begin(), topics.end());
  const auto [train, validation] = split_train_validation(all, cfg.split);
  std::set<std::string> val_ids;
  for (const auto& t : validation) {
    val_ids.insert(t.topic_id);
    run.validation_topics.push_back(t.topic_id);
  }

  TrainingPairOptions opts;
  opts.k = cfg.k;
  opts.max_input_tokens = cfg.max_input_tokens;
  opts.separator = cfg.separator;
  opts.distant_supervision = distant_supervision;

  std::vector<std::vector<TrainingPair>> pairs(topics.size());
  const auto ok = for_each_topic(cfg, topics, run.failures, [&](std::size_t i) {
    TopicScorers scorers(cfg, backends, topics[i]);
    pairs[i] = build_training_pairs(topics[i], scorers.bindings(), opts);
  });
  for (std::size_t i = 0; i < topics.size(); ++i) {
    if (!ok[i]) continue;
    auto& dest = val_ids.count(topics[i].topic_id) ? run.validation : run.train;
    dest.insert(dest.end(), pairs[i].begin(), pairs[i].end());
  }
  return run;
}

FinalSummary summarize_topic(const TopicSet& topic, const PipelineConfig& cfg, Backends& backends,
                             PipelineVariant variant) {
  TopicScorers scorers(cfg, backends, topic);
  const Scorer& relevance = scorers.bindings().get(ScorerRole::QueryRelevance);

  CandidatePool pool;
  if (variant == PipelineVariant::WithoutWeakSupervision) {
    pool = document_sentence_pool(topic);
  } else {
    const GeneratorSpec& spec = variant == PipelineVariant::WithoutDistantSupervision && cfg.generator_without_ds
                                    ? *cfg.generator_without_ds
                                    : cfg.generator;
    const auto generator = make_generator(spec, backends, relevance);
    GenerateOptions gopts;
    gopts.max_input_tokens = cfg.max_input_tokens;
    gopts.separator = cfg.separator;
    pool = generate_topic_candidates(topic, *generator, gopts);
  }

  const auto ranked = rank_candidates(pool, topic.query, relevance);
  const bool block = cfg.trigram_blocking && variant != PipelineVariant::WithoutTrigramBlocking;
  const auto accepted = block ? trigram_block(ranked) : ranked;
  return assemble_summary(topic.topic_id, accepted, cfg.budget_words, cfg.overflow);
}

SummarizeRun run_summarize(const PipelineConfig& cfg, std::span<const TopicSet> topics, Backends& backends,
                           PipelineVariant variant) {
  SummarizeRun run;
  std::vector<FinalSummary> out(topics.size());
  const auto ok = for_each_topic(cfg, topics, run.failures,
                                 [&](std::size_t i) { out[i] = summarize_topic(topics[i], cfg, backends, variant); });
  for (std::size_t i = 0; i < topics.size(); ++i)
    if (ok[i]) run.summaries.push_back(std::move(out[i]));
  return run;
}

AblationTable run_ablation(const PipelineConfig& cfg, std::span<const TopicSet> topics, Backends& backends) {
  constexpr PipelineVariant kVariants[] = {PipelineVariant::Full, PipelineVariant::WithoutDistantSupervision,
                                           PipelineVariant::WithoutTrigramBlocking,
                                           PipelineVariant::WithoutWeakSupervision};
  std::vector<RougeReport> reports;
  std::vector<std::size_t> failed;
  for (auto v : kVariants) {
    const auto run = run_summarize(cfg, topics, backends, v);
    reports.push_back(evaluate_corpus(std::span<const FinalSummary>(run.summaries), topics, cfg.rouge));
    failed.push_back(run.failures.size());
  }

  AblationTable table;
  const RougeReport& full = reports[0];
  for (std::size_t vi = 0; vi < reports.size(); ++vi) {
    AblationRow row;
    row.variant = kVariants[vi];
    row.recall = 100.0 * reports[vi].corpus.r1.recall;
    row.f1 = 100.0 * reports[vi].corpus.r1.f1;
    row.failed_topics = failed[vi];
    row.same_generator_as_full =
        kVariants[vi] == PipelineVariant::Full ||
        (kVariants[vi] == PipelineVariant::WithoutDistantSupervision && !cfg.generator_without_ds);
    const double base_recall = 100.0 * full.corpus.r1.recall;
    const double base_f1 = 100.0 * full.corpus.r1.f1;
    try {
      row.delta_recall = relative_change(row.recall, base_recall);
      row.delta_f1 = relative_change(row.f1, base_f1);
    } catch (const ZeroBaseline&) {
      row.delta_recall = row.delta_f1 = 0.0;
    }

    PairedSample sample;
    for (const auto& [id, frow] : full.per_topic) {
      auto it = reports[vi].per_topic.find(id);
      if (it == reports[vi].per_topic.end()) continue;
      sample.a.push_back(frow.r1.f1);
      sample.b.push_back(it->second.r1.f1);
    }
    try {
      row.ttest = paired_t_test(sample);
    } catch (const Error& e) {
      row.ttest_error = e.kind();
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

json AblationTable::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows) {
    json row{{"variant", to_string(r.variant)},
             {"r1_recall", r.recall},
             {"r1_f1", r.f1},
             {"delta_recall_pct", format_percent(r.delta_recall)},
             {"delta_f1_pct", format_percent(r.delta_f1)},
             {"same_generator_as_full", r.same_generator_as_full},
             {"failed_topics", r.failed_topics}};
    if (r.ttest) {
      row["ttest"] = qfsum::to_json(*r.ttest);
      row["significant"] = r.ttest->significant(0.05);
    } else {
      row["ttest"] = json{{"error", r.ttest_error}};
      row["significant"] = false;
    }
    rows_json.push_back(std::move(row));
  }
  return json{{"metric", "R1"}, {"rows", std::move(rows_json)}};
}

std::string AblationTable::to_text() const {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-36s %8s %9s %8s %9s  %s\n", "variant", "R1-R", "dR%", "R1-F1", "dF1%", "significant (p<=.05)");
  out << line;
  for (const auto& r : rows) {
    const std::string sig = r.ttest ? (r.ttest->significant(0.05) ? "yes" : "no") : r.ttest_error;
    std::snprintf(line, sizeof line, "%-36s %8.2f %9s %8.2f %9s  %s\n", std::string(to_string(r.variant)).c_str(), r.recall,
                  format_percent(r.delta_recall).c_str(), r.f1, format_percent(r.delta_f1).c_str(), sig.c_str());
    out << line;
  }
  return out.str();
}

std::vector<TopicSet> load_corpora(std::span<const fs::path> paths, const LoadOptions& opts) {
  std::vector<TopicSet> all;
  std::set<std::string> ids;
  for (const auto& p : paths) {
    for (auto& t : load_topics(p, opts)) {
      if (!ids.insert(t.topic_id).second) throw MalformedCorpus(p.string(), 0, "duplicate topic_id " + t.topic_id);
      all.push_back(std::move(t));
    }
  }
  if (all.empty()) throw EmptyTopic("<corpus>", "no corpus paths given");
  return all;
}

}  // namespace qfsum
