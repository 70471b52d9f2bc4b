// qfsum: weak labels, training pairs, summaries, ROUGE and ablations from
// the command line. Exit status is 0 only when every topic succeeded, 1 on
// runtime or per-topic errors and 2 on bad usage or configuration.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qfsum/error.hpp"
#include "qfsum/io.hpp"
#include "qfsum/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qfsum;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Overrides {
  std::string config_path;
  std::vector<std::string> corpora;
  std::string out_dir;
  std::optional<unsigned long long> seed;
  std::string scorer;
  std::string relevance_scorer;
  std::string paraphrase_scorer;
  std::string generator;
  std::string backend_cmd;
  std::string backend_tcp;
  std::optional<std::size_t> k;
  std::optional<std::size_t> budget;
  std::optional<std::size_t> max_input_tokens;
  std::optional<std::size_t> parallelism;
  bool stem = false;
  std::string multi_ref;
  bool no_trigram_blocking = false;
  bool drop_overflow = false;
};

void add_common_options(CLI::App& cmd, Overrides& o) {
  cmd.add_option("--config", o.config_path, "JSON config file");
  cmd.add_option("--corpus", o.corpora, "Corpus file or directory (repeatable, replaces the config list)");
  cmd.add_option("--out", o.out_dir, "Output directory");
  cmd.add_option("--seed", o.seed, "Seed for the train/validation split");
  cmd.add_option("--scorer", o.scorer, "Scorer for both roles: overlap|tfidf|bm25|external");
  cmd.add_option("--relevance-scorer", o.relevance_scorer, "Query-relevance scorer");
  cmd.add_option("--paraphrase-scorer", o.paraphrase_scorer, "Paraphrase scorer");
  cmd.add_option("--generator", o.generator, "Generator: builtin|external")->check(CLI::IsMember({"builtin", "external"}));
  auto* cmd_opt = cmd.add_option("--backend-cmd", o.backend_cmd, "Shell command of an NDJSON backend");
  auto* tcp_opt = cmd.add_option("--backend-tcp", o.backend_tcp, "host:port of an NDJSON backend");
  cmd_opt->excludes(tcp_opt);
  cmd.add_option("--k", o.k, "Sentences per weak extractive summary")->check(CLI::PositiveNumber);
  cmd.add_option("--budget", o.budget, "Summary budget in words")->check(CLI::PositiveNumber);
  cmd.add_option("--max-input-tokens", o.max_input_tokens, "Model input budget in tokens");
  cmd.add_option("--parallelism", o.parallelism, "Topic-level worker count")->check(CLI::PositiveNumber);
  cmd.add_flag("--stem", o.stem, "Porter-stem tokens before ROUGE matching");
  cmd.add_option("--multi-ref", o.multi_ref, "Multi-reference aggregation")->check(CLI::IsMember({"average", "best"}));
  cmd.add_flag("--no-trigram-blocking", o.no_trigram_blocking, "Skip trigram blocking");
  cmd.add_flag("--drop-overflow", o.drop_overflow, "Drop the overflowing sentence instead of truncating it");
}

std::optional<BackendConfig> backend_override(const Overrides& o) {
  if (o.backend_cmd.empty() && o.backend_tcp.empty()) return std::nullopt;
  BackendConfig b;
  if (!o.backend_cmd.empty()) {
    b.transport = Transport::Subprocess;
    b.address_or_command = o.backend_cmd;
  } else {
    b.transport = Transport::TcpSocket;
    b.address_or_command = o.backend_tcp;
  }
  return b;
}

void apply_scorer(ScorerSpec& spec, const std::string& kind, const std::optional<BackendConfig>& backend) {
  if (!kind.empty()) spec.kind = kind;
  if (spec.kind == "external" && backend) spec.backend = backend;
}

// Builds the effective config. `eval_side` decides which corpus list
// --corpus replaces.
PipelineConfig effective_config(const Overrides& o, bool eval_side) {
  PipelineConfig cfg = o.config_path.empty() ? PipelineConfig{} : load_config(o.config_path);
  if (!o.corpora.empty()) {
    auto& list = eval_side ? cfg.eval_corpora : cfg.train_corpora;
    list.assign(o.corpora.begin(), o.corpora.end());
  }
  if (!o.out_dir.empty()) cfg.output_dir = o.out_dir;
  if (o.seed) cfg.split.seed = *o.seed;

  const auto backend = backend_override(o);
  apply_scorer(cfg.relevance_scorer, o.relevance_scorer.empty() ? o.scorer : o.relevance_scorer, backend);
  apply_scorer(cfg.paraphrase_scorer, o.paraphrase_scorer.empty() ? o.scorer : o.paraphrase_scorer, backend);
  if (!o.generator.empty()) cfg.generator.kind = o.generator;
  if (cfg.generator.kind == "external" && backend) cfg.generator.backend = backend;

  if (o.k) cfg.k = *o.k;
  if (o.budget) cfg.budget_words = *o.budget;
  if (o.max_input_tokens) cfg.max_input_tokens = *o.max_input_tokens;
  if (o.parallelism) cfg.parallelism = *o.parallelism;
  if (o.stem) cfg.rouge.stem = true;
  if (!o.multi_ref.empty()) cfg.rouge.mode = parse_multi_ref_mode(o.multi_ref);
  if (o.no_trigram_blocking) cfg.trigram_blocking = false;
  if (o.drop_overflow) cfg.overflow = OverflowMode::Drop;

  const auto& corpora = eval_side ? cfg.eval_corpora : cfg.train_corpora;
  if (corpora.empty()) throw InvalidConfig(std::string("no corpus given (use --corpus or ") +
                                           (eval_side ? "eval_corpora" : "train_corpora") + " in the config)");
  cfg.validate();
  return cfg;
}

std::vector<TopicSet> corpora_for(const PipelineConfig& cfg, bool eval_side) {
  const auto& paths = eval_side ? cfg.eval_corpora : cfg.train_corpora;
  return load_corpora(paths, cfg.load_options());
}

json failures_json(const std::vector<TopicFailure>& failures) {
  json arr = json::array();
  for (const auto& f : failures) arr.push_back({{"topic_id", f.topic_id}, {"error", f.kind}, {"message", f.message}});
  return arr;
}

int report_failures(const std::vector<TopicFailure>& failures) {
  for (const auto& f : failures) std::cerr << "topic " << f.topic_id << ": " << f.message << "\n";
  return failures.empty() ? 0 : kExitFailure;
}

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

json manifest(const char* command, const PipelineConfig& cfg) {
  return json{{"command", command}, {"config", cfg.to_json()}};
}

int cmd_weak_labels(const Overrides& o) {
  const auto cfg = effective_config(o, false);
  const auto topics = corpora_for(cfg, false);
  Backends backends;
  const auto run = run_weak_labels(cfg, topics, backends);
  write_jsonl(cfg.output_dir / "weak_labels.jsonl", run.records);
  auto m = manifest("weak-labels", cfg);
  m["topics"] = topics.size();
  m["documents"] = run.records.size();
  m["fallbacks"] = run.fallbacks;
  m["failures"] = failures_json(run.failures);
  write_json(cfg.output_dir / "weak_labels.manifest.json", m);
  std::cout << "wrote " << run.records.size() << " document records (" << run.fallbacks << " fallbacks) to "
            << (cfg.output_dir / "weak_labels.jsonl").string() << "\n";
  return report_failures(run.failures);
}

int cmd_export_pairs(const Overrides& o, bool without_ds) {
  const auto cfg = effective_config(o, false);
  const auto topics = corpora_for(cfg, false);
  Backends backends;
  const auto run = run_export_pairs(cfg, topics, backends, !without_ds);
  auto rows = [](const std::vector<TrainingPair>& pairs) {
    std::vector<json> out;
    for (const auto& p : pairs) out.push_back(to_json(p));
    return out;
  };
  write_jsonl(cfg.output_dir / "pairs.train.jsonl", rows(run.train));
  write_jsonl(cfg.output_dir / "pairs.validation.jsonl", rows(run.validation));
  auto m = manifest("export-pairs", cfg);
  m["distant_supervision"] = !without_ds;
  m["train_pairs"] = run.train.size();
  m["validation_pairs"] = run.validation.size();
  m["validation_topics"] = run.validation_topics;
  m["failures"] = failures_json(run.failures);
  write_json(cfg.output_dir / "pairs.manifest.json", m);
  std::cout << "wrote " << run.train.size() << " train and " << run.validation.size() << " validation pairs to "
            << cfg.output_dir.string() << "\n";
  return report_failures(run.failures);
}

int cmd_summarize(const Overrides& o) {
  const auto cfg = effective_config(o, true);
  const auto topics = corpora_for(cfg, true);
  Backends backends;
  const auto run = run_summarize(cfg, topics, backends);
  write_summaries(cfg.output_dir / "summaries.jsonl", cfg.output_dir / "summaries", run.summaries);
  auto m = manifest("summarize", cfg);
  m["summaries"] = run.summaries.size();
  m["failures"] = failures_json(run.failures);
  write_json(cfg.output_dir / "summaries.manifest.json", m);
  std::cout << "wrote " << run.summaries.size() << " summaries to " << (cfg.output_dir / "summaries.jsonl").string()
            << "\n";
  return report_failures(run.failures);
}

int cmd_evaluate(const Overrides& o, const std::string& summaries_path, const std::string& csv_path) {
  const auto cfg = effective_config(o, true);
  const auto topics = corpora_for(cfg, true);
  const fs::path input = summaries_path.empty() ? cfg.output_dir / "summaries.jsonl" : fs::path(summaries_path);
  const auto summaries = read_summaries_jsonl(input);
  const auto report = evaluate_corpus(std::span<const SystemSummary>(summaries), topics, cfg.rouge);
  auto j = report.to_json();
  j["pipeline"] = cfg.to_json();
  j["summaries"] = input.string();
  write_json(cfg.output_dir / "rouge_report.json", j);
  if (!csv_path.empty()) write_file_atomic(csv_path, report.to_csv());

  char line[160];
  std::printf("%-6s %8s %8s %8s\n", "metric", "recall", "prec", "f1");
  for (auto v : {RougeVariant::R1, RougeVariant::R2, RougeVariant::SU4}) {
    const auto& s = report.corpus.get(v);
    std::snprintf(line, sizeof line, "%-6s %8.4f %8.4f %8.4f\n", std::string(to_string(v)).c_str(), s.recall,
                  s.precision, s.f1);
    std::fputs(line, stdout);
  }
  return 0;
}

int cmd_ablate(const Overrides& o) {
  const auto cfg = effective_config(o, true);
  const auto topics = corpora_for(cfg, true);
  Backends backends;
  const auto table = run_ablation(cfg, topics, backends);
  auto j = table.to_json();
  j["pipeline"] = cfg.to_json();
  write_json(cfg.output_dir / "ablation.json", j);
  std::cout << table.to_text();
  std::size_t failed = 0;
  for (const auto& r : table.rows) failed += r.failed_topics;
  return failed == 0 ? 0 : kExitFailure;
}

// Accepts "1,2,4", "1 2 4" or "@path" with whitespace/comma separated values.
std::vector<double> parse_values(const std::string& spec) {
  std::string text = spec;
  if (!spec.empty() && spec[0] == '@') text = read_file(spec.substr(1));
  for (char& c : text)
    if (c == ',') c = ' ';
  std::istringstream in(text);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw InvalidConfig("not a number: '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

int cmd_ttest(const std::string& a, const std::string& b) {
  const PairedSample sample{parse_values(a), parse_values(b)};
  std::cout << to_json(paired_t_test(sample)).dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weakly supervised query-focused multi-document summarization"};
  app.require_subcommand(1);
  Overrides o;

  auto* weak = app.add_subcommand("weak-labels", "Weak extractive and abstractive labels per document");
  add_common_options(*weak, o);

  bool without_ds = false;
  auto* pairs = app.add_subcommand("export-pairs", "Training pairs split into train and validation");
  add_common_options(*pairs, o);
  pairs->add_flag("--no-distant-supervision", without_ds, "Use the extractive selections as targets");

  auto* summarize = app.add_subcommand("summarize", "One budgeted summary per topic");
  add_common_options(*summarize, o);

  std::string summaries_path;
  std::string csv_path;
  auto* evaluate = app.add_subcommand("evaluate", "ROUGE-1/2/SU4 of summaries against the references");
  add_common_options(*evaluate, o);
  evaluate->add_option("--summaries", summaries_path, "summaries.jsonl (default: <out>/summaries.jsonl)");
  evaluate->add_option("--csv", csv_path, "Also write per-topic scores as CSV");

  auto* ablate = app.add_subcommand("ablate", "Ablation table over the four pipeline variants");
  add_common_options(*ablate, o);

  std::string ttest_a;
  std::string ttest_b;
  auto* ttest = app.add_subcommand("ttest", "Paired two-tailed t-test");
  ttest->add_option("--a", ttest_a, "First sample: comma separated or @file")->required();
  ttest->add_option("--b", ttest_b, "Second sample: comma separated or @file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*weak) return cmd_weak_labels(o);
    if (*pairs) return cmd_export_pairs(o, without_ds);
    if (*summarize) return cmd_summarize(o);
    if (*evaluate) return cmd_evaluate(o, summaries_path, csv_path);
    if (*ablate) return cmd_ablate(o);
    if (*ttest) return cmd_ttest(ttest_a, ttest_b);
  } catch (const InvalidConfig& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
