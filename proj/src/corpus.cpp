#include "qfsum/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "qfsum/error.hpp"
#include "qfsum/porter_stemmer.hpp"
#include "qfsum/random.hpp"

namespace qfsum {
namespace {

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_closing(char c) { return c == '"' || c == '\'' || c == ')' || c == ']' || c == '}'; }

bool is_opening(char c) { return c == '"' || c == '\'' || c == '(' || c == '[' || c == '{'; }

// U+201C / U+2018 (left double / single quotation mark) and their right
// counterparts U+201D / U+2019, all E2 80 xx in UTF-8.
bool utf8_quote_at(std::string_view s, std::size_t i, bool opening) {
  if (i + 2 >= s.size()) return false;
  if (static_cast<unsigned char>(s[i]) != 0xE2 || static_cast<unsigned char>(s[i + 1]) != 0x80)
    return false;
  const auto c = static_cast<unsigned char>(s[i + 2]);
  return opening ? (c == 0x9C || c == 0x98) : (c == 0x9D || c == 0x99);
}

const std::set<std::string, std::less<>>& abbreviations() {
  static const std::set<std::string, std::less<>> kAbbrev = {
      "mr",   "mrs",  "ms",   "dr",   "prof", "sr",  "jr",  "st",   "mt",   "rev",  "gen",
      "col",  "lt",   "sgt",  "capt", "cmdr", "adm", "gov", "sen",  "rep",  "pres", "vs",
      "etc",  "e.g",  "i.e",  "inc",  "ltd",  "co",  "corp", "jan", "feb",  "mar",  "apr",
      "jun",  "jul",  "aug",  "sep",  "sept", "oct", "nov", "dec",  "no",   "u.s",  "u.k",
      "u.n",  "a.m",  "p.m",  "dept", "univ", "fig", "approx", "est", "mass", "calif", "ft",
  };
  return kAbbrev;
}

// True when the '.' at `dot` ends an abbreviation or a single-letter initial.
bool guarded_abbreviation(std::string_view text, std::size_t dot) {
  std::size_t begin = dot;
  while (begin > 0) {
    const char c = text[begin - 1];
    if (is_word_byte(static_cast<unsigned char>(c)) || c == '.') {
      --begin;
    } else {
      break;
    }
  }
  if (begin == dot) return false;
  std::string word(text.substr(begin, dot - begin));
  while (!word.empty() && word.front() == '.') word.erase(word.begin());
  if (word.empty()) return false;
  if (word.size() == 1 && word[0] >= 'A' && word[0] <= 'Z') return true;
  std::transform(word.begin(), word.end(), word.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return abbreviations().count(word) > 0;
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

struct Span {
  std::size_t begin;
  std::size_t end;
};

std::vector<Span> boundary_spans(std::string_view text) {
  std::vector<Span> spans;
  const std::size_t n = text.size();
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < n) {
    if (!is_terminator(text[i])) {
      ++i;
      continue;
    }
    const std::size_t term = i;
    std::size_t e = i;
    while (e < n && is_terminator(text[e])) ++e;
    while (e < n) {
      if (is_closing(text[e])) {
        ++e;
      } else if (utf8_quote_at(text, e, false)) {
        e += 3;
      } else {
        break;
      }
    }
    i = e;
    if (e >= n || !is_space(static_cast<unsigned char>(text[e]))) continue;
    std::size_t p = e;
    while (p < n && is_space(static_cast<unsigned char>(text[p]))) ++p;
    if (p >= n) continue;
    const char next = text[p];
    const bool opens = (next >= 'A' && next <= 'Z') || is_opening(next) || utf8_quote_at(text, p, true);
    if (!opens) continue;
    const bool single_period = text[term] == '.' && (term + 1 == n || text[term + 1] != '.');
    if (single_period && guarded_abbreviation(text, term)) continue;
    spans.push_back({start, e});
    start = e;
  }
  if (start < n) spans.push_back({start, n});
  return spans;
}

}  // namespace

std::size_t Document::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.tokens.size();
  return n;
}

std::string Document::text() const {
  std::string out;
  for (const auto& s : sentences) {
    if (!out.empty()) out += ' ';
    out += s.raw;
  }
  return out;
}

std::string ReferenceSummary::text() const {
  std::string out;
  for (const auto& s : sentences) {
    if (!out.empty()) out += ' ';
    out += s.raw;
  }
  return out;
}

QuerySpec QuerySpec::make(std::string title, std::optional<std::string> narrative,
                          bool use_narrative) {
  QuerySpec q;
  q.title = std::move(title);
  q.narrative = std::move(narrative);
  q.combined = std::string(trim(q.title));
  if (use_narrative && q.narrative) {
    const auto extra = trim(*q.narrative);
    if (!extra.empty()) {
      if (!q.combined.empty()) q.combined += ' ';
      q.combined += extra;
    }
  }
  return q;
}

std::vector<Token> tokenize(std::string_view text, const NormalizeConfig& cfg) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    if (!is_word_byte(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    const std::size_t begin = i;
    while (i < n && is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
    Token t;
    t.surface = std::string(text.substr(begin, i - begin));
    t.offset = begin;
    t.normalized = t.surface;
    if (cfg.lowercase) {
      for (auto& c : t.normalized)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    if (cfg.stem) t.normalized = porter_stem(t.normalized);
    tokens.push_back(std::move(t));
  }
  return tokens;
}

std::vector<std::string> normalized_words(std::string_view text, const NormalizeConfig& cfg) {
  std::vector<std::string> out;
  for (auto& t : tokenize(text, cfg)) out.push_back(std::move(t.normalized));
  return out;
}

Sentence make_sentence(std::string raw, std::string doc_id, std::size_t index,
                       const NormalizeConfig& cfg) {
  Sentence s;
  s.doc_id = std::move(doc_id);
  s.index = index;
  s.raw = std::move(raw);
  s.tokens = tokenize(s.raw, cfg);
  return s;
}

std::vector<Sentence> segment_sentences(std::string_view text, std::string_view doc_id,
                                        const NormalizeConfig& cfg) {
  std::vector<std::string> pieces;
  bool pending_tokenless = false;
  std::string carry;
  for (const auto& span : boundary_spans(text)) {
    const auto piece = trim(text.substr(span.begin, span.end - span.begin));
    if (piece.empty()) continue;
    const bool has_token = std::any_of(piece.begin(), piece.end(), [](char c) {
      return is_word_byte(static_cast<unsigned char>(c));
    });
    if (!has_token) {
      // Attach punctuation-only fragments to the previous sentence, or carry
      // them forward when nothing precedes them.
      if (!pieces.empty()) {
        pieces.back() += ' ';
        pieces.back() += piece;
      } else {
        if (!carry.empty()) carry += ' ';
        carry += piece;
        pending_tokenless = true;
      }
      continue;
    }
    if (pending_tokenless) {
      pieces.push_back(carry + " " + std::string(piece));
      carry.clear();
      pending_tokenless = false;
    } else {
      pieces.emplace_back(piece);
    }
  }
  // A text made only of punctuation yields no sentence; it has no tokens.
  std::vector<Sentence> out;
  out.reserve(pieces.size());
  for (std::size_t i = 0; i < pieces.size(); ++i)
    out.push_back(make_sentence(std::move(pieces[i]), std::string(doc_id), i, cfg));
  return out;
}

namespace {

using nlohmann::json;

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

const json& require(const json& obj, const char* field, const std::string& where) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) throw MissingField(field, where);
  return *it;
}

std::string require_string(const json& obj, const char* field, const std::string& where,
                           const std::string& file) {
  const json& v = require(obj, field, where);
  if (!v.is_string())
    throw MalformedCorpus(file, 0, where + "/" + field + ": expected a string");
  return v.get<std::string>();
}

const json& require_array(const json& obj, const char* field, const std::string& where,
                          const std::string& file) {
  const json& v = require(obj, field, where);
  if (!v.is_array()) throw MalformedCorpus(file, 0, where + "/" + field + ": expected an array");
  return v;
}

}  // namespace

std::vector<TopicSet> parse_topics(std::string_view json_text, const std::string& source_name,
                                   const LoadOptions& opts) {
  json root;
  try {
    root = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw MalformedCorpus(source_name, line_of_offset(json_text, e.byte == 0 ? 0 : e.byte - 1),
                          e.what());
  }
  if (!root.is_object()) throw MalformedCorpus(source_name, 1, "top level must be an object");
  const json& topics_json = require_array(root, "topics", "", source_name);

  std::vector<TopicSet> topics;
  std::set<std::string> seen_topics;
  for (std::size_t ti = 0; ti < topics_json.size(); ++ti) {
    const std::string where = "/topics/" + std::to_string(ti);
    const json& tj = topics_json[ti];
    if (!tj.is_object()) throw MalformedCorpus(source_name, 0, where + ": expected an object");

    TopicSet topic;
    topic.topic_id = require_string(tj, "topic_id", where, source_name);
    if (topic.topic_id.empty()) throw MalformedCorpus(source_name, 0, where + "/topic_id: empty");
    if (!seen_topics.insert(topic.topic_id).second)
      throw MalformedCorpus(source_name, 0, where + "/topic_id: duplicate " + topic.topic_id);

    const json& qj = require(tj, "query", where);
    if (!qj.is_object()) throw MalformedCorpus(source_name, 0, where + "/query: expected an object");
    std::string title = require_string(qj, "title", where + "/query", source_name);
    std::optional<std::string> narrative;
    if (auto it = qj.find("narrative"); it != qj.end() && !it->is_null()) {
      if (!it->is_string())
        throw MalformedCorpus(source_name, 0, where + "/query/narrative: expected a string");
      narrative = it->get<std::string>();
    }
    topic.query = QuerySpec::make(std::move(title), std::move(narrative), opts.use_narrative);
    if (topic.query.combined.empty())
      throw MalformedCorpus(source_name, 0, where + "/query: empty query text");

    const json& docs = require_array(tj, "documents", where, source_name);
    std::set<std::string> seen_docs;
    for (std::size_t di = 0; di < docs.size(); ++di) {
      const std::string dwhere = where + "/documents/" + std::to_string(di);
      if (!docs[di].is_object()) throw MalformedCorpus(source_name, 0, dwhere + ": expected an object");
      Document doc;
      doc.doc_id = require_string(docs[di], "doc_id", dwhere, source_name);
      if (!seen_docs.insert(doc.doc_id).second)
        throw MalformedCorpus(source_name, 0, dwhere + "/doc_id: duplicate " + doc.doc_id);
      const std::string text = require_string(docs[di], "text", dwhere, source_name);
      doc.sentences = segment_sentences(text, doc.doc_id, opts.normalize);
      if (doc.sentences.empty())
        throw MalformedCorpus(source_name, 0, dwhere + "/text: document has no sentences");
      topic.documents.push_back(std::move(doc));
    }

    const json& refs = require_array(tj, "references", where, source_name);
    std::set<std::string> seen_refs;
    for (std::size_t ri = 0; ri < refs.size(); ++ri) {
      const std::string rwhere = where + "/references/" + std::to_string(ri);
      if (!refs[ri].is_object()) throw MalformedCorpus(source_name, 0, rwhere + ": expected an object");
      ReferenceSummary ref;
      ref.ref_id = require_string(refs[ri], "ref_id", rwhere, source_name);
      if (!seen_refs.insert(ref.ref_id).second)
        throw MalformedCorpus(source_name, 0, rwhere + "/ref_id: duplicate " + ref.ref_id);
      const std::string text = require_string(refs[ri], "text", rwhere, source_name);
      ref.sentences = segment_sentences(text, ref.ref_id, opts.normalize);
      if (ref.sentences.empty())
        throw MalformedCorpus(source_name, 0, rwhere + "/text: reference has no sentences");
      topic.references.push_back(std::move(ref));
    }

    if (topic.documents.empty()) throw EmptyTopic(topic.topic_id, "no documents");
    if (topic.references.empty()) throw EmptyTopic(topic.topic_id, "no references");
    topics.push_back(std::move(topic));
  }
  return topics;
}

std::vector<TopicSet> load_topics(const std::filesystem::path& path, const LoadOptions& opts) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::directory_iterator(path))
      if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
  } else if (fs::exists(path)) {
    files.push_back(path);
  } else {
    throw MalformedCorpus(path.string(), 0, "no such file or directory");
  }

  std::vector<TopicSet> topics;
  std::set<std::string> ids;
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw MalformedCorpus(file.string(), 0, "cannot open");
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    for (auto& t : parse_topics(text, file.string(), opts)) {
      if (!ids.insert(t.topic_id).second)
        throw MalformedCorpus(file.string(), 0, "duplicate topic_id " + t.topic_id + " across files");
      topics.push_back(std::move(t));
    }
  }
  if (topics.empty()) throw EmptyTopic(path.string(), "corpus contains no topics");
  return topics;
}

std::size_t validation_count(std::size_t n, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0))
    throw InvalidConfig("validation_fraction must be in [0, 1)");
  // Round half up; the epsilon absorbs representation error such as 0.15 * 10.
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 0.5 + 1e-9));
}

std::pair<std::vector<TopicSet>, std::vector<TopicSet>> split_train_validation(
    const std::vector<TopicSet>& topics, const SplitConfig& cfg) {
  const std::size_t n_val = validation_count(topics.size(), cfg.validation_fraction);

  std::vector<std::size_t> order(topics.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return topics[a].topic_id < topics[b].topic_id;
  });
  std::mt19937_64 rng(cfg.seed);
  seeded_shuffle(order, rng);

  std::vector<bool> is_val(topics.size(), false);
  for (std::size_t i = 0; i < n_val; ++i) is_val[order[i]] = true;

  std::pair<std::vector<TopicSet>, std::vector<TopicSet>> out;
  for (std::size_t i = 0; i < topics.size(); ++i)
    (is_val[i] ? out.second : out.first).push_back(topics[i]);
  return out;
}

}  // namespace qfsum
