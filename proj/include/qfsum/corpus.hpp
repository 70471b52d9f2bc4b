#pragma once

// Corpus data model: topics (query + documents + gold references), sentence
// segmentation, tokenization and the seeded train/validation split.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qfsum {

struct NormalizeConfig {
  bool lowercase = true;
  bool stem = false;
};

struct Token {
  std::string surface;
  std::string normalized;
  // Byte offset of `surface` in the text it was tokenized from.
  std::size_t offset = 0;

  std::size_t end() const { return offset + surface.size(); }
};

struct Sentence {
  std::string doc_id;
  std::size_t index = 0;
  std::string raw;
  std::vector<Token> tokens;
};

struct Document {
  std::string doc_id;
  std::vector<Sentence> sentences;

  std::size_t token_count() const;
  /// Sentence raws joined by single spaces.
  std::string text() const;
};

struct QuerySpec {
  std::string title;
  std::optional<std::string> narrative;
  std::string combined;

  /// Builds `combined` as title + " " + narrative (or the title alone).
  static QuerySpec make(std::string title, std::optional<std::string> narrative,
                        bool use_narrative = true);
};

struct ReferenceSummary {
  std::string ref_id;
  std::vector<Sentence> sentences;

  std::string text() const;
};

struct TopicSet {
  std::string topic_id;
  QuerySpec query;
  std::vector<Document> documents;
  std::vector<ReferenceSummary> references;
};

struct SplitConfig {
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct LoadOptions {
  NormalizeConfig normalize{};
  // false: the query is the title only.
  bool use_narrative = true;
};

/// Tokens are maximal runs of word bytes: ASCII letters and digits, plus any
/// byte >= 0x80 so multibyte UTF-8 letters stay inside their word.
std::vector<Token> tokenize(std::string_view text, const NormalizeConfig& cfg = {});

/// Convenience: just the normalized forms.
std::vector<std::string> normalized_words(std::string_view text, const NormalizeConfig& cfg = {});

/// Rule-based segmentation. A boundary follows '.', '!' or '?' (plus any
/// closing quotes/brackets) when the next non-space character is uppercase
/// or an opening quote/bracket, unless the word before the period is a
/// known abbreviation or a single-letter initial. Fragments without any
/// token are merged into a neighbouring sentence so no text is lost.
std::vector<Sentence> segment_sentences(std::string_view text, std::string_view doc_id = {},
                                        const NormalizeConfig& cfg = {});

/// Builds a sentence from already-segmented text (tokens recomputed).
Sentence make_sentence(std::string raw, std::string doc_id, std::size_t index,
                       const NormalizeConfig& cfg = {});

/// Parses a corpus JSON document. `source_name` is used in error positions.
std::vector<TopicSet> parse_topics(std::string_view json_text, const std::string& source_name,
                                   const LoadOptions& opts = {});

/// Loads a corpus file, or every *.json file of a directory in name order.
std::vector<TopicSet> load_topics(const std::filesystem::path& path, const LoadOptions& opts = {});

/// Seeded shuffle of the lexicographically sorted topic ids; the first
/// round-half-up(fraction * n) ids form the validation set. Both outputs keep
/// the input order of the topics.
std::pair<std::vector<TopicSet>, std::vector<TopicSet>> split_train_validation(
    const std::vector<TopicSet>& topics, const SplitConfig& cfg);

/// Number of validation topics for `n` topics.
std::size_t validation_count(std::size_t n, double fraction);

}  // namespace qfsum
