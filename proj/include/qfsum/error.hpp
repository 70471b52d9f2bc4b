#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qfsum {

/// Base of every error raised by the library. `kind()` is a stable short
/// name (e.g. "MissingField") used in CLI diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

// corpus

class MalformedCorpus : public Error {
 public:
  MalformedCorpus(std::string file, std::size_t line, const std::string& reason)
      : Error("MalformedCorpus", file + ":" + std::to_string(line) + ": " + reason),
        file_(std::move(file)),
        line_(line) {}
  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

class MissingField : public Error {
 public:
  explicit MissingField(std::string field, const std::string& where = {})
      : Error("MissingField", where.empty() ? field : field + " (in " + where + ")"),
        field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class EmptyTopic : public Error {
 public:
  explicit EmptyTopic(std::string topic_id, const std::string& reason = "no documents or references")
      : Error("EmptyTopic", topic_id + ": " + reason), topic_id_(std::move(topic_id)) {}
  const std::string& topic_id() const noexcept { return topic_id_; }

 private:
  std::string topic_id_;
};

// scorer / backend

class UnfittedStatistics : public Error {
 public:
  explicit UnfittedStatistics(const std::string& scorer)
      : Error("UnfittedStatistics", scorer + " requires fitted corpus statistics") {}
};

class BackendUnavailable : public Error {
 public:
  explicit BackendUnavailable(const std::string& detail) : Error("BackendUnavailable", detail) {}
};

class HandshakeFailed : public Error {
 public:
  explicit HandshakeFailed(const std::string& detail) : Error("HandshakeFailed", detail) {}
};

class Timeout : public Error {
 public:
  explicit Timeout(const std::string& detail) : Error("Timeout", detail) {}
};

class ProtocolViolation : public Error {
 public:
  explicit ProtocolViolation(const std::string& detail) : Error("ProtocolViolation", detail) {}
};

class PartialFailure : public Error {
 public:
  PartialFailure(std::size_t index, const std::string& reason)
      : Error("PartialFailure", "pair " + std::to_string(index) + ": " + reason), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

// weaklabel

class EmptyGoldPool : public Error {
 public:
  explicit EmptyGoldPool(const std::string& doc_id)
      : Error("EmptyGoldPool", "no gold sentences available for " + doc_id) {}
};

class QueryTooLong : public Error {
 public:
  QueryTooLong(std::size_t query_tokens, std::size_t max_tokens)
      : Error("QueryTooLong", "query has " + std::to_string(query_tokens) +
                                  " tokens, input budget is " + std::to_string(max_tokens)) {}
};

// generate

class EmptyGeneration : public Error {
 public:
  explicit EmptyGeneration(const std::string& doc_id)
      : Error("EmptyGeneration", "backend returned no text for " + doc_id) {}
};

/// Wraps a generator failure with the document it happened on.
class GenerationFailed : public Error {
 public:
  GenerationFailed(std::string doc_id, std::size_t doc_position, const std::string& cause)
      : Error("GenerationFailed",
              "document " + doc_id + " (position " + std::to_string(doc_position) + "): " + cause),
        doc_id_(std::move(doc_id)),
        doc_position_(doc_position) {}
  const std::string& doc_id() const noexcept { return doc_id_; }
  std::size_t doc_position() const noexcept { return doc_position_; }

 private:
  std::string doc_id_;
  std::size_t doc_position_;
};

// assemble

class EmptyPool : public Error {
 public:
  explicit EmptyPool(const std::string& topic_id)
      : Error("EmptyPool", "no candidates for topic " + topic_id) {}
};

// rouge

class NoReferences : public Error {
 public:
  NoReferences() : Error("NoReferences", "at least one reference is required") {}
};

class UnknownTopic : public Error {
 public:
  explicit UnknownTopic(std::string topic_id)
      : Error("UnknownTopic", topic_id), topic_id_(std::move(topic_id)) {}
  const std::string& topic_id() const noexcept { return topic_id_; }

 private:
  std::string topic_id_;
};

// stats

class DegenerateSample : public Error {
 public:
  DegenerateSample() : Error("DegenerateSample", "paired differences have zero variance") {}
};

class TooFewPairs : public Error {
 public:
  explicit TooFewPairs(std::size_t n)
      : Error("TooFewPairs", "need at least 2 pairs, got " + std::to_string(n)) {}
};

class ZeroBaseline : public Error {
 public:
  ZeroBaseline() : Error("ZeroBaseline", "relative change against a zero baseline") {}
};

class InvalidConfig : public Error {
 public:
  explicit InvalidConfig(const std::string& detail) : Error("InvalidConfig", detail) {}
};

}  // namespace qfsum
