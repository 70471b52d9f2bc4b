#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qfsum/assemble.hpp"
#include "qfsum/rouge.hpp"

namespace qfsum {

/// Writes to a sibling temporary file and renames it over `path`, creating
/// parent directories as needed.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

void write_jsonl(const std::filesystem::path& path, std::span<const nlohmann::json> rows);

std::string read_file(const std::filesystem::path& path);

/// Summary output: summaries.jsonl plus one <topic_id>.txt per topic.
void write_summaries(const std::filesystem::path& jsonl_path, const std::filesystem::path& text_dir,
                     std::span<const FinalSummary> summaries);

/// Reads {"topic_id","summary"} lines; other keys are ignored.
std::vector<SystemSummary> read_summaries_jsonl(const std::filesystem::path& path);

/// A file-name-safe version of a topic id.
std::string safe_file_stem(std::string_view id);

}  // namespace qfsum
