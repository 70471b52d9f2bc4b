#include "qfsum/io.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include "qfsum/error.hpp"

namespace qfsum {

using nlohmann::json;

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("IoError", "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("IoError", "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_jsonl(const std::filesystem::path& path, std::span<const json> rows) {
  std::string content;
  for (const auto& row : rows) {
    content += row.dump(-1, ' ', false, json::error_handler_t::replace);
    content += '\n';
  }
  write_file_atomic(path, content);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IoError", "cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::string safe_file_stem(std::string_view id) {
  std::string out;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                    c == '_' || c == '.';
    out += ok ? c : '_';
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

void write_summaries(const std::filesystem::path& jsonl_path, const std::filesystem::path& text_dir,
                     std::span<const FinalSummary> summaries) {
  std::vector<json> rows;
  rows.reserve(summaries.size());
  for (const auto& s : summaries) rows.push_back(to_json(s));
  write_jsonl(jsonl_path, rows);
  for (const auto& s : summaries) write_file_atomic(text_dir / (safe_file_stem(s.topic_id) + ".txt"), s.text() + "\n");
}

std::vector<SystemSummary> read_summaries_jsonl(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<SystemSummary> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json row;
    try {
      row = json::parse(line);
    } catch (const json::parse_error& e) {
      throw MalformedCorpus(path.string(), line_no, e.what());
    }
    if (!row.is_object()) throw MalformedCorpus(path.string(), line_no, "expected an object");
    for (const char* field : {"topic_id", "summary"}) {
      auto it = row.find(field);
      if (it == row.end()) throw MissingField(field, path.string() + ":" + std::to_string(line_no));
      if (!it->is_string()) throw MalformedCorpus(path.string(), line_no, std::string(field) + " must be a string");
    }
    out.push_back({row["topic_id"].get<std::string>(), row["summary"].get<std::string>()});
  }
  return out;
}

}  // namespace qfsum
