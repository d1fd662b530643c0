#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "textseg/corpus.hpp"

namespace textseg {

/// Labeled record: {"id", "sentences", "labels", "segment_sizes", "kinds"}.
/// Only id/sentences/labels are required on input; segment sizes are derived
/// from the labels and kinds default to prose.
nlohmann::json to_json(const LabeledDocument& doc);
LabeledDocument labeled_from_json(const nlohmann::json& record);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

/// Loads a labeled corpus from
///  - `*.jsonl`: one record per line,
///  - `*.json`: a single record,
///  - anything else: a manifest of record paths relative to the manifest.
std::vector<LabeledDocument> load_corpus(const std::filesystem::path& path);

void save_jsonl(const std::filesystem::path& path, const std::vector<LabeledDocument>& docs);

/// Newline-delimited relative paths; blank lines ignored.
std::vector<std::string> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<std::string>& entries);

/// JSON with a trailing newline, 2-space indent.
std::string pretty(const nlohmann::json& j);

}  // namespace textseg
