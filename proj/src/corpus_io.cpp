#include "textseg/corpus_io.hpp"

#include <fstream>
#include <sstream>

#include "textseg/error.hpp"

namespace textseg {

using nlohmann::json;

json to_json(const LabeledDocument& doc) {
  json sentences = json::array();
  json kinds = json::array();
  for (const auto& s : doc.sentences) {
    sentences.push_back(s.text);
    kinds.push_back(to_string(s.kind));
  }
  json labels = json::array();
  for (auto y : doc.labels) labels.push_back(static_cast<int>(y));
  return json{{"id", doc.id},
              {"sentences", std::move(sentences)},
              {"labels", std::move(labels)},
              {"segment_sizes", doc.segment_sizes},
              {"kinds", std::move(kinds)}};
}

LabeledDocument labeled_from_json(const json& record) {
  try {
    LabeledDocument doc;
    doc.id = record.at("id").get<std::string>();
    const auto& sentences = record.at("sentences");
    const json* kinds = record.contains("kinds") ? &record.at("kinds") : nullptr;
    if (kinds && kinds->size() != sentences.size()) {
      throw_data("InvalidRecord", "document '" + doc.id + "': kinds/sentences length mismatch");
    }
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      Sentence s;
      s.text = sentences[i].get<std::string>();
      if (kinds) s.kind = sentence_kind_from_string((*kinds)[i].get<std::string>());
      doc.sentences.push_back(std::move(s));
    }
    for (const auto& y : record.at("labels")) {
      const int v = y.get<int>();
      if (v != 0 && v != 1) throw_data("InvalidRecord", "document '" + doc.id + "': labels must be 0/1");
      doc.labels.push_back(static_cast<std::uint8_t>(v));
    }
    if (record.contains("segment_sizes")) {
      doc.segment_sizes = record.at("segment_sizes").get<std::vector<std::size_t>>();
    } else if (!doc.sentences.empty()) {
      std::size_t run = 0;
      for (auto y : doc.labels) {
        ++run;
        if (y) {
          doc.segment_sizes.push_back(run);
          run = 0;
        }
      }
      doc.segment_sizes.push_back(run + 1);
    }
    validate_labeled(doc);
    return doc;
  } catch (const json::exception& e) {
    throw_data("InvalidRecord", e.what());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("Unreadable", "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw_data("Unreadable", "read failed for '" + path.string() + "'");
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_data("Unwritable", "cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw_data("Unwritable", "write failed for '" + path.string() + "'");
}

std::vector<LabeledDocument> load_corpus(const std::filesystem::path& path) {
  std::vector<LabeledDocument> docs;
  const auto ext = path.extension().string();
  auto parse = [&](const std::string& text, const std::string& where) {
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      throw_data("InvalidRecord", where + ": " + e.what());
    }
  };
  if (ext == ".jsonl") {
    std::istringstream in(read_text_file(path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      docs.push_back(labeled_from_json(parse(line, path.string() + ":" + std::to_string(line_no))));
    }
  } else if (ext == ".json") {
    docs.push_back(labeled_from_json(parse(read_text_file(path), path.string())));
  } else {
    const auto base = path.parent_path();
    for (const auto& entry : read_manifest(path)) {
      const auto record = base / entry;
      docs.push_back(labeled_from_json(parse(read_text_file(record), record.string())));
    }
  }
  return docs;
}

void save_jsonl(const std::filesystem::path& path, const std::vector<LabeledDocument>& docs) {
  std::string out;
  for (const auto& d : docs) {
    out += to_json(d).dump();
    out += '\n';
  }
  write_text_file(path, out);
}

std::vector<std::string> read_manifest(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) entries.push_back(line);
  }
  return entries;
}

void write_manifest(const std::filesystem::path& path, const std::vector<std::string>& entries) {
  std::string out;
  for (const auto& e : entries) {
    out += e;
    out += '\n';
  }
  write_text_file(path, out);
}

std::string pretty(const json& j) { return j.dump(2) + "\n"; }

}  // namespace textseg
