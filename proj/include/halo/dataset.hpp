#pragma once

// Streaming JSONL input/output for the three dataset schemas.
//
// Emitted objects have alphabetically ordered keys and embedded newlines
// encoded as "<NEWLINE>". Readers hold one line in memory at a time; only the
// set of seen IDs grows with the file.

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "halo/core.hpp"

namespace halo {

// Per-record JSON conversion. `line` is used for error reporting and for
// assigning missing IDs.
Sentence sentence_from_json(const nlohmann::json& j, std::size_t line);
TranslationRecord translation_from_json(const nlohmann::json& j, std::size_t line);
PreferenceTriplet triplet_from_json(const nlohmann::json& j, std::size_t line);

nlohmann::json to_json(const Sentence& r);
nlohmann::json to_json(const TranslationRecord& r);
nlohmann::json to_json(const PreferenceTriplet& r);

template <typename Record>
Record record_from_json(const nlohmann::json& j, std::size_t line);
template <>
Sentence record_from_json<Sentence>(const nlohmann::json& j, std::size_t line);
template <>
TranslationRecord record_from_json<TranslationRecord>(const nlohmann::json& j, std::size_t line);
template <>
PreferenceTriplet record_from_json<PreferenceTriplet>(const nlohmann::json& j, std::size_t line);

// Serialized line without the trailing newline.
template <typename Record>
std::string to_jsonl_line(const Record& r) {
  return to_json(r).dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
}

template <typename Record>
class DatasetReader {
 public:
  explicit DatasetReader(const std::filesystem::path& path);

  // Next record in file order, or nullopt at end of file. Blank lines are
  // skipped but still count towards line numbers.
  std::optional<Record> next();

  std::size_t line() const { return line_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t line_ = 0;
  std::unordered_set<std::string> seen_ids_;
};

template <typename Record>
class DatasetWriter {
 public:
  explicit DatasetWriter(const std::filesystem::path& path);

  void write(const Record& r);
  DatasetManifest finish();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t count_ = 0;
  bool finished_ = false;
};

template <typename Record>
std::vector<Record> read_dataset(const std::filesystem::path& path) {
  DatasetReader<Record> reader(path);
  std::vector<Record> out;
  while (auto r = reader.next()) out.push_back(std::move(*r));
  return out;
}

template <typename Range>
DatasetManifest write_dataset(const Range& records, const std::filesystem::path& path) {
  using Record = std::decay_t<decltype(*std::begin(records))>;
  DatasetWriter<Record> writer(path);
  for (const auto& r : records) writer.write(r);
  return writer.finish();
}

// Counts non-blank lines; used to cross-check manifests.
std::size_t count_records(const std::filesystem::path& path);

extern template class DatasetReader<Sentence>;
extern template class DatasetReader<TranslationRecord>;
extern template class DatasetReader<PreferenceTriplet>;
extern template class DatasetWriter<Sentence>;
extern template class DatasetWriter<TranslationRecord>;
extern template class DatasetWriter<PreferenceTriplet>;

}  // namespace halo
