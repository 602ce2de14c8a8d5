#include "halo/dataset.hpp"

#include <cmath>
#include <cstdio>

#include "halo/error.hpp"
#include "halo/text.hpp"

namespace halo {

using nlohmann::json;

std::string_view to_string(Schema schema) {
  switch (schema) {
    case Schema::kSentence: return "sentence";
    case Schema::kTranslation: return "translation";
    case Schema::kTriplet: return "triplet";
  }
  return "unknown";
}

Schema parse_schema(std::string_view name) {
  if (name == "sentence") return Schema::kSentence;
  if (name == "translation") return Schema::kTranslation;
  if (name == "triplet") return Schema::kTriplet;
  throw Error(ErrorKind::kInvalidArgument, "unknown schema \"" + std::string(name) + "\"");
}

json to_json(const DatasetManifest& m) {
  return json{{"path", m.path},
              {"record_count", m.record_count},
              {"schema", std::string(to_string(m.schema))},
              {"created_by", m.created_by}};
}

std::string line_id(std::size_t line) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "line-%06zu", line);
  return buf;
}

namespace {

std::string required_string(const json& j, const char* field, std::size_t line) {
  const auto it = j.find(field);
  if (it == j.end() || it->is_null()) throw SchemaViolation(line, field, "missing");
  if (!it->is_string()) throw SchemaViolation(line, field, "expected string");
  return it->get<std::string>();
}

double required_number(const json& j, const char* field, std::size_t line) {
  const auto it = j.find(field);
  if (it == j.end() || it->is_null()) throw SchemaViolation(line, field, "missing");
  if (!it->is_number()) throw SchemaViolation(line, field, "expected number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw SchemaViolation(line, field, "not finite");
  return v;
}

std::string id_or_line(const json& j, std::size_t line) {
  const auto it = j.find("id");
  if (it == j.end() || it->is_null()) return line_id(line);
  if (!it->is_string()) throw SchemaViolation(line, "id", "expected string");
  auto id = it->get<std::string>();
  if (id.empty()) throw SchemaViolation(line, "id", "empty");
  return id;
}

void require_object(const json& j, std::size_t line) {
  if (!j.is_object()) throw SchemaViolation(line, "<root>", "expected JSON object");
}

}  // namespace

Sentence sentence_from_json(const json& j, std::size_t line) {
  require_object(j, line);
  Sentence s;
  s.id = id_or_line(j, line);
  s.text = required_string(j, "text", line);
  s.lang = required_string(j, "lang", line);
  return s;
}

TranslationRecord translation_from_json(const json& j, std::size_t line) {
  require_object(j, line);
  TranslationRecord r;
  r.id = id_or_line(j, line);
  r.source = required_string(j, "source", line);
  r.translation = required_string(j, "translation", line);
  r.src_lang = required_string(j, "src_lang", line);
  r.tgt_lang = required_string(j, "tgt_lang", line);
  if (r.src_lang == r.tgt_lang) {
    throw SchemaViolation(line, "tgt_lang", "equals src_lang");
  }
  if (const auto it = j.find("hs"); it != j.end() && !it->is_null()) {
    const double hs = required_number(j, "hs", line);
    if (hs < 0.0 || hs > kMaxHallucinationScore) {
      throw SchemaViolation(line, "hs", "outside [0, 0.8]");
    }
    r.hs = hs;
  }
  if (const auto it = j.find("meta"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw SchemaViolation(line, "meta", "expected object");
    for (const auto& [k, v] : it->items()) {
      if (!v.is_string()) throw SchemaViolation(line, "meta", "value of \"" + k + "\" is not a string");
      r.meta.emplace(k, v.get<std::string>());
    }
  }
  return r;
}

PreferenceTriplet triplet_from_json(const json& j, std::size_t line) {
  require_object(j, line);
  PreferenceTriplet t;
  t.id = id_or_line(j, line);
  t.source = required_string(j, "source", line);
  t.preferred = required_string(j, "preferred", line);
  t.dispreferred = required_string(j, "dispreferred", line);
  t.phi_preferred = required_number(j, "phi_preferred", line);
  t.phi_dispreferred = required_number(j, "phi_dispreferred", line);
  t.src_lang = required_string(j, "src_lang", line);
  t.tgt_lang = required_string(j, "tgt_lang", line);
  if (t.preferred == t.dispreferred) {
    throw SchemaViolation(line, "dispreferred", "identical to preferred");
  }
  return t;
}

template <>
Sentence record_from_json<Sentence>(const json& j, std::size_t line) {
  return sentence_from_json(j, line);
}
template <>
TranslationRecord record_from_json<TranslationRecord>(const json& j, std::size_t line) {
  return translation_from_json(j, line);
}
template <>
PreferenceTriplet record_from_json<PreferenceTriplet>(const json& j, std::size_t line) {
  return triplet_from_json(j, line);
}

// nlohmann::json objects are std::map backed, so keys serialize alphabetically.
json to_json(const Sentence& r) {
  return json{{"id", r.id}, {"text", text::encode_newlines(r.text)}, {"lang", r.lang}};
}

json to_json(const TranslationRecord& r) {
  json meta = json::object();
  for (const auto& [k, v] : r.meta) meta[k] = text::encode_newlines(v);
  return json{{"id", r.id},
              {"source", text::encode_newlines(r.source)},
              {"translation", text::encode_newlines(r.translation)},
              {"src_lang", r.src_lang},
              {"tgt_lang", r.tgt_lang},
              {"hs", r.hs ? json(*r.hs) : json(nullptr)},
              {"meta", std::move(meta)}};
}

json to_json(const PreferenceTriplet& r) {
  return json{{"id", r.id},
              {"source", text::encode_newlines(r.source)},
              {"preferred", text::encode_newlines(r.preferred)},
              {"dispreferred", text::encode_newlines(r.dispreferred)},
              {"phi_preferred", r.phi_preferred},
              {"phi_dispreferred", r.phi_dispreferred},
              {"src_lang", r.src_lang},
              {"tgt_lang", r.tgt_lang}};
}

template <typename Record>
DatasetReader<Record>::DatasetReader(const std::filesystem::path& path) : path_(path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorKind::kMissingFile, path.string());
  }
  in_.open(path, std::ios::binary);
  if (!in_) throw Error(ErrorKind::kIoFailure, "cannot open " + path.string());
}

template <typename Record>
std::optional<Record> DatasetReader<Record>::next() {
  std::string buf;
  while (std::getline(in_, buf)) {
    ++line_;
    if (!buf.empty() && buf.back() == '\r') buf.pop_back();
    if (text::trim(buf).empty()) continue;
    json j;
    try {
      j = json::parse(buf);
    } catch (const json::parse_error& e) {
      throw SchemaViolation(line_, "<root>", std::string("malformed JSON: ") + e.what());
    }
    Record r = record_from_json<Record>(j, line_);
    if (!seen_ids_.insert(r.id).second) {
      throw Error(ErrorKind::kDuplicateId, r.id + " (line " + std::to_string(line_) + ")");
    }
    return r;
  }
  if (in_.bad()) throw Error(ErrorKind::kIoFailure, "read failed: " + path_.string());
  return std::nullopt;
}

template <typename Record>
DatasetWriter<Record>::DatasetWriter(const std::filesystem::path& path) : path_(path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw Error(ErrorKind::kIoFailure, path.string());
}

template <typename Record>
void DatasetWriter<Record>::write(const Record& r) {
  std::string line;
  try {
    line = to_jsonl_line(r);
  } catch (const json::type_error& e) {
    throw Error(ErrorKind::kIoFailure, path_.string() + ": record " + r.id + ": " + e.what());
  }
  out_ << line << '\n';
  if (!out_) throw Error(ErrorKind::kIoFailure, path_.string());
  ++count_;
}

template <typename Record>
DatasetManifest DatasetWriter<Record>::finish() {
  if (!finished_) {
    out_.flush();
    if (!out_) throw Error(ErrorKind::kIoFailure, path_.string());
    out_.close();
    finished_ = true;
  }
  DatasetManifest m;
  m.path = path_.string();
  m.record_count = count_;
  m.schema = SchemaOf<Record>::value;
  return m;
}

std::size_t count_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kMissingFile, path.string());
  std::size_t n = 0;
  std::string buf;
  while (std::getline(in, buf)) {
    if (!text::trim(buf).empty()) ++n;
  }
  return n;
}

template class DatasetReader<Sentence>;
template class DatasetReader<TranslationRecord>;
template class DatasetReader<PreferenceTriplet>;
template class DatasetWriter<Sentence>;
template class DatasetWriter<TranslationRecord>;
template class DatasetWriter<PreferenceTriplet>;

}  // namespace halo
