#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

namespace halo {

inline constexpr std::string_view kToolVersion = "halo 0.3.0";

// Hallucination scores live in [0, kMaxHallucinationScore].
inline constexpr double kMaxHallucinationScore = 0.8;

struct Sentence {
  std::string id;
  std::string text;
  std::string lang;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct TranslationRecord {
  std::string id;
  std::string source;
  std::string translation;
  std::string src_lang;
  std::string tgt_lang;
  std::optional<double> hs;
  std::map<std::string, std::string> meta;

  friend bool operator==(const TranslationRecord&, const TranslationRecord&) = default;
};

struct PreferenceTriplet {
  std::string id;
  std::string source;
  std::string preferred;
  std::string dispreferred;
  double phi_preferred = 0.0;
  double phi_dispreferred = 0.0;
  std::string src_lang;
  std::string tgt_lang;

  friend bool operator==(const PreferenceTriplet&, const PreferenceTriplet&) = default;
};

enum class Schema { kSentence, kTranslation, kTriplet };

std::string_view to_string(Schema schema);
Schema parse_schema(std::string_view name);

struct DatasetManifest {
  std::string path;
  std::size_t record_count = 0;
  Schema schema = Schema::kSentence;
  std::string created_by{kToolVersion};
};

nlohmann::json to_json(const DatasetManifest& m);

// Maps each record type to its schema tag.
template <typename Record> struct SchemaOf;
template <> struct SchemaOf<Sentence> {
  static constexpr Schema value = Schema::kSentence;
};
template <> struct SchemaOf<TranslationRecord> {
  static constexpr Schema value = Schema::kTranslation;
};
template <> struct SchemaOf<PreferenceTriplet> {
  static constexpr Schema value = Schema::kTriplet;
};

// Line-number IDs assigned when a record arrives without one.
std::string line_id(std::size_t line);

}  // namespace halo
