#pragma once

// Monolingual cleaning pipeline: heuristic -> length -> dedup -> language ID.
//
// Each stage is a small streaming object: process() decides whether a
// sentence survives (the heuristic stage may rewrite newlines) and report()
// returns the running accounting. The batch functions below wrap them.
//
// Heuristic drop reasons, checked in this order:
//   empty         text is empty or whitespace only
//   decode_error  invalid UTF-8 or U+FFFD REPLACEMENT CHARACTER
//   control_char  a Cc code point other than tab (after "\n" -> "<NEWLINE>")
//   markup        one of kMarkupPatterns matches
// Other stages drop with: too_short, too_long, duplicate, language.

#include <map>
#include <memory>
#include <regex>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "halo/clients.hpp"
#include "halo/core.hpp"

namespace halo::filters {

struct FilterReport {
  std::string stage;
  std::size_t input_count = 0;
  std::size_t kept_count = 0;
  std::size_t dropped_count = 0;
  std::map<std::string, std::size_t> drop_reasons{};
  std::string note{};

  void record_keep();
  void record_drop(const std::string& reason);
  nlohmann::json to_json() const;
};

// HTML/JSON structure detectors (ECMAScript syntax, case-insensitive).
inline constexpr const char* kMarkupPatterns[] = {
    R"(<\s*([a-z][a-z0-9]*)\b[^<>]*>[\s\S]*<\s*/\s*\1\s*>)",  // element with closing tag
    R"(</\s*[a-z][a-z0-9]*\s*>)",                            // stray closing tag
    R"(<\s*(a|br|div|hr|iframe|img|input|li|link|meta|p|script|span|style|table|td|tr|ul)\b[^<>]*/?\s*>)",
    R"(&(nbsp|amp|lt|gt|quot|apos|#[0-9]{1,7}|#x[0-9a-f]{1,6});)",  // HTML entity
    R"(\{\s*"[^"]*"\s*:)",                                   // JSON object key
    R"(\[\s*\{)",                                            // JSON array of objects
    R"("[^"\s][^"]*"\s*:\s*("|\[|\{|-?[0-9]|true\b|false\b|null\b))",  // "key": value
};

class HeuristicFilter {
 public:
  HeuristicFilter();
  // Returns the drop reason, or an empty string when the sentence is kept.
  // Kept sentences have raw newlines replaced by "<NEWLINE>".
  std::string classify(std::string& text) const;
  bool process(Sentence& s);
  const FilterReport& report() const { return report_; }

 private:
  std::vector<std::regex> markup_;
  FilterReport report_{.stage = "heuristic"};
};

class LengthFilter {
 public:
  LengthFilter(int min_words = 5, int max_words = 100);
  bool process(Sentence& s);
  const FilterReport& report() const { return report_; }

 private:
  int min_words_;
  int max_words_;
  FilterReport report_{.stage = "length"};
};

// First occurrence of each exact text wins.
class DedupFilter {
 public:
  bool process(Sentence& s);
  const FilterReport& report() const { return report_; }

 private:
  std::unordered_set<std::string> seen_;
  FilterReport report_{.stage = "dedup"};
};

// Letter-frequency and function-word language guesser used when no LID service is configured.
// Covers en, de, fr, es, cs, is (Latin letter profiles) and zh, ja, ko, ru,
// ar (script share). Lower accuracy than a trained model.
class BuiltinLanguageIdentifier final : public clients::LanguageIdentifier {
 public:
  double probability(const std::string& text, const std::string& lang) override;
  std::string name() const override { return "builtin-letter-profile"; }
  static std::vector<std::string> supported_languages();
};

class LangIdFilter {
 public:
  // `lid` may be null, in which case the builtin identifier is used unless
  // allow_fallback is false (then LidUnavailable is thrown).
  LangIdFilter(std::shared_ptr<clients::LanguageIdentifier> lid, std::string expected,
               double threshold = 0.5, bool allow_fallback = true);
  bool process(Sentence& s);
  const FilterReport& report() const { return report_; }

 private:
  std::shared_ptr<clients::LanguageIdentifier> lid_;
  std::string expected_;
  double threshold_;
  FilterReport report_{.stage = "langid"};
};

struct FilterResult {
  std::vector<Sentence> kept;
  FilterReport report;
};

FilterResult heuristic_filter(std::vector<Sentence> sentences);
FilterResult length_filter(std::vector<Sentence> sentences, int min_words = 5, int max_words = 100);
FilterResult dedup_filter(std::vector<Sentence> sentences);
FilterResult langid_filter(std::vector<Sentence> sentences,
                           std::shared_ptr<clients::LanguageIdentifier> lid,
                           const std::string& expected, double threshold = 0.5,
                           bool allow_fallback = true);

struct PipelineOptions {
  bool heuristic = true;
  bool length = true;
  bool dedup = true;
  bool langid = true;
  int min_words = 5;
  int max_words = 100;
  std::string expected_lang = "en";
  double lid_threshold = 0.5;
  bool lid_fallback = true;
};

// Fixed-order chain of the enabled stages; stage k's input count equals
// stage k-1's kept count.
class FilterPipeline {
 public:
  FilterPipeline(const PipelineOptions& opts, std::shared_ptr<clients::LanguageIdentifier> lid);
  bool process(Sentence& s);
  std::vector<FilterReport> reports() const;

 private:
  std::unique_ptr<HeuristicFilter> heuristic_;
  std::unique_ptr<LengthFilter> length_;
  std::unique_ptr<DedupFilter> dedup_;
  std::unique_ptr<LangIdFilter> langid_;
};

struct PipelineResult {
  std::vector<Sentence> kept;
  std::vector<FilterReport> reports;
};

PipelineResult run_pipeline(std::vector<Sentence> sentences, const PipelineOptions& opts,
                            std::shared_ptr<clients::LanguageIdentifier> lid = nullptr);

}  // namespace halo::filters
