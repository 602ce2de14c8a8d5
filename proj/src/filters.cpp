#include "halo/filters.hpp"

#include <cmath>
#include <limits>
#include <unordered_map>

#include "halo/error.hpp"
#include "halo/text.hpp"

namespace halo::filters {

void FilterReport::record_keep() {
  ++input_count;
  ++kept_count;
}

void FilterReport::record_drop(const std::string& reason) {
  ++input_count;
  ++dropped_count;
  ++drop_reasons[reason];
}

nlohmann::json FilterReport::to_json() const {
  nlohmann::json j{{"stage", stage},
                   {"input_count", input_count},
                   {"kept_count", kept_count},
                   {"dropped_count", dropped_count},
                   {"drop_reasons", drop_reasons}};
  if (!note.empty()) j["note"] = note;
  return j;
}

HeuristicFilter::HeuristicFilter() {
  for (const char* p : kMarkupPatterns) {
    markup_.emplace_back(p, std::regex::ECMAScript | std::regex::icase | std::regex::optimize);
  }
}

std::string HeuristicFilter::classify(std::string& s) const {
  if (text::trim(s).empty()) return "empty";
  bool valid = true;
  const std::u32string cps = text::decode_utf8(s, &valid);
  if (!valid) return "decode_error";
  for (char32_t cp : cps) {
    if (cp == U'�') return "decode_error";
  }
  s = text::encode_newlines(s);
  for (char32_t cp : text::decode_utf8(s)) {
    if (cp == U'\t') continue;
    if (cp < 0x20 || (cp >= 0x7F && cp <= 0x9F)) return "control_char";
  }
  for (const auto& re : markup_) {
    if (std::regex_search(s, re)) return "markup";
  }
  return {};
}

bool HeuristicFilter::process(Sentence& s) {
  std::string t = s.text;
  const std::string reason = classify(t);
  if (!reason.empty()) {
    report_.record_drop(reason);
    return false;
  }
  s.text = std::move(t);
  report_.record_keep();
  return true;
}

LengthFilter::LengthFilter(int min_words, int max_words) : min_words_(min_words), max_words_(max_words) {
  if (min_words < 0 || !(min_words < max_words)) {
    throw Error(ErrorKind::kConfigInvalid, "length filter needs 0 <= min_words < max_words");
  }
}

bool LengthFilter::process(Sentence& s) {
  const auto w = static_cast<int>(text::split_whitespace(s.text).size());
  if (w < min_words_) {
    report_.record_drop("too_short");
    return false;
  }
  if (w > max_words_) {
    report_.record_drop("too_long");
    return false;
  }
  report_.record_keep();
  return true;
}

bool DedupFilter::process(Sentence& s) {
  if (!seen_.insert(s.text).second) {
    report_.record_drop("duplicate");
    return false;
  }
  report_.record_keep();
  return true;
}

namespace {

// Letter frequencies in percent.
using Profile = std::unordered_map<char32_t, double>;

const std::map<std::string, Profile>& latin_profiles() {
  static const std::map<std::string, Profile> profiles = {
      {"en", {{U'a', 8.2}, {U'b', 1.5}, {U'c', 2.8}, {U'd', 4.3}, {U'e', 12.7}, {U'f', 2.2},
              {U'g', 2.0}, {U'h', 6.1}, {U'i', 7.0}, {U'j', 0.15}, {U'k', 0.77}, {U'l', 4.0},
              {U'm', 2.4}, {U'n', 6.7}, {U'o', 7.5}, {U'p', 1.9}, {U'q', 0.095}, {U'r', 6.0},
              {U's', 6.3}, {U't', 9.1}, {U'u', 2.8}, {U'v', 0.98}, {U'w', 2.4}, {U'x', 0.15},
              {U'y', 2.0}, {U'z', 0.074}}},
      {"de", {{U'a', 6.5}, {U'b', 1.9}, {U'c', 2.7}, {U'd', 5.1}, {U'e', 16.4}, {U'f', 1.7},
              {U'g', 3.0}, {U'h', 4.6}, {U'i', 6.5}, {U'j', 0.27}, {U'k', 1.4}, {U'l', 3.4},
              {U'm', 2.5}, {U'n', 9.8}, {U'o', 2.6}, {U'p', 0.67}, {U'q', 0.02}, {U'r', 7.0},
              {U's', 7.3}, {U't', 6.2}, {U'u', 4.2}, {U'v', 0.85}, {U'w', 1.9}, {U'x', 0.03},
              {U'y', 0.04}, {U'z', 1.1}, {U'ä', 0.58}, {U'ö', 0.44}, {U'ü', 1.0}, {U'ß', 0.31}}},
      {"fr", {{U'a', 7.6}, {U'b', 0.9}, {U'c', 3.3}, {U'd', 3.7}, {U'e', 14.7}, {U'f', 1.1},
              {U'g', 0.87}, {U'h', 0.74}, {U'i', 7.5}, {U'j', 0.61}, {U'k', 0.05}, {U'l', 5.5},
              {U'm', 3.0}, {U'n', 7.1}, {U'o', 5.8}, {U'p', 2.5}, {U'q', 1.4}, {U'r', 6.7},
              {U's', 7.9}, {U't', 7.2}, {U'u', 6.3}, {U'v', 1.8}, {U'w', 0.05}, {U'x', 0.43},
              {U'y', 0.13}, {U'z', 0.33}, {U'é', 1.9}, {U'è', 0.27}, {U'à', 0.49}, {U'ç', 0.085},
              {U'ê', 0.22}}},
      {"es", {{U'a', 11.5}, {U'b', 2.2}, {U'c', 4.0}, {U'd', 5.0}, {U'e', 12.2}, {U'f', 0.69},
              {U'g', 1.8}, {U'h', 0.7}, {U'i', 6.2}, {U'j', 0.49}, {U'k', 0.01}, {U'l', 5.0},
              {U'm', 3.2}, {U'n', 6.7}, {U'o', 8.7}, {U'p', 2.5}, {U'q', 0.88}, {U'r', 6.9},
              {U's', 8.0}, {U't', 4.6}, {U'u', 2.9}, {U'v', 1.1}, {U'w', 0.02}, {U'x', 0.22},
              {U'y', 1.0}, {U'z', 0.47}, {U'á', 0.5}, {U'é', 0.43}, {U'í', 0.73}, {U'ñ', 0.31},
              {U'ó', 0.83}, {U'ú', 0.17}}},
      {"cs", {{U'a', 8.4}, {U'b', 1.8}, {U'c', 1.6}, {U'd', 3.5}, {U'e', 7.6}, {U'f', 0.27},
              {U'g', 0.09}, {U'h', 1.3}, {U'i', 6.1}, {U'j', 2.1}, {U'k', 3.7}, {U'l', 3.8},
              {U'm', 3.2}, {U'n', 6.5}, {U'o', 6.7}, {U'p', 3.4}, {U'r', 4.8}, {U's', 5.2},
              {U't', 5.7}, {U'u', 2.2}, {U'v', 4.4}, {U'y', 1.9}, {U'z', 2.1}, {U'á', 0.87},
              {U'č', 0.46}, {U'é', 0.63}, {U'ě', 1.2}, {U'í', 1.6}, {U'ř', 0.38}, {U'š', 0.69},
              {U'ů', 0.2}, {U'ý', 1.0}, {U'ž', 0.72}}},
      {"is", {{U'a', 10.1}, {U'b', 1.0}, {U'd', 1.6}, {U'e', 6.4}, {U'f', 3.0}, {U'g', 4.2},
              {U'h', 1.9}, {U'i', 7.6}, {U'j', 1.1}, {U'k', 3.3}, {U'l', 4.5}, {U'm', 4.0},
              {U'n', 7.7}, {U'o', 2.2}, {U'p', 0.79}, {U'r', 8.6}, {U's', 5.6}, {U't', 5.0},
              {U'u', 4.6}, {U'v', 2.4}, {U'x', 0.05}, {U'y', 0.9}, {U'á', 1.8}, {U'é', 0.65},
              {U'í', 1.6}, {U'ó', 1.0}, {U'ú', 0.61}, {U'ý', 0.23}, {U'þ', 1.5}, {U'æ', 0.87},
              {U'ð', 4.4}, {U'ö', 0.78}}},
  };
  return profiles;
}

enum class Script { kLatin, kHan, kKana, kHangul, kCyrillic, kArabic, kOther };

Script script_of(char32_t c) {
  if ((c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z') || (c >= 0xC0 && c <= 0x24F && c != 0xD7 && c != 0xF7)) {
    return Script::kLatin;
  }
  if ((c >= 0x4E00 && c <= 0x9FFF) || (c >= 0x3400 && c <= 0x4DBF)) return Script::kHan;
  if (c >= 0x3040 && c <= 0x30FF) return Script::kKana;
  if (c >= 0xAC00 && c <= 0xD7AF) return Script::kHangul;
  if (c >= 0x0400 && c <= 0x04FF) return Script::kCyrillic;
  if (c >= 0x0600 && c <= 0x06FF) return Script::kArabic;
  return Script::kOther;
}

char32_t fold_case(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 32;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;  // Latin-1 upper
  // Latin Extended-A: upper/lower pairs, upper on odd code points in two runs.
  const bool odd_upper = (c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17E);
  if (c >= 0x100 && c <= 0x17F && (c % 2 == (odd_upper ? 1u : 0u)) && c != 0x138 && c != 0x149) {
    return c + 1;
  }
  return c;
}

// Common function words; each hit adds kStopwordBonus nats to that language.
const std::map<std::string, std::unordered_set<std::string>>& stopwords() {
  static const std::map<std::string, std::unordered_set<std::string>> words = {
      {"en", {"the", "and", "of", "to", "in", "is", "that", "for", "it", "with", "was", "on", "are", "be",
              "this", "have", "from", "by", "at", "not", "would", "been", "their", "which", "about"}},
      {"de", {"der", "die", "das", "und", "ist", "nicht", "mit", "von", "zu", "den", "ein", "eine", "auf",
              "für", "sich", "dem", "des", "auch", "es", "im", "hat", "wird", "wurde", "einen"}},
      {"fr", {"le", "la", "les", "et", "est", "de", "des", "un", "une", "pas", "que", "qui", "dans",
              "pour", "sur", "au", "du", "il", "elle", "sont", "avec", "ce", "ont"}},
      {"es", {"el", "la", "los", "las", "y", "es", "de", "que", "en", "un", "una", "por", "con", "para",
              "no", "se", "del", "al", "lo", "su", "como", "más", "pero"}},
      {"cs", {"a", "je", "se", "na", "v", "že", "to", "s", "z", "do", "není", "jsem", "jako", "ale", "by",
              "o", "k", "jsou", "byl", "pro", "také"}},
      {"is", {"og", "að", "er", "í", "á", "ekki", "það", "sem", "til", "við", "en", "um", "var", "hann",
              "hún", "með", "fyrir", "af"}},
  };
  return words;
}

constexpr double kUnseenLetterPercent = 0.01;
constexpr double kStopwordBonus = 2.0;

std::string fold_token(const std::string& token) {
  std::u32string out;
  for (char32_t c : text::decode_utf8(token)) {
    if (script_of(c) == Script::kLatin) out.push_back(fold_case(c));
  }
  return text::encode_utf8(out);
}

}  // namespace

std::vector<std::string> BuiltinLanguageIdentifier::supported_languages() {
  std::vector<std::string> out;
  for (const auto& [lang, _] : latin_profiles()) out.push_back(lang);
  for (const char* l : {"zh", "ja", "ko", "ru", "ar"}) out.emplace_back(l);
  return out;
}

double BuiltinLanguageIdentifier::probability(const std::string& text, const std::string& lang) {
  std::map<Script, double> script_counts;
  std::unordered_map<char32_t, double> latin;
  double letters = 0;
  for (char32_t c : text::decode_utf8(text)) {
    const Script s = script_of(c);
    if (s == Script::kOther) continue;
    ++letters;
    ++script_counts[s];
    if (s == Script::kLatin) ++latin[fold_case(c)];
  }
  if (letters == 0) return 0.0;
  const auto share = [&](Script s) { return script_counts[s] / letters; };

  if (lang == "zh") return script_counts[Script::kKana] > 0 ? 0.0 : share(Script::kHan);
  if (lang == "ja") return script_counts[Script::kKana] > 0 ? share(Script::kKana) + share(Script::kHan) : 0.0;
  if (lang == "ko") return share(Script::kHangul);
  if (lang == "ru") return share(Script::kCyrillic);
  if (lang == "ar") return share(Script::kArabic);

  const auto& profiles = latin_profiles();
  if (!profiles.count(lang)) return 0.0;
  if (script_counts[Script::kLatin] == 0) return 0.0;

  // Multinomial letter log-likelihood per profile plus function-word hits.
  std::map<std::string, double> loglik;
  for (const auto& [name, prof] : profiles) {
    double total = 0.0;
    for (const auto& [c, f] : prof) total += f;
    double ll = 0.0;
    for (const auto& [c, n] : latin) {
      const auto it = prof.find(c);
      const double pct = it == prof.end() ? kUnseenLetterPercent : it->second;
      ll += n * std::log(pct / (total + kUnseenLetterPercent));
    }
    loglik[name] = ll;
  }
  for (const auto& token : text::split_whitespace(text)) {
    const std::string t = fold_token(token);
    for (const auto& [name, words] : stopwords()) {
      if (words.count(t)) loglik[name] += kStopwordBonus;
    }
  }
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [name, ll] : loglik) best = std::max(best, ll);
  double z = 0.0;
  for (const auto& [name, ll] : loglik) z += std::exp(ll - best);
  return share(Script::kLatin) * std::exp(loglik[lang] - best) / z;
}

LangIdFilter::LangIdFilter(std::shared_ptr<clients::LanguageIdentifier> lid, std::string expected,
                           double threshold, bool allow_fallback)
    : lid_(std::move(lid)), expected_(std::move(expected)), threshold_(threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorKind::kConfigInvalid, "language-ID threshold must lie in [0, 1]");
  }
  if (!lid_) {
    if (!allow_fallback) {
      throw Error(ErrorKind::kLidUnavailable, "no language-ID client configured and fallback disabled");
    }
    lid_ = std::make_shared<BuiltinLanguageIdentifier>();
    report_.note = "builtin letter-profile identifier (lower accuracy than a trained LID model)";
  }
}

bool LangIdFilter::process(Sentence& s) {
  if (lid_->probability(s.text, expected_) >= threshold_) {
    report_.record_keep();
    return true;
  }
  report_.record_drop("language");
  return false;
}

namespace {

template <typename Stage>
FilterResult run_stage(Stage& stage, std::vector<Sentence> sentences) {
  FilterResult out;
  for (auto& s : sentences) {
    if (stage.process(s)) out.kept.push_back(std::move(s));
  }
  out.report = stage.report();
  return out;
}

}  // namespace

FilterResult heuristic_filter(std::vector<Sentence> sentences) {
  HeuristicFilter f;
  return run_stage(f, std::move(sentences));
}

FilterResult length_filter(std::vector<Sentence> sentences, int min_words, int max_words) {
  LengthFilter f(min_words, max_words);
  return run_stage(f, std::move(sentences));
}

FilterResult dedup_filter(std::vector<Sentence> sentences) {
  DedupFilter f;
  return run_stage(f, std::move(sentences));
}

FilterResult langid_filter(std::vector<Sentence> sentences,
                           std::shared_ptr<clients::LanguageIdentifier> lid,
                           const std::string& expected, double threshold, bool allow_fallback) {
  LangIdFilter f(std::move(lid), expected, threshold, allow_fallback);
  return run_stage(f, std::move(sentences));
}

FilterPipeline::FilterPipeline(const PipelineOptions& opts,
                               std::shared_ptr<clients::LanguageIdentifier> lid) {
  if (opts.heuristic) heuristic_ = std::make_unique<HeuristicFilter>();
  if (opts.length) length_ = std::make_unique<LengthFilter>(opts.min_words, opts.max_words);
  if (opts.dedup) dedup_ = std::make_unique<DedupFilter>();
  if (opts.langid) {
    langid_ = std::make_unique<LangIdFilter>(std::move(lid), opts.expected_lang, opts.lid_threshold,
                                             opts.lid_fallback);
  }
}

bool FilterPipeline::process(Sentence& s) {
  if (heuristic_ && !heuristic_->process(s)) return false;
  if (length_ && !length_->process(s)) return false;
  if (dedup_ && !dedup_->process(s)) return false;
  if (langid_ && !langid_->process(s)) return false;
  return true;
}

std::vector<FilterReport> FilterPipeline::reports() const {
  std::vector<FilterReport> out;
  if (heuristic_) out.push_back(heuristic_->report());
  if (length_) out.push_back(length_->report());
  if (dedup_) out.push_back(dedup_->report());
  if (langid_) out.push_back(langid_->report());
  return out;
}

PipelineResult run_pipeline(std::vector<Sentence> sentences, const PipelineOptions& opts,
                            std::shared_ptr<clients::LanguageIdentifier> lid) {
  FilterPipeline pipe(opts, std::move(lid));
  PipelineResult out;
  for (auto& s : sentences) {
    if (pipe.process(s)) out.kept.push_back(std::move(s));
  }
  out.reports = pipe.reports();
  return out;
}

}  // namespace halo::filters
