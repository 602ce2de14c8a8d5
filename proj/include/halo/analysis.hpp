#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "halo/core.hpp"
#include "halo/scoring.hpp"

namespace halo::analysis {

struct FeatureFlags {
  bool quotes = false;
  bool urls = false;
  bool caps = false;

  friend bool operator==(const FeatureFlags&, const FeatureFlags&) = default;
};

// Source-side feature detectors, published so studies can be rerun on any
// corpus:
//   quotes  any of  " ' “ ” ‘ ’
//   urls    kUrlPattern (ECMAScript, case-insensitive)
//   caps    a whitespace token whose ASCII letters number >= 2 and are all
//           uppercase ("U.S." counts; "A" and "Hello" do not)
inline constexpr const char* kQuoteCharacters[] = {"\"", "'", "“", "”", "‘", "’"};
inline constexpr const char* kUrlPattern =
    R"(\b(https?|ftp)://[^\s]+|\bwww\.[^\s]+|(^|[\s(])@[a-z0-9_]{1,30}\b)";

FeatureFlags detect_source_features(const std::string& text);

// counts[feature present ? 0 : 1][hallucinated ? 0 : 1]
struct ContingencyTable {
  std::array<std::array<std::uint64_t, 2>, 2> counts{};

  std::uint64_t total() const;
};

struct ChiSquaredResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Pearson statistic without continuity correction; p is the chi-squared(1)
// survival function erfc(sqrt(stat / 2)). Throws DegenerateMargin when any
// row or column total is zero.
ChiSquaredResult chi_squared_2x2(const ContingencyTable& table);

// Builds the feature-by-hallucination table for one feature over a scored
// corpus, given membership in the hallucination set.
ContingencyTable feature_table(std::span<const TranslationRecord> corpus,
                               const std::vector<bool>& hallucinated,
                               bool FeatureFlags::*feature);

struct LengthStats {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double p95 = 0.0;
  double p99 = 0.0;

  nlohmann::json to_json() const;
};

// Nearest-rank percentile: the value at 1-based rank ceil(p / 100 * N) of the
// sorted sample. p in (0, 100].
double nearest_rank_percentile(std::vector<double> values, double p);

// Mean, conventional median, nearest-rank p95 and p99.
LengthStats length_stats(std::vector<double> values);

struct Histogram {
  double lo = 0.0;
  double hi = kMaxHallucinationScore;
  double bin_width = 0.01;
  std::vector<std::size_t> counts;
  std::size_t outside = 0;  // values outside [lo, hi]

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

// Bins values on [lo, hi]; the last bin is closed on the right.
Histogram histogram(std::span<const double> values, double lo, double hi, double bin_width);

struct DiagnosticsConfig {
  scoring::NgramDetectorConfig detector;
  double bin_width = 0.01;
  double zoom_lo = 0.5;
};

struct PairDiagnostics {
  std::size_t dh_size = 0;
  double oscillatory_share = 0.0;
  LengthStats source_hallucinated, source_clean;
  LengthStats translation_hallucinated, translation_clean;
  Histogram hs_full, hs_zoom;
  std::map<std::string, ChiSquaredResult> feature_tests;  // only when computable
};

struct DiagnosticsReport {
  std::vector<std::string> pairs;
  std::vector<std::vector<std::size_t>> overlap;  // common source ids
  std::map<std::string, PairDiagnostics> per_pair;

  nlohmann::json to_json() const;
};

// `hallucination_sets` maps a language-pair label to its D_h; `corpora` maps
// the same labels to the full scored corpus (optional per pair). Throws
// EmptySet(label) for an empty D_h.
DiagnosticsReport corpus_diagnostics(
    const std::map<std::string, std::vector<TranslationRecord>>& hallucination_sets,
    const std::map<std::string, std::vector<TranslationRecord>>& corpora,
    const DiagnosticsConfig& cfg = {});

}  // namespace halo::analysis
