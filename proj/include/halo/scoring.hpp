#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace halo::scoring {

// Raw QE scores are on a nominal 1..5 scale.
inline constexpr double kRawScoreMin = 1.0;
inline constexpr double kRawScoreMax = 5.0;

struct HallucinationScore {
  double value = 0.0;
  bool clamped = false;  // raw score was outside [1, 5]
};

// HS = 1 - clamp(raw, 1, 5) / 5. Throws NonFiniteInput.
HallucinationScore hallucination_score(double raw);

struct NgramDetectorConfig {
  int n = 4;
  int threshold = 2;
};

// Whitespace tokens once the text is trimmed and contains whitespace,
// otherwise one token per code point.
std::vector<std::string> detector_tokens(std::string_view s);

struct TopNgram {
  std::string ngram;  // tokens joined by a single space; empty when count == 0
  int count = 0;
};

// Most frequent n-gram; ties go to the n-gram that occurs first.
TopNgram top_ngram(std::span<const std::string> tokens, int n);

struct OscillationEvidence {
  bool flagged = false;
  TopNgram translation_top;
  int source_top_count = 0;
};

// Flags a translation whose top n-gram count exceeds the source's top n-gram
// count by at least cfg.threshold.
OscillationEvidence oscillatory_flag(std::string_view source,
                                     std::string_view translation,
                                     const NgramDetectorConfig& cfg = {});

// Per-order n-gram statistics.
struct ChrfOrderStats {
  int hyp_count = 0;
  int ref_count = 0;
  int match_count = 0;
};

struct ChrfResult {
  double score = 0.0;      // 0..100
  double precision = 0.0;  // averaged over effective orders
  double recall = 0.0;
  int effective_order = 0;
  bool both_empty = false;
  std::vector<ChrfOrderStats> orders;
};

// Character n-gram F-score with whitespace removed before extraction.
// Precision and recall are averaged over the orders where both sides have
// n-grams, then combined as F_beta.
ChrfResult chrf_detailed(std::string_view hypothesis, std::string_view reference,
                         int max_char_n = 6, double beta = 2.0);

double chrf(std::string_view hypothesis, std::string_view reference,
            int max_char_n = 6, double beta = 2.0);

// Throws DimensionMismatch or ZeroVector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace halo::scoring
