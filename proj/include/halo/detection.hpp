#pragma once

#include <span>
#include <vector>

#include "halo/clients.hpp"
#include "halo/core.hpp"

namespace halo::detection {

inline constexpr double kDefaultThreshold = 0.5;

// Meta key set on records whose scorer call failed; their hs stays null.
inline constexpr const char* kScorerErrorKey = "scorer_error";
// Meta key holding the raw score when it had to be clamped into [1, 5].
inline constexpr const char* kClampedRawKey = "qe_clamped_raw";

// Hallucination threshold T in (0, 0.8).
class Threshold {
 public:
  explicit Threshold(double value = kDefaultThreshold);
  double value() const { return value_; }

 private:
  double value_;
};

struct ScoreOptions {
  int max_in_flight = 1;
};

// Fills hs for every record, in place, preserving order. An unreachable
// scorer aborts the pass (BackendUnreachable); any other per-record failure
// is written to meta[kScorerErrorKey] and leaves hs null.
void score_batch(std::span<TranslationRecord> records, clients::QeScorer& scorer,
                 const ScoreOptions& opts = {});

std::vector<TranslationRecord> score_corpus(std::vector<TranslationRecord> records,
                                            clients::QeScorer& scorer,
                                            const ScoreOptions& opts = {});

bool scorer_failed(const TranslationRecord& r);

// hs >= T. Throws UnscoredRecord when hs is null without a recorded scorer
// failure; failed records are never hallucinations.
bool is_hallucination(const TranslationRecord& r, const Threshold& t);

std::vector<TranslationRecord> build_hallucination_set(std::span<const TranslationRecord> records,
                                                       const Threshold& t);

struct DetectionReport {
  std::size_t total = 0;
  std::size_t scored = 0;
  std::size_t failed = 0;
  std::size_t hallucinated = 0;
  double rate = 0.0;

  nlohmann::json to_json() const;
};

// Streaming accumulator behind hallucination_rate and the detect report.
class DetectionTally {
 public:
  explicit DetectionTally(Threshold t) : t_(t) {}
  // Returns whether the record belongs to the hallucination set.
  bool add(const TranslationRecord& r);
  // Throws EmptyDataset when nothing was scored.
  DetectionReport report() const;

 private:
  Threshold t_;
  DetectionReport acc_;
};

// |{hs >= T}| / |scored records|. Throws EmptyDataset.
double hallucination_rate(std::span<const TranslationRecord> records, const Threshold& t);

}  // namespace halo::detection
