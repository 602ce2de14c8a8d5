#include "halo/detection.hpp"

#include <cmath>
#include <sstream>

#include "halo/error.hpp"
#include "halo/parallel.hpp"
#include "halo/scoring.hpp"

namespace halo::detection {

Threshold::Threshold(double value) : value_(value) {
  if (!(value > 0.0 && value < kMaxHallucinationScore)) {
    throw Error(ErrorKind::kConfigInvalid, "threshold must lie in (0, 0.8)");
  }
}

namespace {

struct ScoreOutcome {
  std::optional<double> hs;
  std::optional<double> clamped_raw;
  std::string error;
};

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void score_batch(std::span<TranslationRecord> records, clients::QeScorer& scorer,
                 const ScoreOptions& opts) {
  const auto outcomes = parallel_map_ordered<ScoreOutcome>(
      records.size(), opts.max_in_flight, [&](std::size_t i) {
        const auto& r = records[i];
        ScoreOutcome out;
        try {
          const double raw = clients::score_pair(scorer, r.source, r.translation, {r.src_lang, r.tgt_lang});
          const auto hs = scoring::hallucination_score(raw);
          out.hs = hs.value;
          if (hs.clamped) out.clamped_raw = raw;
        } catch (const Error& e) {
          if (e.kind() == ErrorKind::kBackendUnreachable) {
            throw Error(ErrorKind::kBackendUnreachable, std::string("scorer unavailable: ") + e.what());
          }
          out.error = e.what();
        }
        return out;
      });
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& r = records[i];
    const auto& o = outcomes[i];
    r.hs = o.hs;
    r.meta.erase(kScorerErrorKey);
    r.meta.erase(kClampedRawKey);
    if (!o.error.empty()) r.meta[kScorerErrorKey] = o.error;
    if (o.clamped_raw) r.meta[kClampedRawKey] = format_number(*o.clamped_raw);
  }
}

std::vector<TranslationRecord> score_corpus(std::vector<TranslationRecord> records,
                                            clients::QeScorer& scorer, const ScoreOptions& opts) {
  score_batch(records, scorer, opts);
  return records;
}

bool scorer_failed(const TranslationRecord& r) {
  return !r.hs && r.meta.count(kScorerErrorKey) > 0;
}

bool is_hallucination(const TranslationRecord& r, const Threshold& t) {
  if (!r.hs) {
    if (scorer_failed(r)) return false;
    throw Error(ErrorKind::kUnscoredRecord, r.id);
  }
  return *r.hs >= t.value();
}

std::vector<TranslationRecord> build_hallucination_set(std::span<const TranslationRecord> records,
                                                       const Threshold& t) {
  std::vector<TranslationRecord> out;
  for (const auto& r : records) {
    if (is_hallucination(r, t)) out.push_back(r);
  }
  return out;
}

nlohmann::json DetectionReport::to_json() const {
  return {{"total", total}, {"scored", scored}, {"failed", failed},
          {"hallucinated", hallucinated}, {"rate", rate}};
}

bool DetectionTally::add(const TranslationRecord& r) {
  const bool hit = is_hallucination(r, t_);
  ++acc_.total;
  if (scorer_failed(r)) {
    ++acc_.failed;
    return false;
  }
  ++acc_.scored;
  if (hit) ++acc_.hallucinated;
  return hit;
}

DetectionReport DetectionTally::report() const {
  if (acc_.scored == 0) throw Error(ErrorKind::kEmptyDataset, "no scored records");
  DetectionReport r = acc_;
  r.rate = static_cast<double>(r.hallucinated) / static_cast<double>(r.scored);
  return r;
}

double hallucination_rate(std::span<const TranslationRecord> records, const Threshold& t) {
  DetectionTally tally(t);
  for (const auto& r : records) tally.add(r);
  return tally.report().rate;
}

}  // namespace halo::detection
