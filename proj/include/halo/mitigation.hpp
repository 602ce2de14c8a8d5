#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "halo/clients.hpp"
#include "halo/core.hpp"
#include "halo/detection.hpp"
#include "halo/sampling.hpp"

namespace halo::mitigation {

// Epsilon sampling (0.02, n = 40, t = 1) followed by embedding-cosine
// re-ranking against the source.
SamplingConfig paper_best_sampling();
SelectionConfig paper_best_selection();

// Pairwise utility: utility(hypothesis, pseudo_reference).
using PairUtility = std::function<double(const std::string&, const std::string&)>;
// Utility by candidate index, for utilities with precomputed state.
using IndexedPairUtility = std::function<double(std::size_t, std::size_t)>;

struct MbrResult {
  std::size_t index = 0;
  std::vector<double> expected_utility;  // mean utility against the others
  bool single_candidate = false;         // n == 1, returned index 0
};

// argmax_i mean_{j != i} utility(c_i, c_j); ties go to the lowest index.
// Each row is summed in sorted order, so expected utilities depend only on
// the multiset of pairwise values and the chosen string is
// permutation-invariant.
MbrResult mbr_select(std::size_t n, const IndexedPairUtility& utility);
MbrResult mbr_select(const CandidateSet& cands, const PairUtility& utility);

struct RerankResult {
  std::size_t index = 0;
  std::vector<std::optional<double>> utilities;  // nullopt = evaluation failed
  std::vector<std::size_t> failed;
};

// argmax_i utility(i) over candidates whose evaluation succeeded (a thrown
// halo::Error or a non-finite value excludes the candidate); ties go to the
// lowest index. Throws AllCandidatesFailed.
RerankResult rerank_select(std::size_t n, const std::function<double(std::size_t)>& utility);
RerankResult rerank_select(const std::string& source, const CandidateSet& cands,
                           const PairUtility& utility_vs_source);

struct FallbackStrategy {
  clients::Generator* fallback = nullptr;
  int beam_size = 40;
};

struct GenerateSelectStrategy {
  clients::Generator* generator = nullptr;
  SamplingConfig sampling = paper_best_sampling();
  SelectionConfig selection = paper_best_selection();
  clients::Embedder* embedder = nullptr;  // embed_cosine
  clients::QeScorer* scorer = nullptr;    // external_qe
  std::optional<std::uint64_t> seed;
};

using Strategy = std::variant<FallbackStrategy, GenerateSelectStrategy>;

std::string strategy_name(const Strategy& s);
nlohmann::json strategy_config(const Strategy& s);

struct Provenance {
  std::string strategy;
  nlohmann::json config;
  std::optional<std::size_t> selected_index;
  std::vector<std::size_t> failed_candidates;
  bool single_candidate = false;
};

struct MitigationOutcome {
  std::string translation;
  Provenance provenance;
};

// Produces an alternative translation for a record of the hallucination set.
// Does not check that the result scores below T.
// Throws GenerationFailure / SelectionFailure / AllCandidatesFailed.
MitigationOutcome mitigate(const TranslationRecord& record, const Strategy& strategy,
                           const detection::Threshold& t);

// Mitigated record: the alternative translation with provenance in meta and
// hs still unset.
TranslationRecord to_mitigated_record(const TranslationRecord& original,
                                      const MitigationOutcome& outcome);

// Runs mitigate over a batch with up to `max_in_flight` records at a time;
// results keep input order.
std::vector<TranslationRecord> mitigate_batch(std::span<const TranslationRecord> dh,
                                              const Strategy& strategy,
                                              const detection::Threshold& t,
                                              int max_in_flight = 1);

struct MitigationReport {
  std::size_t attempted = 0;
  std::size_t mitigated = 0;
  std::size_t score_failed = 0;
  double rate = 0.0;
  std::string strategy;
  nlohmann::json config;

  nlohmann::json to_json() const;
};

// Scores every mitigated record that lacks hs (in place) and returns
// |{HS(x, y~) < T}| / |D_h|. Throws AlignmentMismatch(id) and EmptyDataset.
MitigationReport mitigation_rate(std::span<const TranslationRecord> dh,
                                 std::span<TranslationRecord> mitigated,
                                 clients::QeScorer& scorer, const detection::Threshold& t,
                                 const detection::ScoreOptions& opts = {});

struct PreferenceSet {
  std::vector<PreferenceTriplet> triplets;
  std::size_t dropped = 0;
};

// One triplet (x, y~, y, HS(x, y~), HS(x, y)) per aligned pair with
// HS(x, y~) < T. Throws AlignmentMismatch and UnscoredRecord.
PreferenceSet build_preference_set(std::span<const TranslationRecord> dh,
                                   std::span<const TranslationRecord> mitigated,
                                   const detection::Threshold& t);

// Per-pair form of build_preference_set for streaming callers.
std::optional<PreferenceTriplet> make_triplet(const TranslationRecord& original,
                                              const TranslationRecord& mitigated,
                                              const detection::Threshold& t);

}  // namespace halo::mitigation
