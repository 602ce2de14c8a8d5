#include "halo/mitigation.hpp"

#include <algorithm>
#include <cmath>

#include "halo/error.hpp"
#include "halo/parallel.hpp"
#include "halo/scoring.hpp"

namespace halo::mitigation {

using nlohmann::json;

SamplingConfig paper_best_sampling() { return SamplingConfig::defaults(SamplingMethod::kEpsilon, 40); }

SelectionConfig paper_best_selection() { return {Selector::kRerank, Utility::kEmbedCosine}; }

MbrResult mbr_select(std::size_t n, const IndexedPairUtility& utility) {
  MbrResult res;
  if (n == 0) throw Error(ErrorKind::kSelectionFailure, "no candidates");
  if (n == 1) {
    res.single_candidate = true;
    res.expected_utility = {0.0};
    return res;
  }
  res.expected_utility.resize(n);
  std::vector<double> row;
  row.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row.push_back(utility(i, j));
    }
    std::sort(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += v;
    res.expected_utility[i] = sum / static_cast<double>(n - 1);
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (res.expected_utility[i] > res.expected_utility[res.index]) res.index = i;
  }
  return res;
}

MbrResult mbr_select(const CandidateSet& cands, const PairUtility& utility) {
  cands.validate();
  const auto& c = cands.candidates;
  return mbr_select(c.size(), [&](std::size_t i, std::size_t j) { return utility(c[i], c[j]); });
}

RerankResult rerank_select(std::size_t n, const std::function<double(std::size_t)>& utility) {
  if (n == 0) throw Error(ErrorKind::kSelectionFailure, "no candidates");
  RerankResult res;
  res.utilities.resize(n);
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < n; ++i) {
    try {
      const double u = utility(i);
      if (std::isfinite(u)) res.utilities[i] = u;
    } catch (const Error&) {
    }
    if (!res.utilities[i]) {
      res.failed.push_back(i);
      continue;
    }
    if (!best || *res.utilities[i] > *res.utilities[*best]) best = i;
  }
  if (!best) throw Error(ErrorKind::kAllCandidatesFailed, std::to_string(n) + " candidates");
  res.index = *best;
  return res;
}

RerankResult rerank_select(const std::string& source, const CandidateSet& cands,
                           const PairUtility& utility_vs_source) {
  cands.validate();
  const auto& c = cands.candidates;
  return rerank_select(c.size(), [&](std::size_t i) { return utility_vs_source(source, c[i]); });
}

std::string strategy_name(const Strategy& s) {
  if (std::holds_alternative<FallbackStrategy>(s)) return "fallback";
  const auto& g = std::get<GenerateSelectStrategy>(s);
  return std::string(to_string(g.sampling.method)) + "+" + std::string(to_string(g.selection.selector)) +
         ":" + std::string(to_string(g.selection.utility));
}

json strategy_config(const Strategy& s) {
  if (const auto* f = std::get_if<FallbackStrategy>(&s)) {
    return json{{"kind", "fallback"}, {"beam_size", f->beam_size}};
  }
  const auto& g = std::get<GenerateSelectStrategy>(s);
  return json{{"kind", "generate_select"},
              {"sampling", g.sampling.to_json()},
              {"selection", g.selection.to_json()},
              {"seed", g.seed ? json(*g.seed) : json(nullptr)}};
}

namespace {

clients::LanguagePair langs_of(const TranslationRecord& r) { return {r.src_lang, r.tgt_lang}; }

MitigationOutcome run_fallback(const TranslationRecord& r, const FallbackStrategy& f) {
  if (!f.fallback) throw Error(ErrorKind::kConfigInvalid, "fallback strategy needs a fallback generator");
  clients::GenerationRequest req;
  req.source = r.source;
  req.langs = langs_of(r);
  req.sampling = SamplingConfig::defaults(SamplingMethod::kBeam, 1);
  req.sampling.beam_size = f.beam_size;
  mitigation::CandidateSet set;
  try {
    set = clients::generate_candidates(*f.fallback, req);
  } catch (const Error& e) {
    throw Error(ErrorKind::kGenerationFailure, e.what());
  }
  MitigationOutcome out;
  out.translation = set.candidates.front();
  out.provenance.strategy = "fallback";
  out.provenance.config = strategy_config(f);
  out.provenance.selected_index = 0;
  return out;
}

// Embeds texts, translating backend errors into SelectionFailure.
std::vector<std::vector<double>> embed_or_fail(clients::Embedder& e, std::span<const std::string> texts) {
  try {
    return clients::embed_texts(e, texts);
  } catch (const Error& err) {
    throw Error(ErrorKind::kSelectionFailure, err.what());
  }
}

MitigationOutcome run_generate_select(const TranslationRecord& r, const GenerateSelectStrategy& g) {
  if (!g.generator) throw Error(ErrorKind::kConfigInvalid, "generation strategy needs a generator");
  g.selection.validate();
  if (g.selection.utility == Utility::kEmbedCosine && !g.embedder) {
    throw Error(ErrorKind::kConfigInvalid, "embed_cosine utility needs an embedder");
  }
  if (g.selection.utility == Utility::kExternalQe && !g.scorer) {
    throw Error(ErrorKind::kConfigInvalid, "external_qe utility needs a scorer");
  }

  clients::GenerationRequest req;
  req.source = r.source;
  req.langs = langs_of(r);
  req.sampling = g.sampling;
  req.seed = g.seed;
  CandidateSet set;
  try {
    set = clients::generate_candidates(*g.generator, req);
  } catch (const Error& e) {
    throw Error(ErrorKind::kGenerationFailure, e.what());
  }
  const auto& c = set.candidates;
  const std::size_t n = c.size();

  MitigationOutcome out;
  out.provenance.strategy = strategy_name(g);
  out.provenance.config = strategy_config(g);

  if (g.selection.selector == Selector::kMbr) {
    MbrResult m;
    switch (g.selection.utility) {
      case Utility::kChrf:
        m = mbr_select(set, [](const std::string& h, const std::string& ref) { return scoring::chrf(h, ref); });
        break;
      case Utility::kEmbedCosine: {
        const auto vecs = embed_or_fail(*g.embedder, c);
        m = mbr_select(n, [&](std::size_t i, std::size_t j) {
          return scoring::cosine_similarity(vecs[i], vecs[j]);
        });
        break;
      }
      case Utility::kExternalQe: {
        const clients::LanguagePair same{r.tgt_lang, r.tgt_lang};
        m = mbr_select(n, [&](std::size_t i, std::size_t j) {
          try {
            return clients::score_pair(*g.scorer, c[j], c[i], same);
          } catch (const Error& e) {
            throw Error(ErrorKind::kSelectionFailure, e.what());
          }
        });
        break;
      }
    }
    out.translation = c[m.index];
    out.provenance.selected_index = m.index;
    out.provenance.single_candidate = m.single_candidate;
    return out;
  }

  RerankResult rr;
  if (g.selection.utility == Utility::kEmbedCosine) {
    std::vector<std::string> texts;
    texts.reserve(n + 1);
    texts.push_back(r.source);
    texts.insert(texts.end(), c.begin(), c.end());
    const auto vecs = embed_or_fail(*g.embedder, texts);
    rr = rerank_select(n, [&](std::size_t i) { return scoring::cosine_similarity(vecs[0], vecs[i + 1]); });
  } else {
    rr = rerank_select(n, [&](std::size_t i) {
      return clients::score_pair(*g.scorer, r.source, c[i], langs_of(r));
    });
  }
  out.translation = c[rr.index];
  out.provenance.selected_index = rr.index;
  out.provenance.failed_candidates = rr.failed;
  return out;
}

}  // namespace

MitigationOutcome mitigate(const TranslationRecord& record, const Strategy& strategy,
                           const detection::Threshold& t) {
  if (!record.hs || *record.hs < t.value()) {
    throw Error(ErrorKind::kInvalidArgument, "record " + record.id + " is not in the hallucination set");
  }
  if (const auto* f = std::get_if<FallbackStrategy>(&strategy)) return run_fallback(record, *f);
  return run_generate_select(record, std::get<GenerateSelectStrategy>(strategy));
}

TranslationRecord to_mitigated_record(const TranslationRecord& original, const MitigationOutcome& outcome) {
  TranslationRecord m;
  m.id = original.id;
  m.source = original.source;
  m.translation = outcome.translation;
  m.src_lang = original.src_lang;
  m.tgt_lang = original.tgt_lang;
  m.meta["strategy"] = outcome.provenance.strategy;
  if (outcome.provenance.selected_index) {
    m.meta["selected_index"] = std::to_string(*outcome.provenance.selected_index);
  }
  if (!outcome.provenance.failed_candidates.empty()) {
    m.meta["failed_candidates"] = std::to_string(outcome.provenance.failed_candidates.size());
  }
  if (outcome.provenance.single_candidate) m.meta["warning"] = "single candidate";
  return m;
}

std::vector<TranslationRecord> mitigate_batch(std::span<const TranslationRecord> dh,
                                              const Strategy& strategy, const detection::Threshold& t,
                                              int max_in_flight) {
  return parallel_map_ordered<TranslationRecord>(dh.size(), max_in_flight, [&](std::size_t i) {
    return to_mitigated_record(dh[i], mitigate(dh[i], strategy, t));
  });
}

json MitigationReport::to_json() const {
  return {{"attempted", attempted}, {"mitigated", mitigated}, {"score_failed", score_failed},
          {"rate", rate}, {"strategy", strategy}, {"config", config}};
}

namespace {

void check_aligned(std::span<const TranslationRecord> dh, std::size_t mitigated_size,
                   const std::function<const std::string&(std::size_t)>& mitigated_id) {
  const std::size_t n = std::min(dh.size(), mitigated_size);
  for (std::size_t i = 0; i < n; ++i) {
    if (dh[i].id != mitigated_id(i)) {
      throw Error(ErrorKind::kAlignmentMismatch, dh[i].id + " vs " + mitigated_id(i));
    }
  }
  if (dh.size() != mitigated_size) {
    const std::string& id = dh.size() > mitigated_size ? dh[n].id : mitigated_id(n);
    throw Error(ErrorKind::kAlignmentMismatch, id + " has no counterpart");
  }
}

}  // namespace

MitigationReport mitigation_rate(std::span<const TranslationRecord> dh,
                                 std::span<TranslationRecord> mitigated, clients::QeScorer& scorer,
                                 const detection::Threshold& t, const detection::ScoreOptions& opts) {
  check_aligned(dh, mitigated.size(), [&](std::size_t i) -> const std::string& { return mitigated[i].id; });
  if (dh.empty()) throw Error(ErrorKind::kEmptyDataset, "empty hallucination set");

  std::vector<TranslationRecord> pending;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < mitigated.size(); ++i) {
    if (!mitigated[i].hs) {
      pending.push_back(mitigated[i]);
      where.push_back(i);
    }
  }
  detection::score_batch(pending, scorer, opts);
  for (std::size_t k = 0; k < pending.size(); ++k) mitigated[where[k]] = std::move(pending[k]);

  MitigationReport rep;
  rep.attempted = dh.size();
  for (const auto& m : mitigated) {
    if (!m.hs) {
      ++rep.score_failed;
    } else if (*m.hs < t.value()) {
      ++rep.mitigated;
    }
  }
  rep.rate = static_cast<double>(rep.mitigated) / static_cast<double>(rep.attempted);
  if (!mitigated.empty()) {
    if (auto it = mitigated.front().meta.find("strategy"); it != mitigated.front().meta.end()) {
      rep.strategy = it->second;
    }
  }
  return rep;
}

std::optional<PreferenceTriplet> make_triplet(const TranslationRecord& original,
                                              const TranslationRecord& mitigated,
                                              const detection::Threshold& t) {
  if (original.id != mitigated.id) {
    throw Error(ErrorKind::kAlignmentMismatch, original.id + " vs " + mitigated.id);
  }
  if (!original.hs) throw Error(ErrorKind::kUnscoredRecord, original.id + " (hallucinated translation)");
  if (!mitigated.hs) {
    if (detection::scorer_failed(mitigated)) return std::nullopt;
    throw Error(ErrorKind::kUnscoredRecord, mitigated.id + " (alternative translation)");
  }
  if (!(*mitigated.hs < t.value()) || mitigated.translation == original.translation) {
    return std::nullopt;
  }
  PreferenceTriplet p;
  p.id = original.id;
  p.source = original.source;
  p.preferred = mitigated.translation;
  p.dispreferred = original.translation;
  p.phi_preferred = *mitigated.hs;
  p.phi_dispreferred = *original.hs;
  p.src_lang = original.src_lang;
  p.tgt_lang = original.tgt_lang;
  return p;
}

PreferenceSet build_preference_set(std::span<const TranslationRecord> dh,
                                   std::span<const TranslationRecord> mitigated,
                                   const detection::Threshold& t) {
  check_aligned(dh, mitigated.size(), [&](std::size_t i) -> const std::string& { return mitigated[i].id; });
  PreferenceSet out;
  for (std::size_t i = 0; i < dh.size(); ++i) {
    if (auto trip = make_triplet(dh[i], mitigated[i], t)) {
      out.triplets.push_back(std::move(*trip));
    } else {
      ++out.dropped;
    }
  }
  return out;
}

}  // namespace halo::mitigation
