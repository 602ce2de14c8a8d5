#include "halo/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <regex>
#include <sstream>
#include <unordered_set>

#include "halo/error.hpp"
#include "halo/text.hpp"

namespace halo::analysis {

using nlohmann::json;

FeatureFlags detect_source_features(const std::string& s) {
  static const std::regex url_re(kUrlPattern, std::regex::ECMAScript | std::regex::icase);
  FeatureFlags f;
  for (const char* q : kQuoteCharacters) {
    if (s.find(q) != std::string::npos) {
      f.quotes = true;
      break;
    }
  }
  f.urls = std::regex_search(s, url_re);
  for (const auto& tok : text::split_whitespace(s)) {
    int letters = 0;
    bool all_upper = true;
    for (char c : tok) {
      if (c >= 'A' && c <= 'Z') {
        ++letters;
      } else if (c >= 'a' && c <= 'z') {
        ++letters;
        all_upper = false;
      }
    }
    if (letters >= 2 && all_upper) {
      f.caps = true;
      break;
    }
  }
  return f;
}

std::uint64_t ContingencyTable::total() const {
  return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
}

ChiSquaredResult chi_squared_2x2(const ContingencyTable& t) {
  const double a = static_cast<double>(t.counts[0][0]);
  const double b = static_cast<double>(t.counts[0][1]);
  const double c = static_cast<double>(t.counts[1][0]);
  const double d = static_cast<double>(t.counts[1][1]);
  const double r0 = a + b, r1 = c + d, c0 = a + c, c1 = b + d;
  if (r0 == 0 || r1 == 0 || c0 == 0 || c1 == 0) {
    throw Error(ErrorKind::kDegenerateMargin, "a row or column total is zero");
  }
  const double n = r0 + r1;
  // Sum of (O - E)^2 / E over the four cells.
  double stat = 0.0;
  const double obs[2][2] = {{a, b}, {c, d}};
  const double rows[2] = {r0, r1};
  const double cols[2] = {c0, c1};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double e = rows[i] * cols[j] / n;
      stat += (obs[i][j] - e) * (obs[i][j] - e) / e;
    }
  }
  return {stat, std::erfc(std::sqrt(stat / 2.0))};
}

ContingencyTable feature_table(std::span<const TranslationRecord> corpus,
                               const std::vector<bool>& hallucinated, bool FeatureFlags::*feature) {
  if (hallucinated.size() != corpus.size()) {
    throw Error(ErrorKind::kAlignmentMismatch, "label count differs from corpus size");
  }
  ContingencyTable t;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const bool present = detect_source_features(corpus[i].source).*feature;
    ++t.counts[present ? 0 : 1][hallucinated[i] ? 0 : 1];
  }
  return t;
}

json LengthStats::to_json() const {
  return {{"count", count}, {"mean", mean}, {"median", median}, {"p95", p95}, {"p99", p99}};
}

double nearest_rank_percentile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorKind::kEmptyDataset, "percentile of an empty sample");
  if (!(p > 0.0 && p <= 100.0)) throw Error(ErrorKind::kInvalidArgument, "percentile must lie in (0, 100]");
  std::sort(values.begin(), values.end());
  // Rank from an integer product where possible so p95 of 100 items is 95.
  const double exact = p / 100.0 * static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(exact - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

LengthStats length_stats(std::vector<double> values) {
  LengthStats s;
  s.count = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  const std::size_t n = values.size();
  s.median = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  s.p95 = nearest_rank_percentile(values, 95.0);
  s.p99 = nearest_rank_percentile(values, 99.0);
  return s;
}

json Histogram::to_json() const {
  return {{"lo", lo}, {"hi", hi}, {"bin_width", bin_width}, {"counts", counts}, {"outside", outside}};
}

std::string Histogram::to_csv() const {
  std::ostringstream os;
  os.precision(6);
  os << "bin_lo,bin_hi,count\n";
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double a = lo + static_cast<double>(i) * bin_width;
    const double b = i + 1 == counts.size() ? hi : a + bin_width;
    os << a << ',' << b << ',' << counts[i] << '\n';
  }
  return os.str();
}

Histogram histogram(std::span<const double> values, double lo, double hi, double bin_width) {
  if (!(hi > lo) || !(bin_width > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "histogram needs hi > lo and bin_width > 0");
  }
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.bin_width = bin_width;
  const auto bins = static_cast<std::size_t>(std::max(1.0, std::round((hi - lo) / bin_width)));
  h.counts.assign(bins, 0);
  for (double v : values) {
    if (!(v >= lo && v <= hi)) {
      ++h.outside;
      continue;
    }
    // The small slack keeps values such as 0.5 out of the bin below 0.5
    // despite binary rounding of the width.
    auto idx = static_cast<std::size_t>(std::floor((v - lo) / bin_width + 1e-9));
    h.counts[std::min(idx, bins - 1)] += 1;
  }
  return h;
}

namespace {

json chi_to_json(const ChiSquaredResult& r) { return {{"statistic", r.statistic}, {"p_value", r.p_value}}; }

}  // namespace

json DiagnosticsReport::to_json() const {
  json per = json::object();
  for (const auto& [pair, d] : per_pair) {
    json tests = json::object();
    for (const auto& [name, r] : d.feature_tests) tests[name] = chi_to_json(r);
    per[pair] = json{{"dh_size", d.dh_size},
                     {"oscillatory_share", d.oscillatory_share},
                     {"length",
                      {{"source_hallucinated", d.source_hallucinated.to_json()},
                       {"source_clean", d.source_clean.to_json()},
                       {"translation_hallucinated", d.translation_hallucinated.to_json()},
                       {"translation_clean", d.translation_clean.to_json()}}},
                     {"hs_histogram", {{"full", d.hs_full.to_json()}, {"zoom", d.hs_zoom.to_json()}}},
                     {"feature_tests", tests}};
  }
  return json{{"pairs", pairs}, {"overlap", overlap}, {"per_pair", per}};
}

DiagnosticsReport corpus_diagnostics(
    const std::map<std::string, std::vector<TranslationRecord>>& hallucination_sets,
    const std::map<std::string, std::vector<TranslationRecord>>& corpora, const DiagnosticsConfig& cfg) {
  DiagnosticsReport rep;
  std::vector<std::unordered_set<std::string>> ids;
  for (const auto& [pair, dh] : hallucination_sets) {
    if (dh.empty()) throw Error(ErrorKind::kEmptySet, pair);
    rep.pairs.push_back(pair);
    std::unordered_set<std::string> s;
    for (const auto& r : dh) s.insert(r.id);
    ids.push_back(std::move(s));
  }

  const std::size_t k = rep.pairs.size();
  rep.overlap.assign(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      std::size_t common = 0;
      const auto& small = ids[i].size() <= ids[j].size() ? ids[i] : ids[j];
      const auto& large = ids[i].size() <= ids[j].size() ? ids[j] : ids[i];
      for (const auto& id : small) common += large.count(id);
      rep.overlap[i][j] = rep.overlap[j][i] = common;
    }
  }

  for (std::size_t p = 0; p < k; ++p) {
    const auto& pair = rep.pairs[p];
    const auto& dh = hallucination_sets.at(pair);
    PairDiagnostics d;
    d.dh_size = dh.size();
    std::size_t osc = 0;
    for (const auto& r : dh) osc += scoring::oscillatory_flag(r.source, r.translation, cfg.detector).flagged;
    d.oscillatory_share = static_cast<double>(osc) / static_cast<double>(dh.size());

    // Without a full corpus, length statistics cover the D_h side only.
    const auto corpus_it = corpora.find(pair);
    const std::vector<TranslationRecord>& population = corpus_it != corpora.end() ? corpus_it->second : dh;
    std::vector<double> src_h, src_c, tgt_h, tgt_c, scores;
    std::vector<bool> labels;
    for (const auto& r : population) {
      const bool hall = ids[p].count(r.id) > 0;
      labels.push_back(hall);
      (hall ? src_h : src_c).push_back(static_cast<double>(text::codepoint_length(r.source)));
      (hall ? tgt_h : tgt_c).push_back(static_cast<double>(text::codepoint_length(r.translation)));
      if (r.hs) scores.push_back(*r.hs);
    }
    d.source_hallucinated = length_stats(src_h);
    d.source_clean = length_stats(src_c);
    d.translation_hallucinated = length_stats(tgt_h);
    d.translation_clean = length_stats(tgt_c);
    d.hs_full = histogram(scores, 0.0, kMaxHallucinationScore, cfg.bin_width);
    d.hs_zoom = histogram(scores, cfg.zoom_lo, kMaxHallucinationScore, cfg.bin_width);

    if (corpus_it != corpora.end()) {
      const std::pair<const char*, bool FeatureFlags::*> features[] = {
          {"quotes", &FeatureFlags::quotes}, {"urls", &FeatureFlags::urls}, {"caps", &FeatureFlags::caps}};
      for (const auto& [name, member] : features) {
        try {
          d.feature_tests[name] = chi_squared_2x2(feature_table(population, labels, member));
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::kDegenerateMargin) throw;
        }
      }
    }
    rep.per_pair.emplace(pair, std::move(d));
  }
  return rep;
}

}  // namespace halo::analysis
