#include "halo/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "halo/error.hpp"
#include "halo/text.hpp"

namespace halo::scoring {

HallucinationScore hallucination_score(double raw) {
  if (!std::isfinite(raw)) {
    throw Error(ErrorKind::kNonFiniteInput, "raw QE score is not finite");
  }
  const double clamped = std::clamp(raw, kRawScoreMin, kRawScoreMax);
  return {1.0 - clamped / kRawScoreMax, clamped != raw};
}

std::vector<std::string> detector_tokens(std::string_view s) {
  const std::string_view trimmed = text::trim(s);
  if (text::contains_space(trimmed)) return text::split_whitespace(trimmed);
  std::vector<std::string> out;
  for (char32_t cp : text::decode_utf8(trimmed)) {
    std::string tok;
    text::append_utf8(tok, cp);
    out.push_back(std::move(tok));
  }
  return out;
}

TopNgram top_ngram(std::span<const std::string> tokens, int n) {
  TopNgram best;
  if (n < 1 || tokens.size() < static_cast<std::size_t>(n)) return best;
  std::unordered_map<std::string, int> counts;
  std::vector<std::string> order;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (int k = 1; k < n; ++k) {
      key += ' ';
      key += tokens[i + k];
    }
    auto [it, inserted] = counts.try_emplace(key, 0);
    if (inserted) order.push_back(key);
    ++it->second;
  }
  for (const auto& key : order) {
    const int c = counts[key];
    if (c > best.count) best = {key, c};
  }
  return best;
}

OscillationEvidence oscillatory_flag(std::string_view source, std::string_view translation,
                                     const NgramDetectorConfig& cfg) {
  if (cfg.n < 1 || cfg.threshold < 1) {
    throw Error(ErrorKind::kInvalidArgument, "n-gram detector needs n >= 1 and threshold >= 1");
  }
  const auto src_tokens = detector_tokens(source);
  const auto tgt_tokens = detector_tokens(translation);
  OscillationEvidence ev;
  ev.translation_top = top_ngram(tgt_tokens, cfg.n);
  ev.source_top_count = top_ngram(src_tokens, cfg.n).count;
  ev.flagged = ev.translation_top.count - ev.source_top_count >= cfg.threshold;
  return ev;
}

namespace {

// Counts of all character n-grams of one order over whitespace-free text.
std::map<std::u32string, int> char_ngrams(const std::u32string& s, int n) {
  std::map<std::u32string, int> out;
  if (s.size() < static_cast<std::size_t>(n)) return out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++out[s.substr(i, n)];
  return out;
}

std::u32string strip_whitespace(std::string_view s) {
  std::u32string out;
  for (char32_t cp : text::decode_utf8(s)) {
    if (!text::is_space(cp)) out.push_back(cp);
  }
  return out;
}

}  // namespace

ChrfResult chrf_detailed(std::string_view hypothesis, std::string_view reference,
                         int max_char_n, double beta) {
  if (max_char_n < 1) throw Error(ErrorKind::kInvalidArgument, "max_char_n must be >= 1");
  if (!(beta > 0.0)) throw Error(ErrorKind::kInvalidArgument, "beta must be > 0");

  const std::u32string hyp = strip_whitespace(hypothesis);
  const std::u32string ref = strip_whitespace(reference);

  ChrfResult res;
  res.both_empty = hyp.empty() && ref.empty();
  res.orders.reserve(max_char_n);

  double prec_sum = 0.0;
  double rec_sum = 0.0;
  for (int n = 1; n <= max_char_n; ++n) {
    const auto h = char_ngrams(hyp, n);
    const auto r = char_ngrams(ref, n);
    ChrfOrderStats st;
    for (const auto& [g, c] : h) st.hyp_count += c;
    for (const auto& [g, c] : r) st.ref_count += c;
    for (const auto& [g, c] : h) {
      if (auto it = r.find(g); it != r.end()) st.match_count += std::min(c, it->second);
    }
    if (st.hyp_count > 0 && st.ref_count > 0) {
      prec_sum += static_cast<double>(st.match_count) / st.hyp_count;
      rec_sum += static_cast<double>(st.match_count) / st.ref_count;
      ++res.effective_order;
    }
    res.orders.push_back(st);
  }

  if (res.effective_order == 0) return res;
  res.precision = prec_sum / res.effective_order;
  res.recall = rec_sum / res.effective_order;
  const double b2 = beta * beta;
  const double denom = b2 * res.precision + res.recall;
  if (denom > 0.0) {
    res.score = 100.0 * (1.0 + b2) * res.precision * res.recall / denom;
  }
  return res;
}

double chrf(std::string_view hypothesis, std::string_view reference, int max_char_n,
            double beta) {
  return chrf_detailed(hypothesis, reference, max_char_n, beta).score;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::kDimensionMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorKind::kZeroVector, "cosine of an all-zero vector");
  const double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(c, -1.0, 1.0);
}

}  // namespace halo::scoring
