// Acceptance checks: one PASS/FAIL line per criterion, each with its own
// tolerance and runtime budget. Exit status is nonzero when any check fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "chrf_fixture.hpp"
#include "detector_cases.hpp"
#include "halo/analysis.hpp"
#include "halo/cli.hpp"
#include "halo/cpo.hpp"
#include "halo/dataset.hpp"
#include "halo/detection.hpp"
#include "halo/filters.hpp"
#include "halo/mitigation.hpp"
#include "halo/mock.hpp"
#include "halo/scoring.hpp"
#include "mbr_oracle.hpp"
#include "planted_corpus.hpp"
#include "test_util.hpp"

using namespace halo;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

// Accumulates failures; the first message is kept for the report line.
struct Checker {
  Outcome out;
  void require(bool cond, const std::string& what) {
    if (!cond && out.ok) {
      out.ok = false;
      out.detail = what;
    }
  }
};

int failures = 0;

void run(const std::string& name, double budget_s, const std::function<Outcome()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (o.ok && secs > budget_s) {
    o = {false, "runtime " + std::to_string(secs) + " s exceeds " + std::to_string(budget_s) + " s"};
  }
  if (!o.ok) ++failures;
  std::printf("%s  %-22s %.3f s  %s\n", o.ok ? "PASS" : "FAIL", name.c_str(), secs, o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome hallucination_score_check() {
  Checker c;
  const auto hs = [](double raw) { return scoring::hallucination_score(raw).value; };
  c.require(std::abs(hs(5.0) - 0.0) <= 1e-12, "raw 5");
  c.require(std::abs(hs(1.0) - 0.8) <= 1e-12, "raw 1");
  c.require(std::abs(hs(2.5) - 0.5) <= 1e-12, "raw 2.5");
  double prev = hs(0.0);
  for (int i = 1; i <= 10000; ++i) {
    const double raw = 6.0 * i / 10000.0;
    const double v = hs(raw);
    c.require(v <= prev, "not monotone at raw " + std::to_string(raw));
    if (raw > 1.0 && raw <= 5.0) c.require(v < prev, "not strictly decreasing at raw " + std::to_string(raw));
    prev = v;
  }
  if (c.out.ok) c.out.detail = "endpoints exact to 1e-12, 10000-point grid monotone";
  return c.out;
}

Outcome set_construction_check() {
  Checker c;
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> u(0.0, 0.8);
  const detection::Threshold t(0.5);
  std::vector<TranslationRecord> records, mitigated;
  for (int i = 0; i < 1000; ++i) {
    TranslationRecord r;
    r.id = "r" + std::to_string(i);
    r.source = "source " + std::to_string(i);
    r.translation = "translation " + std::to_string(i);
    r.src_lang = "en";
    r.tgt_lang = "de";
    const auto kind = rng() % 10;
    if (kind == 0) r.hs = 0.5;  // boundary belongs to the set
    else if (kind == 1) r.meta[detection::kScorerErrorKey] = "timeout";
    else r.hs = u(rng);
    records.push_back(r);
  }
  const auto dh = detection::build_hallucination_set(records, t);
  std::vector<std::string> got, want;
  for (const auto& r : dh) got.push_back(r.id);
  for (const auto& r : records) {
    if (r.hs && *r.hs >= 0.5) want.push_back(r.id);
  }
  c.require(got == want, "hallucination set differs from brute force");

  for (const auto& r : dh) {
    auto m = r;
    m.translation = "mitigated " + r.id;
    const auto kind = rng() % 5;
    m.hs = kind == 0 ? 0.5 : u(rng);
    mitigated.push_back(m);
  }
  const auto prefs = mitigation::build_preference_set(dh, mitigated, t);
  std::vector<PreferenceTriplet> expected;
  for (std::size_t i = 0; i < dh.size(); ++i) {
    if (*mitigated[i].hs < 0.5) {
      expected.push_back({dh[i].id, dh[i].source, mitigated[i].translation, dh[i].translation, *mitigated[i].hs,
                          *dh[i].hs, "en", "de"});
    }
  }
  c.require(prefs.triplets == expected, "preference set differs from brute force");
  c.require(prefs.dropped == dh.size() - expected.size(), "dropped count");
  if (c.out.ok) {
    c.out.detail = std::to_string(got.size()) + " of 1000 in D_h, " + std::to_string(expected.size()) +
                   " triplets, exact equality";
  }
  return c.out;
}

Outcome mbr_check() {
  Checker c;
  static const std::vector<std::string> words{"the", "cat", "sat", "on", "mat", "a", "dog", "ran",
                                              "der", "hund", "lief", "schnell", "haus", "katze"};
  std::mt19937_64 rng(77);
  int agree = 0;
  for (int s = 0; s < 200; ++s) {
    const std::size_t n = 2 + rng() % 9;
    mitigation::CandidateSet set;
    set.source = "src";
    for (std::size_t i = 0; i < n; ++i) {
      std::string cand;
      const int len = 1 + static_cast<int>(rng() % 6);
      for (int k = 0; k < len; ++k) cand += (k ? " " : "") + words[rng() % words.size()];
      set.candidates.push_back(cand);
    }
    const auto r = mitigation::mbr_select(
        set, [](const std::string& h, const std::string& ref) { return scoring::chrf(h, ref); });
    const auto o = testing::mbr_oracle(set.candidates);
    if (set.candidates[r.index] == set.candidates[o]) ++agree;
    else c.require(false, "set " + std::to_string(s) + " disagrees");
  }
  if (c.out.ok) c.out.detail = std::to_string(agree) + "/200 sets agree with the exhaustive oracle";
  return c.out;
}

Outcome cpo_check() {
  Checker c;
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> logp(-200.0, 0.0), phi(1e-3, 1.0), beta(0.01, 2.0);
  double closed = 0.0, identity = 0.0;
  for (int i = 0; i < 10000; ++i) {
    cpo::LossInputs in{logp(rng), logp(rng), phi(rng), phi(rng), beta(rng)};
    closed = std::max(closed, std::abs(cpo::scaled_preference_loss(in) - cpo::scaled_preference_loss_closed_form(in)));
    in.phi_dispreferred = in.phi_preferred;
    identity = std::max(identity, std::abs(cpo::cpo_total_loss(in) - cpo::cpo_loss_unscaled(in)));
  }
  c.require(closed <= 1e-9, fmt("closed form error %.3e", closed));
  c.require(identity <= 1e-12, fmt("psi=1 error %.3e", identity));
  double grad = 0.0;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const auto policy = cpo::ToyPolicy::random(4, seed);
    const cpo::PolicyPair pair{{0, 2, 1, 3}, {3, 3, 0, 1, 2}};
    for (auto mode : {cpo::LossMode::kFull, cpo::LossMode::kPrefOnly, cpo::LossMode::kNllOnly}) {
      grad = std::max(grad, cpo::finite_difference_check(policy, pair, 0.9, 0.3, 0.1, 1e-5, mode).max_relative_error);
    }
  }
  c.require(grad <= 1e-4, fmt("gradient error %.3e", grad));
  if (c.out.ok) {
    c.out.detail = fmt("closed form %.1e, ", closed) + fmt("psi=1 %.1e, ", identity) + fmt("fd gradient %.1e", grad);
  }
  return c.out;
}

Outcome closed_loop_check() {
  Checker c;
  testing::TempDir dir;
  config::PipelineConfig cfg;
  cfg.seed = 11;
  cfg.mock_rate = 0.05;
  cfg.workers = 1;
  const auto report = cli::simulate(cfg, {.n = 10000, .out_dir = dir.path()});

  const auto translations = read_dataset<TranslationRecord>(dir / "translations.jsonl");
  const detection::Threshold t(cfg.threshold);
  const auto model = cfg.mock_model();
  std::size_t agree = 0;
  for (const auto& r : translations) {
    if (mock::mock_injects(model, r.source) == detection::is_hallucination(r, t)) ++agree;
  }
  const double hr = detection::hallucination_rate(translations, t);
  const double agreement = static_cast<double>(agree) / static_cast<double>(translations.size());
  const double mr = report["mitigation"]["rate"].get<double>();
  c.require(translations.size() == 10000, "corpus size");
  c.require(std::abs(hr - 0.05) <= 0.005, fmt("HR %.4f outside 5%% +- 0.5 pp", hr));
  c.require(agreement >= 0.999, fmt("label agreement %.4f", agreement));
  c.require(mr >= 0.999, fmt("MR %.4f", mr));

  const auto prefs = read_dataset<PreferenceTriplet>(dir / "prefs.jsonl");
  std::size_t bad = 0;
  for (const auto& p : prefs) {
    if (!(p.phi_preferred < 0.5 && 0.5 <= p.phi_dispreferred)) ++bad;
  }
  c.require(bad == 0, std::to_string(bad) + " triplets violate phi_p < 0.5 <= phi_d");
  c.require(!prefs.empty(), "no triplets");
  if (c.out.ok) {
    c.out.detail = fmt("HR %.4f, ", hr) + fmt("agreement %.4f, ", agreement) + fmt("MR %.4f, ", mr) +
                   std::to_string(prefs.size()) + " triplets valid";
  }
  return c.out;
}

Outcome detector_check() {
  Checker c;
  const auto cases = testing::detector_cases();
  int errors = 0;
  for (const auto& k : cases) {
    if (scoring::oscillatory_flag(k.source, k.translation).flagged != k.expected) {
      ++errors;
      c.require(false, "case " + k.name);
    }
  }
  c.require(cases.size() == 50, "expected 50 cases");
  if (c.out.ok) c.out.detail = std::to_string(cases.size()) + " cases, " + std::to_string(errors) + " errors";
  return c.out;
}

Outcome chrf_check() {
  Checker c;
  double worst = 0.0;
  int count = 0;
  for (const auto& f : testing::kChrfFixture) {
    worst = std::max(worst, std::abs(scoring::chrf(f.hyp, f.ref) - f.score));
    ++count;
  }
  c.require(count == 20, "fixture size");
  c.require(worst <= 1e-3, fmt("max deviation %.3e", worst));
  if (c.out.ok) c.out.detail = std::to_string(count) + " pairs, " + fmt("max deviation %.2e", worst);
  return c.out;
}

Outcome chi_squared_check() {
  Checker c;
  const auto chi = [](std::uint64_t a, std::uint64_t b, std::uint64_t x, std::uint64_t d) {
    analysis::ContingencyTable t;
    t.counts = {{{a, b}, {x, d}}};
    return analysis::chi_squared_2x2(t);
  };
  const auto indep = chi(10, 10, 10, 10);
  c.require(indep.statistic == 0.0 && indep.p_value == 1.0, "independent table");
  const auto a = chi(20, 5, 5, 20);
  const auto b = chi(1, 0, 0, 1);
  const double da = std::abs(a.p_value - 2.2090496998585441373e-5);
  const double db = std::abs(b.p_value - 0.15729920705028513066);
  c.require(std::abs(a.statistic - 18.0) <= 1e-9 && da <= 1e-6, "[[20,5],[5,20]]");
  c.require(std::abs(b.statistic - 2.0) <= 1e-9 && db <= 1e-6, "[[1,0],[0,1]]");
  if (c.out.ok) c.out.detail = "independence exact, " + fmt("p deviations %.1e", da) + fmt(" and %.1e", db);
  return c.out;
}

Outcome filters_check() {
  Checker c;
  const auto lines = testing::planted_corpus(10000);
  std::vector<Sentence> in;
  std::map<std::string, std::size_t> planted;
  std::set<std::string> must_keep;
  for (const auto& l : lines) {
    in.push_back(l.sentence);
    if (l.reason.empty()) must_keep.insert(l.sentence.id);
    else ++planted[l.reason];
  }
  const auto once = filters::run_pipeline(in, {});
  std::set<std::string> kept;
  for (const auto& s : once.kept) kept.insert(s.id);
  c.require(kept == must_keep, "kept set differs from the clean lines");

  // Each dropped line must be dropped with its planted reason: rerun the
  // pipeline one line at a time against a shared streaming chain.
  filters::FilterPipeline chain({}, nullptr);
  std::size_t wrong = 0;
  std::map<std::string, std::size_t> seen;
  for (const auto& l : lines) {
    auto s = l.sentence;
    chain.process(s);
    std::map<std::string, std::size_t> now;
    for (const auto& rep : chain.reports()) {
      for (const auto& [reason, n] : rep.drop_reasons) now[reason] += n;
    }
    std::string reason;
    for (const auto& [r, n] : now) {
      if (n != seen[r]) reason = r;
    }
    seen = now;
    if (reason != l.reason) ++wrong;
  }
  c.require(wrong == 0, std::to_string(wrong) + " lines with the wrong reason");
  c.require(seen == planted, "reason totals differ from planted counts");

  for (std::size_t k = 0; k < once.reports.size(); ++k) {
    const auto& r = once.reports[k];
    c.require(r.input_count == r.kept_count + r.dropped_count, "stage " + r.stage + " does not balance");
    if (k > 0) c.require(r.input_count == once.reports[k - 1].kept_count, "stage " + r.stage + " input");
  }
  const auto twice = filters::run_pipeline(once.kept, {});
  c.require(twice.kept == once.kept, "pipeline not idempotent");
  if (c.out.ok) {
    std::size_t dropped = 0;
    for (const auto& [r, n] : planted) dropped += n;
    c.out.detail = std::to_string(dropped) + " planted violations dropped with correct reasons, " +
                   std::to_string(once.kept.size()) + " kept, idempotent";
  }
  return c.out;
}

Outcome determinism_check() {
  Checker c;
  testing::TempDir a, b;
  config::PipelineConfig cfg;
  cfg.seed = 11;
  cli::simulate(cfg, {.n = 10000, .out_dir = a.path()});
  cli::simulate(cfg, {.n = 10000, .out_dir = b.path()});
  for (const char* f : {"dh.jsonl", "prefs.jsonl", "report.json", "translations.jsonl", "mitigated.jsonl"}) {
    c.require(testing::read_file(a / f) == testing::read_file(b / f), std::string(f) + " differs");
  }
  if (c.out.ok) c.out.detail = "D_h, D_p and report byte-identical across two runs";
  return c.out;
}

}  // namespace

int main() {
  run("hallucination-score", 1.0, hallucination_score_check);
  run("set-construction", 1.0, set_construction_check);
  run("mbr-oracle", 10.0, mbr_check);
  run("cpo-kernels", 30.0, cpo_check);
  run("closed-loop", 120.0, closed_loop_check);
  run("oscillatory-detector", 1.0, detector_check);
  run("chrf-fixture", 1.0, chrf_check);
  run("chi-squared", 1.0, chi_squared_check);
  run("filters", 5.0, filters_check);
  run("determinism", 240.0, determinism_check);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
