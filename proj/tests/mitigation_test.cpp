#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fakes.hpp"
#include "halo/error.hpp"
#include "halo/mitigation.hpp"
#include "halo/mock.hpp"
#include "halo/scoring.hpp"
#include "mbr_oracle.hpp"

using namespace halo;
using namespace halo::mitigation;
using halo::testing::FixedGenerator;
using halo::testing::FunctionScorer;
using halo::testing::make_record;

namespace {

CandidateSet cset(std::vector<std::string> c) { return {"source", std::move(c), paper_best_sampling()}; }

PairUtility chrf_utility() {
  return [](const std::string& a, const std::string& b) { return scoring::chrf(a, b); };
}

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected a halo::Error");
  return ErrorKind::kVerificationFailure;
}

}  // namespace

TEST_CASE("sampling presets and validation") {
  const auto s = paper_best_sampling();
  CHECK(s.method == SamplingMethod::kEpsilon);
  CHECK(s.n == 40);
  CHECK(*s.epsilon == 0.02);
  CHECK(s.temperature == 1.0);
  CHECK(SamplingConfig::defaults(SamplingMethod::kNucleus).top_p == 0.9);
  CHECK(SamplingConfig::defaults(SamplingMethod::kMcBeam).beam_size == 5);
  CHECK(SamplingConfig::defaults(SamplingMethod::kBeam).beam_size == 40);
  auto bad = s;
  bad.top_p = 0.9;
  CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::kInvalidArgument);
  auto zero = s;
  zero.n = 0;
  CHECK_THROWS_AS(zero.validate(), Error);
  CHECK(paper_best_selection().selector == Selector::kRerank);
  CHECK(paper_best_selection().utility == Utility::kEmbedCosine);
  CHECK_THROWS_AS((SelectionConfig{Selector::kRerank, Utility::kChrf}.validate()), Error);
  CHECK_NOTHROW((SelectionConfig{Selector::kMbr, Utility::kChrf}.validate()));
  CHECK_THROWS_AS(cset({}).validate(), Error);
  CHECK_THROWS_AS(cset({"a", ""}).validate(), Error);
}

TEST_CASE("mbr worked examples") {
  const auto res = mbr_select(cset({"aaa", "aab", "zzz"}), chrf_utility());
  CHECK(res.index == halo::testing::mbr_oracle({"aaa", "aab", "zzz"}));
  CHECK(res.index != 2);
  CHECK(mbr_select(cset({"same", "same", "same"}), chrf_utility()).index == 0);
  // Two candidates under a symmetric utility: equal pair values tie at index 0.
  CHECK(mbr_select(2, [](std::size_t, std::size_t) { return 0.4; }).index == 0);
  // Otherwise the larger utility(c_i, c_other) wins.
  const auto two = mbr_select(2, [](std::size_t i, std::size_t) { return i == 1 ? 0.9 : 0.2; });
  CHECK(two.index == 1);
  // chrF weights recall, so the longer hypothesis covering the shorter wins.
  CHECK(mbr_select(cset({"x y", "x y z"}), chrf_utility()).index == 1);
  const auto single = mbr_select(cset({"only"}), chrf_utility());
  CHECK(single.single_candidate);
  CHECK(single.index == 0);
}

TEST_CASE("mbr agrees with the exhaustive oracle and is permutation invariant") {
  std::mt19937_64 rng(2024);
  const std::vector<std::string> words{"the", "cat", "sat", "on", "mat", "a", "dog", "der", "die", "das"};
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 9;
    std::vector<std::string> c;
    for (std::size_t i = 0; i < n; ++i) {
      std::string s;
      const int len = 1 + static_cast<int>(rng() % 5);
      for (int k = 0; k < len; ++k) s += (k ? " " : "") + words[rng() % words.size()];
      c.push_back(s);
    }
    const auto got = mbr_select(cset(c), chrf_utility());
    CHECK(c[got.index] == c[halo::testing::mbr_oracle(c)]);
    auto shuffled = c;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(shuffled[mbr_select(cset(shuffled), chrf_utility()).index] == c[got.index]);
  }
}

TEST_CASE("rerank examples") {
  const std::vector<double> u{0.1, 0.9, 0.4};
  CHECK(rerank_select(3, [&](std::size_t i) { return u[i]; }).index == 1);
  CHECK(rerank_select(2, [](std::size_t) { return 0.5; }).index == 0);
}

TEST_CASE("rerank excludes failed candidates") {
  const auto res = rerank_select(4, [](std::size_t i) -> double {
    if (i == 1) throw Error(ErrorKind::kBackendError, "bad");
    if (i == 2) return std::nan("");
    return i == 3 ? 0.7 : 0.2;
  });
  CHECK(res.index == 3);
  CHECK(res.failed == std::vector<std::size_t>{1, 2});
  CHECK_FALSE(res.utilities[1].has_value());
  CHECK(kind_of([] { rerank_select(2, [](std::size_t) -> double { throw Error(ErrorKind::kBackendError, "x"); }); }) ==
        ErrorKind::kAllCandidatesFailed);
}

TEST_CASE("rerank never returns a dominated candidate") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> u(1 + rng() % 12);
    for (double& x : u) x = static_cast<double>(rng() % 7) / 7.0;
    const auto res = rerank_select(u.size(), [&](std::size_t i) { return u[i]; });
    CHECK(u[res.index] == *std::max_element(u.begin(), u.end()));
    CHECK(std::find(u.begin(), u.end(), u[res.index]) - u.begin() == static_cast<long>(res.index));
  }
}

TEST_CASE("fallback strategy passes the clean translator's output through") {
  mock::MockModelConfig clean;
  clean.seed = 5;
  mock::MockModel fallback(clean);
  const auto rec = make_record("r1", "one two three four five", "loop loop loop", 0.76);
  const auto out = mitigate(rec, FallbackStrategy{&fallback, 40}, detection::Threshold());
  CHECK(out.translation == mock::pseudo_translate(rec.source));
  CHECK(out.provenance.strategy == "fallback");
  const auto m = to_mitigated_record(rec, out);
  CHECK(m.id == "r1");
  CHECK(m.translation == out.translation);
  CHECK_FALSE(m.hs.has_value());
  CHECK(m.meta.at("strategy") == "fallback");
}

TEST_CASE("mitigate requires a record of the hallucination set and wraps generator errors") {
  FixedGenerator gen({"a"});
  const auto clean = make_record("r", "s", "t", 0.1);
  CHECK(kind_of([&] { mitigate(clean, FallbackStrategy{&gen, 40}, detection::Threshold()); }) ==
        ErrorKind::kInvalidArgument);
  halo::testing::ThrowingGenerator down(ErrorKind::kBackendError);
  GenerateSelectStrategy s;
  s.generator = &down;
  s.selection = {Selector::kMbr, Utility::kChrf};
  const auto bad = make_record("r", "s", "t", 0.7);
  CHECK(kind_of([&] { mitigate(bad, s, detection::Threshold()); }) == ErrorKind::kGenerationFailure);
}

TEST_CASE("epsilon + embedding rerank picks a clean candidate whenever one exists") {
  mock::MockModelConfig cfg;
  cfg.seed = 21;
  cfg.per_candidate_rate = 0.1;
  mock::MockModel model(cfg);
  mock::MockEmbedder embedder(21);
  GenerateSelectStrategy s;
  s.generator = &model;
  s.embedder = &embedder;
  std::size_t checked = 0;
  for (int i = 0; i < 300; ++i) {
    std::string src;
    for (int k = 0; k < 9; ++k) src += "t" + std::to_string(i) + "x" + std::to_string(k) + " ";
    const auto rec = make_record("r" + std::to_string(i), src, "", 0.76);
    s.seed = static_cast<std::uint64_t>(i);
    const auto out = mitigate(rec, s, detection::Threshold());
    // Exhaustive replay of the same candidate set.
    clients::GenerationRequest req{src, {"en", "de"}, s.sampling, s.seed};
    const auto cands = model.generate(req);
    const bool any_clean = std::any_of(cands.begin(), cands.end(), [&](const std::string& c) {
      return !scoring::oscillatory_flag(src, c).flagged;
    });
    REQUIRE(out.provenance.selected_index.has_value());
    CHECK(cands[*out.provenance.selected_index] == out.translation);
    if (any_clean) {
      CHECK_FALSE(scoring::oscillatory_flag(src, out.translation).flagged);
      ++checked;
    }
  }
  CHECK(checked == 300);
}

TEST_CASE("mbr with external QE scores candidate pairs in the target language") {
  FixedGenerator gen({"alpha", "beta", "gamma"});
  std::vector<std::pair<std::string, std::string>> calls;
  FunctionScorer qe([](const std::string& ref, const std::string& hyp) {
    return hyp == "beta" ? 4.0 : (ref == "beta" ? 3.0 : 2.0);
  });
  GenerateSelectStrategy s;
  s.generator = &gen;
  s.scorer = &qe;
  s.sampling = SamplingConfig::defaults(SamplingMethod::kNucleus, 3);
  s.selection = {Selector::kMbr, Utility::kExternalQe};
  const auto out = mitigate(make_record("r", "src", "bad", 0.7), s, detection::Threshold());
  CHECK(out.translation == "beta");
  CHECK(gen.last_request.sampling.n == 3);
}

TEST_CASE("mitigation rate examples") {
  mock::MockScorer scorer;
  const std::string src = "a b c d e f";
  const std::string loop = "x y z w x y z w x y z w";
  std::vector<TranslationRecord> dh{make_record("1", src, loop, 0.76), make_record("2", src, loop, 0.76)};
  auto fixed = std::vector<TranslationRecord>{make_record("1", src, "f e d c b a"), make_record("2", src, "b a")};
  CHECK(mitigation_rate(dh, fixed, scorer, detection::Threshold()).rate == 1.0);
  CHECK(fixed[0].hs.has_value());
  auto same = std::vector<TranslationRecord>{make_record("1", src, loop), make_record("2", src, loop)};
  CHECK(mitigation_rate(dh, same, scorer, detection::Threshold()).rate == 0.0);
  auto misaligned = std::vector<TranslationRecord>{make_record("2", src, loop), make_record("1", src, loop)};
  CHECK(kind_of([&] { mitigation_rate(dh, misaligned, scorer, detection::Threshold()); }) ==
        ErrorKind::kAlignmentMismatch);
  std::vector<TranslationRecord> none;
  CHECK(kind_of([&] { mitigation_rate(none, none, scorer, detection::Threshold()); }) == ErrorKind::kEmptyDataset);
}

TEST_CASE("an oracle fixing each record with probability 0.99 gives MR in [0.98, 1]") {
  mock::MockScorer scorer;
  std::vector<TranslationRecord> dh, fixed;
  for (std::uint64_t i = 0; i < 5000; ++i) {
    const std::string src = "s" + std::to_string(i) + " b c d e f";
    const std::string loop = "x y z w x y z w x y z w";
    dh.push_back(make_record(std::to_string(i), src, loop, 0.76));
    mock::SplitMix64 coin(99, src, 0);
    fixed.push_back(make_record(std::to_string(i), src, coin.bernoulli(0.99) ? "f e d c b" : loop));
  }
  const auto rep = mitigation_rate(dh, fixed, scorer, detection::Threshold(), {4});
  CHECK(rep.rate >= 0.98);
  CHECK(rep.rate <= 1.0);
  CHECK(rep.attempted == 5000);
}

TEST_CASE("preference set examples") {
  std::vector<TranslationRecord> dh{make_record("1", "x1", "y1", 0.7), make_record("2", "x2", "y2", 0.6),
                                    make_record("3", "x3", "y3", 0.75)};
  std::vector<TranslationRecord> mit{make_record("1", "x1", "m1", 0.1), make_record("2", "x2", "m2", 0.6),
                                     make_record("3", "x3", "m3", 0.4)};
  const auto set = build_preference_set(dh, mit, detection::Threshold(0.5));
  REQUIRE(set.triplets.size() == 2);
  CHECK(set.dropped == 1);
  CHECK(set.triplets[0] == PreferenceTriplet{"1", "x1", "m1", "y1", 0.1, 0.7, "en", "de"});
  CHECK(set.triplets[1].id == "3");
}

TEST_CASE("preference set equals brute force over random records") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 0.8), hi(0.5, 0.8);
  std::vector<TranslationRecord> dh, mit;
  for (int i = 0; i < 200; ++i) {
    const auto id = std::to_string(i);
    dh.push_back(make_record(id, "x" + id, "y" + id, hi(rng)));
    mit.push_back(make_record(id, "x" + id, "m" + id, (i % 17 == 0) ? 0.5 : u(rng)));
  }
  const detection::Threshold t(0.5);
  const auto set = build_preference_set(dh, mit, t);
  std::vector<PreferenceTriplet> want;
  for (std::size_t i = 0; i < dh.size(); ++i) {
    if (*mit[i].hs < 0.5) {
      want.push_back({dh[i].id, dh[i].source, mit[i].translation, dh[i].translation, *mit[i].hs, *dh[i].hs,
                      dh[i].src_lang, dh[i].tgt_lang});
    }
  }
  CHECK(set.triplets == want);
  CHECK(set.dropped == dh.size() - want.size());
  for (const auto& p : set.triplets) {
    CHECK(p.phi_preferred < 0.5);
    CHECK(p.phi_dispreferred >= 0.5);
  }
  auto unscored = mit;
  unscored[3].hs.reset();
  CHECK(kind_of([&] { build_preference_set(dh, unscored, t); }) == ErrorKind::kUnscoredRecord);
}
