#include <doctest.h>

#include <atomic>
#include <cmath>
#include <random>

#include "fakes.hpp"
#include "halo/detection.hpp"
#include "halo/error.hpp"
#include "halo/mock.hpp"

using namespace halo;
using namespace halo::detection;
using halo::testing::FunctionScorer;
using halo::testing::make_record;

namespace {

std::vector<TranslationRecord> unscored(std::size_t n) {
  std::vector<TranslationRecord> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(make_record("r" + std::to_string(i), "src", "tgt"));
  return v;
}

std::vector<TranslationRecord> with_hs(const std::vector<double>& hs) {
  std::vector<TranslationRecord> v;
  for (std::size_t i = 0; i < hs.size(); ++i) v.push_back(make_record("r" + std::to_string(i), "s", "t", hs[i]));
  return v;
}

}  // namespace

TEST_CASE("constant scorers") {
  FunctionScorer perfect([](auto&, auto&) { return 5.0; });
  for (const auto& r : score_corpus(unscored(20), perfect)) CHECK(*r.hs == 0.0);
  FunctionScorer worst([](auto&, auto&) { return 1.0; });
  for (const auto& r : score_corpus(unscored(20), worst)) CHECK(std::abs(*r.hs - 0.8) < 1e-12);
}

TEST_CASE("per-record raw scores map through the score formula in order") {
  auto recs = unscored(2);
  recs[0].translation = "a";
  recs[1].translation = "b";
  FunctionScorer s([](auto&, const std::string& t) { return t == "a" ? 4.5 : 1.5; });
  const auto out = score_corpus(recs, s, {4});
  CHECK(std::abs(*out[0].hs - 0.10) < 1e-12);
  CHECK(std::abs(*out[1].hs - 0.70) < 1e-12);
  CHECK(out[0].id == "r0");
}

TEST_CASE("parallel scoring preserves order") {
  auto recs = unscored(500);
  for (std::size_t i = 0; i < recs.size(); ++i) recs[i].translation = std::to_string(i % 5);
  FunctionScorer s([](auto&, const std::string& t) { return 1.0 + std::stoi(t); });
  const auto out = score_corpus(recs, s, {8});
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i].id == "r" + std::to_string(i));
    CHECK(std::abs(*out[i].hs - (1.0 - (1.0 + static_cast<double>(i % 5)) / 5.0)) < 1e-12);
  }
}

TEST_CASE("per-record scorer failures are recorded and excluded") {
  auto recs = unscored(4);
  recs[1].translation = "bad";
  recs[2].translation = "raw";
  FunctionScorer s([](auto&, const std::string& t) {
    if (t == "bad") throw Error(ErrorKind::kBackendError, "500");
    return t == "raw" ? 9.0 : 1.0;
  });
  score_batch(recs, s);
  CHECK_FALSE(recs[1].hs.has_value());
  CHECK(scorer_failed(recs[1]));
  CHECK(recs[2].meta.count(kClampedRawKey) == 1);
  DetectionTally tally{Threshold()};
  for (const auto& r : recs) tally.add(r);
  const auto rep = tally.report();
  CHECK(rep.total == 4);
  CHECK(rep.scored == 3);
  CHECK(rep.failed == 1);
  CHECK(rep.hallucinated == 2);
  CHECK(rep.rate == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("an unreachable scorer aborts the pass") {
  FunctionScorer s([](auto&, auto&) -> double { throw Error(ErrorKind::kBackendUnreachable, "down"); });
  auto recs = unscored(3);
  try {
    score_batch(recs, s);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kBackendUnreachable);
  }
}

TEST_CASE("boundary is inclusive") {
  const auto set = build_hallucination_set(with_hs({0.2, 0.5, 0.7}), Threshold(0.5));
  REQUIRE(set.size() == 2);
  CHECK(set[0].id == "r1");
  CHECK(set[1].id == "r2");
  CHECK(build_hallucination_set(with_hs({0.1, 0.2}), Threshold(0.5)).empty());
}

TEST_CASE("set construction equals brute force on random records") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 0.8);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> hs(100);
    for (double& h : hs) h = (rng() % 10 == 0) ? 0.5 : u(rng);
    const auto recs = with_hs(hs);
    const auto set = build_hallucination_set(recs, Threshold(0.5));
    std::vector<std::string> want;
    for (const auto& r : recs) {
      if (*r.hs >= 0.5) want.push_back(r.id);
    }
    std::vector<std::string> got;
    for (const auto& r : set) got.push_back(r.id);
    CHECK(got == want);
    CHECK(hallucination_rate(recs, Threshold(0.5)) == doctest::Approx(static_cast<double>(want.size()) / 100.0));
  }
}

TEST_CASE("unscored records are rejected") {
  auto recs = with_hs({0.1, 0.6});
  recs[1].hs.reset();
  try {
    build_hallucination_set(recs, Threshold());
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kUnscoredRecord);
  }
}

TEST_CASE("hallucination rate examples and errors") {
  CHECK(hallucination_rate(with_hs({0.6, 0.7, 0.55, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1}), Threshold()) ==
        doctest::Approx(0.3));
  try {
    hallucination_rate(std::vector<TranslationRecord>{}, Threshold());
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kEmptyDataset);
  }
}

TEST_CASE("rate is monotone in T and the set re-scores at rate 1") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 0.8);
  std::vector<double> hs(1000);
  for (double& h : hs) h = u(rng);
  const auto recs = with_hs(hs);
  double prev = 1.0;
  for (int i = 1; i < 80; ++i) {
    const Threshold t(i / 100.0);
    const double hr = hallucination_rate(recs, t);
    CHECK(hr <= prev);
    prev = hr;
    const auto set = build_hallucination_set(recs, t);
    CHECK(set.size() == static_cast<std::size_t>(std::llround(hr * 1000)));
    if (!set.empty()) CHECK(hallucination_rate(set, t) == 1.0);
  }
}

TEST_CASE("threshold must lie strictly inside (0, 0.8)") {
  CHECK_THROWS_AS(Threshold(0.0), Error);
  CHECK_THROWS_AS(Threshold(0.8), Error);
  CHECK_THROWS_AS(Threshold(std::nan("")), Error);
  CHECK(Threshold().value() == 0.5);
}

TEST_CASE("mock corpus at 5% injection lands in [0.045, 0.055]") {
  mock::MockModelConfig cfg;
  cfg.seed = 11;
  cfg.hallucination_rate = 0.05;
  std::vector<TranslationRecord> recs;
  for (int i = 0; i < 10000; ++i) {
    std::string src;
    for (int k = 0; k < 10; ++k) src += "w" + std::to_string(i) + "_" + std::to_string(k) + " ";
    recs.push_back(make_record("r" + std::to_string(i), src, mock::mock_translate(cfg, src)));
  }
  mock::MockScorer scorer;
  score_batch(recs, scorer, {4});
  const double hr = hallucination_rate(recs, Threshold());
  CHECK(hr >= 0.045);
  CHECK(hr <= 0.055);
}
