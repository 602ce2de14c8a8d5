#include <doctest.h>

#include <cmath>
#include <random>

#include "chrf_fixture.hpp"
#include "detector_cases.hpp"
#include "halo/error.hpp"
#include "halo/scoring.hpp"

using namespace halo;
using namespace halo::scoring;

TEST_CASE("hallucination score endpoints") {
  CHECK(hallucination_score(5.0).value == 0.0);
  CHECK(std::abs(hallucination_score(1.0).value - 0.8) < 1e-12);
  CHECK(std::abs(hallucination_score(2.5).value - 0.5) < 1e-12);
  CHECK_FALSE(hallucination_score(2.5).clamped);
}

TEST_CASE("raw scores outside [1, 5] are clamped") {
  const auto hi = hallucination_score(7.2);
  CHECK(hi.value == 0.0);
  CHECK(hi.clamped);
  const auto lo = hallucination_score(-3.0);
  CHECK(std::abs(lo.value - 0.8) < 1e-12);
  CHECK(lo.clamped);
}

TEST_CASE("non-finite raw score is rejected") {
  CHECK_THROWS_AS(hallucination_score(std::nan("")), Error);
  CHECK_THROWS_AS(hallucination_score(INFINITY), Error);
}

TEST_CASE("hallucination score is monotone non-increasing") {
  double prev = 1.0;
  for (int i = 0; i <= 10000; ++i) {
    const double raw = -1.0 + 8.0 * i / 10000.0;
    const double v = hallucination_score(raw).value;
    CHECK(v <= prev);
    CHECK(v >= 0.0);
    CHECK(v <= 0.8 + 1e-15);
    prev = v;
  }
}

TEST_CASE("detector worked example") {
  const auto ev = oscillatory_flag("a b c d e f", "x y z w x y z w x y z w");
  CHECK(ev.flagged);
  CHECK(ev.translation_top.count == 3);
  CHECK(ev.translation_top.ngram == "x y z w");
  CHECK(ev.source_top_count == 1);
  CHECK_FALSE(oscillatory_flag("the same words", "the same words").flagged);
  CHECK_FALSE(oscillatory_flag("a b c d e f", "x y z").flagged);
  CHECK(oscillatory_flag("a b c d e f", "x y z").translation_top.count == 0);
}

TEST_CASE("detector constructed cases") {
  for (const auto& c : halo::testing::detector_cases()) {
    CAPTURE(c.name);
    CHECK(oscillatory_flag(c.source, c.translation).flagged == c.expected);
  }
}

TEST_CASE("detector tokenization") {
  CHECK(detector_tokens("  a  b\tc ") == std::vector<std::string>{"a", "b", "c"});
  CHECK(detector_tokens("中文字") == std::vector<std::string>{"中", "文", "字"});
  const std::vector<std::string> toks{"a", "b", "a", "b", "c", "d", "c", "d"};
  // "a b a b" and "b a b c" etc. each once; ties go to the first.
  CHECK(top_ngram(toks, 4).ngram == "a b a b");
  CHECK(top_ngram(toks, 2).ngram == "a b");
  CHECK(top_ngram(toks, 2).count == 2);
}

TEST_CASE("chrF matches the frozen reference fixture") {
  for (const auto& f : halo::testing::kChrfFixture) {
    CAPTURE(f.hyp);
    CAPTURE(f.ref);
    CHECK(std::abs(chrf(f.hyp, f.ref) - f.score) <= 1e-3);
  }
}

TEST_CASE("chrF edge cases") {
  CHECK(chrf("hello", "hello") == doctest::Approx(100.0));
  CHECK(chrf("aaaa", "zzzz") == 0.0);
  const auto both = chrf_detailed("", "");
  CHECK(both.both_empty);
  CHECK(both.score == 0.0);
  CHECK(chrf("", "abc") == 0.0);
}

TEST_CASE("chrF argument swap exchanges precision and recall") {
  std::mt19937_64 rng(5);
  const std::string alphabet = "abcde fgh";
  for (int i = 0; i < 200; ++i) {
    std::string a, b;
    for (int k = 0; k < 3 + static_cast<int>(rng() % 20); ++k) a += alphabet[rng() % alphabet.size()];
    for (int k = 0; k < 3 + static_cast<int>(rng() % 20); ++k) b += alphabet[rng() % alphabet.size()];
    const auto ab = chrf_detailed(a, b);
    const auto ba = chrf_detailed(b, a);
    CHECK(ab.precision == ba.recall);
    CHECK(ab.recall == ba.precision);
    CHECK(chrf(a + "   ", b + "   ") == chrf(a, b));
  }
}

TEST_CASE("cosine similarity") {
  const std::vector<double> v{0.3, -1.2, 4.0};
  CHECK(cosine_similarity(v, v) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 0.0);
  CHECK(std::abs(cosine_similarity(std::vector<double>{1, 1}, std::vector<double>{1, 0}) -
                 0.7071067811865475244) < 1e-9);
  const std::vector<double> w{2.0, 0.5, -1.0};
  std::vector<double> kv = v;
  for (double& x : kv) x *= 37.5;
  CHECK(std::abs(cosine_similarity(kv, w) - cosine_similarity(v, w)) < 1e-12);
  try {
    cosine_similarity(std::vector<double>{1, 2}, std::vector<double>{1});
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDimensionMismatch);
  }
  try {
    cosine_similarity(std::vector<double>{0, 0}, std::vector<double>{1, 0});
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kZeroVector);
  }
}
