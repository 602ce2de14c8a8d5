#pragma once

// Constructed positive and negative cases for the oscillation detector with
// n = 4 and threshold = 2. Each expectation follows from the construction:
// m back-to-back copies of a 4-token loop of distinct tokens contain the
// loop's 4-gram exactly m times, a run of distinct tokens has top count 1
// (0 when shorter than 4 tokens), and the alternating sequence (a b)^r has
// top count r - 1.

#include <string>
#include <vector>

namespace halo::testing {

struct DetectorCase {
  std::string name;
  std::string source;
  std::string translation;
  bool expected;
};

inline std::string join_tokens(const std::vector<std::string>& toks, const std::string& sep = " ") {
  std::string s;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) s += sep;
    s += toks[i];
  }
  return s;
}

inline std::vector<std::string> distinct_tokens(int n, const std::string& prefix) {
  std::vector<std::string> t;
  for (int i = 0; i < n; ++i) t.push_back(prefix + std::to_string(i));
  return t;
}

inline std::vector<std::string> repeat_loop(const std::vector<std::string>& loop, int m) {
  std::vector<std::string> t;
  for (int i = 0; i < m; ++i) t.insert(t.end(), loop.begin(), loop.end());
  return t;
}

inline std::vector<DetectorCase> detector_cases() {
  std::vector<DetectorCase> cases;
  const std::vector<std::string> loop{"x", "y", "z", "w"};

  // Loop of m copies against distinct-token sources of length 3 (top 0) and 6 (top 1).
  for (int m = 1; m <= 6; ++m) {
    for (int len : {3, 6}) {
      const int src_top = len >= 4 ? 1 : 0;
      cases.push_back({"loop m=" + std::to_string(m) + " src_len=" + std::to_string(len),
                       join_tokens(distinct_tokens(len, "s")), join_tokens(repeat_loop(loop, m)),
                       m - src_top >= 2});
    }
  }

  // Source already repeats its own loop k times.
  for (int k = 1; k <= 4; ++k) {
    for (int extra = 1; extra <= 3; ++extra) {
      const int m = k + extra;
      auto src = repeat_loop({"p", "q", "r", "t"}, k);
      const auto tail = distinct_tokens(3, "u");
      src.insert(src.end(), tail.begin(), tail.end());
      cases.push_back({"source loop k=" + std::to_string(k) + " m=" + std::to_string(m), join_tokens(src),
                       join_tokens(repeat_loop(loop, m)), extra >= 2});
    }
  }

  // Translations shorter than n tokens have count 0.
  for (int len = 0; len <= 3; ++len) {
    cases.push_back({"short translation len=" + std::to_string(len), join_tokens(distinct_tokens(6, "s")),
                     join_tokens(distinct_tokens(len, "t")), false});
  }

  // No whitespace: one token per character.
  for (int m = 1; m <= 5; ++m) {
    std::string t;
    for (int i = 0; i < m; ++i) t += "我爱你们";
    cases.push_back({"cjk loop m=" + std::to_string(m), "今天天气很好", t, m - 1 >= 2});
  }

  // Leading and trailing whitespace does not change the verdict.
  for (int m = 1; m <= 6; ++m) {
    cases.push_back({"padded loop m=" + std::to_string(m), "  " + join_tokens(distinct_tokens(6, "s")) + " \t",
                     "\t " + join_tokens(repeat_loop(loop, m)) + "  ", m - 1 >= 2});
  }

  // Identical sentences give a gap of 0.
  const std::vector<std::string> same{
      "the cat sat on the mat", "a b c d e f g", join_tokens(repeat_loop(loop, 5)), "短句", "one two three four"};
  for (const auto& s : same) cases.push_back({"identical: " + s, s, s, false});

  // Period-2 alternation (a b)^r has top count r - 1.
  for (int r = 2; r <= 7; ++r) {
    cases.push_back({"alternating r=" + std::to_string(r), join_tokens(distinct_tokens(6, "s")),
                     join_tokens(repeat_loop({"a", "b"}, r)), r - 1 - 1 >= 2});
  }
  return cases;
}

}  // namespace halo::testing
