#pragma once

namespace halo::testing {

struct ChrfFixture {
  const char* hyp;
  const char* ref;
  double score;
};

// Reference values from sacrebleu CHRF(char_order=6, word_order=0, beta=2),
// regenerated by tests/oracles/chrf_fixture.py.
constexpr ChrfFixture kChrfFixture[] = {
    {"the cat sat on the mat", "the cat sat on the mat", 100.0000000000},
    {"the cat sat on the mat", "a cat was sitting on the mat", 37.2254256632},
    {"hello world", "hello there world", 39.9060314601},
    {"abc", "abd", 38.8888888889},
    {"a", "a", 100.0000000000},
    {"a", "b", 0.0000000000},
    {"ab", "abc", 63.6363636364},
    {"Das ist ein kleiner Test.", "Das ist ein Test.", 67.4526567120},
    {"Größe und Übermaß", "Grösse und Uebermass", 31.8512444103},
    {"这是一个测试句子", "这是一个句子", 40.4896310332},
    {"我爱北京天安门", "我爱北京", 79.0682414698},
    {"The quick brown fox jumps over the lazy dog", "A quick brown dog jumps over the lazy fox", 73.6690180551},
    {"repeat repeat repeat repeat", "repeat", 48.3034165981},
    {"short", "a much longer reference sentence here", 3.7593984962},
    {"a much longer hypothesis sentence here", "short", 9.4339622642},
    {"Москва является столицей России", "Столица России это Москва", 44.8642596958},
    {"numbers 123 456", "numbers 123 789", 70.6361693862},
    {"punctuation, matters!", "punctuation matters", 80.3711396701},
    {"x y z w x y z w x y z w", "x y z w", 59.7997892518},
    {"Þetta er prófun á íslensku", "Þetta er próf á íslensku", 82.7255304096},
};

}  // namespace halo::testing
