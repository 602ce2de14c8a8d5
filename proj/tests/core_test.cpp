#include <doctest.h>

#include <random>

#include "halo/dataset.hpp"
#include "halo/error.hpp"
#include "halo/text.hpp"
#include "test_util.hpp"

using namespace halo;
using halo::testing::TempDir;
using halo::testing::read_file;
using halo::testing::write_file;

namespace {

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

TEST_CASE("three valid sentences read back in order") {
  TempDir dir;
  write_file(dir / "s.jsonl",
             R"({"id":"a","text":"one","lang":"en"})" "\n"
             R"({"id":"b","text":"two","lang":"en"})" "\n"
             R"({"id":"c","text":"three","lang":"de"})" "\n");
  const auto rows = read_dataset<Sentence>(dir / "s.jsonl");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == Sentence{"a", "one", "en"});
  CHECK(rows[1].text == "two");
  CHECK(rows[2].lang == "de");
}

TEST_CASE("empty file gives an empty stream") {
  TempDir dir;
  write_file(dir / "e.jsonl", "");
  CHECK(read_dataset<Sentence>(dir / "e.jsonl").empty());
}

TEST_CASE("missing text on line 2 is a schema violation naming line and field") {
  TempDir dir;
  write_file(dir / "s.jsonl",
             R"({"id":"a","text":"one","lang":"en"})" "\n"
             R"({"id":"b","lang":"en"})" "\n");
  try {
    read_dataset<Sentence>(dir / "s.jsonl");
    FAIL("no error");
  } catch (const SchemaViolation& e) {
    CHECK(e.line() == 2);
    CHECK(e.field() == "text");
  }
}

TEST_CASE("reader error kinds") {
  TempDir dir;
  CHECK(kind_of([&] { read_dataset<Sentence>(dir / "absent.jsonl"); }) == ErrorKind::kMissingFile);

  write_file(dir / "dup.jsonl",
             R"({"id":"a","text":"one","lang":"en"})" "\n"
             R"({"id":"a","text":"two","lang":"en"})" "\n");
  CHECK(kind_of([&] { read_dataset<Sentence>(dir / "dup.jsonl"); }) == ErrorKind::kDuplicateId);

  write_file(dir / "bad.jsonl", "{not json}\n");
  CHECK(kind_of([&] { read_dataset<Sentence>(dir / "bad.jsonl"); }) == ErrorKind::kSchemaViolation);

  write_file(dir / "hs.jsonl",
             R"({"id":"a","source":"x","translation":"y","src_lang":"en","tgt_lang":"de","hs":0.9,"meta":{}})"
             "\n");
  CHECK(kind_of([&] { read_dataset<TranslationRecord>(dir / "hs.jsonl"); }) == ErrorKind::kSchemaViolation);

  write_file(dir / "lang.jsonl",
             R"({"id":"a","source":"x","translation":"y","src_lang":"en","tgt_lang":"en","hs":null,"meta":{}})"
             "\n");
  CHECK(kind_of([&] { read_dataset<TranslationRecord>(dir / "lang.jsonl"); }) ==
        ErrorKind::kSchemaViolation);

  write_file(dir / "t.jsonl",
             R"({"id":"a","source":"x","preferred":"y","dispreferred":"y","phi_preferred":0.1,)"
             R"("phi_dispreferred":0.7,"src_lang":"en","tgt_lang":"de"})" "\n");
  CHECK(kind_of([&] { read_dataset<PreferenceTriplet>(dir / "t.jsonl"); }) == ErrorKind::kSchemaViolation);
}

TEST_CASE("missing ids become zero-padded line ids; blank lines still count") {
  TempDir dir;
  write_file(dir / "s.jsonl", R"({"text":"one","lang":"en"})" "\n\n" R"({"text":"two","lang":"en"})" "\n");
  const auto rows = read_dataset<Sentence>(dir / "s.jsonl");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].id == "line-000001");
  CHECK(rows[1].id == "line-000003");
}

TEST_CASE("write_dataset manifests") {
  TempDir dir;
  std::vector<Sentence> five;
  for (int i = 0; i < 5; ++i) five.push_back({"id" + std::to_string(i), "text", "en"});
  const auto m = write_dataset(five, dir / "five.jsonl");
  CHECK(m.record_count == 5);
  CHECK(m.schema == Schema::kSentence);
  CHECK(m.created_by == std::string(kToolVersion));
  CHECK(count_records(dir / "five.jsonl") == 5);

  const auto empty = write_dataset(std::vector<Sentence>{}, dir / "sub" / "empty.jsonl");
  CHECK(empty.record_count == 0);
  CHECK(read_file(dir / "sub" / "empty.jsonl").empty());
}

TEST_CASE("keys are emitted alphabetically and newlines encoded") {
  TranslationRecord r{"id1", "line\nbreak", "zwei", "en", "de", 0.25, {{"z", "1"}, {"a", "2"}}};
  const std::string line = to_jsonl_line(r);
  CHECK(line ==
        R"({"hs":0.25,"id":"id1","meta":{"a":"2","z":"1"},"source":"line<NEWLINE>break",)"
        R"("src_lang":"en","tgt_lang":"de","translation":"zwei"})");
  CHECK(line.find('\n') == std::string::npos);
}

TEST_CASE("round trip over randomized records is field-for-field exact") {
  TempDir dir;
  std::mt19937_64 rng(42);
  const std::vector<std::string> pieces{"a", "ß", "中文", "\"q\"", "\\", "tab\t", "😀", " ", "<NEWLINE>"};
  auto rand_text = [&] {
    std::string s;
    const int n = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) s += pieces[rng() % pieces.size()];
    return s;
  };
  std::vector<TranslationRecord> records;
  std::vector<PreferenceTriplet> triplets;
  for (int i = 0; i < 300; ++i) {
    TranslationRecord r;
    r.id = "r" + std::to_string(i);
    r.source = rand_text();
    r.translation = rand_text();
    r.src_lang = "en";
    r.tgt_lang = "de";
    if (rng() % 3) r.hs = std::uniform_real_distribution<double>(0.0, 0.8)(rng);
    if (rng() % 2) r.meta["k" + std::to_string(i)] = rand_text();
    records.push_back(r);
    PreferenceTriplet t{r.id, r.source, "p" + rand_text(), "d" + rand_text(),
                        std::uniform_real_distribution<double>(0.0, 0.5)(rng), 0.7, "en", "de"};
    triplets.push_back(t);
  }
  write_dataset(records, dir / "r.jsonl");
  write_dataset(triplets, dir / "t.jsonl");
  CHECK(read_dataset<TranslationRecord>(dir / "r.jsonl") == records);
  CHECK(read_dataset<PreferenceTriplet>(dir / "t.jsonl") == triplets);
}

TEST_CASE("streaming reader over a large file") {
  TempDir dir;
  {
    DatasetWriter<Sentence> w(dir / "big.jsonl");
    for (int i = 0; i < 200000; ++i) w.write({"s" + std::to_string(i), "some sentence text", "en"});
    CHECK(w.finish().record_count == 200000);
  }
  DatasetReader<Sentence> reader(dir / "big.jsonl");
  std::size_t n = 0;
  while (auto r = reader.next()) {
    if (n == 123456) CHECK(r->id == "s123456");
    ++n;
  }
  CHECK(n == 200000);
}

TEST_CASE("utf8 helpers") {
  bool valid = true;
  CHECK(text::decode_utf8("a\xff", &valid) == std::u32string{U'a', 0xFFFD});
  CHECK_FALSE(valid);
  CHECK(text::is_valid_utf8("Größe"));
  CHECK(text::codepoint_length("Größe") == 5);
  CHECK(text::split_whitespace("  a 　b\tc ") == std::vector<std::string>{"a", "b", "c"});
  CHECK(text::encode_newlines("a\r\nb\nc") == "a<NEWLINE>b<NEWLINE>c");
  CHECK(text::decode_newlines("a<NEWLINE>b") == "a\nb");
  CHECK(text::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(text::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("exit codes per error kind") {
  CHECK(exit_code_for(ErrorKind::kConfigInvalid) == kExitConfig);
  CHECK(exit_code_for(ErrorKind::kBackendUnreachable) == kExitBackend);
  CHECK(exit_code_for(ErrorKind::kTimeoutExceeded) == kExitBackend);
  CHECK(exit_code_for(ErrorKind::kSchemaViolation) == kExitData);
  CHECK(exit_code_for(ErrorKind::kVerificationFailure) == kExitVerification);
}
