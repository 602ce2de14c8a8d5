#pragma once

// Deterministic in-process backends emulating a translation model that
// occasionally falls into oscillatory loops, plus a scorer, embedder and
// log-prob scorer that are consistent with it.
//
// Randomness
// ----------
// Every draw comes from SplitMix64 (Steele, Lea & Flood) seeded with
//
//     state0 = seed ^ fnv1a64(text) ^ (stream * 0x9E3779B97F4A7C15)
//
// and a Bernoulli(rate) draw is `(next() >> 11) < threshold`, where the
// threshold is 2^53 for rate >= 1 and floor(rate * 2^53) otherwise. Streams:
//   0       mock_translate's hallucination coin for `text` = source
//   1 + i   candidate i of a generation request (seed = request seed if
//           given, else the model seed)
//   k       embedding noise component k for `text` = the embedded text
// No branch depends on floating-point arithmetic beyond that threshold.

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "halo/clients.hpp"
#include "halo/cpo.hpp"
#include "halo/scoring.hpp"

namespace httplib {
class Server;
}

namespace halo::mock {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t state) : state_(state) {}
  SplitMix64(std::uint64_t seed, std::string_view text, std::uint64_t stream);

  std::uint64_t next();
  bool bernoulli(double rate);
  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::uint64_t state_;
};

std::uint64_t bernoulli_threshold(double rate);

struct MockModelConfig {
  std::uint64_t seed = 0;
  double hallucination_rate = 0.0;   // single-output translation
  int loop_ngram_len = 4;
  int loop_repeats = 6;
  double per_candidate_rate = 0.1;   // candidate generation

  void validate() const;
};

// Reversible token transform: each detector token is ROT13'd and reversed.
std::string pseudo_translate(std::string_view source);

// loop_repeats copies of a loop_ngram_len-token loop built from the pseudo
// translation, starting at token `offset` (cyclic).
std::string make_loop(std::string_view source, const MockModelConfig& cfg, std::uint64_t offset = 0);

// Whether mock_translate injects a loop for this source.
bool mock_injects(const MockModelConfig& cfg, std::string_view source);

std::string mock_translate(const MockModelConfig& cfg, std::string_view source);

// Beam search with n == 1 answers with mock_translate; every other request
// yields n candidates, each independently looped with per_candidate_rate.
class MockModel final : public clients::Generator {
 public:
  explicit MockModel(MockModelConfig cfg);
  std::vector<std::string> generate(const clients::GenerationRequest& req) override;
  const MockModelConfig& config() const { return cfg_; }

 private:
  MockModelConfig cfg_;
};

inline constexpr double kMockCleanScore = 4.6;
inline constexpr double kMockLoopScore = 1.2;

// 1.2 when the translation trips the oscillation detector against its
// source, else 4.6.
class MockScorer final : public clients::QeScorer {
 public:
  explicit MockScorer(scoring::NgramDetectorConfig cfg = {}) : cfg_(cfg) {}
  double score(const std::string& source, const std::string& translation,
               const clients::LanguagePair& langs) override;

 private:
  scoring::NgramDetectorConfig cfg_;
};

// 16-dimensional vectors: unit mass on the clean anchor (dim 0) or the looped
// anchor (dim 1) plus deterministic noise of at most 0.05 on dims 2..15.
// A text counts as looped when its own top n-gram count reaches
// threshold + 1, the detector's verdict against a non-repetitive source.
class MockEmbedder final : public clients::Embedder {
 public:
  static constexpr std::size_t kDim = 16;
  explicit MockEmbedder(std::uint64_t seed = 0, scoring::NgramDetectorConfig cfg = {})
      : seed_(seed), cfg_(cfg) {}
  std::vector<std::vector<double>> embed(std::span<const std::string> texts) override;
  bool is_looped(std::string_view text) const;

 private:
  std::uint64_t seed_;
  scoring::NgramDetectorConfig cfg_;
};

// Exact sequence log-probability under a published bigram table. Target
// tokens map to symbols by fnv1a64(token) % alphabet; the source is ignored.
class MockLogProb final : public clients::LogProbScorer {
 public:
  explicit MockLogProb(cpo::ToyPolicy table = cpo::ToyPolicy::uniform(4)) : table_(std::move(table)) {}
  double logprob(const std::string& source, const std::string& target,
                 const clients::LanguagePair& langs) override;
  std::vector<int> symbols(std::string_view target) const;
  const cpo::ToyPolicy& table() const { return table_; }

 private:
  cpo::ToyPolicy table_;
};

// Constant-probability language identifier, for tests.
class ConstantLangId final : public clients::LanguageIdentifier {
 public:
  explicit ConstantLangId(double p) : p_(p) {}
  double probability(const std::string&, const std::string&) override { return p_; }
  std::string name() const override { return "constant"; }

 private:
  double p_;
};

struct MockBackends {
  std::shared_ptr<clients::Generator> generator;
  std::shared_ptr<clients::QeScorer> scorer;
  std::shared_ptr<clients::Embedder> embedder;
  std::shared_ptr<clients::LogProbScorer> logprob;
  std::shared_ptr<clients::LanguageIdentifier> langid;
};

MockBackends make_mock_backends(const MockModelConfig& cfg);

// Registers POST /generate, /score, /embed, /logprob and /langid on `server`,
// speaking the same wire schema as the HTTP clients. Null members are skipped.
void mount(httplib::Server& server, const MockBackends& backends);

}  // namespace halo::mock
