#pragma once

// Contracts for the external neural services: translation generator, QE
// scorer, sentence embedder, sequence log-prob scorer and language ID.
//
// Implementations are shareable handles; concurrent calls are allowed and the
// in-flight bound is enforced by the caller.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "halo/sampling.hpp"

namespace halo::clients {

struct LanguagePair {
  std::string src;
  std::string tgt;
};

struct GenerationRequest {
  std::string source;
  LanguagePair langs;
  mitigation::SamplingConfig sampling;
  std::optional<std::uint64_t> seed;
};

class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::vector<std::string> generate(const GenerationRequest& req) = 0;
};

class QeScorer {
 public:
  virtual ~QeScorer() = default;
  // Raw reference-free quality score on the nominal 1..5 scale.
  virtual double score(const std::string& source, const std::string& translation,
                       const LanguagePair& langs) = 0;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<std::vector<double>> embed(std::span<const std::string> texts) = 0;
};

class LogProbScorer {
 public:
  virtual ~LogProbScorer() = default;
  virtual double logprob(const std::string& source, const std::string& target,
                         const LanguagePair& langs) = 0;
};

class LanguageIdentifier {
 public:
  virtual ~LanguageIdentifier() = default;
  // Probability that `text` is written in `lang`.
  virtual double probability(const std::string& text, const std::string& lang) = 0;
  virtual std::string name() const = 0;
};

// Contract-checked entry points. Each validates the backend's answer and
// raises BackendError / InvalidScore / DimensionInconsistent on violations.

mitigation::CandidateSet generate_candidates(Generator& client, const GenerationRequest& req);

double score_pair(QeScorer& client, const std::string& source, const std::string& translation,
                  const LanguagePair& langs);

std::vector<std::vector<double>> embed_texts(Embedder& client, std::span<const std::string> texts);

double sequence_logprob(LogProbScorer& client, const std::string& source,
                        const std::string& target, const LanguagePair& langs);

// HTTP transport.
struct HttpOptions {
  std::string base_url;     // scheme://host[:port][/prefix]
  int timeout_ms = 30000;
  int retries = 2;          // extra attempts after the first
  std::string bearer_token; // sent as "Authorization: Bearer ..." when non-empty
};

std::unique_ptr<Generator> make_http_generator(const HttpOptions& opts);
std::unique_ptr<QeScorer> make_http_scorer(const HttpOptions& opts);
std::unique_ptr<Embedder> make_http_embedder(const HttpOptions& opts);
std::unique_ptr<LogProbScorer> make_http_logprob(const HttpOptions& opts);
std::unique_ptr<LanguageIdentifier> make_http_langid(const HttpOptions& opts);

// Wire schemas, shared by the HTTP clients and the mock server.
nlohmann::json generation_request_to_json(const GenerationRequest& req);
GenerationRequest generation_request_from_json(const nlohmann::json& j);

}  // namespace halo::clients
