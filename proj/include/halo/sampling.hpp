#pragma once

// Candidate-generation and candidate-selection settings. Shared between the
// mitigation stage and the generator clients that transport them.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace halo::mitigation {

enum class SamplingMethod { kBeam, kTemperature, kNucleus, kEpsilon, kMcBeam };

std::string_view to_string(SamplingMethod m);
SamplingMethod parse_sampling_method(std::string_view name);

struct SamplingConfig {
  SamplingMethod method = SamplingMethod::kEpsilon;
  int n = 40;
  double temperature = 1.0;
  std::optional<double> top_p;      // nucleus only
  std::optional<double> epsilon;    // epsilon only
  std::optional<int> beam_size;     // beam and mc_beam only

  // Method defaults: top_p 0.9, epsilon 0.02, beam 5 (mc_beam) or 40 (beam).
  static SamplingConfig defaults(SamplingMethod method, int n = 40);

  // Throws InvalidArgument when a field is out of range or set for a method
  // that does not use it.
  void validate() const;

  nlohmann::json to_json() const;
};

enum class Selector { kMbr, kRerank };
enum class Utility { kChrf, kEmbedCosine, kExternalQe };

std::string_view to_string(Selector s);
std::string_view to_string(Utility u);
Selector parse_selector(std::string_view name);
Utility parse_utility(std::string_view name);

struct SelectionConfig {
  Selector selector = Selector::kRerank;
  Utility utility = Utility::kEmbedCosine;

  // rerank + chrf is rejected: chrF compares two target-language strings.
  void validate() const;

  nlohmann::json to_json() const;
};

struct CandidateSet {
  std::string source;
  std::vector<std::string> candidates;  // duplicates allowed
  SamplingConfig config;

  // Throws InvalidArgument when empty or when a candidate is the empty string.
  void validate() const;
};

}  // namespace halo::mitigation
