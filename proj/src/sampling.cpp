#include "halo/sampling.hpp"

#include <cmath>

#include "halo/error.hpp"

namespace halo::mitigation {

namespace {

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorKind::kInvalidArgument, what);
}

}  // namespace

std::string_view to_string(SamplingMethod m) {
  switch (m) {
    case SamplingMethod::kBeam: return "beam";
    case SamplingMethod::kTemperature: return "temperature";
    case SamplingMethod::kNucleus: return "nucleus";
    case SamplingMethod::kEpsilon: return "epsilon";
    case SamplingMethod::kMcBeam: return "mc_beam";
  }
  return "beam";
}

SamplingMethod parse_sampling_method(std::string_view name) {
  if (name == "beam") return SamplingMethod::kBeam;
  if (name == "temperature") return SamplingMethod::kTemperature;
  if (name == "nucleus") return SamplingMethod::kNucleus;
  if (name == "epsilon") return SamplingMethod::kEpsilon;
  if (name == "mc_beam") return SamplingMethod::kMcBeam;
  invalid("unknown sampling method \"" + std::string(name) + "\"");
}

SamplingConfig SamplingConfig::defaults(SamplingMethod method, int n) {
  SamplingConfig c;
  c.method = method;
  c.n = n;
  switch (method) {
    case SamplingMethod::kNucleus: c.top_p = 0.9; break;
    case SamplingMethod::kEpsilon: c.epsilon = 0.02; break;
    case SamplingMethod::kMcBeam: c.beam_size = 5; break;
    case SamplingMethod::kBeam: c.beam_size = 40; break;
    case SamplingMethod::kTemperature: break;
  }
  return c;
}

void SamplingConfig::validate() const {
  if (n < 1) invalid("n must be >= 1");
  if (!std::isfinite(temperature) || !(temperature > 0.0)) invalid("temperature must be > 0");

  const bool nucleus = method == SamplingMethod::kNucleus;
  const bool eps = method == SamplingMethod::kEpsilon;
  const bool beam = method == SamplingMethod::kBeam || method == SamplingMethod::kMcBeam;

  if (top_p && !nucleus) invalid("top_p is only valid for nucleus sampling");
  if (nucleus) {
    if (!top_p) invalid("nucleus sampling needs top_p");
    if (!(*top_p > 0.0 && *top_p <= 1.0)) invalid("top_p must lie in (0, 1]");
  }
  if (epsilon && !eps) invalid("epsilon is only valid for epsilon sampling");
  if (eps) {
    if (!epsilon) invalid("epsilon sampling needs epsilon");
    if (!(*epsilon >= 0.0 && *epsilon < 1.0)) invalid("epsilon must lie in [0, 1)");
  }
  if (beam_size && !beam) invalid("beam_size is only valid for beam and mc_beam");
  if (beam) {
    if (!beam_size) invalid("beam search needs beam_size");
    if (*beam_size < 1) invalid("beam_size must be >= 1");
  }
}

nlohmann::json SamplingConfig::to_json() const {
  using nlohmann::json;
  return json{{"method", std::string(to_string(method))},
              {"n", n},
              {"temperature", temperature},
              {"top_p", top_p ? json(*top_p) : json(nullptr)},
              {"epsilon", epsilon ? json(*epsilon) : json(nullptr)},
              {"beam_size", beam_size ? json(*beam_size) : json(nullptr)}};
}

std::string_view to_string(Selector s) { return s == Selector::kMbr ? "mbr" : "rerank"; }

std::string_view to_string(Utility u) {
  switch (u) {
    case Utility::kChrf: return "chrf";
    case Utility::kEmbedCosine: return "embed_cosine";
    case Utility::kExternalQe: return "external_qe";
  }
  return "chrf";
}

Selector parse_selector(std::string_view name) {
  if (name == "mbr") return Selector::kMbr;
  if (name == "rerank") return Selector::kRerank;
  invalid("unknown selector \"" + std::string(name) + "\"");
}

Utility parse_utility(std::string_view name) {
  if (name == "chrf") return Utility::kChrf;
  if (name == "embed_cosine") return Utility::kEmbedCosine;
  if (name == "external_qe") return Utility::kExternalQe;
  invalid("unknown utility \"" + std::string(name) + "\"");
}

void SelectionConfig::validate() const {
  if (selector == Selector::kRerank && utility == Utility::kChrf) {
    invalid("rerank with chrf is not supported: chrF compares two target-language strings");
  }
}

nlohmann::json SelectionConfig::to_json() const {
  return {{"selector", std::string(to_string(selector))},
          {"utility", std::string(to_string(utility))}};
}

void CandidateSet::validate() const {
  if (candidates.empty()) invalid("candidate set is empty");
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].empty()) invalid("candidate " + std::to_string(i) + " is empty");
  }
}

}  // namespace halo::mitigation
