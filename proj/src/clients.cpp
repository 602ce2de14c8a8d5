#include "halo/clients.hpp"

#include <cmath>

#include "halo/error.hpp"

namespace halo::clients {

using nlohmann::json;

mitigation::CandidateSet generate_candidates(Generator& client, const GenerationRequest& req) {
  req.sampling.validate();
  mitigation::CandidateSet set;
  set.source = req.source;
  set.config = req.sampling;
  set.candidates = client.generate(req);
  if (set.candidates.size() != static_cast<std::size_t>(req.sampling.n)) {
    throw Error(ErrorKind::kBackendError,
                "generator returned " + std::to_string(set.candidates.size()) +
                    " candidates, expected " + std::to_string(req.sampling.n));
  }
  for (const auto& c : set.candidates) {
    if (c.empty()) throw Error(ErrorKind::kBackendError, "generator returned an empty candidate");
  }
  return set;
}

double score_pair(QeScorer& client, const std::string& source, const std::string& translation,
                  const LanguagePair& langs) {
  const double v = client.score(source, translation, langs);
  if (!std::isfinite(v)) throw Error(ErrorKind::kInvalidScore, "scorer returned a non-finite value");
  return v;
}

std::vector<std::vector<double>> embed_texts(Embedder& client, std::span<const std::string> texts) {
  if (texts.empty()) throw Error(ErrorKind::kInvalidArgument, "embed_texts needs at least one text");
  auto vectors = client.embed(texts);
  if (vectors.size() != texts.size()) {
    throw Error(ErrorKind::kDimensionInconsistent,
                "embedder returned " + std::to_string(vectors.size()) + " vectors for " +
                    std::to_string(texts.size()) + " texts");
  }
  const std::size_t dim = vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != dim || dim == 0) {
      throw Error(ErrorKind::kDimensionInconsistent, "embedding dimensions differ");
    }
    for (double x : v) {
      if (!std::isfinite(x)) throw Error(ErrorKind::kDimensionInconsistent, "non-finite embedding");
    }
  }
  return vectors;
}

double sequence_logprob(LogProbScorer& client, const std::string& source,
                        const std::string& target, const LanguagePair& langs) {
  const double lp = client.logprob(source, target, langs);
  if (!std::isfinite(lp) || lp > 0.0) {
    throw Error(ErrorKind::kInvalidScore, "log-probability must be finite and <= 0");
  }
  return lp;
}

json generation_request_to_json(const GenerationRequest& req) {
  const auto& s = req.sampling;
  return json{{"source", req.source},
              {"src_lang", req.langs.src},
              {"tgt_lang", req.langs.tgt},
              {"n", s.n},
              {"method", std::string(mitigation::to_string(s.method))},
              {"temperature", s.temperature},
              {"top_p", s.top_p ? json(*s.top_p) : json(nullptr)},
              {"epsilon", s.epsilon ? json(*s.epsilon) : json(nullptr)},
              {"beam_size", s.beam_size ? json(*s.beam_size) : json(nullptr)},
              {"seed", req.seed ? json(*req.seed) : json(nullptr)}};
}

GenerationRequest generation_request_from_json(const json& j) {
  GenerationRequest req;
  try {
    req.source = j.at("source").get<std::string>();
    req.langs.src = j.at("src_lang").get<std::string>();
    req.langs.tgt = j.at("tgt_lang").get<std::string>();
    req.sampling.method = mitigation::parse_sampling_method(j.at("method").get<std::string>());
    req.sampling.n = j.at("n").get<int>();
    req.sampling.temperature = j.value("temperature", 1.0);
    if (j.contains("top_p") && !j["top_p"].is_null()) req.sampling.top_p = j["top_p"].get<double>();
    if (j.contains("epsilon") && !j["epsilon"].is_null()) {
      req.sampling.epsilon = j["epsilon"].get<double>();
    }
    if (j.contains("beam_size") && !j["beam_size"].is_null()) {
      req.sampling.beam_size = j["beam_size"].get<int>();
    }
    if (j.contains("seed") && !j["seed"].is_null()) req.seed = j["seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidArgument, std::string("malformed generation request: ") + e.what());
  }
  req.sampling.validate();
  return req;
}

}  // namespace halo::clients
