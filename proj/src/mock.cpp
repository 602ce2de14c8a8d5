#include "halo/mock.hpp"

#include <cmath>

#include "halo/error.hpp"
#include "halo/text.hpp"
#include "httplib.h"

namespace halo::mock {

using nlohmann::json;

SplitMix64::SplitMix64(std::uint64_t seed, std::string_view text, std::uint64_t stream)
    : state_(seed ^ text::fnv1a64(text) ^ (stream * 0x9E3779B97F4A7C15ULL)) {}

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t bernoulli_threshold(double rate) {
  constexpr std::uint64_t kOne = 1ULL << 53;
  if (!(rate > 0.0)) return 0;
  if (rate >= 1.0) return kOne;
  return static_cast<std::uint64_t>(std::floor(rate * static_cast<double>(kOne)));
}

bool SplitMix64::bernoulli(double rate) { return (next() >> 11) < bernoulli_threshold(rate); }

std::uint64_t SplitMix64::below(std::uint64_t bound) { return bound == 0 ? 0 : next() % bound; }

void MockModelConfig::validate() const {
  const auto rate_ok = [](double r) { return r >= 0.0 && r <= 1.0; };
  if (!rate_ok(hallucination_rate) || !rate_ok(per_candidate_rate)) {
    throw Error(ErrorKind::kConfigInvalid, "mock rates must lie in [0, 1]");
  }
  if (loop_ngram_len < 1 || loop_repeats < 2) {
    throw Error(ErrorKind::kConfigInvalid, "mock loops need loop_ngram_len >= 1 and loop_repeats >= 2");
  }
}

namespace {

char32_t rot13(char32_t c) {
  if (c >= U'a' && c <= U'z') return U'a' + (c - U'a' + 13) % 26;
  if (c >= U'A' && c <= U'Z') return U'A' + (c - U'A' + 13) % 26;
  return c;
}

std::vector<std::string> pseudo_tokens(std::string_view source) {
  std::vector<std::string> out;
  for (const auto& tok : scoring::detector_tokens(source)) {
    std::u32string cps = text::decode_utf8(tok);
    for (char32_t& c : cps) c = rot13(c);
    out.emplace_back(text::encode_utf8(std::u32string(cps.rbegin(), cps.rend())));
  }
  return out;
}

std::string join(const std::vector<std::string>& toks, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) out += sep;
    out += toks[i];
  }
  return out;
}

std::string_view separator_for(std::string_view source) {
  return text::contains_space(text::trim(source)) ? " " : "";
}

}  // namespace

std::string pseudo_translate(std::string_view source) {
  return join(pseudo_tokens(source), separator_for(source));
}

std::string make_loop(std::string_view source, const MockModelConfig& cfg, std::uint64_t offset) {
  auto toks = pseudo_tokens(source);
  if (toks.empty()) toks = {"la"};
  std::vector<std::string> loop;
  for (int k = 0; k < cfg.loop_ngram_len; ++k) loop.push_back(toks[(offset + k) % toks.size()]);
  std::vector<std::string> out;
  for (int r = 0; r < cfg.loop_repeats; ++r) out.insert(out.end(), loop.begin(), loop.end());
  return join(out, " ");
}

bool mock_injects(const MockModelConfig& cfg, std::string_view source) {
  return SplitMix64(cfg.seed, source, 0).bernoulli(cfg.hallucination_rate);
}

std::string mock_translate(const MockModelConfig& cfg, std::string_view source) {
  if (mock_injects(cfg, source)) return make_loop(source, cfg);
  return pseudo_translate(source);
}

MockModel::MockModel(MockModelConfig cfg) : cfg_(cfg) { cfg_.validate(); }

std::vector<std::string> MockModel::generate(const clients::GenerationRequest& req) {
  req.sampling.validate();
  if (req.sampling.method == mitigation::SamplingMethod::kBeam && req.sampling.n == 1) {
    return {mock_translate(cfg_, req.source)};
  }
  const std::uint64_t seed = req.seed.value_or(cfg_.seed);
  const auto base = pseudo_tokens(req.source);
  const auto sep = separator_for(req.source);
  std::vector<std::string> out;
  out.reserve(req.sampling.n);
  for (int i = 0; i < req.sampling.n; ++i) {
    SplitMix64 rng(seed, req.source, 1 + static_cast<std::uint64_t>(i));
    if (rng.bernoulli(cfg_.per_candidate_rate)) {
      out.push_back(make_loop(req.source, cfg_, rng.below(std::max<std::size_t>(base.size(), 1))));
      continue;
    }
    auto toks = base;
    if (toks.size() >= 2 && rng.below(2) == 1) {
      const auto j = rng.below(toks.size() - 1);
      std::swap(toks[j], toks[j + 1]);
    }
    std::string cand = join(toks, sep);
    out.push_back(cand.empty() ? "la" : std::move(cand));
  }
  return out;
}

double MockScorer::score(const std::string& source, const std::string& translation,
                         const clients::LanguagePair&) {
  return scoring::oscillatory_flag(source, translation, cfg_).flagged ? kMockLoopScore
                                                                      : kMockCleanScore;
}

bool MockEmbedder::is_looped(std::string_view text) const {
  const auto toks = scoring::detector_tokens(text);
  return scoring::top_ngram(toks, cfg_.n).count >= cfg_.threshold + 1;
}

std::vector<std::vector<double>> MockEmbedder::embed(std::span<const std::string> texts) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    std::vector<double> v(kDim, 0.0);
    v[is_looped(t) ? 1 : 0] = 1.0;
    for (std::size_t k = 2; k < kDim; ++k) {
      const auto r = SplitMix64(seed_, t, k).below(2001);
      v[k] = 0.05 * (static_cast<double>(r) - 1000.0) / 1000.0;
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<int> MockLogProb::symbols(std::string_view target) const {
  std::vector<int> out;
  const auto k = static_cast<std::uint64_t>(table_.alphabet_size());
  for (const auto& tok : scoring::detector_tokens(target)) {
    out.push_back(static_cast<int>(text::fnv1a64(tok) % k));
  }
  return out;
}

double MockLogProb::logprob(const std::string&, const std::string& target,
                            const clients::LanguagePair&) {
  return table_.sequence_logprob(symbols(target));
}

MockBackends make_mock_backends(const MockModelConfig& cfg) {
  MockBackends b;
  b.generator = std::make_shared<MockModel>(cfg);
  b.scorer = std::make_shared<MockScorer>();
  b.embedder = std::make_shared<MockEmbedder>(cfg.seed);
  b.logprob = std::make_shared<MockLogProb>();
  return b;
}

namespace {

template <typename Fn>
void handle_json(const httplib::Request& req, httplib::Response& res, Fn&& fn) {
  try {
    const json body = json::parse(req.body);
    res.set_content(fn(body).dump(), "application/json");
  } catch (const json::exception& e) {
    res.status = 400;
    res.set_content(json{{"error", e.what()}}.dump(), "application/json");
  } catch (const Error& e) {
    res.status = e.kind() == ErrorKind::kInvalidArgument ? 400 : 500;
    res.set_content(json{{"error", e.what()}}.dump(), "application/json");
  }
}

clients::LanguagePair langs_of(const json& j) {
  return {j.at("src_lang").get<std::string>(), j.at("tgt_lang").get<std::string>()};
}

}  // namespace

void mount(httplib::Server& server, const MockBackends& b) {
  if (b.generator) {
    server.Post("/generate", [g = b.generator](const httplib::Request& req, httplib::Response& res) {
      handle_json(req, res, [&](const json& j) {
        return json{{"candidates", g->generate(clients::generation_request_from_json(j))}};
      });
    });
  }
  if (b.scorer) {
    server.Post("/score", [s = b.scorer](const httplib::Request& req, httplib::Response& res) {
      handle_json(req, res, [&](const json& j) {
        return json{{"score", s->score(j.at("source").get<std::string>(),
                                       j.at("translation").get<std::string>(), langs_of(j))}};
      });
    });
  }
  if (b.embedder) {
    server.Post("/embed", [e = b.embedder](const httplib::Request& req, httplib::Response& res) {
      handle_json(req, res, [&](const json& j) {
        const auto texts = j.at("texts").get<std::vector<std::string>>();
        return json{{"vectors", e->embed(texts)}};
      });
    });
  }
  if (b.logprob) {
    server.Post("/logprob", [l = b.logprob](const httplib::Request& req, httplib::Response& res) {
      handle_json(req, res, [&](const json& j) {
        return json{{"logprob", l->logprob(j.at("source").get<std::string>(),
                                           j.at("target").get<std::string>(), langs_of(j))}};
      });
    });
  }
  if (b.langid) {
    server.Post("/langid", [l = b.langid](const httplib::Request& req, httplib::Response& res) {
      handle_json(req, res, [&](const json& j) {
        return json{{"probability", l->probability(j.at("text").get<std::string>(),
                                                   j.at("lang").get<std::string>())}};
      });
    });
  }
}

}  // namespace halo::mock
