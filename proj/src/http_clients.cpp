#include <chrono>
#include <thread>

#include "halo/clients.hpp"
#include "halo/error.hpp"
#include "httplib.h"

namespace halo::clients {

using nlohmann::json;

namespace {

struct ParsedUrl {
  std::string scheme_host_port;
  std::string prefix;
};

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (url.empty() || scheme_end == std::string::npos) {
    throw Error(ErrorKind::kConfigInvalid, "backend URL must look like http://host:port, got \"" + url + "\"");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl p;
  p.scheme_host_port = url.substr(0, path_start);
  if (path_start != std::string::npos) {
    p.prefix = url.substr(path_start);
    while (!p.prefix.empty() && p.prefix.back() == '/') p.prefix.pop_back();
  }
  return p;
}

// JSON-over-HTTP POST with a bounded retry budget. Connection failures,
// timeouts and 5xx answers are retried; 4xx answers fail immediately.
class JsonEndpoint {
 public:
  explicit JsonEndpoint(const HttpOptions& opts) : opts_(opts), url_(parse_url(opts.base_url)) {
    if (opts.timeout_ms <= 0) throw Error(ErrorKind::kConfigInvalid, "timeout_ms must be > 0");
    if (opts.retries < 0) throw Error(ErrorKind::kConfigInvalid, "retries must be >= 0");
  }

  json post(const std::string& path, const json& body) const {
    // httplib clients are not thread-safe; build one per call.
    httplib::Client cli(url_.scheme_host_port);
    const auto sec = opts_.timeout_ms / 1000;
    const auto usec = (opts_.timeout_ms % 1000) * 1000;
    cli.set_connection_timeout(sec, usec);
    cli.set_read_timeout(sec, usec);
    cli.set_write_timeout(sec, usec);
    if (!opts_.bearer_token.empty()) cli.set_bearer_token_auth(opts_.bearer_token);

    const std::string target = url_.prefix + path;
    const std::string payload = body.dump();
    ErrorKind last_kind = ErrorKind::kBackendUnreachable;
    std::string last_msg;
    for (int attempt = 0; attempt <= opts_.retries; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(50 * attempt));
      auto res = cli.Post(target, payload, "application/json");
      if (!res) {
        const auto err = res.error();
        last_kind = (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout)
                        ? ErrorKind::kTimeoutExceeded
                        : ErrorKind::kBackendUnreachable;
        last_msg = url_.scheme_host_port + target + ": " + httplib::to_string(err);
        continue;
      }
      if (res->status >= 500) {
        last_kind = ErrorKind::kBackendError;
        last_msg = "status " + std::to_string(res->status) + ": " + res->body;
        continue;
      }
      if (res->status != 200) {
        throw Error(ErrorKind::kBackendError, "status " + std::to_string(res->status) + ": " + res->body);
      }
      try {
        return json::parse(res->body);
      } catch (const json::parse_error& e) {
        throw Error(ErrorKind::kBackendError, std::string("malformed response body: ") + e.what());
      }
    }
    throw Error(last_kind, last_msg);
  }

 private:
  HttpOptions opts_;
  ParsedUrl url_;
};

template <typename T>
T field(const json& j, const char* name) {
  try {
    return j.at(name).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kBackendError, std::string("response field \"") + name + "\": " + e.what());
  }
}

class HttpGenerator final : public Generator {
 public:
  explicit HttpGenerator(const HttpOptions& o) : ep_(o) {}
  std::vector<std::string> generate(const GenerationRequest& req) override {
    return field<std::vector<std::string>>(ep_.post("/generate", generation_request_to_json(req)),
                                           "candidates");
  }

 private:
  JsonEndpoint ep_;
};

class HttpScorer final : public QeScorer {
 public:
  explicit HttpScorer(const HttpOptions& o) : ep_(o) {}
  double score(const std::string& source, const std::string& translation,
               const LanguagePair& langs) override {
    const json body{{"source", source},
                    {"translation", translation},
                    {"src_lang", langs.src},
                    {"tgt_lang", langs.tgt}};
    return field<double>(ep_.post("/score", body), "score");
  }

 private:
  JsonEndpoint ep_;
};

class HttpEmbedder final : public Embedder {
 public:
  explicit HttpEmbedder(const HttpOptions& o) : ep_(o) {}
  std::vector<std::vector<double>> embed(std::span<const std::string> texts) override {
    const json body{{"texts", std::vector<std::string>(texts.begin(), texts.end())}};
    return field<std::vector<std::vector<double>>>(ep_.post("/embed", body), "vectors");
  }

 private:
  JsonEndpoint ep_;
};

class HttpLogProb final : public LogProbScorer {
 public:
  explicit HttpLogProb(const HttpOptions& o) : ep_(o) {}
  double logprob(const std::string& source, const std::string& target,
                 const LanguagePair& langs) override {
    const json body{{"source", source}, {"target", target}, {"src_lang", langs.src}, {"tgt_lang", langs.tgt}};
    return field<double>(ep_.post("/logprob", body), "logprob");
  }

 private:
  JsonEndpoint ep_;
};

class HttpLangId final : public LanguageIdentifier {
 public:
  explicit HttpLangId(const HttpOptions& o) : ep_(o), url_(o.base_url) {}
  double probability(const std::string& text, const std::string& lang) override {
    return field<double>(ep_.post("/langid", json{{"text", text}, {"lang", lang}}), "probability");
  }
  std::string name() const override { return "http:" + url_; }

 private:
  JsonEndpoint ep_;
  std::string url_;
};

}  // namespace

std::unique_ptr<Generator> make_http_generator(const HttpOptions& o) {
  return std::make_unique<HttpGenerator>(o);
}
std::unique_ptr<QeScorer> make_http_scorer(const HttpOptions& o) {
  return std::make_unique<HttpScorer>(o);
}
std::unique_ptr<Embedder> make_http_embedder(const HttpOptions& o) {
  return std::make_unique<HttpEmbedder>(o);
}
std::unique_ptr<LogProbScorer> make_http_logprob(const HttpOptions& o) {
  return std::make_unique<HttpLogProb>(o);
}
std::unique_ptr<LanguageIdentifier> make_http_langid(const HttpOptions& o) {
  return std::make_unique<HttpLangId>(o);
}

}  // namespace halo::clients
