#include "halo/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>

#include "halo/error.hpp"
#include "halo/text.hpp"

namespace halo::config {

namespace {

[[noreturn]] void invalid(const std::string& where, const std::string& why) {
  throw Error(ErrorKind::kConfigInvalid, where + ": " + why);
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& key, const std::string& s) {
  const std::string t(text::trim(s));
  double v = 0.0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(v)) {
    invalid(key, "expected a finite number, got \"" + s + "\"");
  }
  return v;
}

long long parse_int(const std::string& key, const std::string& s) {
  const std::string t(text::trim(s));
  long long v = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    invalid(key, "expected an integer, got \"" + s + "\"");
  }
  return v;
}

std::uint64_t parse_uint(const std::string& key, const std::string& s) {
  const std::string t(text::trim(s));
  std::uint64_t v = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    invalid(key, "expected an unsigned integer, got \"" + s + "\"");
  }
  return v;
}

int parse_int32(const std::string& key, const std::string& s) {
  const long long v = parse_int(key, s);
  if (v < INT32_MIN || v > INT32_MAX) invalid(key, "integer out of range");
  return static_cast<int>(v);
}

bool parse_bool(const std::string& key, const std::string& s) {
  const std::string t(text::trim(s));
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  invalid(key, "expected true or false, got \"" + s + "\"");
}

bool is_default_token(const std::string& s) {
  const auto t = text::trim(s);
  return t.empty() || t == "default";
}

template <typename F>
auto wrap_parse(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfigInvalid) throw;
    invalid(key, e.what());
  }
}

struct Field {
  KeyInfo info;
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
  bool selection_key = false;  // setting it leaves the paper-best preset
};

void apply_preset(PipelineConfig& c, MitigationPreset p) {
  c.preset = p;
  if (p == MitigationPreset::kCustom) return;
  const auto s = mitigation::paper_best_sampling();
  const auto sel = mitigation::paper_best_selection();
  c.sampling_method = s.method;
  c.n = s.n;
  c.temperature = s.temperature;
  c.top_p.reset();
  c.epsilon.reset();
  c.beam_size.reset();
  c.selector = sel.selector;
  c.utility = sel.utility;
}

template <typename T>
std::string opt_to_string(const std::optional<T>& v) {
  if (!v) return "default";
  if constexpr (std::is_same_v<T, double>) {
    return format_double(*v);
  } else {
    return std::to_string(*v);
  }
}

const std::vector<Field>& fields() {
  using C = PipelineConfig;
  using S = const std::string&;
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    auto dbl = [&f](std::string key, std::string desc, double C::*m) {
      f.push_back({{key, std::move(desc)},
                   [key, m](C& c, S v) { c.*m = parse_double(key, v); },
                   [m](const C& c) { return format_double(c.*m); }});
    };
    auto integer = [&f](std::string key, std::string desc, int C::*m) {
      f.push_back({{key, std::move(desc)},
                   [key, m](C& c, S v) { c.*m = parse_int32(key, v); },
                   [m](const C& c) { return std::to_string(c.*m); }});
    };
    auto boolean = [&f](std::string key, std::string desc, bool C::*m) {
      f.push_back({{key, std::move(desc)},
                   [key, m](C& c, S v) { c.*m = parse_bool(key, v); },
                   [m](const C& c) { return std::string(c.*m ? "true" : "false"); }});
    };
    auto str = [&f](std::string key, std::string desc, std::string C::*m) {
      f.push_back({{key, std::move(desc)},
                   [m](C& c, S v) { c.*m = std::string(text::trim(v)); },
                   [m](const C& c) { return c.*m; }});
    };

    dbl("detection.threshold", "hallucination threshold T in (0, 0.8)", &C::threshold);
    integer("detection.ngram_n", "oscillation detector n-gram length", &C::ngram_n);
    integer("detection.ngram_threshold", "oscillation detector count margin", &C::ngram_threshold);

    f.push_back({{"mitigation.preset", "paper-best | fallback | custom"},
                 [](C& c, S v) {
                   apply_preset(c, wrap_parse("mitigation.preset",
                                              [&] { return parse_preset(text::trim(v)); }));
                 },
                 [](const C& c) { return std::string(to_string(c.preset)); }});
    f.push_back({{"mitigation.sampling", "beam | temperature | nucleus | epsilon | mc_beam"},
                 [](C& c, S v) {
                   c.sampling_method = wrap_parse("mitigation.sampling", [&] {
                     return mitigation::parse_sampling_method(text::trim(v));
                   });
                 },
                 [](const C& c) { return std::string(mitigation::to_string(c.sampling_method)); },
                 true});
    f.push_back({{"mitigation.n", "candidates per source"},
                 [](C& c, S v) { c.n = parse_int32("mitigation.n", v); },
                 [](const C& c) { return std::to_string(c.n); }, true});
    f.push_back({{"mitigation.temperature", "sampling temperature"},
                 [](C& c, S v) { c.temperature = parse_double("mitigation.temperature", v); },
                 [](const C& c) { return format_double(c.temperature); }, true});
    f.push_back({{"mitigation.top_p", "nucleus mass, or default"},
                 [](C& c, S v) {
                   if (is_default_token(v)) c.top_p.reset();
                   else c.top_p = parse_double("mitigation.top_p", v);
                 },
                 [](const C& c) { return opt_to_string(c.top_p); }, true});
    f.push_back({{"mitigation.epsilon", "epsilon-sampling cutoff, or default"},
                 [](C& c, S v) {
                   if (is_default_token(v)) c.epsilon.reset();
                   else c.epsilon = parse_double("mitigation.epsilon", v);
                 },
                 [](const C& c) { return opt_to_string(c.epsilon); }, true});
    f.push_back({{"mitigation.beam_size", "beam width for beam and mc_beam, or default"},
                 [](C& c, S v) {
                   if (is_default_token(v)) c.beam_size.reset();
                   else c.beam_size = parse_int32("mitigation.beam_size", v);
                 },
                 [](const C& c) { return opt_to_string(c.beam_size); }, true});
    f.push_back({{"mitigation.selector", "mbr | rerank"},
                 [](C& c, S v) {
                   c.selector = wrap_parse("mitigation.selector",
                                           [&] { return mitigation::parse_selector(text::trim(v)); });
                 },
                 [](const C& c) { return std::string(mitigation::to_string(c.selector)); }, true});
    f.push_back({{"mitigation.utility", "chrf | embed_cosine | external_qe"},
                 [](C& c, S v) {
                   c.utility = wrap_parse("mitigation.utility",
                                          [&] { return mitigation::parse_utility(text::trim(v)); });
                 },
                 [](const C& c) { return std::string(mitigation::to_string(c.utility)); }, true});
    integer("mitigation.fallback_beam_size", "beam width of the fallback system", &C::fallback_beam_size);

    dbl("cpo.beta", "preference temperature beta", &C::beta);
    f.push_back({{"cpo.loss_mode", "full | pref_only | nll_only"},
                 [](C& c, S v) {
                   c.loss_mode = wrap_parse("cpo.loss_mode", [&] { return cpo::parse_loss_mode(text::trim(v)); });
                 },
                 [](const C& c) { return std::string(cpo::to_string(c.loss_mode)); }});
    dbl("cpo.fd_step", "finite-difference step h", &C::fd_step);
    dbl("cpo.grad_tolerance", "maximum accepted relative gradient error", &C::grad_tolerance);

    boolean("filters.heuristic", "run the heuristic stage", &C::heuristic);
    boolean("filters.length", "run the length stage", &C::length);
    boolean("filters.dedup", "run the deduplication stage", &C::dedup);
    boolean("filters.langid", "run the language-ID stage", &C::langid);
    integer("filters.min_words", "minimum whitespace words (inclusive)", &C::min_words);
    integer("filters.max_words", "maximum whitespace words (inclusive)", &C::max_words);
    str("filters.expected_lang", "language kept by the language-ID stage", &C::expected_lang);
    dbl("filters.lid_threshold", "minimum language probability", &C::lid_threshold);
    boolean("filters.lid_fallback", "use the builtin identifier when no LID service is set",
            &C::lid_fallback);

    str("clients.generator_url", "translation generator base URL", &C::generator_url);
    str("clients.scorer_url", "QE scorer base URL", &C::scorer_url);
    str("clients.embedder_url", "sentence embedder base URL", &C::embedder_url);
    str("clients.logprob_url", "sequence log-prob scorer base URL", &C::logprob_url);
    str("clients.langid_url", "language identifier base URL", &C::langid_url);
    str("clients.fallback_url", "fallback translation system base URL", &C::fallback_url);
    integer("clients.timeout_ms", "per-request timeout", &C::timeout_ms);
    integer("clients.retries", "extra attempts after a transient failure", &C::retries);
    str("clients.bearer_token_env", "environment variable holding a bearer token", &C::bearer_token_env);
    boolean("clients.use_mocks", "use in-process mock backends for unset URLs", &C::use_mocks);

    dbl("mock.rate", "single-output loop injection rate", &C::mock_rate);
    dbl("mock.per_candidate_rate", "loop rate per sampled candidate", &C::mock_per_candidate_rate);
    integer("mock.loop_ngram_len", "tokens per injected loop", &C::mock_loop_ngram_len);
    integer("mock.loop_repeats", "copies of the injected loop", &C::mock_loop_repeats);

    f.push_back({{"run.seed", "seed for every seeded component"},
                 [](C& c, S v) { c.seed = parse_uint("run.seed", v); },
                 [](const C& c) { return std::to_string(c.seed); }});
    integer("run.workers", "worker threads for local computation", &C::workers);
    integer("run.max_in_flight", "concurrent backend requests", &C::max_in_flight);
    str("run.src_lang", "source language code", &C::src_lang);
    str("run.tgt_lang", "target language code", &C::tgt_lang);

    dbl("analysis.bin_width", "HS histogram bin width", &C::bin_width);
    dbl("analysis.zoom_lo", "lower edge of the zoomed HS histogram", &C::zoom_lo);
    return f;
  }();
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.info.key == key) return f;
  }
  invalid(key, "unknown key");
}

}  // namespace

std::string_view to_string(MitigationPreset p) {
  switch (p) {
    case MitigationPreset::kPaperBest: return "paper-best";
    case MitigationPreset::kFallback: return "fallback";
    case MitigationPreset::kCustom: return "custom";
  }
  return "custom";
}

MitigationPreset parse_preset(std::string_view name) {
  if (name == "paper-best") return MitigationPreset::kPaperBest;
  if (name == "fallback") return MitigationPreset::kFallback;
  if (name == "custom") return MitigationPreset::kCustom;
  throw Error(ErrorKind::kConfigInvalid, "unknown preset \"" + std::string(name) + "\"");
}

mitigation::SamplingConfig PipelineConfig::sampling() const {
  auto s = mitigation::SamplingConfig::defaults(sampling_method, n);
  s.temperature = temperature;
  if (top_p) s.top_p = top_p;
  if (epsilon) s.epsilon = epsilon;
  if (beam_size) s.beam_size = beam_size;
  return s;
}

mitigation::SelectionConfig PipelineConfig::selection() const { return {selector, utility}; }

scoring::NgramDetectorConfig PipelineConfig::detector() const { return {ngram_n, ngram_threshold}; }

filters::PipelineOptions PipelineConfig::filter_options() const {
  filters::PipelineOptions o;
  o.heuristic = heuristic;
  o.length = length;
  o.dedup = dedup;
  o.langid = langid;
  o.min_words = min_words;
  o.max_words = max_words;
  o.expected_lang = expected_lang;
  o.lid_threshold = lid_threshold;
  o.lid_fallback = lid_fallback;
  return o;
}

mock::MockModelConfig PipelineConfig::mock_model() const {
  mock::MockModelConfig m;
  m.seed = seed;
  m.hallucination_rate = mock_rate;
  m.per_candidate_rate = mock_per_candidate_rate;
  m.loop_ngram_len = mock_loop_ngram_len;
  m.loop_repeats = mock_loop_repeats;
  return m;
}

clients::HttpOptions PipelineConfig::http(const std::string& url) const {
  clients::HttpOptions o;
  o.base_url = url;
  o.timeout_ms = timeout_ms;
  o.retries = retries;
  if (!bearer_token_env.empty()) {
    if (const char* tok = std::getenv(bearer_token_env.c_str())) o.bearer_token = tok;
  }
  return o;
}

void PipelineConfig::validate() const {
  auto check = [](bool ok, const char* key, const std::string& why) {
    if (!ok) invalid(key, why);
  };
  check(threshold > 0.0 && threshold < kMaxHallucinationScore, "detection.threshold",
        "must lie in (0, 0.8)");
  check(ngram_n >= 1, "detection.ngram_n", "must be >= 1");
  check(ngram_threshold >= 1, "detection.ngram_threshold", "must be >= 1");
  wrap_parse("mitigation", [&] {
    sampling().validate();
    selection().validate();
    return 0;
  });
  check(fallback_beam_size >= 1, "mitigation.fallback_beam_size", "must be >= 1");
  check(beta > 0.0, "cpo.beta", "must be > 0");
  check(fd_step >= 1e-7 && fd_step <= 1e-3, "cpo.fd_step", "must lie in [1e-7, 1e-3]");
  check(grad_tolerance > 0.0, "cpo.grad_tolerance", "must be > 0");
  check(min_words >= 0 && max_words > min_words, "filters.min_words",
        "need 0 <= min_words < max_words");
  check(lid_threshold >= 0.0 && lid_threshold <= 1.0, "filters.lid_threshold", "must lie in [0, 1]");
  check(!expected_lang.empty(), "filters.expected_lang", "must not be empty");
  check(timeout_ms > 0, "clients.timeout_ms", "must be > 0");
  check(retries >= 0, "clients.retries", "must be >= 0");
  wrap_parse("mock", [&] {
    mock_model().validate();
    return 0;
  });
  check(workers >= 1, "run.workers", "must be >= 1");
  check(max_in_flight >= 1, "run.max_in_flight", "must be >= 1");
  check(!src_lang.empty() && !tgt_lang.empty(), "run.src_lang", "language codes must not be empty");
  check(src_lang != tgt_lang, "run.tgt_lang", "must differ from run.src_lang");
  check(bin_width > 0.0 && bin_width <= kMaxHallucinationScore, "analysis.bin_width",
        "must lie in (0, 0.8]");
  check(zoom_lo >= 0.0 && zoom_lo < kMaxHallucinationScore, "analysis.zoom_lo", "must lie in [0, 0.8)");
}

const std::vector<KeyInfo>& config_keys() {
  static const std::vector<KeyInfo> keys = [] {
    std::vector<KeyInfo> k;
    for (const auto& f : fields()) k.push_back(f.info);
    return k;
  }();
  return keys;
}

void set_value(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  const Field& f = field(key);
  const std::string before = f.get(cfg);
  f.set(cfg, value);
  // Restating a preset value keeps the preset, so a dumped config reloads unchanged.
  if (f.selection_key && cfg.preset == MitigationPreset::kPaperBest && f.get(cfg) != before) {
    cfg.preset = MitigationPreset::kCustom;
  }
}

std::string get_value(const PipelineConfig& cfg, const std::string& key) { return field(key).get(cfg); }

void apply_environment(PipelineConfig& cfg) {
  const std::pair<const char*, const char*> vars[] = {
      {"HALO_GENERATOR_URL", "clients.generator_url"}, {"HALO_SCORER_URL", "clients.scorer_url"},
      {"HALO_EMBEDDER_URL", "clients.embedder_url"},   {"HALO_LOGPROB_URL", "clients.logprob_url"},
      {"HALO_LID_URL", "clients.langid_url"},          {"HALO_FALLBACK_URL", "clients.fallback_url"},
      {"HALO_TIMEOUT_MS", "clients.timeout_ms"},
  };
  for (const auto& [var, key] : vars) {
    const char* v = std::getenv(var);
    if (v == nullptr || *v == '\0') continue;
    try {
      set_value(cfg, key, v);
    } catch (const Error& e) {
      invalid(var, e.what());
    }
  }
}

void load_file(PipelineConfig& cfg, const std::filesystem::path& path) {
  namespace pt = boost::property_tree;
  if (!std::filesystem::exists(path)) invalid(path.string(), "file not found");
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    invalid(path.string(), "line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) invalid(path.string(), "key \"" + section + "\" outside a section");
    for (const auto& [key, node] : body) {
      const std::string full = section + "." + key;
      try {
        set_value(cfg, full, node.get_value<std::string>());
      } catch (const Error& e) {
        invalid(path.string(), e.what());
      }
    }
  }
}

void apply_override(PipelineConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) invalid(assignment, "expected section.key=value");
  set_value(cfg, std::string(text::trim(assignment.substr(0, eq))), assignment.substr(eq + 1));
}

std::string canonical_dump(const PipelineConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += f.info.key + " = " + f.get(cfg) + "\n";
  return out;
}

nlohmann::json to_json(const PipelineConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& f : fields()) {
    const auto dot = f.info.key.find('.');
    j[f.info.key.substr(0, dot)][f.info.key.substr(dot + 1)] = f.get(cfg);
  }
  return j;
}

std::string config_hash(const PipelineConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(text::fnv1a64(canonical_dump(cfg))));
  return buf;
}

}  // namespace halo::config
