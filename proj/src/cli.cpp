#include "halo/cli.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <thread>

#include "halo/analysis.hpp"
#include "halo/cpo_check.hpp"
#include "halo/dataset.hpp"
#include "halo/detection.hpp"
#include "halo/error.hpp"
#include "halo/filters.hpp"
#include "halo/mitigation.hpp"
#include "halo/mock.hpp"
#include "halo/parallel.hpp"

namespace halo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitInternal = 1;

// ---------------------------------------------------------------------------
// Backends

struct Backends {
  std::shared_ptr<clients::Generator> generator;
  std::shared_ptr<clients::Generator> fallback;
  std::shared_ptr<clients::QeScorer> scorer;
  std::shared_ptr<clients::Embedder> embedder;
  std::shared_ptr<clients::LogProbScorer> logprob;
  std::shared_ptr<clients::LanguageIdentifier> langid;
  bool any_mock = false;
};

// Clean single-output system standing in for a second translation model.
mock::MockModelConfig mock_fallback_config(const config::PipelineConfig& cfg) {
  auto m = cfg.mock_model();
  m.seed = cfg.seed ^ 0xFA11BAC4ULL;
  m.hallucination_rate = 0.0;
  m.per_candidate_rate = 0.0;
  return m;
}

// URL-configured services use HTTP; the rest fall back to the in-process
// mocks when clients.use_mocks is set and stay null otherwise.
Backends make_backends(const config::PipelineConfig& cfg) {
  Backends b;
  mock::MockBackends m;
  if (cfg.use_mocks) m = mock::make_mock_backends(cfg.mock_model());
  auto pick = [&](const std::string& url, auto make, auto mock_ptr) {
    using Ptr = decltype(mock_ptr);
    if (!url.empty()) return Ptr(make(cfg.http(url)));
    if (mock_ptr) b.any_mock = true;
    return mock_ptr;
  };
  b.generator = pick(cfg.generator_url, clients::make_http_generator, m.generator);
  b.scorer = pick(cfg.scorer_url, clients::make_http_scorer, m.scorer);
  b.embedder = pick(cfg.embedder_url, clients::make_http_embedder, m.embedder);
  b.logprob = pick(cfg.logprob_url, clients::make_http_logprob, m.logprob);
  std::shared_ptr<clients::Generator> mock_fallback;
  if (cfg.use_mocks) mock_fallback = std::make_shared<mock::MockModel>(mock_fallback_config(cfg));
  b.fallback = pick(cfg.fallback_url, clients::make_http_generator, mock_fallback);
  if (!cfg.langid_url.empty()) b.langid = clients::make_http_langid(cfg.http(cfg.langid_url));
  return b;
}

template <typename T>
T& need(const std::shared_ptr<T>& p, const std::string& key, const std::string& what) {
  if (!p) {
    throw Error(ErrorKind::kConfigInvalid,
                key + ": no " + what + " configured (set the URL or clients.use_mocks)");
  }
  return *p;
}

// In-process backends are CPU-bound, so they get the worker pool; remote
// ones get the in-flight bound.
int concurrency(const config::PipelineConfig& cfg, bool in_process) {
  return in_process ? cfg.workers : cfg.max_in_flight;
}

mitigation::Strategy make_strategy(const config::PipelineConfig& cfg, const Backends& b) {
  if (cfg.preset == config::MitigationPreset::kFallback) {
    return mitigation::FallbackStrategy{&need(b.fallback, "clients.fallback_url", "fallback system"),
                                        cfg.fallback_beam_size};
  }
  mitigation::GenerateSelectStrategy s;
  s.generator = &need(b.generator, "clients.generator_url", "generator");
  s.sampling = cfg.sampling();
  s.selection = cfg.selection();
  if (s.selection.utility == mitigation::Utility::kEmbedCosine) {
    s.embedder = &need(b.embedder, "clients.embedder_url", "embedder");
  } else if (s.selection.utility == mitigation::Utility::kExternalQe) {
    s.scorer = &need(b.scorer, "clients.scorer_url", "QE scorer");
  }
  s.seed = cfg.seed;
  return s;
}

// ---------------------------------------------------------------------------
// Output helpers

void write_text(const fs::path& path, const std::string& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::kIoFailure, path.string());
  f << body;
  if (!f) throw Error(ErrorKind::kIoFailure, path.string());
}

std::string pretty(const json& j) { return j.dump(2) + "\n"; }

struct Manifest {
  std::string command;
  const config::PipelineConfig* cfg = nullptr;
  json inputs = json::array();
  json outputs = json::array();

  void input(const std::string& path) { inputs.push_back(path); }
  void output(DatasetManifest m, const std::string& shown_path) {
    m.path = shown_path;
    outputs.push_back(to_json(m));
  }
  void output_file(const std::string& shown_path, const std::string& kind) {
    outputs.push_back({{"path", shown_path}, {"kind", kind}});
  }
  json to_json_value(const json& report) const {
    return {{"tool_version", std::string(kToolVersion)},
            {"command", command},
            {"config_hash", config::config_hash(*cfg)},
            {"config", config::to_json(*cfg)},
            {"inputs", inputs},
            {"outputs", outputs},
            {"report", report}};
  }
};

fs::path default_manifest(const std::string& output) { return fs::path(output + ".manifest.json"); }

// ---------------------------------------------------------------------------
// Stages

struct StageScope {
  std::string& slot;
  StageScope(std::string& s, const char* name) : slot(s) { slot = name; }
};

std::vector<TranslationRecord> translate_sentences(const std::vector<Sentence>& sentences,
                                                   clients::Generator& gen,
                                                   const config::PipelineConfig& cfg, int workers) {
  return parallel_map_ordered<TranslationRecord>(sentences.size(), workers, [&](std::size_t i) {
    const Sentence& s = sentences[i];
    clients::GenerationRequest req;
    req.source = s.text;
    req.langs = {s.lang.empty() ? cfg.src_lang : s.lang, cfg.tgt_lang};
    req.sampling = mitigation::SamplingConfig::defaults(mitigation::SamplingMethod::kBeam, 1);
    req.seed = cfg.seed;
    auto cands = clients::generate_candidates(gen, req);
    TranslationRecord r;
    r.id = s.id;
    r.source = s.text;
    r.translation = std::move(cands.candidates.front());
    r.src_lang = req.langs.src;
    r.tgt_lang = req.langs.tgt;
    if (r.src_lang == r.tgt_lang) {
      throw Error(ErrorKind::kConfigInvalid, "run.tgt_lang equals the source language of " + s.id);
    }
    return r;
  });
}

bool needs_scoring(const std::vector<TranslationRecord>& records) {
  for (const auto& r : records) {
    if (!r.hs && !detection::scorer_failed(r)) return true;
  }
  return false;
}

struct DetectOutcome {
  std::vector<TranslationRecord> dh;
  detection::DetectionReport report;
};

DetectOutcome detect_records(std::vector<TranslationRecord>& records, const Backends& b,
                             const config::PipelineConfig& cfg) {
  if (needs_scoring(records)) {
    auto& scorer = need(b.scorer, "clients.scorer_url", "QE scorer");
    detection::score_batch(records, scorer, {concurrency(cfg, b.any_mock)});
  }
  detection::DetectionTally tally{detection::Threshold(cfg.threshold)};
  DetectOutcome out;
  for (const auto& r : records) {
    if (tally.add(r)) out.dh.push_back(r);
  }
  out.report = tally.report();
  return out;
}

struct MitigateOutcome {
  std::vector<TranslationRecord> mitigated;
  mitigation::MitigationReport report;
};

MitigateOutcome mitigate_records(const std::vector<TranslationRecord>& dh, const Backends& b,
                                 const config::PipelineConfig& cfg) {
  const detection::Threshold t(cfg.threshold);
  const auto strategy = make_strategy(cfg, b);
  auto& scorer = need(b.scorer, "clients.scorer_url", "QE scorer");
  MitigateOutcome out;
  out.mitigated = mitigation::mitigate_batch(dh, strategy, t, concurrency(cfg, b.any_mock));
  out.report = mitigation::mitigation_rate(dh, out.mitigated, scorer, t, {concurrency(cfg, b.any_mock)});
  out.report.strategy = mitigation::strategy_name(strategy);
  out.report.config = mitigation::strategy_config(strategy);
  return out;
}

json detection_json(const detection::DetectionReport& r, double threshold) {
  json j = r.to_json();
  j["threshold"] = threshold;
  return j;
}

// ---------------------------------------------------------------------------
// Command-line plumbing

struct GlobalFlags {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<int> max_in_flight;
  std::optional<double> threshold;
  bool use_mocks = false;
  std::string report_path;
  std::string manifest_path;
};

config::PipelineConfig resolve_config(const GlobalFlags& g,
                                      const std::vector<std::pair<std::string, std::string>>& extra) {
  config::PipelineConfig cfg;
  config::apply_environment(cfg);
  if (!g.config_path.empty()) config::load_file(cfg, g.config_path);
  for (const auto& s : g.sets) config::apply_override(cfg, s);
  for (const auto& [k, v] : extra) config::set_value(cfg, k, v);
  if (g.seed) cfg.seed = *g.seed;
  if (g.workers) cfg.workers = *g.workers;
  if (g.max_in_flight) cfg.max_in_flight = *g.max_in_flight;
  if (g.threshold) cfg.threshold = *g.threshold;
  if (g.use_mocks) cfg.use_mocks = true;
  cfg.validate();
  return cfg;
}

void emit_report(const json& report, const GlobalFlags& g, std::ostream& out) {
  if (g.report_path.empty()) {
    out << pretty(report);
  } else {
    write_text(g.report_path, pretty(report));
  }
}

void emit_manifest(const Manifest& m, const json& report, const GlobalFlags& g, const fs::path& fallback) {
  const fs::path path = g.manifest_path.empty() ? fallback : fs::path(g.manifest_path);
  if (!path.empty()) write_text(path, pretty(m.to_json_value(report)));
}

std::pair<std::string, std::string> split_labelled(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == s.size()) {
    throw Error(ErrorKind::kConfigInvalid, "expected LABEL=PATH, got \"" + s + "\"");
  }
  return {s.substr(0, eq), s.substr(eq + 1)};
}

std::string sanitize_label(std::string s) {
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Synthetic corpus and simulation

std::vector<Sentence> synthetic_corpus(std::uint64_t seed, std::size_t n, const std::string& lang) {
  static constexpr const char* kOnsets = "bdfgklmnprstvz";
  static constexpr const char* kVowels = "aeiou";
  constexpr std::uint64_t kSyllables = 14 * 5;
  constexpr std::uint64_t kVocabulary = kSyllables * kSyllables;
  auto word = [&](std::uint64_t w) {
    std::string s;
    for (std::uint64_t syl : {w % kSyllables, w / kSyllables}) {
      s += kOnsets[syl / 5];
      s += kVowels[syl % 5];
    }
    return s;
  };
  std::vector<Sentence> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    mock::SplitMix64 rng(seed, "synthetic-corpus", i);
    const std::size_t len = 8 + rng.below(13);
    std::vector<std::uint64_t> picked;
    while (picked.size() < len) {
      const std::uint64_t w = rng.below(kVocabulary);
      if (std::find(picked.begin(), picked.end(), w) == picked.end()) picked.push_back(w);
    }
    std::string text;
    for (std::size_t k = 0; k < picked.size(); ++k) {
      if (k) text += ' ';
      text += word(picked[k]);
    }
    char id[32];
    std::snprintf(id, sizeof id, "sim-%06zu", i + 1);
    out.push_back({id, std::move(text), lang});
  }
  return out;
}

json simulate(const config::PipelineConfig& cfg_in, const SimulationOptions& opts) {
  config::PipelineConfig cfg = cfg_in;
  cfg.use_mocks = true;
  cfg.validate();
  const mock::MockModelConfig model_cfg = cfg.mock_model();

  // Either the mock objects themselves, or HTTP clients talking to them.
  Backends b;
  mock::MockBackends m = mock::make_mock_backends(model_cfg);
  auto fallback = std::make_shared<mock::MockModel>(mock_fallback_config(cfg));
  std::unique_ptr<httplib::Server> server;
  std::thread server_thread;
  if (opts.over_http) {
    server = std::make_unique<httplib::Server>();
    mock::mount(*server, m);
    const int port = server->bind_to_any_port("127.0.0.1");
    if (port <= 0) throw Error(ErrorKind::kBackendUnreachable, "could not bind a loopback port");
    server_thread = std::thread([&] { server->listen_after_bind(); });
    const std::string url = "http://127.0.0.1:" + std::to_string(port);
    b.generator = clients::make_http_generator(cfg.http(url));
    b.scorer = clients::make_http_scorer(cfg.http(url));
    b.embedder = clients::make_http_embedder(cfg.http(url));
    b.logprob = clients::make_http_logprob(cfg.http(url));
    b.any_mock = false;
  } else {
    b.generator = m.generator;
    b.scorer = m.scorer;
    b.embedder = m.embedder;
    b.logprob = m.logprob;
    b.any_mock = true;
  }
  b.fallback = fallback;
  struct ServerStop {
    httplib::Server* s;
    std::thread& t;
    ~ServerStop() {
      if (s) s->stop();
      if (t.joinable()) t.join();
    }
  } stop{server.get(), server_thread};

  const fs::path dir = opts.out_dir;
  fs::create_directories(dir);
  Manifest manifest{"simulate", &cfg};

  const auto sentences = synthetic_corpus(cfg.seed, opts.n, cfg.src_lang);
  manifest.output(write_dataset(sentences, dir / "sentences.jsonl"), "sentences.jsonl");

  auto records = translate_sentences(sentences, *b.generator, cfg, concurrency(cfg, b.any_mock));
  const auto det = detect_records(records, b, cfg);
  manifest.output(write_dataset(records, dir / "translations.jsonl"), "translations.jsonl");
  manifest.output(write_dataset(det.dh, dir / "dh.jsonl"), "dh.jsonl");

  // Detector verdict against the injection ground truth.
  const detection::Threshold t(cfg.threshold);
  std::size_t injected = 0, agree = 0;
  for (const auto& r : records) {
    const bool inj = mock::mock_injects(model_cfg, r.source);
    injected += inj;
    agree += (inj == detection::is_hallucination(r, t));
  }

  json mitigation_json = nullptr;
  json prefs_json = nullptr;
  if (!det.dh.empty()) {
    auto mit = mitigate_records(det.dh, b, cfg);
    manifest.output(write_dataset(mit.mitigated, dir / "mitigated.jsonl"), "mitigated.jsonl");
    const auto prefs = mitigation::build_preference_set(det.dh, mit.mitigated, t);
    manifest.output(write_dataset(prefs.triplets, dir / "prefs.jsonl"), "prefs.jsonl");
    std::size_t violations = 0;
    for (const auto& p : prefs.triplets) {
      if (!(p.phi_preferred < cfg.threshold && cfg.threshold <= p.phi_dispreferred)) ++violations;
    }
    mitigation_json = mit.report.to_json();
    prefs_json = {{"triplets", prefs.triplets.size()},
                  {"dropped", prefs.dropped},
                  {"invariant_violations", violations}};
  } else {
    manifest.output(write_dataset(std::vector<TranslationRecord>{}, dir / "mitigated.jsonl"),
                    "mitigated.jsonl");
    manifest.output(write_dataset(std::vector<PreferenceTriplet>{}, dir / "prefs.jsonl"), "prefs.jsonl");
  }

  json report = {
      {"sentences", sentences.size()},
      {"seed", cfg.seed},
      {"injection_rate", cfg.mock_rate},
      {"injected", injected},
      {"detection", detection_json(det.report, cfg.threshold)},
      {"label_agreement", sentences.empty() ? 0.0 : static_cast<double>(agree) / sentences.size()},
      {"mitigation", mitigation_json},
      {"preferences", prefs_json},
  };
  write_text(dir / "report.json", pretty(report));
  manifest.output_file("report.json", "report");
  write_text(dir / "manifest.json", pretty(manifest.to_json_value(report)));
  return report;
}

// ---------------------------------------------------------------------------
// Entry point

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Translation hallucination detection, mitigation and preference-data toolkit", "halo"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(kToolVersion));

  GlobalFlags g;
  app.add_option("-c,--config", g.config_path, "INI configuration file");
  app.add_option("--set", g.sets, "Override a key: section.key=value (repeatable)");
  app.add_option("--seed", g.seed, "Seed for every seeded component");
  app.add_option("--workers", g.workers, "Worker threads");
  app.add_option("--max-in-flight", g.max_in_flight, "Concurrent backend requests");
  app.add_option("--threshold", g.threshold, "Hallucination threshold T");
  app.add_flag("--use-mocks", g.use_mocks, "Use in-process mock backends for unset URLs");
  app.add_option("--report", g.report_path, "Write the JSON report here instead of stdout");
  app.add_option("--manifest", g.manifest_path, "Manifest path (default: <output>.manifest.json)");
  app.add_flag_callback(
      "--list-keys",
      [&out] {
        for (const auto& k : config::config_keys()) out << k.key << "  " << k.description << "\n";
        throw CLI::Success();
      },
      "List configuration keys and exit");

  std::vector<std::pair<std::string, std::string>> extra;
  std::string input, output, scored_output, dh_path, mitigated_path, lang, out_dir, csv_dir;
  std::vector<std::string> dh_sets, corpora;
  std::size_t sim_n = 10000;
  std::optional<double> sim_rate;
  bool over_http = false;
  int draws = 10000;

  auto* filter = app.add_subcommand("filter", "Clean a monolingual sentence corpus");
  filter->add_option("-i,--input", input, "Sentence JSONL")->required();
  filter->add_option("-o,--output", output, "Kept sentences JSONL")->required();
  filter->add_option("--lang", lang, "Expected language (filters.expected_lang)");

  auto* translate = app.add_subcommand("translate", "Translate sentences with the generator");
  translate->add_option("-i,--input", input, "Sentence JSONL")->required();
  translate->add_option("-o,--output", output, "Translation JSONL")->required();

  auto* detect = app.add_subcommand("detect", "Score translations and build the hallucination set");
  detect->add_option("-i,--input", input, "Translation JSONL")->required();
  detect->add_option("-o,--output", output, "Hallucination set JSONL")->required();
  detect->add_option("--scored-output", scored_output, "Also write every scored record here");

  auto* mitigate = app.add_subcommand("mitigate", "Produce alternative translations for a hallucination set");
  mitigate->add_option("-i,--input", input, "Hallucination set JSONL")->required();
  mitigate->add_option("-o,--output", output, "Mitigated translation JSONL")->required();

  auto* build_prefs = app.add_subcommand("build-prefs", "Pair mitigated and hallucinated translations");
  build_prefs->add_option("--dh", dh_path, "Hallucination set JSONL")->required();
  build_prefs->add_option("--mitigated", mitigated_path, "Scored mitigated JSONL")->required();
  build_prefs->add_option("-o,--output", output, "Preference triplet JSONL")->required();

  auto* analyze = app.add_subcommand("analyze", "Diagnostics over hallucination sets");
  analyze->add_option("--dh", dh_sets, "LABEL=PATH of a hallucination set (repeatable)")->required();
  analyze->add_option("--corpus", corpora, "LABEL=PATH of the full scored corpus (repeatable)");
  analyze->add_option("--csv-dir", csv_dir, "Write histogram and overlap CSV files here");

  auto* cpo_check = app.add_subcommand("cpo-check", "Verify the CPO loss and gradient kernels");
  cpo_check->add_option("--draws", draws, "Random draws for identity checks")->check(CLI::PositiveNumber);

  auto* cpo_loss = app.add_subcommand("cpo-loss", "Per-triplet CPO losses from backend log-probs");
  cpo_loss->add_option("-i,--input", input, "Preference triplet JSONL")->required();
  cpo_loss->add_option("-o,--output", output, "Loss JSONL")->required();

  auto* sim = app.add_subcommand("simulate", "Closed-loop run against the mock backends");
  sim->add_option("--n", sim_n, "Synthetic sentences")->check(CLI::NonNegativeNumber);
  sim->add_option("--rate", sim_rate, "Loop injection rate (mock.rate)");
  sim->add_option("--out-dir", out_dir, "Output directory")->required();
  sim->add_flag("--over-http", over_http, "Serve the mocks on a loopback port and use HTTP clients");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    // CLI11 writes --help and --version through the streams given to exit().
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  std::string stage = "config";
  try {
    if (!lang.empty()) extra.emplace_back("filters.expected_lang", lang);
    if (sim_rate) extra.emplace_back("mock.rate", std::to_string(*sim_rate));
    const config::PipelineConfig cfg = resolve_config(g, extra);
    Manifest manifest{app.get_subcommands().front()->get_name(), &cfg};

    if (*filter) {
      StageScope s(stage, "filter");
      const Backends b = make_backends(cfg);
      filters::FilterPipeline pipeline(cfg.filter_options(), b.langid);
      DatasetReader<Sentence> reader(input);
      DatasetWriter<Sentence> writer(output);
      std::size_t total = 0;
      while (auto rec = reader.next()) {
        ++total;
        if (pipeline.process(*rec)) writer.write(*rec);
      }
      manifest.input(input);
      manifest.output(writer.finish(), output);
      json stages = json::array();
      for (const auto& r : pipeline.reports()) stages.push_back(r.to_json());
      json report = {{"input", total}, {"kept", count_records(output)}, {"stages", stages}};
      emit_manifest(manifest, report, g, default_manifest(output));
      emit_report(report, g, out);
      return kExitOk;
    }

    if (*translate) {
      StageScope s(stage, "translate");
      const Backends b = make_backends(cfg);
      auto& gen = need(b.generator, "clients.generator_url", "generator");
      const auto sentences = read_dataset<Sentence>(input);
      const auto records = translate_sentences(sentences, gen, cfg, concurrency(cfg, b.any_mock));
      manifest.input(input);
      manifest.output(write_dataset(records, output), output);
      json report = {{"translated", records.size()}, {"src_lang", cfg.src_lang}, {"tgt_lang", cfg.tgt_lang}};
      emit_manifest(manifest, report, g, default_manifest(output));
      emit_report(report, g, out);
      return kExitOk;
    }

    if (*detect) {
      StageScope s(stage, "detect");
      const Backends b = make_backends(cfg);
      auto records = read_dataset<TranslationRecord>(input);
      const auto det = detect_records(records, b, cfg);
      manifest.input(input);
      if (!scored_output.empty()) manifest.output(write_dataset(records, scored_output), scored_output);
      manifest.output(write_dataset(det.dh, output), output);
      const json report = detection_json(det.report, cfg.threshold);
      emit_manifest(manifest, report, g, default_manifest(output));
      emit_report(report, g, out);
      return kExitOk;
    }

    if (*mitigate) {
      StageScope s(stage, "mitigate");
      const Backends b = make_backends(cfg);
      const auto dh = read_dataset<TranslationRecord>(input);
      auto res = mitigate_records(dh, b, cfg);
      manifest.input(input);
      manifest.output(write_dataset(res.mitigated, output), output);
      const json report = res.report.to_json();
      emit_manifest(manifest, report, g, default_manifest(output));
      emit_report(report, g, out);
      return kExitOk;
    }

    if (*build_prefs) {
      StageScope s(stage, "build-prefs");
      const auto dh = read_dataset<TranslationRecord>(dh_path);
      const auto mitigated = read_dataset<TranslationRecord>(mitigated_path);
      const auto prefs = mitigation::build_preference_set(dh, mitigated, detection::Threshold(cfg.threshold));
      manifest.input(dh_path);
      manifest.input(mitigated_path);
      manifest.output(write_dataset(prefs.triplets, output), output);
      const json report = {{"triplets", prefs.triplets.size()}, {"dropped", prefs.dropped}};
      emit_manifest(manifest, report, g, default_manifest(output));
      emit_report(report, g, out);
      return kExitOk;
    }

    if (*analyze) {
      StageScope s(stage, "analyze");
      std::map<std::string, std::vector<TranslationRecord>> sets, full;
      for (const auto& spec : dh_sets) {
        const auto [label, path] = split_labelled(spec);
        sets[label] = read_dataset<TranslationRecord>(path);
        manifest.input(path);
      }
      for (const auto& spec : corpora) {
        const auto [label, path] = split_labelled(spec);
        if (!sets.count(label)) throw Error(ErrorKind::kConfigInvalid, "--corpus " + label + " has no --dh set");
        full[label] = read_dataset<TranslationRecord>(path);
        manifest.input(path);
      }
      analysis::DiagnosticsConfig dc;
      dc.detector = cfg.detector();
      dc.bin_width = cfg.bin_width;
      dc.zoom_lo = cfg.zoom_lo;
      const auto rep = analysis::corpus_diagnostics(sets, full, dc);
      if (!csv_dir.empty()) {
        const fs::path dir(csv_dir);
        std::string overlap = "pair";
        for (const auto& p : rep.pairs) overlap += "," + p;
        overlap += "\n";
        for (std::size_t i = 0; i < rep.pairs.size(); ++i) {
          overlap += rep.pairs[i];
          for (auto v : rep.overlap[i]) overlap += "," + std::to_string(v);
          overlap += "\n";
        }
        write_text(dir / "overlap.csv", overlap);
        manifest.output_file((dir / "overlap.csv").string(), "csv");
        for (const auto& [pair, d] : rep.per_pair) {
          const std::string stem = sanitize_label(pair);
          write_text(dir / (stem + "_hs_full.csv"), d.hs_full.to_csv());
          write_text(dir / (stem + "_hs_zoom.csv"), d.hs_zoom.to_csv());
          manifest.output_file((dir / (stem + "_hs_full.csv")).string(), "csv");
          manifest.output_file((dir / (stem + "_hs_zoom.csv")).string(), "csv");
        }
      }
      const json report = rep.to_json();
      const fs::path fallback =
          !g.report_path.empty() ? default_manifest(g.report_path)
                                 : (!csv_dir.empty() ? fs::path(csv_dir) / "manifest.json" : fs::path());
      emit_manifest(manifest, report, g, fallback);
      emit_report(report, g, out);
      return kExitOk;
    }

    if (*cpo_check) {
      StageScope s(stage, "cpo-check");
      cpo::CheckOptions co;
      co.seed = cfg.seed;
      co.draws = draws;
      co.fd_step = cfg.fd_step;
      co.grad_tolerance = cfg.grad_tolerance;
      co.beta = cfg.beta;
      const auto rows = cpo::run_check_battery(co);
      const bool ok = cpo::all_passed(rows);
      const json report = {{"passed", ok}, {"checks", cpo::to_json(rows)}};
      out << cpo::format_table(rows);
      if (!g.report_path.empty()) write_text(g.report_path, pretty(report));
      emit_manifest(manifest, report, g,
                    g.report_path.empty() ? fs::path() : default_manifest(g.report_path));
      if (!ok) {
        err << "halo: cpo-check: verification failed\n";
        return kExitVerification;
      }
      return kExitOk;
    }

    if (*cpo_loss) {
      StageScope s(stage, "cpo-loss");
      const Backends b = make_backends(cfg);
      auto& lp = need(b.logprob, "clients.logprob_url", "log-prob scorer");
      const auto triplets = read_dataset<PreferenceTriplet>(input);
      struct Row {
        json line;
        double full = 0, pref = 0, nll = 0;
      };
      const auto rows = parallel_map_ordered<Row>(
          triplets.size(), concurrency(cfg, b.any_mock), [&](std::size_t i) {
            const auto& p = triplets[i];
            const clients::LanguagePair langs{p.src_lang, p.tgt_lang};
            cpo::LossInputs in;
            in.logp_preferred = clients::sequence_logprob(lp, p.source, p.preferred, langs);
            in.logp_dispreferred = clients::sequence_logprob(lp, p.source, p.dispreferred, langs);
            const std::vector<double> raw{p.phi_preferred, p.phi_dispreferred};
            const auto phi = cpo::normalize_phi(raw, {0.0, kMaxHallucinationScore});
            in.phi_preferred = phi[0];
            in.phi_dispreferred = phi[1];
            in.beta = cfg.beta;
            Row r;
            r.full = cpo::cpo_total_loss(in, cpo::LossMode::kFull);
            r.pref = cpo::cpo_total_loss(in, cpo::LossMode::kPrefOnly);
            r.nll = cpo::cpo_total_loss(in, cpo::LossMode::kNllOnly);
            r.line = {{"id", p.id},
                      {"logp_preferred", in.logp_preferred},
                      {"logp_dispreferred", in.logp_dispreferred},
                      {"phi_preferred", in.phi_preferred},
                      {"phi_dispreferred", in.phi_dispreferred},
                      {"beta", in.beta},
                      {"loss", cpo::cpo_total_loss(in, cfg.loss_mode)},
                      {"loss_full", r.full},
                      {"loss_pref", r.pref},
                      {"loss_nll", r.nll}};
            return r;
          });
      std::string body;
      double sf = 0, sp = 0, sn = 0;
      for (const auto& r : rows) {
        body += r.line.dump() + "\n";
        sf += r.full;
        sp += r.pref;
        sn += r.nll;
      }
      write_text(output, body);
      manifest.input(input);
      manifest.output_file(output, "losses");
      const double n = rows.empty() ? 1.0 : static_cast<double>(rows.size());
      const json report = {{"triplets", rows.size()},
                           {"loss_mode", std::string(cpo::to_string(cfg.loss_mode))},
                           {"mean_loss_full", sf / n},
                           {"mean_loss_pref", sp / n},
                           {"mean_loss_nll", sn / n}};
      emit_manifest(manifest, report, g, default_manifest(output));
      emit_report(report, g, out);
      return kExitOk;
    }

    if (*sim) {
      StageScope s(stage, "simulate");
      const json report = simulate(cfg, {sim_n, out_dir, over_http});
      emit_report(report, g, out);
      return kExitOk;
    }
    return kExitConfig;
  } catch (const Error& e) {
    err << "halo: " << stage << ": " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "halo: " << stage << ": internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace halo::cli
