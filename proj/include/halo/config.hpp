#pragma once

// Pipeline configuration: a sectioned key=value (INI) file, command-line
// overrides and HALO_* environment variables, resolved into one validated
// PipelineConfig.
//
// Precedence, lowest first: built-in defaults, environment variables (client
// URLs and timeout only), config file, --set overrides. Every key is listed in
// config_keys(); unknown sections or keys are rejected.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "halo/cpo.hpp"
#include "halo/filters.hpp"
#include "halo/mitigation.hpp"
#include "halo/mock.hpp"
#include "halo/sampling.hpp"

namespace halo::config {

enum class MitigationPreset { kPaperBest, kFallback, kCustom };

std::string_view to_string(MitigationPreset p);
MitigationPreset parse_preset(std::string_view name);

struct PipelineConfig {
  // [detection]
  double threshold = detection::kDefaultThreshold;
  int ngram_n = 4;
  int ngram_threshold = 2;

  // [mitigation]
  MitigationPreset preset = MitigationPreset::kPaperBest;
  mitigation::SamplingMethod sampling_method = mitigation::SamplingMethod::kEpsilon;
  int n = 40;
  double temperature = 1.0;
  std::optional<double> top_p;
  std::optional<double> epsilon;
  std::optional<int> beam_size;
  mitigation::Selector selector = mitigation::Selector::kRerank;
  mitigation::Utility utility = mitigation::Utility::kEmbedCosine;
  int fallback_beam_size = 40;

  // [cpo]
  double beta = cpo::kDefaultBeta;
  cpo::LossMode loss_mode = cpo::LossMode::kFull;
  double fd_step = 1e-5;
  double grad_tolerance = 1e-4;

  // [filters]
  bool heuristic = true;
  bool length = true;
  bool dedup = true;
  bool langid = true;
  int min_words = 5;
  int max_words = 100;
  std::string expected_lang = "en";
  double lid_threshold = 0.5;
  bool lid_fallback = true;

  // [clients]
  std::string generator_url;
  std::string scorer_url;
  std::string embedder_url;
  std::string logprob_url;
  std::string langid_url;
  std::string fallback_url;
  int timeout_ms = 30000;
  int retries = 2;
  std::string bearer_token_env;  // name of the variable holding the token
  bool use_mocks = false;

  // [mock]
  double mock_rate = 0.05;
  double mock_per_candidate_rate = 0.1;
  int mock_loop_ngram_len = 4;
  int mock_loop_repeats = 6;

  // [run]
  std::uint64_t seed = 0;
  int workers = 1;
  int max_in_flight = 4;
  std::string src_lang = "en";
  std::string tgt_lang = "de";

  // [analysis]
  double bin_width = 0.01;
  double zoom_lo = 0.5;

  // Effective candidate-generation settings (preset defaults plus overrides).
  mitigation::SamplingConfig sampling() const;
  mitigation::SelectionConfig selection() const;
  scoring::NgramDetectorConfig detector() const;
  filters::PipelineOptions filter_options() const;
  mock::MockModelConfig mock_model() const;
  clients::HttpOptions http(const std::string& url) const;

  // Throws ConfigInvalid naming the offending key.
  void validate() const;
};

struct KeyInfo {
  std::string key;  // "section.name"
  std::string description;
};

// Every accepted key in canonical order.
const std::vector<KeyInfo>& config_keys();

// Assigns one key from its textual value. Throws ConfigInvalid for unknown
// keys or unparseable values. Setting mitigation.preset resets the sampling
// and selection keys to that preset.
void set_value(PipelineConfig& cfg, const std::string& key, const std::string& value);
std::string get_value(const PipelineConfig& cfg, const std::string& key);

// Applies HALO_GENERATOR_URL, HALO_SCORER_URL, HALO_EMBEDDER_URL,
// HALO_LOGPROB_URL, HALO_LID_URL, HALO_FALLBACK_URL and HALO_TIMEOUT_MS.
void apply_environment(PipelineConfig& cfg);

// Reads an INI file on top of `cfg`. Throws ConfigInvalid(path, reason).
void load_file(PipelineConfig& cfg, const std::filesystem::path& path);

// "section.key=value" override.
void apply_override(PipelineConfig& cfg, const std::string& assignment);

// One "section.key = value" line per key, in canonical order.
std::string canonical_dump(const PipelineConfig& cfg);
nlohmann::json to_json(const PipelineConfig& cfg);

// 16 hex digits of FNV-1a over canonical_dump.
std::string config_hash(const PipelineConfig& cfg);

}  // namespace halo::config
